#include "mixflow/coupled.hpp"

#include "mixflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mixflow {

std::string to_string(TransportScheme scheme) {
    return scheme == TransportScheme::Conservative ? "conservative" : "semi_lagrangian";
}

CoupledProblem::CoupledProblem(StructuredGrid grid, MixtureModel model, double s_ref, double truncation_k)
    : parabolic(std::move(grid), std::move(model), s_ref, truncation_k) {
    sync_options();
}

void CoupledProblem::sync_options() {
    parabolic.newton.tolerance = options.newton_tol;
    parabolic.newton.max_iters = options.max_iters;
    parabolic.newton.exec = options.exec;
}

// ---------------------------------------------------------------------------

namespace {

ScalarField pressure_field(const ScalarField& w, const MixtureModel& model) {
    ScalarField p(w.grid());
    for (std::size_t c = 0; c < w.size(); ++c) p[c] = model.pressure.value(w[c]);
    return p;
}

SpeciesField reconstruct(const ScalarField& w, const SpeciesField& u) {
    SpeciesField rho(u.grid(), u.n_species());
    for (std::size_t c = 0; c < u.num_cells(); ++c)
        for (std::size_t s = 0; s < u.n_species(); ++s) rho.at(c, s) = w[c] * u.at(c, s);
    return rho;
}

double max_abs_difference(const SpeciesField& a, const SpeciesField& b) {
    double m = 0.0;
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t k = 0; k < av.size(); ++k) m = std::max(m, std::abs(av[k] - bv[k]));
    return m;
}

}  // namespace

MixtureState init_decomposition(const SpeciesField& rho0, const CoupledProblem& problem,
                                double vacuum_threshold) {
    const MixtureModel& model = problem.model();
    if (rho0.n_species() != model.n_species())
        throw ConfigError("initial data has the wrong number of species");
    const std::size_t n = rho0.num_cells();
    MixtureState st;
    st.t = 0.0;
    st.rho = rho0;
    st.w = ScalarField(rho0.grid());
    st.u = SpeciesField(rho0.grid(), rho0.n_species());
    for (std::size_t c = 0; c < n; ++c) {
        const auto r = rho0.cell(c);
        double total = 0.0;
        for (std::size_t s = 0; s < r.size(); ++s) {
            if (!(r[s] >= 0.0)) {
                std::ostringstream os;
                os << "negative initial density in cell " << c << " (species " << s + 1 << ": " << r[s] << ")";
                throw ConfigError(os.str());
            }
            total += r[s];
        }
        if (!(total >= vacuum_threshold) || total == 0.0) {
            std::ostringstream os;
            os << "vacuum in initial data at cell " << c << " (sum of densities " << total
               << " below " << vacuum_threshold << ")";
            throw ConfigError(os.str());
        }
        const double w = model.extension.value(r);
        st.w[c] = w;
        for (std::size_t s = 0; s < r.size(); ++s) st.u.at(c, s) = r[s] / w;
    }
    st.p = pressure_field(st.w, model);
    std::tie(st.velocity, st.div_velocity) = velocity_from_w(st.w, problem.parabolic);
    return st;
}

// ---------------------------------------------------------------------------

namespace {

struct TransportOutcome {
    FractionState fractions;
    int substeps = 0;
};

TransportOutcome transport(const MixtureState& state, const ParabolicState& next_w,
                           const ParabolicStepReport& rep, double dt, const CoupledProblem& problem,
                           const ReactionField* reaction) {
    const StepOptions& opt = problem.options;
    TransportOptions topt;
    topt.trace.n_sub = opt.n_sub;
    topt.trace.rk_order = opt.rk_order;
    topt.exec = opt.exec;
    topt.inflow = &problem.inflow;
    FractionState fs{state.t, state.u, opt.constraint};
    TransportOutcome out;
    if (opt.transport == TransportScheme::Conservative) {
        ConservativeInput in;
        in.w_old = &state.w;
        in.w_new = &next_w.w;
        in.flux = &rep.flux;
        in.source = reaction ? &rep.source : nullptr;
        ConservativeReport cr;
        out.fractions = conservative_transport_step(fs, in, dt, problem.model(), reaction, topt, &cr);
        out.substeps = cr.substeps;
    } else {
        const VelocitySampler sampler =
            VelocitySampler::snapshots(state.velocity, next_w.velocity, state.t, state.t + dt);
        if (reaction) {
            const WHistory wh{&state.w, &next_w.w, state.t, state.t + dt};
            out.fractions = transport_with_reaction(fs, sampler, wh, dt, problem.model(), *reaction, topt);
        } else {
            out.fractions = semi_lagrangian_step(fs, sampler, dt, problem.model(), topt);
        }
    }
    return out;
}

MixtureState assemble(const ParabolicState& ps, SpeciesField u, const MixtureModel& model) {
    MixtureState st;
    st.t = ps.t;
    st.w = ps.w;
    st.rho = reconstruct(ps.w, u);
    st.u = std::move(u);
    st.p = pressure_field(ps.w, model);
    st.velocity = ps.velocity;
    st.div_velocity = ps.div_velocity;
    return st;
}

}  // namespace

MixtureState step_decomposed(const MixtureState& state, double dt, const CoupledProblem& problem,
                             StepInfo* info) {
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    const KirchhoffMap& km = problem.parabolic.kirchhoff;
    ParabolicState ps;
    ps.t = state.t;
    ps.w = state.w;
    ps.u_k = ScalarField(state.w.grid());
    for (std::size_t c = 0; c < state.w.size(); ++c) ps.u_k[c] = km.transform(state.w[c]);
    ps.velocity = state.velocity;
    ps.div_velocity = state.div_velocity;

    StepInfo local;
    if (!problem.reaction) {
        ParabolicStepReport rep;
        const ParabolicState next = step_implicit(ps, dt, problem.parabolic, &rep);
        TransportOutcome tr = transport(state, next, rep, dt, problem, nullptr);
        local.newton_iterations = rep.newton_iterations;
        local.picard_iterations = 0;
        local.transport_substeps = tr.substeps;
        if (info) *info = local;
        return assemble(next, std::move(tr.fractions.u), problem.model());
    }

    // Picard iteration on the frozen fractions entering the w-source.
    const ReactionField& reaction = *problem.reaction;
    const double tol = problem.options.picard_tol;
    ParabolicProblem pp = problem.parabolic;
    SpeciesField u_bar = state.u;
    SpeciesField u_prev;
    double change = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= problem.options.max_picard; ++k) {
        pp.source = [&reaction, &u_bar](std::size_t c, double w) { return reaction.f(w, u_bar.cell(c)); };
        ParabolicStepReport rep;
        const ParabolicState next = step_implicit(ps, dt, pp, &rep);
        TransportOutcome tr = transport(state, next, rep, dt, problem, &reaction);
        local.newton_iterations += rep.newton_iterations;
        local.picard_iterations = k;
        local.transport_substeps = std::max(local.transport_substeps, tr.substeps);

        const SpeciesField& u_k = tr.fractions.u;
        double source_change = 0.0;
        for (std::size_t c = 0; c < u_k.num_cells(); ++c)
            source_change = std::max(source_change, std::abs(reaction.f(next.w[c], u_k.cell(c)) - rep.source[c]));
        if (k >= 2) change = max_abs_difference(u_k, u_prev);
        if (source_change <= tol || change <= tol) {
            if (info) *info = local;
            return assemble(next, std::move(tr.fractions.u), problem.model());
        }
        u_prev = u_k;
        u_bar = u_k;
    }
    std::ostringstream os;
    os << "reaction fixed-point iteration did not converge in " << problem.options.max_picard
       << " iterations (last change " << change << ")";
    throw SolverError(os.str(), change);
}

// ---------------------------------------------------------------------------
// Explicit reference solver

namespace {

constexpr double kDirectSafety = 0.45;

struct DirectFaces {
    std::vector<double> vx, vy;  // face velocities
};

// Face velocities of the cross-diffusion system computed from rho only.
DirectFaces direct_velocity(const SpeciesField& rho, const CoupledProblem& problem, std::vector<double>& w) {
    const StructuredGrid& g = rho.grid();
    const MixtureModel& model = problem.model();
    const std::size_t n = g.num_cells();
    w.resize(n);
    std::vector<double> p(n);
    for (std::size_t c = 0; c < n; ++c) {
        w[c] = model.extension.value(rho.cell(c));
        p[c] = model.pressure.value(w[c]);
    }
    const SideValues& pb = problem.parabolic.boundary_pressure;
    const SideValues wb = problem.parabolic.boundary_w();
    const auto& grav = problem.parabolic.gravity;
    const std::size_t nx = g.nx();
    const std::size_t ny = g.ny();
    DirectFaces f;
    f.vx.assign(g.num_x_faces(), 0.0);
    f.vy.assign(g.num_y_faces(), 0.0);
    auto velocity = [&](double wf, double grad, int axis) {
        double v = -model.kappa(wf) * grad;
        if (grav) v += model.kappa(wf) * grav->fraction_sum * wf * grav->g[axis];
        return v;
    };
    const double hx = g.spacing[0];
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 1; i < nx; ++i) {
            const std::size_t l = g.index(i - 1, j), r = g.index(i, j);
            f.vx[g.x_face(i, j)] = velocity(0.5 * (w[l] + w[r]), (p[r] - p[l]) / hx, 0);
        }
        if (g.side(Side::XLo) == BoundaryKind::DirichletPressure)
            f.vx[g.x_face(0, j)] = velocity(wb[0], (p[g.index(0, j)] - pb[0]) / (0.5 * hx), 0);
        if (g.side(Side::XHi) == BoundaryKind::DirichletPressure)
            f.vx[g.x_face(nx, j)] = velocity(wb[1], (pb[1] - p[g.index(nx - 1, j)]) / (0.5 * hx), 0);
    }
    if (g.dim == 2) {
        const double hy = g.spacing[1];
        for (std::size_t i = 0; i < nx; ++i) {
            for (std::size_t j = 1; j < ny; ++j) {
                const std::size_t b = g.index(i, j - 1), t = g.index(i, j);
                f.vy[g.y_face(i, j)] = velocity(0.5 * (w[b] + w[t]), (p[t] - p[b]) / hy, 1);
            }
            if (g.side(Side::YLo) == BoundaryKind::DirichletPressure)
                f.vy[g.y_face(i, 0)] = velocity(wb[2], (p[g.index(i, 0)] - pb[2]) / (0.5 * hy), 1);
            if (g.side(Side::YHi) == BoundaryKind::DirichletPressure)
                f.vy[g.y_face(i, ny)] = velocity(wb[3], (pb[3] - p[g.index(i, ny - 1)]) / (0.5 * hy), 1);
        }
    }
    return f;
}

double stable_dt(const SpeciesField& rho, const CoupledProblem& problem, const DirectFaces& f,
                 const std::vector<double>& w) {
    const StructuredGrid& g = rho.grid();
    const MixtureModel& model = problem.model();
    double amax = 0.0;
    for (double wc : w) amax = std::max(amax, model.kappa(wc) * wc * model.pressure.derivative(wc));
    double inv_h2 = 1.0 / (g.spacing[0] * g.spacing[0]);
    if (g.dim == 2) inv_h2 += 1.0 / (g.spacing[1] * g.spacing[1]);
    double dt = amax > 0.0 ? kDirectSafety / (amax * inv_h2) : std::numeric_limits<double>::infinity();
    // Upwind positivity: total outflow rate per cell below 1 / dt.
    const std::size_t nx = g.nx();
    double rate = 0.0;
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        const std::size_t i = c % nx, j = c / nx;
        double out = std::max(f.vx[g.x_face(i + 1, j)], 0.0) / g.spacing[0] +
                     std::max(-f.vx[g.x_face(i, j)], 0.0) / g.spacing[0];
        if (g.dim == 2)
            out += std::max(f.vy[g.y_face(i, j + 1)], 0.0) / g.spacing[1] +
                   std::max(-f.vy[g.y_face(i, j)], 0.0) / g.spacing[1];
        rate = std::max(rate, out);
    }
    if (rate > 0.0) dt = std::min(dt, 0.9 / rate);
    return dt;
}

}  // namespace

double direct_stable_dt(const SpeciesField& rho, const CoupledProblem& problem) {
    std::vector<double> w;
    const DirectFaces f = direct_velocity(rho, problem, w);
    return stable_dt(rho, problem, f, w);
}

SpeciesField step_direct(const SpeciesField& rho, double dt, const CoupledProblem& problem) {
    const StructuredGrid& g = rho.grid();
    const std::size_t n = g.num_cells();
    const std::size_t ns = rho.n_species();
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t s = 0; s < ns; ++s) {
            if (!(rho.at(c, s) >= 0.0)) throw DomainError("reference solver needs nonnegative densities");
        }
    }
    std::vector<double> w;
    const DirectFaces f = direct_velocity(rho, problem, w);
    const double limit = stable_dt(rho, problem, f, w);
    if (dt > limit * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "explicit reference step dt = " << dt << " exceeds the stability limit " << limit;
        throw DomainError(os.str());
    }
    const SideValues wb = problem.parabolic.boundary_w();
    const InflowData& inflow = problem.inflow;
    auto boundary_rho = [&](Side side, std::size_t c, std::size_t s) {
        if (inflow.has(side)) return wb[static_cast<int>(side)] * inflow.at(side)[s];
        return rho.at(c, s);
    };
    const std::size_t nx = g.nx();
    const std::size_t ny = g.ny();
    const double hx = g.spacing[0];
    const double hy = g.spacing[1];
    SpeciesField out(g, ns);
    for_each_index(problem.options.exec, n, [&](std::size_t c) {
        const std::size_t i = c % nx, j = c / nx;
        const double vl = f.vx[g.x_face(i, j)];
        const double vr = f.vx[g.x_face(i + 1, j)];
        double vb = 0.0, vt = 0.0;
        if (g.dim == 2) {
            vb = f.vy[g.y_face(i, j)];
            vt = f.vy[g.y_face(i, j + 1)];
        }
        for (std::size_t s = 0; s < ns; ++s) {
            const double rc = rho.at(c, s);
            const double rl = vl >= 0.0 ? (i > 0 ? rho.at(c - 1, s) : boundary_rho(Side::XLo, c, s)) : rc;
            const double rr = vr >= 0.0 ? rc : (i + 1 < nx ? rho.at(c + 1, s) : boundary_rho(Side::XHi, c, s));
            double div = (vr * rr - vl * rl) / hx;
            if (g.dim == 2) {
                const double rb = vb >= 0.0 ? (j > 0 ? rho.at(c - nx, s) : boundary_rho(Side::YLo, c, s)) : rc;
                const double rt = vt >= 0.0 ? rc : (j + 1 < ny ? rho.at(c + nx, s) : boundary_rho(Side::YHi, c, s));
                div += (vt * rt - vb * rb) / hy;
            }
            out.at(c, s) = rc - dt * div;
        }
    });
    return out;
}

SpeciesField advance_direct(const SpeciesField& rho, double duration, const CoupledProblem& problem) {
    SpeciesField cur = rho;
    double remaining = duration;
    while (remaining > 1e-14 * std::max(1.0, duration)) {
        const double limit = direct_stable_dt(cur, problem);
        // Equal pieces of the remaining interval, each within the limit.
        const double pieces = std::ceil(remaining / limit);
        const double dt = pieces <= 1.0 ? remaining : remaining / pieces;
        cur = step_direct(cur, dt, problem);
        remaining -= dt;
    }
    return cur;
}

// ---------------------------------------------------------------------------
// Diagnostics

double total_free_energy(const SpeciesField& rho, const MixtureModel& model, Exec exec) {
    const std::size_t n = rho.num_cells();
    const double s = deterministic_sum(exec, n, [&](std::size_t c) { return free_energy_density(model, rho.cell(c)); });
    return s * rho.grid().cell_volume();
}

double dissipation_rate(const ScalarField& w, const CoupledProblem& problem) {
    const StructuredGrid& g = w.grid();
    const MixtureModel& model = problem.model();
    const ScalarField p = pressure_field(w, model);
    const SideValues& pb = problem.parabolic.boundary_pressure;
    const FaceVectorField grad = face_gradient(p, g.has_dirichlet() ? &pb : nullptr);
    const SideValues wb = problem.parabolic.boundary_w();
    const std::size_t nx = g.nx();
    const std::size_t ny = g.ny();
    const Exec exec = problem.options.exec;
    const double vol = g.cell_volume();
    const double sx = deterministic_sum(exec, g.num_x_faces(), [&](std::size_t f) {
        const std::size_t i = f % (nx + 1), j = f / (nx + 1);
        double wf;
        if (i == 0) wf = wb[0];
        else if (i == nx) wf = wb[1];
        else wf = 0.5 * (w[g.index(i - 1, j)] + w[g.index(i, j)]);
        return grad.x[f] == 0.0 ? 0.0 : model.kappa(wf) * grad.x[f] * grad.x[f];
    });
    double sy = 0.0;
    if (g.dim == 2) {
        sy = deterministic_sum(exec, g.num_y_faces(), [&](std::size_t f) {
            const std::size_t i = f % nx, j = f / nx;
            double wf;
            if (j == 0) wf = wb[2];
            else if (j == ny) wf = wb[3];
            else wf = 0.5 * (w[g.index(i, j - 1)] + w[g.index(i, j)]);
            return grad.y[f] == 0.0 ? 0.0 : model.kappa(wf) * grad.y[f] * grad.y[f];
        });
    }
    return (sx + sy) * vol;
}

StepRecord measure(const MixtureState& state, const CoupledProblem& problem) {
    const MixtureModel& model = problem.model();
    const Exec exec = problem.options.exec;
    StepRecord r;
    r.t = state.t;
    const std::size_t n = state.rho.num_cells();
    const std::size_t ns = state.rho.n_species();
    r.masses.resize(ns);
    for (std::size_t s = 0; s < ns; ++s)
        r.masses[s] = deterministic_sum(exec, n, [&](std::size_t c) { return state.rho.at(c, s); }) *
                      state.rho.grid().cell_volume();
    r.free_energy = total_free_energy(state.rho, model, exec);
    r.dissipation = dissipation_rate(state.w, problem);
    r.min_w = state.w.min();
    r.max_w = state.w.max();
    r.constraint_defect = constraint_defect(model, state.u, exec);
    return r;
}

// ---------------------------------------------------------------------------
// Driver

Simulation::Simulation(CoupledProblem problem, MixtureState initial, TimeControl time)
    : problem_(std::move(problem)), state_(std::move(initial)), time_(time) {
    if (!(time_.dt > 0.0)) throw ConfigError("time step dt must be positive");
    if (time_.T < 0.0) throw ConfigError("final time T must be nonnegative");
    if (time_.dt_min <= 0.0) time_.dt_min = time_.dt / 1024.0;
    if (time_.dt_min > time_.dt) throw ConfigError("dt_min must not exceed dt");
    problem_.sync_options();
    dt_ = time_.dt;
}

void Simulation::advance_to(double t_end, const StepCallback& on_step) {
    if (t_end < state_.t - 1e-12 * std::max(1.0, std::abs(t_end)))
        throw DomainError("cannot advance backwards in time");
    const double eps = 1e-12 * std::max(1.0, std::abs(t_end));
    while (t_end - state_.t > eps) {
        const double remaining = t_end - state_.t;
        double h = dt_;
        bool last = false;
        if (remaining <= dt_ * (1.0 + 1e-10)) {
            last = true;
            if (std::abs(remaining - dt_) > 1e-10 * dt_) h = remaining;
        }
        StepInfo info;
        MixtureState next;
        try {
            next = step_decomposed(state_, h, problem_, &info);
        } catch (const SolverError& e) {
            if (dt_ * 0.5 < time_.dt_min) {
                std::ostringstream os;
                os << "step " << step_ + 1 << " at t = " << state_.t << ": " << e.what()
                   << " (dt reduced to the minimum " << dt_ << ")";
                throw SolverError(os.str(), e.residual());
            }
            dt_ *= 0.5;
            successes_ = 0;
            continue;
        }
        if (last) next.t = t_end;
        ++step_;
        StepRecord rec = measure(next, problem_);
        rec.step = step_;
        rec.dt = h;
        rec.newton_iterations = info.newton_iterations;
        rec.picard_iterations = info.picard_iterations;
        state_ = std::move(next);
        if (on_step) on_step(state_, rec);
        log_.append(std::move(rec));
        if (dt_ < time_.dt && ++successes_ >= time_.restore_after) {
            dt_ = time_.dt;
            successes_ = 0;
        }
    }
}

}  // namespace mixflow
