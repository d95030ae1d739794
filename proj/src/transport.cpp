#include "mixflow/transport.hpp"

#include "mixflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mixflow {

std::string to_string(ConstraintMode mode) {
    switch (mode) {
    case ConstraintMode::ExactLinear: return "exact_linear";
    case ConstraintMode::Renormalize: return "renormalize";
    case ConstraintMode::Off: return "off";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Velocity sampling

namespace {

// Index of the lower bracket and weight of the upper one for positions
// measured in units of the bracket spacing, clamped to [0, count - 1].
void bracket(double s, std::size_t count, std::size_t& lo, double& t) {
    if (count < 2) {
        lo = 0;
        t = 0.0;
        return;
    }
    s = std::clamp(s, 0.0, static_cast<double>(count - 1));
    std::size_t k = static_cast<std::size_t>(std::floor(s));
    if (k >= count - 1) k = count - 2;
    lo = k;
    t = s - static_cast<double>(k);
}

}  // namespace

Point sample_face_velocity(const FaceVectorField& v, const Point& x) {
    const StructuredGrid& g = v.grid;
    const std::size_t nx = g.nx();
    const std::size_t ny = g.ny();
    Point out{0.0, 0.0};
    // x-component: faces at origin + i h along x, cell-center rows along y.
    {
        std::size_t i, j;
        double ti, tj;
        bracket((x[0] - g.origin[0]) / g.spacing[0], nx + 1, i, ti);
        if (g.dim == 2) {
            bracket((x[1] - g.origin[1]) / g.spacing[1] - 0.5, ny, j, tj);
            const double a = (1.0 - ti) * v.x[g.x_face(i, j)] + ti * v.x[g.x_face(i + 1, j)];
            const double b = (1.0 - ti) * v.x[g.x_face(i, j + 1)] + ti * v.x[g.x_face(i + 1, j + 1)];
            out[0] = (1.0 - tj) * a + tj * b;
        } else {
            out[0] = (1.0 - ti) * v.x[i] + ti * v.x[i + 1];
        }
    }
    if (g.dim == 2) {
        std::size_t i, j;
        double ti, tj;
        bracket((x[1] - g.origin[1]) / g.spacing[1], ny + 1, j, tj);
        bracket((x[0] - g.origin[0]) / g.spacing[0] - 0.5, nx, i, ti);
        const double a = (1.0 - tj) * v.y[g.y_face(i, j)] + tj * v.y[g.y_face(i, j + 1)];
        const double b = (1.0 - tj) * v.y[g.y_face(i + 1, j)] + tj * v.y[g.y_face(i + 1, j + 1)];
        out[1] = (1.0 - ti) * a + ti * b;
    }
    return out;
}

VelocitySampler VelocitySampler::snapshots(FaceVectorField v0, FaceVectorField v1, double t0, double t1) {
    if (!(v0.grid == v1.grid)) throw DomainError("velocity snapshots live on different grids");
    VelocitySampler s;
    s.grid_ = v0.grid;
    s.t0_ = t0;
    s.t1_ = t1;
    s.v0_ = std::move(v0);
    s.v1_ = std::move(v1);
    return s;
}

VelocitySampler VelocitySampler::analytic(const StructuredGrid& grid, Analytic field, double t0, double t1) {
    VelocitySampler s;
    s.grid_ = grid;
    s.t0_ = t0;
    s.t1_ = t1;
    s.analytic_ = std::move(field);
    return s;
}

Point VelocitySampler::operator()(const Point& x, double t) const {
    if (analytic_) return analytic_(x, t);
    const Point a = sample_face_velocity(v0_, x);
    const Point b = sample_face_velocity(v1_, x);
    const double span = t1_ - t0_;
    const double theta = span > 0.0 ? std::clamp((t - t0_) / span, 0.0, 1.0) : 1.0;
    return {(1.0 - theta) * a[0] + theta * b[0], (1.0 - theta) * a[1] + theta * b[1]};
}

// ---------------------------------------------------------------------------
// Characteristics

namespace {

Point axpy(const Point& x, double a, const Point& v) { return {x[0] + a * v[0], x[1] + a * v[1]}; }

// First Dirichlet side crossed on the segment from `from` (inside) to `to`.
// Returns the crossing fraction in [0, 1] or a negative value when none.
double dirichlet_crossing(const StructuredGrid& g, const Point& from, const Point& to, Side& side) {
    double best = -1.0;
    for (int a = 0; a < g.dim; ++a) {
        const double lo = g.origin[a];
        const double hi = g.origin[a] + g.length[a];
        const double d = to[a] - from[a];
        if (to[a] < lo && g.boundary[2 * a] == BoundaryKind::DirichletPressure && d != 0.0) {
            const double th = std::clamp((lo - from[a]) / d, 0.0, 1.0);
            if (best < 0.0 || th < best) {
                best = th;
                side = static_cast<Side>(2 * a);
            }
        }
        if (to[a] > hi && g.boundary[2 * a + 1] == BoundaryKind::DirichletPressure && d != 0.0) {
            const double th = std::clamp((hi - from[a]) / d, 0.0, 1.0);
            if (best < 0.0 || th < best) {
                best = th;
                side = static_cast<Side>(2 * a + 1);
            }
        }
    }
    return best;
}

}  // namespace

TraceResult trace_back(const VelocitySampler& sampler, const Point& x, double t1, double t0,
                       const TraceOptions& options, bool keep_path) {
    if (t0 > t1) throw DomainError("trace_back needs t0 <= t1");
    if (options.n_sub < 1) throw DomainError("trace_back needs at least one substep");
    const StructuredGrid& g = sampler.grid();
    TraceResult res;
    Point p = g.clamp(x);
    double s = t1;
    const double ds = (t1 - t0) / options.n_sub;
    if (keep_path) {
        res.path.reserve(options.n_sub + 1);
        res.path_times.reserve(options.n_sub + 1);
        res.path.push_back(p);
        res.path_times.push_back(s);
    }
    for (int k = 0; k < options.n_sub; ++k) {
        Point next;
        if (options.rk_order == 4) {
            const Point k1 = sampler(p, s);
            const Point k2 = sampler(g.clamp(axpy(p, -0.5 * ds, k1)), s - 0.5 * ds);
            const Point k3 = sampler(g.clamp(axpy(p, -0.5 * ds, k2)), s - 0.5 * ds);
            const Point k4 = sampler(g.clamp(axpy(p, -ds, k3)), s - ds);
            next = {p[0] - ds / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                    p[1] - ds / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
        } else {
            const Point k1 = sampler(p, s);
            const Point mid = g.clamp(axpy(p, -0.5 * ds, k1));
            next = axpy(p, -ds, sampler(mid, s - 0.5 * ds));
        }
        if (g.dim == 1) next[1] = p[1];
        const double s_next = (k + 1 == options.n_sub) ? t0 : t1 - (k + 1) * ds;
        if (!g.contains(next)) {
            Side side = Side::XLo;
            const double th = dirichlet_crossing(g, p, next, side);
            if (th >= 0.0) {
                res.exited = true;
                res.exit_side = side;
                res.exit_time = s - th * (s - s_next);
                res.point = g.clamp(axpy(p, th, {next[0] - p[0], next[1] - p[1]}));
                if (keep_path) {
                    res.path.push_back(res.point);
                    res.path_times.push_back(res.exit_time);
                }
                return res;
            }
            next = g.clamp(next);
        }
        p = next;
        s = s_next;
        if (keep_path) {
            res.path.push_back(p);
            res.path_times.push_back(s);
        }
    }
    res.point = p;
    return res;
}

// ---------------------------------------------------------------------------
// Constraint handling

double constraint_defect(const MixtureModel& model, const SpeciesField& u, Exec exec) {
    const std::size_t n = u.num_cells();
    std::vector<double> d(n);
    for_each_index(exec, n, [&](std::size_t c) { d[c] = std::abs(model.extension.value(u.cell(c)) - 1.0); });
    return max_abs(d);
}

double apply_constraint(const MixtureModel& model, ConstraintMode mode, SpeciesField& u, Exec exec) {
    if (mode == ConstraintMode::Renormalize) {
        for_each_index(exec, u.num_cells(), [&](std::size_t c) {
            auto uc = u.cell(c);
            const double lambda = model.extension.value(uc);
            if (lambda > 0.0)
                for (double& v : uc) v /= lambda;
        });
    }
    return constraint_defect(model, u, exec);
}

// ---------------------------------------------------------------------------
// Semi-Lagrangian

namespace {

// Value of u at the foot of a characteristic: interpolated interior data or
// inflow data when it left through a DirichletPressure side.
void foot_value(const SpeciesField& u, const TraceResult& tr, const InflowData* inflow, std::span<double> out) {
    if (tr.exited && inflow && inflow->has(tr.exit_side)) {
        const auto in = inflow->at(tr.exit_side);
        std::copy(in.begin(), in.end(), out.begin());
        return;
    }
    sample(u, tr.point, out);
}

}  // namespace

FractionState semi_lagrangian_step(const FractionState& state, const VelocitySampler& sampler, double dt,
                                   const MixtureModel& model, const TransportOptions& options) {
    const StructuredGrid& g = state.u.grid();
    const std::size_t n = g.num_cells();
    const std::size_t ns = state.u.n_species();
    FractionState next;
    next.t = state.t + dt;
    next.mode = state.mode;
    next.u = SpeciesField(g, ns);
    const double t1 = state.t + dt;
    for_each_index(options.exec, n, [&](std::size_t c) {
        const TraceResult tr = trace_back(sampler, g.center(c), t1, state.t, options.trace);
        foot_value(state.u, tr, options.inflow, next.u.cell(c));
    });
    apply_constraint(model, next.mode, next.u, options.exec);
    return next;
}

double WHistory::operator()(const Point& x, double t) const {
    const double a = sample(*w0, x);
    const double b = sample(*w1, x);
    const double span = t1 - t0;
    const double theta = span > 0.0 ? std::clamp((t - t0) / span, 0.0, 1.0) : 1.0;
    return (1.0 - theta) * a + theta * b;
}

namespace {

constexpr double kPositivityTol = 1e-12;

void clip_undershoot(std::span<double> u) {
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] < 0.0) {
            if (u[i] < -kPositivityTol) {
                std::ostringstream os;
                os << "fraction u_" << i + 1 << " = " << u[i] << " fell below zero in the reaction update";
                throw SolverError(os.str(), -u[i]);
            }
            u[i] = 0.0;
        }
    }
}

// One Heun step of du/ds = g(w, u) from (s, wa) to (s + h, wb).
void heun(const ReactionField& reaction, double wa, double wb, double h, std::span<double> u,
          std::span<double> k1, std::span<double> k2, std::span<double> tmp) {
    const std::size_t n = u.size();
    reaction.g_tilde(wa, u, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = std::max(u[i] + h * k1[i], 0.0);
    reaction.g_tilde(wb, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) u[i] += 0.5 * h * (k1[i] + k2[i]);
}

}  // namespace

void integrate_reaction(const ReactionField& reaction, double w_a, double w_b, double s0, double s1,
                        int steps, std::span<double> u) {
    const std::size_t n = u.size();
    std::vector<double> k1(n), k2(n), tmp(n);
    const double h = (s1 - s0) / steps;
    for (int k = 0; k < steps; ++k) {
        const double wa = w_a + (w_b - w_a) * static_cast<double>(k) / steps;
        const double wb = w_a + (w_b - w_a) * static_cast<double>(k + 1) / steps;
        heun(reaction, wa, wb, h, u, k1, k2, tmp);
        clip_undershoot(u);
    }
}

FractionState transport_with_reaction(const FractionState& state, const VelocitySampler& sampler,
                                      const WHistory& w, double dt, const MixtureModel& model,
                                      const ReactionField& reaction, const TransportOptions& options) {
    const StructuredGrid& g = state.u.grid();
    const std::size_t n = g.num_cells();
    const std::size_t ns = state.u.n_species();
    FractionState next;
    next.t = state.t + dt;
    next.mode = state.mode;
    next.u = SpeciesField(g, ns);
    const double t1 = state.t + dt;
    for_each_index(options.exec, n, [&](std::size_t c) {
        const TraceResult tr = trace_back(sampler, g.center(c), t1, state.t, options.trace, true);
        auto uc = next.u.cell(c);
        foot_value(state.u, tr, options.inflow, uc);
        std::vector<double> k1(ns), k2(ns), tmp(ns);
        // Path is stored from t1 backwards; integrate forward from the foot.
        for (std::size_t k = tr.path.size() - 1; k > 0; --k) {
            const double sa = tr.path_times[k];
            const double sb = tr.path_times[k - 1];
            if (sb <= sa) continue;
            heun(reaction, w(tr.path[k], sa), w(tr.path[k - 1], sb), sb - sa, uc, k1, k2, tmp);
            clip_undershoot(uc);
        }
    });
    apply_constraint(model, next.mode, next.u, options.exec);
    return next;
}

// ---------------------------------------------------------------------------
// Conservative transport

FractionState conservative_transport_step(const FractionState& state, const ConservativeInput& in,
                                          double dt, const MixtureModel& model,
                                          const ReactionField* reaction, const TransportOptions& options,
                                          ConservativeReport* report) {
    if (!in.w_old || !in.w_new || !in.flux) throw DomainError("conservative transport needs w and flux");
    const StructuredGrid& g = state.u.grid();
    const std::size_t n = g.num_cells();
    const std::size_t ns = state.u.n_species();
    const std::size_t nx = g.nx();
    const std::size_t ny = g.ny();
    const double hx = g.spacing[0];
    const double hy = g.spacing[1];
    const FaceVectorField& F = *in.flux;
    const ScalarField& w_old = *in.w_old;
    const ScalarField& w_new = *in.w_new;
    const bool has_source = in.source != nullptr;
    const Exec exec = options.exec;

    // Substep count from the positivity condition
    //   delta * (outflow_c + max(0, -f_c)) <= min(w_old_c, w_new_c).
    std::vector<double> need(n);
    for_each_index(exec, n, [&](std::size_t c) {
        const std::size_t i = c % nx;
        const std::size_t j = c / nx;
        double out = std::max(F.x[g.x_face(i + 1, j)], 0.0) / hx + std::max(-F.x[g.x_face(i, j)], 0.0) / hx;
        if (g.dim == 2)
            out += std::max(F.y[g.y_face(i, j + 1)], 0.0) / hy + std::max(-F.y[g.y_face(i, j)], 0.0) / hy;
        if (has_source) out += std::max(-(*in.source)[c], 0.0);
        const double wmin = std::min(w_old[c], w_new[c]);
        need[c] = wmin > 0.0 ? dt * out / wmin : std::numeric_limits<double>::infinity();
    });
    const double worst = max_abs(need);
    if (!std::isfinite(worst)) throw SolverError("conservative transport: nonpositive w", worst);
    const double m_real = std::ceil(worst * (1.0 + 1e-12));
    if (m_real > 1e5) throw SolverError("conservative transport: too many substeps", worst);
    const int m = std::max(1, static_cast<int>(m_real));
    const double delta = dt / m;

    std::vector<double> w(w_old.values().begin(), w_old.values().end());
    std::vector<double> rho(n * ns);
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t s = 0; s < ns; ++s) rho[c * ns + s] = w_old[c] * state.u.at(c, s);

    std::vector<double> u(n * ns), w_next(n), rho_next(n * ns);
    const InflowData* inflow = options.inflow;
    auto inflow_for = [&](Side side, std::size_t c, std::size_t s) {
        if (inflow && inflow->has(side)) return inflow->at(side)[s];
        return u[c * ns + s];
    };

    for (int k = 0; k < m; ++k) {
        for_each_index(exec, n, [&](std::size_t c) {
            for (std::size_t s = 0; s < ns; ++s) u[c * ns + s] = rho[c * ns + s] / w[c];
        });
        for_each_index(exec, n, [&](std::size_t c) {
            const std::size_t i = c % nx;
            const std::size_t j = c / nx;
            const double fl = F.x[g.x_face(i, j)];
            const double fr = F.x[g.x_face(i + 1, j)];
            double fb = 0.0, ft = 0.0;
            if (g.dim == 2) {
                fb = F.y[g.y_face(i, j)];
                ft = F.y[g.y_face(i, j + 1)];
            }
            double div_w = (fr - fl) / hx;
            if (g.dim == 2) div_w += (ft - fb) / hy;
            double wn = w[c] - delta * div_w;
            if (has_source) wn += delta * (*in.source)[c];
            w_next[c] = wn;
            for (std::size_t s = 0; s < ns; ++s) {
                const double uc = u[c * ns + s];
                // Upwind fraction on each face.
                const double ul = fl >= 0.0 ? (i > 0 ? u[(c - 1) * ns + s] : inflow_for(Side::XLo, c, s)) : uc;
                const double ur = fr >= 0.0 ? uc : (i + 1 < nx ? u[(c + 1) * ns + s] : inflow_for(Side::XHi, c, s));
                double div = (fr * ur - fl * ul) / hx;
                if (g.dim == 2) {
                    const double ub = fb >= 0.0 ? (j > 0 ? u[(c - nx) * ns + s] : inflow_for(Side::YLo, c, s)) : uc;
                    const double ut = ft >= 0.0 ? uc : (j + 1 < ny ? u[(c + nx) * ns + s] : inflow_for(Side::YHi, c, s));
                    div += (ft * ut - fb * ub) / hy;
                }
                double r = rho[c * ns + s] - delta * div;
                if (has_source) r += delta * (uc * (*in.source)[c]);
                rho_next[c * ns + s] = r;
            }
        });
        w.swap(w_next);
        rho.swap(rho_next);
    }

    FractionState next;
    next.t = state.t + dt;
    next.mode = state.mode;
    next.u = SpeciesField(g, ns);
    for_each_index(exec, n, [&](std::size_t c) {
        auto uc = next.u.cell(c);
        for (std::size_t s = 0; s < ns; ++s) {
            double v = rho[c * ns + s] / w[c];
            if (v < 0.0) v = 0.0;  // round-off only; each substep is a convex combination
            uc[s] = v;
        }
        if (reaction) integrate_reaction(*reaction, w_old[c], w_new[c], 0.0, dt, options.trace.n_sub, uc);
    });
    apply_constraint(model, next.mode, next.u, exec);
    if (report) report->substeps = m;
    return next;
}

}  // namespace mixflow
