#include "mixflow/parabolic.hpp"

#include "mixflow/error.hpp"
#include "mixflow/linear_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace mixflow {

// ---------------------------------------------------------------------------
// KirchhoffMap

KirchhoffMap::KirchhoffMap(const MixtureModel& model, double s_ref, double truncation_k)
    : pressure_(model.pressure), kappa_(model.kappa), s_ref_(s_ref), truncation_k_(truncation_k) {
    if (truncation_k_ > 0.0) {
        if (!(truncation_k_ > 1.0)) throw ConfigError("truncation k must be > 1");
        lower_ = 1.0 / truncation_k_;
        upper_ = truncation_k_;
    } else {
        lower_ = 0.0;
        upper_ = std::numeric_limits<double>::infinity();
    }
    closed_form_ = pressure_.is_power_law() && kappa_.is_power();
    if (closed_form_) {
        amplitude_ = kappa_.k0() * pressure_.c0() * pressure_.alpha();
        power_ = pressure_.alpha() + kappa_.beta();
    }
    // Automatic reference: anchor at 0 when B(0) is finite, so that U keeps
    // full relative precision in nearly dry cells.
    if (s_ref_ < 0.0) s_ref_ = closed_form_ && power_ > -1.0 ? 0.0 : 1.0;
    if (!(s_ref_ >= 0.0)) throw ConfigError("Kirchhoff reference point must be >= 0");
    if (s_ref_ == 0.0 && !(closed_form_ && power_ > -1.0))
        throw ConfigError("Kirchhoff reference point 0 requires an integrable power-law coefficient");
    if (truncated()) {
        u_floor_ = transform(lower_);
    } else if (closed_form_ && power_ > -1.0) {
        u_floor_ = -amplitude_ / (power_ + 1.0) * std::pow(s_ref_, power_ + 1.0);
    } else {
        u_floor_ = -std::numeric_limits<double>::infinity();
    }
}

double KirchhoffMap::coefficient(double s) const {
    return kappa_(s) * s * pressure_.derivative(s);
}

double KirchhoffMap::integrate(double lo, double hi) const {
    if (lo == hi) return 0.0;
    auto a = [this](double s) { return coefficient(s); };
    double err = 0.0;
    const double a_lo = std::min(lo, hi);
    const double a_hi = std::max(lo, hi);
    // Integrate piecewise between the kinks of a tabulated kappa.
    double v = 0.0;
    double left = a_lo;
    for (double b : kappa_.breakpoints()) {
        if (b <= left || b >= a_hi) continue;
        v += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(a, left, b, 15, 1e-13, &err);
        left = b;
    }
    v += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(a, left, a_hi, 15, 1e-13, &err);
    return hi >= lo ? v : -v;
}

double KirchhoffMap::transform(double s) const {
    if (!(s >= 0.0)) throw DomainError("Kirchhoff transform needs s >= 0");
    if (truncated() && (s < lower_ || s > upper_)) {
        std::ostringstream os;
        os << "Kirchhoff transform: s = " << s << " outside truncation bounds [" << lower_ << ", "
           << upper_ << "]";
        throw DomainError(os.str());
    }
    if (closed_form_) {
        const double q1 = power_ + 1.0;
        if (q1 == 0.0) return amplitude_ * std::log(s / s_ref_);
        return amplitude_ / q1 * (std::pow(s, q1) - std::pow(s_ref_, q1));
    }
    if (s == 0.0) throw DomainError("Kirchhoff transform of 0 needs a closed-form coefficient");
    return integrate(s_ref_, s);
}

double KirchhoffMap::inverse(double u) const {
    if (closed_form_) {
        const double q1 = power_ + 1.0;
        if (q1 == 0.0) return s_ref_ * std::exp(u / amplitude_);
        const double arg = q1 * u / amplitude_ + std::pow(s_ref_, q1);
        if (arg < 0.0) throw DomainError("Kirchhoff inverse: value below the range of B");
        return std::pow(arg, 1.0 / q1);
    }
    // Bracket around s_ref, then safeguarded Newton with B' = a.
    double lo = s_ref_;
    double hi = s_ref_;
    if (u >= 0.0) {
        double step = std::max(1.0, s_ref_);
        while (transform(hi) < u) {
            lo = hi;
            hi += step;
            step *= 2.0;
            if (hi > 1e200) throw DomainError("Kirchhoff inverse: value out of range");
        }
    } else {
        while (transform(lo) > u) {
            hi = lo;
            lo *= 0.5;
            if (lo < 1e-300) throw DomainError("Kirchhoff inverse: value below the range of B");
        }
    }
    double s = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double r = transform(s) - u;
        if (r > 0.0) hi = s; else lo = s;
        double next = s - r / coefficient(s);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - s) <= 4e-16 * s) return next;
        s = next;
    }
    return s;
}

// ---------------------------------------------------------------------------

ParabolicProblem::ParabolicProblem(StructuredGrid g, MixtureModel m, double s_ref, double truncation_k)
    : grid(std::move(g)), model(std::move(m)), kirchhoff(model, s_ref, truncation_k) {}

SideValues ParabolicProblem::boundary_w() const {
    SideValues wb{};
    for (int s = 0; s < 4; ++s)
        if (grid.boundary[s] == BoundaryKind::DirichletPressure)
            wb[s] = model.pressure.inverse(boundary_pressure[s]);
    return wb;
}

ParabolicState make_parabolic_state(const ParabolicProblem& problem, ScalarField w0, double t0) {
    for (std::size_t c = 0; c < w0.size(); ++c) {
        if (!(w0[c] > 0.0)) {
            std::ostringstream os;
            os << "initial w must be strictly positive (cell " << c << ": " << w0[c] << ")";
            throw DomainError(os.str());
        }
    }
    ParabolicState st;
    st.t = t0;
    st.u_k = ScalarField(w0.grid());
    for (std::size_t c = 0; c < w0.size(); ++c) st.u_k[c] = problem.kirchhoff.transform(w0[c]);
    st.w = std::move(w0);
    std::tie(st.velocity, st.div_velocity) = velocity_from_w(st.w, problem);
    return st;
}

// ---------------------------------------------------------------------------

namespace {

// Face flux and its derivatives w.r.t. the Kirchhoff values of the two
// adjacent cells (L = lower index side, R = upper). Boundary faces only use
// the interior cell's entry.
struct FaceFlux {
    std::vector<double> value;
    std::vector<double> d_left;
    std::vector<double> d_right;
};

struct Assembly {
    FaceFlux fx;
    FaceFlux fy;
};

double drift_value(const ParabolicProblem& p, double wf, double g_axis) {
    return p.model.kappa(wf) * p.gravity->fraction_sum * wf * wf * g_axis;
}

double drift_derivative(const ParabolicProblem& p, double wf, double g_axis) {
    const double k = p.model.kappa(wf);
    const double dk = p.model.kappa.derivative(wf);
    return p.gravity->fraction_sum * g_axis * (dk * wf * wf + 2.0 * k * wf);
}

// Fills face fluxes for one axis. `with_jacobian` also fills derivatives.
void assemble_axis(const ParabolicProblem& p, int axis, std::span<const double> u,
                   std::span<const double> w, std::span<const double> a, const SideValues& ub,
                   const SideValues& wb, bool with_jacobian, FaceFlux& out, Exec exec) {
    const StructuredGrid& g = p.grid;
    const std::size_t nx = g.nx();
    const std::size_t ny = g.ny();
    const double h = g.spacing[axis];
    const bool drift = p.gravity && p.gravity->g[axis] != 0.0;
    const double g_axis = drift ? p.gravity->g[axis] : 0.0;
    const std::size_t nfaces = axis == 0 ? g.num_x_faces() : g.num_y_faces();
    const std::size_t ncells_axis = axis == 0 ? nx : ny;
    const int lo_side = axis == 0 ? 0 : 2;
    const int hi_side = lo_side + 1;
    out.value.assign(nfaces, 0.0);
    if (with_jacobian) {
        out.d_left.assign(nfaces, 0.0);
        out.d_right.assign(nfaces, 0.0);
    }
    for_each_index(exec, nfaces, [&](std::size_t f) {
        // k: position along the axis (0..ncells_axis), m: transverse index.
        std::size_t k, m;
        if (axis == 0) {
            k = f % (nx + 1);
            m = f / (nx + 1);
        } else {
            k = f / nx;
            m = f % nx;
        }
        auto cell = [&](std::size_t kk) { return axis == 0 ? g.index(kk, m) : g.index(m, kk); };
        if (k == 0 || k == ncells_axis) {
            const int side = k == 0 ? lo_side : hi_side;
            if (g.boundary[side] == BoundaryKind::NoPenetration) return;
            const std::size_t c = cell(k == 0 ? 0 : ncells_axis - 1);
            // Gradient toward +axis using the half-cell distance to the wall.
            const double grad = k == 0 ? (u[c] - ub[side]) / (0.5 * h) : (ub[side] - u[c]) / (0.5 * h);
            double val = -grad;
            if (drift) val += drift_value(p, wb[side], g_axis);
            out.value[f] = val;
            if (with_jacobian) {
                const double d = k == 0 ? -1.0 / (0.5 * h) : 1.0 / (0.5 * h);
                if (k == 0) out.d_right[f] = d; else out.d_left[f] = d;
            }
            return;
        }
        const std::size_t cl = cell(k - 1);
        const std::size_t cr = cell(k);
        double val = -(u[cr] - u[cl]) / h;
        double dl = 1.0 / h;
        double dr = -1.0 / h;
        if (drift) {
            const double wf = 0.5 * (w[cl] + w[cr]);
            val += drift_value(p, wf, g_axis);
            if (with_jacobian) {
                const double dd = drift_derivative(p, wf, g_axis);
                dl += 0.5 * dd / a[cl];
                dr += 0.5 * dd / a[cr];
            }
        }
        out.value[f] = val;
        if (with_jacobian) {
            out.d_left[f] = dl;
            out.d_right[f] = dr;
        }
    });
}

struct Workspace {
    std::vector<double> w, a, f, df, residual;
};

// Evaluates w, a(w), f(w), face fluxes and the residual
//   R = (w - w_old) + dt * div(F) - dt * f(w)
// Returns max |R|.
double evaluate(const ParabolicProblem& p, std::span<const double> u, std::span<const double> w_old,
                double dt, const SideValues& ub, const SideValues& wb, bool with_jacobian,
                Workspace& ws, Assembly& as) {
    const StructuredGrid& g = p.grid;
    const std::size_t n = g.num_cells();
    const Exec exec = p.newton.exec;
    ws.w.resize(n);
    ws.a.resize(n);
    ws.f.assign(n, 0.0);
    ws.df.assign(n, 0.0);
    ws.residual.resize(n);
    const KirchhoffMap& km = p.kirchhoff;
    const bool has_source = static_cast<bool>(p.source);
    for_each_index(exec, n, [&](std::size_t c) {
        const double wc = km.inverse(u[c]);
        ws.w[c] = wc;
        ws.a[c] = km.coefficient(wc);
        if (has_source) {
            ws.f[c] = p.source(c, wc);
            if (with_jacobian) {
                const double d = 1e-7 * std::max(1.0, wc);
                const double lo = std::max(wc - d, 0.5 * wc);
                ws.df[c] = (p.source(c, wc + d) - p.source(c, lo)) / (wc + d - lo);
            }
        }
    });
    assemble_axis(p, 0, u, ws.w, ws.a, ub, wb, with_jacobian, as.fx, exec);
    if (g.dim == 2) assemble_axis(p, 1, u, ws.w, ws.a, ub, wb, with_jacobian, as.fy, exec);

    const std::size_t nx = g.nx();
    const double hx = g.spacing[0];
    const double hy = g.spacing[1];
    for_each_index(exec, n, [&](std::size_t c) {
        const std::size_t i = c % nx;
        const std::size_t j = c / nx;
        double div = (as.fx.value[g.x_face(i + 1, j)] - as.fx.value[g.x_face(i, j)]) / hx;
        if (g.dim == 2) div += (as.fy.value[g.y_face(i, j + 1)] - as.fy.value[g.y_face(i, j)]) / hy;
        double r = (ws.w[c] - w_old[c]) + dt * div;
        if (has_source) r -= dt * ws.f[c];
        ws.residual[c] = r;
    });
    return max_abs(ws.residual);
}

void build_jacobian(const ParabolicProblem& p, double dt, const Workspace& ws, const Assembly& as,
                    StencilMatrix& jac) {
    const StructuredGrid& g = p.grid;
    const std::size_t n = g.num_cells();
    const std::size_t nx = g.nx();
    const double hx = g.spacing[0];
    const double hy = g.spacing[1];
    const bool has_source = static_cast<bool>(p.source);
    for_each_index(p.newton.exec, n, [&](std::size_t c) {
        const std::size_t i = c % nx;
        const std::size_t j = c / nx;
        const std::size_t fr = g.x_face(i + 1, j);
        const std::size_t fl = g.x_face(i, j);
        double diag = 1.0 / ws.a[c];
        if (has_source) diag -= dt * ws.df[c] / ws.a[c];
        diag += dt / hx * (as.fx.d_left[fr] - as.fx.d_right[fl]);
        jac.xm[c] = i > 0 ? -dt / hx * as.fx.d_left[fl] : 0.0;
        jac.xp[c] = i + 1 < nx ? dt / hx * as.fx.d_right[fr] : 0.0;
        if (g.dim == 2) {
            const std::size_t ft = g.y_face(i, j + 1);
            const std::size_t fb = g.y_face(i, j);
            diag += dt / hy * (as.fy.d_left[ft] - as.fy.d_right[fb]);
            jac.ym[c] = j > 0 ? -dt / hy * as.fy.d_left[fb] : 0.0;
            jac.yp[c] = j + 1 < g.ny() ? dt / hy * as.fy.d_right[ft] : 0.0;
        }
        jac.diag[c] = diag;
    });
}

FaceVectorField to_face_field(const StructuredGrid& g, const Assembly& as) {
    FaceVectorField F(g);
    F.x = as.fx.value;
    if (g.dim == 2) F.y = as.fy.value;
    return F;
}

}  // namespace

FaceVectorField w_flux(const ScalarField& w, const ParabolicProblem& p) {
    const std::size_t n = w.size();
    std::vector<double> u(n), a(n);
    for (std::size_t c = 0; c < n; ++c) {
        u[c] = p.kirchhoff.transform(w[c]);
        a[c] = p.kirchhoff.coefficient(w[c]);
    }
    const SideValues wb = p.boundary_w();
    SideValues ub{};
    for (int s = 0; s < 4; ++s)
        if (p.grid.boundary[s] == BoundaryKind::DirichletPressure) ub[s] = p.kirchhoff.transform(wb[s]);
    Assembly as;
    assemble_axis(p, 0, u, w.values(), a, ub, wb, false, as.fx, p.newton.exec);
    if (p.grid.dim == 2) assemble_axis(p, 1, u, w.values(), a, ub, wb, false, as.fy, p.newton.exec);
    return to_face_field(p.grid, as);
}

ParabolicState step_implicit(const ParabolicState& state, double dt, const ParabolicProblem& p,
                             ParabolicStepReport* report) {
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    const StructuredGrid& g = p.grid;
    const std::size_t n = g.num_cells();
    const KirchhoffMap& km = p.kirchhoff;
    const Exec exec = p.newton.exec;

    const SideValues wb = p.boundary_w();
    SideValues ub{};
    for (int s = 0; s < 4; ++s)
        if (g.boundary[s] == BoundaryKind::DirichletPressure) ub[s] = km.transform(wb[s]);

    std::span<const double> w_old = state.w.values();
    const double scale = max_abs(w_old);
    const double tol = p.newton.tolerance * scale;
    const double polish_floor = 64.0 * std::numeric_limits<double>::epsilon() * scale;

    std::vector<double> u(state.u_k.values().begin(), state.u_k.values().end());
    std::vector<double> trial(n), delta(n), rhs(n);
    Workspace ws, ws_trial;
    Assembly as, as_trial;
    StencilMatrix jac(g);
    std::vector<double> history;
    int lin_iters = 0;

    double r = evaluate(p, u, w_old, dt, ub, wb, true, ws, as);
    history.push_back(r);
    int iters = 0;
    bool polished = false;
    const double u_lo = km.transform_floor();
    const double u_hi = km.truncated() ? km.transform(km.upper_bound()) : std::numeric_limits<double>::infinity();
    while (true) {
        if (r <= polish_floor) break;  // round-off level, nothing left to gain
        if (r <= tol) {
            if (polished) break;
            polished = true;
        }
        if (iters >= p.newton.max_iters) {
            std::ostringstream os;
            os << "Newton did not converge in " << p.newton.max_iters << " iterations (residual " << r
               << ", tolerance " << tol << ")";
            throw SolverError(os.str(), r);
        }
        build_jacobian(p, dt, ws, as, jac);
        for (std::size_t c = 0; c < n; ++c) {
            rhs[c] = -ws.residual[c];
            delta[c] = 0.0;
        }
        const LinearSolveReport lr = solve_stencil(jac, rhs, delta, p.newton.linear_rtol, exec);
        lin_iters += lr.iterations;

        // Damped update; keep U inside the admissible range of B.
        double lambda = 1.0;
        double r_trial = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls) {
            bool valid = true;
            for (std::size_t c = 0; c < n; ++c) {
                double v = u[c] + lambda * delta[c];
                if (km.truncated()) v = std::clamp(v, u_lo, u_hi);
                else if (!(v > u_lo)) v = u_lo + 0.5 * (u[c] - u_lo);  // nearly dry cell: go halfway to the floor
                if (!(v > u_lo) && !km.truncated()) valid = false;
                trial[c] = v;
            }
            if (valid) {
                r_trial = evaluate(p, trial, w_old, dt, ub, wb, true, ws_trial, as_trial);
                if (std::isfinite(r_trial) && (r_trial < (1.0 - 1e-4 * lambda) * r || r_trial <= tol)) {
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        ++iters;
        if (!accepted) {
            if (r <= tol) break;  // converged; polishing cannot improve further
            std::ostringstream os;
            os << "Newton line search failed (residual " << r << ")";
            throw SolverError(os.str(), r);
        }
        u.swap(trial);
        std::swap(ws, ws_trial);
        std::swap(as, as_trial);
        r = r_trial;
        history.push_back(r);
    }

    // Final fluxes at the converged state; redefine w so that the cell balance
    // w_new = w_old - dt div F + dt f holds to round-off.
    ParabolicState next;
    next.t = state.t + dt;
    next.w = ScalarField(g);
    next.u_k = ScalarField(g);
    const std::size_t nx = g.nx();
    const double hx = g.spacing[0];
    const double hy = g.spacing[1];
    const bool has_source = static_cast<bool>(p.source);
    for_each_index(exec, n, [&](std::size_t c) {
        const std::size_t i = c % nx;
        const std::size_t j = c / nx;
        double div = (as.fx.value[g.x_face(i + 1, j)] - as.fx.value[g.x_face(i, j)]) / hx;
        if (g.dim == 2) div += (as.fy.value[g.y_face(i, j + 1)] - as.fy.value[g.y_face(i, j)]) / hy;
        double wn = w_old[c] - dt * div;
        if (has_source) wn += dt * ws.f[c];
        next.w[c] = wn;
    });
    for (std::size_t c = 0; c < n; ++c) {
        if (!(next.w[c] > 0.0) || (km.truncated() && (next.w[c] < km.lower_bound() || next.w[c] > km.upper_bound()))) {
            std::ostringstream os;
            os << "w left the admissible range in cell " << c << " (w = " << next.w[c] << ")";
            throw SolverError(os.str(), r);
        }
        next.u_k[c] = km.transform(next.w[c]);
    }
    std::tie(next.velocity, next.div_velocity) = velocity_from_w(next.w, p);

    if (report) {
        report->newton_iterations = iters;
        report->residual_history = std::move(history);
        report->flux = to_face_field(g, as);
        report->source = ScalarField(g, has_source ? ws.f : std::vector<double>(n, 0.0));
        report->linear_iterations = lin_iters;
    }
    return next;
}

std::pair<FaceVectorField, ScalarField> velocity_from_w(const ScalarField& w, const ParabolicProblem& p) {
    const StructuredGrid& g = p.grid;
    const std::size_t n = g.num_cells();
    std::vector<double> gw(n);
    for (std::size_t c = 0; c < n; ++c) gw[c] = p.model.pressure.value(w[c]);
    const SideValues wb = p.boundary_w();
    SideValues pb{};
    for (int s = 0; s < 4; ++s)
        if (g.boundary[s] == BoundaryKind::DirichletPressure) pb[s] = p.boundary_pressure[s];
    const ScalarField pressure(g, std::move(gw));
    FaceVectorField v = face_gradient(pressure, g.has_dirichlet() ? &pb : nullptr);

    const std::size_t nx = g.nx();
    const std::size_t ny = g.ny();
    auto face_w = [&](int axis, std::size_t k, std::size_t m, std::size_t ncells_axis) {
        auto cell = [&](std::size_t kk) { return axis == 0 ? g.index(kk, m) : g.index(m, kk); };
        if (k == 0) return wb[axis == 0 ? 0 : 2];
        if (k == ncells_axis) return wb[axis == 0 ? 1 : 3];
        return 0.5 * (w[cell(k - 1)] + w[cell(k)]);
    };
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t k = 0; k <= nx; ++k) {
            const std::size_t f = g.x_face(k, j);
            const double wf = face_w(0, k, j, nx);
            double val = -p.model.kappa(wf) * v.x[f];
            if (p.gravity) val += p.model.kappa(wf) * p.gravity->fraction_sum * wf * p.gravity->g[0];
            v.x[f] = val;
        }
    }
    if (g.dim == 2) {
        for (std::size_t k = 0; k <= ny; ++k) {
            for (std::size_t i = 0; i < nx; ++i) {
                const std::size_t f = g.y_face(i, k);
                const double wf = face_w(1, k, i, ny);
                double val = -p.model.kappa(wf) * v.y[f];
                if (p.gravity) val += p.model.kappa(wf) * p.gravity->fraction_sum * wf * p.gravity->g[1];
                v.y[f] = val;
            }
        }
    }
    v.enforce_no_penetration();
    ScalarField div = divergence(v);
    return {std::move(v), std::move(div)};
}

}  // namespace mixflow
