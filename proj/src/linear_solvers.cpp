#include "mixflow/linear_solvers.hpp"

#include "mixflow/error.hpp"

#include <cmath>

namespace mixflow {

StencilMatrix::StencilMatrix(const StructuredGrid& g)
    : grid(g),
      diag(g.num_cells(), 0.0),
      xm(g.num_cells(), 0.0),
      xp(g.num_cells(), 0.0),
      ym(g.dim == 2 ? g.num_cells() : 0, 0.0),
      yp(g.dim == 2 ? g.num_cells() : 0, 0.0) {}

void StencilMatrix::apply(Exec exec, std::span<const double> x, std::span<double> y) const {
    const std::size_t nx = grid.nx();
    const std::size_t n = grid.num_cells();
    const bool two_d = grid.dim == 2;
    for_each_index(exec, n, [&](std::size_t c) {
        const std::size_t i = c % nx;
        double v = diag[c] * x[c];
        if (i > 0) v += xm[c] * x[c - 1];
        if (i + 1 < nx) v += xp[c] * x[c + 1];
        if (two_d) {
            if (c >= nx) v += ym[c] * x[c - nx];
            if (c + nx < n) v += yp[c] * x[c + nx];
        }
        y[c] = v;
    });
}

bool StencilMatrix::is_symmetric(double rtol) const {
    const std::size_t nx = grid.nx();
    const std::size_t n = grid.num_cells();
    auto close = [rtol](double a, double b) {
        return std::abs(a - b) <= rtol * std::max(std::abs(a), std::abs(b));
    };
    for (std::size_t c = 0; c < n; ++c) {
        if (c % nx + 1 < nx && !close(xp[c], xm[c + 1])) return false;
        if (grid.dim == 2 && c + nx < n && !close(yp[c], ym[c + nx])) return false;
    }
    return true;
}

void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<const double> rhs,
                       std::span<double> x) {
    const std::size_t n = diag.size();
    std::vector<double> c(n), d(n);
    double denom = diag[0];
    if (denom == 0.0) throw SolverError("tridiagonal solve: zero pivot");
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for (std::size_t i = 1; i < n; ++i) {
        denom = diag[i] - lower[i] * c[i - 1];
        if (denom == 0.0) throw SolverError("tridiagonal solve: zero pivot");
        c[i] = i + 1 < n ? upper[i] / denom : 0.0;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
}

LinearSolveReport solve_cg(const StencilMatrix& a, std::span<const double> b, std::span<double> x,
                           double rtol, int max_iters, Exec exec) {
    const std::size_t n = b.size();
    std::vector<double> r(n), z(n), p(n), ap(n);
    a.apply(exec, x, ap);
    for_each_index(exec, n, [&](std::size_t i) { r[i] = b[i] - ap[i]; });
    const double bnorm = std::sqrt(dot(exec, b, b));
    LinearSolveReport rep;
    if (bnorm == 0.0) {
        for_each_index(exec, n, [&](std::size_t i) { x[i] = 0.0; });
        rep.converged = true;
        return rep;
    }
    for_each_index(exec, n, [&](std::size_t i) { z[i] = r[i] / a.diag[i]; p[i] = z[i]; });
    double rz = dot(exec, r, z);
    double rnorm = std::sqrt(dot(exec, r, r));
    for (int k = 0; k < max_iters; ++k) {
        rep.relative_residual = rnorm / bnorm;
        if (rep.relative_residual <= rtol) {
            rep.converged = true;
            rep.iterations = k;
            return rep;
        }
        a.apply(exec, p, ap);
        const double pap = dot(exec, p, ap);
        if (!(pap > 0.0)) throw SolverError("conjugate gradients: operator is not positive definite");
        const double alpha = rz / pap;
        for_each_index(exec, n, [&](std::size_t i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = r[i] / a.diag[i];
        });
        const double rz_new = dot(exec, r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for_each_index(exec, n, [&](std::size_t i) { p[i] = z[i] + beta * p[i]; });
        rnorm = std::sqrt(dot(exec, r, r));
        rep.iterations = k + 1;
    }
    rep.relative_residual = rnorm / bnorm;
    rep.converged = rep.relative_residual <= rtol;
    return rep;
}

LinearSolveReport solve_bicgstab(const StencilMatrix& a, std::span<const double> b,
                                 std::span<double> x, double rtol, int max_iters, Exec exec) {
    const std::size_t n = b.size();
    std::vector<double> r(n), r0(n), p(n, 0.0), v(n, 0.0), s(n), t(n), ph(n), sh(n);
    a.apply(exec, x, v);
    for_each_index(exec, n, [&](std::size_t i) { r[i] = b[i] - v[i]; r0[i] = r[i]; v[i] = 0.0; });
    const double bnorm = std::sqrt(dot(exec, b, b));
    LinearSolveReport rep;
    if (bnorm == 0.0) {
        for_each_index(exec, n, [&](std::size_t i) { x[i] = 0.0; });
        rep.converged = true;
        return rep;
    }
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    double rnorm = std::sqrt(dot(exec, r, r));
    for (int k = 0; k < max_iters; ++k) {
        rep.relative_residual = rnorm / bnorm;
        rep.iterations = k;
        if (rep.relative_residual <= rtol) {
            rep.converged = true;
            return rep;
        }
        const double rho_new = dot(exec, r0, r);
        if (rho_new == 0.0) break;
        const double beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for_each_index(exec, n, [&](std::size_t i) {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            ph[i] = p[i] / a.diag[i];
        });
        a.apply(exec, ph, v);
        alpha = rho / dot(exec, r0, v);
        for_each_index(exec, n, [&](std::size_t i) {
            s[i] = r[i] - alpha * v[i];
            sh[i] = s[i] / a.diag[i];
        });
        a.apply(exec, sh, t);
        const double tt = dot(exec, t, t);
        omega = tt > 0.0 ? dot(exec, t, s) / tt : 0.0;
        for_each_index(exec, n, [&](std::size_t i) {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
        });
        rnorm = std::sqrt(dot(exec, r, r));
        if (omega == 0.0) break;
    }
    rep.relative_residual = rnorm / bnorm;
    rep.converged = rep.relative_residual <= rtol;
    return rep;
}

LinearSolveReport solve_stencil(const StencilMatrix& a, std::span<const double> b,
                                std::span<double> x, double rtol, Exec exec) {
    if (a.grid.dim == 1) {
        solve_tridiagonal(a.xm, a.diag, a.xp, b, x);
        LinearSolveReport rep;
        rep.converged = true;
        return rep;
    }
    const int max_iters = static_cast<int>(10 * a.grid.num_cells() + 100);
    if (a.is_symmetric()) return solve_cg(a, b, x, rtol, max_iters, exec);
    return solve_bicgstab(a, b, x, rtol, max_iters, exec);
}

}  // namespace mixflow
