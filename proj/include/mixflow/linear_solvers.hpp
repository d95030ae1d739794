#pragma once

#include "mixflow/exec.hpp"
#include "mixflow/grid.hpp"

#include <span>
#include <vector>

namespace mixflow {

/// Compact 3-point (1D) or 5-point (2D) operator on grid cells. Neighbour
/// coefficients that would reach outside the grid must be zero.
struct StencilMatrix {
    StructuredGrid grid;
    std::vector<double> diag;
    std::vector<double> xm, xp;  // couplings to (i-1, j) and (i+1, j)
    std::vector<double> ym, yp;  // couplings to (i, j-1) and (i, j+1); empty in 1D

    explicit StencilMatrix(const StructuredGrid& g);

    void apply(Exec exec, std::span<const double> x, std::span<double> y) const;
    bool is_symmetric(double rtol = 1e-14) const;
};

struct LinearSolveReport {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Thomas algorithm. `lower[0]` and `upper[n-1]` are ignored.
void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<const double> rhs,
                       std::span<double> x);

/// Jacobi-preconditioned conjugate gradients (matrix must be SPD).
LinearSolveReport solve_cg(const StencilMatrix& a, std::span<const double> b, std::span<double> x,
                           double rtol, int max_iters, Exec exec);

/// Jacobi-preconditioned BiCGSTAB for nonsymmetric operators.
LinearSolveReport solve_bicgstab(const StencilMatrix& a, std::span<const double> b,
                                 std::span<double> x, double rtol, int max_iters, Exec exec);

/// Direct solve in 1D, CG for symmetric and BiCGSTAB for nonsymmetric 2D
/// operators. `x` is used as the initial guess by the iterative solvers.
LinearSolveReport solve_stencil(const StencilMatrix& a, std::span<const double> b,
                                std::span<double> x, double rtol, Exec exec);

}  // namespace mixflow
