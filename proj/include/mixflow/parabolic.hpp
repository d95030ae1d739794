#pragma once

// Implicit solver for the volume-extension equation
//
//     dw/dt = div(a(w) grad w) - div(drift) + f(w),   a(w) = kappa(w) w G'(w),
//
// written in the Kirchhoff variable U = B(w), B' = a, so the diffusive part
// becomes a plain Laplacian of U. Backward Euler in time, cell-centered finite
// volumes in space, damped Newton on U.

#include "mixflow/exec.hpp"
#include "mixflow/grid.hpp"
#include "mixflow/mixture_model.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace mixflow {

class KirchhoffMap {
public:
    /// `truncation_k` > 0 restricts the admissible range to [1/k, k].
    explicit KirchhoffMap(const MixtureModel& model, double s_ref = -1.0, double truncation_k = 0.0);

    double coefficient(double s) const;
    double transform(double s) const;
    double inverse(double u) const;

    double s_ref() const noexcept { return s_ref_; }
    bool truncated() const noexcept { return truncation_k_ > 0.0; }
    double lower_bound() const noexcept { return lower_; }
    double upper_bound() const noexcept { return upper_; }
    /// B at the lower end of the admissible range (B(0) without truncation).
    double transform_floor() const noexcept { return u_floor_; }
    bool closed_form() const noexcept { return closed_form_; }

private:
    double integrate(double lo, double hi) const;

    PressureLaw pressure_;
    Porosity kappa_;
    double s_ref_;
    double truncation_k_;
    double lower_ = 0.0;
    double upper_ = 0.0;
    bool closed_form_ = false;
    double amplitude_ = 0.0;  // a(s) = amplitude * s^power in closed form
    double power_ = 0.0;
    double u_floor_ = 0.0;
};

/// Constant-fraction gravity: w-flux gains kappa(w) * C0 * w^2 * g.
struct GravityDrift {
    double fraction_sum = 1.0;  // C0
    Point g{0.0, 0.0};
};

/// Cellwise source f(cell, w). Must be safe to call concurrently.
using CellSource = std::function<double(std::size_t cell, double w)>;

struct NewtonOptions {
    double tolerance = 1e-10;  // relative to max|w_old|
    int max_iters = 30;
    double linear_rtol = 1e-12;
    Exec exec = Exec::Parallel;
};

struct ParabolicProblem {
    StructuredGrid grid;
    MixtureModel model;
    KirchhoffMap kirchhoff;
    SideValues boundary_pressure{};  // p0 on DirichletPressure sides
    std::optional<GravityDrift> gravity;
    CellSource source;
    NewtonOptions newton;

    ParabolicProblem(StructuredGrid g, MixtureModel m, double s_ref = -1.0, double truncation_k = 0.0);

    /// w_b = G^{-1}(p0) on each side.
    SideValues boundary_w() const;
};

struct ParabolicState {
    double t = 0.0;
    ScalarField w;
    ScalarField u_k;  // B(w)
    FaceVectorField velocity;
    ScalarField div_velocity;
};

struct ParabolicStepReport {
    int newton_iterations = 0;
    std::vector<double> residual_history;
    FaceVectorField flux;  // w-flux on faces at the new time level
    ScalarField source;    // f at the new time level (zero without source)
    int linear_iterations = 0;
};

/// Builds the initial state; rejects nonpositive w.
ParabolicState make_parabolic_state(const ParabolicProblem& problem, ScalarField w0, double t0 = 0.0);

/// One backward-Euler step. Throws SolverError when Newton does not converge.
ParabolicState step_implicit(const ParabolicState& state, double dt, const ParabolicProblem& problem,
                             ParabolicStepReport* report = nullptr);

/// Face velocity v = -kappa(w_f) grad G(w) (+ gravity) and its divergence.
std::pair<FaceVectorField, ScalarField> velocity_from_w(const ScalarField& w,
                                                        const ParabolicProblem& problem);

/// Face w-flux -grad B(w) (+ drift) evaluated at a given w, as used by the
/// implicit step.
FaceVectorField w_flux(const ScalarField& w, const ParabolicProblem& problem);

}  // namespace mixflow
