#pragma once

// Transport of the fractions u = rho / Lambda(rho) along the Darcy velocity.
//
// Two schemes share the same state type:
//  * semi-Lagrangian: u_new(x) = u_old(foot of the characteristic through x),
//    optionally with the reaction ODE du/ds = g(w, u) integrated along it;
//  * conservative: rho_i = w u_i advanced with the parabolic step's own face
//    w-fluxes times upwind fractions, which conserves mass to round-off.

#include "mixflow/exec.hpp"
#include "mixflow/grid.hpp"
#include "mixflow/mixture_model.hpp"
#include "mixflow/reaction.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace mixflow {

enum class ConstraintMode { ExactLinear, Renormalize, Off };

std::string to_string(ConstraintMode mode);

struct FractionState {
    double t = 0.0;
    SpeciesField u;
    ConstraintMode mode = ConstraintMode::ExactLinear;
};

/// Velocity at arbitrary (x, t): either two face snapshots with linear time
/// interpolation, or an analytic field.
class VelocitySampler {
public:
    using Analytic = std::function<Point(const Point& x, double t)>;

    static VelocitySampler snapshots(FaceVectorField v0, FaceVectorField v1, double t0, double t1);
    static VelocitySampler analytic(const StructuredGrid& grid, Analytic field, double t0, double t1);

    Point operator()(const Point& x, double t) const;
    const StructuredGrid& grid() const noexcept { return grid_; }
    double t0() const noexcept { return t0_; }
    double t1() const noexcept { return t1_; }

private:
    StructuredGrid grid_;
    double t0_ = 0.0;
    double t1_ = 0.0;
    FaceVectorField v0_;
    FaceVectorField v1_;
    Analytic analytic_;
};

/// Velocity of a face field at x: linear between the two faces bracketing x
/// along the normal axis (so it vanishes at NoPenetration walls), linear
/// between cell-center rows across.
Point sample_face_velocity(const FaceVectorField& v, const Point& x);

struct TraceOptions {
    int n_sub = 4;
    int rk_order = 2;  // 2 (midpoint) or 4
};

struct TraceResult {
    Point point{};
    bool exited = false;    // left through a DirichletPressure side
    Side exit_side = Side::XLo;
    double exit_time = 0.0;
    /// Characteristic positions at the substep times, from t1 back to the
    /// foot (or the exit point). Filled only when requested.
    std::vector<Point> path;
    std::vector<double> path_times;
};

/// Foot Phi(t0; t1, x) of the characteristic through x at t1.
TraceResult trace_back(const VelocitySampler& sampler, const Point& x, double t1, double t0,
                       const TraceOptions& options = {}, bool keep_path = false);

/// Prescribed fractions entering through DirichletPressure sides.
struct InflowData {
    std::array<std::vector<double>, 4> fractions;

    bool has(Side s) const { return !fractions[static_cast<int>(s)].empty(); }
    std::span<const double> at(Side s) const { return fractions[static_cast<int>(s)]; }
};

struct TransportOptions {
    TraceOptions trace;
    Exec exec = Exec::Parallel;
    const InflowData* inflow = nullptr;
};

/// Applies the constraint mode in place; returns max |Lambda(u) - 1| after.
double apply_constraint(const MixtureModel& model, ConstraintMode mode, SpeciesField& u, Exec exec);

/// max over cells of |Lambda(u) - 1|.
double constraint_defect(const MixtureModel& model, const SpeciesField& u, Exec exec);

FractionState semi_lagrangian_step(const FractionState& state, const VelocitySampler& sampler, double dt,
                                   const MixtureModel& model, const TransportOptions& options = {});

/// w at the two ends of the step, linearly interpolated in time.
struct WHistory {
    const ScalarField* w0 = nullptr;
    const ScalarField* w1 = nullptr;
    double t0 = 0.0;
    double t1 = 0.0;

    double operator()(const Point& x, double t) const;
};

/// Semi-Lagrangian step with du/ds = g(w, u) along each characteristic.
FractionState transport_with_reaction(const FractionState& state, const VelocitySampler& sampler,
                                      const WHistory& w, double dt, const MixtureModel& model,
                                      const ReactionField& reaction, const TransportOptions& options = {});

/// Inputs of the conservative scheme, all produced by the parabolic step.
struct ConservativeInput {
    const ScalarField* w_old = nullptr;
    const ScalarField* w_new = nullptr;
    const FaceVectorField* flux = nullptr;  // w-flux on faces
    const ScalarField* source = nullptr;    // f on cells, may be null
};

struct ConservativeReport {
    int substeps = 0;
};

/// Conservative upwind update of rho = w u with the w-fluxes, sub-cycled so
/// every substep is a convex combination. The reaction ODE (if any) is applied
/// per cell afterwards with w interpolated in time.
FractionState conservative_transport_step(const FractionState& state, const ConservativeInput& input,
                                          double dt, const MixtureModel& model,
                                          const ReactionField* reaction = nullptr,
                                          const TransportOptions& options = {},
                                          ConservativeReport* report = nullptr);

/// Integrates du/ds = g(w(s), u) over [s0, s1] with `steps` RK2 steps, w linear
/// between w_a and w_b. Clips undershoots above -1e-12, throws below.
void integrate_reaction(const ReactionField& reaction, double w_a, double w_b, double s0, double s1,
                        int steps, std::span<double> u);

}  // namespace mixflow
