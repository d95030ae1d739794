#pragma once

// Decomposed mixture solver: implicit w-step, velocity snapshots, fraction
// transport, reconstruction rho = w u. Also the explicit cross-diffusion
// solver used as an independent reference, and the time-stepping driver.

#include "mixflow/grid.hpp"
#include "mixflow/mixture_model.hpp"
#include "mixflow/parabolic.hpp"
#include "mixflow/reaction.hpp"
#include "mixflow/transport.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mixflow {

enum class TransportScheme { Conservative, SemiLagrangian };

std::string to_string(TransportScheme scheme);

struct StepOptions {
    double newton_tol = 1e-10;
    int max_iters = 30;
    int n_sub = 4;
    int rk_order = 2;
    ConstraintMode constraint = ConstraintMode::ExactLinear;
    double picard_tol = 1e-10;
    int max_picard = 20;
    TransportScheme transport = TransportScheme::Conservative;
    Exec exec = Exec::Parallel;
};

/// Everything a step needs besides the state.
struct CoupledProblem {
    ParabolicProblem parabolic;
    std::optional<ReactionField> reaction;
    InflowData inflow;
    StepOptions options;

    CoupledProblem(StructuredGrid grid, MixtureModel model, double s_ref = -1.0, double truncation_k = 0.0);

    const StructuredGrid& grid() const noexcept { return parabolic.grid; }
    const MixtureModel& model() const noexcept { return parabolic.model; }
    /// Re-reads `options` into the parabolic Newton settings.
    void sync_options();
};

struct MixtureState {
    double t = 0.0;
    SpeciesField rho;
    ScalarField w;
    SpeciesField u;
    ScalarField p;
    FaceVectorField velocity;
    ScalarField div_velocity;
};

/// w = Lambda(rho0), u = rho0 / w. Rejects cells with sum(rho) < vacuum_threshold.
MixtureState init_decomposition(const SpeciesField& rho0, const CoupledProblem& problem,
                                double vacuum_threshold = 1e-12);

struct StepInfo {
    int newton_iterations = 0;
    int picard_iterations = 0;
    int transport_substeps = 0;
};

MixtureState step_decomposed(const MixtureState& state, double dt, const CoupledProblem& problem,
                             StepInfo* info = nullptr);

/// Largest stable explicit step of the reference solver for the given rho.
double direct_stable_dt(const SpeciesField& rho, const CoupledProblem& problem);

/// One explicit upwind step of d rho_i/dt = div(kappa rho_i grad p(rho)).
/// Throws DomainError when dt exceeds the stability bound.
SpeciesField step_direct(const SpeciesField& rho, double dt, const CoupledProblem& problem);

/// Advances the reference solver by `duration` with equal substeps that
/// respect the stability bound (re-checked every substep).
SpeciesField advance_direct(const SpeciesField& rho, double duration, const CoupledProblem& problem);

struct StepRecord {
    std::size_t step = 0;
    double t = 0.0;
    double dt = 0.0;
    std::vector<double> masses;
    double free_energy = 0.0;
    double dissipation = 0.0;
    double min_w = 0.0;
    double max_w = 0.0;
    double constraint_defect = 0.0;
    int newton_iterations = 0;
    int picard_iterations = 0;
};

class DiagnosticsLog {
public:
    void append(StepRecord r) { records_.push_back(std::move(r)); }
    const std::vector<StepRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

private:
    std::vector<StepRecord> records_;
};

/// Conserved and dissipated quantities of a state.
StepRecord measure(const MixtureState& state, const CoupledProblem& problem);
double total_free_energy(const SpeciesField& rho, const MixtureModel& model, Exec exec);
double dissipation_rate(const ScalarField& w, const CoupledProblem& problem);

struct TimeControl {
    double T = 0.0;
    double dt = 0.0;
    double dt_min = 0.0;  // 0: dt / 1024
    int restore_after = 5;
};

/// Persistent run: advance_to(T1) followed by advance_to(T2) reproduces a
/// single advance_to(T2) bit for bit when dt divides T1.
class Simulation {
public:
    using StepCallback = std::function<void(const MixtureState&, const StepRecord&)>;

    Simulation(CoupledProblem problem, MixtureState initial, TimeControl time);

    void advance_to(double t_end, const StepCallback& on_step = {});
    void run(const StepCallback& on_step = {}) { advance_to(time_.T, on_step); }

    const MixtureState& state() const noexcept { return state_; }
    const DiagnosticsLog& log() const noexcept { return log_; }
    const CoupledProblem& problem() const noexcept { return problem_; }
    std::size_t steps() const noexcept { return step_; }
    double current_dt() const noexcept { return dt_; }

private:
    CoupledProblem problem_;
    MixtureState state_;
    TimeControl time_;
    DiagnosticsLog log_;
    std::size_t step_ = 0;
    double dt_ = 0.0;
    int successes_ = 0;
};

}  // namespace mixflow
