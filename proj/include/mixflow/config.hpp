#pragma once

// Run configuration: an INI-style text format with [sections] and flat
// `key = value` pairs. The schema is documented in docs/config.md.

#include "mixflow/coupled.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mixflow {

struct InitialSpec {
    enum class Kind { Uniform, Gaussian, Blocks, Table };
    Kind kind = Kind::Uniform;
    std::vector<double> rho;         // uniform
    std::vector<double> background;  // gaussian
    std::vector<double> amplitude;
    Point center{0.5, 0.5};
    double width = 0.1;
    std::vector<double> splits;      // blocks: interface positions along x
    std::vector<double> block_rho;   // blocks: block-major, N per block
    double modulation_amplitude = 0.0;
    Point modulation_center{0.5, 0.5};
    double modulation_width = 0.1;
    std::string file;                // table: one row of N densities per cell
    double vacuum_threshold = 1e-12;
};

struct ReactionSpec {
    std::string kind = "none";       // none | exchange | logistic
    std::vector<double> rates;       // exchange: N x N, row i = rates out of i
    std::vector<double> gamma;       // logistic
    double capacity = 1.0;
    std::size_t samples = 2000;
};

struct StudySpec {
    std::string kind;                // barenblatt | oracle_compare | translation
    double t0 = 0.1;                 // barenblatt start time
    double constant = 1.0;           // barenblatt height constant
    double floor = 1e-12;            // barenblatt positive floor
    double velocity = 0.0;           // translation: 0 picks a third of a coarse cell per step
    std::size_t base_cells = 64;
    std::vector<std::size_t> levels;
};

struct SimulationConfig {
    StructuredGrid grid;
    MixtureModel model;
    InitialSpec initial;
    SideValues boundary_pressure{};
    InflowData inflow;
    TimeControl time;
    int output_every = 0;
    StepOptions options;
    double s_ref = -1.0;           // < 0: automatic
    double truncation_k = 0.0;
    int threads = 0;
    std::uint64_t seed = 12345;
    ReactionSpec reaction;
    std::optional<GravityDrift> gravity;
    StudySpec study;
    std::string base_dir = ".";
};

/// Parses and validates. Throws ConfigError listing every problem found, each
/// prefixed with its line number.
SimulationConfig parse_config(const std::string& text, const std::string& base_dir = ".");
SimulationConfig load_config(const std::string& path);

/// Initial densities on the configured grid.
SpeciesField make_initial_density(const SimulationConfig& config);

/// Builds the solver problem. With `check_rates`, a reaction field failing the
/// sampled quasi-positivity check is rejected with a ConfigError.
CoupledProblem make_problem(const SimulationConfig& config, bool check_rates = true);

std::optional<ReactionField> make_reaction(const SimulationConfig& config);

}  // namespace mixflow
