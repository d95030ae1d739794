#pragma once

// Grid-refinement studies against known solutions or the reference solver.

#include "mixflow/config.hpp"

#include <string>
#include <vector>

namespace mixflow {

/// Self-similar solution of dw/dt = d^2(w^m)/dx^2 in 1D centered at x = 0:
///   w = t^-k (C - k (m - 1) / (2 m) x^2 t^-2k)_+^(1 / (m - 1)),  k = 1 / (m + 1).
double barenblatt_profile(double x, double t, double m, double C);

struct StudyLevel {
    std::size_t cells = 0;
    double h = 0.0;
    double dt = 0.0;
    double error = 0.0;
    double order = 0.0;   // NaN on the first level
    double ratio = 0.0;   // previous error / this error, NaN on the first level
};

struct StudyResult {
    std::string name;
    std::vector<StudyLevel> levels;
    bool valid = true;     // e.g. Barenblatt support stayed inside the domain
    std::string message;
};

/// Porous-medium reduction: single species, power-law pressure, constant
/// kappa. Level dt = config dt * base_cells / cells.
StudyResult barenblatt_study(const SimulationConfig& config, const std::vector<std::size_t>& levels);

/// L1 distance between the decomposed solver and the explicit reference at T.
/// Level dt = config dt * base_cells / cells.
StudyResult oracle_compare_study(const SimulationConfig& config, const std::vector<std::size_t>& levels);

/// Semi-Lagrangian transport of the initial fractions by a constant velocity
/// along x; error against the exactly shifted profile. dt is fixed across
/// levels.
StudyResult translation_study(const SimulationConfig& config, const std::vector<std::size_t>& levels);

StudyResult run_study(const SimulationConfig& config, const std::string& name,
                      const std::vector<std::size_t>& levels);

/// Copy of `config` with the grid refined to `cells` along x (and
/// proportionally along y in 2D).
SimulationConfig with_cells(const SimulationConfig& config, std::size_t cells);

}  // namespace mixflow
