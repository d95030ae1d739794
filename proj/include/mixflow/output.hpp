#pragma once

// CSV and legacy-VTK writers. Numbers are written with 17 significant digits
// so every value round-trips exactly.

#include "mixflow/coupled.hpp"

#include <ostream>
#include <string>

namespace mixflow {

std::string format_number(double v);

/// Header: step,t,dt,mass_1..mass_N,free_energy,dissipation,min_w,max_w,
/// max_constraint_defect,newton_iters,picard_iters
std::string diagnostics_header(std::size_t n_species);
std::string diagnostics_row(const StepRecord& r);
void write_diagnostics_csv(std::ostream& out, const DiagnosticsLog& log, std::size_t n_species);

/// Header: cell,x[,y],w,p,rho_1..rho_N,u_1..u_N
void write_fields_csv(std::ostream& out, const MixtureState& state);

/// Legacy ASCII STRUCTURED_POINTS with w, p, rho_i and u_i as cell data.
void write_vtk(std::ostream& out, const MixtureState& state);

/// Drives a Simulation and writes diagnostics.csv plus fields_<step>.csv
/// (and .vtk) into `dir`: step 0, every `output_every` steps, and the last step.
struct OutputPlan {
    std::string dir;
    int output_every = 0;
    bool vtk = false;
};

void run_with_output(Simulation& sim, const OutputPlan& plan);

}  // namespace mixflow
