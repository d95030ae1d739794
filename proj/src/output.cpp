#include "mixflow/output.hpp"

#include "mixflow/error.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mixflow {

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string diagnostics_header(std::size_t n_species) {
    std::ostringstream os;
    os << "step,t,dt";
    for (std::size_t s = 0; s < n_species; ++s) os << ",mass_" << s + 1;
    os << ",free_energy,dissipation,min_w,max_w,max_constraint_defect,newton_iters,picard_iters";
    return os.str();
}

std::string diagnostics_row(const StepRecord& r) {
    std::ostringstream os;
    os << r.step << ',' << format_number(r.t) << ',' << format_number(r.dt);
    for (double m : r.masses) os << ',' << format_number(m);
    os << ',' << format_number(r.free_energy) << ',' << format_number(r.dissipation) << ','
       << format_number(r.min_w) << ',' << format_number(r.max_w) << ',' << format_number(r.constraint_defect)
       << ',' << r.newton_iterations << ',' << r.picard_iterations;
    return os.str();
}

void write_diagnostics_csv(std::ostream& out, const DiagnosticsLog& log, std::size_t n_species) {
    out << diagnostics_header(n_species) << '\n';
    for (const StepRecord& r : log.records()) out << diagnostics_row(r) << '\n';
}

void write_fields_csv(std::ostream& out, const MixtureState& st) {
    const StructuredGrid& g = st.w.grid();
    const std::size_t ns = st.rho.n_species();
    out << "cell,x";
    if (g.dim == 2) out << ",y";
    out << ",w,p";
    for (std::size_t s = 0; s < ns; ++s) out << ",rho_" << s + 1;
    for (std::size_t s = 0; s < ns; ++s) out << ",u_" << s + 1;
    out << '\n';
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        const Point x = g.center(c);
        out << c << ',' << format_number(x[0]);
        if (g.dim == 2) out << ',' << format_number(x[1]);
        out << ',' << format_number(st.w[c]) << ',' << format_number(st.p[c]);
        for (std::size_t s = 0; s < ns; ++s) out << ',' << format_number(st.rho.at(c, s));
        for (std::size_t s = 0; s < ns; ++s) out << ',' << format_number(st.u.at(c, s));
        out << '\n';
    }
}

void write_vtk(std::ostream& out, const MixtureState& st) {
    const StructuredGrid& g = st.w.grid();
    const std::size_t nx = g.nx(), ny = g.ny();
    const std::size_t n = g.num_cells();
    out << "# vtk DataFile Version 3.0\n";
    out << "mixflow t=" << format_number(st.t) << "\n";
    out << "ASCII\nDATASET STRUCTURED_POINTS\n";
    // Points are cell corners; data are attached to cells.
    out << "DIMENSIONS " << nx + 1 << ' ' << (g.dim == 2 ? ny + 1 : 2) << " 1\n";
    out << "ORIGIN " << format_number(g.origin[0]) << ' ' << format_number(g.dim == 2 ? g.origin[1] : 0.0)
        << " 0\n";
    out << "SPACING " << format_number(g.spacing[0]) << ' ' << format_number(g.spacing[1]) << " 1\n";
    out << "CELL_DATA " << n << '\n';
    auto scalar = [&](const std::string& name, auto value) {
        out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (std::size_t c = 0; c < n; ++c) out << format_number(value(c)) << '\n';
    };
    scalar("w", [&](std::size_t c) { return st.w[c]; });
    scalar("p", [&](std::size_t c) { return st.p[c]; });
    for (std::size_t s = 0; s < st.rho.n_species(); ++s)
        scalar("rho_" + std::to_string(s + 1), [&](std::size_t c) { return st.rho.at(c, s); });
    for (std::size_t s = 0; s < st.u.n_species(); ++s)
        scalar("u_" + std::to_string(s + 1), [&](std::size_t c) { return st.u.at(c, s); });
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& p) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
    return f;
}

void write_snapshot(const OutputPlan& plan, const MixtureState& st, std::size_t step) {
    const std::filesystem::path dir(plan.dir);
    {
        auto f = open_for_write(dir / ("fields_" + std::to_string(step) + ".csv"));
        write_fields_csv(f, st);
    }
    if (plan.vtk) {
        auto f = open_for_write(dir / ("fields_" + std::to_string(step) + ".vtk"));
        write_vtk(f, st);
    }
}

}  // namespace

void run_with_output(Simulation& sim, const OutputPlan& plan) {
    std::filesystem::create_directories(plan.dir);
    const std::size_t ns = sim.state().rho.n_species();
    auto diag = open_for_write(std::filesystem::path(plan.dir) / "diagnostics.csv");
    diag << diagnostics_header(ns) << '\n';
    write_snapshot(plan, sim.state(), sim.steps());
    std::size_t last_written = sim.steps();
    sim.run([&](const MixtureState& st, const StepRecord& rec) {
        diag << diagnostics_row(rec) << '\n';
        if (plan.output_every > 0 && rec.step % static_cast<std::size_t>(plan.output_every) == 0) {
            write_snapshot(plan, st, rec.step);
            last_written = rec.step;
        }
    });
    if (sim.steps() != last_written) write_snapshot(plan, sim.state(), sim.steps());
    diag.flush();
}

}  // namespace mixflow
