// mixflow command-line front end: run, verify, converge.

#include "mixflow/config.hpp"
#include "mixflow/error.hpp"
#include "mixflow/output.hpp"
#include "mixflow/studies.hpp"
#include "mixflow/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <iostream>

namespace {

constexpr int kConfigError = 2;
constexpr int kSolverError = 3;
constexpr int kVerifyFailure = 4;

int fail(const std::string& kind, int code, const std::string& message) {
    nlohmann::json j;
    j["error"] = kind;
    j["exit_code"] = code;
    j["message"] = message;
    std::cerr << j.dump() << std::endl;
    return code;
}

int cmd_run(const std::string& path, std::string out_dir, bool vtk) {
    if (const char* env = std::getenv("MIXFLOW_OUT"); env && *env) out_dir = env;
    const mixflow::SimulationConfig cfg = mixflow::load_config(path);
    mixflow::CoupledProblem prob = mixflow::make_problem(cfg);
    const mixflow::SpeciesField rho0 = mixflow::make_initial_density(cfg);
    mixflow::MixtureState init = mixflow::init_decomposition(rho0, prob, cfg.initial.vacuum_threshold);
    mixflow::Simulation sim(std::move(prob), std::move(init), cfg.time);
    mixflow::run_with_output(sim, {out_dir, cfg.output_every, vtk});
    std::cout << "run: " << sim.steps() << " steps to t = " << mixflow::format_number(sim.state().t)
              << ", output in " << out_dir << '\n';
    return 0;
}

int cmd_verify(const std::string& path, bool allow_drift) {
    const mixflow::SimulationConfig cfg = mixflow::load_config(path);
    const mixflow::VerifyReport rep = mixflow::verify_config(cfg);
    rep.print(std::cout, allow_drift);
    return rep.ok(allow_drift) ? 0 : kVerifyFailure;
}

int cmd_converge(const std::string& path, std::string study, std::vector<std::size_t> levels) {
    const mixflow::SimulationConfig cfg = mixflow::load_config(path);
    if (study.empty()) study = cfg.study.kind;
    if (study.empty()) throw mixflow::ConfigError("no study selected (use --study or study.kind)");
    if (levels.empty()) levels = cfg.study.levels;
    if (levels.empty()) levels = {64, 128, 256};
    const mixflow::StudyResult res = mixflow::run_study(cfg, study, levels);
    std::cout << "study " << res.name << '\n';
    std::cout << "cells,h,dt,error,order,ratio\n";
    for (const auto& l : res.levels) {
        std::cout << l.cells << ',' << mixflow::format_number(l.h) << ',' << mixflow::format_number(l.dt) << ','
                  << mixflow::format_number(l.error) << ',';
        if (std::isnan(l.order)) std::cout << "-,-\n";
        else std::cout << std::setprecision(4) << l.order << ',' << l.ratio << std::setprecision(6) << '\n';
    }
    if (!res.message.empty()) std::cout << "note: " << res.message << '\n';
    if (!res.valid) return fail("study", kVerifyFailure, res.message);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixflow: decomposition solver for Darcy mixtures"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir = "out";
    bool vtk = false;
    auto* run = app.add_subcommand("run", "Run a simulation and write CSV output");
    run->add_option("config", config, "Configuration file")->required();
    run->add_option("--out", out_dir, "Output directory (MIXFLOW_OUT overrides)");
    run->add_flag("--vtk", vtk, "Also write legacy VTK snapshots");

    bool allow_drift = false;
    auto* verify = app.add_subcommand("verify", "Run the invariant checks for a configuration");
    verify->add_option("config", config, "Configuration file")->required();
    verify->add_flag("--allow-drift", allow_drift, "Accept constraint drift when the constraint mode is off");

    std::string study;
    std::vector<std::size_t> levels;
    auto* converge = app.add_subcommand("converge", "Grid refinement study");
    converge->add_option("config", config, "Configuration file")->required();
    converge->add_option("--study", study, "barenblatt | oracle_compare | translation");
    converge->add_option("--levels", levels, "Comma-separated cell counts")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kConfigError;
    }

    try {
        if (*run) return cmd_run(config, out_dir, vtk);
        if (*verify) return cmd_verify(config, allow_drift);
        if (*converge) return cmd_converge(config, study, levels);
    } catch (const mixflow::ConfigError& e) {
        return fail("config", kConfigError, e.what());
    } catch (const mixflow::SolverError& e) {
        return fail("solver", kSolverError, e.what());
    } catch (const mixflow::DomainError& e) {
        return fail("solver", kSolverError, e.what());
    } catch (const std::exception& e) {
        return fail("runtime", kSolverError, e.what());
    }
    return 0;
}
