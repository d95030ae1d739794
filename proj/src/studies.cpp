#include "mixflow/studies.hpp"

#include "mixflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mixflow {

double barenblatt_profile(double x, double t, double m, double C) {
    const double k = 1.0 / (m + 1.0);
    const double arg = C - k * (m - 1.0) / (2.0 * m) * x * x * std::pow(t, -2.0 * k);
    if (arg <= 0.0) return 0.0;
    return std::pow(t, -k) * std::pow(arg, 1.0 / (m - 1.0));
}

SimulationConfig with_cells(const SimulationConfig& config, std::size_t cells) {
    SimulationConfig c = config;
    StructuredGrid& g = c.grid;
    const double ratio = static_cast<double>(cells) / static_cast<double>(g.cells[0]);
    g.cells[0] = cells;
    if (g.dim == 2) g.cells[1] = static_cast<std::size_t>(std::llround(static_cast<double>(g.cells[1]) * ratio));
    g.spacing = {g.length[0] / static_cast<double>(g.cells[0]),
                 g.dim == 2 ? g.length[1] / static_cast<double>(g.cells[1]) : 1.0};
    g.validate();
    return c;
}

namespace {

void fill_orders(StudyResult& r) {
    for (std::size_t k = 0; k < r.levels.size(); ++k) {
        StudyLevel& l = r.levels[k];
        if (k == 0) {
            l.order = std::numeric_limits<double>::quiet_NaN();
            l.ratio = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        const StudyLevel& p = r.levels[k - 1];
        l.ratio = p.error / l.error;
        l.order = std::log(p.error / l.error) / std::log(p.h / l.h);
    }
}

double level_dt(const SimulationConfig& cfg, std::size_t cells) {
    return cfg.time.dt * static_cast<double>(cfg.study.base_cells) / static_cast<double>(cells);
}

}  // namespace

StudyResult barenblatt_study(const SimulationConfig& config, const std::vector<std::size_t>& levels) {
    if (config.grid.dim != 1) throw ConfigError("barenblatt study needs a 1D grid");
    if (config.model.n_species() != 1) throw ConfigError("barenblatt study needs a single species");
    if (!config.model.pressure.is_power_law() || !config.model.kappa.is_constant())
        throw ConfigError("barenblatt study needs a power-law pressure and constant kappa");
    const double alpha = config.model.pressure.alpha();
    const double m = alpha + 1.0;
    const double coeff = config.model.kappa(1.0) * config.model.pressure.c0() * alpha / (alpha + 1.0);
    const double C = config.study.constant;
    const double t0 = config.study.t0;
    const double T = config.time.T;
    const double center = config.grid.origin[0] + 0.5 * config.grid.length[0];
    StudyResult res;
    res.name = "barenblatt";
    for (std::size_t n : levels) {
        SimulationConfig cfg = with_cells(config, n);
        for (int s = 0; s < 4; ++s) cfg.grid.boundary[s] = BoundaryKind::NoPenetration;
        ParabolicProblem prob(cfg.grid, cfg.model, cfg.s_ref, cfg.truncation_k);
        prob.newton.tolerance = cfg.options.newton_tol;
        prob.newton.max_iters = cfg.options.max_iters;
        prob.newton.exec = cfg.options.exec;
        ScalarField w0(cfg.grid);
        for (std::size_t c = 0; c < w0.size(); ++c)
            w0[c] = std::max(barenblatt_profile(cfg.grid.center(c)[0] - center, coeff * t0, m, C), cfg.study.floor);
        ParabolicState st = make_parabolic_state(prob, w0, t0);
        const double dt = level_dt(cfg, n);
        const long steps = std::lround(std::ceil(T / dt - 1e-9));
        for (long k = 0; k < steps; ++k) {
            const double h = std::min(dt, t0 + T - st.t);
            st = step_implicit(st, h, prob);
        }
        double err = 0.0;
        for (std::size_t c = 0; c < st.w.size(); ++c) {
            const double exact = barenblatt_profile(cfg.grid.center(c)[0] - center, coeff * (t0 + T), m, C);
            err += std::abs(st.w[c] - exact);
        }
        err *= cfg.grid.spacing[0];
        const std::size_t last = st.w.size() - 1;
        const double dry = std::max(1e-6, 10.0 * cfg.study.floor);
        if (st.w[0] > dry || st.w[last] > dry) {
            res.valid = false;
            std::ostringstream os;
            os << "support reached the boundary on the " << n << "-cell level";
            res.message = os.str();
        }
        res.levels.push_back({n, cfg.grid.spacing[0], dt, err, 0.0, 0.0});
    }
    fill_orders(res);
    return res;
}

StudyResult oracle_compare_study(const SimulationConfig& config, const std::vector<std::size_t>& levels) {
    StudyResult res;
    res.name = "oracle_compare";
    for (std::size_t n : levels) {
        SimulationConfig cfg = with_cells(config, n);
        CoupledProblem prob = make_problem(cfg);
        const SpeciesField rho0 = make_initial_density(cfg);
        MixtureState init = init_decomposition(rho0, prob, cfg.initial.vacuum_threshold);
        TimeControl tc = cfg.time;
        tc.dt = level_dt(cfg, n);
        tc.dt_min = tc.dt / 1024.0;
        Simulation sim(prob, init, tc);
        sim.run();
        const SpeciesField direct = advance_direct(rho0, cfg.time.T, prob);
        double gap = 0.0;
        const auto a = sim.state().rho.values();
        const auto b = direct.values();
        for (std::size_t k = 0; k < a.size(); ++k) gap += std::abs(a[k] - b[k]);
        gap *= cfg.grid.cell_volume();
        res.levels.push_back({n, cfg.grid.spacing[0], tc.dt, gap, 0.0, 0.0});
    }
    fill_orders(res);
    return res;
}

StudyResult translation_study(const SimulationConfig& config, const std::vector<std::size_t>& levels) {
    if (levels.empty()) throw ConfigError("translation study needs at least one level");
    const double dt = config.time.dt;
    const double T = config.time.T;
    const long steps = std::lround(T / dt);
    if (steps < 1 || std::abs(steps * dt - T) > 1e-9 * T)
        throw ConfigError("translation study needs T to be a multiple of dt");
    double v = config.study.velocity;
    if (v == 0.0) v = config.grid.length[0] / static_cast<double>(levels.front()) / 3.0 / dt;
    StudyResult res;
    res.name = "translation";
    for (std::size_t n : levels) {
        SimulationConfig cfg = with_cells(config, n);
        const StructuredGrid& g = cfg.grid;
        const MixtureModel& model = cfg.model;
        const SpeciesField rho0 = make_initial_density(cfg);
        FractionState fs;
        fs.mode = cfg.options.constraint;
        fs.u = SpeciesField(g, model.n_species());
        for (std::size_t c = 0; c < g.num_cells(); ++c) {
            const double lam = model.extension.value(rho0.cell(c));
            for (std::size_t s = 0; s < model.n_species(); ++s) fs.u.at(c, s) = rho0.at(c, s) / lam;
        }
        TransportOptions topt;
        topt.trace.n_sub = cfg.options.n_sub;
        topt.trace.rk_order = cfg.options.rk_order;
        topt.exec = cfg.options.exec;
        for (long k = 0; k < steps; ++k) {
            const VelocitySampler vs = VelocitySampler::analytic(
                g, [v](const Point&, double) { return Point{v, 0.0}; }, fs.t, fs.t + dt);
            fs = semi_lagrangian_step(fs, vs, dt, model, topt);
        }
        // Exact: initial data evaluated on the grid shifted back by v T.
        SimulationConfig shifted = cfg;
        shifted.grid.origin[0] -= v * T;
        const SpeciesField rho_exact = make_initial_density(shifted);
        double err = 0.0;
        for (std::size_t c = 0; c < g.num_cells(); ++c) {
            // make_initial_density uses the shifted grid's centers, i.e. x - v T.
            const double lam = model.extension.value(rho_exact.cell(c));
            for (std::size_t s = 0; s < model.n_species(); ++s)
                err += std::abs(fs.u.at(c, s) - rho_exact.at(c, s) / lam);
        }
        err *= g.cell_volume();
        res.levels.push_back({n, g.spacing[0], dt, err, 0.0, 0.0});
    }
    fill_orders(res);
    std::ostringstream os;
    os << "velocity " << v;
    res.message = os.str();
    return res;
}

StudyResult run_study(const SimulationConfig& config, const std::string& name,
                      const std::vector<std::size_t>& levels) {
    if (levels.empty()) throw ConfigError("a refinement study needs at least one level");
    if (name == "barenblatt") return barenblatt_study(config, levels);
    if (name == "oracle_compare") return oracle_compare_study(config, levels);
    if (name == "translation") return translation_study(config, levels);
    throw ConfigError("unknown study '" + name + "' (barenblatt | oracle_compare | translation)");
}

}  // namespace mixflow
