#include "mixflow/verify.hpp"

#include "mixflow/error.hpp"
#include "mixflow/output.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mixflow {

bool VerifyReport::ok(bool allow_drift) const {
    for (const CheckResult& c : checks) {
        if (c.skipped || c.passed) continue;
        if (c.informational && allow_drift) continue;
        return false;
    }
    return true;
}

void VerifyReport::print(std::ostream& out, bool allow_drift) const {
    for (const CheckResult& c : checks) {
        const char* status = c.skipped ? "SKIP" : c.passed ? "PASS" : (c.informational && allow_drift) ? "INFO" : "FAIL";
        out << status << ' ' << c.name;
        if (!c.skipped) out << " measured=" << format_number(c.measured) << " tol=" << c.tolerance;
        if (!c.note.empty()) out << " (" << c.note << ')';
        out << '\n';
    }
    out << (ok(allow_drift) ? "verify: all checks passed" : "verify: some checks failed") << '\n';
}

namespace {

std::vector<double> random_state(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> d(1e-3, 10.0);
    std::vector<double> rho(n);
    for (double& v : rho) v = d(rng);
    return rho;
}

}  // namespace

double homogeneity_residual(const MixtureModel& model, std::size_t samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    const double lambdas[3] = {0.5, 2.0, 7.0};
    std::vector<double> scaled(model.n_species());
    for (std::size_t k = 0; k < samples; ++k) {
        const std::vector<double> rho = random_state(rng, model.n_species());
        const double base = eval_lambda(model, rho);
        for (double l : lambdas) {
            for (std::size_t i = 0; i < rho.size(); ++i) scaled[i] = l * rho[i];
            worst = std::max(worst, std::abs(eval_lambda(model, scaled) - l * base) / (l * base));
        }
    }
    return worst;
}

double euler_residual(const MixtureModel& model, std::size_t samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const std::vector<double> rho = random_state(rng, model.n_species());
        const std::vector<double> g = grad_lambda(model, rho);
        double dot = 0.0;
        for (std::size_t i = 0; i < rho.size(); ++i) dot += g[i] * rho[i];
        const double lam = eval_lambda(model, rho);
        worst = std::max(worst, std::abs(dot - lam) / lam);
    }
    return worst;
}

double euler_fd_residual(const MixtureModel& model, std::size_t samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    std::vector<double> p(model.n_species());
    for (std::size_t k = 0; k < samples; ++k) {
        const std::vector<double> rho = random_state(rng, model.n_species());
        const std::vector<double> g = grad_lambda(model, rho);
        double gnorm = 0.0;
        for (double v : g) gnorm = std::max(gnorm, std::abs(v));
        for (std::size_t i = 0; i < rho.size(); ++i) {
            const double h = 1e-6 * rho[i];
            p = rho;
            p[i] = rho[i] + h;
            const double fp = eval_lambda(model, p);
            p[i] = rho[i] - h;
            const double fm = eval_lambda(model, p);
            const double fd = (fp - fm) / (2.0 * h);
            worst = std::max(worst, std::abs(fd - g[i]) / std::max(gnorm, 1e-300));
        }
    }
    return worst;
}

double gibbs_duhem_max(const MixtureModel& model, std::size_t samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const std::vector<double> rho = random_state(rng, model.n_species());
        worst = std::max(worst, gibbs_duhem_residual(model, rho));
    }
    return worst;
}

double adjointness_residual(const StructuredGrid& grid, std::size_t samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    StructuredGrid g = grid;
    for (auto& b : g.boundary) b = BoundaryKind::NoPenetration;
    double worst = 0.0;
    const double vol = g.cell_volume();
    for (std::size_t k = 0; k < samples; ++k) {
        FaceVectorField F(g);
        for (double& v : F.x) v = d(rng);
        for (double& v : F.y) v = d(rng);
        F.enforce_no_penetration();
        ScalarField f(g);
        for (std::size_t c = 0; c < f.size(); ++c) f[c] = d(rng);
        const ScalarField div = divergence(F);
        const FaceVectorField grad = face_gradient(f);
        double lhs = 0.0, scale = 0.0;
        for (std::size_t c = 0; c < f.size(); ++c) {
            lhs += div[c] * f[c] * vol;
            scale += std::abs(div[c] * f[c]) * vol;
        }
        double rhs = 0.0;
        for (std::size_t e = 0; e < F.x.size(); ++e) {
            rhs -= F.x[e] * grad.x[e] * vol;
            scale += std::abs(F.x[e] * grad.x[e]) * vol;
        }
        for (std::size_t e = 0; e < F.y.size(); ++e) {
            rhs -= F.y[e] * grad.y[e] * vol;
            scale += std::abs(F.y[e] * grad.y[e]) * vol;
        }
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(scale, 1e-300));
    }
    return worst;
}

// ---------------------------------------------------------------------------

namespace {

CheckResult make_check(std::string name, double measured, double tol) {
    CheckResult c;
    c.name = std::move(name);
    c.measured = measured;
    c.tolerance = tol;
    c.passed = measured <= tol;
    return c;
}

CheckResult skipped(std::string name, std::string why) {
    CheckResult c;
    c.name = std::move(name);
    c.skipped = true;
    c.note = std::move(why);
    return c;
}

}  // namespace

VerifyReport verify_config(const SimulationConfig& cfg) {
    VerifyReport rep;
    const MixtureModel& model = cfg.model;
    const std::uint64_t seed = cfg.seed;
    constexpr std::size_t kSamples = 1000;

    rep.checks.push_back(make_check("homogeneity", homogeneity_residual(model, kSamples, seed), 1e-12));
    rep.checks.push_back(make_check("euler_identity", euler_residual(model, kSamples, seed + 1), 1e-10));
    rep.checks.push_back(make_check("euler_identity_fd", euler_fd_residual(model, 200, seed + 2), 1e-6));
    rep.checks.push_back(make_check("gibbs_duhem", gibbs_duhem_max(model, kSamples, seed + 3), 1e-10));
    rep.checks.push_back(make_check("adjointness", adjointness_residual(cfg.grid, 50, seed + 4), 1e-12));

    CoupledProblem prob = make_problem(cfg, false);
    const bool reactive = prob.reaction.has_value();
    bool rates_ok = true;
    if (reactive) {
        const SpeciesField rho0 = make_initial_density(cfg);
        double wmin = 1e300, wmax = 0.0;
        for (std::size_t c = 0; c < rho0.num_cells(); ++c) {
            const double w = model.extension.value(rho0.cell(c));
            wmin = std::min(wmin, w);
            wmax = std::max(wmax, w);
        }
        const ReactionCheck rc = check_reaction(*prob.reaction, 0.5 * wmin, 2.0 * wmax, cfg.reaction.samples, seed + 5);
        CheckResult q = make_check("quasi-positivity", -rc.worst_quasi, 0.0);
        q.passed = rc.quasi_positive;
        q.note = rc.detail;
        rates_ok = rc.quasi_positive;
        rep.checks.push_back(q);
        rep.checks.push_back(make_check("orthogonality", rc.worst_orthogonality, 1e-10));
    } else {
        rep.checks.push_back(skipped("quasi-positivity", "no reaction"));
        rep.checks.push_back(skipped("orthogonality", "no reaction"));
    }

    const char* run_checks[] = {"maximum_principle", "conservation", "fraction_bounds", "constraint",
                                "reconstruction", "entropy_decay", "dissipation_sign", "positivity"};
    if (!rates_ok) {
        for (const char* n : run_checks) rep.checks.push_back(skipped(n, "reaction rates rejected"));
        return rep;
    }

    const SpeciesField rho0 = make_initial_density(cfg);
    MixtureState init = init_decomposition(rho0, prob, cfg.initial.vacuum_threshold);
    const bool closed = cfg.grid.all_no_penetration();
    const bool plain = closed && !reactive && !cfg.gravity;
    const double w_lo = init.w.min(), w_hi = init.w.max();
    std::vector<double> u_lo(model.n_species(), 1e300), u_hi(model.n_species(), -1e300);
    for (std::size_t c = 0; c < init.u.num_cells(); ++c)
        for (std::size_t s = 0; s < model.n_species(); ++s) {
            u_lo[s] = std::min(u_lo[s], init.u.at(c, s));
            u_hi[s] = std::max(u_hi[s], init.u.at(c, s));
        }
    const StepRecord first = measure(init, prob);

    double bound_violation = 0.0, mass_drift = 0.0, frac_violation = 0.0, constraint = first.constraint_defect;
    double recon = 0.0, entropy_increase = 0.0, min_dissipation = first.dissipation, min_u = 0.0;
    double prev_energy = first.free_energy;
    auto track = [&](const MixtureState& st, const StepRecord& r) {
        bound_violation = std::max({bound_violation, w_lo - r.min_w, r.max_w - w_hi});
        for (std::size_t s = 0; s < r.masses.size(); ++s)
            mass_drift = std::max(mass_drift, std::abs(r.masses[s] - first.masses[s]) / std::max(std::abs(first.masses[s]), 1e-300));
        constraint = std::max(constraint, r.constraint_defect);
        for (std::size_t c = 0; c < st.u.num_cells(); ++c) {
            const double lam = model.extension.value(st.rho.cell(c));
            recon = std::max(recon, std::abs(lam - st.w[c]) / st.w[c]);
            for (std::size_t s = 0; s < model.n_species(); ++s) {
                const double v = st.u.at(c, s);
                min_u = std::min(min_u, v);
                frac_violation = std::max({frac_violation, u_lo[s] - v, v - u_hi[s]});
            }
        }
        entropy_increase = std::max(entropy_increase, (r.free_energy - prev_energy) / std::max(std::abs(prev_energy), 1e-300));
        prev_energy = r.free_energy;
        min_dissipation = std::min(min_dissipation, r.dissipation);
    };
    Simulation sim(prob, init, cfg.time);
    sim.run(track);

    const bool linear = model.extension.is_linear();
    if (plain) rep.checks.push_back(make_check("maximum_principle", bound_violation, 1e-12));
    else rep.checks.push_back(skipped("maximum_principle", "needs closed boundary without reaction or gravity"));
    const bool rescaled = !model.extension.is_linear() && cfg.options.constraint == ConstraintMode::Renormalize;
    if (closed && !reactive && !rescaled) rep.checks.push_back(make_check("conservation", mass_drift, 1e-10));
    else if (rescaled) rep.checks.push_back(skipped("conservation", "renormalizing a nonlinear extension rescales species masses"));
    else rep.checks.push_back(skipped("conservation", "needs closed boundary without reaction"));
    if (!reactive && closed) rep.checks.push_back(make_check("fraction_bounds", frac_violation, 1e-12));
    else rep.checks.push_back(skipped("fraction_bounds", "needs closed boundary without reaction"));

    const ConstraintMode mode = cfg.options.constraint;
    const double ctol = mode == ConstraintMode::ExactLinear ? 1e-12 : 1e-8;
    CheckResult cc = make_check("constraint", constraint, ctol);
    if (mode == ConstraintMode::Off && !linear) {
        cc.informational = true;
        cc.note = "constraint mode off with a nonlinear extension";
    }
    rep.checks.push_back(cc);
    CheckResult rc = make_check("reconstruction", recon, linear && mode != ConstraintMode::Off ? 1e-12 : 1e-8);
    if (mode == ConstraintMode::Off && !linear) rc.informational = true;
    rep.checks.push_back(rc);

    if (plain) rep.checks.push_back(make_check("entropy_decay", entropy_increase, 1e-12));
    else rep.checks.push_back(skipped("entropy_decay", "needs closed boundary without reaction or gravity"));
    rep.checks.push_back(make_check("dissipation_sign", std::max(0.0, -min_dissipation), 0.0));
    rep.checks.push_back(make_check("positivity", std::max(0.0, -min_u), 1e-12));
    return rep;
}

}  // namespace mixflow
