#include "mixflow/coupled.hpp"
#include "mixflow/error.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mixflow;
using testing_support::closed_problem;
using testing_support::linear_model;
using testing_support::number_model;

namespace {

void expect_bitwise(std::span<const double> a, std::span<const double> b) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) ASSERT_EQ(a[k], b[k]) << "entry " << k;
}

}  // namespace

TEST(InitDecomposition, UniformExample) {
    const CoupledProblem p = closed_problem(1, 8, linear_model({1.0, 1.0}));
    const MixtureState s = init_decomposition(SpeciesField(p.grid(), 2, 2.0), p);
    for (std::size_t c = 0; c < 8; ++c) {
        EXPECT_DOUBLE_EQ(s.w[c], 4.0);
        EXPECT_DOUBLE_EQ(s.u.at(c, 0), 0.5);
        EXPECT_DOUBLE_EQ(s.u.at(c, 1), 0.5);
    }
}

TEST(InitDecomposition, ConstraintHoldsForAnyModel) {
    for (const MixtureModel& m : testing_support::model_zoo()) {
        const CoupledProblem p = closed_problem(2, 6, m);
        const MixtureState s = init_decomposition(testing_support::mixed_density(p.grid(), m.n_species()), p);
        EXPECT_LE(constraint_defect(m, s.u, Exec::Serial), 1e-14);
    }
}

TEST(InitDecomposition, VacuumCellIsNamed) {
    const CoupledProblem p = closed_problem(1, 8, linear_model({1.0, 1.0}));
    SpeciesField rho(p.grid(), 2, 1.0);
    rho.at(5, 0) = 0.0;
    rho.at(5, 1) = 0.0;
    try {
        init_decomposition(rho, p);
        FAIL() << "expected a vacuum error";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("cell 5"), std::string::npos) << e.what();
    }
}

TEST(DecomposedStep, SingleSpeciesReproducesParabolicSolver) {
    for (TransportScheme scheme : {TransportScheme::Conservative, TransportScheme::SemiLagrangian}) {
        CoupledProblem p = closed_problem(1, 64, linear_model({1.0}, 2.0));
        p.options.transport = scheme;
        const SpeciesField rho0 = testing_support::striped_density(p.grid(), 1);
        MixtureState s = init_decomposition(rho0, p);
        ParabolicState ps = make_parabolic_state(p.parabolic, s.w);
        for (int k = 0; k < 20; ++k) {
            s = step_decomposed(s, 1e-3, p);
            ps = step_implicit(ps, 1e-3, p.parabolic);
            for (std::size_t c = 0; c < 64; ++c) {
                ASSERT_NEAR(s.rho.at(c, 0), ps.w[c], 1e-12);
                ASSERT_EQ(s.u.at(c, 0), 1.0);
            }
        }
    }
}

TEST(DecomposedStep, UniformStateIsFixedPoint) {
    const CoupledProblem p = closed_problem(2, 8, linear_model({1.0, 2.0}, 1.5));
    SpeciesField rho(p.grid(), 2);
    for (std::size_t c = 0; c < 64; ++c) {
        rho.at(c, 0) = 0.7;
        rho.at(c, 1) = 0.4;
    }
    MixtureState s = init_decomposition(rho, p);
    for (int k = 0; k < 5; ++k) s = step_decomposed(s, 0.1, p);
    for (std::size_t c = 0; c < 64; ++c) {
        EXPECT_DOUBLE_EQ(s.rho.at(c, 0), 0.7);
        EXPECT_DOUBLE_EQ(s.rho.at(c, 1), 0.4);
    }
}

TEST(DecomposedStep, ZeroReactionMatchesNonReactiveStep) {
    CoupledProblem plain = closed_problem(1, 48, linear_model({1.0, 1.0}, 2.0));
    CoupledProblem reactive = plain;
    reactive.reaction = ReactionField::zero(plain.model());
    MixtureState a = init_decomposition(testing_support::striped_density(plain.grid(), 2), plain);
    MixtureState b = a;
    for (int k = 0; k < 10; ++k) {
        StepInfo info;
        a = step_decomposed(a, 2e-3, plain);
        b = step_decomposed(b, 2e-3, reactive, &info);
        EXPECT_EQ(info.picard_iterations, 1);
        expect_bitwise(a.rho.values(), b.rho.values());
        expect_bitwise(a.w.values(), b.w.values());
    }
}

TEST(DecomposedStep, ExchangeReactionConvergesAndStaysNonnegative) {
    CoupledProblem p = closed_problem(1, 40, linear_model({1.0, 1.0, 1.0}, 1.5));
    p.reaction = ReactionField::exchange(p.model(), DenseMatrix{3, {0.0, 2.0, 0.0, 0.0, 0.0, 1.0, 0.5, 0.0, 0.0}});
    MixtureState s = init_decomposition(testing_support::striped_density(p.grid(), 3), p);
    const double total0 = s.w.integral();
    for (int k = 0; k < 20; ++k) {
        StepInfo info;
        s = step_decomposed(s, 5e-3, p, &info);
        EXPECT_LE(info.picard_iterations, p.options.max_picard);
        for (double v : s.u.values()) EXPECT_GE(v, -1e-12);
    }
    // Exchange conserves the total mass, so w is conserved as well.
    EXPECT_NEAR(s.w.integral(), total0, 1e-11 * total0);
}

TEST(DecomposedStep, TwoSpeciesMassConservation) {
    CoupledProblem p = closed_problem(1, 96, linear_model({1.0, 1.0}, 2.0));
    MixtureState s = init_decomposition(testing_support::striped_density(p.grid(), 2), p);
    const double m0 = s.rho.integral(0);
    const double m1 = s.rho.integral(1);
    for (int k = 0; k < 200; ++k) s = step_decomposed(s, 1e-3, p);
    EXPECT_NEAR(s.rho.integral(0), m0, 1e-10 * m0);
    EXPECT_NEAR(s.rho.integral(1), m1, 1e-10 * m1);
}

TEST(DecomposedStep, ReconstructionMatchesW) {
    CoupledProblem p = closed_problem(2, 16, number_model({1.0, 2.0, 4.0}, VolumeModel::PowerMean, 1.5, {}, 2.0));
    MixtureState s = init_decomposition(testing_support::mixed_density(p.grid(), 3), p);
    for (int k = 0; k < 10; ++k) {
        s = step_decomposed(s, 2e-3, p);
        for (std::size_t c = 0; c < s.w.size(); ++c)
            EXPECT_NEAR(eval_lambda(p.model(), s.rho.cell(c)), s.w[c], 1e-8 * s.w[c]);
    }
}

TEST(DecomposedStep, SerialAndParallelAgreeBitwise) {
    for (TransportScheme scheme : {TransportScheme::Conservative, TransportScheme::SemiLagrangian}) {
        CoupledProblem ps = closed_problem(2, 40, linear_model({1.0, 1.0, 1.0}, 2.0), Exec::Serial);
        CoupledProblem pp = closed_problem(2, 40, linear_model({1.0, 1.0, 1.0}, 2.0), Exec::Parallel);
        ps.options.transport = pp.options.transport = scheme;
        MixtureState a = init_decomposition(testing_support::striped_density(ps.grid(), 3), ps);
        MixtureState b = init_decomposition(testing_support::striped_density(pp.grid(), 3), pp);
        for (int k = 0; k < 4; ++k) {
            a = step_decomposed(a, 2e-3, ps);
            b = step_decomposed(b, 2e-3, pp);
        }
        expect_bitwise(a.rho.values(), b.rho.values());
        EXPECT_EQ(measure(a, ps).free_energy, measure(b, pp).free_energy);
        EXPECT_EQ(dissipation_rate(a.w, ps), dissipation_rate(b.w, pp));
    }
}

TEST(DirectSolver, UniformIsUnchangedAndCflIsEnforced) {
    const CoupledProblem p = closed_problem(1, 32, linear_model({1.0, 1.0}, 2.0));
    const SpeciesField uniform(p.grid(), 2, 0.8);
    const SpeciesField next = step_direct(uniform, direct_stable_dt(uniform, p), p);
    for (double v : next.values()) EXPECT_DOUBLE_EQ(v, 0.8);
    const SpeciesField rho = testing_support::striped_density(p.grid(), 2);
    EXPECT_THROW(step_direct(rho, 2.0 * direct_stable_dt(rho, p), p), DomainError);
}

TEST(DirectSolver, SingleSpeciesAgreesWithParabolicSolver) {
    const CoupledProblem p = closed_problem(1, 256, linear_model({1.0}, 1.0));
    SpeciesField rho(p.grid(), 1);
    for (std::size_t c = 0; c < 256; ++c) {
        const double x = p.grid().center(c)[0];
        rho.at(c, 0) = 1.0 + 0.5 * std::cos(2.0 * 3.141592653589793 * x);
    }
    const double T = 0.01;
    const SpeciesField direct = advance_direct(rho, T, p);
    ParabolicState ps = make_parabolic_state(p.parabolic, rho.component(0));
    for (int k = 0; k < 100; ++k) ps = step_implicit(ps, T / 100.0, p.parabolic);
    double gap = 0.0;
    for (std::size_t c = 0; c < 256; ++c) gap = std::max(gap, std::abs(direct.at(c, 0) - ps.w[c]));
    EXPECT_LE(gap, 1e-3);
}

TEST(DirectSolver, SerialAndParallelAgreeBitwise) {
    const CoupledProblem ps = closed_problem(2, 32, linear_model({1.0, 1.0}, 2.0), Exec::Serial);
    const CoupledProblem pp = closed_problem(2, 32, linear_model({1.0, 1.0}, 2.0), Exec::Parallel);
    const SpeciesField rho = testing_support::striped_density(ps.grid(), 2);
    expect_bitwise(advance_direct(rho, 1e-3, ps).values(), advance_direct(rho, 1e-3, pp).values());
}

TEST(Simulation, ZeroFinalTimeKeepsInitialState) {
    CoupledProblem p = closed_problem(1, 16, linear_model({1.0, 1.0}));
    const MixtureState init = init_decomposition(testing_support::striped_density(p.grid(), 2), p);
    Simulation sim(p, init, {0.0, 0.1, 0.0, 5});
    sim.run();
    EXPECT_TRUE(sim.log().empty());
    EXPECT_EQ(sim.steps(), 0u);
    expect_bitwise(sim.state().rho.values(), init.rho.values());
}

TEST(Simulation, RestartIsBitwiseIdentical) {
    CoupledProblem p = closed_problem(1, 32, linear_model({1.0, 1.0}, 2.0));
    const MixtureState init = init_decomposition(testing_support::striped_density(p.grid(), 2), p);
    const TimeControl tc{0.02, 1e-3, 0.0, 5};
    Simulation whole(p, init, tc);
    whole.run();
    Simulation split(p, init, tc);
    split.advance_to(0.01);
    split.advance_to(0.02);
    EXPECT_EQ(whole.steps(), split.steps());
    EXPECT_EQ(whole.state().t, split.state().t);
    expect_bitwise(whole.state().rho.values(), split.state().rho.values());
}

TEST(Simulation, HalvesStepOnSolverFailure) {
    CoupledProblem p = closed_problem(1, 64, linear_model({1.0}, 2.0));
    p.options.max_iters = 6;
    p.sync_options();
    const MixtureState init = init_decomposition(testing_support::striped_density(p.grid(), 1, 5.0), p);
    Simulation sim(p, init, {0.2, 0.05, 0.0, 5});
    sim.run();
    EXPECT_NEAR(sim.state().t, 0.2, 1e-12);
    double smallest = 1.0;
    for (const StepRecord& r : sim.log().records()) smallest = std::min(smallest, r.dt);
    EXPECT_LT(smallest, 0.05);
    EXPECT_EQ(sim.current_dt(), 0.05);  // restored after enough successes

    Simulation hopeless(p, init, {0.2, 0.05, 0.05, 5});
    EXPECT_THROW(hopeless.run(), SolverError);
}

TEST(Simulation, FreeEnergyDecaysAndDissipationIsNonnegative) {
    for (int dim : {1, 2}) {
        CoupledProblem p = closed_problem(dim, dim == 1 ? 64 : 20, linear_model({1.0, 2.0}, 1.5));
        const MixtureState init = init_decomposition(testing_support::striped_density(p.grid(), 2), p);
        Simulation sim(p, init, {0.05, 1e-3, 0.0, 5});
        double prev = total_free_energy(init.rho, p.model(), Exec::Serial);
        sim.run([&](const MixtureState&, const StepRecord& r) {
            EXPECT_LE(r.free_energy, prev + 1e-12 * std::abs(prev));
            EXPECT_GE(r.dissipation, 0.0);
            prev = r.free_energy;
        });
    }
}

TEST(Simulation, UniformRunHasConstantMassesAndNoDissipation) {
    CoupledProblem p = closed_problem(1, 16, linear_model({1.0, 1.0}));
    const MixtureState init = init_decomposition(SpeciesField(p.grid(), 2, 0.5), p);
    Simulation sim(p, init, {0.01, 1e-3, 0.0, 5});
    sim.run();
    for (const StepRecord& r : sim.log().records()) {
        EXPECT_NEAR(r.masses[0], 0.5, 1e-14);
        EXPECT_NEAR(r.dissipation, 0.0, 1e-14);
    }
}
