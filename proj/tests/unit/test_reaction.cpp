#include "mixflow/reaction.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace mixflow;
using testing_support::linear_model;
using testing_support::number_model;

TEST(Reaction, ExchangeConservesTotalMass) {
    const MixtureModel m = linear_model({1.0, 1.0, 1.0});
    const ReactionField r = ReactionField::exchange(m, DenseMatrix{3, {0.0, 1.0, 2.0, 0.5, 0.0, 0.1, 0.0, 3.0, 0.0}});
    const std::vector<double> rho{0.3, 1.2, 0.8};
    std::vector<double> out(3);
    r.rate(rho, out);
    EXPECT_NEAR(std::accumulate(out.begin(), out.end(), 0.0), 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(out[0], 0.5 * 1.2 - 3.0 * 0.3);
}

TEST(Reaction, ZeroFieldHasNoSources) {
    const MixtureModel m = linear_model({1.0, 2.0});
    const ReactionField r = ReactionField::zero(m);
    const std::vector<double> u{0.4, 0.3};
    EXPECT_EQ(r.f(1.5, u), 0.0);
    std::vector<double> g(2);
    r.g_tilde(1.5, u, g);
    EXPECT_EQ(g[0], 0.0);
    EXPECT_EQ(g[1], 0.0);
}

TEST(Reaction, SourceIsRateDotGradient) {
    const MixtureModel m = linear_model({1.0, 2.0});
    const ReactionField r = ReactionField::logistic(m, {1.0, 0.5}, 2.0);
    const double w = 1.3;
    const std::vector<double> u{0.4, 0.3};
    const std::vector<double> rho{w * u[0], w * u[1]};
    std::vector<double> rate(2);
    r.rate(rho, rate);
    EXPECT_NEAR(r.f(w, u), rate[0] * 1.0 + rate[1] * 2.0, 1e-15);
}

TEST(Reaction, OrthogonalityAcrossModels) {
    for (const MixtureModel& m : testing_support::model_zoo()) {
        const std::size_t n = m.n_species();
        std::vector<double> gamma(n);
        for (std::size_t i = 0; i < n; ++i) gamma[i] = 0.5 + static_cast<double>(i);
        const ReactionField r = ReactionField::logistic(m, gamma, 1.5);
        const ReactionCheck chk = check_reaction(r, 0.1, 5.0, 500, 21);
        EXPECT_TRUE(chk.quasi_positive) << chk.detail;
        EXPECT_LE(chk.worst_orthogonality, 1e-10);
        EXPECT_EQ(chk.samples, 500u);
    }
}

TEST(Reaction, DetectsQuasiPositivityViolation) {
    const MixtureModel m = linear_model({1.0, 1.0});
    const ReactionField bad(m, [](std::span<const double>, std::span<double> out) {
        out[0] = -0.1;
        out[1] = 0.1;
    }, "drain");
    const ReactionCheck chk = check_reaction(bad, 0.5, 2.0, 200, 3);
    EXPECT_FALSE(chk.quasi_positive);
    EXPECT_LT(chk.worst_quasi, 0.0);
    EXPECT_FALSE(chk.detail.empty());
    const ReactionField neg = ReactionField::exchange(m, DenseMatrix{2, {0.0, -1.0, 0.0, 0.0}});
    EXPECT_FALSE(check_reaction(neg, 0.5, 2.0, 200, 3).quasi_positive);
}

TEST(Reaction, LogisticSourceBarrier) {
    const MixtureModel m = number_model({1.0, 2.0}, VolumeModel::PowerMean, 1.0, {}, 2.0);
    const ReactionField r = ReactionField::logistic(m, {1.0, 2.0}, 3.0);
    EXPECT_TRUE(check_source_barrier(r, 3.0, 3.0, 300, 5).holds);
    const SourceBarrierCheck wrong = check_source_barrier(r, 4.0, 2.0, 300, 5);
    EXPECT_FALSE(wrong.holds);
}

TEST(Reaction, SampledFractionsSatisfyConstraint) {
    for (const MixtureModel& m : testing_support::model_zoo()) {
        std::uint64_t state = 99;
        std::vector<double> u(m.n_species());
        for (int k = 0; k < 50; ++k) {
            const int zeroed = sample_fractions(m, state, u);
            EXPECT_NEAR(eval_lambda(m, u), 1.0, 1e-13);
            if (zeroed >= 0) EXPECT_EQ(u[static_cast<std::size_t>(zeroed)], 0.0);
            for (double v : u) EXPECT_GE(v, 0.0);
        }
    }
}
