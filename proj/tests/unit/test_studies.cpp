#include "mixflow/error.hpp"
#include "mixflow/studies.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mixflow;

TEST(Barenblatt, ProfileConservesMassAndSolvesEquation) {
    const double m = 3.0;
    auto mass = [&](double t) {
        double s = 0.0;
        const double dx = 1e-4;
        for (double x = -5.0; x < 5.0; x += dx) s += barenblatt_profile(x + dx / 2, t, m, 1.0) * dx;
        return s;
    };
    EXPECT_NEAR(mass(0.5), mass(2.0), 1e-6);
    // Interior point: dw/dt against d^2(w^m)/dx^2 by central differences.
    const double x = 0.1, t = 1.0, h = 1e-4;
    const double wt = (barenblatt_profile(x, t + h, m, 1.0) - barenblatt_profile(x, t - h, m, 1.0)) / (2 * h);
    auto wm = [&](double y) { return std::pow(barenblatt_profile(y, t, m, 1.0), m); };
    const double lap = (wm(x + h) - 2 * wm(x) + wm(x - h)) / (h * h);
    EXPECT_NEAR(wt, lap, 1e-5);
    EXPECT_EQ(barenblatt_profile(50.0, 1.0, m, 1.0), 0.0);
}

TEST(Studies, BarenblattOrderIsFirst) {
    const SimulationConfig cfg = load_config(testing_support::source_path("configs/barenblatt.ini"));
    const StudyResult r = run_study(cfg, "barenblatt", {64, 128, 256});
    ASSERT_TRUE(r.valid) << r.message;
    for (std::size_t k = 1; k < r.levels.size(); ++k) {
        EXPECT_GE(r.levels[k].order, 0.8);
        EXPECT_LE(r.levels[k].order, 1.5);
    }
}

TEST(Studies, BarenblattFlagsSupportAtBoundary) {
    SimulationConfig cfg = load_config(testing_support::source_path("configs/barenblatt.ini"));
    cfg.grid.origin[0] = -0.6;
    cfg.grid.length[0] = 1.2;
    cfg.grid.spacing[0] = 1.2 / static_cast<double>(cfg.grid.cells[0]);
    const StudyResult r = run_study(cfg, "barenblatt", {64});
    EXPECT_FALSE(r.valid);
    EXPECT_NE(r.message.find("support"), std::string::npos);
}

TEST(Studies, TranslationIsSecondOrder) {
    const SimulationConfig cfg = load_config(testing_support::source_path("configs/translation.ini"));
    const StudyResult r = run_study(cfg, "translation", {64, 128, 256});
    for (std::size_t k = 1; k < r.levels.size(); ++k) {
        EXPECT_GE(r.levels[k].order, 1.6);
        EXPECT_LE(r.levels[k].order, 2.4);
    }
}

TEST(Studies, OracleGapShrinks) {
    const SimulationConfig cfg = load_config(testing_support::source_path("configs/oracle_compare.ini"));
    const StudyResult r = run_study(cfg, "oracle_compare", {64, 128, 256});
    for (std::size_t k = 1; k < r.levels.size(); ++k) EXPECT_GE(r.levels[k].ratio, 1.3);
}

TEST(Studies, UnknownStudyIsConfigError) {
    const SimulationConfig cfg = load_config(testing_support::source_path("configs/translation.ini"));
    EXPECT_THROW(run_study(cfg, "heat", {64}), ConfigError);
    EXPECT_THROW(run_study(cfg, "translation", {}), ConfigError);
}
