#include "mixflow/config.hpp"
#include "mixflow/error.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace mixflow;

namespace {

const char* kMinimal = R"(
[grid]
dim = 1
cells = 16

[model]
species = 1

[initial]
kind = uniform
rho = 1

[time]
T = 0.1
dt = 0.01
)";

std::string config_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST(Config, MinimalConfigGetsDefaults) {
    const SimulationConfig cfg = parse_config(kMinimal);
    EXPECT_EQ(cfg.grid.dim, 1);
    EXPECT_EQ(cfg.grid.nx(), 16u);
    EXPECT_DOUBLE_EQ(cfg.model.s0, 1.0);
    EXPECT_EQ(cfg.options.n_sub, 4);
    EXPECT_DOUBLE_EQ(cfg.options.newton_tol, 1e-10);
    EXPECT_EQ(cfg.options.constraint, ConstraintMode::ExactLinear);
    EXPECT_EQ(cfg.options.transport, TransportScheme::Conservative);
    EXPECT_TRUE(cfg.grid.all_no_penetration());
    EXPECT_DOUBLE_EQ(cfg.time.T, 0.1);
}

TEST(Config, CommentsAndWhitespace) {
    const SimulationConfig cfg = parse_config(std::string(kMinimal) + "\n# trailing comment\n[solver]\n  n_sub = 6   ; six\n");
    EXPECT_EQ(cfg.options.n_sub, 6);
}

TEST(Config, RejectsPressureExponentBelowOne) {
    std::string text = kMinimal;
    text.replace(text.find("species = 1"), 11, "species = 1\npressure.alpha = 0.5");
    const std::string e = config_error(text);
    EXPECT_TRUE(contains(e, "model.pressure.alpha")) << e;
    EXPECT_TRUE(contains(e, "0.5 < 1")) << e;
    EXPECT_TRUE(contains(e, "strictly increasing")) << e;
}

TEST(Config, DuplicateKeyReportsBothLines) {
    const std::string e = config_error("[grid]\ndim = 1\ncells = 8\ncells = 9\n[model]\nspecies = 1\n[initial]\nrho = 1\n[time]\nT = 1\ndt = 0.1\n");
    EXPECT_TRUE(contains(e, "duplicate key 'grid.cells' (lines 3 and 4)")) << e;
}

TEST(Config, UnknownKeyIsAnError) {
    const std::string e = config_error(std::string(kMinimal) + "[solver]\nnewton_tolerance = 1e-8\n");
    EXPECT_TRUE(contains(e, "unknown key 'solver.newton_tolerance'")) << e;
    const std::string s = config_error(std::string(kMinimal) + "[solvers]\nn_sub = 2\n");
    EXPECT_TRUE(contains(s, "unknown section [solvers]")) << s;
}

TEST(Config, IneffectiveKeyIsAnError) {
    std::string text = kMinimal;
    text.replace(text.find("rho = 1"), 7, "rho = 1\nwidth = 0.2");
    const std::string w = config_error(text);
    EXPECT_TRUE(contains(w, "initial.width") && contains(w, "has no effect")) << w;
}

TEST(Config, VacuumInitialDataNamesCell) {
    const std::string e = config_error(R"(
[grid]
dim = 1
cells = 4
[model]
species = 2
[initial]
kind = blocks
splits = 0.5
block_rho = 1, 0, 0, 0
[time]
T = 1
dt = 0.1
)");
    EXPECT_TRUE(contains(e, "vacuum at cell 2")) << e;
}

TEST(Config, ConstraintModeRules) {
    const std::string pm = R"(
[grid]
dim = 1
cells = 8
[model]
species = 2
masses = 1, 2
extension = power_mean
extension.alpha_h = 2
[initial]
rho = 1, 1
[time]
T = 1
dt = 0.1
)";
    EXPECT_EQ(parse_config(pm).options.constraint, ConstraintMode::Renormalize);
    const std::string e = config_error(pm + "[solver]\nconstraint = exact_linear\n");
    EXPECT_TRUE(contains(e, "exact_linear requires a linear volume extension")) << e;
    EXPECT_EQ(parse_config(pm + "[solver]\nconstraint = off\n").options.constraint, ConstraintMode::Off);
}

TEST(Config, DirichletSidesNeedPressureAndInflow) {
    const std::string base = std::string(kMinimal) + "[boundary]\nx_lo = dirichlet\n";
    const std::string e = config_error(base);
    EXPECT_TRUE(contains(e, "p0.x_lo")) << e;
    const SimulationConfig cfg = parse_config(base + "p0.x_lo = 2\ninflow.x_lo = 3\n");
    EXPECT_EQ(cfg.grid.boundary[0], BoundaryKind::DirichletPressure);
    EXPECT_DOUBLE_EQ(cfg.boundary_pressure[0], 2.0);
    ASSERT_TRUE(cfg.inflow.has(Side::XLo));
    EXPECT_DOUBLE_EQ(cfg.inflow.at(Side::XLo)[0], 1.0);  // normalized to Lambda = 1
}

TEST(Config, ReactionRatesMustBeQuasiPositive) {
    const std::string base = R"(
[grid]
dim = 1
cells = 8
[model]
species = 2
[initial]
rho = 1, 1
[time]
T = 0.1
dt = 0.01
[reaction]
kind = exchange
)";
    const SimulationConfig good = parse_config(base + "rates = 0, 1, 2, 0\n");
    EXPECT_NO_THROW(make_problem(good));
    const SimulationConfig bad = parse_config(base + "rates = 0, -1, 2, 0\n");
    try {
        make_problem(bad);
        FAIL() << "expected rejection";
    } catch (const ConfigError& e) {
        EXPECT_TRUE(contains(e.what(), "not quasi-positive")) << e.what();
    }
    EXPECT_NO_THROW(make_problem(bad, false));
}

TEST(Config, ListsEveryProblem) {
    const std::string e = config_error("[grid]\ndim = 3\n[model]\nspecies = 0\n[time]\ndt = -1\n");
    EXPECT_TRUE(contains(e, "grid.dim")) << e;
    EXPECT_TRUE(contains(e, "model.species")) << e;
    EXPECT_TRUE(contains(e, "time.dt")) << e;
}

TEST(Config, InitialDensityKinds) {
    const SimulationConfig g = parse_config(R"(
[grid]
dim = 2
cells = 10, 10
[model]
species = 2
[initial]
kind = gaussian
background = 0.5, 0.5
amplitude = 1, 0
center = 0.5, 0.5
width = 0.1
[time]
T = 0
dt = 0.1
)");
    const SpeciesField rho = make_initial_density(g);
    EXPECT_DOUBLE_EQ(rho.at(0, 1), 0.5);
    EXPECT_GT(rho.at(g.grid.index(5, 5), 0), 1.0);

    const std::string dir = testing_support::temp_dir("table");
    testing_support::write_file(dir, "rho.txt", "1 0\n0.5 0.5\n0 1\n");
    const SimulationConfig t = parse_config("[grid]\ndim = 1\ncells = 3\n[model]\nspecies = 2\n[initial]\nkind = table\nfile = rho.txt\n[time]\nT = 0\ndt = 1\n", dir);
    const SpeciesField tr = make_initial_density(t);
    EXPECT_DOUBLE_EQ(tr.at(1, 0), 0.5);
    EXPECT_DOUBLE_EQ(tr.at(2, 1), 1.0);
}

TEST(Config, DemoConfigsLoad) {
    for (const char* name : {"configs/demo_1d.ini", "configs/demo_2d.ini", "configs/barenblatt.ini",
                             "configs/oracle_compare.ini", "configs/translation.ini"}) {
        EXPECT_NO_THROW(load_config(testing_support::source_path(name))) << name;
    }
}
