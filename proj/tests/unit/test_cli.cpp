#include "test_support.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using testing_support::read_file;
using testing_support::run_cli;
using testing_support::temp_dir;
using testing_support::write_file;

namespace {

const char* kSmallRun = R"(
[grid]
dim = 1
cells = 32
[model]
species = 2
pressure.alpha = 2
[initial]
kind = blocks
splits = 0.5
block_rho = 1, 0, 0, 1
modulation.amplitude = 1
modulation.center = 0.3
modulation.width = 0.1
[time]
T = 0.01
dt = 1e-3
output_every = 5
)";

const char* kPowerMeanOff = R"(
[grid]
dim = 1
cells = 32
[model]
species = 2
masses = 1, 3
extension = power_mean
extension.alpha_h = 2
[initial]
kind = gaussian
background = 0.5, 0.5
amplitude = 1, 0
center = 0.3
width = 0.1
[time]
T = 0.02
dt = 1e-3
[solver]
constraint = off
)";

std::string quote(const std::string& s) { return "'" + s + "'"; }

}  // namespace

TEST(Cli, RunWritesOutputs) {
    const std::string dir = temp_dir("run");
    const std::string cfg = write_file(dir, "small.ini", kSmallRun);
    const auto r = run_cli("run " + quote(cfg) + " --out " + quote(dir + "/out") + " --vtk");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    for (const char* f : {"diagnostics.csv", "fields_0.csv", "fields_5.csv", "fields_10.csv", "fields_10.vtk"})
        EXPECT_TRUE(std::filesystem::exists(dir + "/out/" + f)) << f;
    const std::string diag = read_file(dir + "/out/diagnostics.csv");
    EXPECT_EQ(std::count(diag.begin(), diag.end(), '\n'), 11);
    std::filesystem::remove_all(dir);
}

TEST(Cli, EnvironmentOverridesOutputDirectory) {
    const std::string dir = temp_dir("env");
    const std::string cfg = write_file(dir, "small.ini", kSmallRun);
    const auto r = run_cli("run " + quote(cfg) + " --out " + quote(dir + "/ignored"), "MIXFLOW_OUT=" + quote(dir + "/env"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_TRUE(std::filesystem::exists(dir + "/env/diagnostics.csv"));
    EXPECT_FALSE(std::filesystem::exists(dir + "/ignored"));
    std::filesystem::remove_all(dir);
}

TEST(Cli, RerunIsByteIdentical) {
    const std::string dir = temp_dir("rerun");
    const std::string cfg = write_file(dir, "small.ini", kSmallRun);
    ASSERT_EQ(run_cli("run " + quote(cfg) + " --out " + quote(dir + "/a")).exit_code, 0);
    ASSERT_EQ(run_cli("run " + quote(cfg) + " --out " + quote(dir + "/b")).exit_code, 0);
    for (const char* f : {"diagnostics.csv", "fields_10.csv"})
        EXPECT_EQ(read_file(dir + "/a/" + f), read_file(dir + "/b/" + f)) << f;
    std::filesystem::remove_all(dir);
}

TEST(Cli, ZeroFinalTimeWritesInitialSnapshotOnly) {
    std::string text = kSmallRun;
    text.replace(text.find("T = 0.01"), 8, "T = 0");
    const std::string dir = temp_dir("t0");
    const std::string cfg = write_file(dir, "t0.ini", text);
    ASSERT_EQ(run_cli("run " + quote(cfg) + " --out " + quote(dir + "/out")).exit_code, 0);
    std::size_t snapshots = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir + "/out"))
        snapshots += e.path().filename().string().rfind("fields_", 0) == 0;
    EXPECT_EQ(snapshots, 1u);
    const std::string diag = read_file(dir + "/out/diagnostics.csv");
    EXPECT_EQ(std::count(diag.begin(), diag.end(), '\n'), 1);
    std::filesystem::remove_all(dir);
}

TEST(Cli, ConfigErrorsExitTwoWithJsonLine) {
    const std::string dir = temp_dir("cfgerr");
    const std::string cfg = write_file(dir, "bad.ini", "[grid]\ndim = 1\ncells = 8\nbogus = 1\n");
    const auto r = run_cli("run " + quote(cfg));
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_EQ(r.err.rfind("{\"error\":\"config\",\"exit_code\":2,", 0), 0u) << r.err;
    EXPECT_NE(r.err.find("unknown key 'grid.bogus'"), std::string::npos) << r.err;
    EXPECT_EQ(run_cli("run " + quote(dir + "/missing.ini")).exit_code, 2);
    EXPECT_EQ(run_cli("frobnicate").exit_code, 2);
    EXPECT_EQ(run_cli("run").exit_code, 2);
    std::filesystem::remove_all(dir);
}

TEST(Cli, SolverFailureExitsThree) {
    const std::string dir = temp_dir("solver");
    const std::string cfg = write_file(dir, "hard.ini", R"(
[grid]
dim = 1
cells = 64
[model]
species = 1
pressure.alpha = 3
[initial]
kind = gaussian
background = 0.05
amplitude = 20
center = 0.5
width = 0.05
[time]
T = 1
dt = 1
dt_min = 1
[solver]
max_iters = 1
)");
    const auto r = run_cli("run " + quote(cfg) + " --out " + quote(dir + "/out"));
    EXPECT_EQ(r.exit_code, 3);
    EXPECT_EQ(r.err.rfind("{\"error\":\"solver\",\"exit_code\":3,", 0), 0u) << r.err;
    std::filesystem::remove_all(dir);
}

TEST(Cli, VerifyDemosPass) {
    for (const char* name : {"configs/demo_1d.ini", "configs/demo_2d.ini"}) {
        const auto r = run_cli("verify " + quote(testing_support::source_path(name)));
        EXPECT_EQ(r.exit_code, 0) << name << '\n' << r.out;
        EXPECT_NE(r.out.find("PASS homogeneity"), std::string::npos);
        EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
    }
}

TEST(Cli, NonQuasiPositiveRatesAreRejected) {
    const std::string dir = temp_dir("qp");
    std::string text = kSmallRun;
    text += "[reaction]\nkind = exchange\nrates = 0, -1, 1, 0\n";
    const std::string cfg = write_file(dir, "qp.ini", text);
    const auto run = run_cli("run " + quote(cfg) + " --out " + quote(dir + "/out"));
    EXPECT_EQ(run.exit_code, 2);
    EXPECT_NE(run.err.find("quasi-positive"), std::string::npos) << run.err;
    const auto ver = run_cli("verify " + quote(cfg));
    EXPECT_EQ(ver.exit_code, 4);
    EXPECT_NE(ver.out.find("FAIL quasi-positivity"), std::string::npos) << ver.out;
    std::filesystem::remove_all(dir);
}

TEST(Cli, ConstraintDriftNeedsAllowDrift) {
    const std::string dir = temp_dir("drift");
    const std::string cfg = write_file(dir, "off.ini", kPowerMeanOff);
    const auto strict = run_cli("verify " + quote(cfg));
    EXPECT_EQ(strict.exit_code, 4) << strict.out;
    EXPECT_NE(strict.out.find("constraint"), std::string::npos);
    const auto relaxed = run_cli("verify --allow-drift " + quote(cfg));
    EXPECT_EQ(relaxed.exit_code, 0) << relaxed.out;
    std::filesystem::remove_all(dir);
}

TEST(Cli, ConvergePrintsTable) {
    const auto r = run_cli("converge " + quote(testing_support::source_path("configs/translation.ini")) + " --levels 32,64");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("cells,h,dt,error,order,ratio"), std::string::npos);
    EXPECT_NE(r.out.find("\n64,"), std::string::npos);
    const auto bad = run_cli("converge " + quote(testing_support::source_path("configs/translation.ini")) + " --study heat");
    EXPECT_EQ(bad.exit_code, 2);
}
