#include "mixflow/output.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

using namespace mixflow;
using testing_support::closed_problem;
using testing_support::linear_model;

TEST(Output, NumbersRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0}) EXPECT_EQ(std::strtod(format_number(v).c_str(), nullptr), v);
}

TEST(Output, DiagnosticsHeaderLayout) {
    EXPECT_EQ(diagnostics_header(2),
              "step,t,dt,mass_1,mass_2,free_energy,dissipation,min_w,max_w,max_constraint_defect,newton_iters,picard_iters");
    StepRecord r;
    r.step = 3;
    r.t = 0.5;
    r.dt = 0.25;
    r.masses = {1.0, 2.0};
    const std::string row = diagnostics_row(r);
    EXPECT_EQ(row.substr(0, 22), "3,0.5,0.25,1,2,0,0,0,0");
}

TEST(Output, FieldsCsvAndVtk) {
    const CoupledProblem p = closed_problem(2, 3, linear_model({1.0, 1.0}));
    const MixtureState s = init_decomposition(SpeciesField(p.grid(), 2, 0.5), p);
    std::ostringstream csv;
    write_fields_csv(csv, s);
    const std::string text = csv.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "cell,x,y,w,p,rho_1,rho_2,u_1,u_2");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 10);
    std::ostringstream vtk;
    write_vtk(vtk, s);
    EXPECT_EQ(vtk.str().rfind("# vtk DataFile Version 3.0", 0), 0u);
    EXPECT_NE(vtk.str().find("DIMENSIONS 4 4 1"), std::string::npos);
    EXPECT_NE(vtk.str().find("CELL_DATA 9"), std::string::npos);
}

TEST(Output, ZeroTimeWritesOneSnapshot) {
    CoupledProblem p = closed_problem(1, 8, linear_model({1.0, 1.0}));
    Simulation sim(p, init_decomposition(SpeciesField(p.grid(), 2, 0.5), p), {0.0, 0.1, 0.0, 5});
    const std::string dir = testing_support::temp_dir("zero");
    run_with_output(sim, {dir, 1, true});
    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir)) files += e.path().filename().string().rfind("fields_", 0) == 0;
    EXPECT_EQ(files, 2u);  // fields_0.csv and fields_0.vtk
    const std::string diag = testing_support::read_file(dir + "/diagnostics.csv");
    EXPECT_EQ(std::count(diag.begin(), diag.end(), '\n'), 1);
    std::filesystem::remove_all(dir);
}

TEST(Output, ScheduleIncludesFinalStep) {
    CoupledProblem p = closed_problem(1, 8, linear_model({1.0, 1.0}));
    Simulation sim(p, init_decomposition(testing_support::striped_density(p.grid(), 2), p), {0.07, 0.01, 0.0, 5});
    const std::string dir = testing_support::temp_dir("sched");
    run_with_output(sim, {dir, 3, false});
    for (const char* f : {"fields_0.csv", "fields_3.csv", "fields_6.csv", "fields_7.csv"})
        EXPECT_TRUE(std::filesystem::exists(dir + "/" + f)) << f;
    EXPECT_FALSE(std::filesystem::exists(dir + "/fields_5.csv"));
    std::filesystem::remove_all(dir);
}
