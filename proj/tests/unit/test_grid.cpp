#include "mixflow/grid.hpp"
#include "mixflow/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mixflow;

namespace {

ScalarField from_function(const StructuredGrid& g, double (*fn)(const Point&)) {
    ScalarField f(g);
    for (std::size_t c = 0; c < g.num_cells(); ++c) f[c] = fn(g.center(c));
    return f;
}

double affine(const Point& x) { return 0.5 + 2.0 * x[0] - 1.25 * x[1]; }

}  // namespace

TEST(Grid, Numbering) {
    const StructuredGrid g = StructuredGrid::box(4, 3, {0.0, 0.0}, {2.0, 1.5});
    EXPECT_EQ(g.num_cells(), 12u);
    EXPECT_EQ(g.num_x_faces(), 15u);
    EXPECT_EQ(g.num_y_faces(), 16u);
    EXPECT_EQ(g.index(1, 2), 9u);
    EXPECT_EQ(g.x_face(4, 1), 9u);
    EXPECT_EQ(g.y_face(2, 3), 14u);
    const Point c = g.center(g.index(1, 2));
    EXPECT_DOUBLE_EQ(c[0], 0.75);
    EXPECT_DOUBLE_EQ(c[1], 1.25);
    EXPECT_DOUBLE_EQ(g.cell_volume(), 0.25);
}

TEST(FaceGradient, ConstantIsZero) {
    const StructuredGrid g = StructuredGrid::box(5, 4, {0.0, 0.0}, {1.0, 1.0});
    const FaceVectorField grad = face_gradient(ScalarField(g, 3.7));
    EXPECT_EQ(grad.max_abs(), 0.0);
}

TEST(FaceGradient, ExactForLinear) {
    const StructuredGrid g = StructuredGrid::line(10, 0.0, 1.0);
    ScalarField f(g);
    for (std::size_t c = 0; c < g.num_cells(); ++c) f[c] = g.center(c)[0];
    const FaceVectorField grad = face_gradient(f);
    for (std::size_t i = 1; i < g.nx(); ++i) EXPECT_NEAR(grad.x[i], 1.0, 1e-13);
    EXPECT_EQ(grad.x[0], 0.0);
    EXPECT_EQ(grad.x[g.nx()], 0.0);
}

TEST(FaceGradient, SymmetricBumpGivesAntisymmetricGradient) {
    const StructuredGrid g = StructuredGrid::line(16, 0.0, 1.0);
    ScalarField f(g);
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        const double x = g.center(c)[0];
        f[c] = x * (1.0 - x);
    }
    const FaceVectorField grad = face_gradient(f);
    for (std::size_t i = 0; i <= g.nx(); ++i) EXPECT_NEAR(grad.x[i], -grad.x[g.nx() - i], 1e-14);
}

TEST(FaceGradient, DirichletUsesHalfCell) {
    const StructuredGrid g = StructuredGrid::line(4, 0.0, 1.0, BoundaryKind::DirichletPressure);
    const ScalarField f(g, 1.0);
    const SideValues b{0.0, 2.0, 0.0, 0.0};
    const FaceVectorField grad = face_gradient(f, &b);
    EXPECT_DOUBLE_EQ(grad.x[0], 1.0 / 0.125);
    EXPECT_DOUBLE_EQ(grad.x[4], 1.0 / 0.125);
}

TEST(Divergence, ZeroFluxAndLinearGradient) {
    const StructuredGrid g = StructuredGrid::box(6, 5, {0.0, 0.0}, {1.0, 1.0});
    const ScalarField zero = divergence(FaceVectorField(g));
    EXPECT_EQ(zero.max(), 0.0);
    EXPECT_EQ(zero.min(), 0.0);
    const ScalarField d = divergence(face_gradient(from_function(g, affine)));
    for (std::size_t j = 1; j + 1 < g.ny(); ++j)
        for (std::size_t i = 1; i + 1 < g.nx(); ++i) EXPECT_NEAR(d[g.index(i, j)], 0.0, 1e-12);
}

TEST(Divergence, TelescopesToBoundaryFlux) {
    const StructuredGrid g = StructuredGrid::box(7, 6, {0.0, 0.0}, {1.0, 2.0});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    FaceVectorField F(g);
    for (double& v : F.x) v = d(rng);
    for (double& v : F.y) v = d(rng);
    double boundary = 0.0;
    for (std::size_t j = 0; j < g.ny(); ++j)
        boundary += (F.x[g.x_face(g.nx(), j)] - F.x[g.x_face(0, j)]) * g.spacing[1];
    for (std::size_t i = 0; i < g.nx(); ++i)
        boundary += (F.y[g.y_face(i, g.ny())] - F.y[g.y_face(i, 0)]) * g.spacing[0];
    EXPECT_NEAR(divergence(F).integral(), boundary, 1e-12);
    F.enforce_no_penetration();
    EXPECT_NEAR(divergence(F).integral(), 0.0, 1e-12 * F.max_abs());
}

TEST(Divergence, AdjointnessOverRandomFields) {
    EXPECT_LE(adjointness_residual(StructuredGrid::line(33, 0.0, 1.0), 50, 1), 1e-12);
    EXPECT_LE(adjointness_residual(StructuredGrid::box(9, 7, {0.0, 0.0}, {1.0, 0.5}), 50, 2), 1e-12);
}

TEST(Sample, CellCenterAffineAndClamp) {
    const StructuredGrid g = StructuredGrid::box(8, 6, {0.0, 0.0}, {1.0, 1.0});
    const ScalarField f = from_function(g, affine);
    EXPECT_DOUBLE_EQ(sample(f, g.center(13)), f[13]);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> ux(g.spacing[0] / 2, 1.0 - g.spacing[0] / 2);
    std::uniform_real_distribution<double> uy(g.spacing[1] / 2, 1.0 - g.spacing[1] / 2);
    for (int k = 0; k < 100; ++k) {
        const Point p{ux(rng), uy(rng)};
        EXPECT_NEAR(sample(f, p), affine(p), 1e-13);
    }
    const Point outside{1.7, 0.5};
    const Point nearest{1.0 - g.spacing[0] / 2, 0.5};
    EXPECT_NEAR(sample(f, outside), sample(f, nearest), 1e-15);
    const ScalarField constant(g, 2.5);
    EXPECT_DOUBLE_EQ(sample(constant, Point{0.01, 0.99}), 2.5);
}

TEST(Sample, StencilWeightsAreConvex) {
    const StructuredGrid g = StructuredGrid::box(5, 5, {0.0, 0.0}, {1.0, 1.0});
    for (const Point p : {Point{0.0, 0.0}, Point{0.33, 0.71}, Point{1.0, 0.5}, Point{-3.0, 9.0}}) {
        const InterpolationStencil s = interpolation_stencil(g, p);
        double sum = 0.0;
        for (int k = 0; k < s.count; ++k) {
            EXPECT_GE(s.weight[k], 0.0);
            sum += s.weight[k];
        }
        EXPECT_NEAR(sum, 1.0, 1e-15);
    }
}

TEST(Grid, ValidateRejectsBadSizes) {
    StructuredGrid g = StructuredGrid::line(4, 0.0, 1.0);
    g.length[0] = -1.0;
    EXPECT_ANY_THROW(g.validate());
}
