#pragma once

#include "mixflow/exec.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mixflow {

enum class BoundaryKind { NoPenetration, DirichletPressure };

/// Outer faces of the box, in the order used by all per-face arrays.
enum class Side : int { XLo = 0, XHi = 1, YLo = 2, YHi = 3 };

using Point = std::array<double, 2>;

std::string to_string(Side side);
std::string to_string(BoundaryKind kind);

/// Uniform cell-centered grid on a 1D interval or 2D box.
///
/// Cells are numbered c = i + nx*j. x-faces are numbered i + (nx+1)*j with face
/// i lying between cells i-1 and i; y-faces are numbered i + nx*j with face j
/// between rows j-1 and j. In 1D ny = 1 and there are no y-faces.
struct StructuredGrid {
    int dim = 1;
    std::array<std::size_t, 2> cells{2, 1};
    Point origin{0.0, 0.0};
    std::array<double, 2> length{1.0, 1.0};
    std::array<double, 2> spacing{0.5, 1.0};
    std::array<BoundaryKind, 4> boundary{BoundaryKind::NoPenetration, BoundaryKind::NoPenetration,
                                         BoundaryKind::NoPenetration, BoundaryKind::NoPenetration};

    static StructuredGrid line(std::size_t nx, double x0, double lx,
                               BoundaryKind bc = BoundaryKind::NoPenetration);
    static StructuredGrid box(std::size_t nx, std::size_t ny, Point origin,
                              std::array<double, 2> length,
                              BoundaryKind bc = BoundaryKind::NoPenetration);

    void validate() const;

    std::size_t nx() const noexcept { return cells[0]; }
    std::size_t ny() const noexcept { return dim == 2 ? cells[1] : 1; }
    std::size_t num_cells() const noexcept { return nx() * ny(); }
    std::size_t num_x_faces() const noexcept { return (nx() + 1) * ny(); }
    std::size_t num_y_faces() const noexcept { return dim == 2 ? nx() * (ny() + 1) : 0; }
    std::size_t index(std::size_t i, std::size_t j = 0) const noexcept { return i + nx() * j; }
    std::size_t x_face(std::size_t i, std::size_t j = 0) const noexcept { return i + (nx() + 1) * j; }
    std::size_t y_face(std::size_t i, std::size_t j) const noexcept { return i + nx() * j; }

    /// Cell volume h_x (1D) or h_x h_y (2D).
    double cell_volume() const noexcept { return dim == 2 ? spacing[0] * spacing[1] : spacing[0]; }
    Point center(std::size_t c) const noexcept;
    BoundaryKind side(Side s) const noexcept { return boundary[static_cast<int>(s)]; }
    bool all_no_penetration() const noexcept;
    bool has_dirichlet() const noexcept { return !all_no_penetration(); }
    bool contains(const Point& p) const noexcept;
    Point clamp(const Point& p) const noexcept;

    bool operator==(const StructuredGrid&) const = default;
};

class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(const StructuredGrid& grid, double value = 0.0)
        : grid_(grid), values_(grid.num_cells(), value) {}
    ScalarField(const StructuredGrid& grid, std::vector<double> values);

    const StructuredGrid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t c) const { return values_[c]; }
    double& operator[](std::size_t c) { return values_[c]; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    double min() const;
    double max() const;
    /// Sum of value * cell volume.
    double integral() const;

private:
    StructuredGrid grid_;
    std::vector<double> values_;
};

/// N values per cell, stored cell-major: values[c*N + i].
class SpeciesField {
public:
    SpeciesField() = default;
    SpeciesField(const StructuredGrid& grid, std::size_t n_species, double value = 0.0)
        : grid_(grid), n_(n_species), values_(grid.num_cells() * n_species, value) {}
    SpeciesField(const StructuredGrid& grid, std::size_t n_species, std::vector<double> values);

    const StructuredGrid& grid() const noexcept { return grid_; }
    std::size_t n_species() const noexcept { return n_; }
    std::size_t num_cells() const noexcept { return grid_.num_cells(); }
    double at(std::size_t c, std::size_t i) const { return values_[c * n_ + i]; }
    double& at(std::size_t c, std::size_t i) { return values_[c * n_ + i]; }
    std::span<const double> cell(std::size_t c) const { return {values_.data() + c * n_, n_}; }
    std::span<double> cell(std::size_t c) { return {values_.data() + c * n_, n_}; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    /// Integral of species i over the domain.
    double integral(std::size_t i) const;
    ScalarField component(std::size_t i) const;

private:
    StructuredGrid grid_;
    std::size_t n_ = 0;
    std::vector<double> values_;
};

/// Normal components on x-faces and (2D) y-faces.
struct FaceVectorField {
    StructuredGrid grid;
    std::vector<double> x;
    std::vector<double> y;

    FaceVectorField() = default;
    explicit FaceVectorField(const StructuredGrid& g)
        : grid(g), x(g.num_x_faces(), 0.0), y(g.num_y_faces(), 0.0) {}

    /// Sets the normal component on every NoPenetration boundary face to 0.
    void enforce_no_penetration();
    /// Largest |value| over all faces.
    double max_abs() const;
};

/// Boundary values used on DirichletPressure faces, one constant per side.
using SideValues = std::array<double, 4>;

/// Two-point gradient on interior faces; 0 on NoPenetration faces; one-sided
/// difference against `boundary` (half-cell distance) on Dirichlet faces.
FaceVectorField face_gradient(const ScalarField& f, const SideValues* boundary = nullptr);

/// Per-cell net outflow divided by cell width, summed over axes.
ScalarField divergence(const FaceVectorField& flux);

/// Bilinear (linear in 1D) interpolation weights of cell-centered data.
/// Coordinates are clamped into the hull of cell centers, so all weights are
/// nonnegative and sum to one.
struct InterpolationStencil {
    std::array<std::size_t, 4> cell{};
    std::array<double, 4> weight{};
    int count = 0;
};

InterpolationStencil interpolation_stencil(const StructuredGrid& grid, const Point& p);
double sample(const ScalarField& f, const Point& p);
void sample(const SpeciesField& f, const Point& p, std::span<double> out);

}  // namespace mixflow
