#include "mixflow/grid.hpp"

#include "mixflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mixflow {

std::string to_string(Side side) {
    switch (side) {
    case Side::XLo: return "x_lo";
    case Side::XHi: return "x_hi";
    case Side::YLo: return "y_lo";
    case Side::YHi: return "y_hi";
    }
    return "?";
}

std::string to_string(BoundaryKind kind) {
    return kind == BoundaryKind::NoPenetration ? "no_penetration" : "dirichlet_pressure";
}

StructuredGrid StructuredGrid::line(std::size_t nx, double x0, double lx, BoundaryKind bc) {
    StructuredGrid g;
    g.dim = 1;
    g.cells = {nx, 1};
    g.origin = {x0, 0.0};
    g.length = {lx, 1.0};
    g.spacing = {lx / static_cast<double>(nx), 1.0};
    g.boundary = {bc, bc, BoundaryKind::NoPenetration, BoundaryKind::NoPenetration};
    g.validate();
    return g;
}

StructuredGrid StructuredGrid::box(std::size_t nx, std::size_t ny, Point origin,
                                   std::array<double, 2> length, BoundaryKind bc) {
    StructuredGrid g;
    g.dim = 2;
    g.cells = {nx, ny};
    g.origin = origin;
    g.length = length;
    g.spacing = {length[0] / static_cast<double>(nx), length[1] / static_cast<double>(ny)};
    g.boundary = {bc, bc, bc, bc};
    g.validate();
    return g;
}

void StructuredGrid::validate() const {
    if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2");
    for (int a = 0; a < dim; ++a) {
        if (cells[a] < 2) throw ConfigError("grid needs at least 2 cells per axis");
        if (!(length[a] > 0.0)) throw ConfigError("grid lengths must be positive");
    }
}

Point StructuredGrid::center(std::size_t c) const noexcept {
    const std::size_t i = c % nx();
    const std::size_t j = c / nx();
    Point p{origin[0] + (static_cast<double>(i) + 0.5) * spacing[0], 0.0};
    if (dim == 2) p[1] = origin[1] + (static_cast<double>(j) + 0.5) * spacing[1];
    return p;
}

bool StructuredGrid::all_no_penetration() const noexcept {
    const int faces = dim == 2 ? 4 : 2;
    for (int s = 0; s < faces; ++s)
        if (boundary[s] != BoundaryKind::NoPenetration) return false;
    return true;
}

bool StructuredGrid::contains(const Point& p) const noexcept {
    for (int a = 0; a < dim; ++a)
        if (p[a] < origin[a] || p[a] > origin[a] + length[a]) return false;
    return true;
}

Point StructuredGrid::clamp(const Point& p) const noexcept {
    Point q = p;
    for (int a = 0; a < dim; ++a) q[a] = std::clamp(p[a], origin[a], origin[a] + length[a]);
    return q;
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(const StructuredGrid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.num_cells())
        throw DomainError("scalar field size does not match the grid");
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

double ScalarField::integral() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s * grid_.cell_volume();
}

SpeciesField::SpeciesField(const StructuredGrid& grid, std::size_t n_species, std::vector<double> values)
    : grid_(grid), n_(n_species), values_(std::move(values)) {
    if (values_.size() != grid_.num_cells() * n_)
        throw DomainError("species field size does not match the grid");
}

double SpeciesField::integral(std::size_t i) const {
    double s = 0.0;
    for (std::size_t c = 0; c < num_cells(); ++c) s += at(c, i);
    return s * grid_.cell_volume();
}

ScalarField SpeciesField::component(std::size_t i) const {
    ScalarField f(grid_);
    for (std::size_t c = 0; c < num_cells(); ++c) f[c] = at(c, i);
    return f;
}

void FaceVectorField::enforce_no_penetration() {
    const std::size_t nx = grid.nx();
    const std::size_t ny = grid.ny();
    for (std::size_t j = 0; j < ny; ++j) {
        if (grid.side(Side::XLo) == BoundaryKind::NoPenetration) x[grid.x_face(0, j)] = 0.0;
        if (grid.side(Side::XHi) == BoundaryKind::NoPenetration) x[grid.x_face(nx, j)] = 0.0;
    }
    if (grid.dim == 2) {
        for (std::size_t i = 0; i < nx; ++i) {
            if (grid.side(Side::YLo) == BoundaryKind::NoPenetration) y[grid.y_face(i, 0)] = 0.0;
            if (grid.side(Side::YHi) == BoundaryKind::NoPenetration) y[grid.y_face(i, ny)] = 0.0;
        }
    }
}

double FaceVectorField::max_abs() const {
    return std::max(mixflow::max_abs(x), mixflow::max_abs(y));
}

// ---------------------------------------------------------------------------

FaceVectorField face_gradient(const ScalarField& f, const SideValues* boundary) {
    const StructuredGrid& g = f.grid();
    if (g.has_dirichlet() && boundary == nullptr)
        throw DomainError("face_gradient: Dirichlet faces need boundary values");
    FaceVectorField out(g);
    const std::size_t nx = g.nx();
    const std::size_t ny = g.ny();
    const double hx = g.spacing[0];
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 1; i < nx; ++i)
            out.x[g.x_face(i, j)] = (f[g.index(i, j)] - f[g.index(i - 1, j)]) / hx;
        if (g.side(Side::XLo) == BoundaryKind::DirichletPressure)
            out.x[g.x_face(0, j)] = (f[g.index(0, j)] - (*boundary)[0]) / (0.5 * hx);
        if (g.side(Side::XHi) == BoundaryKind::DirichletPressure)
            out.x[g.x_face(nx, j)] = ((*boundary)[1] - f[g.index(nx - 1, j)]) / (0.5 * hx);
    }
    if (g.dim == 2) {
        const double hy = g.spacing[1];
        for (std::size_t i = 0; i < nx; ++i) {
            for (std::size_t j = 1; j < ny; ++j)
                out.y[g.y_face(i, j)] = (f[g.index(i, j)] - f[g.index(i, j - 1)]) / hy;
            if (g.side(Side::YLo) == BoundaryKind::DirichletPressure)
                out.y[g.y_face(i, 0)] = (f[g.index(i, 0)] - (*boundary)[2]) / (0.5 * hy);
            if (g.side(Side::YHi) == BoundaryKind::DirichletPressure)
                out.y[g.y_face(i, ny)] = ((*boundary)[3] - f[g.index(i, ny - 1)]) / (0.5 * hy);
        }
    }
    return out;
}

ScalarField divergence(const FaceVectorField& flux) {
    const StructuredGrid& g = flux.grid;
    ScalarField out(g);
    const std::size_t nx = g.nx();
    const std::size_t ny = g.ny();
    const double hx = g.spacing[0];
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            double d = (flux.x[g.x_face(i + 1, j)] - flux.x[g.x_face(i, j)]) / hx;
            if (g.dim == 2)
                d += (flux.y[g.y_face(i, j + 1)] - flux.y[g.y_face(i, j)]) / g.spacing[1];
            out[g.index(i, j)] = d;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

// Lower cell index and weight of the upper neighbour along one axis.
void axis_weights(const StructuredGrid& g, int axis, double coord, std::size_t& lo, double& t) {
    const std::size_t n = g.cells[axis];
    const double h = g.spacing[axis];
    double s = (coord - g.origin[axis]) / h - 0.5;  // in units of cell centers
    const double smax = static_cast<double>(n - 1);
    s = std::clamp(s, 0.0, smax);
    // Snap round-off so that sampling at a cell center returns that cell exactly.
    const double nearest = std::round(s);
    if (std::abs(s - nearest) <= 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, s)) s = nearest;
    std::size_t k = static_cast<std::size_t>(std::floor(s));
    if (k >= n - 1) k = n - 2;
    lo = k;
    t = s - static_cast<double>(k);
}

}  // namespace

InterpolationStencil interpolation_stencil(const StructuredGrid& g, const Point& p) {
    InterpolationStencil st;
    std::size_t i0 = 0;
    double tx = 0.0;
    axis_weights(g, 0, p[0], i0, tx);
    if (g.dim == 1) {
        st.count = 2;
        st.cell = {i0, i0 + 1, 0, 0};
        st.weight = {1.0 - tx, tx, 0.0, 0.0};
        return st;
    }
    std::size_t j0 = 0;
    double ty = 0.0;
    axis_weights(g, 1, p[1], j0, ty);
    st.count = 4;
    st.cell = {g.index(i0, j0), g.index(i0 + 1, j0), g.index(i0, j0 + 1), g.index(i0 + 1, j0 + 1)};
    st.weight = {(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty), (1.0 - tx) * ty, tx * ty};
    return st;
}

double sample(const ScalarField& f, const Point& p) {
    const InterpolationStencil st = interpolation_stencil(f.grid(), p);
    double v = 0.0;
    for (int k = 0; k < st.count; ++k) v += st.weight[k] * f[st.cell[k]];
    return v;
}

void sample(const SpeciesField& f, const Point& p, std::span<double> out) {
    const InterpolationStencil st = interpolation_stencil(f.grid(), p);
    const std::size_t n = f.n_species();
    for (std::size_t i = 0; i < n; ++i) {
        double v = 0.0;
        for (int k = 0; k < st.count; ++k) v += st.weight[k] * f.at(st.cell[k], i);
        out[i] = v;
    }
}

}  // namespace mixflow
