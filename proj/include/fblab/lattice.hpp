#pragma once

/// @file lattice.hpp
/// @brief Rectangular node lattices in two or three dimensions, nodal functions,
/// cell-centred discrete calculus and ball/sphere quadrature.
///
/// Functions live on the nodes of a tensor-product grid. Derived quantities
/// (gradients, integrands) live on cells. Quadrature over a ball weights each
/// cell by the fraction of a fixed 4^dim subsample that falls inside the ball,
/// so every integral is deterministic and first-order accurate in h/r.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fblab/errors.hpp"

namespace fblab {

/// Position in R^dim. Trailing components are ignored (and kept at zero) when dim = 2.
using Point = std::array<double, 3>;

/// Per-axis integer index. Unused trailing axes hold 0 (for indices) or 1 (for sizes).
using MultiIndex = std::array<std::size_t, 3>;

/// Compensated (Kahan-Babuska) accumulator.
class KahanSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    KahanSum& operator+=(double x) noexcept {
        add(x);
        return *this;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Closed or open ball B(center, radius); which one is meant depends on the operation.
struct Ball {
    Point center{};
    double radius = 1.0;
};

namespace lattice {

/// Number of subsample points per axis used for partial-cell quadrature.
inline constexpr int kSubsamplesPerAxis = 4;

class GridDomain {
public:
    GridDomain() = default;

    /// Validating constructor; see make_grid.
    GridDomain(std::span<const double> origin, std::span<const double> extent,
               std::span<const std::size_t> nodes_per_axis);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] const Point& origin() const noexcept { return origin_; }
    [[nodiscard]] const Point& extent() const noexcept { return extent_; }
    [[nodiscard]] const Point& spacing() const noexcept { return spacing_; }
    [[nodiscard]] const MultiIndex& nodes() const noexcept { return nodes_; }
    [[nodiscard]] double spacing(int axis) const { return spacing_[axis]; }
    [[nodiscard]] std::size_t nodes(int axis) const { return nodes_[axis]; }
    [[nodiscard]] std::size_t cells(int axis) const { return nodes_[axis] - 1; }
    [[nodiscard]] double max_spacing() const noexcept;
    [[nodiscard]] double diameter() const noexcept;

    [[nodiscard]] std::size_t node_count() const noexcept;
    [[nodiscard]] std::size_t cell_count() const noexcept;
    [[nodiscard]] double cell_volume() const noexcept;

    /// origin + k * spacing, computed from the index (never accumulated).
    [[nodiscard]] double coord(int axis, std::size_t k) const {
        return origin_[axis] + static_cast<double>(k) * spacing_[axis];
    }
    [[nodiscard]] Point node_point(const MultiIndex& k) const;
    [[nodiscard]] Point node_point(std::size_t linear) const { return node_point(node_multi(linear)); }
    [[nodiscard]] Point cell_center(const MultiIndex& c) const;

    /// Row-major in axis order: the last axis varies fastest.
    [[nodiscard]] std::size_t node_index(const MultiIndex& k) const noexcept {
        return (k[0] * nodes_[1] + k[1]) * nodes_[2] + k[2];
    }
    [[nodiscard]] MultiIndex node_multi(std::size_t linear) const noexcept;
    [[nodiscard]] std::size_t cell_index(const MultiIndex& c) const noexcept {
        return (c[0] * cell_dims_[1] + c[1]) * cell_dims_[2] + c[2];
    }
    [[nodiscard]] MultiIndex cell_multi(std::size_t linear) const noexcept;
    [[nodiscard]] bool on_boundary(const MultiIndex& k) const noexcept;

    /// True when the closed ball lies inside the closed grid box.
    [[nodiscard]] bool contains(const Ball& ball) const noexcept;
    [[nodiscard]] bool contains(const Point& p) const noexcept;
    /// Throws ContainmentError naming `what` unless contains(ball).
    void require(const Ball& ball, const char* what) const;

    /// Inclusive cell-index range per axis of cells that can meet the ball.
    void cell_range(const Ball& ball, MultiIndex& lo, MultiIndex& hi) const noexcept;

    friend bool operator==(const GridDomain&, const GridDomain&) = default;

private:
    int dim_ = 0;
    Point origin_{};
    Point extent_{};
    Point spacing_{};
    MultiIndex nodes_{1, 1, 1};
    MultiIndex cell_dims_{1, 1, 1};
};

/// Builds a grid over origin + [0, extent] with the given node counts.
/// Throws InvalidArgument on dimension mismatch, dim not in {2,3},
/// non-positive extents or fewer than three nodes on an axis.
GridDomain make_grid(std::span<const double> origin, std::span<const double> extent,
                     std::span<const std::size_t> nodes_per_axis);

/// Square/cubic grid [lo, hi]^dim with `nodes` nodes per axis.
GridDomain make_cube_grid(int dim, double lo, double hi, std::size_t nodes);

/// Nodal real values; one per node, row-major. Always finite.
class GridFunction {
public:
    GridFunction() = default;
    /// Throws InvalidArgument on size mismatch, NonFiniteError on NaN/Inf.
    GridFunction(GridDomain domain, std::vector<double> values);

    [[nodiscard]] const GridDomain& domain() const noexcept { return domain_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
    [[nodiscard]] double at(const MultiIndex& k) const { return values_[domain_.node_index(k)]; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    /// Copies the values out for building a modified function.
    [[nodiscard]] std::vector<double> to_vector() const { return values_; }

private:
    GridDomain domain_;
    std::vector<double> values_;
};

/// One scalar per cell.
struct CellField {
    GridDomain domain;
    std::vector<double> values;
};

/// dim scalars per cell, interleaved by component.
struct VectorCellField {
    GridDomain domain;
    std::vector<double> values;

    [[nodiscard]] double component(std::size_t cell, int axis) const {
        return values[cell * static_cast<std::size_t>(domain.dim()) + static_cast<std::size_t>(axis)];
    }
};

using ScalarFunction = std::function<double(const Point&)>;

/// values[k] = f(node_k). Throws NonFiniteError if f returns NaN/Inf anywhere.
GridFunction sample(const ScalarFunction& f, const GridDomain& g);

/// Same function with every value replaced by op(value).
GridFunction transform(const GridFunction& u, const std::function<double(double)>& op);

/// Pointwise sum a*u + b*v on a shared domain.
GridFunction axpby(double a, const GridFunction& u, double b, const GridFunction& v);

/// u^+ = max(u, 0) and u^- = max(-u, 0).
GridFunction positive_part(const GridFunction& u);
GridFunction negative_part(const GridFunction& u);

/// Bilinear/trilinear element gradient at the centre of cell `c`.
[[nodiscard]] Point cell_gradient(const GridFunction& u, const MultiIndex& c);

/// Cell-centred gradient of u for every cell.
VectorCellField gradient(const GridFunction& u);

/// Multilinear interpolation; p must lie in the closed grid box.
[[nodiscard]] double interpolate(const GridFunction& u, const Point& p);

/// Multilinear interpolation inside a known cell from local coordinates in [0,1]^dim.
[[nodiscard]] double interpolate_in_cell(const GridFunction& u, const MultiIndex& c, const Point& local);

/// Local coordinates of subsample s (0 <= s < 4^dim) within a cell.
[[nodiscard]] Point subsample_local(int dim, int s) noexcept;
[[nodiscard]] constexpr int subsample_count(int dim) noexcept {
    return dim == 2 ? kSubsamplesPerAxis * kSubsamplesPerAxis
                    : kSubsamplesPerAxis * kSubsamplesPerAxis * kSubsamplesPerAxis;
}

/// Fraction of the cell's 4^dim subsample points that lie in the open ball.
[[nodiscard]] double cell_ball_fraction(const GridDomain& g, const MultiIndex& c, const Ball& ball);

/// Sum over cells of f(cell) * cell_volume * cell_ball_fraction, Kahan-summed in
/// lexicographic cell order. f is only evaluated on cells that meet the ball.
/// Does not check containment; callers do.
template <class CellIntegrand>
double integrate_ball_with(const GridDomain& g, const Ball& ball, CellIntegrand&& f) {
    MultiIndex lo{};
    MultiIndex hi{};
    g.cell_range(ball, lo, hi);
    KahanSum acc;
    const double vol = g.cell_volume();
    for (std::size_t i = lo[0]; i <= hi[0]; ++i) {
        for (std::size_t j = lo[1]; j <= hi[1]; ++j) {
            for (std::size_t k = lo[2]; k <= hi[2]; ++k) {
                const MultiIndex c{i, j, k};
                const double w = cell_ball_fraction(g, c, ball);
                if (w == 0.0) {
                    continue;
                }
                acc.add(f(c) * vol * w);
            }
        }
    }
    return acc.value();
}

/// Ball quadrature of a cell field. Throws ContainmentError if the closed ball leaves the grid.
double integrate_ball(const CellField& f, const Ball& ball);

/// Ball volume as seen by the quadrature (integrate_ball of 1).
double discrete_ball_volume(const GridDomain& g, const Ball& ball);

/// Exact volume of the unit ball in dimension 2 or 3.
[[nodiscard]] double unit_ball_volume(int dim);

/// Default angular node counts for sphere averages: 256 in 2D, 1024 in 3D.
[[nodiscard]] int default_angular_count(int dim) noexcept;

/// Quadrature nodes on the sphere: uniform angles (2D) or a Fibonacci lattice (3D).
std::vector<Point> sphere_points(int dim, const Ball& ball, int n_angular);

/// Mean of the interpolated u over sphere_points. Requires n_angular >= 16.
double sphere_average(const GridFunction& u, const Ball& ball, int n_angular);
double sphere_average(const GridFunction& u, const Ball& ball);

/// Euclidean distance over the first `dim` components.
[[nodiscard]] double distance(int dim, const Point& a, const Point& b) noexcept;

// FBGF binary format: "FBGF", u32 version (=1), u32 dim, dim x u64 nodes,
// dim x f64 origin, dim x f64 extent, then little-endian f64 values row-major.
void write_fbgf(std::ostream& os, const GridFunction& u);
GridFunction read_fbgf(std::istream& is);
void save_fbgf(const std::string& path, const GridFunction& u);
GridFunction load_fbgf(const std::string& path);

}  // namespace lattice
}  // namespace fblab
