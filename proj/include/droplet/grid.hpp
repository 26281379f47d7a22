#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace droplet {

using Point = std::array<double, 3>;
using Index = std::array<int, 3>;

/**
 * Uniform cell-centred grid on the box (-L, L)^d, d in {2, 3}.
 *
 * Nodes are cell centres x_i = -L + (i + 1/2) h with h = 2L/n, stored in
 * row-major order (the first axis varies slowest). Unused trailing
 * components of Point/Index are zero in two dimensions.
 */
class Grid {
public:
    Grid(int dim, int points_per_side, double half_width);

    int dim() const noexcept { return dim_; }
    int n() const noexcept { return n_; }
    double half_width() const noexcept { return half_width_; }
    double spacing() const noexcept { return spacing_; }
    double cell_volume() const noexcept { return cell_volume_; }
    std::size_t size() const noexcept { return size_; }

    double coordinate(int i) const noexcept { return -half_width_ + (i + 0.5) * spacing_; }
    std::size_t stride(int axis) const noexcept { return strides_[static_cast<std::size_t>(axis)]; }

    Index index(std::size_t flat) const noexcept;
    std::size_t flat(const Index& idx) const noexcept;
    Point point(std::size_t flat) const noexcept;
    double radius(std::size_t flat) const noexcept;

    // True when the node lies within `width` cells of the box boundary.
    bool on_frame(std::size_t flat, int width = 1) const noexcept;

    bool operator==(const Grid& other) const noexcept {
        return dim_ == other.dim_ && n_ == other.n_ && half_width_ == other.half_width_;
    }

private:
    int dim_;
    int n_;
    double half_width_;
    double spacing_;
    double cell_volume_;
    std::size_t size_;
    std::array<std::size_t, 3> strides_{};
};

// Throws ErrorCode::grid_mismatch when the grids differ.
void require_same_grid(const Grid& a, const Grid& b, const char* context);

class ScalarField {
public:
    explicit ScalarField(const Grid& grid, double fill = 0.0)
        : grid_(grid), values_(grid.size(), fill) {}
    ScalarField(const Grid& grid, std::vector<double> values);

    static ScalarField sample(const Grid& grid, const std::function<double(const Point&)>& fn);

    const Grid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }

    double& operator[](std::size_t i) noexcept { return values_[i]; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    std::vector<double>& data() noexcept { return values_; }
    const std::vector<double>& data() const noexcept { return values_; }

    bool all_finite() const noexcept;

private:
    Grid grid_;
    std::vector<double> values_;
};

class NodeMask {
public:
    explicit NodeMask(const Grid& grid, bool fill = false)
        : grid_(grid), flags_(grid.size(), fill ? 1 : 0) {}

    const Grid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return flags_.size(); }

    bool operator[](std::size_t i) const noexcept { return flags_[i] != 0; }
    void set(std::size_t i, bool value) noexcept { flags_[i] = value ? 1 : 0; }

    std::size_t count() const noexcept;
    bool empty() const noexcept { return count() == 0; }
    NodeMask complement() const;
    NodeMask intersect(const NodeMask& other) const;

    bool operator==(const NodeMask& other) const noexcept {
        return grid_ == other.grid_ && flags_ == other.flags_;
    }

private:
    Grid grid_;
    std::vector<std::uint8_t> flags_;
};

// Nodes at least `width` cells away from the box boundary.
NodeMask interior_mask(const Grid& grid, int width = 1);

// {x : predicate(field(x))}
NodeMask threshold_mask(const ScalarField& f, const std::function<bool(double)>& predicate);

// Keeps a node iff it and all of its 2d stencil neighbours are in the mask
// and the node is off the frame.
NodeMask erode(const NodeMask& mask);

// h^d * sum of nodal values (midpoint rule). Throws on non-finite entries.
double integrate(const ScalarField& f);
double integrate(const ScalarField& f, const NodeMask& region);

// Standard (2d+1)-point Laplacian on interior nodes; frame nodes are set to
// zero and must be excluded downstream (see interior_mask).
ScalarField laplacian(const ScalarField& f);

// Central-difference partial derivative along one axis; frame nodes set to zero.
ScalarField central_difference(const ScalarField& f, int axis);

// max over region (restricted to interior nodes) of |grad f| using central
// differences. Throws when the restricted region is empty.
double gradient_sup(const ScalarField& f, const NodeMask& region);

// max over region of |f|. Throws when the region is empty.
double sup_norm(const ScalarField& f, const NodeMask& region);

// Exact Euclidean distance from every node centre to the nearest node centre in
// the mask. Separable two-pass lower-envelope algorithm on squared distances.
ScalarField distance_to(const NodeMask& mask);

// Nodes of the mask that have at least one stencil neighbour outside it.
NodeMask mask_boundary(const NodeMask& mask);

// Distance from each node to the nearest node outside the mask (zero outside).
ScalarField distance_to_complement(const NodeMask& mask);

} // namespace droplet
