#include "droplet/grid.hpp"

#include "droplet/error.hpp"
#include "droplet/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace droplet {

Grid::Grid(int dim, int points_per_side, double half_width)
    : dim_(dim), n_(points_per_side), half_width_(half_width) {
    if (dim != 2 && dim != 3) {
        throw Error(ErrorCode::invalid_argument, "grid dimension must be 2 or 3");
    }
    if (points_per_side < 16) {
        throw Error(ErrorCode::invalid_argument, "n too small (need n >= 16)");
    }
    if (points_per_side % 2 != 0) {
        throw Error(ErrorCode::invalid_argument, "n must be even");
    }
    if (!(half_width > 0.0) || !std::isfinite(half_width)) {
        throw Error(ErrorCode::invalid_argument, "half width must be positive");
    }
    spacing_ = 2.0 * half_width / n_;
    cell_volume_ = std::pow(spacing_, dim_);
    size_ = 1;
    for (int a = 0; a < dim_; ++a) size_ *= static_cast<std::size_t>(n_);
    std::size_t s = 1;
    for (int a = dim_ - 1; a >= 0; --a) {
        strides_[static_cast<std::size_t>(a)] = s;
        s *= static_cast<std::size_t>(n_);
    }
}

Index Grid::index(std::size_t flat) const noexcept {
    Index idx{0, 0, 0};
    for (int a = 0; a < dim_; ++a) {
        const std::size_t st = strides_[static_cast<std::size_t>(a)];
        idx[static_cast<std::size_t>(a)] = static_cast<int>(flat / st);
        flat %= st;
    }
    return idx;
}

std::size_t Grid::flat(const Index& idx) const noexcept {
    std::size_t f = 0;
    for (int a = 0; a < dim_; ++a) {
        f += static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]) * strides_[static_cast<std::size_t>(a)];
    }
    return f;
}

Point Grid::point(std::size_t flat) const noexcept {
    const Index idx = index(flat);
    Point p{0.0, 0.0, 0.0};
    for (int a = 0; a < dim_; ++a) p[static_cast<std::size_t>(a)] = coordinate(idx[static_cast<std::size_t>(a)]);
    return p;
}

double Grid::radius(std::size_t flat) const noexcept {
    const Point p = point(flat);
    return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
}

bool Grid::on_frame(std::size_t flat, int width) const noexcept {
    const Index idx = index(flat);
    for (int a = 0; a < dim_; ++a) {
        const int i = idx[static_cast<std::size_t>(a)];
        if (i < width || i >= n_ - width) return true;
    }
    return false;
}

void require_same_grid(const Grid& a, const Grid& b, const char* context) {
    if (!(a == b)) {
        throw Error(ErrorCode::grid_mismatch, std::string("grid mismatch in ") + context);
    }
}

ScalarField::ScalarField(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
        throw Error(ErrorCode::invalid_argument, "field length does not match node count");
    }
}

ScalarField ScalarField::sample(const Grid& grid, const std::function<double(const Point&)>& fn) {
    ScalarField f(grid);
    const auto n = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        f[static_cast<std::size_t>(i)] = fn(grid.point(static_cast<std::size_t>(i)));
    }
    return f;
}

bool ScalarField::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::size_t NodeMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), std::uint8_t{1}));
}

NodeMask NodeMask::complement() const {
    NodeMask out(grid_);
    for (std::size_t i = 0; i < flags_.size(); ++i) out.flags_[i] = flags_[i] ? 0 : 1;
    return out;
}

NodeMask NodeMask::intersect(const NodeMask& other) const {
    require_same_grid(grid_, other.grid_, "mask intersection");
    NodeMask out(grid_);
    for (std::size_t i = 0; i < flags_.size(); ++i) out.flags_[i] = (flags_[i] && other.flags_[i]) ? 1 : 0;
    return out;
}

NodeMask interior_mask(const Grid& grid, int width) {
    NodeMask m(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) m.set(i, !grid.on_frame(i, width));
    return m;
}

NodeMask threshold_mask(const ScalarField& f, const std::function<bool(double)>& predicate) {
    NodeMask m(f.grid());
    for (std::size_t i = 0; i < f.size(); ++i) m.set(i, predicate(f[i]));
    return m;
}

NodeMask erode(const NodeMask& mask) {
    const Grid& g = mask.grid();
    NodeMask out(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!mask[i] || g.on_frame(i)) continue;
        bool keep = true;
        for (int a = 0; a < g.dim() && keep; ++a) {
            const std::size_t s = g.stride(a);
            keep = mask[i - s] && mask[i + s];
        }
        out.set(i, keep);
    }
    return out;
}

double integrate(const ScalarField& f) {
    if (!f.all_finite()) throw Error(ErrorCode::non_finite, "non-finite field");
    return f.grid().cell_volume() * parallel::deterministic_sum(f.values());
}

double integrate(const ScalarField& f, const NodeMask& region) {
    require_same_grid(f.grid(), region.grid(), "integrate");
    std::vector<double> masked(f.size(), 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!region[i]) continue;
        if (!std::isfinite(f[i])) throw Error(ErrorCode::non_finite, "non-finite field");
        masked[i] = f[i];
    }
    return f.grid().cell_volume() * parallel::deterministic_sum(masked);
}

ScalarField laplacian(const ScalarField& f) {
    if (!f.all_finite()) throw Error(ErrorCode::non_finite, "non-finite field");
    const Grid& g = f.grid();
    ScalarField out(g);
    const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
    const auto n = static_cast<std::ptrdiff_t>(g.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        if (g.on_frame(i)) continue;
        double acc = -2.0 * g.dim() * f[i];
        for (int a = 0; a < g.dim(); ++a) {
            const std::size_t s = g.stride(a);
            acc += f[i - s] + f[i + s];
        }
        out[i] = acc * inv_h2;
    }
    return out;
}

ScalarField central_difference(const ScalarField& f, int axis) {
    const Grid& g = f.grid();
    ScalarField out(g);
    const std::size_t s = g.stride(axis);
    const double inv_2h = 0.5 / g.spacing();
    const auto n = static_cast<std::ptrdiff_t>(g.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        if (g.on_frame(i)) continue;
        out[i] = (f[i + s] - f[i - s]) * inv_2h;
    }
    return out;
}

double gradient_sup(const ScalarField& f, const NodeMask& region) {
    const Grid& g = f.grid();
    require_same_grid(g, region.grid(), "gradient_sup");
    const double inv_2h = 0.5 / g.spacing();
    double best = -1.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!region[i] || g.on_frame(i)) continue;
        double norm2 = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            const std::size_t s = g.stride(a);
            const double d = (f[i + s] - f[i - s]) * inv_2h;
            norm2 += d * d;
        }
        best = std::max(best, std::sqrt(norm2));
    }
    if (best < 0.0) throw Error(ErrorCode::invalid_argument, "gradient_sup: empty region");
    return best;
}

double sup_norm(const ScalarField& f, const NodeMask& region) {
    require_same_grid(f.grid(), region.grid(), "sup_norm");
    double best = -1.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (region[i]) best = std::max(best, std::abs(f[i]));
    }
    if (best < 0.0) throw Error(ErrorCode::invalid_argument, "sup_norm: empty region");
    return best;
}

namespace {

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) on one line.
void distance_pass_1d(std::span<double> f, std::vector<double>& d, std::vector<int>& v,
                      std::vector<double>& z) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(f.size());
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[static_cast<std::size_t>(q)] == inf) continue;
        while (k >= 0) {
            const int p = v[static_cast<std::size_t>(k)];
            const double s = ((f[static_cast<std::size_t>(q)] + double(q) * q) -
                              (f[static_cast<std::size_t>(p)] + double(p) * p)) /
                             (2.0 * (q - p));
            if (s <= z[static_cast<std::size_t>(k)]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[static_cast<std::size_t>(k)] = q;
        if (k == 0) {
            z[0] = -inf;
        } else {
            const int p = v[static_cast<std::size_t>(k - 1)];
            z[static_cast<std::size_t>(k)] = ((f[static_cast<std::size_t>(q)] + double(q) * q) -
                                              (f[static_cast<std::size_t>(p)] + double(p) * p)) /
                                             (2.0 * (q - p));
        }
        z[static_cast<std::size_t>(k) + 1] = inf;
    }
    if (k < 0) return; // whole line at infinity
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[static_cast<std::size_t>(j) + 1] < q) ++j;
        const int p = v[static_cast<std::size_t>(j)];
        d[static_cast<std::size_t>(q)] = double(q - p) * (q - p) + f[static_cast<std::size_t>(p)];
    }
    for (int q = 0; q < n; ++q) f[static_cast<std::size_t>(q)] = d[static_cast<std::size_t>(q)];
}

} // namespace

ScalarField distance_to(const NodeMask& mask) {
    if (mask.empty()) throw Error(ErrorCode::invalid_argument, "distance_to: empty mask");
    const Grid& g = mask.grid();
    const int n = g.n();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> sq(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) sq[i] = mask[i] ? 0.0 : inf;

    const std::size_t lines = g.size() / static_cast<std::size_t>(n);
    for (int axis = 0; axis < g.dim(); ++axis) {
        const std::size_t s = g.stride(axis);
#pragma omp parallel
        {
            std::vector<double> line(static_cast<std::size_t>(n)), d(static_cast<std::size_t>(n)),
                z(static_cast<std::size_t>(n) + 1);
            std::vector<int> v(static_cast<std::size_t>(n));
#pragma omp for schedule(static)
            for (std::ptrdiff_t l = 0; l < static_cast<std::ptrdiff_t>(lines); ++l) {
                // Start of line l along `axis`: enumerate the other axes.
                std::size_t rem = static_cast<std::size_t>(l);
                std::size_t base = 0;
                for (int a = g.dim() - 1; a >= 0; --a) {
                    if (a == axis) continue;
                    base += (rem % static_cast<std::size_t>(n)) * g.stride(a);
                    rem /= static_cast<std::size_t>(n);
                }
                for (int q = 0; q < n; ++q) line[static_cast<std::size_t>(q)] = sq[base + static_cast<std::size_t>(q) * s];
                distance_pass_1d(line, d, v, z);
                for (int q = 0; q < n; ++q) sq[base + static_cast<std::size_t>(q) * s] = line[static_cast<std::size_t>(q)];
            }
        }
    }
    ScalarField out(g);
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = std::sqrt(sq[i]) * g.spacing();
    return out;
}

NodeMask mask_boundary(const NodeMask& mask) {
    const Grid& g = mask.grid();
    NodeMask out(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!mask[i]) continue;
        if (g.on_frame(i)) {
            out.set(i, true);
            continue;
        }
        bool edge = false;
        for (int a = 0; a < g.dim() && !edge; ++a) {
            const std::size_t s = g.stride(a);
            edge = !mask[i - s] || !mask[i + s];
        }
        out.set(i, edge);
    }
    return out;
}

ScalarField distance_to_complement(const NodeMask& mask) {
    const NodeMask outside = mask.complement();
    if (outside.empty()) {
        return ScalarField(mask.grid(), std::numeric_limits<double>::infinity());
    }
    return distance_to(outside);
}

} // namespace droplet
