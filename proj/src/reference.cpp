#include "droplet/reference.hpp"

#include "droplet/error.hpp"

#include <cmath>
#include <limits>

namespace droplet::reference {

ScalarField direct_potential(const ScalarField& density, const KernelTable& kernel) {
    const Grid& g = density.grid();
    require_same_grid(g, kernel.grid(), "direct_potential");
    ScalarField out(g);
    const int d = g.dim();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Index a = g.index(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (density[j] == 0.0) continue;
            const Index b = g.index(j);
            Index off{0, 0, 0};
            for (int k = 0; k < d; ++k) off[k] = a[k] - b[k];
            acc += kernel.at_offset(off) * density[j];
        }
        out[i] = acc * g.cell_volume();
    }
    return out;
}

double integrate_serial(const ScalarField& f) {
    double s = 0.0;
    for (double v : f.values()) {
        if (!std::isfinite(v)) throw Error(ErrorCode::non_finite, "non-finite field");
        s += v;
    }
    return s * f.grid().cell_volume();
}

ScalarField laplacian_serial(const ScalarField& f) {
    const Grid& g = f.grid();
    ScalarField out(g);
    const double h2 = g.spacing() * g.spacing();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.on_frame(i)) continue;
        const Index idx = g.index(i);
        double acc = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            Index lo = idx, hi = idx;
            lo[a] -= 1;
            hi[a] += 1;
            acc += f[g.flat(lo)] + f[g.flat(hi)] - 2.0 * f[i];
        }
        out[i] = acc / h2;
    }
    return out;
}

ScalarField distance_brute_force(const NodeMask& mask) {
    const Grid& g = mask.grid();
    if (mask.empty()) throw Error(ErrorCode::invalid_argument, "distance_to: empty mask");
    ScalarField out(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point p = g.point(i);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (!mask[j]) continue;
            const Point q = g.point(j);
            const double d2 = (p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) +
                              (p[2] - q[2]) * (p[2] - q[2]);
            best = std::min(best, d2);
        }
        out[i] = std::sqrt(best);
    }
    return out;
}

} // namespace droplet::reference
