#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

namespace droplet::quadrature {

// Gauss-Legendre nodes and weights on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int order) {
    std::vector<double> x(static_cast<std::size_t>(order)), w(static_cast<std::size_t>(order));
    for (int i = 0; i < (order + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p_cur = 1.0, p_prev = 0.0;
            for (int k = 1; k <= order; ++k) {
                const double p_prev2 = p_prev;
                p_prev = p_cur;
                p_cur = ((2.0 * k - 1.0) * z * p_prev - (k - 1.0) * p_prev2) / k;
            }
            dp = order * (z * p_cur - p_prev) / (z * z - 1.0);
            const double dz = p_cur / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(order - 1 - i);
        x[a] = -z;
        x[b] = z;
        w[a] = w[b] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

// Composite Gauss-Legendre over [a, b]^2 with `panels` per side.
inline double integrate_square(const std::function<double(double, double)>& f, double a, double b, int panels,
                               int order = 16) {
    const auto [x, w] = gauss_legendre(order);
    const double width = (b - a) / panels;
    double total = 0.0;
    for (int pi = 0; pi < panels; ++pi) {
        for (int pj = 0; pj < panels; ++pj) {
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double u = a + width * (pi + 0.5 * (x[i] + 1.0));
                for (std::size_t j = 0; j < x.size(); ++j) {
                    const double v = a + width * (pj + 0.5 * (x[j] + 1.0));
                    total += w[i] * w[j] * f(u, v);
                }
            }
        }
    }
    return total * 0.25 * width * width;
}

inline double integrate_interval(const std::function<double(double)>& f, double a, double b, int panels,
                                 int order = 16) {
    const auto [x, w] = gauss_legendre(order);
    const double width = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        for (std::size_t i = 0; i < x.size(); ++i) total += w[i] * f(a + width * (p + 0.5 * (x[i] + 1.0)));
    }
    return total * 0.5 * width;
}

// Doubles the panel count until successive estimates agree to `tol`.
template <typename Rule>
double refine_until(Rule rule, double tol, int max_panels = 1024) {
    double prev = rule(1);
    for (int panels = 2; panels <= max_panels; panels *= 2) {
        const double next = rule(panels);
        if (std::abs(next - prev) <= tol * std::max(1.0, std::abs(next))) return next;
        prev = next;
    }
    return prev;
}

} // namespace droplet::quadrature
