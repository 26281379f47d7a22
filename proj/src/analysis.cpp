#include "droplet/analysis.hpp"

#include "droplet/error.hpp"
#include "droplet/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace droplet {

namespace {

const double log_floor = std::log(rho_floor);

double beyond_box_tail(const ThermalSolution& t) {
    const Grid& g = t.grid;
    const int n = g.n();
    const double h = g.spacing();
    const double face = std::pow(h, g.dim() - 1);
    double tail = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.on_frame(i) || t.log_mu[i] < log_floor) continue;
        const Index idx = g.index(i);
        for (int a = 0; a < g.dim(); ++a) {
            if (idx[a] != 0 && idx[a] != n - 1) continue;
            const std::size_t inward = idx[a] == 0 ? i + g.stride(a) : i - g.stride(a);
            const double rate = (t.log_mu[inward] - t.log_mu[i]) / h;
            if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
            tail += t.mu[i] * face / rate;
        }
    }
    return tail;
}

} // namespace

std::pair<std::vector<double>, std::vector<double>> angular_profile(const ThermalSolution& thermal) {
    const Grid& g = thermal.grid;
    const double h = g.spacing();
    const std::size_t bins = static_cast<std::size_t>(g.half_width() / h);
    std::vector<double> sum(bins, 0.0), count(bins, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto b = static_cast<std::size_t>(g.radius(i) / h);
        if (b >= bins) continue;
        sum[b] += thermal.mu[i];
        count[b] += 1.0;
    }
    std::vector<double> r, u;
    for (std::size_t b = 0; b < bins; ++b) {
        if (count[b] == 0.0) continue;
        const double mean = sum[b] / count[b];
        r.push_back((b + 0.5) * h);
        u.push_back(mean > 0.0 ? std::log(mean) : -std::numeric_limits<double>::infinity());
    }
    return {r, u};
}

GapReport gap_report(const ThermalSolution& thermal, const EquilibriumSolution& eq, const GapOptions& opts) {
    const Grid& g = thermal.grid;
    require_same_grid(g, eq.grid, "gap_report");
    const int d = g.dim();
    const double h = g.spacing();
    GapReport rep;
    rep.beta = thermal.beta;
    rep.discretization_tolerance = default_discretization_tolerance(g);

    ScalarField diff(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double gap = thermal.h_beta[i] - thermal.c_beta - eq.potential[i] + eq.c_inf;
        diff[i] = eq.potential[i] - thermal.h_beta[i];
        rep.h_gap_sup = std::max(rep.h_gap_sup, std::abs(gap));
    }
    rep.c_gap = std::abs(eq.c_inf - thermal.c_beta);

    const NodeMask inner = interior_mask(g, 2);
    rep.grad_gap = gradient_sup(diff, inner);
    NodeMask away = inner;
    const NodeMask edge = mask_boundary(eq.sigma);
    if (!edge.empty()) {
        const ScalarField to_edge = distance_to(edge);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (to_edge[i] < opts.band_cells * h - 1e-12) away.set(i, false);
        }
    }
    rep.grad_gap_band_excluded = gradient_sup(diff, away);

    double mass = 0.0, entropy = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (eq.sigma[i] || g.on_frame(i)) continue;
        const double m = thermal.mu[i];
        mass += m;
        if (m > 0.0 && thermal.log_mu[i] >= log_floor) entropy += m * thermal.log_mu[i];
    }
    rep.ext_mass = mass * g.cell_volume();
    rep.ext_entropy = std::abs(entropy * g.cell_volume());
    rep.beyond_box_tail = beyond_box_tail(thermal);

    double eta = 0.0;
    if (opts.layer_eta) {
        eta = *opts.layer_eta;
    } else {
        double lo = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (eq.sigma[i]) lo = std::min(lo, thermal.spec.laplacian(g.point(i), d));
        }
        eta = lo / (4.0 * d * coulomb_constant(d));
    }
    if (opts.radial != nullptr) {
        rep.layer_width = boundary_layer_widths(*opts.radial, opts.layer_K, eta).width;
    } else {
        const auto [r, u] = angular_profile(thermal);
        rep.layer_width = layer_widths_of(r, u, opts.layer_K, eta).width;
    }

    if (opts.expansion != nullptr) {
        for (const auto& [k, n] : opts.bulk_orders) {
            rep.bulk_errors.push_back({k, n, expansion_error(thermal, *opts.expansion, k, n)});
        }
    }
    if (opts.tail_fit) rep.tail_fit = tail_quadratic_fit(thermal, eq.sigma);
    rep.comparison_min = comparison_inequality_check(thermal, eq);
    return rep;
}

TailFit tail_quadratic_fit(const ScalarField& log_mu, const NodeMask& sigma) {
    const Grid& g = log_mu.grid();
    require_same_grid(g, sigma.grid(), "tail_quadratic_fit");
    if (sigma.empty()) throw Error(ErrorCode::invalid_argument, "tail_quadratic_fit: empty sigma");
    const ScalarField dist = distance_to(sigma);
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (dist[i] < 2.0 * g.spacing() - 1e-12 || dist[i] > 0.5 || log_mu[i] < log_floor) continue;
        xs.push_back(dist[i] * dist[i]);
        ys.push_back(log_mu[i]);
    }
    if (xs.size() < 30) throw Error(ErrorCode::breakdown, "shell underflow; reduce beta or refine");
    const LineFit f = fit_line(xs, ys);
    return {f.slope, f.r2, xs.size()};
}

TailFit tail_quadratic_fit(const ThermalSolution& thermal, const NodeMask& sigma) {
    return tail_quadratic_fit(thermal.log_mu, sigma);
}

BoundaryDecayFit boundary_decay_fit(const ThermalSolution& thermal, const NodeMask& sigma) {
    const Grid& g = thermal.grid;
    require_same_grid(g, sigma.grid(), "boundary_decay_fit");
    const int d = g.dim();
    const double h = g.spacing(), cd = coulomb_constant(d);
    const ScalarField inside = distance_to_complement(sigma);
    std::vector<double> shell_max;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!sigma[i]) continue;
        const auto b = static_cast<std::size_t>(inside[i] / h);
        if (b >= shell_max.size()) shell_max.resize(b + 1, 0.0);
        const double err = std::abs(thermal.mu[i] - thermal.spec.laplacian(g.point(i), d) / cd);
        shell_max[b] = std::max(shell_max[b], err);
    }
    if (shell_max.empty()) throw Error(ErrorCode::invalid_argument, "boundary_decay_fit: empty sigma");
    const double deep = shell_max.back();
    std::vector<double> xs, ys;
    for (std::size_t b = 0; b < shell_max.size(); ++b) {
        const double dist = (b + 0.5) * h;
        const double arg = std::log(thermal.beta * dist * dist);
        if (arg <= 1.0 || !(shell_max[b] > 10.0 * deep)) continue;
        xs.push_back(arg * arg);
        ys.push_back(std::log(shell_max[b]));
    }
    if (xs.size() < 3) throw Error(ErrorCode::breakdown, "boundary_decay_fit: fewer than 3 usable shells");
    const LineFit f = fit_line(xs, ys);
    return {-f.slope, f.r2, xs.size()};
}

RateFit fit_rate(const std::string& quantity, const std::vector<RatePoint>& points, double predicted,
                 std::pair<double, double> window) {
    RateFit fit;
    fit.quantity = quantity;
    fit.predicted = predicted;
    fit.window_lo = window.first;
    fit.window_hi = window.second;
    std::vector<double> xs, ys;
    for (const RatePoint& p : points) {
        if (!(p.beta > 0.0) || !std::isfinite(p.beta)) throw Error(ErrorCode::invalid_argument, "fit_rate: beta must be positive");
        if (!(p.value > 0.0) || !std::isfinite(p.value)) {
            fit.warnings.push_back(quantity + ": dropped nonpositive value at beta=" + std::to_string(p.beta));
            continue;
        }
        fit.points.push_back(p);
        xs.push_back(std::log(p.beta));
        ys.push_back(std::log(p.value));
    }
    if (fit.points.size() < 4) throw Error(ErrorCode::invalid_argument, "fit_rate: fewer than 4 usable points for " + quantity);
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    if (*hi - *lo < std::log(8.0) - 1e-12) throw Error(ErrorCode::invalid_argument, "fit_rate: beta range spans less than 8x for " + quantity);
    const LineFit f = fit_line(xs, ys);
    fit.slope = f.slope;
    fit.intercept = f.intercept;
    fit.r2 = f.r2;
    fit.pass = std::isfinite(f.slope) && f.slope >= window.first && f.slope <= window.second;
    return fit;
}

RateFit fit_rate(const std::string& quantity, const std::vector<RatePoint>& points, double predicted) {
    return fit_rate(quantity, points, predicted, {predicted - 0.3, predicted + 0.3});
}

} // namespace droplet
