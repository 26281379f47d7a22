#include "droplet/expansion.hpp"

#include "droplet/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace droplet {

namespace {

// Laplacian at the nodes of `where`; every stencil neighbour must be valid.
double stencil_laplacian(const std::vector<double>& f, const Grid& g, std::size_t i) {
    double acc = -2.0 * g.dim() * f[i];
    for (int a = 0; a < g.dim(); ++a) {
        const std::size_t s = g.stride(a);
        acc += f[i - s] + f[i + s];
    }
    return acc / (g.spacing() * g.spacing());
}

void require_beta(const ExpansionSequence& seq, double beta) {
    if (std::abs(seq.beta - beta) > 1e-12 * seq.beta) {
        throw Error(ErrorCode::invalid_argument, "expansion: thermal beta differs from the sequence beta");
    }
}

// All nondecreasing axis tuples of length n (mixed partials up to symmetry).
void multi_indices(int dim, int n, int first, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == n) {
        out.push_back(cur);
        return;
    }
    for (int a = first; a < dim; ++a) {
        cur.push_back(a);
        multi_indices(dim, n, a, cur, out);
        cur.pop_back();
    }
}

double ratio_residual(const std::vector<double>& log_mu, const ExpansionSequence& seq, int k) {
    if (k < 0 || k >= seq.K) throw Error(ErrorCode::invalid_argument, "ratio residual: k must be below K");
    const Grid& g = seq.bulk_mask.grid();
    const double cd = coulomb_constant(g.dim());
    const ScalarField& fk = seq.f[static_cast<std::size_t>(k)];
    std::vector<double> log_ratio(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!seq.bulk_mask[i]) continue;
        const double ratio = std::exp(log_mu[i]) / fk[i];
        if (!(ratio > 0.0)) throw Error(ErrorCode::breakdown, "ratio residual: 1 + u <= 0");
        log_ratio[i] = log_mu[i] - std::log(fk[i]);
    }
    const NodeMask inner = erode(seq.bulk_mask);
    if (inner.empty()) throw Error(ErrorCode::invalid_argument, "ratio residual: eroded bulk is empty");
    const ScalarField& ek = seq.eps[static_cast<std::size_t>(k)];
    double sup = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!inner[i]) continue;
        const double u = std::expm1(log_ratio[i]);
        const double r = -stencil_laplacian(log_ratio, g, i) + seq.beta * cd * fk[i] * u - ek[i];
        sup = std::max(sup, std::abs(r));
    }
    return sup;
}

} // namespace

double default_bulk_margin(double droplet_radius) { return 0.7 * droplet_radius; }

ExpansionSequence expansion_sequence(const PotentialSpec& spec, const Grid& grid, const NodeMask& sigma, double beta,
                                     int K, double margin) {
    require_same_grid(grid, sigma.grid(), "expansion_sequence");
    if (!(beta > 0.0)) throw Error(ErrorCode::invalid_argument, "beta must be positive");
    if (K < 0 || K > spec.smoothness - 2) throw Error(ErrorCode::invalid_argument, "expansion depth K exceeds m - 2");
    const double h = grid.spacing();
    if (!(margin >= (K + 1) * 2.0 * h - 1e-12)) throw Error(ErrorCode::invalid_argument, "bulk margin must be >= (K + 1) 2h");
    const int d = grid.dim();
    const double cd = coulomb_constant(d);

    ExpansionSequence seq{beta, K, margin, NodeMask(grid), {}, {}, {}, 0.0, false};
    const ScalarField inside = distance_to_complement(sigma);
    for (std::size_t i = 0; i < grid.size(); ++i) seq.bulk_mask.set(i, sigma[i] && inside[i] >= margin);
    if (seq.bulk_mask.empty()) throw Error(ErrorCode::invalid_argument, "bulk mask is empty");

    const ScalarField to_bulk = distance_to(seq.bulk_mask);
    NodeMask m0(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) m0.set(i, to_bulk[i] <= K * h + 1e-12 && !grid.on_frame(i));

    ScalarField f0(grid);
    seq.alpha = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!m0[i]) continue;
        const double lap = spec.laplacian(grid.point(i), d);
        if (!(lap > 0.0)) throw Error(ErrorCode::breakdown, "expansion breakdown (beta too small)");
        f0[i] = lap / cd;
        if (seq.bulk_mask[i]) seq.alpha = std::min(seq.alpha, lap);
    }
    seq.f.push_back(f0);
    seq.masks.push_back(m0);

    for (int k = 0; k < K; ++k) {
        const ScalarField& fk = seq.f.back();
        std::vector<double> log_fk(grid.size(), 0.0);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (seq.masks.back()[i]) log_fk[i] = std::log(fk[i]);
        }
        const NodeMask next_mask = erode(seq.masks.back());
        ScalarField next(grid), eps(grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!next_mask[i]) continue;
            next[i] = f0[i] + stencil_laplacian(log_fk, grid, i) / (beta * cd);
            if (!(next[i] > 0.0)) throw Error(ErrorCode::breakdown, "expansion breakdown (beta too small)");
            eps[i] = beta * cd * (next[i] - fk[i]);
        }
        seq.f.push_back(std::move(next));
        seq.masks.push_back(next_mask);
        seq.eps.push_back(std::move(eps));
    }

    seq.lower_bound_holds = true;
    for (const ScalarField& fk : seq.f) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (seq.bulk_mask[i] && fk[i] < seq.alpha / (4.0 * cd)) seq.lower_bound_holds = false;
        }
    }
    return seq;
}

double expansion_error(const ScalarField& mu, const ExpansionSequence& seq, int k, int n_derivs) {
    if (k < 0 || k > seq.K) throw Error(ErrorCode::invalid_argument, "expansion_error: k out of range");
    if (n_derivs < 0 || n_derivs % 2 != 0) throw Error(ErrorCode::invalid_argument, "expansion_error: n must be even");
    const Grid& g = seq.bulk_mask.grid();
    require_same_grid(g, mu.grid(), "expansion_error");
    const ScalarField& fk = seq.f[static_cast<std::size_t>(k)];
    const NodeMask& mk = seq.masks[static_cast<std::size_t>(k)];

    NodeMask region = mk;
    for (int j = 0; j < n_derivs; ++j) region = erode(region);
    region = region.intersect(seq.bulk_mask);
    if (region.empty()) throw Error(ErrorCode::invalid_argument, "expansion_error: mask too small after erosion");

    ScalarField diff(g);
    for (std::size_t i = 0; i < g.size(); ++i) diff[i] = mk[i] ? mu[i] - fk[i] : 0.0;
    if (n_derivs == 0) return sup_norm(diff, region);

    std::vector<std::vector<int>> indices;
    std::vector<int> cur;
    multi_indices(g.dim(), n_derivs, 0, cur, indices);
    double sup = 0.0;
    for (const auto& alpha : indices) {
        ScalarField dv = diff;
        for (int axis : alpha) dv = central_difference(dv, axis);
        sup = std::max(sup, sup_norm(dv, region));
    }
    return sup;
}

double expansion_error(const ThermalSolution& thermal, const ExpansionSequence& seq, int k, int n_derivs) {
    require_beta(seq, thermal.beta);
    return expansion_error(thermal.mu, seq, k, n_derivs);
}

double ratio_equation_residual(const ScalarField& mu, const ExpansionSequence& seq, int k) {
    require_same_grid(mu.grid(), seq.bulk_mask.grid(), "ratio_equation_residual");
    std::vector<double> log_mu(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        log_mu[i] = mu[i] > 0.0 ? std::log(mu[i]) : -std::numeric_limits<double>::infinity();
    }
    return ratio_residual(log_mu, seq, k);
}

double ratio_equation_residual(const ThermalSolution& thermal, const ExpansionSequence& seq, int k) {
    require_beta(seq, thermal.beta);
    require_same_grid(thermal.grid, seq.bulk_mask.grid(), "ratio_equation_residual");
    return ratio_residual(thermal.log_mu.data(), seq, k);
}

} // namespace droplet
