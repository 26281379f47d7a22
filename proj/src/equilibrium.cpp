#include "droplet/equilibrium.hpp"

#include "droplet/error.hpp"
#include "droplet/parallel.hpp"
#include "droplet/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace droplet {

namespace {

double wdot(std::span<const double> a, std::span<const double> b, double cell) {
    return cell * parallel::deterministic_dot(a, b);
}

double ball_volume(int d) { return d == 2 ? std::numbers::pi : 4.0 * std::numbers::pi / 3.0; }

double support_threshold(const ScalarField& mu, double tol) {
    const double mu_max = *std::max_element(mu.data().begin(), mu.data().end());
    return std::max(10.0 * tol, 1e-6) * mu_max;
}

ScalarField initial_density(const PotentialSpec& spec, const Grid& grid, const EquilibriumOptions& opts) {
    if (opts.initial) {
        require_same_grid(opts.initial->grid(), grid, "solve_equilibrium");
        ScalarField mu = *opts.initial;
        for (double& x : mu.data()) {
            if (!std::isfinite(x) || x < 0.0) throw Error(ErrorCode::invalid_argument, "initial density must be nonnegative");
        }
        const double mass = integrate(mu);
        if (!(mass > 0.0)) throw Error(ErrorCode::invalid_argument, "initial density has zero mass");
        for (double& x : mu.data()) x /= mass;
        return mu;
    }
    const double r = droplet_radius_estimate(spec, grid);
    ScalarField mu(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) mu[i] = grid.radius(i) <= r ? 1.0 : 0.0;
    const double mass = integrate(mu);
    for (double& x : mu.data()) x /= mass;
    return mu;
}

// Equality-constrained minimisation of the energy over densities supported on
// `support` with unit mass, by CG on the mass-zero subspace. Starts from mu.
int solve_on_support(ScalarField& mu, ScalarField& pot, const ScalarField& v, const NodeMask& support,
                     Convolver& conv, double tol, int max_iter) {
    const Grid& g = mu.grid();
    const std::size_t n = g.size();
    const double cell = g.cell_volume();
    const double count = static_cast<double>(support.count());

    auto project = [&](std::vector<double>& x) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (support[i]) s += x[i];
        }
        const double mean = s / count;
        for (std::size_t i = 0; i < n; ++i) x[i] = support[i] ? x[i] - mean : 0.0;
    };

    for (std::size_t i = 0; i < n; ++i) {
        if (!support[i]) mu[i] = 0.0;
    }
    const double mass = integrate(mu);
    if (mass > 0.0) {
        for (double& x : mu.data()) x /= mass;
    } else {
        for (std::size_t i = 0; i < n; ++i) mu[i] = support[i] ? 1.0 / (count * cell) : 0.0;
    }
    conv.apply(mu.values(), pot.values());

    // Preconditioner: graph Laplacian of the support, the local inverse of
    // the (nonlocal) restricted kernel; maps residuals to mass-zero densities.
    const double cd = coulomb_constant(g.dim());
    const double scale = 1.0 / (cd * g.spacing() * g.spacing());
    auto precondition = [&](const std::vector<double>& x, std::vector<double>& out) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            if (!support[i]) {
                out[i] = 0.0;
                continue;
            }
            double acc = 0.0;
            for (int a = 0; a < g.dim(); ++a) {
                const std::size_t s = g.stride(a);
                const Index idx = g.index(i);
                if (idx[a] > 0 && support[i - s]) acc += x[i] - x[i - s];
                if (idx[a] + 1 < g.n() && support[i + s]) acc += x[i] - x[i + s];
            }
            out[i] = scale * acc;
        }
    };

    std::vector<double> r(n), z(n), p(n), ap(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = support[i] ? -(pot[i] + v[i]) : 0.0;
    precondition(r, z);
    p = z;
    double rz = parallel::deterministic_dot(r, z);
    int it = 0;
    for (; it < max_iter; ++it) {
        std::vector<double> rc = r;
        project(rc);
        double rmax = 0.0;
        for (double x : rc) rmax = std::max(rmax, std::abs(x));
        if (rmax <= tol) break;
        conv.apply(p, ap);
        for (std::size_t i = 0; i < n; ++i) {
            if (!support[i]) ap[i] = 0.0;
        }
        const double pap = parallel::deterministic_dot(p, ap);
        if (!(pap > 0.0) || !(rz > 0.0)) break;
        const double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            mu[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precondition(r, z);
        const double rz_new = parallel::deterministic_dot(r, z);
        const double b = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + b * p[i];
    }
    conv.apply(mu.values(), pot.values());
    return it;
}

} // namespace

double discrete_energy(const ScalarField& density, const ScalarField& potential, const ScalarField& v) {
    const double cell = density.grid().cell_volume();
    return 0.5 * wdot(density.values(), potential.values(), cell) + wdot(density.values(), v.values(), cell);
}

std::pair<double, double> kkt_residual(const ScalarField& density, const ScalarField& potential,
                                       const ScalarField& v, double threshold) {
    const std::size_t n = density.size();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (density[i] > threshold) {
            num += density[i] * (potential[i] + v[i]);
            den += density[i];
        }
    }
    const double c = den > 0.0 ? num / den : 0.0;
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = potential[i] + v[i] - c;
        res = std::max({res, density[i] * std::abs(z), -z});
    }
    return {res, c};
}

EquilibriumSolution solve_equilibrium(const PotentialSpec& spec, const Grid& grid, const EquilibriumOptions& opts) {
    Convolver conv(make_kernel(grid));
    return solve_equilibrium(spec, conv, opts);
}

EquilibriumSolution solve_equilibrium(const PotentialSpec& spec, Convolver& conv, const EquilibriumOptions& opts) {
    const Grid& g = conv.grid();
    if (!(opts.tol_kkt > 0.0)) throw Error(ErrorCode::invalid_argument, "tol_kkt must be positive");
    if (opts.max_iter < 1) throw Error(ErrorCode::invalid_argument, "max_iter must be >= 1");
    const ScalarField v = eval(spec, g);
    eval_laplacian(spec, g);
    const double r_est = droplet_radius_estimate(spec, g);
    if (opts.check_box && !(r_est <= 0.5 * g.half_width() + 2.0 * g.spacing())) {
        throw Error(ErrorCode::box_too_small, "box too small: droplet estimate does not fit with margin L/2");
    }

    const std::size_t n = g.size();
    const double cell = g.cell_volume();
    ScalarField mu = initial_density(spec, g, opts);
    ScalarField pot(g);
    conv.apply(mu.values(), pot.values());

    EquilibriumSolution sol{g, ScalarField(g), ScalarField(g), ScalarField(g), 0.0, NodeMask(g), NodeMask(g)};
    std::vector<double> y(n), nu(n), d(n), kd(n), grad(n);
    double step = 1.0;
    bool converged = false;
    const double phase_tol = opts.polish ? std::max(opts.tol_kkt, opts.spg_tol) : opts.tol_kkt;
    int it = 0;
    double res = 0.0;
    for (; it < opts.max_iter; ++it) {
        const double delta = support_threshold(mu, opts.tol_kkt);
        res = kkt_residual(mu, pot, v, delta).first;
        sol.residual_history.push_back(res);
        sol.energy_history.push_back(discrete_energy(mu, pot, v));
        if (res <= phase_tol) {
            converged = res <= opts.tol_kkt;
            break;
        }
        for (std::size_t i = 0; i < n; ++i) {
            grad[i] = pot[i] + v[i];
            y[i] = mu[i] - step * grad[i];
        }
        project_onto_simplex(y, nu, 1.0 / cell);
        for (std::size_t i = 0; i < n; ++i) d[i] = nu[i] - mu[i];
        conv.apply(d, kd);
        const double slope = wdot(grad, d, cell);
        const double curv = wdot(d, kd, cell);
        if (!(slope < 0.0)) break; // stationary to working precision
        const double alpha = curv > 0.0 ? std::min(1.0, -slope / curv) : 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            mu[i] = std::max(mu[i] + alpha * d[i], 0.0);
            pot[i] += alpha * kd[i];
        }
        const double dd = wdot(d, d, cell);
        step = curv > 0.0 ? std::clamp(dd / curv, 1e-10, 1e10) : 1e10;
        if ((it + 1) % 100 == 0) conv.apply(mu.values(), pot.values());
    }
    conv.apply(mu.values(), pot.values());
    sol.iterations = it;

    if (opts.polish) {
        // Primary-dual active-set rounds on the support found above.
        ScalarField best_mu = mu, best_pot = pot;
        double best_res = kkt_residual(mu, pot, v, support_threshold(mu, opts.tol_kkt)).first;
        const double delta0 = support_threshold(mu, opts.tol_kkt);
        NodeMask support = threshold_mask(mu, [&](double x) { return x > delta0; });
        const int rounds = std::min(opts.polish_rounds, opts.max_iter - it);
        for (int round = 0; round < rounds && !support.empty(); ++round) {
            ScalarField m = mu, h = pot;
            sol.cg_iterations += solve_on_support(m, h, v, support, conv, opts.polish_cg_tol, 1000);
            ++sol.polish_rounds;
            const auto [r, c] = kkt_residual(m, h, v, 0.0);
            bool changed = false;
            NodeMask next = support;
            for (std::size_t i = 0; i < n; ++i) {
                if (support[i] && m[i] < 0.0) {
                    next.set(i, false);
                    changed = true;
                } else if (!support[i] && h[i] + v[i] - c < -0.1 * opts.tol_kkt) {
                    next.set(i, true);
                    changed = true;
                }
            }
            if (!changed) {
                const auto [r2, c2] = kkt_residual(m, h, v, support_threshold(m, opts.tol_kkt));
                if (r2 <= best_res) {
                    best_res = r2;
                    best_mu = m;
                    best_pot = h;
                }
                break;
            }
            (void)r;
            support = next;
            if (support.empty()) break;
        }
        mu = best_mu;
        pot = best_pot;
        for (double& x : mu.data()) x = std::max(x, 0.0);
        const double mass = integrate(mu);
        for (double& x : mu.data()) x /= mass;
        conv.apply(mu.values(), pot.values());
    }

    const double delta = support_threshold(mu, opts.tol_kkt);
    const auto [final_res, c] = kkt_residual(mu, pot, v, delta);
    sol.kkt_residual = final_res;
    sol.c_inf = c;
    sol.support_threshold = delta;
    sol.energy = discrete_energy(mu, pot, v);
    if (final_res <= opts.tol_kkt) converged = true;
    if (!converged) {
        sol.residual_history.push_back(final_res);
        throw ConvergenceError(ErrorCode::not_converged, "equilibrium solver did not converge", sol.residual_history);
    }

    for (std::size_t i = 0; i < n; ++i) sol.zeta[i] = pot[i] + v[i] - c;
    sol.sigma = threshold_mask(mu, [&](double x) { return x > delta; });
    sol.zero_set = threshold_mask(sol.zeta, [&](double z) { return z < opts.tol_kkt; });
    for (std::size_t i = 0; i < n; ++i) {
        if (sol.sigma[i] && g.on_frame(i, 2)) {
            throw Error(ErrorCode::box_too_small, "box too small: droplet touches the box frame");
        }
    }
    if (!sol.sigma.empty() && !sol.zero_set.empty()) {
        const ScalarField to_sigma = distance_to(sol.sigma);
        const ScalarField to_zero = distance_to(sol.zero_set);
        for (std::size_t i = 0; i < n; ++i) {
            if (sol.zero_set[i]) sol.mask_disagreement = std::max(sol.mask_disagreement, to_sigma[i]);
            if (sol.sigma[i]) sol.mask_disagreement = std::max(sol.mask_disagreement, to_zero[i]);
        }
    }
    sol.masks_disagree = sol.mask_disagreement > 3.0 * g.spacing();
    sol.density = std::move(mu);
    sol.potential = std::move(pot);
    sol.droplet_radius =
        std::pow(static_cast<double>(sol.sigma.count()) * cell / ball_volume(g.dim()), 1.0 / g.dim());
    sol.droplet_radius_estimate = r_est;
    return sol;
}

ZetaGrowth zeta_growth_check(const EquilibriumSolution& sol) {
    const Grid& g = sol.grid;
    ZetaGrowth out{std::numeric_limits<double>::infinity(), true};
    if (sol.sigma.empty() || sol.sigma.count() == g.size()) return out;
    const ScalarField dist = distance_to(sol.sigma);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (sol.sigma[i] || dist[i] < 2.0 * g.spacing() - 1e-12) continue;
        // Distance to the union of the cells of sigma, from the centre distance.
        const double dc = dist[i] - 0.5 * g.spacing();
        const double w = std::min(dc * dc, 1.0);
        out.alpha_hat_lower = std::min(out.alpha_hat_lower, sol.zeta[i] / w);
    }
    out.pass = out.alpha_hat_lower > 0.0;
    return out;
}

} // namespace droplet
