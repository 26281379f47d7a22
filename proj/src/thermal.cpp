#include "droplet/thermal.hpp"

#include "droplet/error.hpp"
#include "droplet/parallel.hpp"
#include "droplet/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace droplet {

namespace {

const double log_floor = std::log(rho_floor);
constexpr double max_log_step = 20.0;

double wdot(std::span<const double> a, std::span<const double> b, double cell) {
    return cell * parallel::deterministic_dot(a, b);
}

// Shift log_mu so that h^d sum exp(log_mu) = 1; max-shifted, no overflow.
void normalise(ScalarField& log_mu) {
    const double top = *std::max_element(log_mu.data().begin(), log_mu.data().end());
    std::vector<double> e(log_mu.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::exp(log_mu[i] - top);
    const double z = top + std::log(log_mu.grid().cell_volume() * parallel::deterministic_sum(e));
    for (double& x : log_mu.data()) x -= z;
}

void exponentiate(const ScalarField& log_mu, ScalarField& mu) {
    for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = std::exp(log_mu[i]);
}

ScalarField log_f0(const PotentialSpec& spec, const Grid& grid) {
    const ScalarField lap = eval_laplacian(spec, grid);
    const double cd = coulomb_constant(grid.dim());
    ScalarField out(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = std::log(lap[i] / cd);
    return out;
}

ScalarField initial_guess(const PotentialSpec& spec, const Grid& grid, double beta, const ScalarField& v,
                          const ThermalOptions& opts) {
    if (opts.initial_log_mu) {
        require_same_grid(opts.initial_log_mu->grid(), grid, "solve_thermal");
        if (!opts.initial_log_mu->all_finite()) throw Error(ErrorCode::non_finite, "non-finite initial log-density");
        return *opts.initial_log_mu;
    }
    ScalarField out = log_f0(spec, grid);
    if (opts.equilibrium != nullptr) {
        require_same_grid(opts.equilibrium->grid, grid, "solve_thermal");
        for (std::size_t i = 0; i < grid.size(); ++i) out[i] -= beta * std::max(opts.equilibrium->zeta[i], 0.0);
        return out;
    }
    // V is compared with its largest value on the estimated droplet.
    const double r = droplet_radius_estimate(spec, grid);
    double v_edge = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid.radius(i) <= r) v_edge = std::max(v_edge, v[i]);
    }
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] -= beta * std::max(v[i] - v_edge, 0.0);
    return out;
}

struct State {
    ScalarField log_mu;
    ScalarField mu;
    ScalarField h;
    double energy = 0.0;
};

class Solver {
public:
    Solver(const PotentialSpec& spec, Convolver& conv, double beta, const ThermalOptions& opts)
        : spec_(spec), conv_(conv), grid_(conv.grid()), beta_(beta), opts_(opts), v_(eval(spec, grid_)) {}

    ThermalSolution run() {
        State s = make_state(initial_guess(spec_, grid_, beta_, v_, opts_));
        ThermalSolution out{grid_, spec_, beta_, ScalarField(grid_), ScalarField(grid_), ScalarField(grid_)};
        double tau = opts_.damping_init > 0.0 ? opts_.damping_init : std::min(1.0, 4.0 / std::sqrt(beta_));
        int it = 0;
        double res = 0.0, c = 0.0;
        for (;; ++it) {
            std::tie(res, c) = residual(s);
            out.residual_history.push_back(res);
            out.free_energy_history.push_back(s.energy);
            if (res <= opts_.tol_fix) break;
            if (it >= opts_.max_iter) {
                throw ConvergenceError(ErrorCode::not_converged, "thermal solver did not converge",
                                       out.residual_history);
            }
            if (opts_.method == ThermalMethod::newton) {
                std::optional<State> next = newton_step(s, c, res, out.cg_iterations);
                if (!next) next = mirror_step(s, tau);
                if (!next) throw ConvergenceError(ErrorCode::step_failure, "step failure", out.residual_history);
                s = std::move(*next);
            } else {
                std::optional<State> next = mirror_step(s, tau);
                if (!next) throw ConvergenceError(ErrorCode::step_failure, "step failure", out.residual_history);
                s = std::move(*next);
            }
        }
        out.iterations = it;
        out.residual = res;
        out.c_beta = c;
        out.free_energy = s.energy;
        out.m_beta = *std::max_element(s.mu.data().begin(), s.mu.data().end());
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            if (grid_.on_frame(i)) out.frame_mass += s.mu[i];
        }
        out.frame_mass *= grid_.cell_volume();
        out.log_mu = std::move(s.log_mu);
        out.mu = std::move(s.mu);
        out.h_beta = std::move(s.h);
        return out;
    }

private:
    State make_state(ScalarField log_mu) {
        normalise(log_mu);
        State s{std::move(log_mu), ScalarField(grid_), ScalarField(grid_)};
        exponentiate(s.log_mu, s.mu);
        if (opts_.interaction) conv_.apply(s.mu.values(), s.h.values());
        s.energy = free_energy(s.log_mu, s.h, v_, beta_);
        return s;
    }

    // sup over {mu >= rho_floor} of |F - c| with F = h + V + log(mu)/beta and
    // c its mass-weighted mean; returns {sup, c}.
    std::pair<double, double> residual(const State& s) const {
        const std::size_t n = grid_.size();
        std::vector<double> f(n), w(n);
        for (std::size_t i = 0; i < n; ++i) {
            f[i] = s.h[i] + v_[i] + s.log_mu[i] / beta_;
            w[i] = s.log_mu[i] >= log_floor ? s.mu[i] : 0.0;
        }
        const double c = parallel::deterministic_dot(w, f) / parallel::deterministic_sum(w);
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (s.log_mu[i] >= log_floor) res = std::max(res, std::abs(f[i] - c));
        }
        return {res, c};
    }

    // Accepts `trial` when E_beta does not exceed E(s) + armijo * slope, up
    // to a roundoff allowance.
    bool acceptable(const State& s, const State& trial, double slope) const {
        const double allowance = 1e-13 * (std::abs(s.energy) + 1.0);
        return trial.energy <= s.energy + 1e-4 * slope + allowance;
    }

    // Newton direction for log mu: (I + beta K W) d = -beta (F - c) + beta dc
    // with W = diag(mu) and <1, d>_M = 0, solved by CG in <a, b>_M = h^d sum mu a b.
    std::optional<State> newton_step(const State& s, double c, double res, int& cg_total) {
        const std::size_t n = grid_.size();
        const double cell = grid_.cell_volume();
        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = -beta_ * (s.h[i] + v_[i] + s.log_mu[i] / beta_ - c);

        auto mdot = [&](const std::vector<double>& a, const std::vector<double>& b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += s.mu[i] * a[i] * b[i];
            return acc * cell;
        };
        auto project = [&](std::vector<double>& x) {
            double m = 0.0;
            for (std::size_t i = 0; i < n; ++i) m += s.mu[i] * x[i];
            m *= cell;
            for (double& xi : x) xi -= m;
        };
        std::vector<double> tmp(n), kw(n);
        auto apply_k_w = [&](const std::vector<double>& x, std::vector<double>& out) {
            for (std::size_t i = 0; i < n; ++i) tmp[i] = s.mu[i] * x[i];
            if (opts_.interaction) {
                conv_.apply(tmp, out);
            } else {
                std::fill(out.begin(), out.end(), 0.0);
            }
        };

        std::vector<double> d(n, 0.0), r = rhs, p, ap(n);
        project(r);
        p = r;
        double rr = mdot(r, r);
        const double rr0 = rr;
        const double forcing = std::clamp(res, 1e-10, 1e-2);
        for (int k = 0; k < opts_.cg_max_iter && rr > forcing * forcing * rr0; ++k) {
            apply_k_w(p, kw);
            for (std::size_t i = 0; i < n; ++i) ap[i] = p[i] + beta_ * kw[i];
            project(ap);
            const double pap = mdot(p, ap);
            if (!(pap > 0.0)) break;
            const double alpha = rr / pap;
            for (std::size_t i = 0; i < n; ++i) {
                d[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            const double rr_new = mdot(r, r);
            const double b = rr_new / rr;
            rr = rr_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + b * p[i];
            ++cg_total;
        }
        // Off the weighted nodes the equation determines d pointwise.
        apply_k_w(d, kw);
        double dc = 0.0;
        for (std::size_t i = 0; i < n; ++i) dc += s.mu[i] * kw[i];
        dc *= cell;
        // Components are clipped: moving log mu by more than max_log_step
        // changes the energy only through terms already below roundoff, and an
        // unclipped outlier would force the line search to stall every node.
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = std::clamp(rhs[i] + beta_ * (dc - kw[i]), -max_log_step, max_log_step);
        }

        double slope = 0.0;
        for (std::size_t i = 0; i < n; ++i) slope -= s.mu[i] * d[i] * rhs[i];
        slope *= cell / beta_;
        if (!(slope < 0.0)) return std::nullopt;
        double t = 1.0;
        for (int k = 0; k < 30; ++k, t *= 0.5) {
            ScalarField trial = s.log_mu;
            for (std::size_t i = 0; i < n; ++i) trial[i] += t * d[i];
            State next = make_state(std::move(trial));
            if (acceptable(s, next, t * slope)) return next;
        }
        return std::nullopt;
    }

    // log mu <- (1 - tau) log mu - tau beta (h + V), halving tau on increase.
    std::optional<State> mirror_step(const State& s, double& tau) {
        const std::size_t n = grid_.size();
        for (int k = 0; k < 40; ++k) {
            ScalarField trial(grid_);
            for (std::size_t i = 0; i < n; ++i) {
                trial[i] = (1.0 - tau) * s.log_mu[i] - tau * beta_ * (s.h[i] + v_[i]);
            }
            State next = make_state(std::move(trial));
            const double slack = 1e-13 * (std::abs(s.energy) + 1.0);
            // Near the fixed point energy changes drop below roundoff; fall back
            // to residual decrease there.
            const bool accept = next.energy <= s.energy - slack ||
                                (next.energy <= s.energy + slack && residual(next).first < residual(s).first);
            if (accept) {
                tau = std::min(1.0, tau * 1.25);
                return next;
            }
            tau *= 0.5;
        }
        return std::nullopt;
    }

    const PotentialSpec& spec_;
    Convolver& conv_;
    Grid grid_;
    double beta_;
    const ThermalOptions& opts_;
    ScalarField v_;
};

} // namespace

double auto_half_width(const PotentialSpec& spec, int dim, double beta_min) {
    if (!(beta_min > 0.0)) throw Error(ErrorCode::invalid_argument, "beta must be positive");
    double radius = std::numeric_limits<double>::infinity();
    for (double probe = 4.0; probe < 1e3 && !std::isfinite(radius); probe *= 2.0) {
        radius = droplet_radius_estimate(spec, Grid(dim, dim == 2 ? 256 : 64, probe));
    }
    if (!std::isfinite(radius)) throw Error(ErrorCode::invalid_argument, "droplet radius estimate diverged");
    return std::max(2.0 * radius, radius + std::max(1.0, 8.0 / std::sqrt(beta_min)));
}

ScalarField rescale_warm_start(const ScalarField& log_mu_prev, double beta_prev, double beta,
                               const PotentialSpec& spec) {
    const ScalarField base = log_f0(spec, log_mu_prev.grid());
    ScalarField out(log_mu_prev.grid());
    const double ratio = beta / beta_prev;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = base[i] + ratio * (log_mu_prev[i] - base[i]);
    return out;
}

double free_energy(const ScalarField& log_mu, const ScalarField& h, const ScalarField& v, double beta) {
    const std::size_t n = log_mu.size();
    const double cell = log_mu.grid().cell_volume();
    std::vector<double> mu(n), integrand(n);
    for (std::size_t i = 0; i < n; ++i) {
        mu[i] = std::exp(log_mu[i]);
        integrand[i] = 0.5 * h[i] + v[i] + (mu[i] > 0.0 ? log_mu[i] / beta : 0.0);
    }
    return wdot(mu, integrand, cell);
}

ThermalSolution solve_thermal(const PotentialSpec& spec, const Grid& grid, double beta, const ThermalOptions& opts) {
    Convolver conv(make_kernel(grid));
    return solve_thermal(spec, conv, beta, opts);
}

ThermalSolution solve_thermal(const PotentialSpec& spec, Convolver& conv, double beta, const ThermalOptions& opts) {
    if (!(beta >= 2.0) || !std::isfinite(beta)) throw Error(ErrorCode::invalid_argument, "beta must be >= 2");
    if (!(opts.tol_fix > 0.0)) throw Error(ErrorCode::invalid_argument, "tol_fix must be positive");
    spec.validate(conv.grid().dim());
    Solver solver(spec, conv, beta, opts);
    return solver.run();
}

PointwiseBounds pointwise_bounds_check(const ThermalSolution& sol, const NodeMask& sigma, double neighbourhood,
                                       double cap) {
    const Grid& g = sol.grid;
    require_same_grid(g, sigma.grid(), "pointwise_bounds_check");
    const int d = g.dim();
    const double beta = sol.beta;
    PointwiseBounds out;
    out.neighbourhood = neighbourhood;
    out.cap = cap;
    const ScalarField dist = sigma.empty() ? ScalarField(g, std::numeric_limits<double>::infinity()) : distance_to(sigma);

    // Each condition is monotone in C, so the smallest admissible C is found
    // by bisection on [1e-6, 1e6] in log scale.
    auto smallest = [](const auto& holds) {
        double lo = std::log(1e-6), hi = std::log(1e6);
        if (!holds(std::exp(hi))) return std::numeric_limits<double>::infinity();
        if (holds(std::exp(lo))) return std::exp(lo);
        for (int k = 0; k < 100; ++k) {
            const double mid = 0.5 * (lo + hi);
            (holds(std::exp(mid)) ? hi : lo) = mid;
        }
        return std::exp(hi);
    };

    out.upper_c = smallest([&](double c) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double l = sol.log_mu[i];
            if (l < log_floor) continue;
            const Point x = g.point(i);
            const double w = sol.spec.value(x, d) - (d == 2 ? std::log(g.radius(i)) : 0.0);
            if (l > std::min(std::log(c), std::log(c) - beta * (w - c))) return false;
        }
        return true;
    });
    out.gaussian_lower_offset = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (sigma[i]) out.gaussian_lower_offset = std::max(out.gaussian_lower_offset, -sol.log_mu[i]);
    }
    out.gaussian_lower_c = smallest([&](double c) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (dist[i] > neighbourhood || sol.log_mu[i] < log_floor) continue;
            if (sol.log_mu[i] < -c * beta * dist[i] * dist[i] - out.gaussian_lower_offset) return false;
        }
        return true;
    });
    out.gaussian_upper_c = smallest([&](double c) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (dist[i] > neighbourhood || sol.log_mu[i] < log_floor) continue;
            if (sol.log_mu[i] > -beta * dist[i] * dist[i] / c + c) return false;
        }
        return true;
    });
    out.bulk_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (sigma[i]) out.bulk_min = std::min(out.bulk_min, sol.mu[i]);
    }

    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (sigma[i] || dist[i] < 2.0 * g.spacing() || dist[i] > neighbourhood || sol.log_mu[i] < log_floor) continue;
        xs.push_back(dist[i] * dist[i]);
        ys.push_back(sol.log_mu[i]);
    }
    if (xs.size() >= 2) {
        const LineFit f = fit_line(xs, ys);
        out.tail_coefficient = f.slope;
        out.tail_r2 = f.r2;
    }
    out.pass = out.upper_c <= cap && out.gaussian_lower_c <= cap &&
               out.gaussian_lower_offset <= cap && out.gaussian_upper_c <= cap &&
               out.bulk_min >= 1.0 / cap;
    return out;
}

double comparison_inequality_value(const ScalarField& h_beta, double c_beta, double m_beta, double beta,
                                   const ScalarField& h_inf, double c_inf) {
    require_same_grid(h_beta.grid(), h_inf.grid(), "comparison_inequality_check");
    const double shift = std::isinf(beta) ? 0.0 : std::log(m_beta) / beta;
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < h_beta.size(); ++i) lo = std::min(lo, h_beta[i] - c_beta - h_inf[i] + c_inf);
    return lo + shift;
}

double comparison_inequality_check(const ThermalSolution& thermal, const EquilibriumSolution& equilibrium) {
    return comparison_inequality_value(thermal.h_beta, thermal.c_beta, thermal.m_beta, thermal.beta,
                                       equilibrium.potential, equilibrium.c_inf);
}

double pde_residual(const ThermalSolution& sol, const NodeMask& region) {
    const Grid& g = sol.grid;
    require_same_grid(g, region.grid(), "pde_residual");
    const int d = g.dim();
    const double cd = coulomb_constant(d);
    const ScalarField lap = laplacian(sol.log_mu);
    double sup = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!region[i] || g.on_frame(i)) continue;
        const double r = lap[i] - sol.beta * (cd * sol.mu[i] - sol.spec.laplacian(g.point(i), d));
        sup = std::max(sup, std::abs(r));
        ++used;
    }
    if (used == 0) throw Error(ErrorCode::invalid_argument, "pde_residual: empty region");
    return sup;
}

double default_discretization_tolerance(const Grid& grid) { return 10.0 * grid.spacing() * grid.spacing(); }

} // namespace droplet
