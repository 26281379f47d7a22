#include "droplet/radial.hpp"

#include "droplet/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace droplet {

namespace {

double surface(int d) { return d == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi; }

struct Problem {
    double beta;
    int dim;
    double lap;   // Delta V
    double cd;
    double ustar; // log(Delta V / c_d)
};

// w = u - ustar, v = r^{d-1} w', accumulated mass. Working with w keeps full
// relative precision when u(0) is exponentially close to ustar.
using StateVec = std::array<double, 3>;

StateVec rhs(const Problem& p, double r, const StateVec& y) {
    const double rp = p.dim == 2 ? r : r * r;
    return {y[1] / rp, p.beta * rp * p.lap * std::expm1(y[0]), surface(p.dim) * rp * std::exp(p.ustar + y[0])};
}

StateVec rk4(const Problem& p, double r, const StateVec& y, double h) {
    auto axpy = [](const StateVec& a, double s, const StateVec& b) {
        return StateVec{a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]};
    };
    const StateVec k1 = rhs(p, r, y);
    const StateVec k2 = rhs(p, r + 0.5 * h, axpy(y, 0.5 * h, k1));
    const StateVec k3 = rhs(p, r + 0.5 * h, axpy(y, 0.5 * h, k2));
    const StateVec k4 = rhs(p, r + h, axpy(y, h, k3));
    StateVec out;
    for (int i = 0; i < 3; ++i) out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

struct Profile {
    std::vector<double> w;
    double mass = 0.0;
    bool blew_up = false;
};

// Integrates on r_j = j h from w(0) = -exp(theta); the first step uses the
// series w0 + a r^2 + b r^4 with a = beta Delta V expm1(w0) / (2d) and
// b = beta Delta V e^{w0} a / (4(d + 2)). The r^4 term matters: an O(h^4)
// error in v is amplified by 1/r and costs a log(1/h) in the global order.
Profile integrate(const Problem& p, double h, int steps, double theta) {
    Profile out;
    out.w.assign(static_cast<std::size_t>(steps) + 1, 0.0);
    const double w0 = -std::exp(theta);
    const int d = p.dim;
    const double a = p.beta * p.lap * std::expm1(w0) / (2.0 * d);
    const double b = p.beta * p.lap * std::exp(w0) * a / (4.0 * (d + 2));
    const double h2 = h * h, hd = std::pow(h, d);
    out.w[0] = w0;
    StateVec y{w0 + a * h2 + b * h2 * h2, (2.0 * a + 4.0 * b * h2) * hd,
               surface(d) * std::exp(p.ustar + w0) * hd * (1.0 / d + a * h2 / (d + 2))};
    out.w[1] = y[0];
    for (int j = 1; j < steps; ++j) {
        y = rk4(p, j * h, y, h);
        if (!(y[0] < 1e-3) || !std::isfinite(y[2])) {
            out.blew_up = true;
            out.mass = std::numeric_limits<double>::infinity();
            return out;
        }
        out.w[static_cast<std::size_t>(j) + 1] = y[0];
    }
    out.mass = y[2];
    return out;
}

double cubic(const std::vector<double>& f, double h, double x) {
    const int n = static_cast<int>(f.size());
    const double s = std::clamp(x / h, 0.0, static_cast<double>(n - 1));
    int i = std::clamp(static_cast<int>(std::floor(s)) - 1, 0, std::max(n - 4, 0));
    const double t = s - i;
    // Lagrange through nodes i..i+3 at local coordinate t.
    const double f0 = f[i], f1 = f[i + 1], f2 = f[i + 2], f3 = f[i + 3];
    return f0 * (t - 1) * (t - 2) * (t - 3) / -6.0 + f1 * t * (t - 2) * (t - 3) / 2.0 +
           f2 * t * (t - 1) * (t - 3) / -2.0 + f3 * t * (t - 1) * (t - 2) / 6.0;
}

} // namespace

double RadialSolution::value(double radius) const { return cubic(u, h_r, radius); }

double radial_droplet_radius(double lambda, int dim) {
    const double cd = coulomb_constant(dim);
    const double ball = dim == 2 ? std::numbers::pi : 4.0 * std::numbers::pi / 3.0;
    return std::pow(cd / (lambda * dim * ball), 1.0 / dim);
}

double default_r_max(double lambda, int dim, double beta) {
    return radial_droplet_radius(lambda, dim) + std::max(1.0, 8.0 / std::sqrt(beta));
}

RadialSolution solve_radial(double lambda, double beta, int dim, double r_max, double tol, double h_r) {
    if (!(lambda > 0.0)) throw Error(ErrorCode::invalid_argument, "lambda must be positive");
    if (!(beta >= 2.0)) throw Error(ErrorCode::invalid_argument, "beta must be >= 2");
    if (dim != 2 && dim != 3) throw Error(ErrorCode::invalid_argument, "dimension must be 2 or 3");
    const double radius = radial_droplet_radius(lambda, dim);
    if (!(r_max >= 2.0 * radius)) throw Error(ErrorCode::invalid_argument, "r_max must be at least twice the droplet radius");
    if (!(tol > 0.0)) throw Error(ErrorCode::invalid_argument, "tol must be positive");

    Problem p{beta, dim, lambda * dim, coulomb_constant(dim), 0.0};
    p.ustar = std::log(p.lap / p.cd);
    if (h_r <= 0.0) h_r = std::min(1e-3, 0.02 / std::sqrt(beta * p.lap));
    const int steps = static_cast<int>(std::ceil(r_max / h_r));
    h_r = r_max / steps;

    RadialSolution sol;
    sol.lambda = lambda;
    sol.beta = beta;
    sol.dim = dim;
    sol.h_r = h_r;
    sol.r_max = r_max;

    // Shooting parameter theta = log(ustar - u(0)); mass decreases in theta.
    double lo = -700.0, hi = std::log(60.0);
    const Profile plo = integrate(p, h_r, steps, lo);
    const Profile phi = integrate(p, h_r, steps, hi);
    if (!(plo.mass > 1.0) || !(phi.mass < 1.0) || !(phi.mass < plo.mass)) {
        throw Error(ErrorCode::bracket_failure, "bracket failure: shooting masses do not straddle 1");
    }
    Profile best = phi;
    double best_theta = hi;
    int it = 0;
    for (; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        Profile pm = integrate(p, h_r, steps, mid);
        const double m = pm.mass;
        if (std::abs(m - 1.0) < std::abs(best.mass - 1.0)) {
            best = std::move(pm);
            best_theta = mid;
        }
        if (std::abs(best.mass - 1.0) <= tol || mid == lo || mid == hi) break;
        (m > 1.0 ? lo : hi) = mid;
    }
    if (!(std::abs(best.mass - 1.0) <= tol)) {
        throw ConvergenceError(ErrorCode::not_converged, "radial shooting did not reach the mass tolerance",
                               {std::abs(best.mass - 1.0)});
    }
    sol.shooting_iterations = it + 1;
    sol.log_gap = best_theta;
    sol.u.resize(best.w.size());
    for (std::size_t j = 0; j < best.w.size(); ++j) sol.u[j] = p.ustar + best.w[j];
    sol.u0 = sol.u[0];
    sol.mass = best.mass;
    sol.r.resize(sol.u.size());
    for (std::size_t j = 0; j < sol.r.size(); ++j) sol.r[j] = static_cast<double>(j) * h_r;

    // Beyond r_max, e^u <= Delta V / (2 c_d) gives u(r) <= u(r_max) - q (r - r_max)^2.
    const double u_end = sol.u.back();
    if (std::exp(u_end) > p.lap / (2.0 * p.cd)) throw Error(ErrorCode::invalid_argument, "r_max inside the droplet");
    const double q = beta * p.lap / (4.0 * dim);
    const double g = 0.5 * std::sqrt(std::numbers::pi / q);
    const double moment = dim == 2 ? r_max * g + 0.5 / q
                                   : r_max * r_max * g + r_max / q + std::sqrt(std::numbers::pi) / (4.0 * std::pow(q, 1.5));
    sol.tail_bound = surface(dim) * std::exp(u_end) * moment;
    if (!(sol.tail_bound < 1e-12)) throw Error(ErrorCode::invalid_argument, "r_max too small: tail mass bound exceeds 1e-12");
    return sol;
}

LayerWidths layer_widths_of(const std::vector<double>& r, const std::vector<double>& u, double K, double eta) {
    const double top = -K, bottom = std::log(eta);
    auto crossing = [&](double level, std::size_t upto) -> std::optional<double> {
        // Largest r (up to index `upto`) where the profile crosses `level` downwards.
        for (std::size_t j = upto; j-- > 0;) {
            if (u[j] >= level && u[j + 1] <= level) {
                if (u[j] == u[j + 1]) return r[j + 1];
                const double t = (u[j] - level) / (u[j] - u[j + 1]);
                return r[j] + t * (r[j + 1] - r[j]);
            }
        }
        return std::nullopt;
    };
    const auto r2 = crossing(top, u.size() - 1);
    if (!r2) throw Error(ErrorCode::invalid_argument, "layer width: no crossing of u = -K");
    std::size_t upto = 0;
    while (upto + 1 < r.size() && r[upto + 1] <= *r2) ++upto;
    upto = std::min(upto + 1, u.size() - 1);
    auto r1 = crossing(bottom, upto);
    if (!r1) throw Error(ErrorCode::invalid_argument, "layer width: no crossing of u = log(eta)");
    r1 = std::min(*r1, *r2);
    return {*r1, *r2, *r2 - *r1};
}

LayerWidths boundary_layer_widths(const RadialSolution& sol, double K, double eta) {
    const double cd = coulomb_constant(sol.dim);
    if (!(K >= 1.0)) throw Error(ErrorCode::invalid_argument, "K must be >= 1");
    if (!(eta >= std::exp(-K) * (1.0 - 1e-12)) || !(eta <= sol.lambda / (2.0 * cd))) {
        throw Error(ErrorCode::invalid_argument, "eta must lie in [exp(-K), lambda / (2 c_d)]");
    }
    return layer_widths_of(sol.r, sol.u, K, eta);
}

double cross_validate(const RadialSolution& radial, const ThermalSolution& thermal) {
    const Grid& g = thermal.grid;
    if (thermal.spec.family != PotentialFamily::quadratic) throw Error(ErrorCode::invalid_argument, "cross_validate: potential is not quadratic");
    if (std::abs(thermal.spec.lambda - radial.lambda) > 1e-12 * radial.lambda ||
        std::abs(thermal.beta - radial.beta) > 1e-12 * radial.beta || g.dim() != radial.dim) {
        throw Error(ErrorCode::invalid_argument, "cross_validate: parameter mismatch");
    }
    const double log_floor = std::log(rho_floor);
    double sup = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = g.radius(i);
        if (r > 0.9 * radial.r_max || thermal.log_mu[i] < log_floor) continue;
        sup = std::max(sup, std::abs(thermal.log_mu[i] - radial.value(r)));
    }
    return sup;
}

} // namespace droplet
