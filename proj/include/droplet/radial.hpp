#pragma once

#include "droplet/thermal.hpp"

#include <vector>

namespace droplet {

/**
 * Radial log-density u(r) for V = (lambda/2)|x|^2, solving
 *   (r^{d-1} u')' = beta r^{d-1} (c_d e^u - Delta V),  u'(0) = 0,
 * with Delta V = lambda d and unit total mass.
 */
struct RadialSolution {
    double lambda = 0.0;
    double beta = 0.0;
    int dim = 0;
    double h_r = 0.0;
    double r_max = 0.0;
    std::vector<double> r;   // r_j = j h_r
    std::vector<double> u;
    double u0 = 0.0;
    double mass = 0.0;
    double tail_bound = 0.0; // bound on the mass beyond r_max
    int shooting_iterations = 0;
    // Shooting parameter log(log(Delta V / c_d) - u(0)).
    double log_gap = 0.0;

    double value(double radius) const; // cubic interpolation, clamped to [0, r_max]
};

// Mass-balance droplet radius (c_d / (lambda d |B_1|))^{1/d}.
double radial_droplet_radius(double lambda, int dim);
// R + max(1, 8 / sqrt(beta)).
double default_r_max(double lambda, int dim, double beta);

// h_r <= 0 selects min(1e-3, 0.02 / sqrt(beta lambda d)).
RadialSolution solve_radial(double lambda, double beta, int dim, double r_max, double tol = 1e-12,
                            double h_r = 0.0);

struct LayerWidths {
    double r1 = 0.0;
    double r2 = 0.0;
    double width = 0.0;
};

// r2: crossing of u = -K; r1: last crossing of u = log(eta) at or before r2.
LayerWidths boundary_layer_widths(const RadialSolution& sol, double K, double eta);
// Same crossings on an arbitrary non-increasing profile sampled on r.
LayerWidths layer_widths_of(const std::vector<double>& r, const std::vector<double>& u, double K, double eta);

// sup over nodes with |x| <= 0.9 r_max and mu >= rho_floor of |log mu - u(|x|)|.
double cross_validate(const RadialSolution& radial, const ThermalSolution& thermal);

} // namespace droplet
