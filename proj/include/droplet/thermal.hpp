#pragma once

#include "droplet/coulomb.hpp"
#include "droplet/equilibrium.hpp"
#include "droplet/grid.hpp"
#include "droplet/potential.hpp"

#include <optional>
#include <vector>

namespace droplet {

inline constexpr double rho_floor = 1e-280;

enum class ThermalMethod {
    newton, // Newton-Krylov on log mu with line search on E_beta
    mirror, // damped mirror-descent fixed point
};

struct ThermalOptions {
    double tol_fix = 1e-9;
    int max_iter = 200;            // outer iterations (Newton) or mirror steps
    double damping_init = 0.0;     // mirror step; <= 0 means min(1, 4/sqrt(beta))
    ThermalMethod method = ThermalMethod::newton;
    int cg_max_iter = 400;
    bool interaction = true;       // false drops h^mu (test hook)
    // Initial log-density; otherwise built from `equilibrium` when given, or a
    // radial estimate of the droplet.
    std::optional<ScalarField> initial_log_mu;
    const EquilibriumSolution* equilibrium = nullptr;
};

struct ThermalSolution {
    Grid grid;
    PotentialSpec spec;
    double beta = 0.0;
    ScalarField log_mu;
    ScalarField mu;
    ScalarField h_beta;
    double c_beta = 0.0;
    double m_beta = 0.0;
    double residual = 0.0;
    double free_energy = 0.0;
    int iterations = 0;
    int cg_iterations = 0;
    double frame_mass = 0.0; // mass on the outermost ring of cells
    std::vector<double> free_energy_history;
    std::vector<double> residual_history;
};

// L = max(2R, R + max(1, 8 / sqrt(beta_min))) with R the mass-balance radius
// of Delta V / c_d; the first term keeps the equilibrium margin.
double auto_half_width(const PotentialSpec& spec, int dim, double beta_min);

// log f0 + (beta / beta_prev) (log mu_prev - log f0) with f0 = Delta V / c_d:
// keeps the bulk and rescales the exponent of the Gaussian tail.
ScalarField rescale_warm_start(const ScalarField& log_mu_prev, double beta_prev, double beta,
                               const PotentialSpec& spec);

ThermalSolution solve_thermal(const PotentialSpec& spec, const Grid& grid, double beta,
                              const ThermalOptions& opts = {});
ThermalSolution solve_thermal(const PotentialSpec& spec, Convolver& convolver, double beta,
                              const ThermalOptions& opts = {});

// Free energy E(mu) + (1/beta) <mu, log mu> of a normalised log-density.
double free_energy(const ScalarField& log_mu, const ScalarField& h, const ScalarField& v, double beta);

struct PointwiseBounds {
    // Smallest C with log mu <= min(log C, log C - beta (W - C)), W = V (d = 3)
    // or V - log|x| (d = 2), over all nodes above rho_floor.
    double upper_c = 0.0;
    // Lower Gaussian bound -C beta dist^2 - C0 <= log mu in the neighbourhood,
    // C0 = max(0, -min log mu on sigma) and C the smallest admissible rate.
    double gaussian_lower_c = 0.0;
    double gaussian_lower_offset = 0.0;
    // Smallest C' with log mu <= -beta dist^2 / C' + C' in the neighbourhood.
    double gaussian_upper_c = 0.0;
    double bulk_min = 0.0;       // min mu on sigma
    double tail_coefficient = 0.0; // slope of log mu against dist^2 on the shell
    double tail_r2 = 0.0;
    double neighbourhood = 0.5;
    double cap = 10.0;
    bool pass = false;
};

PointwiseBounds pointwise_bounds_check(const ThermalSolution& sol, const NodeMask& sigma,
                                       double neighbourhood = 0.5, double cap = 10.0);

// min over nodes of (h_beta - c_beta - h_inf + c_inf) + log(m_beta) / beta.
double comparison_inequality_check(const ThermalSolution& thermal, const EquilibriumSolution& equilibrium);
// Field-level form; beta = infinity drops the log(m_beta) term.
double comparison_inequality_value(const ScalarField& h_beta, double c_beta, double m_beta, double beta,
                                   const ScalarField& h_inf, double c_inf);

// sup over region of |laplacian(log mu) - beta (c_d mu - Delta V)|; frame nodes are skipped.
double pde_residual(const ThermalSolution& sol, const NodeMask& region);

// Default discretisation allowance 10 h^2 for comparison-type checks.
double default_discretization_tolerance(const Grid& grid);

} // namespace droplet
