#pragma once

#include "droplet/coulomb.hpp"
#include "droplet/grid.hpp"
#include "droplet/potential.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace droplet {

struct EquilibriumOptions {
    double tol_kkt = 1e-7;
    int max_iter = 20000; // shared by projected-gradient steps and polish rounds
    // Active-set refinement after the projected-gradient phase: the
    // equality-constrained problem on the support is solved by CG.
    bool polish = true;
    // Projected-gradient phase stops here when polishing is enabled.
    double spg_tol = 1e-4;
    int polish_rounds = 8;
    double polish_cg_tol = 1e-11;
    // Initial density; default is uniform on the analytic droplet estimate.
    std::optional<ScalarField> initial;
    // Skip the droplet-fits-the-box precondition (tests only).
    bool check_box = true;
};

struct EquilibriumSolution {
    Grid grid;
    ScalarField density;   // mu_inf
    ScalarField potential; // h^{mu_inf}
    ScalarField zeta;      // h + V - c_inf, raw values
    double c_inf = 0.0;
    NodeMask sigma;        // {mu > delta_supp}
    NodeMask zero_set;     // {zeta < tol_kkt}
    double support_threshold = 0.0;
    // Largest distance from a node of one mask to the other; flagged above 3h.
    double mask_disagreement = 0.0;
    bool masks_disagree = false;
    double kkt_residual = 0.0;
    int iterations = 0;
    int polish_rounds = 0;
    int cg_iterations = 0;
    double energy = 0.0;
    std::vector<double> energy_history;
    std::vector<double> residual_history;
    double droplet_radius = 0.0;          // radius of the ball with the volume of sigma
    double droplet_radius_estimate = 0.0; // analytic mass-balance estimate
};

struct ZetaGrowth {
    double alpha_hat_lower = 0.0;
    bool pass = false;
};

// Discrete energy 1/2 <mu, K mu> + <V, mu> with <a, b> = h^d sum a b.
double discrete_energy(const ScalarField& density, const ScalarField& potential, const ScalarField& v);

// KKT residual max(max mu |h + V - c|, max (c - h - V)_+) with c the
// mass-weighted mean of h + V over nodes above `threshold`. Returns {residual, c}.
std::pair<double, double> kkt_residual(const ScalarField& density, const ScalarField& potential,
                                       const ScalarField& v, double threshold);

EquilibriumSolution solve_equilibrium(const PotentialSpec& spec, const Grid& grid,
                                      const EquilibriumOptions& opts = {});
EquilibriumSolution solve_equilibrium(const PotentialSpec& spec, Convolver& convolver,
                                      const EquilibriumOptions& opts = {});

// min over exterior nodes at distance >= 2h from sigma of zeta / min(dist^2, 1),
// dist measured to the union of the cells of sigma (centre distance - h/2).
ZetaGrowth zeta_growth_check(const EquilibriumSolution& sol);

} // namespace droplet
