#pragma once

#include "droplet/grid.hpp"
#include "droplet/potential.hpp"
#include "droplet/thermal.hpp"

#include <vector>

namespace droplet {

/**
 * Bulk approximations f_0 = Delta V / c_d and
 *   f_{k+1} = Delta V / c_d + laplacian(log f_k) / (beta c_d),
 * with defects eps_k = beta c_d (f_{k+1} - f_k).
 *
 * f_k lives on masks[k]; masks[0] covers every node within K cells of the
 * bulk and each level is the stencil erosion of the previous one, so every
 * level contains the bulk.
 */
struct ExpansionSequence {
    double beta = 0.0;
    int K = 0;
    double margin = 0.0;
    NodeMask bulk_mask;            // {x in sigma : dist(x, complement) >= margin}
    std::vector<ScalarField> f;    // f_0 .. f_K
    std::vector<NodeMask> masks;   // support of each f_k
    std::vector<ScalarField> eps;  // eps_0 .. eps_{K-1}, eps_k on masks[k + 1]
    double alpha = 0.0;            // min Delta V on the bulk
    bool lower_bound_holds = false; // f_k >= alpha / (4 c_d) on the bulk for all k
};

// Default bulk margin for rate fits: 0.7 times the droplet radius.
double default_bulk_margin(double droplet_radius);

ExpansionSequence expansion_sequence(const PotentialSpec& spec, const Grid& grid, const NodeMask& sigma, double beta,
                                     int K, double margin);

// sup over the bulk of |D^n (mu - f_k)| over all mixed n-th central differences.
double expansion_error(const ThermalSolution& thermal, const ExpansionSequence& seq, int k, int n_derivs);
double expansion_error(const ScalarField& mu, const ExpansionSequence& seq, int k, int n_derivs);

// sup over the eroded bulk of |-div(grad u / (1 + u)) + beta c_d f_k u - eps_k|,
// u = mu / f_k - 1, with the staggered flux written as a difference of log(1 + u).
double ratio_equation_residual(const ThermalSolution& thermal, const ExpansionSequence& seq, int k);
double ratio_equation_residual(const ScalarField& mu, const ExpansionSequence& seq, int k);

} // namespace droplet
