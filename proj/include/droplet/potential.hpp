#pragma once

#include "droplet/grid.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace droplet {

struct EquilibriumSolution;

enum class PotentialFamily {
    quadratic,             // (lambda/2) |x|^2
    anisotropic_quadratic, // (lambda/2) sum_i a_i x_i^2
    quartic,               // (lambda/4) |x|^4
    quadratic_plus_cosine, // (lambda/2) |x|^2 + epsilon cos(k . x)
    custom,
};

std::string family_name(PotentialFamily family);
PotentialFamily parse_family(const std::string& name);

/// External confining potential with analytic value and Laplacian.
struct PotentialSpec {
    using Evaluator = std::function<double(const Point&)>;

    PotentialFamily family = PotentialFamily::quadratic;
    double lambda = 1.0;
    std::vector<double> anisotropy;  // a, one entry per axis
    double epsilon = 0.0;
    std::vector<double> wavevector;  // k, one entry per axis
    Evaluator custom_value;
    Evaluator custom_laplacian;
    // Declared regularity order m (V in C^{2m}); built-ins are smooth, capped at 6.
    int smoothness = 6;

    static PotentialSpec quadratic(double lambda = 1.0);
    static PotentialSpec anisotropic(double lambda, std::vector<double> a);
    static PotentialSpec quartic(double lambda = 1.0);
    static PotentialSpec cosine_perturbed(double lambda, double epsilon, std::vector<double> k);
    static PotentialSpec custom(Evaluator value, Evaluator laplacian, int smoothness);

    // Parameter validation for a given dimension; throws invalid_argument.
    void validate(int dim) const;

    double value(const Point& x, int dim) const;
    double laplacian(const Point& x, int dim) const;
    bool is_radial() const noexcept { return family == PotentialFamily::quadratic || family == PotentialFamily::quartic; }
};

// Samples V at cell centres. Throws assumption_violated ("assumption A4
// violated") for the Laplacian when sampled Delta V <= 0 somewhere.
ScalarField eval(const PotentialSpec& spec, const Grid& grid);
ScalarField eval_laplacian(const PotentialSpec& spec, const Grid& grid);

// Coulomb normalisation c_d: 2 pi for d = 2, d (d - 2) |B_1| otherwise.
double coulomb_constant(int dim);

// Radius R of the centred ball carrying unit mass of max(Delta V, 0)/c_d,
// from cumulative sums over grid nodes sorted by radius. Infinity if the grid
// holds less than unit mass.
double droplet_radius_estimate(const PotentialSpec& spec, const Grid& grid);

struct AssumptionCheck {
    std::string name;
    bool pass = false;
    bool grid_checked = false; // false: certified symbolically for the family
    std::string note;
};

struct AssumptionReport {
    Grid grid;
    std::vector<AssumptionCheck> checks; // A1..A5 in order
    double alpha = 0.0;                  // min sampled Delta V near Sigma
    double check_radius = 0.2;           // neighbourhood width used for A4
    // min over exterior nodes of zeta / min(dist^2, 1); only with a solution.
    std::optional<double> zeta_growth;

    bool all_pass() const;
    const AssumptionCheck& operator[](std::size_t i) const { return checks.at(i); }
};

AssumptionReport check_assumptions(const PotentialSpec& spec, const Grid& grid,
                                   const EquilibriumSolution* solution = nullptr);

} // namespace droplet
