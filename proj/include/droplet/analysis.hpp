#pragma once

#include "droplet/equilibrium.hpp"
#include "droplet/expansion.hpp"
#include "droplet/radial.hpp"
#include "droplet/thermal.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace droplet {

struct BulkError {
    int k = 0;
    int n = 0;
    double value = 0.0;
};

struct TailFit {
    double coef = 0.0;
    double r2 = 0.0;
    std::size_t nodes = 0;
};

struct GapReport {
    double beta = 0.0;
    double h_gap_sup = 0.0;              // sup |h_beta - c_beta - h_inf + c_inf|
    double c_gap = 0.0;                  // |c_inf - c_beta|
    double grad_gap = 0.0;               // sup |grad(h_inf - h_beta)|, >= 2h from the frame
    double grad_gap_band_excluded = 0.0; // same, also >= 5h from the edge of sigma
    double ext_mass = 0.0;               // mu_beta(sigma^c), frame excluded
    double ext_entropy = 0.0;            // |int_{sigma^c} mu log mu|, frame excluded
    double beyond_box_tail = 0.0;        // bound on the mass outside the box
    double layer_width = 0.0;
    std::vector<BulkError> bulk_errors;
    std::optional<TailFit> tail_fit;
    double comparison_min = 0.0;         // min of the shifted gap; >= -eps_disc expected
    double discretization_tolerance = 0.0;
};

struct GapOptions {
    const RadialSolution* radial = nullptr;
    const ExpansionSequence* expansion = nullptr;
    std::vector<std::pair<int, int>> bulk_orders{{0, 0}, {1, 0}}; // (k, n)
    double layer_K = 8.0;
    std::optional<double> layer_eta;    // default min_sigma Delta V / (4 d c_d)
    bool tail_fit = false;
    double band_cells = 5.0;
};

GapReport gap_report(const ThermalSolution& thermal, const EquilibriumSolution& equilibrium,
                     const GapOptions& opts = {});

// Radial profile log(mean mu) over shells of width h about the origin.
std::pair<std::vector<double>, std::vector<double>> angular_profile(const ThermalSolution& thermal);

// Least squares for log mu against dist(x, sigma)^2 over 2h <= dist <= 0.5.
TailFit tail_quadratic_fit(const ThermalSolution& thermal, const NodeMask& sigma);
TailFit tail_quadratic_fit(const ScalarField& log_mu, const NodeMask& sigma);

struct BoundaryDecayFit {
    double C = 0.0; // log max|mu - f0| ~ a - C log^2(beta dist^2) on shells inside sigma
    double r2 = 0.0;
    std::size_t shells = 0;
};

// Shells of width h by distance to the complement of sigma, kept where
// beta dist^2 > e and the shell maximum exceeds 10x the deepest shell.
BoundaryDecayFit boundary_decay_fit(const ThermalSolution& thermal, const NodeMask& sigma);

struct RatePoint {
    double beta = 0.0;
    double value = 0.0;
};

struct RateFit {
    std::string quantity;
    std::vector<RatePoint> points; // points used by the fit
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double predicted = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    bool pass = false;
    std::vector<std::string> warnings;
};

// log value = slope log beta + intercept. Drops nonpositive values with a
// warning; needs >= 4 survivors spanning a factor >= 8 in beta.
RateFit fit_rate(const std::string& quantity, const std::vector<RatePoint>& points, double predicted,
                 std::pair<double, double> window);
RateFit fit_rate(const std::string& quantity, const std::vector<RatePoint>& points, double predicted);

} // namespace droplet
