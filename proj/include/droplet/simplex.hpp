#pragma once

#include <span>
#include <vector>

namespace droplet {

// Euclidean projection of y onto {w >= 0, sum w = total}: sort descending,
// find the largest rho with y_(rho) > (sum_{k<=rho} y_(k) - total) / rho,
// and threshold at that value.
void project_onto_simplex(std::span<const double> y, std::span<double> out, double total = 1.0);

} // namespace droplet
