#pragma once

// Serial reference implementations of the parallel kernels. Used by the test
// suites as independent oracles and by the benchmark for comparison.

#include "droplet/coulomb.hpp"
#include "droplet/grid.hpp"

namespace droplet::reference {

// O(N^2) double sum h^d sum_j K(x_i - x_j) density_j.
ScalarField direct_potential(const ScalarField& density, const KernelTable& kernel);

// Plain left-to-right sum times h^d.
double integrate_serial(const ScalarField& f);

ScalarField laplacian_serial(const ScalarField& f);

// Brute-force nearest-node distance, O(N * |mask|).
ScalarField distance_brute_force(const NodeMask& mask);

} // namespace droplet::reference
