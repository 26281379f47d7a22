#pragma once

#include <cstddef>
#include <span>

namespace droplet::parallel {

std::size_t max_threads();
void set_threads(std::size_t n);

// Sum in a fixed association order: fixed-size chunks summed left to right,
// partials combined serially. The result does not depend on the thread count.
double deterministic_sum(std::span<const double> values);

// Same contract for a dot product.
double deterministic_dot(std::span<const double> a, std::span<const double> b);

} // namespace droplet::parallel
