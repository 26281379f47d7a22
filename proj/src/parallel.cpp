#include "droplet/parallel.hpp"

#include <omp.h>

#include <algorithm>
#include <vector>

namespace droplet::parallel {

namespace {
constexpr std::size_t chunk = 4096;

template <typename Term>
double chunked_sum(std::size_t n, Term term) {
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    std::vector<double> partial(n_chunks, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n_chunks); ++c) {
        const std::size_t begin = static_cast<std::size_t>(c) * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        double s = 0.0;
        for (std::size_t i = begin; i < end; ++i) s += term(i);
        partial[static_cast<std::size_t>(c)] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}
} // namespace

std::size_t max_threads() { return static_cast<std::size_t>(omp_get_max_threads()); }

void set_threads(std::size_t n) { omp_set_num_threads(static_cast<int>(std::max<std::size_t>(1, n))); }

double deterministic_sum(std::span<const double> values) {
    return chunked_sum(values.size(), [&](std::size_t i) { return values[i]; });
}

double deterministic_dot(std::span<const double> a, std::span<const double> b) {
    return chunked_sum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

} // namespace droplet::parallel
