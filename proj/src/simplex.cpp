#include "droplet/simplex.hpp"

#include "droplet/error.hpp"

#include <algorithm>
#include <functional>

namespace droplet {

void project_onto_simplex(std::span<const double> y, std::span<double> out, double total) {
    if (y.empty() || out.size() != y.size()) throw Error(ErrorCode::invalid_argument, "simplex projection size");
    if (!(total > 0.0)) throw Error(ErrorCode::invalid_argument, "simplex total must be positive");
    std::vector<double> sorted(y.begin(), y.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double threshold = 0.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        cumulative += sorted[k];
        const double t = (cumulative - total) / static_cast<double>(k + 1);
        if (sorted[k] > t) threshold = t;
        else break;
    }
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = std::max(y[i] - threshold, 0.0);
}

} // namespace droplet
