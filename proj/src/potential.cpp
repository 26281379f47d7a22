#include "droplet/potential.hpp"

#include "droplet/equilibrium.hpp"
#include "droplet/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace droplet {

std::string family_name(PotentialFamily family) {
    switch (family) {
    case PotentialFamily::quadratic: return "quadratic";
    case PotentialFamily::anisotropic_quadratic: return "anisotropic-quadratic";
    case PotentialFamily::quartic: return "quartic";
    case PotentialFamily::quadratic_plus_cosine: return "quadratic-plus-cosine";
    case PotentialFamily::custom: return "custom";
    }
    return "unknown";
}

PotentialFamily parse_family(const std::string& name) {
    for (auto f : {PotentialFamily::quadratic, PotentialFamily::anisotropic_quadratic, PotentialFamily::quartic,
                   PotentialFamily::quadratic_plus_cosine, PotentialFamily::custom}) {
        if (family_name(f) == name) return f;
    }
    throw Error(ErrorCode::invalid_argument, "unknown potential family '" + name + "'");
}

PotentialSpec PotentialSpec::quadratic(double lambda) {
    PotentialSpec s;
    s.family = PotentialFamily::quadratic;
    s.lambda = lambda;
    return s;
}

PotentialSpec PotentialSpec::anisotropic(double lambda, std::vector<double> a) {
    PotentialSpec s;
    s.family = PotentialFamily::anisotropic_quadratic;
    s.lambda = lambda;
    s.anisotropy = std::move(a);
    return s;
}

PotentialSpec PotentialSpec::quartic(double lambda) {
    PotentialSpec s;
    s.family = PotentialFamily::quartic;
    s.lambda = lambda;
    return s;
}

PotentialSpec PotentialSpec::cosine_perturbed(double lambda, double epsilon, std::vector<double> k) {
    PotentialSpec s;
    s.family = PotentialFamily::quadratic_plus_cosine;
    s.lambda = lambda;
    s.epsilon = epsilon;
    s.wavevector = std::move(k);
    return s;
}

PotentialSpec PotentialSpec::custom(Evaluator value, Evaluator laplacian, int smoothness) {
    PotentialSpec s;
    s.family = PotentialFamily::custom;
    s.custom_value = std::move(value);
    s.custom_laplacian = std::move(laplacian);
    s.smoothness = smoothness;
    return s;
}

void PotentialSpec::validate(int dim) const {
    const auto bad = [](const std::string& msg) { throw Error(ErrorCode::invalid_argument, msg); };
    if (family == PotentialFamily::custom) {
        // Finite-differencing V is refused: both evaluators are mandatory.
        if (!custom_value || !custom_laplacian) bad("custom potential needs value and laplacian evaluators");
        if (smoothness < 2) bad("custom potential smoothness must be >= 2");
        return;
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) bad("lambda must be positive");
    if (family == PotentialFamily::anisotropic_quadratic) {
        if (static_cast<int>(anisotropy.size()) != dim) bad("anisotropy vector must have one entry per axis");
        for (double a : anisotropy) {
            if (!(a > 0.0)) bad("anisotropy entries must be positive");
        }
    }
    if (family == PotentialFamily::quadratic_plus_cosine) {
        if (static_cast<int>(wavevector.size()) != dim) bad("wavevector must have one entry per axis");
        if (!std::isfinite(epsilon)) bad("epsilon must be finite");
    }
}

double PotentialSpec::value(const Point& x, int dim) const {
    double r2 = 0.0;
    for (int a = 0; a < dim; ++a) r2 += x[a] * x[a];
    switch (family) {
    case PotentialFamily::quadratic: return 0.5 * lambda * r2;
    case PotentialFamily::anisotropic_quadratic: {
        double s = 0.0;
        for (int a = 0; a < dim; ++a) s += anisotropy[a] * x[a] * x[a];
        return 0.5 * lambda * s;
    }
    case PotentialFamily::quartic: return 0.25 * lambda * r2 * r2;
    case PotentialFamily::quadratic_plus_cosine: {
        double phase = 0.0;
        for (int a = 0; a < dim; ++a) phase += wavevector[a] * x[a];
        return 0.5 * lambda * r2 + epsilon * std::cos(phase);
    }
    case PotentialFamily::custom: return custom_value(x);
    }
    return 0.0;
}

double PotentialSpec::laplacian(const Point& x, int dim) const {
    switch (family) {
    case PotentialFamily::quadratic: return lambda * dim;
    case PotentialFamily::anisotropic_quadratic:
        return lambda * std::accumulate(anisotropy.begin(), anisotropy.begin() + dim, 0.0);
    case PotentialFamily::quartic: {
        double r2 = 0.0;
        for (int a = 0; a < dim; ++a) r2 += x[a] * x[a];
        return lambda * (dim + 2) * r2;
    }
    case PotentialFamily::quadratic_plus_cosine: {
        double phase = 0.0, k2 = 0.0;
        for (int a = 0; a < dim; ++a) {
            phase += wavevector[a] * x[a];
            k2 += wavevector[a] * wavevector[a];
        }
        return lambda * dim - epsilon * k2 * std::cos(phase);
    }
    case PotentialFamily::custom: return custom_laplacian(x);
    }
    return 0.0;
}

ScalarField eval(const PotentialSpec& spec, const Grid& grid) {
    spec.validate(grid.dim());
    const int d = grid.dim();
    return ScalarField::sample(grid, [&](const Point& x) { return spec.value(x, d); });
}

ScalarField eval_laplacian(const PotentialSpec& spec, const Grid& grid) {
    spec.validate(grid.dim());
    const int d = grid.dim();
    ScalarField lap = ScalarField::sample(grid, [&](const Point& x) { return spec.laplacian(x, d); });
    const double lo = *std::min_element(lap.data().begin(), lap.data().end());
    if (!(lo > 0.0)) {
        throw Error(ErrorCode::assumption_violated, "assumption A4 violated (Delta V <= 0 on the grid)");
    }
    return lap;
}

double coulomb_constant(int dim) {
    if (dim == 2) return 2.0 * std::numbers::pi;
    // d (d - 2) |B_1|, |B_1| = pi^{d/2} / Gamma(d/2 + 1)
    const double ball = std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim + 1.0);
    return dim * (dim - 2) * ball;
}

double droplet_radius_estimate(const PotentialSpec& spec, const Grid& grid) {
    spec.validate(grid.dim());
    const int d = grid.dim();
    const double cd = coulomb_constant(d);
    std::vector<std::pair<double, double>> shells(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Point x = grid.point(i);
        shells[i] = {grid.radius(i), std::max(spec.laplacian(x, d), 0.0) / cd * grid.cell_volume()};
    }
    std::sort(shells.begin(), shells.end());
    double mass = 0.0;
    for (const auto& [r, m] : shells) {
        mass += m;
        if (mass >= 1.0) return r;
    }
    return std::numeric_limits<double>::infinity();
}

bool AssumptionReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const AssumptionCheck& c) { return c.pass; });
}

AssumptionReport check_assumptions(const PotentialSpec& spec, const Grid& grid, const EquilibriumSolution* solution) {
    spec.validate(grid.dim());
    const int d = grid.dim();
    AssumptionReport report{grid, {}, 0.0, 0.2, std::nullopt};
    const bool builtin = spec.family != PotentialFamily::custom;

    // A1: V in C^2. All built-ins are analytic; custom potentials declare it.
    report.checks.push_back({"A1", builtin || spec.smoothness >= 2, false,
                             builtin ? "analytic family" : "declared smoothness"});

    // A2: growth. Checked along the box diagonal beyond the support estimate:
    // V - log|x| (d = 2) or V (d >= 3) must increase.
    const double r_est = droplet_radius_estimate(spec, grid);
    {
        bool increasing = true;
        const double r_end = std::sqrt(static_cast<double>(d)) * grid.half_width();
        const double r_start = std::min(r_est, r_end);
        const int samples = 256;
        double prev = -std::numeric_limits<double>::infinity();
        for (int s = 0; s <= samples; ++s) {
            const double r = r_start + (r_end - r_start) * s / samples;
            if (r <= 0.0) continue;
            const double c = r / std::sqrt(static_cast<double>(d));
            const Point x{c, c, d == 3 ? c : 0.0};
            const double val = spec.value(x, d) - (d == 2 ? std::log(r) : 0.0);
            if (val < prev) increasing = false;
            prev = val;
        }
        report.checks.push_back({"A2", increasing && std::isfinite(r_est), true, "growth along box diagonal"});
    }

    // A3: integrability of exp(-beta V / 2) type tails. All built-ins grow at
    // least quadratically, which settles it for every beta >= 1.
    report.checks.push_back({"A3", builtin, false,
                             builtin ? "quadratic or faster growth" : "not certifiable on a grid"});

    // A4: Delta V >= alpha > 0 within check_radius of Sigma.
    NodeMask near(grid);
    if (solution != nullptr) {
        require_same_grid(grid, solution->sigma.grid(), "check_assumptions");
        if (!solution->sigma.empty()) {
            const ScalarField dist = distance_to(solution->sigma);
            for (std::size_t i = 0; i < grid.size(); ++i) near.set(i, dist[i] <= report.check_radius);
        }
    } else {
        for (std::size_t i = 0; i < grid.size(); ++i) near.set(i, grid.radius(i) <= r_est + report.check_radius);
    }
    double alpha = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (near[i]) alpha = std::min(alpha, spec.laplacian(grid.point(i), d));
    }
    report.alpha = alpha;
    report.checks.push_back({"A4", std::isfinite(alpha) && alpha > 0.0, true, "min sampled Delta V near Sigma"});

    // A5: zeta >= alpha min(dist^2, 1); only decidable after solving.
    if (solution != nullptr) {
        const ZetaGrowth zg = zeta_growth_check(*solution);
        report.zeta_growth = zg.alpha_hat_lower;
        report.checks.push_back({"A5", zg.pass, true, "zeta growth off Sigma"});
    } else {
        report.checks.push_back({"A5", true, false, "deferred until Sigma is known"});
    }
    return report;
}

} // namespace droplet
