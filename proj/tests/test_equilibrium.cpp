#include "droplet/equilibrium.hpp"
#include "droplet/error.hpp"
#include "droplet/simplex.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace droplet;

namespace {

const EquilibriumSolution& disk_solution() {
    static const EquilibriumSolution sol = solve_equilibrium(PotentialSpec::quadratic(1.0), Grid(2, 128, 2.0));
    return sol;
}

double disk_potential(double r) { return r >= 1.0 ? -std::log(r) : 0.5 * (1.0 - r * r); }

} // namespace

TEST_CASE("simplex projection") {
    std::mt19937 rng(11);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 20; ++t) {
        std::vector<double> y(37), p(37);
        for (double& v : y) v = nd(rng);
        const double total = 0.5 + t;
        project_onto_simplex(y, p, total);
        CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(total).epsilon(1e-12));
        CHECK(*std::min_element(p.begin(), p.end()) >= 0.0);
        // Optimality: p - y is constant on the support and no smaller elsewhere.
        double shift = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (p[i] > 0.0) shift = p[i] - y[i];
        }
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (p[i] > 0.0) CHECK(p[i] - y[i] == doctest::Approx(shift).epsilon(1e-12));
            else CHECK(y[i] + shift <= 1e-12);
        }
    }
    std::vector<double> inside{0.2, 0.3, 0.5}, out(3);
    project_onto_simplex(inside, out, 1.0);
    for (int i = 0; i < 3; ++i) CHECK(out[i] == doctest::Approx(inside[i]));
}

TEST_CASE("disk droplet for the quadratic potential") {
    const EquilibriumSolution& sol = disk_solution();
    const Grid& g = sol.grid;
    const double h = g.spacing();
    CHECK(integrate(sol.density) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*std::min_element(sol.density.data().begin(), sol.density.data().end()) >= 0.0);
    CHECK(sol.kkt_residual <= 1e-7);
    CHECK(sol.droplet_radius == doctest::Approx(1.0).epsilon(2.0 * h));
    CHECK(std::abs(sol.c_inf - 0.5) <= 0.02);
    const ScalarField inside = distance_to_complement(sol.sigma);
    std::size_t bulk = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (inside[i] >= 3.0 * h) {
            CHECK(std::abs(sol.density[i] - 1.0 / M_PI) <= 0.05 / M_PI);
            ++bulk;
        }
    }
    CHECK(bulk > 1000);
    double perr = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) perr = std::max(perr, std::abs(sol.potential[i] - disk_potential(g.radius(i))));
    CHECK(perr <= 4.0 * h);
    CHECK(!sol.masks_disagree);
}

TEST_CASE("complementarity") {
    const EquilibriumSolution& sol = disk_solution();
    double on_support = 0.0, below = 0.0;
    for (std::size_t i = 0; i < sol.grid.size(); ++i) {
        on_support = std::max(on_support, sol.density[i] * std::abs(sol.zeta[i]));
        below = std::min(below, sol.zeta[i]);
    }
    CHECK(on_support <= 1e-7);
    CHECK(below >= -1e-7);
    for (std::size_t i = 0; i < sol.grid.size(); ++i) {
        if (sol.sigma[i]) CHECK(std::abs(sol.zeta[i]) <= 1e-6);
    }
}

TEST_CASE("energy decreases along the projected-gradient phase") {
    const EquilibriumSolution& sol = disk_solution();
    const auto& e = sol.energy_history;
    REQUIRE(e.size() >= 2);
    for (std::size_t k = 1; k < e.size(); ++k) CHECK(e[k] <= e[k - 1] + 1e-12 * std::abs(e[k - 1]));
    CHECK(sol.energy <= e.front());
}

TEST_CASE("the solution minimises the discrete energy over the simplex") {
    const EquilibriumSolution& sol = disk_solution();
    const Grid& g = sol.grid;
    const ScalarField v = eval(PotentialSpec::quadratic(1.0), g);
    const KernelTable kernel(g);
    std::mt19937 rng(5);
    std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
    for (int t = 0; t < 6; ++t) {
        ScalarField mu = sol.density;
        // Move mass from a support node to an arbitrary node.
        std::size_t from = pick(rng);
        while (!sol.sigma[from]) from = pick(rng);
        const std::size_t to = pick(rng);
        const double dm = 0.2 * mu[from];
        mu[from] -= dm;
        mu[to] += dm;
        const ScalarField h = potential_of(mu, kernel);
        CHECK(discrete_energy(mu, h, v) >= sol.energy - 1e-12);
    }
}

TEST_CASE("three-dimensional ball") {
    const EquilibriumSolution sol = solve_equilibrium(PotentialSpec::quadratic(1.0), Grid(3, 40, 2.0));
    const Grid& g = sol.grid;
    CHECK(sol.droplet_radius == doctest::Approx(1.0).epsilon(2.0 * g.spacing()));
    const ScalarField inside = distance_to_complement(sol.sigma);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (inside[i] >= 3.0 * g.spacing()) CHECK(sol.density[i] == doctest::Approx(3.0 / (4.0 * M_PI)).epsilon(0.05));
    }
}

TEST_CASE("effective potential grows quadratically off the droplet") {
    const EquilibriumSolution sol = solve_equilibrium(PotentialSpec::quadratic(1.0), Grid(2, 128, 2.5));
    const ZetaGrowth zg = zeta_growth_check(sol);
    // min over r >= 1 of (r^2/2 - log r - 1/2) / min((r - 1)^2, 1), attained at r = 2
    const double analytic = 1.5 - std::log(2.0);
    CHECK(zg.pass);
    CHECK(zg.alpha_hat_lower == doctest::Approx(analytic).epsilon(0.05));
}

TEST_CASE("anisotropic and perturbed droplets") {
    const Grid g(2, 96, 2.0);
    const EquilibriumSolution ell = solve_equilibrium(PotentialSpec::anisotropic(1.0, {1.5, 0.5}), g);
    CHECK(ell.kkt_residual <= 1e-7);
    const ScalarField inside = distance_to_complement(ell.sigma);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (inside[i] >= 3.0 * g.spacing()) CHECK(ell.density[i] == doctest::Approx(2.0 / (2.0 * M_PI)).epsilon(0.05));
    }
    const auto cos_spec = PotentialSpec::cosine_perturbed(1.0, 0.1, {1.0, 0.0});
    const EquilibriumSolution pert = solve_equilibrium(cos_spec, g);
    const ScalarField in2 = distance_to_complement(pert.sigma);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (in2[i] >= 3.0 * g.spacing()) {
            CHECK(pert.density[i] == doctest::Approx(cos_spec.laplacian(g.point(i), 2) / (2.0 * M_PI)).epsilon(0.05));
        }
    }
}

TEST_CASE("grid refinement moves the Frostman constant by O(h)") {
    const EquilibriumSolution coarse = solve_equilibrium(PotentialSpec::quadratic(1.0), Grid(2, 64, 2.0));
    CHECK(std::abs(coarse.c_inf - disk_solution().c_inf) <= coarse.grid.spacing());
}

TEST_CASE("warm start from the solution converges immediately") {
    EquilibriumOptions o;
    o.initial = disk_solution().density;
    const EquilibriumSolution again = solve_equilibrium(PotentialSpec::quadratic(1.0), Grid(2, 128, 2.0), o);
    CHECK(again.c_inf == doctest::Approx(disk_solution().c_inf).epsilon(1e-7));
    CHECK(again.iterations <= disk_solution().iterations);
}

TEST_CASE("failure modes") {
    EquilibriumOptions o;
    o.max_iter = 1;
    CHECK_THROWS_AS(solve_equilibrium(PotentialSpec::quadratic(1.0), Grid(2, 64, 2.0), o), ConvergenceError);
    try {
        solve_equilibrium(PotentialSpec::quadratic(1.0), Grid(2, 64, 1.0));
        FAIL("expected box error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::box_too_small);
    }
    CHECK_THROWS_AS(solve_equilibrium(PotentialSpec::quadratic(-1.0), Grid(2, 64, 2.0)), Error);
}

TEST_CASE("kkt residual of a feasible non-optimal density is large") {
    const Grid g(2, 64, 2.0);
    const ScalarField v = eval(PotentialSpec::quadratic(1.0), g);
    ScalarField mu(g, 1.0 / 16.0);
    const ScalarField h = potential_of(mu, KernelTable(g));
    CHECK(kkt_residual(mu, h, v, 0.0).first > 0.1);
}
