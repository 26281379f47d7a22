#include "droplet/error.hpp"
#include "droplet/expansion.hpp"
#include "droplet/thermal.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

using namespace droplet;

namespace {

const EquilibriumSolution& equilibrium_128() {
    static const EquilibriumSolution eq = solve_equilibrium(PotentialSpec::quadratic(1.0), Grid(2, 128, 2.0));
    return eq;
}

const ThermalSolution& thermal_128(double beta) {
    static std::map<double, ThermalSolution> cache;
    auto it = cache.find(beta);
    if (it == cache.end()) {
        ThermalOptions o;
        o.equilibrium = &equilibrium_128();
        it = cache.emplace(beta, solve_thermal(PotentialSpec::quadratic(1.0), Grid(2, 128, 2.0), beta, o)).first;
    }
    return it->second;
}

double cosine_pde_residual(int n) {
    const auto spec = PotentialSpec::cosine_perturbed(1.0, 0.1, {1.0, 0.0});
    const Grid g(2, n, 2.0);
    const ThermalSolution t = solve_thermal(spec, g, 100.0);
    const NodeMask bulk = threshold_mask(ScalarField::sample(g, [](const Point& x) { return std::hypot(x[0], x[1]); }),
                                         [](double r) { return r <= 0.5; });
    return pde_residual(t, bulk);
}

} // namespace

TEST_CASE("mass, positivity and convergence") {
    for (double beta : {10.0, 100.0}) {
        const ThermalSolution& t = thermal_128(beta);
        CHECK(integrate(t.mu) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(*std::min_element(t.mu.data().begin(), t.mu.data().end()) >= 0.0);
        CHECK(t.residual <= 1e-9);
        CHECK(t.m_beta > 0.0);
        for (std::size_t i = 0; i < t.grid.size(); ++i) {
            if (t.log_mu[i] > std::log(rho_floor)) CHECK(t.mu[i] > 0.0);
        }
    }
}

TEST_CASE("free energy is non-increasing along the iteration") {
    for (double beta : {10.0, 100.0}) {
        const auto& f = thermal_128(beta).free_energy_history;
        REQUIRE(!f.empty());
        for (std::size_t k = 1; k < f.size(); ++k) CHECK(f[k] <= f[k - 1] + 1e-12 * (std::abs(f[k - 1]) + 1.0));
    }
}

TEST_CASE("the solution minimises the free energy") {
    const ThermalSolution& t = thermal_128(100.0);
    const Grid& g = t.grid;
    const ScalarField v = eval(t.spec, g);
    const KernelTable kernel(g);
    for (double amp : {0.05, -0.05, 0.2}) {
        ScalarField l = t.log_mu;
        for (std::size_t i = 0; i < g.size(); ++i) l[i] += amp * std::sin(3.0 * g.point(i)[0]) * std::cos(g.point(i)[1]);
        // renormalise
        double mass = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) mass += std::exp(l[i]);
        mass *= g.cell_volume();
        ScalarField mu(g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            l[i] -= std::log(mass);
            mu[i] = std::exp(l[i]);
        }
        const ScalarField h = potential_of(mu, kernel);
        CHECK(free_energy(l, h, v, t.beta) > t.free_energy);
    }
}

TEST_CASE("without interaction the density is the normalised Gibbs weight") {
    const Grid g(2, 64, 3.0);
    const auto spec = PotentialSpec::quadratic(1.0);
    ThermalOptions o;
    o.interaction = false;
    const double beta = 5.0;
    const ThermalSolution t = solve_thermal(spec, g, beta, o);
    double z = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) z += std::exp(-beta * spec.value(g.point(i), 2));
    z *= g.cell_volume();
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(t.mu[i] == doctest::Approx(std::exp(-beta * spec.value(g.point(i), 2)) / z).epsilon(1e-8));
    }
}

TEST_CASE("Newton and mirror iterations reach the same fixed point") {
    const Grid g(2, 48, 2.0);
    const auto spec = PotentialSpec::quadratic(1.0);
    const ThermalSolution a = solve_thermal(spec, g, 8.0);
    ThermalOptions o;
    o.method = ThermalMethod::mirror;
    o.max_iter = 5000;
    const ThermalSolution b = solve_thermal(spec, g, 8.0, o);
    CHECK(a.c_beta == doctest::Approx(b.c_beta).epsilon(1e-7));
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(a.mu[i] == doctest::Approx(b.mu[i]).epsilon(1e-6).scale(1.0));
}

TEST_CASE("warm starts converge to the same solution") {
    const ThermalSolution& t100 = thermal_128(100.0);
    ThermalOptions o;
    o.initial_log_mu = rescale_warm_start(t100.log_mu, 100.0, 200.0, t100.spec);
    const ThermalSolution warm = solve_thermal(t100.spec, t100.grid, 200.0, o);
    const ThermalSolution& cold = thermal_128(200.0);
    CHECK(warm.c_beta == doctest::Approx(cold.c_beta).epsilon(1e-8));
    for (std::size_t i = 0; i < warm.grid.size(); ++i) CHECK(warm.mu[i] == doctest::Approx(cold.mu[i]).epsilon(1e-6).scale(1.0));
}

TEST_CASE("comparison inequality and pointwise bounds") {
    for (double beta : {10.0, 100.0, 200.0}) {
        const ThermalSolution& t = thermal_128(beta);
        CHECK(comparison_inequality_check(t, equilibrium_128()) >= -default_discretization_tolerance(t.grid));
        const PointwiseBounds pb = pointwise_bounds_check(t, equilibrium_128().sigma);
        INFO("beta=" << beta << " C=" << pb.upper_c << " " << pb.gaussian_lower_c << " " << pb.gaussian_lower_offset << " "
             << pb.gaussian_upper_c);
        CHECK(pb.tail_coefficient < 0.0);
        CHECK(pb.gaussian_lower_offset <= pb.cap);
        if (beta >= 100.0) CHECK(pb.pass);
    }
    const double a100 = pointwise_bounds_check(thermal_128(100.0), equilibrium_128().sigma).gaussian_lower_c;
    const double a200 = pointwise_bounds_check(thermal_128(200.0), equilibrium_128().sigma).gaussian_lower_c;
    CHECK(a200 <= a100);
    double lo = 1e300, hi = 0.0;
    for (double beta : {100.0, 200.0}) {
        const double b = pointwise_bounds_check(thermal_128(beta), equilibrium_128().sigma).bulk_min;
        lo = std::min(lo, b);
        hi = std::max(hi, b);
    }
    CHECK(hi / lo <= 1.5);
    const ThermalSolution& t = thermal_128(100.0);
    CHECK(comparison_inequality_value(equilibrium_128().potential, 0.3, 1.0, std::numeric_limits<double>::infinity(),
                                      equilibrium_128().potential, 0.3) == doctest::Approx(0.0));
    CHECK_THROWS_AS(comparison_inequality_value(t.h_beta, 0.0, 1.0, 1.0, ScalarField(Grid(2, 64, 2.0)), 0.0), Error);
}

TEST_CASE("thermal constant approaches the Frostman constant") {
    const double c_inf = equilibrium_128().c_inf;
    const double g100 = std::abs(thermal_128(100.0).c_beta - c_inf), g200 = std::abs(thermal_128(200.0).c_beta - c_inf);
    CHECK(g200 < g100);
    CHECK(g100 / g200 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("PDE form residual is second order in h") {
    const double r1 = cosine_pde_residual(64), r2 = cosine_pde_residual(128), r3 = cosine_pde_residual(256);
    INFO(r1 << " " << r2 << " " << r3);
    CHECK(r1 / r2 >= 3.0);
    CHECK(r1 / r2 <= 5.0);
    CHECK(r2 / r3 >= 3.0);
    CHECK(r2 / r3 <= 5.0);
}

TEST_CASE("automatic box half width") {
    CHECK(auto_half_width(PotentialSpec::quadratic(1.0), 2, 100.0) == doctest::Approx(2.0).epsilon(0.01));
    CHECK(auto_half_width(PotentialSpec::quadratic(1.0), 2, 4.0) == doctest::Approx(5.0).epsilon(0.01));
    CHECK(auto_half_width(PotentialSpec::quadratic(1.0), 3, 100.0) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("invalid inputs") {
    const Grid g(2, 32, 2.0);
    CHECK_THROWS_AS(solve_thermal(PotentialSpec::quadratic(1.0), g, 1.0), Error);
    ThermalOptions o;
    o.tol_fix = 0.0;
    CHECK_THROWS_AS(solve_thermal(PotentialSpec::quadratic(1.0), g, 10.0, o), Error);
    o = {};
    o.max_iter = 1;
    CHECK_THROWS_AS(solve_thermal(PotentialSpec::quadratic(1.0), g, 100.0, o), ConvergenceError);
    o = {};
    o.initial_log_mu = ScalarField(Grid(2, 64, 2.0));
    CHECK_THROWS_AS(solve_thermal(PotentialSpec::quadratic(1.0), g, 10.0, o), Error);
}

TEST_CASE("three-dimensional thermal droplet") {
    const Grid g(3, 32, 2.0);
    const ThermalSolution t = solve_thermal(PotentialSpec::quadratic(1.0), g, 50.0);
    CHECK(integrate(t.mu) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.mu[g.flat({16, 16, 16})] == doctest::Approx(3.0 / (4.0 * M_PI)).epsilon(0.05));
}
