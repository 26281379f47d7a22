#include "droplet/equilibrium.hpp"
#include "droplet/error.hpp"
#include "droplet/potential.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace droplet;

namespace {

std::vector<PotentialSpec> families() {
    return {PotentialSpec::quadratic(1.3), PotentialSpec::anisotropic(0.8, {1.0, 2.0, 0.5}), PotentialSpec::quartic(1.1),
            PotentialSpec::cosine_perturbed(1.0, 0.2, {1.5, -0.5, 0.7})};
}

// Second-order central differences of V along every axis.
double fd_laplacian(const PotentialSpec& s, const Point& x, int dim, double h) {
    double acc = 0.0;
    for (int a = 0; a < dim; ++a) {
        Point p = x, m = x;
        p[a] += h;
        m[a] -= h;
        acc += (s.value(p, dim) - 2.0 * s.value(x, dim) + s.value(m, dim)) / (h * h);
    }
    return acc;
}

} // namespace

TEST_CASE("family names round-trip") {
    for (auto f : {PotentialFamily::quadratic, PotentialFamily::anisotropic_quadratic, PotentialFamily::quartic,
                   PotentialFamily::quadratic_plus_cosine, PotentialFamily::custom}) {
        CHECK(parse_family(family_name(f)) == f);
    }
    CHECK_THROWS_AS(parse_family("sextic"), Error);
}

TEST_CASE("analytic laplacians agree with second-order finite differences") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int dim : {2, 3}) {
        for (auto s : families()) {
            if (s.family == PotentialFamily::anisotropic_quadratic) s.anisotropy.resize(static_cast<std::size_t>(dim));
            if (s.family == PotentialFamily::quadratic_plus_cosine) s.wavevector.resize(static_cast<std::size_t>(dim));
            s.validate(dim);
            for (int t = 0; t < 5; ++t) {
                const Point x{u(rng), u(rng), dim == 3 ? u(rng) : 0.0};
                const double exact = s.laplacian(x, dim);
                const double e1 = std::abs(fd_laplacian(s, x, dim, 0.02) - exact);
                const double e2 = std::abs(fd_laplacian(s, x, dim, 0.01) - exact);
                if (e1 < 1e-8) {
                    CHECK(e2 < 1e-7); // families with vanishing fourth derivatives
                } else {
                    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
                }
            }
        }
    }
}

TEST_CASE("closed-form values") {
    const Point x{0.3, -0.4, 0.0};
    CHECK(PotentialSpec::quadratic(2.0).value(x, 2) == doctest::Approx(0.25));
    CHECK(PotentialSpec::quadratic(2.0).laplacian(x, 3) == doctest::Approx(6.0));
    CHECK(PotentialSpec::quartic(1.0).laplacian(x, 2) == doctest::Approx(4.0 * 0.25));
    const auto c = PotentialSpec::cosine_perturbed(1.0, 0.1, {1.0, 0.0});
    CHECK(c.laplacian(x, 2) == doctest::Approx(2.0 - 0.1 * std::cos(0.3)));
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(PotentialSpec::quadratic(-1.0).validate(2), Error);
    CHECK_THROWS_AS(PotentialSpec::anisotropic(1.0, {1.0}).validate(2), Error);
    CHECK_THROWS_AS(PotentialSpec::anisotropic(1.0, {1.0, -1.0}).validate(2), Error);
    CHECK_THROWS_AS(PotentialSpec::cosine_perturbed(1.0, 0.1, {1.0}).validate(2), Error);
    CHECK_THROWS_AS(PotentialSpec::custom(nullptr, nullptr, 4).validate(2), Error);
    auto v = [](const Point& p) { return p[0] * p[0]; };
    auto l = [](const Point&) { return 2.0; };
    CHECK_THROWS_AS(PotentialSpec::custom(v, l, 1).validate(2), Error);
    CHECK_NOTHROW(PotentialSpec::custom(v, l, 4).validate(2));
}

TEST_CASE("sampling on the grid") {
    const Grid g(2, 32, 2.0);
    const auto s = PotentialSpec::quadratic(1.0);
    const ScalarField v = eval(s, g), lap = eval_laplacian(s, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(v[i] == doctest::Approx(0.5 * g.radius(i) * g.radius(i)));
        CHECK(lap[i] == 2.0);
    }
}

TEST_CASE("nonpositive laplacian on the grid is an assumption violation") {
    const Grid g(2, 32, 2.0);
    const auto s = PotentialSpec::cosine_perturbed(1.0, 1.0, {3.0, 0.0});
    try {
        eval_laplacian(s, g);
        FAIL("expected an exception");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::assumption_violated);
        CHECK(std::string(e.what()).find("A4") != std::string::npos);
    }
}

TEST_CASE("coulomb constants") {
    CHECK(coulomb_constant(2) == doctest::Approx(2.0 * M_PI));
    CHECK(coulomb_constant(3) == doctest::Approx(4.0 * M_PI));
}

TEST_CASE("mass-balance radius estimate") {
    const Grid g(2, 256, 2.0);
    CHECK(droplet_radius_estimate(PotentialSpec::quadratic(1.0), g) == doctest::Approx(1.0).epsilon(2.0 * g.spacing()));
    CHECK(droplet_radius_estimate(PotentialSpec::quadratic(4.0), g) == doctest::Approx(0.5).epsilon(4.0 * g.spacing()));
    const Grid g3(3, 64, 2.0);
    CHECK(droplet_radius_estimate(PotentialSpec::quadratic(1.0), g3) == doctest::Approx(1.0).epsilon(2.0 * g3.spacing()));
    const Grid small(2, 32, 0.5);
    CHECK(std::isinf(droplet_radius_estimate(PotentialSpec::quadratic(1.0), small)));
}

TEST_CASE("assumption report") {
    const Grid g(2, 64, 2.0);
    const auto s = PotentialSpec::quadratic(1.0);
    const AssumptionReport pre = check_assumptions(s, g);
    REQUIRE(pre.checks.size() == 5);
    CHECK(pre.all_pass());
    CHECK(pre.alpha == doctest::Approx(2.0));
    CHECK(!pre.zeta_growth);
    const EquilibriumSolution eq = solve_equilibrium(s, g);
    const AssumptionReport post = check_assumptions(s, g, &eq);
    CHECK(post.all_pass());
    REQUIRE(post.zeta_growth);
    CHECK(*post.zeta_growth > 0.0);
}
