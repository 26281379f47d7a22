#include "droplet/error.hpp"
#include "droplet/expansion.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

using namespace droplet;

namespace {

const double two_pi = 2.0 * std::numbers::pi;

NodeMask disk(const Grid& g, double r_lo, double r_hi) {
    NodeMask m(g);
    for (std::size_t i = 0; i < g.size(); ++i) m.set(i, g.radius(i) >= r_lo && g.radius(i) <= r_hi);
    return m;
}

PotentialSpec cosine() { return PotentialSpec::cosine_perturbed(1.0, 0.1, {1.0, 0.0}); }

double sup_on(const ScalarField& f, const NodeMask& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (m[i]) s = std::max(s, std::abs(f[i]));
    }
    return s;
}

// (1 / (2 pi beta)) Delta log(2 - 0.1 cos x) for the cosine-perturbed family
double cosine_first_correction(double x, double beta) {
    const double g = 2.0 - 0.1 * std::cos(x), g1 = 0.1 * std::sin(x), g2 = 0.1 * std::cos(x);
    return (g2 / g - (g1 / g) * (g1 / g)) / (two_pi * beta);
}

} // namespace

TEST_CASE("constant Laplacian gives a constant sequence") {
    const Grid g(2, 64, 2.0);
    const auto seq = expansion_sequence(PotentialSpec::quadratic(1.0), g, disk(g, 0.0, 1.0), 100.0, 3, 0.5);
    REQUIRE(seq.f.size() == 4);
    REQUIRE(seq.eps.size() == 3);
    for (int k = 0; k <= 3; ++k) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (seq.bulk_mask[i]) CHECK(seq.f[k][i] == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-14));
        }
    }
    for (const auto& e : seq.eps) CHECK(sup_on(e, seq.bulk_mask) <= 1e-10);
    CHECK(seq.lower_bound_holds);
    CHECK(seq.alpha == doctest::Approx(2.0));
}

TEST_CASE("f0 is the analytic density and each level contains the bulk") {
    const Grid g(2, 64, 2.0);
    const auto spec = cosine();
    const auto seq = expansion_sequence(spec, g, disk(g, 0.0, 0.9), 400.0, 2, 0.4);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!seq.bulk_mask[i]) continue;
        CHECK(seq.f[0][i] == spec.laplacian(g.point(i), 2) / two_pi);
        for (const auto& m : seq.masks) CHECK(m[i]);
    }
}

TEST_CASE("log-harmonic density in an annulus has no first correction") {
    // Delta V = 4 |x|^2 and log |x| is harmonic away from the origin; the
    // stencil leaves an O(h^2) remainder.
    auto correction = [](int n) {
        const Grid g(2, n, 2.0);
        const auto seq = expansion_sequence(PotentialSpec::quartic(1.0), g, disk(g, 0.2, 1.0), 400.0, 1, 0.26);
        ScalarField d(g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (seq.bulk_mask[i]) d[i] = (seq.f[1][i] - seq.f[0][i]) * 400.0 * two_pi;
        }
        return sup_on(d, seq.bulk_mask);
    };
    const double c1 = correction(64), c2 = correction(128);
    INFO(c1 << " " << c2);
    CHECK(c2 <= 0.05);
    CHECK(c1 / c2 >= 3.0);
    CHECK(c1 / c2 <= 5.0);
}

TEST_CASE("cosine first correction matches analytic differentiation") {
    const Grid g(2, 128, 2.0);
    const double beta = 400.0;
    const auto seq = expansion_sequence(cosine(), g, disk(g, 0.0, 0.9), beta, 1, 0.3);
    std::vector<std::size_t> bulk;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (seq.bulk_mask[i]) bulk.push_back(i);
    }
    int probes = 0;
    for (std::size_t p = 1; p <= 5; ++p) {
        const std::size_t i = bulk[p * bulk.size() / 6];
        const double x = g.point(i)[0];
        CHECK(std::abs(seq.f[1][i] - seq.f[0][i] - cosine_first_correction(x, beta)) <= 1e-4);
        ++probes;
    }
    CHECK(probes == 5);
}

TEST_CASE("defect identity holds to roundoff") {
    const Grid g(2, 64, 2.0);
    const double beta = 200.0;
    const auto seq = expansion_sequence(cosine(), g, disk(g, 0.0, 0.9), beta, 3, 0.5);
    for (int k = 0; k < 3; ++k) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!seq.masks[k + 1][i]) continue;
            const double rebuilt = beta * two_pi * (seq.f[k + 1][i] - seq.f[k][i]);
            CHECK(std::abs(seq.eps[k][i] - rebuilt) <= 1e-12 * std::max(1.0, std::abs(rebuilt)));
        }
    }
}

TEST_CASE("defects scale like beta^-k and the sequence contracts in k") {
    const Grid g(2, 64, 2.0);
    for (int k = 0; k < 2; ++k) {
        double lo = 1e300, hi = 0.0;
        for (double beta : {100.0, 200.0, 400.0, 800.0, 1600.0}) {
            const auto seq = expansion_sequence(cosine(), g, disk(g, 0.0, 0.9), beta, 2, 0.5);
            const double scaled = sup_on(seq.eps[k], seq.bulk_mask) * std::pow(beta, k);
            lo = std::min(lo, scaled);
            hi = std::max(hi, scaled);
        }
        INFO("k=" << k << " " << lo << " " << hi);
        CHECK(lo > 0.0);
        CHECK(hi / lo <= 1.5);
    }
    const double beta = 400.0;
    const auto seq = expansion_sequence(cosine(), g, disk(g, 0.0, 0.9), beta, 4, 0.65);
    double prev = 1e300;
    for (int k = 0; k < 4; ++k) {
        const double step = sup_on(seq.eps[k], seq.bulk_mask) / (beta * two_pi);
        INFO("k=" << k << " step=" << step);
        CHECK(step < 0.5 * prev);
        prev = step;
    }
    CHECK(seq.lower_bound_holds);
}

TEST_CASE("invalid sequences are rejected") {
    const Grid g(2, 64, 2.0);
    const NodeMask s = disk(g, 0.0, 1.0);
    const auto spec = cosine();
    CHECK_THROWS_AS(expansion_sequence(spec, g, s, 100.0, 5, 0.9), Error);
    CHECK_NOTHROW(expansion_sequence(spec, g, s, 100.0, 4, 0.9));
    const double h = g.spacing();
    CHECK_THROWS_AS(expansion_sequence(spec, g, s, 100.0, 2, 6.0 * h - 1e-3), Error);
    CHECK_THROWS_AS(expansion_sequence(spec, g, s, 100.0, 1, 2.0), Error);
    CHECK_THROWS_AS(expansion_sequence(spec, g, s, -1.0, 1, 0.5), Error);
    CHECK_THROWS_AS(expansion_sequence(spec, Grid(2, 32, 2.0), s, 100.0, 1, 0.5), Error);
}

TEST_CASE("small beta breaks the expansion") {
    const Grid g(2, 64, 4.0);
    const auto spec = PotentialSpec::cosine_perturbed(1.0, 1.9, {1.0, 0.0});
    try {
        expansion_sequence(spec, g, interior_mask(g, 1), 0.05, 1, 0.5);
        FAIL("expected breakdown");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::breakdown);
        CHECK(std::string(e.what()).find("expansion breakdown") != std::string::npos);
    }
    CHECK_NOTHROW(expansion_sequence(spec, g, interior_mask(g, 1), 50.0, 1, 0.5));
}

TEST_CASE("expansion error on injected densities") {
    const Grid g(2, 64, 2.0);
    const auto seq = expansion_sequence(cosine(), g, disk(g, 0.0, 0.9), 400.0, 2, 0.5);
    CHECK(expansion_error(seq.f[1], seq, 1, 0) == 0.0);
    CHECK(expansion_error(seq.f[1], seq, 1, 2) == 0.0);
    const double e0 = expansion_error(seq.f[1], seq, 0, 0);
    CHECK(e0 == doctest::Approx(sup_on(seq.eps[0], seq.bulk_mask) / (400.0 * two_pi)));
    // f0 plus the analytic correction everywhere: second differences of the
    // correction are bounded by 0.2 / (2 pi beta).
    const ScalarField smooth = ScalarField::sample(g, [&](const Point& x) {
        return (2.0 - 0.1 * std::cos(x[0])) / two_pi + cosine_first_correction(x[0], 400.0);
    });
    const double e2 = expansion_error(smooth, seq, 0, 2);
    CHECK(e2 > 0.0);
    CHECK(e2 <= 0.2 / (400.0 * two_pi));
    CHECK_THROWS_AS(expansion_error(seq.f[1], seq, 0, 1), Error);
    CHECK_THROWS_AS(expansion_error(seq.f[1], seq, 3, 0), Error);
    CHECK_THROWS_AS(expansion_error(seq.f[1], seq, 0, 40), Error);
    CHECK_THROWS_AS(expansion_error(ScalarField(Grid(2, 32, 2.0)), seq, 0, 0), Error);
}

TEST_CASE("ratio residual on injected densities") {
    const Grid g(2, 64, 2.0);
    const auto seq = expansion_sequence(cosine(), g, disk(g, 0.0, 0.9), 400.0, 3, 0.6);
    const NodeMask inner = erode(seq.bulk_mask);
    for (int k = 0; k < 2; ++k) {
        CHECK(ratio_equation_residual(seq.f[k], seq, k) == doctest::Approx(sup_on(seq.eps[k], inner)).epsilon(1e-12));
        CHECK(ratio_equation_residual(seq.f[k + 1], seq, k) ==
              doctest::Approx(sup_on(seq.eps[k + 1], inner)).epsilon(1e-6));
    }
    ScalarField bad = seq.f[0];
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (inner[i]) {
            bad[i] = 0.0;
            break;
        }
    }
    CHECK_THROWS_AS(ratio_equation_residual(bad, seq, 0), Error);
    CHECK_THROWS_AS(ratio_equation_residual(seq.f[0], seq, 3), Error);
}

TEST_CASE("thermal expansion errors and ratio residual refinement") {
    const auto spec = cosine();
    const double beta = 800.0;
    double res[2] = {0.0, 0.0};
    int j = 0;
    for (int n : {128, 256}) {
        const Grid g(2, n, 2.0);
        const ThermalSolution t = solve_thermal(spec, g, beta);
        const auto seq = expansion_sequence(spec, g, disk(g, 0.0, 0.9), beta, 1, 0.5);
        const double e0 = expansion_error(t, seq, 0, 0), e1 = expansion_error(t, seq, 1, 0);
        INFO("n=" << n << " e0=" << e0 << " e1=" << e1);
        CHECK(e1 <= e0);
        CHECK(e0 <= 2.0 * sup_on(seq.eps[0], seq.bulk_mask) / (beta * two_pi));
        res[j++] = ratio_equation_residual(t, seq, 0);
        const auto other = expansion_sequence(spec, g, disk(g, 0.0, 0.9), 400.0, 1, 0.5);
        CHECK_THROWS_AS(expansion_error(t, other, 0, 0), Error);
    }
    INFO(res[0] << " " << res[1]);
    CHECK(res[0] / res[1] >= 3.0);
    CHECK(res[0] / res[1] <= 5.0);
}

TEST_CASE("quadratic bulk error is pure discretisation") {
    const Grid g(2, 128, 2.0);
    const auto spec = PotentialSpec::quadratic(1.0);
    const ThermalSolution t = solve_thermal(spec, g, 200.0);
    const auto seq = expansion_sequence(spec, g, disk(g, 0.0, 1.0), 200.0, 1, 0.7);
    CHECK(expansion_error(t, seq, 0, 0) <= default_discretization_tolerance(g));
    CHECK(expansion_error(t, seq, 1, 0) == doctest::Approx(expansion_error(t, seq, 0, 0)));
}
