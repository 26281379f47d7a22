#include "droplet/error.hpp"
#include "droplet/field_io.hpp"
#include "droplet/grid.hpp"
#include "droplet/parallel.hpp"
#include "droplet/reference.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace droplet;

namespace {

double smooth(const Point& x) { return std::sin(1.3 * x[0]) * std::cos(0.7 * x[1]) + 0.2 * x[2] * x[2]; }
double smooth_lap(const Point& x) { return -(1.69 + 0.49) * std::sin(1.3 * x[0]) * std::cos(0.7 * x[1]) + 0.4; }

double laplacian_error(int dim, int n) {
    const Grid g(dim, n, 1.5);
    const ScalarField f = ScalarField::sample(g, smooth);
    const ScalarField lap = laplacian(f);
    const NodeMask inner = interior_mask(g);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (inner[i]) err = std::max(err, std::abs(lap[i] - (dim == 3 ? smooth_lap(g.point(i)) : smooth_lap(g.point(i)) - 0.4)));
    }
    return err;
}

NodeMask random_mask(const Grid& g, double p, unsigned seed) {
    std::mt19937 rng(seed);
    std::bernoulli_distribution coin(p);
    NodeMask m(g);
    for (std::size_t i = 0; i < g.size(); ++i) m.set(i, coin(rng));
    return m;
}

} // namespace

TEST_CASE("cell-centred coordinates and indexing") {
    const Grid g(2, 16, 2.0);
    CHECK(g.spacing() == doctest::Approx(0.25));
    CHECK(g.cell_volume() == doctest::Approx(0.0625));
    CHECK(g.coordinate(0) == doctest::Approx(-1.875));
    CHECK(g.coordinate(15) == doctest::Approx(1.875));
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.flat(g.index(i)) == i);
    const Grid g3(3, 16, 1.0);
    CHECK(g3.size() == 4096);
    CHECK(g3.point(g3.flat({1, 2, 3}))[2] == doctest::Approx(-1.0 + 3.5 / 8.0));
}

TEST_CASE("invalid grids are rejected") {
    CHECK_THROWS_AS(Grid(1, 16, 1.0), Error);
    CHECK_THROWS_AS(Grid(2, 16, -1.0), Error);
    CHECK_THROWS_AS(Grid(2, 10, 1.0), Error);
    CHECK_THROWS_AS(Grid(2, 17, 1.0), Error);
}

TEST_CASE("frame and interior masks") {
    const Grid g(2, 16, 1.0);
    const NodeMask in1 = interior_mask(g, 1), in2 = interior_mask(g, 2);
    CHECK(in1.count() == 196);
    CHECK(in2.count() == 144);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(in2[i] == !g.on_frame(i, 2));
}

TEST_CASE("erosion drops nodes with a missing stencil neighbour") {
    const Grid g(2, 16, 1.0);
    NodeMask box(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Index k = g.index(i);
        box.set(i, k[0] >= 2 && k[0] <= 8 && k[1] >= 3 && k[1] <= 9);
    }
    const NodeMask e = erode(box);
    CHECK(e.count() == 5 * 5);
    CHECK(erode(NodeMask(g, true)).count() == 196);
    CHECK(mask_boundary(box).count() == box.count() - e.count());
}

TEST_CASE("mask algebra") {
    const Grid g(2, 16, 1.0);
    const NodeMask a = random_mask(g, 0.4, 1), b = random_mask(g, 0.6, 2);
    CHECK(a.complement().count() == g.size() - a.count());
    const NodeMask ab = a.intersect(b);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(ab[i] == (a[i] && b[i]));
    const ScalarField f = ScalarField::sample(g, smooth);
    const NodeMask pos = threshold_mask(f, [](double v) { return v > 0.0; });
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(pos[i] == (f[i] > 0.0));
}

TEST_CASE("midpoint integration") {
    const Grid g(2, 64, 1.0);
    CHECK(integrate(ScalarField(g, 1.0)) == doctest::Approx(4.0).epsilon(1e-14));
    const ScalarField gauss = ScalarField::sample(g, [](const Point& x) { return std::exp(-20.0 * (x[0] * x[0] + x[1] * x[1])); });
    CHECK(integrate(gauss) == doctest::Approx(M_PI / 20.0).epsilon(1e-10));
    CHECK(integrate(gauss) == doctest::Approx(reference::integrate_serial(gauss)).epsilon(1e-13));
    ScalarField bad(g, 1.0);
    bad[5] = std::nan("");
    CHECK_THROWS_AS(integrate(bad), Error);
}

TEST_CASE("laplacian is second order on smooth data") {
    for (int dim : {2, 3}) {
        const int n0 = dim == 2 ? 32 : 16;
        const double e1 = laplacian_error(dim, n0), e2 = laplacian_error(dim, 2 * n0), e3 = laplacian_error(dim, 4 * n0);
        INFO("dim=" << dim << " errors " << e1 << " " << e2 << " " << e3);
        CHECK(e1 / e2 >= 3.5);
        CHECK(e1 / e2 <= 4.5);
        CHECK(e2 / e3 >= 3.5);
        CHECK(e2 / e3 <= 4.5);
    }
}

TEST_CASE("parallel laplacian matches the serial reference") {
    const Grid g(3, 24, 1.0);
    const ScalarField f = ScalarField::sample(g, smooth);
    const ScalarField a = laplacian(f), b = reference::laplacian_serial(f);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("central differences are exact on quadratics") {
    const Grid g(2, 20, 1.0);
    const ScalarField f = ScalarField::sample(g, [](const Point& x) { return 3.0 * x[0] * x[0] - 2.0 * x[1]; });
    const ScalarField dx = central_difference(f, 0), dy = central_difference(f, 1);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.on_frame(i)) continue;
        CHECK(dx[i] == doctest::Approx(6.0 * g.point(i)[0]).epsilon(1e-12));
        CHECK(dy[i] == doctest::Approx(-2.0).epsilon(1e-12));
    }
    const NodeMask inner = interior_mask(g);
    CHECK(gradient_sup(f, inner) == doctest::Approx(std::hypot(6.0 * g.coordinate(18), 2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(gradient_sup(f, NodeMask(g)), Error);
    CHECK_THROWS_AS(sup_norm(f, NodeMask(g)), Error);
}

TEST_CASE("exact distance transform agrees with brute force") {
    for (int dim : {2, 3}) {
        const Grid g(dim, dim == 2 ? 40 : 16, 1.0);
        for (unsigned seed = 1; seed <= 4; ++seed) {
            const NodeMask m = random_mask(g, 0.02 * seed, seed);
            if (m.empty()) continue;
            const ScalarField fast = distance_to(m), slow = reference::distance_brute_force(m);
            for (std::size_t i = 0; i < g.size(); ++i) CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-12));
        }
    }
    const Grid g(2, 16, 1.0);
    CHECK_THROWS_AS(distance_to(NodeMask(g)), Error);
}

TEST_CASE("distance to complement vanishes outside the mask") {
    const Grid g(2, 32, 1.0);
    const NodeMask disk = threshold_mask(ScalarField::sample(g, [](const Point& x) { return std::hypot(x[0], x[1]); }),
                                         [](double r) { return r < 0.5; });
    const ScalarField d = distance_to_complement(disk);
    const ScalarField ref = reference::distance_brute_force(disk.complement());
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(d[i] == doctest::Approx(disk[i] ? ref[i] : 0.0).epsilon(1e-12));
    }
}

TEST_CASE("grid mismatch is detected") {
    const Grid a(2, 16, 1.0), b(2, 16, 1.5);
    CHECK_THROWS_AS(require_same_grid(a, b, "test"), Error);
    CHECK_NOTHROW(require_same_grid(a, Grid(2, 16, 1.0), "test"));
}

TEST_CASE("deterministic reductions do not depend on the thread count") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(100003);
    for (double& x : v) x = u(rng);
    const std::size_t saved = parallel::max_threads();
    parallel::set_threads(1);
    const double s1 = parallel::deterministic_sum(v), d1 = parallel::deterministic_dot(v, v);
    parallel::set_threads(4);
    CHECK(parallel::deterministic_sum(v) == s1);
    CHECK(parallel::deterministic_dot(v, v) == d1);
    parallel::set_threads(saved);
}

TEST_CASE("binary field dumps round-trip and csv has one row per node") {
    const Grid g(2, 16, 1.25);
    const ScalarField f = ScalarField::sample(g, smooth);
    const auto dir = std::filesystem::temp_directory_path() / "droplet_test_grid_io";
    std::filesystem::create_directories(dir);
    write_field_binary(dir / "f.bin", f);
    const ScalarField back = read_field_binary(dir / "f.bin");
    CHECK(back.grid() == g);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(back[i] == f[i]);
    write_field_csv(dir / "f.csv", f);
    std::ifstream in(dir / "f.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "x1,x2,value");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == g.size());
    std::filesystem::remove_all(dir);
}
