#include "droplet/coulomb.hpp"

#include "droplet/error.hpp"
#include "droplet/parallel.hpp"
#include "droplet/potential.hpp"
#include "droplet/quadrature.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

namespace droplet {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

void init_fftw_threads() {
    static std::once_flag once;
    std::call_once(once, [] { fftw_init_threads(); });
}

} // namespace

double coulomb_kernel(double r, int dim) {
    if (dim == 2) return -std::log(r);
    return std::pow(r, 2.0 - dim);
}

double self_cell_value(double h, int dim) {
    // Cube [-1/2, 1/2]^d split into 2d pyramids with apex at 0; on a pyramid
    // x = t y with y on the face {y_1 = 1/2}, dV = t^{d-1} (1/2) dt dA.
    constexpr double tol = 1e-14;
    if (dim == 2) {
        // int_0^1 (log t + log|y|) t dt = -1/4 + log|y| / 2
        const double face = quadrature::refine_until(
            [](int panels) {
                return quadrature::integrate_interval(
                    [](double s) { return -0.25 + 0.5 * 0.5 * std::log(0.25 + s * s); }, -0.5, 0.5, panels);
            },
            tol);
        const double mean_log_unit = 4.0 * 0.5 * face;
        return -std::log(h) - mean_log_unit;
    }
    // int_0^1 t^2 / (t |y|) dt = 1 / (2 |y|)
    const double face = quadrature::refine_until(
        [](int panels) {
            return quadrature::integrate_square(
                [](double u, double v) { return 0.5 / std::sqrt(0.25 + u * u + v * v); }, -0.5, 0.5, panels);
        },
        tol, 64);
    const double mean_inv_unit = 6.0 * 0.5 * face;
    return mean_inv_unit / h;
}

KernelTable::KernelTable(const Grid& grid)
    : grid_(grid), padded_(2 * grid.n()), self_value_(self_cell_value(grid.spacing(), grid.dim())) {
    const int d = grid.dim();
    const int m = padded_;
    std::size_t total = 1, complex_total = 1;
    for (int a = 0; a < d; ++a) {
        total *= static_cast<std::size_t>(m);
        complex_total *= static_cast<std::size_t>(a == d - 1 ? m / 2 + 1 : m);
    }
    samples_.assign(total, 0.0);
    const double h = grid.spacing();
    for (std::size_t p = 0; p < total; ++p) {
        std::size_t rem = p;
        double r2 = 0.0;
        bool origin = true;
        for (int a = d - 1; a >= 0; --a) {
            const int q = static_cast<int>(rem % static_cast<std::size_t>(m));
            rem /= static_cast<std::size_t>(m);
            const int off = q < grid.n() ? q : q - m;
            if (off != 0) origin = false;
            r2 += double(off) * off;
        }
        samples_[p] = origin ? self_value_ : coulomb_kernel(std::sqrt(r2) * h, d);
    }

    std::vector<double> work(samples_);
    spectrum_.assign(complex_total, {0.0, 0.0});
    std::vector<int> dims(static_cast<std::size_t>(d), m);
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_r2c(d, dims.data(), work.data(), reinterpret_cast<fftw_complex*>(spectrum_.data()),
                                 FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    const double scale = grid.cell_volume() / static_cast<double>(total);
    for (auto& c : spectrum_) c *= scale;
}

double KernelTable::at_offset(const Index& offset) const {
    double r2 = 0.0;
    for (int a = 0; a < grid_.dim(); ++a) r2 += double(offset[a]) * offset[a];
    if (r2 == 0.0) return self_value_;
    return coulomb_kernel(std::sqrt(r2) * grid_.spacing(), grid_.dim());
}

struct Convolver::Plans {
    int dim = 0;
    int n = 0;
    int m = 0;
    std::size_t real_size = 0;
    std::size_t complex_size = 0;
    double* real = nullptr;
    fftw_complex* freq = nullptr;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;

    ~Plans() {
        std::lock_guard lock(planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
        if (real) fftw_free(real);
        if (freq) fftw_free(freq);
    }
};

Convolver::Convolver(std::shared_ptr<const KernelTable> kernel) : kernel_(std::move(kernel)), plans_(new Plans) {
    init_fftw_threads();
    const Grid& g = kernel_->grid();
    Plans& p = *plans_;
    p.dim = g.dim();
    p.n = g.n();
    p.m = kernel_->padded();
    p.real_size = 1;
    p.complex_size = 1;
    for (int a = 0; a < p.dim; ++a) {
        p.real_size *= static_cast<std::size_t>(p.m);
        p.complex_size *= static_cast<std::size_t>(a == p.dim - 1 ? p.m / 2 + 1 : p.m);
    }
    p.real = fftw_alloc_real(p.real_size);
    p.freq = fftw_alloc_complex(p.complex_size);
    std::vector<int> dims(static_cast<std::size_t>(p.dim), p.m);
    std::lock_guard lock(planner_mutex());
    fftw_plan_with_nthreads(static_cast<int>(parallel::max_threads()));
    p.forward = fftw_plan_dft_r2c(p.dim, dims.data(), p.real, p.freq, FFTW_ESTIMATE);
    p.backward = fftw_plan_dft_c2r(p.dim, dims.data(), p.freq, p.real, FFTW_ESTIMATE);
}

Convolver::~Convolver() = default;
Convolver::Convolver(Convolver&&) noexcept = default;
Convolver& Convolver::operator=(Convolver&&) noexcept = default;

void Convolver::apply(std::span<const double> density, std::span<double> out) {
    Plans& p = *plans_;
    const Grid& g = kernel_->grid();
    std::fill(p.real, p.real + p.real_size, 0.0);
    const auto n = static_cast<std::size_t>(p.n);
    const auto m = static_cast<std::size_t>(p.m);
    const std::size_t rows = g.size() / n;
    // Row r of the grid (all but the last axis) maps to a padded row.
    auto padded_row = [&](std::size_t r) {
        if (p.dim == 2) return r * m;
        return ((r / n) * m + (r % n)) * m;
    };
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
        const std::size_t src = static_cast<std::size_t>(r) * n;
        std::copy_n(density.data() + src, n, p.real + padded_row(static_cast<std::size_t>(r)));
    }
    fftw_execute(p.forward);
    const auto* kspec = reinterpret_cast<const fftw_complex*>(kernel_->spectrum().data());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(p.complex_size); ++i) {
        const double ar = p.freq[i][0], ai = p.freq[i][1];
        const double br = kspec[i][0], bi = kspec[i][1];
        p.freq[i][0] = ar * br - ai * bi;
        p.freq[i][1] = ar * bi + ai * br;
    }
    fftw_execute(p.backward);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
        const std::size_t dst = static_cast<std::size_t>(r) * n;
        std::copy_n(p.real + padded_row(static_cast<std::size_t>(r)), n, out.data() + dst);
    }
}

std::vector<double> Convolver::apply(std::span<const double> density) {
    std::vector<double> out(density.size());
    apply(density, out);
    return out;
}

std::shared_ptr<const KernelTable> make_kernel(const Grid& grid) { return std::make_shared<KernelTable>(grid); }

namespace {

void check_density(const ScalarField& density) {
    for (double v : density.values()) {
        if (!std::isfinite(v)) throw Error(ErrorCode::non_finite, "non-finite field");
        if (v < -1e-12) throw Error(ErrorCode::invalid_argument, "negative density entry");
    }
}

} // namespace

ScalarField potential_of(const ScalarField& density, Convolver& convolver) {
    require_same_grid(density.grid(), convolver.grid(), "potential_of");
    check_density(density);
    ScalarField out(density.grid());
    convolver.apply(density.values(), out.values());
    return out;
}

ScalarField potential_of(const ScalarField& density, const KernelTable& kernel) {
    require_same_grid(density.grid(), kernel.grid(), "potential_of");
    // Non-owning alias: the table outlives this call.
    Convolver conv(std::shared_ptr<const KernelTable>(&kernel, [](const KernelTable*) {}));
    return potential_of(density, conv);
}

PoissonResidual poisson_residual(const ScalarField& density, const ScalarField& potential) {
    require_same_grid(density.grid(), potential.grid(), "poisson_residual");
    const Grid& g = density.grid();
    const double cd = coulomb_constant(g.dim());
    const ScalarField lap = laplacian(potential);
    const double mu_max = *std::max_element(density.data().begin(), density.data().end());

    NodeMask steep(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.on_frame(i)) continue;
        bool jump = false;
        for (int a = 0; a < g.dim() && !jump; ++a) {
            const std::size_t s = g.stride(a);
            jump = std::abs(density[i + s] - density[i]) > 0.1 * mu_max ||
                   std::abs(density[i] - density[i - s]) > 0.1 * mu_max;
        }
        steep.set(i, jump);
    }
    const bool has_steep = !steep.empty();
    const ScalarField dist = has_steep ? distance_to(steep) : ScalarField(g, 1e300);

    PoissonResidual res;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.on_frame(i)) continue;
        const double r = std::abs(lap[i] + cd * density[i]);
        res.global = std::max(res.global, r);
        if (dist[i] >= 3.0 * g.spacing() - 1e-12) {
            res.smooth_region = std::max(res.smooth_region, r);
            ++res.smooth_nodes;
        }
    }
    return res;
}

} // namespace droplet
