#pragma once

#include "droplet/grid.hpp"

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace droplet {

// g(x) = -log|x| (d = 2), |x|^{2-d} (d = 3); argument is |x| > 0.
double coulomb_kernel(double r, int dim);

// Average of g over a cube of side h centred at the singularity, by Gauss-
// Legendre on the pyramid decomposition of the cube (radial part exact).
double self_cell_value(double h, int dim);

/**
 * Sampled Coulomb kernel for zero-padded (2n per side) circular convolution.
 *
 * Off-diagonal entries are g(x_i - x_j); the diagonal uses the cell average
 * g0 so that the convolution is a second-order quadrature of h^mu near the
 * singularity. Immutable after construction.
 */
class KernelTable {
public:
    explicit KernelTable(const Grid& grid);

    const Grid& grid() const noexcept { return grid_; }
    int padded() const noexcept { return padded_; }
    double self_value() const noexcept { return self_value_; }

    // Kernel value for an integer offset (each |component| < n).
    double at_offset(const Index& offset) const;

    // Real-space samples in circular layout and their r2c spectrum, the latter
    // pre-scaled by h^d / (2n)^d so a convolution of nodal densities needs no
    // further factors.
    std::span<const double> samples() const noexcept { return samples_; }
    std::span<const std::complex<double>> spectrum() const noexcept { return spectrum_; }

private:
    Grid grid_;
    int padded_;
    double self_value_;
    std::vector<double> samples_;
    std::vector<std::complex<double>> spectrum_;
};

/**
 * FFT workspace applying a KernelTable. One instance per worker: apply() is
 * not reentrant, distinct instances may run concurrently.
 */
class Convolver {
public:
    explicit Convolver(std::shared_ptr<const KernelTable> kernel);
    ~Convolver();
    Convolver(const Convolver&) = delete;
    Convolver& operator=(const Convolver&) = delete;
    Convolver(Convolver&&) noexcept;
    Convolver& operator=(Convolver&&) noexcept;

    const KernelTable& kernel() const noexcept { return *kernel_; }
    const Grid& grid() const noexcept { return kernel_->grid(); }

    // out_i = h^d sum_j K(x_i - x_j) density_j
    void apply(std::span<const double> density, std::span<double> out);
    std::vector<double> apply(std::span<const double> density);

private:
    struct Plans;
    std::shared_ptr<const KernelTable> kernel_;
    std::unique_ptr<Plans> plans_;
};

std::shared_ptr<const KernelTable> make_kernel(const Grid& grid);

// h^mu on the grid by FFT. Throws on negative density (< -1e-12) or grid mismatch.
ScalarField potential_of(const ScalarField& density, const KernelTable& kernel);
ScalarField potential_of(const ScalarField& density, Convolver& convolver);

struct PoissonResidual {
    double smooth_region = 0.0; // sup away from steep features (>= 3h)
    double global = 0.0;        // sup over all interior nodes
    std::size_t smooth_nodes = 0;
};

// sup |laplacian(h) + c_d mu| over interior nodes. Steep features are nodes
// where mu jumps by more than 10% of max mu across one cell.
PoissonResidual poisson_residual(const ScalarField& density, const ScalarField& potential);

} // namespace droplet
