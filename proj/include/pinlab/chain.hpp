#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pinlab/spectral.hpp"

namespace pinlab {

// Deterministic RNG wrapper.  Uniforms are built from the raw 64-bit output
// so draws are bit-identical across platforms.
struct Rng {
    std::mt19937_64 eng;
    explicit Rng(uint64_t seed) : eng(seed) {}
    double uniform() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
};

// Stream splitter for one-independent-stream-per-trajectory sampling.
uint64_t derive_seed(uint64_t seed, uint64_t index);

// Draws steps of the chain with transition density p(x, .).  Per-row CDFs
// over the grid cells are precomputed; a draw inverts the piecewise-linear
// density of the (linearly interpolated) row at the current position.
class ChainSampler {
public:
    explicit ChainSampler(const SpectralData& sd);
    // One step from position x (any real; rows are blended linearly in x).
    double step(double x, Rng& rng) const;
    const Grid& grid() const { return grid_; }
    // Exact cell masses of the row density at node i (sums to 1).
    std::vector<double> cell_masses(int i) const;

private:
    Grid grid_;
    int n_;
    std::vector<double> dens_;  // normalized row densities, row-major
    std::vector<double> cdf_;   // per row: n entries, cumulative cell masses, last == 1
    double draw_row(int i, Rng& rng) const;
};

struct Trajectory {
    uint64_t seed = 0;
    double a = 0.0;  // Y_0
    double b = 0.0;  // W_0
    std::vector<double> y;  // Y_1..Y_n
    std::vector<double> w;  // W_0..W_n
};

Trajectory sample_trajectory(const ChainSampler& sampler, double a, double b, int n,
                             uint64_t seed);

// Density of (W_1, ..., W_n) at the given points, started from (a,b) = (0,0):
//   v(w_n - w_{n-1}) / (lambda^n v(0)) * exp(-H(0, 0, w_1, ..., w_n)).
double finite_dim_density(const SpectralData& sd, const CertifiedSpec& cs,
                          std::span<const double> w_points);

// Bridge densities phi_n = density of (W_{n-1}, W_n) at (0,0), for
// n = 2..n_max, by deterministic propagation of the joint density of
// (Y_k, W_k) on the product of the spectral grid and a W-grid.  The W-grid
// must share the spectral grid's spacing (so the shift w -> w - y moves the
// lattice onto itself and the update conserves mass exactly).
struct DensityTable {
    int n_max = 0;
    std::vector<double> phi;  // phi[n - 2] = phi_n(0,0), n = 2..n_max
    double lambda = 0.0;
    Grid w_grid;
    double max_leakage = 0.0;
    std::vector<double> mass;        // total mass of f_k for k = 1..n_max-1
    std::vector<double> y_marginal;  // masses of Y_{n_max - 1} per y node

    double at(int n) const;  // phi_n, throws std::out_of_range outside 2..n_max
};

Grid default_w_grid(const SpectralData& sd, int n_max, double sigma_factor = 6.0,
                    double margin = -1.0);

DensityTable pair_density_table(const SpectralData& sd, int n_max, const Grid& w_grid);

// Two-sided density bounds over odd n in [n_lo, n_hi]:
//   c1_hat = min n*phi_n  (positive lower-bound constant),
//   c2_hat = max phi_n    (finite upper-bound constant),
// plus a power-law fit phi_n ~ prefactor * n^(-exponent) as a diagnostic.
struct BoundsReport {
    double c1_hat = 0.0;
    double c2_hat = 0.0;      // over odd n in the window
    double c2_hat_all = 0.0;  // over all n >= n_lo (used for tail bounds)
    double fitted_exponent = 0.0;
    double fitted_prefactor = 0.0;
    int n_lo = 0, n_hi = 0;
    bool pass = false;
};

BoundsReport density_bounds_check(const DensityTable& table, int n_lo = 11, int n_hi = -1);

// Monte Carlo moment estimates of the chain started at (0,0).
struct MomentReport {
    std::vector<int> checkpoints;
    std::vector<double> mean_abs_y, se_abs_y;
    std::vector<double> mean_inv_v, se_inv_v;
    std::vector<double> mean_abs_w_over_n;
    double c_hat = 0.0;  // max estimated E|Y_n| across checkpoints
    bool bounded = false;  // all checkpoints within 3x the n=5 values
    bool w_linear = false; // E|W_n| <= c_hat * n at all checkpoints
};

MomentReport moment_check(const SpectralData& sd, int n_max, int n_samples, uint64_t seed);

}  // namespace pinlab
