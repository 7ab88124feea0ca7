#pragma once

#include <vector>

#include "pinlab/chain.hpp"
#include "pinlab/grid.hpp"
#include "pinlab/potentials.hpp"
#include "pinlab/spectral.hpp"

namespace pinlab {

// Partition functions of the pinned chain,
//   Z_{eps,N} = int exp(-H) prod_{i=1}^{N-1} (eps delta_0(dphi_i) + dphi_i),
// with zero boundary values phi_{-1} = phi_0 = phi_N = phi_{N+1} = 0.

// Bridge route: log Z_{0,N} = (N+1) log lambda + log phi_{N+1}(0,0).
double z_free_bridge(const SpectralData& sd, const DensityTable& table, int N);

// Deterministic pair-state transfer quadrature over (phi_{i-1}, phi_i).
// The site measure eps*delta_0 + Leb is realized exactly on the grid by
// adding eps to the quadrature weight of the node 0 (which must exist).
// One sweep yields log Z_{eps,N} for every N = 1..n_max.
std::vector<double> z_pinned_transfer_sweep(const CertifiedSpec& cs, const Grid& pair_grid,
                                            double eps, int n_max);
double z_pinned_transfer(const CertifiedSpec& cs, const Grid& pair_grid, double eps, int N);

// Contact-set expansion oracle: Z_{eps,N} = sum_k eps^k sum_{|A|=k} I_A with
// I_A the Boltzmann integral over the unpinned coordinates.  The per-size
// coefficients c_k = sum_{|A|=k} I_A are eps-independent.
// Quadratic pairs use a Gaussian determinant evaluation of each I_A; other
// families use nested quadrature over the free coordinates (at most 6 of
// them, i.e. N <= 7).
struct SubsetExpansion {
    int N = 0;
    std::vector<double> coeff;  // coeff[k] = sum over |A| = k, k = 0..N-1
    double log_z(double eps) const;
};

SubsetExpansion pinned_subset_expansion(const CertifiedSpec& cs, int N,
                                        const QuadratureConfig& quad,
                                        bool force_quadrature = false);
double z_pinned_bruteforce(const CertifiedSpec& cs, double eps, int N,
                           const QuadratureConfig& quad, bool force_quadrature = false);

// f_N = (1/N) (log Z_{eps,N} - log Z_{0,N}) along N_list, with the last value
// as the limit estimate and the last increment as a conservative error band.
struct FreeEnergyEstimate {
    double eps = 0.0;
    std::vector<int> n_list;
    std::vector<double> log_z_eps, log_z0, f;
    std::vector<double> z0_rate_gap;  // (1/N) log Z_{0,N} - log lambda
    double f_hat = 0.0;
    double band = 0.0;
    bool erratic = false;
};

FreeEnergyEstimate free_energy(const CertifiedSpec& cs, const SpectralData& sd, double eps,
                               std::vector<int> n_list, const Grid& pair_grid);

// Same, reusing a precomputed eps = 0 sweep (for sweeps over many eps).
FreeEnergyEstimate free_energy_with_base(const CertifiedSpec& cs, const SpectralData& sd,
                                         double eps, const std::vector<int>& n_list,
                                         const Grid& pair_grid,
                                         const std::vector<double>& log_z0_sweep);

// Contact fraction E[#zeros]/N = eps * d/d(eps) (1/N) log Z_{eps,N},
// central finite difference with step d_eps.
double contact_fraction(const CertifiedSpec& cs, double eps, int N, double d_eps,
                        const Grid& pair_grid);

}  // namespace pinlab
