#pragma once

#include <vector>

#include "pinlab/grid.hpp"
#include "pinlab/potentials.hpp"

namespace pinlab {

// Nystrom discretization of the transfer operator
//   (K f)(x) = int k(x,y) f(y) dy,   k(x,y) = exp(-V1(y) - V2(y-x)),
// on a uniform grid: a[i][j] = k(x_i, x_j) * weight_j.
struct KernelMatrix {
    Grid grid;
    std::vector<double> a;  // row-major, n x n
    double min_entry = 0.0;

    double nystrom(int i, int j) const { return a[static_cast<size_t>(i) * grid.n + j]; }
    double kernel(int i, int j) const { return nystrom(i, j) / grid.w[j]; }
};

KernelMatrix build_kernel(const CertifiedSpec& cs, const Grid& grid);

// Principal eigenvalue lambda with right/left eigenfunctions v, w of the
// discretized operator, extracted by power iteration on the matrix and its
// transpose.  Normalization: int v^2 = 1 and int v w = 1, which makes the
// invariant-measure masses pi_j = v_j w_j weight_j sum to one.
struct SpectralData {
    Grid grid;
    double lambda = 0.0;
    std::vector<double> v;   // right eigenfunction values at the nodes, all > 0
    std::vector<double> w;   // left eigenfunction values, all > 0
    std::vector<double> pi;  // invariant masses per node, sum 1
    double residual_right = 0.0;
    double residual_left = 0.0;
    int iterations = 0;
    std::vector<double> residual_history;  // right residual per iteration
    KernelMatrix kernel;

    // Transition density p(x_i, y_j) = k(x_i,y_j) v_j / (lambda v_i).
    double p(int i, int j) const;
    // Quadrature of p(x_i, .) over the grid; 1 up to the eigen residual.
    double row_integral(int i) const;
};

SpectralData principal_eigen(const KernelMatrix& kernel, double tol = 3e-12,
                             int max_iter = 20000);

// Worst row-integral deviation from 1 across all rows.
double stochasticity_defect(const SpectralData& sd);

// Recomputes the invariant masses and returns the L1 invariance residual
// ||pi P - pi||_1.
double invariance_residual(const SpectralData& sd);

// Max relative deviation of w(x) from C * exp(-V1(x)) v(-x) with C fitted by
// least squares.  Requires a mirror-symmetric grid.
double check_left_right_relation(const SpectralData& sd, const CertifiedSpec& cs);

// pi-mass of the closed interval [a, b] (sum of node masses inside).
double pi_interval_mass(const SpectralData& sd, double a, double b);

}  // namespace pinlab
