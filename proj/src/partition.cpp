#include "pinlab/partition.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "pinlab/errors.hpp"

namespace pinlab {

double z_free_bridge(const SpectralData& sd, const DensityTable& table, int N) {
    if (N + 1 > table.n_max || N < 1)
        throw std::out_of_range("z_free_bridge: N+1 beyond the density table");
    return (N + 1) * std::log(sd.lambda) + std::log(table.at(N + 1));
}

namespace {

// Lattice tables of exp(-V1) and exp(-V2) for arguments d*h.  V1 arguments
// span differences of two nodes, V2 arguments span z - 2y + x.
struct StepTables {
    int n = 0;
    std::vector<double> e1;  // size 2n-1, offset n-1
    std::vector<double> e2;  // size 4n-3, offset 2(n-1)
    double e1_at(int d) const { return e1[d + n - 1]; }
    double e2_at(int q) const { return e2[q + 2 * (n - 1)]; }
};

StepTables make_tables(const PotentialSpec& spec, const Grid& g) {
    StepTables t;
    t.n = g.n;
    const double h = g.spacing();
    t.e1.resize(2 * g.n - 1);
    for (int d = -(g.n - 1); d <= g.n - 1; ++d)
        t.e1[d + g.n - 1] = std::exp(-eval_potential(spec, PotentialKind::V1, d * h));
    t.e2.resize(4 * g.n - 3);
    for (int q = -2 * (g.n - 1); q <= 2 * (g.n - 1); ++q)
        t.e2[q + 2 * (g.n - 1)] = std::exp(-eval_potential(spec, PotentialKind::V2, q * h));
    return t;
}

}  // namespace

std::vector<double> z_pinned_transfer_sweep(const CertifiedSpec& cs, const Grid& pair_grid,
                                            double eps, int n_max) {
    require_certified(cs);
    if (eps < 0.0) throw std::invalid_argument("z_pinned_transfer: eps >= 0 required");
    if (n_max < 1) throw std::invalid_argument("z_pinned_transfer: N >= 1 required");
    const int n = pair_grid.n;
    const int i0 = pair_grid.index_of(0.0);
    if (i0 < 0)
        throw ConfigError("z_pinned_transfer: pair grid must contain the node 0 exactly");

    const StepTables tab = make_tables(cs.spec, pair_grid);
    const double v10 = eval_potential(cs.spec, PotentialKind::V1, 0.0);
    const double v20 = eval_potential(cs.spec, PotentialKind::V2, 0.0);

    std::vector<double> logz(n_max + 1, 0.0);
    logz[1] = -2.0 * (v10 + v20);
    if (n_max == 1) return logz;

    // site measure weights: trapezoid weight plus the eps atom at 0
    std::vector<double> rho(pair_grid.w);
    rho[i0] += eps;

    // closing weights: rho_x * exp(-V1(0) - V2(x))
    std::vector<double> close_w(n);
    for (int x = 0; x < n; ++x)
        close_w[x] = rho[x] * std::exp(-v10) * tab.e2_at(x - i0);

    // State F_j over pairs (phi_{j-1}, phi_j), stored transposed:
    // ft[second][first].  F_2(x = phi_1, y = phi_2) covers the first two
    // interaction triples (with the zero boundary on the left).
    std::vector<double> ft(static_cast<size_t>(n) * n), ftn(static_cast<size_t>(n) * n);
    for (int y = 0; y < n; ++y) {
        double* row = ft.data() + static_cast<size_t>(y) * n;
        for (int x = 0; x < n; ++x)
            row[x] = tab.e1_at(x - i0) * tab.e2_at(x - i0) * tab.e1_at(y - x) *
                     tab.e2_at(y - 2 * x + i0);
    }

    double log_scale = 0.0;
    auto close = [&](int N) {
        const double* row = ft.data() + static_cast<size_t>(i0) * n;  // slice phi_N = 0
        double s = 0.0;
        for (int x = 0; x < n; ++x) s += row[x] * close_w[x];
        if (!(s > 0.0) || !std::isfinite(s))
            throw NumericError("transfer quadrature produced a non-positive partition value");
        logz[N] = std::log(s) + log_scale;
    };
    close(2);

    std::vector<double> g(static_cast<size_t>(n) * n);
    for (int j = 2; j < n_max; ++j) {
        // integrate out phi_{j-1} (weights rho): G[y][x] = F[y][x] * rho[x]
        for (int y = 0; y < n; ++y) {
            const double* src = ft.data() + static_cast<size_t>(y) * n;
            double* dst = g.data() + static_cast<size_t>(y) * n;
            for (int x = 0; x < n; ++x) dst[x] = src[x] * rho[x];
        }
#pragma omp parallel for schedule(static)
        for (int z = 0; z < n; ++z) {
            double* out = ftn.data() + static_cast<size_t>(z) * n;
            for (int y = 0; y < n; ++y) {
                const double* grow = g.data() + static_cast<size_t>(y) * n;
                const double* e2win = tab.e2.data() + (z - 2 * y + 2 * (n - 1));
                double s = 0.0;
                for (int x = 0; x < n; ++x) s += grow[x] * e2win[x];
                out[y] = s * tab.e1_at(z - y);
            }
        }
        ft.swap(ftn);
        // rescale to keep the state in floating-point range
        double mx = 0.0;
        for (double vv : ft) mx = std::max(mx, vv);
        if (!(mx > 0.0) || !std::isfinite(mx))
            throw NumericError("transfer state degenerated during the sweep");
        if (mx > 1e200 || mx < 1e-200) {
            const double inv = 1.0 / mx;
            for (double& vv : ft) vv *= inv;
            log_scale += std::log(mx);
        }
        close(j + 1);
    }
    return logz;
}

double z_pinned_transfer(const CertifiedSpec& cs, const Grid& pair_grid, double eps, int N) {
    return z_pinned_transfer_sweep(cs, pair_grid, eps, N)[N];
}

namespace {

// Gaussian route for quadratic pairs: H restricted to the unpinned interior
// coordinates is (1/2) phi' M phi' with M assembled from the gradient and
// Laplacian incidence vectors; each subset integral is
// (2 pi)^{d/2} / sqrt(det M_sub).
Eigen::MatrixXd quadratic_form(const PotentialSpec& spec, int N) {
    const int dim = N - 1;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    auto add_rank1 = [&](std::initializer_list<std::pair<int, double>> entries, double c) {
        for (auto [si, vi] : entries) {
            if (si < 1 || si > N - 1) continue;
            for (auto [sj, vj] : entries) {
                if (sj < 1 || sj > N - 1) continue;
                m(si - 1, sj - 1) += c * vi * vj;
            }
        }
    };
    const double alpha = spec.v1_param, beta = spec.v2_param;
    for (int i = 1; i <= N + 1; ++i)  // V1 terms on gradients
        add_rank1({{i, 1.0}, {i - 1, -1.0}}, alpha);
    for (int j = 0; j <= N; ++j)  // V2 terms on Laplacians
        add_rank1({{j + 1, 1.0}, {j, -2.0}, {j - 1, 1.0}}, beta);
    return m;
}

double log_subset_integral_gaussian(const Eigen::MatrixXd& m, unsigned mask, int N) {
    std::vector<int> free_sites;
    for (int s = 1; s <= N - 1; ++s)
        if (!(mask & (1u << (s - 1)))) free_sites.push_back(s - 1);
    const int d = static_cast<int>(free_sites.size());
    if (d == 0) return 0.0;
    Eigen::MatrixXd sub(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) sub(i, j) = m(free_sites[i], free_sites[j]);
    Eigen::LLT<Eigen::MatrixXd> llt(sub);
    if (llt.info() != Eigen::Success)
        throw NumericError("subset quadratic form is not positive definite");
    double half_logdet = 0.0;
    for (int i = 0; i < d; ++i) half_logdet += std::log(llt.matrixL()(i, i));
    return 0.5 * d * std::log(2.0 * std::numbers::pi) - half_logdet;
}

// Nested-quadrature route for a single subset: recursive sweep over the
// sites 1..N+1; pinned and boundary sites contribute the fixed value 0,
// free sites are integrated with trapezoid weights on the lattice.
// Branches whose partial weight falls 12 decades below the running maximum
// at the same depth are dropped; with factors bounded by max(e1)*max(e2)
// this keeps the relative truncation error near 1e-10.
struct NestedQuad {
    int N;
    const Grid* grid;
    const StepTables* tab;
    unsigned mask;
    int i0;
    mutable std::vector<double> depth_max;

    double run() const {
        depth_max.assign(static_cast<size_t>(N) + 3, 0.0);
        return recurse(1, i0, i0, 1.0);
    }

    bool pinned(int site) const {
        if (site >= N || site <= 0) return true;  // boundary handled as fixed 0
        return (mask & (1u << (site - 1))) != 0;
    }

    double recurse(int site, int prev2, int prev1, double weight) const {
        // weight carries the product of Boltzmann factors and quadrature
        // weights accumulated so far
        if (site > N + 1) return weight;
        if (pinned(site)) {
            const int cur = i0;
            const double f = tab->e1_at(cur - prev1) * tab->e2_at(cur - 2 * prev1 + prev2);
            const double wnew = weight * f;
            if (wnew <= 0.0) return 0.0;
            return recurse(site + 1, prev1, cur, wnew);
        }
        double acc = 0.0;
        const int n = grid->n;
        double& dm = depth_max[site];
        for (int cur = 0; cur < n; ++cur) {
            const double f = tab->e1_at(cur - prev1) * tab->e2_at(cur - 2 * prev1 + prev2);
            const double wnew = weight * f * grid->w[cur];
            if (wnew > dm) dm = wnew;
            if (wnew < dm * 1e-12) continue;
            acc += recurse(site + 1, prev1, cur, wnew);
        }
        return acc;
    }
};

}  // namespace

double SubsetExpansion::log_z(double eps) const {
    if (eps < 0.0) throw std::invalid_argument("log_z: eps >= 0 required");
    // sum_k coeff[k] eps^k, evaluated stably in log scale
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(coeff.size());
    for (size_t k = 0; k < coeff.size(); ++k) {
        const double t = (eps == 0.0 && k > 0)
                             ? -std::numeric_limits<double>::infinity()
                             : std::log(coeff[k]) + static_cast<double>(k) * std::log(eps == 0.0 ? 1.0 : eps);
        terms[k] = (eps == 0.0 && k > 0) ? -std::numeric_limits<double>::infinity() : t;
        best = std::max(best, terms[k]);
    }
    double s = 0.0;
    for (double t : terms)
        if (std::isfinite(t)) s += std::exp(t - best);
    return best + std::log(s);
}

SubsetExpansion pinned_subset_expansion(const CertifiedSpec& cs, int N,
                                        const QuadratureConfig& quad,
                                        bool force_quadrature) {
    require_certified(cs);
    if (N < 1) throw std::invalid_argument("subset expansion: N >= 1 required");
    if (N > 12)
        throw std::length_error("subset expansion: N <= 12 (2^(N-1) subsets) supported");

    SubsetExpansion ex;
    ex.N = N;
    ex.coeff.assign(std::max(1, N - 1 + 1), 0.0);

    const bool quadratic = cs.spec.v1_family == V1Family::Quadratic &&
                           cs.spec.v2_family == V2Family::Quadratic && !force_quadrature;

    if (N == 1) {
        ex.coeff[0] = std::exp(-chain_energy(cs.spec, std::vector<double>{0, 0, 0, 0}));
        return ex;
    }

    const unsigned n_subsets = 1u << (N - 1);
    if (quadratic) {
        const Eigen::MatrixXd m = quadratic_form(cs.spec, N);
        for (unsigned mask = 0; mask < n_subsets; ++mask) {
            const int k = std::popcount(mask);
            ex.coeff[k] += std::exp(log_subset_integral_gaussian(m, mask, N));
        }
        return ex;
    }

    if (N > 7)
        throw std::length_error(
            "subset expansion: nested quadrature handles at most 6 free coordinates "
            "(N <= 7); quadratic pairs use the determinant route instead");
    Grid g = Grid::symmetric(quad.half_width, quad.n_points);
    const StepTables tab = make_tables(cs.spec, g);
    const int i0 = g.index_of(0.0);
    for (unsigned mask = 0; mask < n_subsets; ++mask) {
        NestedQuad nq{N, &g, &tab, mask, i0, {}};
        ex.coeff[std::popcount(mask)] += nq.run();
    }
    return ex;
}

double z_pinned_bruteforce(const CertifiedSpec& cs, double eps, int N,
                           const QuadratureConfig& quad, bool force_quadrature) {
    return pinned_subset_expansion(cs, N, quad, force_quadrature).log_z(eps);
}

FreeEnergyEstimate free_energy_with_base(const CertifiedSpec& cs, const SpectralData& sd,
                                         double eps, const std::vector<int>& n_list,
                                         const Grid& pair_grid,
                                         const std::vector<double>& log_z0_sweep) {
    if (n_list.size() < 2 || !std::is_sorted(n_list.begin(), n_list.end()))
        throw std::invalid_argument("free_energy: need an increasing list of N");
    if (n_list.front() > 50 || n_list.back() < 200)
        throw std::invalid_argument("free_energy: N list must cover [50, 200]");
    const int n_top = n_list.back();
    if (static_cast<int>(log_z0_sweep.size()) <= n_top)
        throw std::invalid_argument("free_energy: base sweep too short");

    FreeEnergyEstimate fe;
    fe.eps = eps;
    fe.n_list = n_list;
    const std::vector<double> sweep =
        (eps == 0.0) ? log_z0_sweep : z_pinned_transfer_sweep(cs, pair_grid, eps, n_top);
    const double log_lambda = std::log(sd.lambda);
    for (int N : n_list) {
        const double le = sweep[N];
        const double l0 = log_z0_sweep[N];
        fe.log_z_eps.push_back(le);
        fe.log_z0.push_back(l0);
        fe.f.push_back((le - l0) / N);
        fe.z0_rate_gap.push_back(l0 / N - log_lambda);
    }
    const size_t m = fe.f.size();
    fe.f_hat = fe.f[m - 1];
    fe.band = std::fabs(fe.f[m - 1] - fe.f[m - 2]);
    // flag erratic tails: a late increment much larger than the final one
    double max_inc = 0.0;
    bool monotone = true;
    for (size_t i = 1; i < m; ++i) {
        const double d = fe.f[i] - fe.f[i - 1];
        max_inc = std::max(max_inc, std::fabs(d));
        if (i >= 2 && d * (fe.f[i - 1] - fe.f[i - 2]) < 0.0) monotone = false;
    }
    fe.erratic = !monotone && max_inc > 10.0 * (fe.band + 1e-12);
    return fe;
}

FreeEnergyEstimate free_energy(const CertifiedSpec& cs, const SpectralData& sd, double eps,
                               std::vector<int> n_list, const Grid& pair_grid) {
    if (n_list.empty()) throw std::invalid_argument("free_energy: empty N list");
    std::sort(n_list.begin(), n_list.end());
    const std::vector<double> base =
        z_pinned_transfer_sweep(cs, pair_grid, 0.0, n_list.back());
    return free_energy_with_base(cs, sd, eps, n_list, pair_grid, base);
}

double contact_fraction(const CertifiedSpec& cs, double eps, int N, double d_eps,
                        const Grid& pair_grid) {
    if (!(eps > 0.0)) throw std::invalid_argument("contact_fraction: eps > 0 required");
    if (!(d_eps > 0.0) || d_eps >= eps)
        throw std::invalid_argument("contact_fraction: need 0 < d_eps < eps");
    const double up = z_pinned_transfer(cs, pair_grid, eps + d_eps, N);
    const double dn = z_pinned_transfer(cs, pair_grid, eps - d_eps, N);
    const double c = eps * (up - dn) / (2.0 * d_eps * N);
    if (c < -0.01 || c > 1.01) {
        std::ostringstream os;
        os << "contact fraction " << c << " outside [0,1] tolerance band";
        throw NumericError(os.str());
    }
    return c;
}

}  // namespace pinlab
