#include "pinlab/chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "pinlab/errors.hpp"

namespace pinlab {

uint64_t derive_seed(uint64_t seed, uint64_t index) {
    // splitmix64 over the pair
    uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

ChainSampler::ChainSampler(const SpectralData& sd) : grid_(sd.grid), n_(sd.grid.n) {
    dens_.resize(static_cast<size_t>(n_) * n_);
    cdf_.resize(static_cast<size_t>(n_) * n_);
    const double h = grid_.spacing();
    for (int i = 0; i < n_; ++i) {
        double* d = dens_.data() + static_cast<size_t>(i) * n_;
        for (int j = 0; j < n_; ++j) d[j] = sd.p(i, j);
        // cell masses of the piecewise-linear density
        double* c = cdf_.data() + static_cast<size_t>(i) * n_;
        double acc = 0.0;
        c[0] = 0.0;
        for (int j = 0; j + 1 < n_; ++j) {
            acc += 0.5 * (d[j] + d[j + 1]) * h;
            c[j + 1] = acc;
        }
        const double total = c[n_ - 1];
        if (!(total > 0.0)) throw NumericError("sampler row has zero mass");
        for (int j = 0; j < n_; ++j) c[j] /= total;
        for (int j = 0; j < n_; ++j) d[j] /= total;
    }
}

std::vector<double> ChainSampler::cell_masses(int i) const {
    const double* c = cdf_.data() + static_cast<size_t>(i) * n_;
    std::vector<double> m(n_ - 1);
    for (int j = 0; j + 1 < n_; ++j) m[j] = c[j + 1] - c[j];
    return m;
}

double ChainSampler::draw_row(int i, Rng& rng) const {
    const double* c = cdf_.data() + static_cast<size_t>(i) * n_;
    const double* d = dens_.data() + static_cast<size_t>(i) * n_;
    const double u = rng.uniform();
    const double* it = std::upper_bound(c, c + n_, u);
    int j = static_cast<int>(it - c) - 1;
    if (j < 0) j = 0;
    if (j > n_ - 2) j = n_ - 2;
    const double h = grid_.spacing();
    const double rest = u - c[j];
    const double dj = d[j], djj = d[j + 1];
    // invert F(s) = dj*s + (djj-dj) s^2 / (2h) = rest on [0, h]
    double s;
    const double slope = (djj - dj) / h;
    const double disc = dj * dj + 2.0 * slope * rest;
    if (std::fabs(slope) * h < 1e-14 * (dj + djj + 1e-300)) {
        s = dj > 0.0 ? rest / dj : 0.5 * h;
    } else {
        const double root = std::sqrt(std::max(disc, 0.0));
        s = (dj + root > 0.0) ? 2.0 * rest / (dj + root) : 0.0;
    }
    if (s < 0.0) s = 0.0;
    if (s > h) s = h;
    return grid_.x[j] + s;
}

double ChainSampler::step(double x, Rng& rng) const {
    const double h = grid_.spacing();
    if (x <= grid_.x_min) return draw_row(0, rng);
    if (x >= grid_.x_max) return draw_row(n_ - 1, rng);
    int i = static_cast<int>((x - grid_.x_min) / h);
    if (i >= n_ - 1) i = n_ - 2;
    const double t = (x - grid_.x[i]) / h;
    // linear blend of the two bracketing rows, realized as a mixture
    const int row = (rng.uniform() < t) ? i + 1 : i;
    return draw_row(row, rng);
}

Trajectory sample_trajectory(const ChainSampler& sampler, double a, double b, int n,
                             uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_trajectory: n >= 1 required");
    Trajectory tr;
    tr.seed = seed;
    tr.a = a;
    tr.b = b;
    tr.y.resize(n);
    tr.w.resize(n + 1);
    tr.w[0] = b;
    Rng rng(seed);
    double x = a, wsum = b;
    for (int k = 0; k < n; ++k) {
        x = sampler.step(x, rng);
        tr.y[k] = x;
        wsum += x;
        tr.w[k + 1] = wsum;
    }
    return tr;
}

double finite_dim_density(const SpectralData& sd, const CertifiedSpec& cs,
                          std::span<const double> w_points) {
    const size_t n = w_points.size();
    if (n < 1) throw std::invalid_argument("finite_dim_density: need at least one point");
    std::vector<double> phi(n + 2);
    phi[0] = 0.0;  // w_{-1} = b - a = 0
    phi[1] = 0.0;  // w_0 = b = 0
    for (size_t i = 0; i < n; ++i) phi[2 + i] = w_points[i];
    const double h = chain_energy(cs.spec, phi);
    const double wn = w_points[n - 1];
    const double wn1 = n >= 2 ? w_points[n - 2] : 0.0;
    const double vend = sd.grid.interpolate(sd.v, wn - wn1);
    const int i0 = sd.grid.index_of(0.0);
    if (i0 < 0) throw std::domain_error("finite_dim_density: grid must contain 0");
    return vend / sd.v[i0] * std::exp(-h - static_cast<double>(n) * std::log(sd.lambda));
}

Grid default_w_grid(const SpectralData& sd, int n_max, double sigma_factor, double margin) {
    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < sd.grid.n; ++i) mean += sd.pi[i] * sd.grid.x[i];
    for (int i = 0; i < sd.grid.n; ++i) {
        const double d = sd.grid.x[i] - mean;
        m2 += sd.pi[i] * d * d;
    }
    const double sigma = std::sqrt(m2);
    if (margin < 0.0) margin = 0.5 * sd.grid.span();
    const double h = sd.grid.spacing();
    const double half = sigma_factor * sigma * std::sqrt(static_cast<double>(n_max)) + margin;
    const int m = static_cast<int>(std::ceil(half / h));
    return Grid::symmetric(m * h, 2 * m + 1);
}

DensityTable pair_density_table(const SpectralData& sd, int n_max, const Grid& w_grid) {
    if (n_max < 2) throw std::invalid_argument("pair_density_table: n_max >= 2 required");
    const int ny = sd.grid.n;
    const int nw = w_grid.n;
    const double h = sd.grid.spacing();
    const double hw = w_grid.spacing();
    if (std::fabs(hw - h) > 1e-12 * h)
        throw ConfigError("pair_density_table: W-grid must share the Y-grid spacing");
    const int j0 = sd.grid.index_of(0.0);
    const int m0 = w_grid.index_of(0.0);
    if (j0 < 0 || m0 < 0)
        throw ConfigError("pair_density_table: both grids must contain the node 0");

    // integer shift of each y node on the w lattice
    std::vector<int> shift(ny);
    for (int j = 0; j < ny; ++j) {
        const double t = sd.grid.x[j] / h;
        const int s = static_cast<int>(std::lround(t));
        if (std::fabs(t - s) > 1e-9)
            throw ConfigError("pair_density_table: y node is not on the w lattice");
        shift[j] = s;
    }

    // Qt[jp][j] = p(y_j -> y_jp) * weight_j  (quadrature of the y integral)
    std::vector<double> qt(static_cast<size_t>(ny) * ny);
    for (int jp = 0; jp < ny; ++jp) {
        double* row = qt.data() + static_cast<size_t>(jp) * ny;
        for (int j = 0; j < ny; ++j) row[j] = sd.p(j, jp) * sd.grid.w[j];
    }

    DensityTable table;
    table.n_max = n_max;
    table.lambda = sd.lambda;
    table.w_grid = w_grid;
    table.phi.assign(n_max - 1, 0.0);
    table.mass.reserve(n_max);

    std::vector<double> f(static_cast<size_t>(ny) * nw, 0.0);
    std::vector<double> fnew(static_cast<size_t>(ny) * nw, 0.0);

    // f_1(y_j, w) = p(0, y_j) delta(w - y_j): one lattice node per row
    for (int j = 0; j < ny; ++j) {
        const int m = m0 + shift[j];
        if (m >= 0 && m < nw) f[static_cast<size_t>(j) * nw + m] = sd.p(j0, j) / hw;
    }

    auto total_mass = [&](const std::vector<double>& g) {
        double s = 0.0;
        for (int j = 0; j < ny; ++j) {
            const double* row = g.data() + static_cast<size_t>(j) * nw;
            double r = 0.0;
            for (int m = 0; m < nw; ++m) r += row[m];
            s += sd.grid.w[j] * r;
        }
        return s * hw;
    };

    double max_leak = 0.0;
    for (int k = 1; k <= n_max - 1; ++k) {
        const double mass = total_mass(f);
        table.mass.push_back(mass);
        const double leak = std::fabs(1.0 - mass);
        max_leak = std::max(max_leak, leak);
        if (leak > 1e-3) {
            std::ostringstream os;
            os << "pair density propagation lost " << leak * 100.0 << "% of its mass by step "
               << k << "; widen the W grid";
            throw NumericError(os.str());
        }
        // phi_{k+1}(0,0) = int f_k(y, 0) p(y, 0) dy
        double ph = 0.0;
        const double* q0 = qt.data() + static_cast<size_t>(j0) * ny;
        for (int j = 0; j < ny; ++j) ph += f[static_cast<size_t>(j) * nw + m0] * q0[j];
        table.phi[k - 1] = ph;

        if (k == n_max - 1) break;

        // f_{k+1}(y', w') = sum_j Qt[y'][j] f_k(j, w' - y')
        std::fill(fnew.begin(), fnew.end(), 0.0);
#pragma omp parallel for schedule(static)
        for (int jp = 0; jp < ny; ++jp) {
            double* dst = fnew.data() + static_cast<size_t>(jp) * nw;
            const int s = shift[jp];
            const int lo = std::max(0, s);
            const int hi = std::min(nw, nw + s);  // dst index range with src in range
            const double* qrow = qt.data() + static_cast<size_t>(jp) * ny;
            for (int j = 0; j < ny; ++j) {
                const double c = qrow[j];
                if (c == 0.0) continue;
                const double* src = f.data() + static_cast<size_t>(j) * nw - s;
                for (int m = lo; m < hi; ++m) dst[m] += c * src[m];
            }
        }
        f.swap(fnew);
    }
    table.max_leakage = max_leak;

    table.y_marginal.resize(ny);
    for (int j = 0; j < ny; ++j) {
        const double* row = f.data() + static_cast<size_t>(j) * nw;
        double r = 0.0;
        for (int m = 0; m < nw; ++m) r += row[m];
        table.y_marginal[j] = r * hw * sd.grid.w[j];
    }

    for (double p : table.phi)
        if (!std::isfinite(p) || p < 0.0)
            throw NumericError("pair density table has a bad entry");
    return table;
}

double DensityTable::at(int n) const {
    if (n < 2 || n > n_max) throw std::out_of_range("density table: n outside 2..n_max");
    return phi[n - 2];
}

BoundsReport density_bounds_check(const DensityTable& table, int n_lo, int n_hi) {
    if (n_hi < 0) n_hi = table.n_max;
    if (table.n_max < 21) throw std::invalid_argument("density bounds need n_max >= 21");
    if (n_lo < 2 || n_hi > table.n_max || n_lo >= n_hi)
        throw std::invalid_argument("density bounds: bad window");
    BoundsReport rep;
    rep.n_lo = n_lo;
    rep.n_hi = n_hi;
    double c1 = std::numeric_limits<double>::infinity();
    double c2 = 0.0, c2all = 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (int n = n_lo; n <= n_hi; ++n) {
        const double p = table.at(n);
        if (!std::isfinite(p)) throw NumericError("density bounds: non-finite table entry");
        c2all = std::max(c2all, p);
        if (n % 2 == 1) {
            c1 = std::min(c1, n * p);
            c2 = std::max(c2, p);
            const double lx = std::log(static_cast<double>(n)), ly = std::log(p);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            ++cnt;
        }
    }
    rep.c1_hat = c1;
    rep.c2_hat = c2;
    rep.c2_hat_all = c2all;
    const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    rep.fitted_exponent = -slope;
    rep.fitted_prefactor = std::exp((sy - slope * sx) / cnt);
    rep.pass = c1 > 0.0 && std::isfinite(c2);
    return rep;
}

MomentReport moment_check(const SpectralData& sd, int n_max, int n_samples, uint64_t seed) {
    if (n_max < 1) throw std::invalid_argument("moment_check: n_max >= 1");
    ChainSampler sampler(sd);
    MomentReport rep;
    for (int n : {1, 5, 10, 25, 50, 100, 200})
        if (n <= n_max) rep.checkpoints.push_back(n);
    if (rep.checkpoints.empty() || rep.checkpoints.back() != n_max)
        rep.checkpoints.push_back(n_max);
    const size_t nc = rep.checkpoints.size();
    std::vector<double> s_ay(nc, 0.0), s_ay2(nc, 0.0), s_iv(nc, 0.0), s_iv2(nc, 0.0),
        s_aw(nc, 0.0);

    for (int t = 0; t < n_samples; ++t) {
        Rng rng(derive_seed(seed, static_cast<uint64_t>(t)));
        double x = 0.0, wsum = 0.0;
        size_t c = 0;
        for (int k = 1; k <= n_max && c < nc; ++k) {
            x = sampler.step(x, rng);
            wsum += x;
            if (k == rep.checkpoints[c]) {
                const double ay = std::fabs(x);
                const double iv = 1.0 / sd.grid.interpolate(sd.v, x);
                s_ay[c] += ay;
                s_ay2[c] += ay * ay;
                s_iv[c] += iv;
                s_iv2[c] += iv * iv;
                s_aw[c] += std::fabs(wsum);
                ++c;
            }
        }
    }
    const double ns = static_cast<double>(n_samples);
    rep.mean_abs_y.resize(nc);
    rep.se_abs_y.resize(nc);
    rep.mean_inv_v.resize(nc);
    rep.se_inv_v.resize(nc);
    rep.mean_abs_w_over_n.resize(nc);
    for (size_t c = 0; c < nc; ++c) {
        rep.mean_abs_y[c] = s_ay[c] / ns;
        rep.se_abs_y[c] = std::sqrt(std::max(0.0, s_ay2[c] / ns - rep.mean_abs_y[c] * rep.mean_abs_y[c]) / ns);
        rep.mean_inv_v[c] = s_iv[c] / ns;
        rep.se_inv_v[c] = std::sqrt(std::max(0.0, s_iv2[c] / ns - rep.mean_inv_v[c] * rep.mean_inv_v[c]) / ns);
        rep.mean_abs_w_over_n[c] = s_aw[c] / ns / rep.checkpoints[c];
        rep.c_hat = std::max(rep.c_hat, rep.mean_abs_y[c] + 3.0 * rep.se_abs_y[c]);
    }
    // uniform-boundedness proxy: nothing drifts past 3x its value at n = 5
    size_t base = 0;
    for (size_t c = 0; c < nc; ++c)
        if (rep.checkpoints[c] == 5) base = c;
    rep.bounded = true;
    for (size_t c = 0; c < nc; ++c) {
        if (rep.mean_abs_y[c] > 3.0 * rep.mean_abs_y[base]) rep.bounded = false;
        if (rep.mean_inv_v[c] > 3.0 * rep.mean_inv_v[base]) rep.bounded = false;
    }
    rep.w_linear = true;
    for (size_t c = 0; c < nc; ++c)
        if (rep.mean_abs_w_over_n[c] > rep.c_hat) rep.w_linear = false;
    return rep;
}

}  // namespace pinlab
