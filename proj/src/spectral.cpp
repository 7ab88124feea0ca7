#include "pinlab/spectral.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pinlab/errors.hpp"

namespace pinlab {

namespace {

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

void scale(std::vector<double>& v, double c) {
    for (double& x : v) x *= c;
}

}  // namespace

KernelMatrix build_kernel(const CertifiedSpec& cs, const Grid& grid) {
    require_certified(cs);
    const int n = grid.n;
    const double h = grid.spacing();
    // k(x_i, x_j) = exp(-V1(x_j)) * exp(-V2(x_j - x_i)); the difference
    // x_j - x_i = (j - i) h lives on a lattice, so V2 is tabulated once.
    std::vector<double> e2(2 * n - 1);
    for (int d = -(n - 1); d <= n - 1; ++d)
        e2[d + n - 1] = std::exp(-eval_potential(cs.spec, PotentialKind::V2, d * h));
    std::vector<double> e1w(n);
    for (int j = 0; j < n; ++j)
        e1w[j] = std::exp(-eval_potential(cs.spec, PotentialKind::V1, grid.x[j])) * grid.w[j];

    KernelMatrix km;
    km.grid = grid;
    km.a.resize(static_cast<size_t>(n) * n);
    double mn = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        double* row = km.a.data() + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double val = e1w[j] * e2[j - i + n - 1];
            if (!std::isfinite(val)) {
                std::ostringstream os;
                os << "kernel entry not finite at (" << i << ", " << j << ")";
                throw NumericError(os.str());
            }
            row[j] = val;
            const double kv = val / grid.w[j];
            if (kv < mn) mn = kv;
        }
    }
    km.min_entry = mn;
    if (mn < 0.0) throw NumericError("kernel has a negative entry");
    return km;
}

SpectralData principal_eigen(const KernelMatrix& kernel, double tol, int max_iter) {
    const int n = kernel.grid.n;
    if (n <= 0 || kernel.a.size() != static_cast<size_t>(n) * n)
        throw std::invalid_argument("principal_eigen: malformed kernel matrix");

    std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
    std::vector<double> u(v);  // left vector of the Nystrom matrix
    std::vector<double> av(n), atu(n);

    auto matvec = [&](const std::vector<double>& x, std::vector<double>& y) {
        for (int i = 0; i < n; ++i) {
            const double* row = kernel.a.data() + static_cast<size_t>(i) * n;
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += row[j] * x[j];
            y[i] = s;
        }
    };
    auto matvec_t = [&](const std::vector<double>& x, std::vector<double>& y) {
        std::fill(y.begin(), y.end(), 0.0);
        for (int i = 0; i < n; ++i) {
            const double* row = kernel.a.data() + static_cast<size_t>(i) * n;
            const double xi = x[i];
            for (int j = 0; j < n; ++j) y[j] += row[j] * xi;
        }
    };

    double lambda = 0.0, rr = 0.0, rl = 0.0;
    std::vector<double> history;
    int it = 0;
    bool converged = false;
    for (; it < max_iter; ++it) {
        matvec(v, av);
        matvec_t(u, atu);
        double uav = 0.0, uv = 0.0;
        for (int i = 0; i < n; ++i) {
            uav += u[i] * av[i];
            uv += u[i] * v[i];
        }
        lambda = uav / uv;
        double sr = 0.0, sl = 0.0;
        for (int i = 0; i < n; ++i) {
            const double dr = av[i] - lambda * v[i];
            const double dl = atu[i] - lambda * u[i];
            sr += dr * dr;
            sl += dl * dl;
        }
        rr = std::sqrt(sr) / norm2(v);
        rl = std::sqrt(sl) / norm2(u);
        history.push_back(rr);
        const double nv = norm2(av), nu = norm2(atu);
        if (nv <= 0.0 || nu <= 0.0) throw NumericError("power iteration collapsed to zero");
        for (int i = 0; i < n; ++i) {
            v[i] = av[i] / nv;
            u[i] = atu[i] / nu;
        }
        if (rr <= tol && rl <= tol) {
            converged = true;
            ++it;
            break;
        }
    }
    if (!converged) {
        std::ostringstream os;
        os << "power iteration did not converge in " << max_iter
           << " iterations; residuals right=" << rr << " left=" << rl;
        throw NumericError(os.str());
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw NumericError("principal eigenvalue is not a positive finite number");

    SpectralData sd;
    sd.grid = kernel.grid;
    sd.kernel = kernel;
    sd.lambda = lambda;
    sd.iterations = it;
    sd.residual_history = std::move(history);

    // int v^2 = 1
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) s2 += v[i] * v[i] * sd.grid.w[i];
    scale(v, 1.0 / std::sqrt(s2));
    // left function values w_i = u_i / weight_i, scaled so that int v w = 1
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = u[i] / sd.grid.w[i];
    double svw = 0.0;
    for (int i = 0; i < n; ++i) svw += v[i] * w[i] * sd.grid.w[i];
    scale(w, 1.0 / svw);

    for (int i = 0; i < n; ++i)
        if (!(v[i] > 0.0) || !(w[i] > 0.0))
            throw NumericError("eigenfunction lost positivity at a node");

    sd.v = std::move(v);
    sd.w = std::move(w);
    sd.pi.resize(n);
    double spi = 0.0;
    for (int i = 0; i < n; ++i) {
        sd.pi[i] = sd.v[i] * sd.w[i] * sd.grid.w[i];
        spi += sd.pi[i];
    }
    for (int i = 0; i < n; ++i) sd.pi[i] /= spi;

    // Residuals in function scale, on the final normalization.
    matvec(sd.v, av);
    double sr = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = av[i] - sd.lambda * sd.v[i];
        sr += d * d;
    }
    sd.residual_right = std::sqrt(sr) / norm2(sd.v);
    std::vector<double> uw(n);
    for (int i = 0; i < n; ++i) uw[i] = sd.w[i] * sd.grid.w[i];
    matvec_t(uw, atu);
    double sl = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = atu[i] / sd.grid.w[i] - sd.lambda * sd.w[i];
        sl += d * d;
    }
    sd.residual_left = std::sqrt(sl) / norm2(sd.w);
    return sd;
}

double SpectralData::p(int i, int j) const {
    return kernel.kernel(i, j) * v[j] / (lambda * v[i]);
}

double SpectralData::row_integral(int i) const {
    const int n = grid.n;
    const double* row = kernel.a.data() + static_cast<size_t>(i) * n;
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += row[j] * v[j];
    return s / (lambda * v[i]);
}

double stochasticity_defect(const SpectralData& sd) {
    double worst = 0.0;
    for (int i = 0; i < sd.grid.n; ++i)
        worst = std::max(worst, std::fabs(sd.row_integral(i) - 1.0));
    return worst;
}

double invariance_residual(const SpectralData& sd) {
    const int n = sd.grid.n;
    std::vector<double> out(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* row = sd.kernel.a.data() + static_cast<size_t>(i) * n;
        const double c = sd.pi[i] / (sd.lambda * sd.v[i]);
        for (int j = 0; j < n; ++j) out[j] += c * row[j] * sd.v[j];
    }
    double r = 0.0;
    for (int j = 0; j < n; ++j) r += std::fabs(out[j] - sd.pi[j]);
    return r;
}

double check_left_right_relation(const SpectralData& sd, const CertifiedSpec& cs) {
    const int n = sd.grid.n;
    std::vector<int> mirror(n);
    for (int i = 0; i < n; ++i) {
        mirror[i] = sd.grid.index_of(-sd.grid.x[i]);
        if (mirror[i] < 0)
            throw std::domain_error("left/right relation needs a grid symmetric about 0");
    }
    std::vector<double> ref(n);
    for (int i = 0; i < n; ++i)
        ref[i] = std::exp(-eval_potential(cs.spec, PotentialKind::V1, sd.grid.x[i])) *
                 sd.v[mirror[i]];
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
        num += sd.w[i] * ref[i];
        den += ref[i] * ref[i];
    }
    const double c = num / den;
    double dev = 0.0;
    for (int i = 0; i < n; ++i) dev = std::max(dev, std::fabs(sd.w[i] - c * ref[i]) / sd.w[i]);
    return dev;
}

double pi_interval_mass(const SpectralData& sd, double a, double b) {
    double s = 0.0;
    for (int i = 0; i < sd.grid.n; ++i)
        if (sd.grid.x[i] >= a && sd.grid.x[i] <= b) s += sd.pi[i];
    return s;
}

}  // namespace pinlab
