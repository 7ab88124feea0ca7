#include "pinlab/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "pinlab/errors.hpp"

namespace pinlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double tab_eval(const TabulatedPotential& t, double xq) {
    if (t.x.size() < 2 || t.x.size() != t.y.size())
        throw ConfigError("tabulated potential: need matching x/y with >= 2 entries");
    if (xq <= t.x.front()) return t.y.front();
    if (xq >= t.x.back()) return t.y.back();
    auto it = std::upper_bound(t.x.begin(), t.x.end(), xq);
    const size_t j = static_cast<size_t>(it - t.x.begin());
    const double t01 = (xq - t.x[j - 1]) / (t.x[j] - t.x[j - 1]);
    return (1.0 - t01) * t.y[j - 1] + t01 * t.y[j];
}

}  // namespace

double TabulatedPotential::eval(double xq) const { return tab_eval(*this, xq); }

PotentialSpec PotentialSpec::quadratic(double alpha, double beta) {
    if (!(alpha > 0.0)) throw ConfigError("quadratic V1 needs stiffness alpha > 0");
    if (!(beta >= 0.0)) throw ConfigError("quadratic V2 needs stiffness beta >= 0");
    PotentialSpec s;
    s.v1_family = V1Family::Quadratic;
    s.v1_param = alpha;
    s.v2_family = V2Family::Quadratic;
    s.v2_param = beta;
    return s;
}

double eval_potential(const PotentialSpec& spec, PotentialKind which, double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("eval_potential: x must be finite");
    if (which == PotentialKind::V1) {
        switch (spec.v1_family) {
            case V1Family::Quadratic: return 0.5 * spec.v1_param * x * x;
            case V1Family::Quartic: return 0.25 * spec.v1_param * x * x * x * x;
            case V1Family::LogGrowth: return spec.v1_param * std::log1p(x * x);
            case V1Family::Tabulated: return spec.v1_table.eval(x);
        }
    } else {
        switch (spec.v2_family) {
            case V2Family::Quadratic: return 0.5 * spec.v2_param * x * x;
            case V2Family::Exponential: return spec.v2_param * std::expm1(std::fabs(x));
            case V2Family::Tabulated: return spec.v2_table.eval(x);
        }
    }
    throw std::logic_error("eval_potential: unknown family");
}

double chain_energy(const PotentialSpec& spec, std::span<const double> phi) {
    // phi holds (phi_{-1}, phi_0, ..., phi_m), m = phi.size() - 2.
    if (phi.size() < 3) throw std::invalid_argument("chain_energy: need at least 3 values");
    double h = 0.0;
    for (size_t i = 2; i < phi.size(); ++i)  // gradients at sites 1..m
        h += eval_potential(spec, PotentialKind::V1, phi[i] - phi[i - 1]);
    for (size_t i = 1; i + 1 < phi.size(); ++i)  // Laplacians at sites 0..m-1
        h += eval_potential(spec, PotentialKind::V2, phi[i + 1] - 2.0 * phi[i] + phi[i - 1]);
    return h;
}

namespace {

double trapezoid(const PotentialSpec& spec, double half_width, int n,
                 double (*f)(const PotentialSpec&, double)) {
    const double h = 2.0 * half_width / (n - 1);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = -half_width + i * h;
        const double w = (i == 0 || i == n - 1) ? 0.5 * h : h;
        acc += w * f(spec, x);
    }
    return acc;
}

double f_exp_m2v1(const PotentialSpec& s, double x) {
    return std::exp(-2.0 * eval_potential(s, PotentialKind::V1, x));
}
double f_exp_mv2(const PotentialSpec& s, double x) {
    return std::exp(-eval_potential(s, PotentialKind::V2, x));
}
double f_absx_mv2(const PotentialSpec& s, double x) {
    return std::fabs(x) * std::exp(-eval_potential(s, PotentialKind::V2, x));
}

IntegralCheck check_integral(const PotentialSpec& spec, const QuadratureConfig& q,
                             const char* name, double (*f)(const PotentialSpec&, double)) {
    IntegralCheck c;
    c.name = name;
    c.value = trapezoid(spec, q.half_width, q.n_points, f);
    c.value_doubled = trapezoid(spec, 2.0 * q.half_width, 2 * q.n_points - 1, f);
    const double denom = std::max(std::fabs(c.value), 1e-300);
    c.rel_change = std::fabs(c.value_doubled - c.value) / denom;
    c.stable = std::isfinite(c.value) && std::isfinite(c.value_doubled) && c.rel_change < 0.01;
    return c;
}

}  // namespace

bool AssumptionReport::passed() const {
    return v1_symmetric && v1_coercive && int_exp_m2v1.stable && int_exp_mv2.stable &&
           int_absx_mv2.stable && std::isfinite(v1_min) && std::isfinite(v2_min) &&
           std::isfinite(m_gamma) && std::isfinite(sup_exp_mv2);
}

std::vector<std::string> AssumptionReport::failures() const {
    std::vector<std::string> out;
    if (!v1_symmetric) out.push_back("V1 symmetry");
    if (!v1_coercive) out.push_back("V1 coercivity");
    if (!int_exp_m2v1.stable) out.push_back(int_exp_m2v1.name);
    if (!int_exp_mv2.stable) out.push_back(int_exp_mv2.name);
    if (!int_absx_mv2.stable) out.push_back(int_absx_mv2.name);
    if (!std::isfinite(m_gamma)) out.push_back("M_gamma");
    if (!std::isfinite(sup_exp_mv2)) out.push_back("sup exp(-V2)");
    return out;
}

std::string AssumptionReport::summary() const {
    std::ostringstream os;
    os << "certification " << (passed() ? "PASSED" : "FAILED") << "\n";
    os << "  V1 symmetry residual     " << symmetry_residual << (v1_symmetric ? "  ok" : "  FAIL")
       << "\n";
    os << "  V1 coercive beyond       " << coercivity_radius << (v1_coercive ? "  ok" : "  FAIL")
       << "\n";
    os << "  min V1 / min V2          " << v1_min << " / " << v2_min << "\n";
    for (const IntegralCheck* c : {&int_exp_m2v1, &int_exp_mv2, &int_absx_mv2}) {
        os << "  " << c->name << " = " << c->value << "  (rel change under domain doubling "
           << c->rel_change << (c->stable ? ", ok)" : ", FAIL)") << "\n";
    }
    os << "  M_gamma                  " << m_gamma << "\n";
    os << "  sup exp(-V2)             " << sup_exp_mv2 << "\n";
    return os.str();
}

AssumptionReport certify_assumptions(PotentialSpec& spec, const QuadratureConfig& quad) {
    if (!(spec.gamma > 0.0)) throw ConfigError("certify: gamma must be positive");
    if (quad.n_points < 33) throw ConfigError("certify: quadrature needs >= 33 points");
    AssumptionReport rep;

    // Symmetry of V1, probed on the quadrature nodes.
    {
        double res = 0.0;
        const double h = 2.0 * quad.half_width / (quad.n_points - 1);
        for (int i = 0; i < quad.n_points; ++i) {
            const double x = -quad.half_width + i * h;
            res = std::max(res, std::fabs(eval_potential(spec, PotentialKind::V1, x) -
                                          eval_potential(spec, PotentialKind::V1, -x)));
        }
        rep.symmetry_residual = res;
        rep.v1_symmetric = res <= 1e-9;
    }

    // Sampled lower bounds over the doubled domain.
    {
        double m1 = kInf, m2 = kInf;
        const int n = 2 * quad.n_points - 1;
        const double h = 4.0 * quad.half_width / (n - 1);
        for (int i = 0; i < n; ++i) {
            const double x = -2.0 * quad.half_width + i * h;
            m1 = std::min(m1, eval_potential(spec, PotentialKind::V1, x));
            m2 = std::min(m2, eval_potential(spec, PotentialKind::V2, x));
        }
        rep.v1_min = m1;
        rep.v2_min = m2;
        rep.sup_exp_mv2 = std::exp(-m2);
    }

    // Coercivity witness: smallest radius R such that V1 is nondecreasing on
    // sampled tail points of [R, 2L] in both directions and has grown by at
    // least 2 at the far end (so exp(-2 V1) tails decay by >= e^-4).
    {
        const double L = quad.half_width;
        const int nt = 129;
        rep.v1_coercive = false;
        rep.coercivity_radius = kInf;
        for (int ri = 0; ri < 64 && !rep.v1_coercive; ++ri) {
            const double r = L * ri / 64.0;
            bool ok = true;
            for (int sgn = -1; sgn <= 1 && ok; sgn += 2) {
                double prev = -kInf;
                for (int i = 0; i <= nt && ok; ++i) {
                    const double x = sgn * (r + (2.0 * L - r) * i / nt);
                    const double vx = eval_potential(spec, PotentialKind::V1, x);
                    if (vx < prev - 1e-12) ok = false;
                    prev = vx;
                }
                const double far = eval_potential(spec, PotentialKind::V1, sgn * 2.0 * L);
                const double near = eval_potential(spec, PotentialKind::V1, sgn * r);
                if (far < near + 2.0) ok = false;
            }
            if (ok) {
                rep.v1_coercive = true;
                rep.coercivity_radius = r;
            }
        }
    }

    rep.int_exp_m2v1 = check_integral(spec, quad, "int exp(-2V1)", f_exp_m2v1);
    rep.int_exp_mv2 = check_integral(spec, quad, "int exp(-V2)", f_exp_mv2);
    rep.int_absx_mv2 = check_integral(spec, quad, "int |x| exp(-V2)", f_absx_mv2);

    // Cached sup of V2 over the gamma-neighborhood of zero.
    {
        double m = -kInf;
        const int n = 1025;
        for (int i = 0; i < n; ++i) {
            const double x = -spec.gamma + 2.0 * spec.gamma * i / (n - 1);
            m = std::max(m, eval_potential(spec, PotentialKind::V2, x));
        }
        rep.m_gamma = m;
        spec.m_gamma = m;
        spec.m_gamma_cached = true;
    }

    return rep;
}

CertifiedSpec certify(PotentialSpec spec, const QuadratureConfig& quad) {
    CertifiedSpec cs;
    cs.report = certify_assumptions(spec, quad);
    cs.spec = std::move(spec);
    return cs;
}

void require_certified(const CertifiedSpec& cs) {
    if (!cs.ok()) {
        std::string msg = "potential pair is flagged; failing checks:";
        for (const auto& f : cs.report.failures()) msg += " [" + f + "]";
        throw CertificationError(msg);
    }
}

}  // namespace pinlab
