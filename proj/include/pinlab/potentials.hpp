#pragma once

#include <span>
#include <string>
#include <vector>

namespace pinlab {

// Interaction potentials of the chain.  V1 acts on discrete gradients
// (elongation), V2 on discrete Laplacians (curvature).  The standing
// assumptions certified below are:
//   on V1: bounded below, symmetric, V1(x) -> inf as |x| -> inf,
//          integral of exp(-2 V1) finite;
//   on V2: bounded below, bounded above on [-gamma, gamma] for some
//          gamma > 0, integral of |x| exp(-V2) finite.

enum class V1Family { Quadratic, Quartic, LogGrowth, Tabulated };
enum class V2Family { Quadratic, Exponential, Tabulated };

// Table with linear interpolation inside and constant extrapolation
// outside its x-range.
struct TabulatedPotential {
    std::vector<double> x;  // strictly increasing
    std::vector<double> y;
    double eval(double xq) const;
};

struct PotentialSpec {
    V1Family v1_family = V1Family::Quadratic;
    double v1_param = 1.0;  // quadratic: alpha*x^2/2; quartic: a*x^4/4; log: k*log(1+x^2)
    V2Family v2_family = V2Family::Quadratic;
    double v2_param = 1.0;  // quadratic: beta*x^2/2; exponential: s*(e^|x| - 1)
    TabulatedPotential v1_table;
    TabulatedPotential v2_table;
    double gamma = 1.0;                 // neighborhood radius for the V2 bound
    double m_gamma = 0.0;               // sup of V2 over [-gamma, gamma], cached by certify
    bool m_gamma_cached = false;

    static PotentialSpec quadratic(double alpha, double beta);
};

enum class PotentialKind { V1, V2 };

double eval_potential(const PotentialSpec& spec, PotentialKind which, double x);

// Quadrature domain for the certification integrals: composite trapezoid on
// [-half_width, half_width], re-run on the doubled domain with the same
// spacing as a tail-stability probe.
struct QuadratureConfig {
    double half_width = 8.0;
    int n_points = 4097;
};

struct IntegralCheck {
    std::string name;
    double value = 0.0;
    double value_doubled = 0.0;
    double rel_change = 0.0;
    bool stable = false;  // rel_change below 1%
};

struct AssumptionReport {
    double symmetry_residual = 0.0;  // max |V1(x) - V1(-x)| over probe points
    bool v1_symmetric = false;
    double v1_min = 0.0;  // sampled lower bounds
    double v2_min = 0.0;
    double coercivity_radius = 0.0;  // V1 nondecreasing beyond this radius
    bool v1_coercive = false;
    IntegralCheck int_exp_m2v1;   // integral of exp(-2 V1)
    IntegralCheck int_exp_mv2;    // integral of exp(-V2)
    IntegralCheck int_absx_mv2;   // integral of |x| exp(-V2)
    double m_gamma = 0.0;
    double sup_exp_mv2 = 0.0;     // sup of exp(-V2), finite iff V2 bounded below

    bool passed() const;
    std::vector<std::string> failures() const;
    std::string summary() const;
};

// Runs every check and caches m_gamma on the spec.  A failing spec is
// flagged in the report, not rejected; operations downstream refuse
// flagged specs.
AssumptionReport certify_assumptions(PotentialSpec& spec, const QuadratureConfig& quad);

struct CertifiedSpec {
    PotentialSpec spec;
    AssumptionReport report;
    bool ok() const { return report.passed(); }
};

CertifiedSpec certify(PotentialSpec spec, const QuadratureConfig& quad = {});

// Throws CertificationError when the spec is flagged.
void require_certified(const CertifiedSpec& cs);

// Energy of a window (phi_{-1}, phi_0, ..., phi_m): sum of V1 over the m
// gradients plus V2 over the m Laplacians it contains.
double chain_energy(const PotentialSpec& spec, std::span<const double> phi);

}  // namespace pinlab
