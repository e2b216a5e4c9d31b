#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "glsharp/energy.hpp"

namespace glsharp {

/// Constants of the energy-improvement argument. gamma0 is derived: (gamma + 3 eps_margin) / delta.
struct CertificateParams {
    double gamma = 5;
    double eps_margin = -1;  ///< < 0 selects (2 pi - gamma) / 6
    double beta = 0.5;
    double delta = -1;       ///< < 0 selects the midpoint of ((gamma + 3 eps)/(2 pi), 1)
    double sigma = 0.66;
    double alpha = 0.85;
    double C = 10;           ///< measured C(alpha, sigma)
    double lambda = 0.5;
    double K = 1;
    double C_tilde = 10;

    /// Fills in the defaulted fields.
    CertificateParams resolved() const;
    double gamma0() const;
    /// Constraint violations, empty when the parameters are admissible.
    std::vector<std::string> validate() const;
};

/// First sampled radius in [R^beta, R] with E'(rho) <= (gamma + eps) ln rho. Throws
/// invalid_argument when E(R) > gamma R ln R, no_solution when the premise holds
/// but no sample qualifies.
double pick_rho1(const ShellEnergyTrace& trace, double R, const CertificateParams& params);

/// r1 = (C / (sigma gamma0 (1 - delta^(1/sigma))))^(1/(1 - alpha)).
double r1_constant(const CertificateParams& params);
/// Relative defect of sigma gamma0 r1 = sigma gamma0 delta^(1/sigma) r1 + C r1^alpha.
double r1_defect(double r1, const CertificateParams& params);

struct ThresholdResult {
    double value = 0;      ///< may be inf when the logarithm exceeds the double range
    double log_value = 0;
    double defect = 0;     ///< relative back-substitution defect
};

/// Solves R0^(1/sigma - alpha) = R1^(beta (1/sigma - 1)) / ln(R1^beta) on the increasing
/// branch. Throws no_solution when the target lies below the branch minimum.
ThresholdResult R1_threshold(double R0, const CertificateParams& params);

/// Threshold T past which lambda^5 |B_1| / (128 K^3) > C_tilde T^(alpha - 1) ln T holds for
/// all larger T: the crossing on the decreasing branch, or 1 when the inequality never fails.
ThresholdResult T_threshold(double lambda, double alpha, double K, double C_tilde);

struct InequalityViolation {
    enum class Kind { slope, scaled_growth };
    Kind kind;
    std::size_t index;
    double r;
    double lhs;
    double rhs;
};

/**
 * Per-sample checks on a shell trace:
 *   slope:          E'(r) >= (E(r) - C r^alpha ln r) / (sigma r)
 *   scaled_growth:  (r^(-1/sigma) E)' >= -(C/sigma) r^(alpha - 1 - 1/sigma) ln r, by forward
 *                   differences evaluated at interval midpoints.
 * `slack` is relative to the magnitude of the compared terms.
 */
std::vector<InequalityViolation> diff_ineq_check(const ShellEnergyTrace& trace, double sigma, double alpha, double C,
                                                 double slack = 1e-9);

struct ChainResult {
    CertificateParams params;
    double gamma0 = 0;
    double r1 = 0;
    double r1_defect = 0;
    double r0_measured = 0;
    double M_measured = 0;
    double R0 = 0;
    ThresholdResult R1;
    ThresholdResult T;
};

/// R0 = max(r0, r1, M), R1 = R1_threshold(R0), T = T_threshold(lambda, alpha, K, C_tilde).
ChainResult certificate_chain(const CertificateParams& params, double r0_measured, double M_measured);

nlohmann::json to_json(const CertificateParams& p);
nlohmann::json to_json(const ChainResult& c);
nlohmann::json to_json(const std::vector<InequalityViolation>& v);

}  // namespace glsharp
