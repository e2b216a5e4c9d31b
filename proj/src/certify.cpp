#include "glsharp/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace glsharp {

CertificateParams CertificateParams::resolved() const {
    CertificateParams p = *this;
    if (p.eps_margin < 0) p.eps_margin = (2 * pi - p.gamma) / 6;
    if (p.delta < 0) p.delta = ((p.gamma + 3 * p.eps_margin) / (2 * pi) + 1) / 2;
    return p;
}

double CertificateParams::gamma0() const {
    const auto p = resolved();
    return (p.gamma + 3 * p.eps_margin) / p.delta;
}

std::vector<std::string> CertificateParams::validate() const {
    const auto p = resolved();
    std::vector<std::string> errs;
    if (!(p.gamma > 0)) errs.push_back("gamma must be positive");
    if (!(p.eps_margin > 0)) errs.push_back("eps_margin must be positive");
    if (!(p.gamma + 3 * p.eps_margin < 2 * pi)) errs.push_back("gamma + 3 eps_margin must be below 2 pi");
    if (!(p.gamma0() < 2 * pi)) errs.push_back("gamma0 = (gamma + 3 eps_margin) / delta must be below 2 pi");
    for (const auto& [name, v] : {std::pair<const char*, double>{"beta", p.beta}, {"delta", p.delta},
                                  {"sigma", p.sigma}, {"alpha", p.alpha}}) {
        if (!(v > 0 && v < 1)) errs.push_back(std::string(name) + " must lie in (0, 1)");
    }
    if (!(p.C > 0)) errs.push_back("C must be positive");
    if (!(p.K > 0)) errs.push_back("K must be positive");
    if (!(p.lambda > 0 && p.lambda <= 2 * p.K)) errs.push_back("lambda must lie in (0, 2K]");
    if (!(p.C_tilde > 0)) errs.push_back("C_tilde must be positive");
    return errs;
}

namespace {

void require_valid(const CertificateParams& p) {
    const auto errs = p.validate();
    if (!errs.empty()) throw Error(ErrorKind::invalid_argument, errs.front(), "certify");
}

}  // namespace

double pick_rho1(const ShellEnergyTrace& trace, double R, const CertificateParams& params) {
    const auto p = params.resolved();
    require_valid(p);
    if (trace.r.empty()) throw Error(ErrorKind::invalid_argument, "empty trace", "certify");
    const double lo = std::pow(R, p.beta);
    for (std::size_t k = 0; k < trace.r.size(); ++k) {
        const double r = trace.r[k];
        if (r < lo || r > R) continue;
        if (trace.dE[k] <= (p.gamma + p.eps_margin) * std::log(r)) return r;
    }
    const double E_R = trace.E.back();
    if (E_R > p.gamma * R * std::log(R)) {
        throw Error(ErrorKind::invalid_argument, "premise E(R) <= gamma R ln R is violated", "certify");
    }
    throw Error(ErrorKind::no_solution, "no sampled radius qualifies; the trace is too coarse", "certify");
}

double r1_constant(const CertificateParams& params) {
    const auto p = params.resolved();
    require_valid(p);
    const double denom = p.sigma * p.gamma0() * (1 - std::pow(p.delta, 1 / p.sigma));
    return std::pow(p.C / denom, 1 / (1 - p.alpha));
}

double r1_defect(double r1, const CertificateParams& params) {
    const auto p = params.resolved();
    const double sg = p.sigma * p.gamma0();
    const double lhs = sg * r1;
    const double rhs = sg * std::pow(p.delta, 1 / p.sigma) * r1 + p.C * std::pow(r1, p.alpha);
    return std::abs(lhs - rhs) / std::abs(lhs);
}

ThresholdResult R1_threshold(double R0, const CertificateParams& params) {
    const auto p = params.resolved();
    require_valid(p);
    if (!(R0 > std::exp(1.0))) throw Error(ErrorKind::invalid_argument, "R0 must exceed e", "certify");
    const double q = p.beta * (1 / p.sigma - 1);
    const double target = (1 / p.sigma - p.alpha) * std::log(R0);
    // in s = ln R1: G(s) = q s - ln(beta s), increasing for s > 1/q
    auto G = [&](double s) { return q * s - std::log(p.beta * s); };
    const double s_min = 1 / q;
    if (target < G(s_min)) {
        throw Error(ErrorKind::no_solution, "target lies below the minimum of the increasing branch", "certify");
    }
    double lo = s_min, hi = 2 * s_min;
    while (G(hi) < target) {
        lo = hi;
        hi *= 2;
    }
    for (int it = 0; it < 2000 && std::nextafter(lo, hi) < hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (G(mid) < target ? lo : hi) = mid;
    }
    const double s = std::abs(G(lo) - target) < std::abs(G(hi) - target) ? lo : hi;
    ThresholdResult out;
    out.log_value = s;
    out.value = std::exp(s);
    out.defect = std::abs(std::expm1(G(s) - target));
    return out;
}

ThresholdResult T_threshold(double lambda, double alpha, double K, double C_tilde) {
    if (!(K > 0 && lambda > 0 && lambda <= 2 * K)) throw Error(ErrorKind::invalid_argument, "lambda must lie in (0, 2K]", "certify");
    if (!(alpha < 1)) throw Error(ErrorKind::invalid_argument, "alpha must be below 1", "certify");
    if (!(C_tilde > 0)) throw Error(ErrorKind::invalid_argument, "C_tilde must be positive", "certify");
    const double lhs = std::pow(lambda, 5) * (4 * pi / 3) / (128 * K * K * K);
    // holds at T = e^s iff f(s) > 0; f decreases then increases with its minimum at s = 1/(1 - alpha)
    auto f = [&](double s) { return std::log(lhs / C_tilde) + (1 - alpha) * s - std::log(s); };
    const double s_min = 1 / (1 - alpha);
    ThresholdResult out;
    if (f(s_min) > 0) {
        out.value = 1;
        out.log_value = 0;
        return out;
    }
    double lo = s_min, hi = 2 * s_min;
    while (!(f(hi) > 0)) {
        lo = hi;
        hi *= 2;
    }
    for (int it = 0; it < 2000; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (f(mid) > 0 ? hi : lo) = mid;
    }
    // the strict inequality must also hold in value space, not just for the logarithms
    auto rhs_at = [&](double s) { return C_tilde * std::exp((alpha - 1) * s) * s; };
    while (!(lhs > rhs_at(hi))) hi = std::nextafter(hi, std::numeric_limits<double>::infinity());
    out.log_value = hi;
    out.value = std::exp(hi);
    const double rhs = rhs_at(hi);
    out.defect = std::abs(lhs - rhs) / lhs;
    return out;
}

std::vector<InequalityViolation> diff_ineq_check(const ShellEnergyTrace& trace, double sigma, double alpha, double C,
                                                 double slack) {
    std::vector<InequalityViolation> out;
    const auto& r = trace.r;
    const auto& E = trace.E;
    auto fails = [&](double lhs, double rhs) { return lhs < rhs - slack * (std::abs(lhs) + std::abs(rhs)); };
    for (std::size_t k = 0; k < r.size(); ++k) {
        if (!(r[k] > 0)) continue;
        const double lhs = trace.dE[k];
        const double rhs = (E[k] - C * std::pow(r[k], alpha) * std::log(r[k])) / (sigma * r[k]);
        if (fails(lhs, rhs)) out.push_back({InequalityViolation::Kind::slope, k, r[k], lhs, rhs});
    }
    for (std::size_t k = 0; k + 1 < r.size(); ++k) {
        if (!(r[k] > 0) || !(r[k + 1] > r[k])) continue;
        const double g0 = std::pow(r[k], -1 / sigma) * E[k];
        const double g1 = std::pow(r[k + 1], -1 / sigma) * E[k + 1];
        const double m = 0.5 * (r[k] + r[k + 1]);
        const double lhs = (g1 - g0) / (r[k + 1] - r[k]);
        const double rhs = -(C / sigma) * std::pow(m, alpha - 1 - 1 / sigma) * std::log(m);
        if (fails(lhs, rhs)) out.push_back({InequalityViolation::Kind::scaled_growth, k, m, lhs, rhs});
    }
    return out;
}

ChainResult certificate_chain(const CertificateParams& params, double r0_measured, double M_measured) {
    ChainResult c;
    c.params = params.resolved();
    require_valid(c.params);
    c.gamma0 = c.params.gamma0();
    c.r1 = r1_constant(c.params);
    c.r1_defect = r1_defect(c.r1, c.params);
    c.r0_measured = r0_measured;
    c.M_measured = M_measured;
    c.R0 = std::max({r0_measured, c.r1, M_measured});
    c.R1 = R1_threshold(c.R0, c.params);
    c.T = T_threshold(c.params.lambda, c.params.alpha, c.params.K, c.params.C_tilde);
    return c;
}

nlohmann::json to_json(const CertificateParams& p) {
    return {{"gamma", p.gamma}, {"eps_margin", p.eps_margin}, {"beta", p.beta},   {"delta", p.delta},
            {"sigma", p.sigma}, {"alpha", p.alpha},           {"C", p.C},         {"lambda", p.lambda},
            {"K", p.K},         {"C_tilde", p.C_tilde}};
}

namespace {

nlohmann::json threshold_json(const ThresholdResult& t) {
    nlohmann::json j{{"log", t.log_value}, {"defect", t.defect}};
    j["value"] = std::isfinite(t.value) ? nlohmann::json(t.value) : nlohmann::json(nullptr);
    return j;
}

}  // namespace

nlohmann::json to_json(const ChainResult& c) {
    return {{"params", to_json(c.params)},
            {"gamma0", c.gamma0},
            {"r1", c.r1},
            {"r1_defect", c.r1_defect},
            {"r0_measured", c.r0_measured},
            {"M_measured", c.M_measured},
            {"R0", c.R0},
            {"R1", threshold_json(c.R1)},
            {"T", threshold_json(c.T)}};
}

nlohmann::json to_json(const std::vector<InequalityViolation>& v) {
    auto arr = nlohmann::json::array();
    for (const auto& x : v) {
        arr.push_back({{"kind", x.kind == InequalityViolation::Kind::slope ? "slope" : "scaled_growth"},
                       {"index", x.index},
                       {"r", x.r},
                       {"lhs", x.lhs},
                       {"rhs", x.rhs}});
    }
    return arr;
}

}  // namespace glsharp
