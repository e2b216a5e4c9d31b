#include <cmath>

#include "doctest.h"
#include "glsharp/certify.hpp"

using namespace glsharp;

namespace {

CertificateParams sample_params() {
    CertificateParams p;
    p.gamma = 5;
    p.eps_margin = 0.05;
    p.delta = 0.9;
    p.sigma = 0.66;
    p.alpha = 0.85;
    p.C = 10;
    return p;
}

ShellEnergyTrace synthetic(const std::function<double(double)>& E, const std::function<double(double)>& dE, double lo,
                           double hi, int n) {
    ShellEnergyTrace t;
    for (int k = 0; k < n; ++k) {
        const double r = lo + (hi - lo) * k / (n - 1);
        t.r.push_back(r);
        t.E.push_back(E(r));
        t.dE.push_back(dE(r));
        t.eT.push_back(dE(r));
    }
    return t;
}

}  // namespace

TEST_CASE("certificate parameters") {
    CertificateParams d;
    const auto r = d.resolved();
    CHECK(r.eps_margin == doctest::Approx((2 * pi - 5) / 6));
    CHECK(d.validate().empty());
    CHECK(d.gamma0() < 2 * pi);
    CHECK(sample_params().validate().empty());

    CertificateParams bad;
    bad.gamma = 6.3;
    bad.eps_margin = 0.01;
    const auto errs = bad.validate();
    REQUIRE_FALSE(errs.empty());
    CHECK(errs.front().find("2 pi") != std::string::npos);

    CertificateParams low_delta = sample_params();
    low_delta.delta = 0.5;
    CHECK_FALSE(low_delta.validate().empty());
}

TEST_CASE("r1 constant") {
    auto p = sample_params();
    const double r1 = r1_constant(p);
    MESSAGE("r1 = " << r1);
    CHECK(r1_defect(r1, p) <= 1e-12);

    // independent root of the balance by bisection in log r
    const double a = p.sigma * p.gamma0() * (1 - std::pow(p.delta, 1 / p.sigma));
    double lo = -50, hi = 200;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (a * std::exp(mid) < p.C * std::exp(p.alpha * mid) ? lo : hi) = mid;
    }
    CHECK(std::log(r1) == doctest::Approx(lo).epsilon(1e-12));

    auto unit = p;
    unit.C = a;
    CHECK(r1_constant(unit) == doctest::Approx(1.0).epsilon(1e-14));
    auto lin = p;
    lin.alpha = 1e-12;
    CHECK(r1_constant(lin) == doctest::Approx(p.C / a).epsilon(1e-9));
}

TEST_CASE("R1 threshold") {
    const auto p = sample_params();
    const auto t = R1_threshold(100, p);
    MESSAGE("ln R1 = " << t.log_value);
    CHECK(t.defect <= 1e-10);
    const double q = p.beta * (1 / p.sigma - 1);
    const double target = std::pow(100.0, 1 / p.sigma - p.alpha);
    CHECK(std::pow(t.value, q) / std::log(std::pow(t.value, p.beta)) == doctest::Approx(target).epsilon(1e-10));
    CHECK(R1_threshold(200, p).value > t.value);

    // scan oracle on the increasing branch
    double found = 0;
    for (double s = 1 / q; s < 1e4; s *= 1.0001) {
        if (q * s - std::log(p.beta * s) >= std::log(target)) {
            found = s;
            break;
        }
    }
    CHECK(t.log_value == doctest::Approx(found).epsilon(2e-4));

    CHECK_THROWS_AS(R1_threshold(2.5, p), Error);
}

TEST_CASE("T threshold") {
    const auto t = T_threshold(0.5, 0.85, 1, 10);
    MESSAGE("ln T = " << t.log_value);
    CHECK(t.defect <= 1e-10);
    const double lhs = std::pow(0.5, 5) * (4 * pi / 3) / 128;
    auto holds = [&](double logT) { return lhs > 10 * std::exp((0.85 - 1) * logT) * logT; };
    CHECK(holds(t.log_value));
    CHECK_FALSE(holds(t.log_value - std::log(2.0)));
    CHECK(T_threshold(1.0, 0.85, 1, 10).log_value < t.log_value);

    double found = 0;
    for (double s = 1 / 0.15; s < 1e4; s *= 1.0001) {
        if (holds(s)) {
            found = s;
            break;
        }
    }
    CHECK(t.log_value == doctest::Approx(found).epsilon(2e-4));
    CHECK(T_threshold(2.0, 0.5, 1, 1e-6).value == 1);
}

TEST_CASE("rho1 selection") {
    const auto p = sample_params();
    const double R = 100;
    const auto zero = synthetic([](double) { return 0.0; }, [](double) { return 0.0; }, 1, R, 100);
    const double lo = std::sqrt(R);
    double first = 0;
    for (double r : zero.r) {
        if (r >= lo) {
            first = r;
            break;
        }
    }
    CHECK(pick_rho1(zero, R, p) == first);

    const double g = 4;
    const auto lin = synthetic([&](double r) { return g * r * std::log(r); },
                               [&](double r) { return g * (std::log(r) + 1); }, 1, R, 100);
    CHECK(pick_rho1(lin, R, p) > first - 1e-12);

    const auto heavy = synthetic([&](double r) { return 10 * r * std::log(r); },
                                 [&](double r) { return 10 * (std::log(r) + 1); }, 1, R, 100);
    try {
        pick_rho1(heavy, R, p);
        FAIL("expected premise violation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invalid_argument);
    }
    const auto coarse = synthetic([](double) { return 0.0; }, [](double) { return 1e6; }, 1, R, 100);
    try {
        pick_rho1(coarse, R, p);
        FAIL("expected no_solution");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::no_solution);
    }
}

TEST_CASE("differential inequality check") {
    const double sigma = 0.66, alpha = 0.85, C = 10;
    const auto zero = synthetic([](double) { return 0.0; }, [](double) { return 0.0; }, 2, 50, 200);
    CHECK(diff_ineq_check(zero, sigma, alpha, C).empty());

    const double g0 = sample_params().gamma0();
    const auto tr = synthetic([&](double r) { return sigma * g0 * r * std::log(r); },
                              [&](double r) { return sigma * g0 * (std::log(r) + 1); }, 2, 50, 200);
    const auto v = diff_ineq_check(tr, sigma, alpha, C);
    // closed form of the slope test: sigma g0 (ln r + 1) >= g0 ln r - C r^(alpha-1) ln r / sigma
    std::vector<std::size_t> expected;
    for (std::size_t k = 0; k < tr.r.size(); ++k) {
        const double r = tr.r[k];
        if (sigma * g0 * (std::log(r) + 1) < g0 * std::log(r) - C * std::pow(r, alpha - 1) * std::log(r) / sigma)
            expected.push_back(k);
    }
    std::vector<std::size_t> slope;
    for (const auto& x : v) {
        if (x.kind == InequalityViolation::Kind::slope) slope.push_back(x.index);
    }
    CHECK(slope == expected);
    CHECK(to_json(v).size() == v.size());
}

TEST_CASE("certificate chain is reproducible") {
    const auto a = certificate_chain(sample_params(), 30, 40);
    const auto b = certificate_chain(sample_params(), 30, 40);
    CHECK(to_json(a).dump() == to_json(b).dump());
    CHECK(a.R0 == std::max({30.0, 40.0, a.r1}));
    CHECK(a.r1_defect <= 1e-10);
    CHECK(a.R1.defect <= 1e-10);
    CHECK(a.T.defect <= 1e-10);
}
