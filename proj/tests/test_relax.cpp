#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "glsharp/profile.hpp"
#include "glsharp/relax.hpp"

using namespace glsharp;

namespace {
cplx azimuthal(const Vec3& p) { return std::polar(1.0, std::atan2(p.y, p.x)); }
}  // namespace

TEST_CASE("constant data gives the constant minimizer") {
    auto disc = LatticeGrid::disc(1.0, 0.05);
    const auto res = minimize_dirichlet(VectorField(disc, cplx{1, 0}), 0.1);
    CHECK(res.report.converged);
    CHECK(res.report.energy.total < 1e-20);
    CHECK(res.report.min_modulus == doctest::Approx(1.0));
}

TEST_CASE("planar vortex on the unit disc") {
    const double eps = 0.1;
    auto disc = LatticeGrid::disc(1.0, 0.01);
    SolveOptions opts;
    opts.record_history = true;
    const auto res = minimize_dirichlet(VectorField::from_function(disc, azimuthal), eps, opts);
    REQUIRE(res.report.converged);
    CHECK(res.report.residual <= default_tolerance(*disc));

    const auto profile = solve_profile();
    DiscEnergyTable e2(profile, 1 / eps);
    const double E = res.report.energy.total;
    MESSAGE("energy " << E << ", canonical vortex " << e2(1 / eps) << ", iterations " << res.report.iterations);
    CHECK(E >= pi * std::log(1 / eps));
    CHECK(E <= e2(1 / eps) * 1.02);
    CHECK(res.report.center_modulus < 0.1);
    CHECK(res.report.max_modulus <= 1 + 1e-3);

    const auto& hist = res.report.history;
    for (std::size_t k = 1; k < hist.size(); ++k) CHECK(hist[k] <= hist[k - 1] * (1 + 1e-14));

    // boundary values are attained exactly
    for (std::size_t i = 0; i < disc->size(); ++i) {
        if (disc->boundary()[i]) REQUIRE(res.u[i] == azimuthal(disc->positions()[i]));
    }

    SUBCASE("random perturbations do not lower the energy") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> U(-0.1, 0.1);
        for (int k = 0; k < 10; ++k) {
            auto v = res.u;
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (!disc->boundary()[i]) v[i] += cplx{U(rng), U(rng)};
            }
            CHECK(gl_energy(v, eps).total >= E - 1e-8);
        }
    }
}

TEST_CASE("vortex line in the unit ball") {
    const double eps = 0.1;
    auto ball = LatticeGrid::ball(1.0, 0.05);
    const auto res = minimize_dirichlet(VectorField::from_function(ball, azimuthal), eps);
    CHECK(res.report.converged);
    double axis_min = 1;
    for (std::size_t i = 0; i < ball->size(); ++i) {
        const auto x = ball->positions()[i];
        if (std::hypot(x.x, x.y) < 1e-9) axis_min = std::min(axis_min, std::abs(res.u[i]));
    }
    CHECK(axis_min <= 0.2);
    const double ratio = res.report.energy.total / std::abs(std::log(eps));
    MESSAGE("E/|ln eps| = " << ratio);
    CHECK(std::abs(ratio - 2 * pi) / (2 * pi) <= 0.25);
    CHECK(res.report.max_modulus <= 1 + 1e-3);
}

TEST_CASE("weighted minimization") {
    const double eps = 0.1;
    auto disc = LatticeGrid::disc(1.0, 0.02);
    SUBCASE("unit weight matches the plain energy") {
        const auto g = VectorField::from_function(disc, azimuthal);
        std::vector<double> one(disc->size(), 1.0);
        const auto a = minimize_dirichlet(g, eps);
        const auto b = minimize_weighted(g, eps, one);
        CHECK(b.report.energy.total == doctest::Approx(a.report.energy.total).epsilon(1e-9));
        CHECK(max_abs(gl_residual(b.u, eps)) <= b.report.tol);
    }
    SUBCASE("degree-zero unimodular data stays away from zero") {
        const auto g = VectorField::from_function(disc, [](const Vec3& p) { return std::polar(1.0, 0.8 * p.x + 0.5 * p.y * p.y); });
        std::vector<double> p(disc->size());
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = 1 / std::pow(1 + 0.3 * std::norm(cplx{disc->positions()[i].x, disc->positions()[i].y}), 2);
        const auto res = minimize_weighted(g, eps, p);
        CHECK(res.report.converged);
        CHECK(res.report.min_modulus >= 7.0 / 8);
        p[0] = -1;
        CHECK_THROWS_AS(minimize_weighted(g, eps, p), Error);
    }
}

TEST_CASE("solver bookkeeping") {
    auto disc = LatticeGrid::disc(1.0, 0.05);
    const auto g = VectorField::from_function(disc, azimuthal);
    SolveOptions opts;
    opts.max_iters = 1;
    const auto res = minimize_dirichlet(g, 0.1, opts);
    CHECK_FALSE(res.report.converged);
    CHECK(res.report.iterations == 1);

    SolveOptions multi;
    multi.inits = 3;
    multi.seed = 9;
    const auto a = minimize_dirichlet(g, 0.1, multi);
    const auto b = minimize_dirichlet(g, 0.1, multi);
    CHECK(a.report.energy.total == b.report.energy.total);
    for (std::size_t i = 0; i < a.u.size(); ++i) REQUIRE(a.u[i] == b.u[i]);

    SolveOptions bad;
    bad.max_iters = 0;
    CHECK_THROWS_AS(minimize_dirichlet(g, 0.1, bad), Error);
    CHECK_THROWS_AS(minimize_dirichlet(g, 0.0), Error);
}

TEST_CASE("eta sweep with constant data") {
    auto ball = LatticeGrid::ball(1.0, 0.1);
    const std::vector<double> eps{0.2, 0.1};
    const auto rows = eta_sweep(ball, [](const Vec3&) { return cplx{1, 0}; }, eps, 1.0);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        CHECK(r.center >= 0.99);
        CHECK(r.premise);
    }
    std::ostringstream os;
    write_eta_csv(os, rows);
    CHECK(os.str().rfind("eps,E,Eratio,u0", 0) == 0);
    const std::vector<double> rising{0.1, 0.2};
    CHECK_THROWS_AS(eta_sweep(ball, [](const Vec3&) { return cplx{1, 0}; }, rising, 1.0), Error);
}
