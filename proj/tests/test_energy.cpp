#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "glsharp/energy.hpp"

using namespace glsharp;

namespace {

cplx azimuthal(const Vec3& p) { return std::polar(1.0, std::atan2(p.y, p.x)); }

// Harmonic polynomial (c.x)^l with c = b + i a, a and b orthonormal.
struct HarmonicPoly {
    Vec3 a, b;
    int degree;
    bool imag;
    cplx operator()(const Vec3& p) const {
        const cplx t{dot(b, p), dot(a, p)};
        const cplx v = std::pow(t, degree);
        return {imag ? v.imag() : v.real(), 0};
    }
};

HarmonicPoly random_harmonic(std::mt19937_64& rng, int degree) {
    std::normal_distribution<double> g;
    const Vec3 a = normalized({g(rng), g(rng), g(rng)});
    Vec3 b{g(rng), g(rng), g(rng)};
    b = normalized(b - a * dot(a, b));
    return {a, b, degree, (rng() & 1) != 0};
}

}  // namespace

TEST_CASE("energy of simple fields") {
    auto disc = LatticeGrid::disc(1.0, 0.05);
    SUBCASE("constant unimodular field") {
        VectorField u(disc, cplx{1, 0});
        const auto e = gl_energy(u, 0.3);
        CHECK(e.total == 0.0);
        CHECK(max_abs(gl_residual(u, 0.3)) == 0.0);
    }
    SUBCASE("zero field is critical") {
        VectorField u(disc, cplx{0, 0});
        CHECK(max_abs(gl_residual(u, 0.3)) == 0.0);
        const auto e = gl_energy(u, 1.0);
        CHECK(std::abs(e.potential - integrate(*disc, std::vector<double>(disc->size(), 0.25))) < 1e-12);
    }
    SUBCASE("decomposition and phase invariance") {
        auto u = VectorField::from_function(disc, [](const Vec3& p) { return cplx{p.x * p.y, 1 - p.x}; });
        auto v = u;
        for (auto& z : v.values()) z *= std::polar(1.0, 0.77);
        const auto a = gl_energy(u, 0.5), b = gl_energy(v, 0.5);
        CHECK(a.total == doctest::Approx(a.dirichlet + a.potential).epsilon(1e-15));
        CHECK(a.dirichlet == doctest::Approx(b.dirichlet).epsilon(1e-13));
        CHECK(a.potential == doctest::Approx(b.potential).epsilon(1e-13));
        CHECK(a.dirichlet >= 0);
        CHECK(a.potential >= 0);
    }
}

TEST_CASE("azimuthal phase on an annulus") {
    const double R = 4.0;
    auto ann = LatticeGrid::annulus(1.0, R, R / 400);
    auto u = VectorField::from_function(ann, azimuthal);
    const auto e = gl_energy(u, 1.0);
    CHECK(std::abs(e.dirichlet - pi * std::log(R)) / (pi * std::log(R)) < 0.02);
    CHECK(e.potential < 1e-12);
}

TEST_CASE("tangential energy of the azimuthal phase on a sphere") {
    const double R = 5.0;
    auto s = SphereGrid::make(R, 256);
    auto u = VectorField::from_function(s, azimuthal);
    const double phi0 = 1.0 / R;
    auto band = s->mask_where([&](const Vec3& p) {
        const double phi = std::acos(p.z / R);
        return phi >= phi0 && phi <= pi - phi0;
    });
    const auto e = tangential_energy(u, 1.0, band);
    // 1/2 int (1/(R sin phi))^2 R^2 sin phi dphi dtheta over the band
    const double oracle = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [](double phi) { return pi / std::sin(phi); }, phi0, pi - phi0);
    CHECK(std::abs(e.dirichlet - oracle) / oracle < 0.01);

    const auto whole = tangential_energy(u, 1.0);
    CHECK(whole.total >= e.total);
    VectorField c(s, std::polar(1.0, 0.3));
    CHECK(tangential_energy(c, 0.1).total < 1e-12);
}

TEST_CASE("loop energy of a degree-one circle") {
    for (double rho : {0.2, 0.7, 1.3}) {
        const int n = 512;
        std::vector<cplx> loop(n + 1);
        for (int k = 0; k <= n; ++k) loop[k] = std::polar(1.0, 2 * pi * k / n);
        const double e = loop_energy(loop, 2 * pi * std::sin(rho), 1.0);
        CHECK(std::abs(e - pi / std::sin(rho)) / (pi / std::sin(rho)) < 0.01);
    }
}

TEST_CASE("weighted energy") {
    auto disc = LatticeGrid::disc(1.0, 0.05);
    auto u = VectorField::from_function(disc, [](const Vec3& p) { return cplx{p.x, 0.5 * p.y}; });
    std::vector<double> one(disc->size(), 1.0), p(disc->size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = 1 + disc->positions()[i].x * disc->positions()[i].x;
    CHECK(weighted_energy(u, 0.2, one) == doctest::Approx(gl_energy(u, 0.2).total).epsilon(1e-14));

    auto unit = VectorField::from_function(disc, azimuthal);
    CHECK(weighted_energy(unit, 0.2, one) == doctest::Approx(weighted_energy(unit, 0.2, p)).epsilon(1e-12));

    p[3] = 0;
    CHECK_THROWS_AS(weighted_energy(u, 0.2, p), Error);
}

TEST_CASE("region energies are additive") {
    auto ball = LatticeGrid::ball(2.0, 0.1);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1, 1);
    std::vector<cplx> vals(ball->size());
    for (auto& v : vals) v = {U(rng), U(rng)};
    VectorField u(ball, vals);
    auto inner = ball->mask_where([](const Vec3& p) { return p.x + 0.3 * p.y < 0.4; });
    NodeMask outer(inner.size());
    for (std::size_t i = 0; i < inner.size(); ++i) outer[i] = 1 - inner[i];
    const double total = gl_energy(u, 0.7).total;
    const double parts = gl_energy(u, 0.7, inner).total + gl_energy(u, 0.7, outer).total;
    CHECK(std::abs(total - parts) / total < 1e-12);
}

TEST_CASE("rescaling identity") {
    const double R = 4.0;
    auto big = LatticeGrid::ball(R, 0.2);
    auto unit = LatticeGrid::ball(1.0, 0.2 / R);
    auto v_fn = [](const Vec3& p) { return cplx{std::cos(0.4 * p.x) * std::tanh(p.y), std::sin(0.3 * p.z)}; };
    auto v = VectorField::from_function(big, v_fn);
    auto u = VectorField::from_function(unit, [&](const Vec3& p) { return v_fn(p * R); });
    const double lhs = gl_energy(u, 1.0 / R).total;
    const double rhs = gl_energy(v, 1.0).total / R;
    CHECK(std::abs(lhs - rhs) / rhs < 0.02);
}

TEST_CASE("monotonicity check") {
    ShellEnergyTrace zeros;
    ShellEnergyTrace decreasing;
    for (int k = 1; k <= 10; ++k) {
        zeros.r.push_back(k);
        zeros.E.push_back(0);
        decreasing.r.push_back(k);
        decreasing.E.push_back(1.0 / k);
    }
    CHECK(monotonicity_check(zeros, 3).empty());
    CHECK(monotonicity_check(decreasing, 3).size() == 9);
}

TEST_CASE("shell energy trace of a smooth field") {
    auto ball = LatticeGrid::ball(3.0, 0.1);
    auto u = VectorField::from_function(ball, [](const Vec3& p) {
        const double r = std::hypot(p.x, p.y);
        return r < 1e-12 ? cplx{0, 0} : std::tanh(r) * cplx{p.x, p.y} / r;
    });
    std::vector<double> radii;
    for (double r = 0.5; r <= 2.5; r += 0.25) radii.push_back(r);
    const auto tr = shell_energy_trace(u, radii);
    REQUIRE(tr.r.size() == radii.size());
    for (std::size_t k = 1; k < tr.r.size(); ++k) {
        CHECK(tr.r[k] > tr.r[k - 1]);
        CHECK(tr.E[k] >= tr.E[k - 1]);
    }
    CHECK(tangential_bound_violations(tr, 0.05).empty());
}

TEST_CASE("harmonic identities") {
    SUBCASE("constant") {
        auto ball = LatticeGrid::ball(1.0, 1.0 / 16);
        const auto rep = harmonic_identities(VectorField(ball, cplx{2, 0}));
        CHECK(rep.lhs == 0.0);
        CHECK(rep.rhs == 0.0);
        CHECK(rep.pohozaev_defect == 0.0);
    }
    SUBCASE("degree one is the equality case") {
        auto ball = LatticeGrid::ball(1.0, 1.0 / 32);
        const auto rep = harmonic_identities(VectorField::from_function(ball, [](const Vec3& p) { return cplx{p.x, 0}; }));
        const double r = rep.radius;
        CHECK(rep.lhs == doctest::Approx(4 * pi * r * r * r / 3).epsilon(1e-3));
        CHECK(std::abs(rep.lhs - rep.rhs) / rep.rhs < 0.01);
    }
    SUBCASE("x1 x2 against closed form") {
        auto ball = LatticeGrid::ball(1.0, 1.0 / 32);
        const auto rep = harmonic_identities(VectorField::from_function(ball, [](const Vec3& p) { return cplx{p.x * p.y, 0}; }));
        const double r = rep.radius;
        // degree-2 harmonic with int_{S_1} w^2 = 4 pi / 15
        const double sphere_sq = 4 * pi / 15 * std::pow(r, 6);
        CHECK(rep.lhs == doctest::Approx(2 / r * sphere_sq).epsilon(5e-3));
        CHECK(rep.rhs == doctest::Approx(3 / r * sphere_sq).epsilon(5e-3));
        CHECK(rep.lhs <= rep.rhs * 1.05);
    }
    SUBCASE("random harmonic polynomials") {
        std::mt19937_64 rng(11);
        auto ball = LatticeGrid::ball(1.0, 1.0 / 16);
        for (int degree = 1; degree <= 4; ++degree) {
            const auto w = random_harmonic(rng, degree);
            const auto rep = harmonic_identities(VectorField::from_function(ball, w));
            CHECK(rep.lhs <= rep.rhs * 1.05);
        }
    }
    SUBCASE("non-harmonic input is rejected") {
        auto ball = LatticeGrid::ball(1.0, 1.0 / 16);
        auto w = VectorField::from_function(ball, [](const Vec3& p) { return cplx{p.x * p.x, 0}; });
        CHECK_THROWS_AS(harmonic_identities(w), Error);
    }
}
