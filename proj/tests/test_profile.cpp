#include <cmath>
#include <sstream>

#include "doctest.h"
#include "glsharp/energy.hpp"
#include "glsharp/profile.hpp"

using namespace glsharp;

namespace {
const Profile& shared_profile() {
    static const Profile p = solve_profile();
    return p;
}
}  // namespace

TEST_CASE("radial profile") {
    const auto& p = shared_profile();
    CHECK(p.f.front() == 0.0);
    CHECK(p.value(0) == 0.0);
    for (std::size_t i = 1; i < p.f.size(); ++i) {
        REQUIRE(p.f[i] > p.f[i - 1]);
        REQUIRE(p.f[i] < 1.0);
    }
    CHECK(p.f.back() >= 1 - 2 / (p.r_max * p.r_max));
    CHECK(std::abs(1 - p.value(20) - 1.0 / 800) <= 5e-4);
    CHECK(p.residual <= 1e-10);
    MESSAGE("shooting slope " << p.slope << ", residual " << p.residual);
}

TEST_CASE("shooting slope is stable") {
    const auto& p = shared_profile();
    CHECK(std::abs(solve_profile(20, 1e-8).slope - p.slope) <= 1e-6);
    CHECK(std::abs(solve_profile(30, 1e-10).slope - p.slope) <= 1e-6);
    CHECK_THROWS_AS(solve_profile(10), Error);
    CHECK_THROWS_AS(solve_profile(20, 1e-6), Error);
}

TEST_CASE("profile interpolation and far field") {
    const auto& p = shared_profile();
    CHECK(p.value(p.r[1234]) == doctest::Approx(p.f[1234]).epsilon(1e-15));
    // the far-field branch joins the sampled branch continuously
    CHECK(std::abs(p.value(p.r_max - 1e-9) - p.value(p.r_max + 1e-9)) < 1e-6);
    const double r = 7.31;
    CHECK(std::abs((p.value(r + 1e-5) - p.value(r - 1e-5)) / 2e-5 - p.derivative(r)) < 1e-7);
    std::ostringstream os;
    write_profile_csv(os, p);
    CHECK(os.str().rfind("r,f\n0,0\n", 0) == 0);
}

TEST_CASE("canonical maps") {
    const auto& p = shared_profile();
    SUBCASE("modulus and axis") {
        auto ball = LatticeGrid::ball(3.0, 0.25);
        const auto v = canonical_map(p, ball);
        for (std::size_t i = 0; i < v.size(); ++i) {
            const auto x = ball->positions()[i];
            CHECK(std::abs(std::abs(v[i]) - p.value(std::hypot(x.x, x.y))) < 1e-14);
        }
        CHECK(vortex_value(p, {0, 0, 1.5}) == cplx{0, 0});
        CHECK(std::abs(vortex_value(p, {0, 5, 0}, {}, 1, -1) - cplx{0, -p.value(5)}) < 1e-14);
    }
    SUBCASE("discrete residual on B_10") {
        auto ball = LatticeGrid::ball(10.0, 0.1);
        const auto v = canonical_map(p, ball);
        CHECK(max_abs(gl_residual(v, 1.0)) <= 5e-2);
    }
}

TEST_CASE("planar energy table against the disc grid") {
    const auto& p = shared_profile();
    DiscEnergyTable e2(p, 10);
    auto disc = LatticeGrid::disc(10.0, 0.05);
    const double grid = gl_energy(canonical_map(p, disc), 1.0).total;
    CHECK(std::abs(grid - e2(10)) / e2(10) < 0.02);
    // pi ln R plus a constant once the core is resolved
    CHECK(std::abs((e2(10) - pi * std::log(10.0)) - (e2(8) - pi * std::log(8.0))) < 0.05);
    CHECK_THROWS_AS(e2(11), Error);
}

TEST_CASE("restriction of the canonical vortex to a sphere") {
    const auto& p = shared_profile();
    auto ball = LatticeGrid::ball(6.0, 0.1);
    const auto v = canonical_map(p, ball);
    const auto restricted = restrict_to_sphere(v, 3.0, 64);
    const auto direct = canonical_map(p, SphereGrid::make(3.0, 64));
    const double a = tangential_energy(restricted, 1.0).total;
    const double b = tangential_energy(direct, 1.0).total;
    CHECK(std::abs(a - b) / b < 0.02);
}

TEST_CASE("sharp growth rate") {
    const auto& p = shared_profile();
    const std::vector<double> radii{25, 50, 100, 200};
    const auto g = growth_rate(p, radii);
    MESSAGE("fitted a = " << g.a << ", b = " << g.b);
    CHECK(std::abs(g.a - 2 * pi) / (2 * pi) < 0.05);
    for (std::size_t i = 0; i < radii.size(); ++i) {
        CHECK(g.ratio[i] > 2 * pi);
        if (i > 0) CHECK(g.ratio[i] < g.ratio[i - 1]);
    }
    const double small = growth_rate(p, std::vector<double>{25, 50}).a;
    CHECK(std::abs(g.a - 2 * pi) <= std::abs(small - 2 * pi));
    CHECK_THROWS_AS(growth_rate(p, std::vector<double>{25}), Error);
}

TEST_CASE("slab reduction against the 3D grid") {
    const auto& p = shared_profile();
    DiscEnergyTable e2(p, 10);
    auto ball = LatticeGrid::ball(10.0, 0.2);
    const double grid = gl_energy(canonical_map(p, ball), 1.0).total;
    const double slab = slab_energy(e2, 10);
    CHECK(std::abs(grid - slab) / slab < 0.03);
}
