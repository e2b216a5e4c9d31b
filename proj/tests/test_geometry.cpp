#include <cmath>
#include <sstream>

#include "doctest.h"
#include "glsharp/energy.hpp"
#include "glsharp/geometry.hpp"

using namespace glsharp;

TEST_CASE("lattice grids carry the expected measure") {
    auto disc = LatticeGrid::disc(1.0, 0.02);
    std::vector<double> one(disc->size(), 1.0);
    CHECK(std::abs(integrate(*disc, one) - pi) / pi < 2 * 0.02);

    auto ball = LatticeGrid::ball(1.0, 0.05);
    std::vector<double> ones(ball->size(), 1.0);
    CHECK(std::abs(integrate(*ball, ones) - 4 * pi / 3) / (4 * pi / 3) < 0.01);

    auto cyl = LatticeGrid::cylinder(1.0, 2.0, 0.05, 0.1);
    std::vector<double> c1(cyl->size(), 1.0);
    CHECK(std::abs(integrate(*cyl, c1) - 2 * pi) / (2 * pi) < 2 * 0.05);

    // every interior node has its full neighborhood
    for (std::size_t n = 0; n < disc->size(); ++n) {
        if (disc->boundary()[n]) continue;
        const auto s = disc->site_of(n);
        CHECK(disc->node_at(s[0] + 1, s[1], 0) >= 0);
        CHECK(disc->node_at(s[0] - 1, s[1], 0) >= 0);
        CHECK(disc->node_at(s[0], s[1] + 1, 0) >= 0);
        CHECK(disc->node_at(s[0], s[1] - 1, 0) >= 0);
    }
}

TEST_CASE("gradient on lattices") {
    auto disc = LatticeGrid::disc(1.0, 0.1);
    SUBCASE("constant") {
        VectorField f(disc, cplx{0.3, -2});
        for (const auto& g : gradient(f)) {
            CHECK(std::abs(g[0]) == 0.0);
            CHECK(std::abs(g[1]) == 0.0);
        }
    }
    SUBCASE("linear is exact") {
        auto f = VectorField::from_function(disc, [](const Vec3& p) { return cplx{p.x, 0}; });
        const auto g = gradient(f);
        for (std::size_t n = 0; n < g.size(); ++n) {
            // isolated tips of the mask have no x-neighbour at all
            const auto s = disc->site_of(n);
            if (disc->node_at(s[0] + 1, s[1], 0) < 0 && disc->node_at(s[0] - 1, s[1], 0) < 0) continue;
            CHECK(std::abs(g[n][0] - 1.0) < 1e-12);
            CHECK(std::abs(g[n][1]) < 1e-12);
        }
    }
    SUBCASE("smooth field, second order in the interior") {
        auto f = VectorField::from_function(disc, [](const Vec3& p) { return cplx{std::cos(p.x), std::sin(p.x)}; });
        const auto g = gradient(f);
        double worst = 0;
        for (std::size_t n = 0; n < g.size(); ++n) {
            if (disc->boundary()[n]) continue;
            const double x = disc->positions()[n].x;
            worst = std::max(worst, std::abs(g[n][0] - cplx{-std::sin(x), std::cos(x)}));
        }
        CHECK(worst <= 2e-3);
    }
}

TEST_CASE("tangential gradient on the sphere") {
    const double R = 2.0;
    auto s = SphereGrid::make(R, 256);
    SUBCASE("constant") {
        VectorField f(s, cplx{1, 1});
        for (const auto& g : tangential_gradient(f)) CHECK(std::abs(g[0]) + std::abs(g[1]) == 0.0);
    }
    SUBCASE("axial coordinate at the equator") {
        auto f = VectorField::from_function(s, [&](const Vec3& p) { return cplx{p.z / R, 0}; });
        const auto g = tangential_gradient(f);
        const int j = s->n_phi() / 2;
        const double mag = std::sqrt(std::norm(g[s->node(j, 5)][0]) + std::norm(g[s->node(j, 5)][1]));
        CHECK(std::abs(mag - 1 / R) < 1e-3);
    }
    SUBCASE("azimuthal phase on a latitude circle") {
        auto f = VectorField::from_function(s, [](const Vec3& p) { return std::polar(1.0, std::atan2(p.y, p.x)); });
        const auto g = tangential_gradient(f);
        for (int j : {20, 64, 128}) {
            const double phi0 = s->colatitude(j);
            const auto& gj = g[s->node(j, 3)];
            const double mag = std::sqrt(std::norm(gj[0]) + std::norm(gj[1]));
            CHECK(std::abs(mag - 1 / (R * std::sin(phi0))) < 1e-3);
        }
    }
    SUBCASE("tangential-normal split of an ambient coordinate") {
        auto f = VectorField::from_function(s, [](const Vec3& p) { return cplx{p.x, 0}; });
        const auto g = tangential_gradient(f);
        const auto pos = s->positions();
        double worst = 0;
        for (int j = 8; j < s->n_phi() - 8; ++j) {
            for (int k = 0; k < s->n_theta(); k += 17) {
                const auto n = s->node(j, k);
                const double t = std::norm(g[n][0]) + std::norm(g[n][1]);
                worst = std::max(worst, std::abs(t + std::pow(pos[n].x / R, 2) - 1));
            }
        }
        CHECK(worst < 1e-3);
    }
}

TEST_CASE("sphere quadrature") {
    auto s = SphereGrid::make(1.0, 128);
    std::vector<double> one(s->size(), 1.0), x2(s->size());
    for (std::size_t i = 0; i < s->size(); ++i) x2[i] = std::pow(s->positions()[i].x, 2);
    CHECK(std::abs(integrate(*s, one) - 4 * pi) / (4 * pi) < 1e-3);
    CHECK(std::abs(integrate(*s, x2) - 4 * pi / 3) < 1e-2);
    for (const auto& p : s->positions()) CHECK(std::abs(p.z) < 1.0);
}

TEST_CASE("sphere quadrature converges at second order") {
    struct Case {
        double (*f)(const Vec3&);
        double exact;
    };
    const Case cases[] = {
        {[](const Vec3&) { return 1.0; }, 4 * pi},
        {[](const Vec3& p) { return p.x * p.x; }, 4 * pi / 3},
        {[](const Vec3& p) { return p.z * p.z; }, 4 * pi / 3},
        {[](const Vec3& p) { return p.x * p.x * p.y * p.y; }, 4 * pi / 15},
        {[](const Vec3& p) { return std::pow(p.z, 4); }, 4 * pi / 5},
    };
    for (const auto& c : cases) {
        double err[2];
        int idx = 0;
        for (int n : {32, 64}) {
            auto s = SphereGrid::make(1.0, n);
            std::vector<double> d(s->size());
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = c.f(s->positions()[i]);
            err[idx++] = std::abs(integrate(*s, d) - c.exact);
        }
        CHECK(err[0] / err[1] >= 3.0);
    }
}

TEST_CASE("discrete divergence theorem on the disc") {
    double prev_c = 0;
    for (double h : {0.04, 0.02}) {
        auto disc = LatticeGrid::disc(1.0, h);
        auto f = VectorField::from_function(disc, [](const Vec3& p) { return cplx{std::sin(p.x) * std::cos(p.y), 0}; });
        const auto g = gradient(f);
        std::vector<double> d(g.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = g[i][0].real();
        const double interior = integrate(*disc, d);
        double flux = 0;
        const int m = 4000;
        for (int k = 0; k < m; ++k) {
            const double t = 2 * pi * (k + 0.5) / m;
            flux += std::sin(std::cos(t)) * std::cos(std::sin(t)) * std::cos(t) * (2 * pi / m);
        }
        const double c = std::abs(interior - flux) / h;
        MESSAGE("divergence defect constant at h=" << h << ": " << c);
        CHECK(c < 10.0);
        prev_c = c;
    }
    CHECK(prev_c > 0);
}

TEST_CASE("restriction to spheres") {
    auto ball = LatticeGrid::ball(1.5, 0.1);
    SUBCASE("constant") {
        VectorField u(ball, cplx{0.2, 0.7});
        const auto s = restrict_to_sphere(u, 1.0, 32);
        for (const cplx& v : s.values()) CHECK(std::abs(v - cplx{0.2, 0.7}) < 1e-14);
    }
    SUBCASE("linear field is reproduced") {
        auto u = VectorField::from_function(ball, [](const Vec3& p) { return cplx{p.x, p.y}; });
        const auto s = restrict_to_sphere(u, 1.0, 32);
        const auto pos = s.grid().positions();
        double worst = 0;
        for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, std::abs(s[i] - cplx{pos[i].x, pos[i].y}));
        CHECK(worst < 1e-6);
    }
    SUBCASE("radius out of range") {
        VectorField u(ball, cplx{1, 0});
        CHECK_THROWS_AS(restrict_to_sphere(u, 1.45, 16), Error);
        CHECK_THROWS_AS(restrict_to_sphere(u, 0.1, 16), Error);
    }
}

TEST_CASE("circle traces") {
    auto s = SphereGrid::make(3.0, 128);
    const SphericalDisc north_disc{{0.2, 0, std::sqrt(9 - 0.04)}, 0.9};
    SUBCASE("constant field gives a constant closed loop") {
        VectorField u(s, cplx{0.5, 0.5});
        const auto loop = circle_trace(u, north_disc);
        CHECK(loop.front() == loop.back());
        for (const cplx& v : loop) CHECK(std::abs(v - cplx{0.5, 0.5}) < 1e-14);
    }
    SUBCASE("ambient coordinate traces a sinusoid") {
        const SphericalDisc d{{0, 0, 3.0}, 0.6};
        auto u = VectorField::from_function(s, [](const Vec3& p) { return cplx{p.x, 0}; });
        CHECK_THROWS_AS(circle_trace(u, SphericalDisc{{0, 0, 3.0}, 0.001}), Error);
        const auto loop = circle_trace(u, d, 256);
        const double amp = 3.0 * std::sin(0.6 / 3.0);
        double worst = 0;
        const std::size_t n = loop.size() - 1;
        for (std::size_t k = 0; k < n; ++k) {
            worst = std::max(worst, std::abs(loop[k].real() - amp * std::cos(2 * pi * k / n)));
        }
        CHECK(worst < 2e-3);
    }
}

TEST_CASE("binary snapshot round trip") {
    auto disc = LatticeGrid::disc(1.0, 0.25);
    auto u = VectorField::from_function(disc, [](const Vec3& p) { return cplx{p.x, -p.y}; });
    std::stringstream ss;
    write_field_binary(ss, u);
    const auto snap = read_field_binary(ss);
    CHECK(snap.kind == GridKind::disc);
    CHECK(snap.dims[0] == 9);
    std::size_t finite = 0;
    for (std::size_t i = 0; i < snap.body.size(); i += 2) finite += std::isfinite(snap.body[i]) ? 1 : 0;
    CHECK(finite == disc->size());
    const auto s = disc->site_of(7);
    const std::size_t site = (static_cast<std::size_t>(s[2]) * 9 + s[1]) * 9 + s[0];
    CHECK(snap.body[2 * site] == u[7].real());
    CHECK(snap.body[2 * site + 1] == u[7].imag());
}
