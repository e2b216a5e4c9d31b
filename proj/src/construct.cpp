#include "glsharp/construct.hpp"

#include <algorithm>
#include <cmath>

#include "glsharp/energy.hpp"
#include "glsharp/topology.hpp"

namespace glsharp {

namespace {

const SphereGrid& sphere_of(const VectorField& u, const char* who) {
    const auto* sg = dynamic_cast<const SphereGrid*>(&u.grid());
    if (!sg) throw Error(ErrorKind::invalid_argument, std::string(who) + " needs a sphere field");
    return *sg;
}

const LatticeGrid& lattice_of(const VectorField& u, const char* who) {
    const auto* lg = dynamic_cast<const LatticeGrid*>(&u.grid());
    if (!lg) throw Error(ErrorKind::invalid_argument, std::string(who) + " needs a lattice field");
    return *lg;
}

}  // namespace

// -- transplant ---------------------------------------------------------------------------

Vec3 TransplantChart::to_sphere(const Vec3& y) const {
    const double x1 = t * y.x, x2 = t * y.y;
    const double s = x1 * x1 + x2 * x2;
    const Vec3 q{2 * x1 / (1 + s), 2 * x2 / (1 + s), (s - 1) / (1 + s)};
    return glsharp::apply(from_south, q) * sphere_radius;
}

Vec3 TransplantChart::to_plane(const Vec3& x) const {
    const Vec3 q = glsharp::apply(to_south, normalized(x));
    const double d = 1 - q.z;
    return {q.x / d / t, q.y / d / t, 0};
}

TransplantChart make_chart(const SphericalDisc& disc, double sphere_radius, double plane_h, bool enforce_gate) {
    const double ratio = disc.radius / sphere_radius;
    if (!(ratio > 0 && ratio < pi / 2)) throw Error(ErrorKind::invalid_argument, "disc radius must lie in (0, pi R / 2)");
    if (!(plane_h > 0 && plane_h < 0.5)) throw Error(ErrorKind::invalid_argument, "chart spacing must lie in (0, 1/2)");
    TransplantChart c;
    c.disc = disc;
    c.sphere_radius = sphere_radius;
    c.gate_ok = ratio < 0.1;
    if (enforce_gate && !c.gate_ok) {
        throw Error(ErrorKind::invalid_argument,
                    "disc radius / sphere radius = " + std::to_string(ratio) + " is not below 1/10");
    }
    c.t = std::tan(ratio / 2);
    c.eps = 1 / (2 * sphere_radius * c.t);
    c.to_south = rotation_between(normalized(disc.center), Vec3{0, 0, -1});
    c.from_south = transpose(c.to_south);
    c.plane = LatticeGrid::disc(1.0, plane_h);
    const auto pos = c.plane->positions();
    c.weight.resize(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i) {
        c.weight[i] = 1 / std::pow(1 + c.t * c.t * (pos[i].x * pos[i].x + pos[i].y * pos[i].y), 2);
        c.weight_min = std::min(c.weight_min, c.weight[i]);
    }
    return c;
}

VectorField transplant(const std::function<cplx(const Vec3&)>& u, const TransplantChart& chart) {
    return VectorField::from_function(chart.plane, [&](const Vec3& y) { return u(chart.to_sphere(y)); });
}

VectorField transplant(const VectorField& u_sphere, const TransplantChart& chart) {
    const auto& sg = sphere_of(u_sphere, "transplant");
    return transplant([&](const Vec3& x) { return sg.sample(u_sphere.values(), x); }, chart);
}

VectorField inverse_transplant(const VectorField& U, const TransplantChart& chart, const VectorField& base) {
    sphere_of(base, "inverse_transplant");
    VectorField out = base;
    const auto pos = base.grid().positions();
    for (std::size_t i = 0; i < pos.size(); ++i) {
        if (chart.disc.contains(pos[i])) out[i] = chart.plane->sample(U.values(), chart.to_plane(pos[i]));
    }
    return out;
}

// -- filling -------------------------------------------------------------------------------

cplx FillResult::value(const Vec3& x) const { return chart.plane->sample(plane_field.values(), chart.to_plane(x)); }

FillResult fill_spherical_disc(const VectorField& u_sphere, const SphericalDisc& disc, const FillOptions& opts) {
    const auto& sg = sphere_of(u_sphere, "fill_spherical_disc");
    const double R = sg.radius();
    const int deg = degree_on_sphere(u_sphere, disc);
    if (deg != 0) {
        throw Error(ErrorKind::nonzero_winding, "boundary data has degree " + std::to_string(deg));
    }
    const double eps = 1 / (2 * R * std::tan(disc.radius / (2 * R)));
    const double h = opts.plane_h > 0 ? opts.plane_h : std::min(0.02, eps / 3);

    FillResult out;
    out.chart = make_chart(disc, R, h, opts.enforce_gate);
    const auto data = transplant(u_sphere, out.chart);
    SolveOptions so = opts.solve;
    so.init = InitKind::given;
    auto res = minimize_weighted(data, out.chart.eps, out.chart.weight, so);
    out.plane_field = std::move(res.u);
    out.solve = res.report;
    out.energy = weighted_energy(out.plane_field, out.chart.eps, out.chart.weight);
    out.data_energy = weighted_energy(data, out.chart.eps, out.chart.weight);
    out.min_modulus = res.report.min_modulus;
    const auto loop = circle_trace(u_sphere, disc);
    out.circle_energy = loop_energy(loop, 2 * pi * disc.euclidean_radius(), 1.0);
    out.circle_bound_ok = out.circle_energy <= opts.circle_constant / disc.radius;
    return out;
}

// -- cone extension ---------------------------------------------------------------------------

cplx cone_value(const std::function<cplx(double, double)>& u, const std::function<cplx(double, double)>& v, double R,
                double H, double x1, double x2, double z) {
    const cplx base = v(x1, x2);
    if (z <= 0 || (H / R) * std::hypot(x1, x2) >= z) return base;
    const double s = H / z;
    const cplx vq = v(s * x1, s * x2);
    if (std::abs(vq) == 0) throw Error(ErrorKind::invalid_argument, "cone extension needs v without zeros");
    return base * (u(s * x1, s * x2) / vq);
}

ConeResult cone_extension(const VectorField& u, const VectorField& v, double H, double hz) {
    const auto& disc = lattice_of(u, "cone_extension");
    if (&v.grid() != &u.grid()) throw Error(ErrorKind::invalid_argument, "u and v must share a lattice");
    if (disc.dimension() != 2) throw Error(ErrorKind::invalid_argument, "cone_extension needs a planar disc lattice");
    if (!(H > 0 && hz > 0)) throw Error(ErrorKind::invalid_argument, "height and z-spacing must be positive");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) == 0) throw Error(ErrorKind::invalid_argument, "cone extension needs v without zeros");
    }
    const double R = disc.radius();
    const double h = disc.steps()[0];
    auto cyl = LatticeGrid::cylinder(R, H, h, hz);

    auto us = [&](double a, double b) { return disc.sample(u.values(), Vec3{a, b, 0}); };
    auto vs = [&](double a, double b) { return disc.sample(v.values(), Vec3{a, b, 0}); };
    const Vec3 o = disc.origin();

    ConeResult out;
    out.U = VectorField(cyl);
    const auto pos = cyl->positions();
    for (std::size_t n = 0; n < pos.size(); ++n) {
        const Vec3 p = pos[n];
        const int i = static_cast<int>(std::lround((p.x - o.x) / h));
        const int j = static_cast<int>(std::lround((p.y - o.y) / h));
        const int node = disc.node_at(i, j, 0);
        if (p.z >= H - 1e-9 * hz) {
            out.U[n] = node >= 0 ? u[node] : us(p.x, p.y);
        } else if (node >= 0 && disc.boundary()[node]) {
            // discrete lateral boundary: its nodes sit inside |x| = R, where u = v is prescribed
            out.U[n] = v[node];
        } else {
            // node values keep the bottom and lateral traces exact
            auto vn = [&](double a, double b) { return (node >= 0 && a == p.x && b == p.y) ? v[node] : vs(a, b); };
            out.U[n] = cone_value(us, vn, R, H, p.x, p.y, p.z);
        }
    }
    const auto eU = gl_energy(out.U, 1.0);
    const auto eu = gl_energy(u, 1.0);
    const auto ev = gl_energy(v, 1.0);
    out.energy = eU.total;
    out.potential = eU.potential;
    out.energy_u = eu.total;
    out.energy_v = ev.total;
    out.potential_u = eu.potential;
    out.potential_v = ev.potential;
    const double denom = (H + R * R / H) * (eu.total + ev.total);
    out.c_measured = denom > 0 ? eU.total / denom : 0;
    const double pden = H * (eu.potential + ev.potential);
    // undefined for unimodular pairs, where both sides vanish up to interpolation error
    out.c_potential = pden > 1e-10 ? eU.potential / pden : 0;
    return out;
}

// -- spherical cylinder map --------------------------------------------------------------------

Vec3 psi(const Vec3& y, double R, double H) {
    const double s = (y.z + R - H) / R;
    const double rr = R * R - y.x * y.x - y.y * y.y;
    if (rr < 0) throw Error(ErrorKind::out_of_range, "psi is defined for |y'| <= R");
    return Vec3{y.x, y.y, std::sqrt(rr)} * s;
}

Vec3 psi_inverse(const Vec3& x, double R, double H) {
    const double r = norm(x);
    if (r == 0) throw Error(ErrorKind::out_of_range, "psi_inverse is undefined at the origin");
    const double s = r / R;
    return {x.x / s, x.y / s, r - R + H};
}

VectorField map_from_cylinder(const VectorField& U_cylinder, double R, double H, const LatticePtr& target) {
    const auto& cyl = lattice_of(U_cylinder, "map_from_cylinder");
    return VectorField::from_function(target, [&](const Vec3& x) {
        return cyl.sample(U_cylinder.values(), psi_inverse(x, R, H));
    });
}

}  // namespace glsharp
