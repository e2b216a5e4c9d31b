#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>

#include <boost/math/quadrature/gauss.hpp>

#include "glsharp/construct.hpp"
#include "glsharp/energy.hpp"

namespace glsharp {

namespace {

const SphereGrid& sphere_grid(const VectorField& u, const char* who) {
    const auto* sg = dynamic_cast<const SphereGrid*>(&u.grid());
    if (!sg) throw Error(ErrorKind::invalid_argument, std::string(who) + " needs a sphere field");
    return *sg;
}

std::vector<double> sphere_gradient_sq(const SpherePtr& grid, std::span<const double> f) {
    std::vector<cplx> vals(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) vals[i] = {f[i], 0};
    const auto g = tangential_gradient(VectorField(grid, std::move(vals)));
    std::vector<double> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = std::norm(g[i][0]) + std::norm(g[i][1]);
    return out;
}

}  // namespace

// -- lifting -----------------------------------------------------------------------------------

double SpherePhase::modulus_at(const Vec3& direction) const { return grid->sample_real(modulus, direction); }
double SpherePhase::phase_at(const Vec3& direction) const { return grid->sample_real(phase, direction); }

SpherePhase lift_phase(const VectorField& V) {
    const auto& sg = sphere_grid(V, "lift_phase");
    const int np = sg.n_phi(), nt = sg.n_theta();
    const std::size_t n = V.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(V[i]) == 0) throw Error(ErrorKind::lifting_defect, "field vanishes at a node");
    }
    auto inc = [&](std::size_t a, std::size_t b) { return std::arg(V[b] / V[a]); };

    for (int j = 0; j + 1 < np; ++j) {
        for (int k = 0; k < nt; ++k) {
            const int k1 = (k + 1) % nt;
            const auto a = sg.node(j, k), b = sg.node(j, k1), c = sg.node(j + 1, k1), d = sg.node(j + 1, k);
            const double s = inc(a, b) + inc(b, c) + inc(c, d) + inc(d, a);
            if (std::abs(s) > pi) {
                throw Error(ErrorKind::lifting_defect, "plaquette (" + std::to_string(j) + ", " + std::to_string(k) +
                                                           ") carries a vortex");
            }
        }
    }
    for (int j : {0, np - 1}) {
        double s = 0;
        for (int k = 0; k < nt; ++k) s += inc(sg.node(j, k), sg.node(j, (k + 1) % nt));
        if (std::abs(s) > pi) throw Error(ErrorKind::lifting_defect, "polar cap carries a vortex");
    }

    SpherePhase out;
    out.grid = std::static_pointer_cast<const SphereGrid>(V.grid_ptr());
    out.modulus.resize(n);
    out.phase.assign(n, 0.0);
    std::vector<std::uint8_t> seen(n, 0);
    std::deque<std::pair<int, int>> queue{{0, 0}};
    seen[sg.node(0, 0)] = 1;
    out.phase[sg.node(0, 0)] = std::arg(V[sg.node(0, 0)]);
    while (!queue.empty()) {
        const auto [j, k] = queue.front();
        queue.pop_front();
        const auto a = sg.node(j, k);
        const std::pair<int, int> nbrs[4] = {{j, (k + 1) % nt}, {j, (k + nt - 1) % nt}, {j + 1, k}, {j - 1, k}};
        for (const auto& [jj, kk] : nbrs) {
            if (jj < 0 || jj >= np) continue;
            const auto b = sg.node(jj, kk);
            if (seen[b]) continue;
            seen[b] = 1;
            out.phase[b] = out.phase[a] + inc(a, b);
            queue.emplace_back(jj, kk);
        }
    }
    out.min_modulus = std::abs(V[0]);
    for (std::size_t i = 0; i < n; ++i) {
        out.modulus[i] = std::abs(V[i]);
        out.min_modulus = std::min(out.min_modulus, out.modulus[i]);
        if (out.modulus[i] >= 7.0 / 8) {
            out.lifting_error = std::max(out.lifting_error, std::abs(std::polar(1.0, out.phase[i]) - V[i] / out.modulus[i]));
        }
    }
    return out;
}

// -- harmonic extension ----------------------------------------------------------------------------

HarmonicExtension harmonic_phase_extension(const LatticeGrid& lattice, const NodeMask& core, const SpherePhase& phase,
                                           double core_radius, double tol) {
    const std::size_t N = lattice.size();
    if (core.size() != N) throw Error(ErrorKind::invalid_argument, "core mask size does not match the lattice");
    const auto pos = lattice.positions();
    const auto w = lattice.weights();

    HarmonicExtension out;
    out.phi.assign(N, 0.0);
    std::vector<std::int64_t> id(N, -1);
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < N; ++i) {
        if (core[i]) {
            id[i] = static_cast<std::int64_t>(nodes.size());
            nodes.push_back(i);
        }
    }
    const std::size_t n = nodes.size();
    if (n == 0) throw Error(ErrorKind::invalid_argument, "empty core");

    struct Link { std::size_t a, b; double c; };
    std::vector<Link> inner;
    std::vector<double> diag(n, 0.0), rhs(n, 0.0);
    std::vector<std::uint8_t> dirichlet(N, 0);
    for (const auto& e : lattice.edges()) {
        const bool ca = core[e.a], cb = core[e.b];
        if (ca && cb) {
            inner.push_back({static_cast<std::size_t>(id[e.a]), static_cast<std::size_t>(id[e.b]), e.coef});
            diag[id[e.a]] += e.coef;
            diag[id[e.b]] += e.coef;
        } else if (ca || cb) {
            const std::size_t in = ca ? e.a : e.b, outside = ca ? e.b : e.a;
            if (!dirichlet[outside]) {
                out.phi[outside] = phase.phase_at(pos[outside]);
                dirichlet[outside] = 1;
            }
            diag[id[in]] += e.coef;
            rhs[id[in]] += e.coef * out.phi[outside];
        }
    }

    auto apply_A = [&](const std::vector<double>& x, std::vector<double>& y) {
        for (std::size_t i = 0; i < n; ++i) y[i] = diag[i] * x[i];
        for (const auto& l : inner) {
            y[l.a] -= l.c * x[l.b];
            y[l.b] -= l.c * x[l.a];
        }
    };
    auto scaled_max = [&](const std::vector<double>& r) {
        double m = 0;
        for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(r[i]) / w[nodes[i]]);
        return m;
    };

    // Jacobi-preconditioned conjugate gradients from the mean boundary phase
    std::vector<double> x(n), r(n), z(n), p(n), Ap(n);
    double mean = 0, count = 0;
    for (std::size_t i = 0; i < N; ++i) {
        if (dirichlet[i]) mean += out.phi[i], count += 1;
    }
    std::fill(x.begin(), x.end(), count > 0 ? mean / count : 0.0);
    apply_A(x, Ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - Ap[i];
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    p = z;
    double rz = 0;
    for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];
    const int max_iters = static_cast<int>(10 * n + 1000);
    int it = 0;
    while (scaled_max(r) > tol) {
        if (it++ >= max_iters) throw Error(ErrorKind::not_converged, "harmonic extension did not converge");
        apply_A(p, Ap);
        double pAp = 0;
        for (std::size_t i = 0; i < n; ++i) pAp += p[i] * Ap[i];
        const double a = rz / pAp;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += a * p[i];
            r[i] -= a * Ap[i];
            z[i] = r[i] / diag[i];
        }
        double rz_new = 0;
        for (std::size_t i = 0; i < n; ++i) rz_new += r[i] * z[i];
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    // residual recomputed from scratch rather than the recursively updated one
    for (std::size_t i = 0; i < n; ++i) out.phi[nodes[i]] = x[i];
    apply_A(x, Ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - Ap[i];
    out.residual = scaled_max(r);
    out.iterations = it;

    std::vector<double> contrib;
    for (const auto& e : lattice.edges()) {
        const double share = 0.5 * (core[e.a] + core[e.b]);
        if (share == 0) continue;
        const double d = out.phi[e.a] - out.phi[e.b];
        contrib.push_back(0.5 * e.coef * d * d * share);
    }
    out.dirichlet = pairwise_sum(contrib);

    const auto g2 = sphere_gradient_sq(phase.grid, phase.phase);
    out.bound = core_radius / 4 * integrate(*phase.grid, g2);
    return out;
}

// -- annulus ---------------------------------------------------------------------------------------------

cplx annulus_value(const SpherePhase& lift, const Vec3& x, double R_out, double H) {
    const double t = std::clamp((norm(x) - (R_out - H)) / H, 0.0, 1.0);
    const double rho = t * lift.modulus_at(x) + (1 - t);
    return std::polar(rho, lift.phase_at(x));
}

AnnulusPieces annulus_pieces(const SpherePhase& lift, double R_out, double H) {
    const auto& g = *lift.grid;
    const std::size_t n = g.size();
    const double scale = R_out / g.radius();  // areas on the lifting grid rescaled to S_{R_out}
    const auto grad_rho = sphere_gradient_sq(lift.grid, lift.modulus);
    const auto grad_phi = sphere_gradient_sq(lift.grid, lift.phase);
    const double a = (R_out - H) / R_out, b = H / R_out;
    const double radial_factor = a * a + a * b + b * b / 3;  // int_0^1 (r/R_out)^2 dt

    std::vector<double> d_rad(n), d_phase(n), d_pot(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = lift.modulus[i] - 1;
        d_rad[i] = s * s;
        d_phase[i] = grad_phi[i] * (1 + s + s * s / 3);
        d_pot[i] = boost::math::quadrature::gauss<double, 8>::integrate(
            [&](double t) {
                const double rho = 1 + t * s;
                const double q = 1 - rho * rho;
                return (a + b * t) * (a + b * t) * q * q;
            },
            0.0, 1.0);
    }
    AnnulusPieces out;
    // gradient integrals are scale invariant on the sphere, area integrals are not
    out.radial = 0.5 / (H * H) * integrate(g, d_rad) * scale * scale * H * radial_factor;
    out.modulus = 0.5 * H / 3 * integrate(g, grad_rho);
    out.phase = 0.5 * H * integrate(g, d_phase);
    out.potential = 0.25 * H * integrate(g, d_pot) * scale * scale;
    return out;
}

// -- competitor --------------------------------------------------------------------------------------------

CompetitorResult competitor(const VectorField& u, double gamma, double lambda, const CompetitorOptions& opts) {
    const auto& sg = sphere_grid(u, "competitor");
    const double R = sg.radius();
    const double alpha = opts.alpha > 0 ? opts.alpha : default_alpha(gamma);
    const double H = std::pow(R, alpha);
    const double h = opts.h;
    if (!(h > 0)) throw Error(ErrorKind::invalid_argument, "lattice spacing must be positive", "competitor");
    if (R - 2 * H < 2 * h) {
        throw Error(ErrorKind::invalid_argument, "R - 2 R^alpha must exceed two lattice spacings", "competitor");
    }

    PipelineOptions po = opts.bad_discs;
    po.alpha = alpha;
    const auto bad = bad_disc_pipeline(u, gamma, lambda, po);
    const auto& discs = bad.family.discs;

    CompetitorResult res;
    auto& rep = res.report;
    rep.R = R;
    rep.alpha = alpha;
    rep.H = H;
    rep.tangential_energy = bad.tangential_energy;
    rep.bad_discs = {{"family", to_json(bad.family)}, {"certificate", to_json(bad.certificate)}};

    std::vector<FillResult> fills;
    for (const auto& d : discs) {
        FillOptions fo = opts.fill;
        fo.enforce_gate = opts.enforce_gate;
        try {
            fills.push_back(fill_spherical_disc(u, d, fo));
        } catch (const Error& e) {
            throw e.with_stage("fill");
        }
        rep.gate_ok.push_back(fills.back().chart.gate_ok);
        rep.fill_min_modulus.push_back(fills.back().min_modulus);
        rep.fill_energy.push_back(fills.back().energy);
        rep.fill_data_energy.push_back(fills.back().data_energy);
    }
    auto outer_value = [&](const Vec3& direction) {
        const Vec3 p = normalized(direction) * R;
        for (std::size_t i = 0; i < discs.size(); ++i) {
            if (discs[i].contains(p)) return fills[i].value(p);
        }
        return sg.sample(u.values(), p);
    };

    // V on the inner sphere: filled discs, u elsewhere
    auto inner = sg.rescaled(R - H);
    VectorField V(inner);
    for (std::size_t i = 0; i < V.size(); ++i) V[i] = outer_value(inner->positions()[i]);
    SpherePhase lift;
    try {
        lift = lift_phase(V);
    } catch (const Error& e) {
        throw e.with_stage("lifting");
    }
    rep.inner_tangential = tangential_energy(V, 1.0).total;
    rep.lifting_error = lift.lifting_error;
    rep.min_inner_modulus = lift.min_modulus;
    rep.annulus_pieces = annulus_pieces(lift, R - H, H);

    auto ball = LatticeGrid::ball(R, h);
    res.shell = ball->mask_where([&](const Vec3& x) { return norm(x) >= R - H; });
    res.annulus = ball->mask_where([&](const Vec3& x) { const double r = norm(x); return r >= R - 2 * H && r < R - H; });
    res.core = ball->mask_where([&](const Vec3& x) { return norm(x) < R - 2 * H; });

    HarmonicExtension harm;
    try {
        harm = harmonic_phase_extension(*ball, res.core, lift, R - 2 * H);
    } catch (const Error& e) {
        throw e.with_stage("harmonic");
    }
    rep.harmonic_bound = harm.bound;
    rep.harmonic_residual = harm.residual;

    // Psi charts for the cylinders over each disc: disc center rotated to the north pole
    struct Cyl { Mat3 to_north, back; double planar_radius; };
    std::vector<Cyl> cyls;
    for (const auto& d : discs) {
        Cyl c;
        c.to_north = rotation_between(normalized(d.center), Vec3{0, 0, 1});
        c.back = transpose(c.to_north);
        c.planar_radius = R * std::sin(std::min(d.radius / R, pi / 2));
        cyls.push_back(c);
    }

    res.U = VectorField(ball);
    const auto pos = ball->positions();
    const auto bnd = ball->boundary();
    for (std::size_t n = 0; n < pos.size(); ++n) {
        const Vec3 x = pos[n];
        if (bnd[n]) {
            res.U[n] = sg.sample(u.values(), normalized(x) * R);
        } else if (res.shell[n]) {
            const Vec3 p = normalized(x) * R;
            std::size_t hit = discs.size();
            for (std::size_t i = 0; i < discs.size(); ++i) {
                if (discs[i].contains(p)) { hit = i; break; }
            }
            if (hit == discs.size()) {
                res.U[n] = sg.sample(u.values(), p);
                continue;
            }
            const auto& c = cyls[hit];
            auto on_sphere = [&](double a, double b) {
                return glsharp::apply(c.back, Vec3{a, b, std::sqrt(std::max(R * R - a * a - b * b, 0.0))});
            };
            auto uf = [&](double a, double b) { return sg.sample(u.values(), on_sphere(a, b)); };
            auto vf = [&](double a, double b) { return fills[hit].value(on_sphere(a, b)); };
            const Vec3 y = psi_inverse(glsharp::apply(c.to_north, x), R, H);
            res.U[n] = cone_value(uf, vf, c.planar_radius, H, y.x, y.y, y.z);
        } else if (res.annulus[n]) {
            res.U[n] = annulus_value(lift, x, R - H, H);
        } else {
            res.U[n] = std::polar(1.0, harm.phi[n]);
        }
    }

    const auto nodal = nodal_energy(res.U, 1.0);
    auto region_sum = [&](const NodeMask& m) {
        std::vector<double> v;
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (m[i]) v.push_back(nodal.dirichlet[i] + nodal.potential[i]);
        }
        return pairwise_sum(v);
    };
    rep.shell = region_sum(res.shell);
    rep.annulus = region_sum(res.annulus);
    rep.core = region_sum(res.core);
    rep.total = gl_energy(res.U, 1.0).total;
    rep.bookkeeping_defect = std::abs(rep.total - (rep.shell + rep.annulus + rep.core)) / rep.total;
    rep.sigma = rep.core / (R * rep.tangential_energy);
    rep.sigma_core_radius = rep.core / ((R - 2 * H) * rep.tangential_energy);
    rep.error_constant = (rep.shell + rep.annulus) / (H * std::log(R));
    return res;
}

nlohmann::json to_json(const AnnulusPieces& p) {
    return {{"radial", p.radial}, {"modulus", p.modulus}, {"phase", p.phase}, {"potential", p.potential},
            {"total", p.total()}};
}

nlohmann::json to_json(const CompetitorReport& r) {
    nlohmann::json gate = nlohmann::json::array();
    for (bool g : r.gate_ok) gate.push_back(g);
    return {
        {"R", r.R},
        {"alpha", r.alpha},
        {"H", r.H},
        {"energy", {{"total", r.total}, {"shell", r.shell}, {"annulus", r.annulus}, {"core", r.core}}},
        {"bookkeeping_defect", r.bookkeeping_defect},
        {"tangential_energy", r.tangential_energy},
        {"inner_tangential_energy", r.inner_tangential},
        {"sigma", r.sigma},
        {"sigma_core_radius", r.sigma_core_radius},
        {"error_constant", r.error_constant},
        {"harmonic", {{"bound", r.harmonic_bound}, {"residual", r.harmonic_residual}}},
        {"lifting", {{"error", r.lifting_error}, {"min_modulus", r.min_inner_modulus}}},
        {"annulus_pieces", to_json(r.annulus_pieces)},
        {"fills", {{"gate_ok", gate}, {"min_modulus", r.fill_min_modulus}, {"energy", r.fill_energy},
                   {"data_energy", r.fill_data_energy}}},
        {"bad_discs", r.bad_discs},
    };
}

}  // namespace glsharp
