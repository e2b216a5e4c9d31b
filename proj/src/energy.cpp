#include "glsharp/energy.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

namespace glsharp {

NodalEnergy nodal_energy(const VectorField& u, double eps, std::span<const double> potential_weight) {
    if (!(eps > 0)) throw Error(ErrorKind::invalid_argument, "eps must be positive");
    const Grid& g = u.grid();
    if (!potential_weight.empty() && potential_weight.size() != g.size())
        throw Error(ErrorKind::invalid_argument, "potential weight size does not match grid");
    NodalEnergy e;
    e.dirichlet.assign(g.size(), 0.0);
    e.potential.assign(g.size(), 0.0);
    const auto v = u.values();
    for (const Edge& ed : g.edges()) {
        const double q = 0.25 * ed.coef * std::norm(v[ed.a] - v[ed.b]);
        e.dirichlet[ed.a] += q;
        e.dirichlet[ed.b] += q;
    }
    const auto w = g.weights();
    const double k = 1.0 / (4 * eps * eps);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double d = 1 - std::norm(v[i]);
        const double p = potential_weight.empty() ? 1.0 : potential_weight[i];
        e.potential[i] = k * p * w[i] * d * d;
    }
    return e;
}

namespace {

double masked_sum(std::span<const double> values, std::span<const std::uint8_t> region) {
    if (region.empty()) return pairwise_sum(values);
    if (region.size() != values.size()) throw Error(ErrorKind::invalid_argument, "region size does not match grid");
    std::vector<double> t(values.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = region[i] ? values[i] : 0.0;
    return pairwise_sum(t);
}

}  // namespace

EnergyBreakdown gl_energy(const VectorField& u, double eps, std::span<const std::uint8_t> region, std::string region_name) {
    const NodalEnergy e = nodal_energy(u, eps);
    EnergyBreakdown b;
    b.dirichlet = masked_sum(e.dirichlet, region);
    b.potential = masked_sum(e.potential, region);
    b.total = b.dirichlet + b.potential;
    b.region = std::move(region_name);
    b.eps = eps;
    return b;
}

EnergyBreakdown tangential_energy(const VectorField& u, double eps, std::span<const std::uint8_t> region, std::string region_name) {
    if (u.grid().kind() != GridKind::sphere) throw Error(ErrorKind::invalid_argument, "tangential_energy expects a sphere grid");
    return gl_energy(u, eps, region, std::move(region_name));
}

double weighted_energy(const VectorField& u, double eps, std::span<const double> p) {
    if (p.size() != u.size()) throw Error(ErrorKind::invalid_argument, "weight size does not match grid");
    for (double x : p) {
        if (!(x > 0)) throw Error(ErrorKind::invalid_argument, "weight must be positive");
    }
    const NodalEnergy e = nodal_energy(u, eps, p);
    return pairwise_sum(e.dirichlet) + pairwise_sum(e.potential);
}

std::vector<cplx> gl_residual(const VectorField& u, double eps, std::span<const double> potential_weight,
                              std::span<const std::uint8_t> fixed) {
    if (!(eps > 0)) throw Error(ErrorKind::invalid_argument, "eps must be positive");
    const Grid& g = u.grid();
    if (fixed.empty()) fixed = g.boundary();
    const auto v = u.values();
    std::vector<cplx> lap(g.size(), cplx{0, 0});
    for (const Edge& ed : g.edges()) {
        const cplx d = ed.coef * (v[ed.b] - v[ed.a]);
        lap[ed.a] += d;
        lap[ed.b] -= d;
    }
    const auto w = g.weights();
    const double k = 1.0 / (eps * eps);
    std::vector<cplx> r(g.size(), cplx{0, 0});
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (fixed[i]) continue;
        const double p = potential_weight.empty() ? 1.0 : potential_weight[i];
        r[i] = lap[i] / w[i] + k * p * (1 - std::norm(v[i])) * v[i];
    }
    return r;
}

double max_abs(std::span<const cplx> values) {
    double m = 0;
    for (const cplx& c : values) m = std::max(m, std::abs(c));
    return m;
}

double loop_energy(std::span<const cplx> loop, double length, double eps) {
    if (loop.size() < 3) throw Error(ErrorKind::invalid_argument, "loop needs at least 2 segments");
    const std::size_t n = loop.size() - 1;
    const double ds = length / static_cast<double>(n);
    std::vector<double> terms(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double d = 1 - std::norm(loop[k]);
        terms[k] = 0.5 * std::norm(loop[k + 1] - loop[k]) / ds + ds * d * d / (4 * eps * eps);
    }
    return pairwise_sum(terms);
}

double ball_energy(const VectorField& u, const NodalEnergy& nodal, double r, double ramp_width) {
    const auto pos = u.grid().positions();
    const double width = ramp_width * u.grid().spacing();
    std::vector<double> t(u.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double chi = std::clamp((r - norm(pos[i])) / width + 0.5, 0.0, 1.0);
        t[i] = chi * (nodal.dirichlet[i] + nodal.potential[i]);
    }
    return pairwise_sum(t);
}

ShellEnergyTrace shell_energy_trace(const VectorField& u, std::span<const double> radii, const TraceOptions& opts) {
    if (radii.size() < 2) throw Error(ErrorKind::invalid_argument, "trace needs at least two radii");
    for (std::size_t k = 1; k < radii.size(); ++k) {
        if (!(radii[k] > radii[k - 1])) throw Error(ErrorKind::invalid_argument, "trace radii must be strictly increasing");
    }
    const NodalEnergy nodal = nodal_energy(u, opts.eps);
    ShellEnergyTrace t;
    t.r.assign(radii.begin(), radii.end());
    for (double r : radii) t.E.push_back(ball_energy(u, nodal, r, opts.ramp_width));
    const std::size_t n = radii.size();
    t.dE.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t a = k == 0 ? 0 : k - 1;
        const std::size_t b = k + 1 == n ? n - 1 : k + 1;
        t.dE[k] = (t.E[b] - t.E[a]) / (t.r[b] - t.r[a]);
    }
    for (double r : radii) {
        const VectorField s = restrict_to_sphere(u, r, opts.sphere_n_phi);
        t.eT.push_back(tangential_energy(s, opts.eps).total);
    }
    return t;
}

std::vector<std::size_t> monotonicity_check(const ShellEnergyTrace& trace, int dimension, double slack) {
    std::vector<std::size_t> out;
    const double p = dimension - 2;
    for (std::size_t k = 0; k + 1 < trace.r.size(); ++k) {
        const double q0 = trace.E[k] / std::pow(trace.r[k], p);
        const double q1 = trace.E[k + 1] / std::pow(trace.r[k + 1], p);
        if (q1 < q0 - slack * std::abs(q0)) out.push_back(k);
    }
    return out;
}

std::vector<std::size_t> tangential_bound_violations(const ShellEnergyTrace& trace, double slack) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < trace.r.size(); ++k) {
        if (trace.eT[k] > trace.dE[k] * (1 + slack) + 1e-12) out.push_back(k);
    }
    return out;
}

namespace {

double real_laplace_residual(const LatticeGrid& lat, std::span<const cplx> v, bool mehrstellen) {
    const double h = lat.spacing();
    double worst = 0;
    for (std::size_t n = 0; n < v.size(); ++n) {
        const auto [i, j, k] = lat.site_of(n);
        double faces = 0, edges = 0;
        bool complete = true;
        for (int di = -1; di <= 1 && complete; ++di) {
            for (int dj = -1; dj <= 1 && complete; ++dj) {
                for (int dk = -1; dk <= 1; ++dk) {
                    const int m = std::abs(di) + std::abs(dj) + std::abs(dk);
                    if (m == 0 || m == 3) continue;
                    if (!mehrstellen && m == 2) continue;
                    const int nb = lat.node_at(i + di, j + dj, k + dk);
                    if (nb < 0) {
                        complete = false;
                        break;
                    }
                    (m == 1 ? faces : edges) += v[nb].real();
                }
            }
        }
        if (!complete) continue;
        const double c = v[n].real();
        const double lap = mehrstellen ? (2 * faces + edges - 24 * c) / (6 * h * h) : (faces - 6 * c) / (h * h);
        worst = std::max(worst, std::abs(lap));
    }
    return worst;
}

}  // namespace

HarmonicIdentityReport harmonic_identities(const VectorField& w, const HarmonicOptions& opts) {
    const auto* lat = dynamic_cast<const LatticeGrid*>(&w.grid());
    if (!lat || lat->kind() != GridKind::ball) throw Error(ErrorKind::invalid_argument, "harmonic_identities expects a ball lattice");
    const double h = lat->spacing();
    HarmonicIdentityReport rep;
    rep.laplace_residual = std::min(real_laplace_residual(*lat, w.values(), false),
                                    real_laplace_residual(*lat, w.values(), true));
    if (rep.laplace_residual > opts.residual_tol)
        throw Error(ErrorKind::invalid_argument, "w is not harmonic to tolerance");

    const auto grad = gradient(w);
    std::array<std::vector<cplx>, 3> comp;
    for (int a = 0; a < 3; ++a) {
        comp[a].resize(grad.size());
        for (std::size_t n = 0; n < grad.size(); ++n) comp[a][n] = grad[n][a].real();
    }
    auto grad_at = [&](const Vec3& p) {
        Vec3 g;
        double* out[3] = {&g.x, &g.y, &g.z};
        for (int a = 0; a < 3; ++a) {
            const auto v = lat->interpolate(comp[a], p);
            if (!v) throw Error(ErrorKind::out_of_range, "harmonic quadrature point outside the lattice");
            *out[a] = v->real();
        }
        return g;
    };

    const double r_eval = lat->radius() - opts.inset * h;
    if (!(r_eval > 2 * h)) throw Error(ErrorKind::out_of_range, "ball too small for the harmonic identities");
    rep.radius = r_eval;
    const int n_phi = std::max(16, static_cast<int>(std::ceil(pi * r_eval / h)));
    const auto dirs = SphereGrid::make(1.0, n_phi);
    const auto dir_pos = dirs->positions();
    const auto dir_w = dirs->weights();

    auto shell_integrals = [&](double r, double& tangential, double& normal) {
        std::vector<double> t(dir_pos.size()), nn(dir_pos.size());
        for (std::size_t i = 0; i < dir_pos.size(); ++i) {
            const Vec3 g = grad_at(dir_pos[i] * r);
            const double dn = dot(g, dir_pos[i]);
            nn[i] = dir_w[i] * dn * dn;
            t[i] = dir_w[i] * (dot(g, g) - dn * dn);
        }
        tangential = pairwise_sum(t) * r * r;
        normal = pairwise_sum(nn) * r * r;
    };

    using Gauss = boost::math::quadrature::gauss<double, 4>;
    const auto& xs = Gauss::abscissa();
    const auto& ws = Gauss::weights();
    const int panels = std::max(4, static_cast<int>(std::ceil(r_eval / h)));
    const double width = r_eval / panels;
    std::vector<double> vol;
    for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) * width;
        for (std::size_t q = 0; q < xs.size(); ++q) {
            for (int sgn : {-1, 1}) {
                if (xs[q] == 0 && sgn < 0) continue;
                const double r = mid + sgn * xs[q] * 0.5 * width;
                double t = 0, nn = 0;
                shell_integrals(r, t, nn);
                vol.push_back(0.5 * width * ws[q] * (t + nn));
            }
        }
    }
    rep.lhs = pairwise_sum(vol);
    shell_integrals(r_eval, rep.tangential, rep.normal);
    const int N = 3;
    rep.rhs = r_eval / (N - 1) * rep.tangential;
    rep.pohozaev_defect = std::abs((N - 2) * rep.lhs - r_eval * (rep.tangential - rep.normal));
    return rep;
}

}  // namespace glsharp
