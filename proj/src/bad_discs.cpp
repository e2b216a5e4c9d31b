#include "glsharp/bad_discs.hpp"

#include <cmath>
#include <limits>
#include <queue>

#include "glsharp/energy.hpp"
#include "glsharp/topology.hpp"

namespace glsharp {

namespace {

// Point at fraction f of the geodesic from a to b on S_R.
Vec3 slerp(const Vec3& a, const Vec3& b, double f, double R) {
    const Vec3 ua = normalized(a), ub = normalized(b);
    const double w = angle_between(ua, ub);
    if (w < 1e-15) return ua * R;
    const double sw = std::sin(w);
    return normalized(ua * (std::sin((1 - f) * w) / sw) + ub * (std::sin(f * w) / sw)) * R;
}

void check_regime(const DiscFamily& f, const GrowthOptions& opts) {
    if (f.total_radius() > opts.regime_fraction * pi * f.sphere_radius) {
        throw Error(ErrorKind::growth_regime, "radius sum " + std::to_string(f.total_radius()) +
                                                  " left the small-disc regime");
    }
}

nlohmann::json optional_int(const std::optional<int>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

double DiscFamily::total_radius() const {
    double s = 0;
    for (const auto& d : discs) s += d.radius;
    return s;
}

bool DiscFamily::disjoint() const {
    for (std::size_t i = 0; i < discs.size(); ++i) {
        for (std::size_t j = i + 1; j < discs.size(); ++j) {
            if (!(geodesic_distance(discs[i].center, discs[j].center, sphere_radius) > discs[i].radius + discs[j].radius))
                return false;
        }
    }
    return true;
}

DiscFamily DiscFamily::scaled(double radius) const {
    DiscFamily out = *this;
    const double k = radius / sphere_radius;
    out.sphere_radius = radius;
    for (auto& d : out.discs) {
        d.center = d.center * k;
        d.radius *= k;
    }
    return out;
}

SphericalDisc merge_discs(const SphericalDisc& a, const SphericalDisc& b, double sphere_radius) {
    const double r = a.radius + b.radius;
    return {slerp(a.center, b.center, b.radius / r, sphere_radius), r};
}

DiscFamily disjoint_family(DiscFamily family) {
    bool merged = true;
    while (merged) {
        merged = false;
        for (std::size_t i = 0; i < family.discs.size() && !merged; ++i) {
            for (std::size_t j = i + 1; j < family.discs.size(); ++j) {
                const auto& a = family.discs[i];
                const auto& b = family.discs[j];
                if (geodesic_distance(a.center, b.center, family.sphere_radius) <= a.radius + b.radius) {
                    family.discs[i] = merge_discs(a, b, family.sphere_radius);
                    family.discs.erase(family.discs.begin() + static_cast<long>(j));
                    merged = true;
                    break;
                }
            }
        }
    }
    family.degrees.assign(family.discs.size(), std::nullopt);
    return family;
}

DiscFamily initial_cover(const VectorField& v, double eps, double delta, double lambda) {
    const auto* sg = dynamic_cast<const SphereGrid*>(&v.grid());
    if (!sg) throw Error(ErrorKind::invalid_argument, "initial_cover needs a sphere field");
    if (!(delta > 0 && delta < 0.125)) throw Error(ErrorKind::invalid_argument, "delta must lie in (0, 1/8)");
    if (!(eps > 0)) throw Error(ErrorKind::invalid_argument, "eps must be positive");
    const double R = sg->radius();
    const double h = sg->spacing();
    if (lambda * eps * R < 4 * h) {
        throw Error(ErrorKind::invalid_argument, "lambda eps is below four grid spacings; refine the sphere grid");
    }
    const int np = sg->n_phi(), nt = sg->n_theta();
    const auto vals = v.values();
    std::vector<std::uint8_t> bad(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) bad[i] = std::abs(vals[i]) <= 1 - delta;
    for (int k = 0; k < nt; ++k) {
        if (bad[sg->node(0, k)] || bad[sg->node(np - 1, k)]) {
            throw Error(ErrorKind::pole_contact, "bad set reaches a polar ring; rotate the data first");
        }
    }

    DiscFamily family;
    family.sphere_radius = R;
    const auto pos = sg->positions();
    std::vector<std::uint8_t> seen(vals.size());
    for (int j = 0; j < np; ++j) {
        for (int k = 0; k < nt; ++k) {
            const auto start = sg->node(j, k);
            if (!bad[start] || seen[start]) continue;
            std::vector<std::size_t> comp;
            std::queue<std::pair<int, int>> q;
            q.push({j, k});
            seen[start] = 1;
            while (!q.empty()) {
                const auto [cj, ck] = q.front();
                q.pop();
                comp.push_back(sg->node(cj, ck));
                const std::pair<int, int> nb[4] = {{cj - 1, ck}, {cj + 1, ck}, {cj, (ck + 1) % nt}, {cj, (ck + nt - 1) % nt}};
                for (const auto& [nj, nk] : nb) {
                    if (nj < 0 || nj >= np) continue;
                    const auto n = sg->node(nj, nk);
                    if (bad[n] && !seen[n]) {
                        seen[n] = 1;
                        q.push({nj, nk});
                    }
                }
            }
            Vec3 mean;
            for (auto n : comp) mean += pos[n];
            const Vec3 c = norm(mean) > 0 ? normalized(mean) * R : pos[comp.front()];
            double r = 0;
            for (auto n : comp) r = std::max(r, geodesic_distance(c, pos[n], R));
            family.discs.push_back({c, std::max(r + h, lambda * eps * R)});
        }
    }
    family = disjoint_family(std::move(family));
    if (family.total_radius() > pi * R / 2) {
        throw Error(ErrorKind::too_energetic, "bad set needs a radius sum of " + std::to_string(family.total_radius()));
    }
    return family;
}

DiscFamily grow(const DiscFamily& family, double t, const GrowthOptions& opts, int* merges) {
    if (!(t >= 0)) throw Error(ErrorKind::invalid_argument, "growth time must be nonnegative");
    DiscFamily f = family;
    if (!f.disjoint()) throw Error(ErrorKind::invalid_argument, "growth needs a disjoint family");
    const double R = f.sphere_radius;
    double now = 0;
    while (true) {
        double next = std::numeric_limits<double>::infinity();
        std::size_t a = 0, b = 0;
        for (std::size_t i = 0; i < f.discs.size(); ++i) {
            for (std::size_t j = i + 1; j < f.discs.size(); ++j) {
                const double d = geodesic_distance(f.discs[i].center, f.discs[j].center, R);
                const double dt = std::log(d / (f.discs[i].radius + f.discs[j].radius));
                if (dt < next) {
                    next = dt;
                    a = i;
                    b = j;
                }
            }
        }
        if (now + next > t + 1e-12) {
            const double k = std::exp(std::max(t - now, 0.0));
            for (auto& d : f.discs) d.radius *= k;
            break;
        }
        const double k = std::exp(next);
        for (auto& d : f.discs) d.radius *= k;
        now += next;
        f.discs[a] = merge_discs(f.discs[a], f.discs[b], R);
        f.discs.erase(f.discs.begin() + static_cast<long>(b));
        if (merges) ++*merges;
        // a merged disc may already overlap its neighbours
        const auto before = f.discs.size();
        f = disjoint_family(std::move(f));
        if (merges) *merges += static_cast<int>(before - f.discs.size());
        check_regime(f, opts);
    }
    check_regime(f, opts);
    f.degrees.assign(f.discs.size(), std::nullopt);
    return f;
}

GrowthTrace select_time(const VectorField& v, const DiscFamily& family, double eps, double gamma,
                        const SelectOptions& opts) {
    if (!(gamma > 0 && gamma < 2 * pi)) throw Error(ErrorKind::invalid_argument, "gamma must lie in (0, 2 pi)");
    if (!(eps > 0 && eps < 1)) throw Error(ErrorKind::invalid_argument, "eps must lie in (0, 1)");
    const auto* sg = dynamic_cast<const SphereGrid*>(&v.grid());
    if (!sg) throw Error(ErrorKind::invalid_argument, "select_time needs a sphere field");
    GrowthTrace tr;
    tr.s = (2 * pi + gamma) / (4 * pi) * std::abs(std::log(eps));
    tr.bound = 2 * pi * 2 * gamma / (gamma + 2 * pi);
    if (family.discs.empty()) {
        GrowthSample s;
        s.family = family;
        tr.samples.push_back(s);
        tr.selected = 0;
        return tr;
    }
    const double R = family.sphere_radius;
    double best = std::numeric_limits<double>::infinity(), best_t = 0;
    for (int j = 0; j < opts.samples; ++j) {
        const double t = tr.s * std::pow(10.0, -3.0 + 3.0 * j / (opts.samples - 1));
        GrowthSample s;
        s.t = t;
        try {
            s.family = grow(family, t);
            for (const auto& d : s.family.discs) {
                const auto loop = circle_trace(v, d);
                s.circle_energy.push_back(loop_energy(loop, 2 * pi * d.euclidean_radius(), eps));
                s.functional += d.radius / R * s.circle_energy.back();
                try {
                    s.degree.push_back(winding_number(Loop{loop}));
                } catch (const Error&) {
                    s.degree.push_back(std::nullopt);
                }
            }
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::growth_regime && e.kind() != ErrorKind::out_of_range) throw;
            tr.stopped_at = t;
            break;
        }
        if (s.functional < best) {
            best = s.functional;
            best_t = t;
        }
        if (!tr.selected && s.functional <= tr.bound * (1 + opts.slack)) tr.selected = tr.samples.size();
        tr.samples.push_back(std::move(s));
    }
    if (!tr.selected) {
        throw Error(ErrorKind::no_qualifying_time, "no sampled time meets the bound " + std::to_string(tr.bound) +
                                                       "; best functional " + std::to_string(best) + " at t = " +
                                                       std::to_string(best_t));
    }
    return tr;
}

Certificate certify(const VectorField& u, DiscFamily& family, double gamma, double lambda, double alpha, double delta) {
    const auto* sg = dynamic_cast<const SphereGrid*>(&u.grid());
    if (!sg) throw Error(ErrorKind::invalid_argument, "certify needs a sphere field");
    const double R = sg->radius();
    Certificate c;
    c.alpha = alpha;
    c.alpha_tilde = 1 - alpha;
    c.alpha_admissible = c.alpha_tilde > 0 && c.alpha_tilde < (2 * pi - gamma) / (4 * pi);

    const auto pos = sg->positions();
    double outside = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < u.size(); ++i) {
        bool covered = false;
        for (const auto& d : family.discs) covered = covered || d.contains(pos[i]);
        if (!covered) outside = std::min(outside, std::abs(u[i]));
    }
    c.p1.margin = std::isfinite(outside) ? outside - 7.0 / 8 : 1.0 / 8;
    c.p1.pass = c.p1.margin > 0;

    const double rsum = family.total_radius();
    c.p2.margin = std::pow(R, alpha) - rsum;
    c.p2.pass = c.p2.margin >= 0;

    c.p3.pass = c.p4.pass = c.p5.pass = true;
    c.p3.margin = c.p5.margin = std::numeric_limits<double>::infinity();
    c.p4.margin = 0;
    family.degrees.clear();
    for (const auto& d : family.discs) {
        const auto loop = circle_trace(u, d);
        const double e = loop_energy(loop, 2 * pi * d.euclidean_radius(), 1.0);
        c.circle_energy.push_back(e);
        c.p3.margin = std::min(c.p3.margin, 2 * pi / d.radius - e);
        std::optional<int> deg;
        try {
            deg = degree_on_sphere(u, d);
        } catch (const Error&) {
        }
        c.degree.push_back(deg);
        family.degrees.push_back(deg);
        if (!deg || *deg != 0) c.p4.pass = false;
        if (deg) c.p4.margin = std::max(c.p4.margin, static_cast<double>(std::abs(*deg)));
        c.p5.margin = std::min(c.p5.margin, d.radius - lambda);
        const double bound = e * d.euclidean_radius() / (pi * (1 - delta) * (1 - delta));
        c.degree_sq_bound.push_back(bound);
        c.degree_sq_sum += bound;
    }
    if (family.discs.empty()) c.p3.margin = c.p5.margin = 0;
    c.p3.pass = c.p3.margin >= 0;
    c.p5.pass = c.p5.margin >= 0;
    return c;
}

double delta_limit(double gamma) { return 1 - std::sqrt(2 * gamma / (gamma + 2 * pi)); }

double default_delta(double gamma) { return std::min(0.125, delta_limit(gamma)) / 2; }

double default_alpha(double gamma) { return 1 - (2 * pi - gamma) / (8 * pi); }

PipelineResult bad_disc_pipeline(const VectorField& u, double gamma, double lambda, const PipelineOptions& opts) {
    const auto* sg = dynamic_cast<const SphereGrid*>(&u.grid());
    if (!sg) throw Error(ErrorKind::invalid_argument, "pipeline needs a sphere field");
    if (!(gamma > 0 && gamma < 2 * pi)) throw Error(ErrorKind::invalid_argument, "gamma must lie in (0, 2 pi)");
    const double R = sg->radius();
    if (!(R > 1)) throw Error(ErrorKind::invalid_argument, "sphere radius must exceed 1");
    PipelineResult out;
    out.delta = opts.delta > 0 ? opts.delta : default_delta(gamma);
    const double alpha = opts.alpha > 0 ? opts.alpha : default_alpha(gamma);
    try {
        out.tangential_energy = tangential_energy(u, 1.0).total;
        out.premise = out.tangential_energy <= gamma * std::log(R);
        out.eps = 1 / R;

        const VectorField v(sg->rescaled(1.0), std::vector<cplx>(u.values().begin(), u.values().end()));
        out.initial = initial_cover(v, out.eps, out.delta, lambda);
        out.r0 = out.initial.total_radius();
        out.r0_scaled = out.r0 / (out.eps * std::abs(std::log(out.eps)) / std::pow(out.delta, 3));
        out.trace = select_time(v, out.initial, out.eps, gamma, opts.select);
        out.family = out.trace.samples[*out.trace.selected].family.scaled(R);
        out.certificate = certify(u, out.family, gamma, lambda, alpha, out.delta);
    } catch (const Error& e) {
        throw e.with_stage("bad_discs");
    }
    return out;
}

nlohmann::json to_json(const DiscFamily& f) {
    nlohmann::json j;
    j["sphere_radius"] = f.sphere_radius;
    j["total_radius"] = f.total_radius();
    j["disjoint"] = f.disjoint();
    j["discs"] = nlohmann::json::array();
    for (std::size_t i = 0; i < f.discs.size(); ++i) {
        const auto& d = f.discs[i];
        nlohmann::json e;
        e["center"] = {d.center.x, d.center.y, d.center.z};
        e["radius"] = d.radius;
        e["degree"] = i < f.degrees.size() ? optional_int(f.degrees[i]) : nlohmann::json(nullptr);
        j["discs"].push_back(e);
    }
    return j;
}

nlohmann::json to_json(const GrowthTrace& t) {
    nlohmann::json j;
    j["s"] = t.s;
    j["bound"] = t.bound;
    j["selected"] = t.selected ? nlohmann::json(*t.selected) : nlohmann::json(nullptr);
    j["stopped_at"] = t.stopped_at ? nlohmann::json(*t.stopped_at) : nlohmann::json(nullptr);
    j["samples"] = nlohmann::json::array();
    for (const auto& s : t.samples) {
        nlohmann::json e;
        e["t"] = s.t;
        e["functional"] = s.functional;
        e["total_radius"] = s.family.total_radius();
        e["discs"] = nlohmann::json::array();
        for (std::size_t i = 0; i < s.family.discs.size(); ++i) {
            const auto& d = s.family.discs[i];
            nlohmann::json dj;
            dj["center"] = {d.center.x, d.center.y, d.center.z};
            dj["radius"] = d.radius;
            dj["circle_energy"] = i < s.circle_energy.size() ? nlohmann::json(s.circle_energy[i]) : nlohmann::json(nullptr);
            dj["degree"] = i < s.degree.size() ? optional_int(s.degree[i]) : nlohmann::json(nullptr);
            e["discs"].push_back(dj);
        }
        j["samples"].push_back(e);
    }
    return j;
}

nlohmann::json to_json(const Certificate& c) {
    auto cond = [](const ConditionCheck& k) { return nlohmann::json{{"pass", k.pass}, {"margin", k.margin}}; };
    nlohmann::json j;
    j["p1"] = cond(c.p1);
    j["p2"] = cond(c.p2);
    j["p3"] = cond(c.p3);
    j["p4"] = cond(c.p4);
    j["p5"] = cond(c.p5);
    j["alpha"] = c.alpha;
    j["alpha_tilde"] = c.alpha_tilde;
    j["alpha_admissible"] = c.alpha_admissible;
    j["circle_energy"] = c.circle_energy;
    j["degree"] = nlohmann::json::array();
    for (const auto& d : c.degree) j["degree"].push_back(optional_int(d));
    j["degree_sq_bound"] = c.degree_sq_bound;
    j["degree_sq_sum"] = c.degree_sq_sum;
    j["all_pass"] = c.all_pass();
    return j;
}

}  // namespace glsharp
