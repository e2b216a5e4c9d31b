#include "experiments.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "glsharp/bad_discs.hpp"
#include "glsharp/certify.hpp"
#include "glsharp/construct.hpp"
#include "glsharp/energy.hpp"
#include "glsharp/profile.hpp"
#include "glsharp/relax.hpp"

namespace glsharp::detail {

void Recorder::write_text(const std::string& name, const std::string& body) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + (dir_ / name).string(), stage_);
    out << body;
    if (!out) throw Error(ErrorKind::io, "write failed for " + (dir_ / name).string(), stage_);
    note_file(name);
}

void Recorder::write_json(const std::string& name, const nlohmann::json& j) { write_text(name, canonical_dump(j)); }

void Recorder::stage(const std::string& name) {
    finish();
    stage_ = name;
    start_ = std::chrono::steady_clock::now();
    log("stage " + name);
}

void Recorder::finish() {
    if (stage_.empty()) return;
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    times_[stage_] += dt;
}

void Recorder::log(const std::string& msg) const {
    if (!quiet_) std::cerr << "[glsharp] " << msg << '\n';
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

template <class T>
std::vector<T> list(const nlohmann::json& p, const char* key) {
    return p.at(key).get<std::vector<T>>();
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i];
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - sx / n) * (x[i] - sx / n);
        sxy += (x[i] - sx / n) * (y[i] - sy / n);
    }
    return sxy / sxx;
}

VectorField dipole_on_sphere(const Profile& prof, double R, int n_phi, double separation, double core) {
    return sphere_dipole(prof, SphereGrid::make(R, n_phi), separation, core);
}

int auto_n_phi(double R, double density) { return static_cast<int>(std::ceil(2 * pi * R * density)); }

}  // namespace

// -- growth-rate -----------------------------------------------------------------------------

nlohmann::json run_growth_rate(const ExperimentConfig& cfg, Recorder& rec) {
    const auto& p = cfg.params;
    rec.stage("profile");
    const auto prof = solve_profile(p.at("profile_r_max").get<double>(), p.at("profile_tol").get<double>());
    std::ostringstream pcsv;
    write_profile_csv(pcsv, prof);
    rec.write_text("profile.csv", pcsv.str());

    rec.stage("slab");
    const auto radii = list<double>(p, "R_list");
    const auto g = growth_rate(prof, radii);
    std::string csv = "R,E,ratio,residual\n";
    for (std::size_t i = 0; i < g.R.size(); ++i) {
        csv += fmt(g.R[i]) + "," + fmt(g.E[i]) + "," + fmt(g.ratio[i]) + "," + fmt(g.residual[i]) + "\n";
    }
    rec.write_text("growth_rate.csv", csv);
    nlohmann::json out{{"a", g.a},
                       {"b", g.b},
                       {"a_over_2pi", g.a / (2 * pi)},
                       {"a_within_5pct", std::abs(g.a / (2 * pi) - 1) <= 0.05},
                       {"profile", {{"slope", prof.slope},
                                    {"residual", prof.residual},
                                    {"r_max", prof.r_max},
                                    {"f20", prof.value(20)},
                                    {"far_field_gap", std::abs(1 - prof.value(20) - 1.0 / 800)}}}};
    rec.write_json("growth_rate.json", out);
    return out;
}

// -- eta-sweep ----------------------------------------------------------------------------------

nlohmann::json run_eta_sweep(const ExperimentConfig& cfg, Recorder& rec) {
    const auto& p = cfg.params;
    const int n = p.at("n").get<int>();
    const std::string data = p.at("data").get<std::string>();
    std::function<cplx(const Vec3&)> g;
    if (data == "constant") {
        g = [](const Vec3&) { return cplx{1, 0}; };
    } else if (data == "degree-zero") {
        g = [](const Vec3& x) { return std::polar(1.0, 0.8 * x.x + 0.5 * x.y * x.y); };
    } else {
        g = [](const Vec3& x) { return std::polar(1.0, std::atan2(x.y, x.x)); };
    }
    rec.stage("lattice");
    auto ball = LatticeGrid::ball(1.0, 2.0 / n);
    SolveOptions so;
    so.seed = cfg.seed;
    so.max_iters = p.at("max_iters").get<int>();
    so.tol = p.at("tol").get<double>();
    so.inits = p.at("inits").get<int>();
    rec.stage("minimize");
    const auto eps = list<double>(p, "eps_list");
    const auto rows = eta_sweep(ball, g, eps, p.at("gamma").get<double>(), so);
    std::ostringstream csv;
    write_eta_csv(csv, rows);
    rec.write_text("eta.csv", csv.str());

    nlohmann::json arr = nlohmann::json::array();
    bool decreasing = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        arr.push_back({{"eps", r.eps}, {"energy", r.energy}, {"ratio", r.ratio}, {"center", r.center},
                       {"premise", r.premise}, {"converged", r.converged}, {"residual", r.residual},
                       {"error", r.error}});
        if (i > 0 && !(r.ratio < rows[i - 1].ratio)) decreasing = false;
    }
    nlohmann::json out{{"data", data}, {"h", 2.0 / n}, {"nodes", ball->size()}, {"rows", arr},
                       {"ratio_decreasing", decreasing}, {"center_at_smallest_eps", rows.back().center}};
    rec.write_json("eta.json", out);
    return out;
}

// -- prop13 -------------------------------------------------------------------------------------

nlohmann::json run_prop13(const ExperimentConfig& cfg, Recorder& rec) {
    const auto& p = cfg.params;
    rec.stage("profile");
    const auto prof = solve_profile();
    const auto radii = list<double>(p, "R_list");
    const double alpha = p.at("alpha").get<double>();
    const double gamma = p.at("gamma").get<double>();
    const double lambda = p.at("lambda").get<double>();
    CompetitorOptions co;
    co.alpha = alpha;
    co.h = p.at("h").get<double>();
    co.enforce_gate = p.at("enforce_gate").get<bool>();

    std::string csv = "R,H,tangential,premise,shell,annulus,core,total,sigma,error_constant\n";
    std::vector<double> xs, ys;
    nlohmann::json rows = nlohmann::json::array();
    CompetitorResult last;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        const double R = radii[k];
        rec.stage("competitor R=" + fmt(R));
        const auto u = dipole_on_sphere(prof, R, auto_n_phi(R, p.at("sphere_density").get<double>()),
                                        std::pow(R, p.at("separation_exponent").get<double>()), p.at("core").get<double>());
        auto res = competitor(u, gamma, lambda, co);
        const auto& r = res.report;
        const bool premise = r.tangential_energy <= 5 * std::log(R);
        auto j = to_json(r);
        j["premise_5lnR"] = premise;
        rec.write_json("competitor_" + std::to_string(k) + ".json", j);
        rows.push_back(j);
        csv += fmt(R) + "," + fmt(r.H) + "," + fmt(r.tangential_energy) + "," + (premise ? "1" : "0") + "," +
               fmt(r.shell) + "," + fmt(r.annulus) + "," + fmt(r.core) + "," + fmt(r.total) + "," + fmt(r.sigma) +
               "," + fmt(r.error_constant) + "\n";
        xs.push_back(std::log(R));
        ys.push_back(std::log((r.shell + r.annulus) / std::log(R)));
        if (k + 1 == radii.size()) last = std::move(res);
    }
    rec.write_text("prop13.csv", csv);

    nlohmann::json out{{"alpha", alpha}, {"R_list", radii}};
    if (xs.size() >= 2) {
        const double e = least_squares_slope(xs, ys);
        out["exponent"] = e;
        out["exponent_within_0.1"] = std::abs(e - alpha) <= 0.1;
    }
    const auto& lr = last.report;
    out["largest"] = {{"R", lr.R}, {"sigma", lr.sigma}, {"sigma_ok", lr.sigma <= 0.76},
                      {"premise_5lnR", lr.tangential_energy <= 5 * std::log(lr.R)}};
    if (p.at("minimize").get<bool>()) {
        rec.stage("minimize");
        SolveOptions so;
        so.init = InitKind::given;
        so.seed = cfg.seed;
        so.max_iters = p.at("max_iters").get<int>();
        const auto m = minimize_dirichlet(last.U, 1.0, so);
        out["minimizer"] = {{"energy", m.report.energy.total},
                            {"competitor_energy", lr.total},
                            {"converged", m.report.converged},
                            {"iterations", m.report.iterations},
                            {"residual", m.report.residual},
                            {"tol", m.report.tol},
                            {"below_competitor", m.report.energy.total <= lr.total}};
    }
    if (p.at("snapshot").get<bool>()) {
        rec.stage("snapshot");
        write_field_binary(rec.path("competitor.bin").string(), last.U);
        rec.note_file("competitor.bin");
    }
    rec.write_json("prop13.json", out);
    return out;
}

// -- ballgrowth ------------------------------------------------------------------------------------

nlohmann::json run_ballgrowth(const ExperimentConfig& cfg, Recorder& rec) {
    const auto& p = cfg.params;
    const double R = p.at("R").get<double>();
    int n_phi = p.at("n_phi").get<int>();
    if (n_phi == 0) n_phi = auto_n_phi(R, 1.0);
    double sep = p.at("separation").get<double>();
    if (sep <= 0) sep = std::sqrt(R);
    rec.stage("profile");
    const auto prof = solve_profile();
    rec.stage("pipeline");
    const auto u = dipole_on_sphere(prof, R, n_phi, sep, p.at("core").get<double>());
    const auto res = bad_disc_pipeline(u, p.at("gamma").get<double>(), p.at("lambda").get<double>());

    std::string csv = "t,total_radius,discs,functional\n";
    for (const auto& s : res.trace.samples) {
        csv += fmt(s.t) + "," + fmt(s.family.total_radius()) + "," + std::to_string(s.family.discs.size()) + "," +
               fmt(s.functional) + "\n";
    }
    rec.write_text("growth.csv", csv);

    // synthetic cascade on S_1: four discs that merge three times
    rec.stage("merge_cascade");
    auto eq = [](double arc) { return Vec3{std::cos(arc), std::sin(arc), 0}; };
    DiscFamily demo{1.0, {{eq(0), 0.01}, {eq(0.04), 0.01}, {eq(0.09), 0.01}, {eq(0.15), 0.012}}, {}};
    const double t = std::log(5.0);
    int merges = 0;
    const auto grown = grow(demo, t, {}, &merges);
    const double conservation = std::abs(grown.total_radius() - std::exp(t) * demo.total_radius()) / grown.total_radius();
    bool contained = true;
    DiscFamily prev = demo;
    for (int k = 1; k <= 20; ++k) {
        const auto cur = grow(demo, t * k / 20);
        for (const auto& d : prev.discs) {
            bool inside = false;
            for (const auto& e : cur.discs) {
                bool all = true;
                for (int q = 0; q < 64 && all; ++q) {
                    all = geodesic_distance(circle_point(d, 2 * pi * q / 64), e.center, 1.0) <= e.radius * (1 + 1e-9);
                }
                inside = inside || all;
            }
            contained = contained && inside;
        }
        prev = cur;
    }

    nlohmann::json out{{"R", R},
                       {"n_phi", n_phi},
                       {"separation", sep},
                       {"tangential_energy", res.tangential_energy},
                       {"premise", res.premise},
                       {"eps", res.eps},
                       {"delta", res.delta},
                       {"r0", res.r0},
                       {"r0_scaled", res.r0_scaled},
                       {"initial", to_json(res.initial)},
                       {"trace", to_json(res.trace)},
                       {"family", to_json(res.family)},
                       {"certificate", to_json(res.certificate)},
                       {"merge_cascade", {{"merges", merges},
                                          {"radius_sum_defect", conservation},
                                          {"monotone_containment", contained},
                                          {"final", to_json(grown)}}}};
    rec.write_json("ballgrowth.json", out);
    return out;
}

// -- certify ---------------------------------------------------------------------------------------

nlohmann::json run_certify(const ExperimentConfig& cfg, Recorder& rec) {
    const auto& p = cfg.params;
    const auto& c = p.at("constants");
    CertificateParams cp;
    cp.gamma = c.at("gamma").get<double>();
    cp.eps_margin = c.at("eps_margin").get<double>();
    cp.beta = c.at("beta").get<double>();
    cp.delta = c.at("delta").get<double>();
    cp.sigma = c.at("sigma").get<double>();
    cp.alpha = c.at("alpha").get<double>();
    cp.C = c.at("C").get<double>();
    cp.lambda = c.at("lambda").get<double>();
    cp.K = c.at("K").get<double>();
    cp.C_tilde = c.at("C_tilde").get<double>();

    rec.stage("chain");
    const auto chain = certificate_chain(cp, p.at("r0_measured").get<double>(), p.at("M_measured").get<double>());
    nlohmann::json out{{"chain", to_json(chain)}};

    const double R = p.at("trace_R").get<double>();
    if (R > 0) {
        rec.stage("minimize");
        const double h = p.at("trace_h").get<double>();
        const auto prof = solve_profile();
        auto ball = LatticeGrid::ball(R, h);
        const double sep = std::sqrt(R);
        const auto g = VectorField::from_function(ball, [&](const Vec3& x) {
            const double r = norm(x);
            return r > 0 ? sphere_dipole_value(prof, x * (R / r), R, sep) : cplx{1, 0};
        });
        SolveOptions so;
        so.seed = cfg.seed;
        const auto m = minimize_dirichlet(g, 1.0, so);
        rec.stage("trace");
        const int n = p.at("trace_samples").get<int>();
        const double lo = std::max(0.5 * std::pow(R, chain.params.beta), 3 * h);
        const double hi = R - 3 * h;
        std::vector<double> radii;
        for (int k = 0; k < n; ++k) radii.push_back(lo + (hi - lo) * k / (n - 1));
        TraceOptions to;
        to.eps = 1;
        const auto tr = shell_energy_trace(m.u, radii, to);
        std::string csv = "r,E,dE,eT\n";
        for (std::size_t k = 0; k < tr.r.size(); ++k) {
            csv += fmt(tr.r[k]) + "," + fmt(tr.E[k]) + "," + fmt(tr.dE[k]) + "," + fmt(tr.eT[k]) + "\n";
        }
        rec.write_text("shell_trace.csv", csv);
        nlohmann::json tj{{"R", R}, {"h", h}, {"energy", m.report.energy.total}, {"converged", m.report.converged}};
        try {
            tj["rho1"] = pick_rho1(tr, R, chain.params);
        } catch (const Error& e) {
            tj["rho1"] = nullptr;
            tj["rho1_error"] = {{"kind", to_string(e.kind())}, {"message", e.what()}};
        }
        const auto v = diff_ineq_check(tr, chain.params.sigma, chain.params.alpha, chain.params.C);
        tj["violations"] = to_json(v);
        out["trace"] = tj;
    }
    rec.write_json("certificate.json", out);
    return out;
}

// -- identities ----------------------------------------------------------------------------------------

nlohmann::json run_identities(const ExperimentConfig& cfg, Recorder& rec) {
    const auto& p = cfg.params;
    const auto ns = list<int>(p, "n_list");
    std::string csv = "h,function,lhs,rhs,pohozaev_defect\n";
    nlohmann::json out;

    rec.stage("equality");
    nlohmann::json eq = nlohmann::json::array();
    std::vector<double> defects;
    auto second = [](const Vec3& x) { return cplx{x.x * x.y + 0.5 * (x.x * x.x - x.z * x.z), 0}; };
    for (int n : ns) {
        auto ball = LatticeGrid::ball(1.0, 1.0 / n);
        const auto a = harmonic_identities(VectorField::from_function(ball, [](const Vec3& x) { return cplx{x.x, 0}; }));
        const auto b = harmonic_identities(VectorField::from_function(ball, second));
        eq.push_back({{"h", 1.0 / n}, {"lhs", a.lhs}, {"rhs", a.rhs}, {"relative_gap", std::abs(a.lhs - a.rhs) / a.rhs},
                      {"quadratic_pohozaev_defect", b.pohozaev_defect}});
        csv += fmt(1.0 / n) + ",x1," + fmt(a.lhs) + "," + fmt(a.rhs) + "," + fmt(a.pohozaev_defect) + "\n";
        csv += fmt(1.0 / n) + ",quadratic," + fmt(b.lhs) + "," + fmt(b.rhs) + "," + fmt(b.pohozaev_defect) + "\n";
        defects.push_back(b.pohozaev_defect);
    }
    out["x1"] = eq;
    nlohmann::json ratios = nlohmann::json::array();
    for (std::size_t k = 1; k < defects.size(); ++k) ratios.push_back(defects[k - 1] / defects[k]);
    out["pohozaev_halving_ratios"] = ratios;

    rec.stage("random");
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss;
    std::uniform_int_distribution<int> deg(1, p.at("max_degree").get<int>());
    auto ball = LatticeGrid::ball(1.0, 1.0 / p.at("random_n").get<int>());
    nlohmann::json polys = nlohmann::json::array();
    bool all_hold = true;
    for (int k = 0; k < p.at("random_polys").get<int>(); ++k) {
        // (c.x)^l with c = b + i a, a and b orthonormal, is harmonic
        const Vec3 a = normalized(Vec3{gauss(rng), gauss(rng), gauss(rng)});
        Vec3 b{gauss(rng), gauss(rng), gauss(rng)};
        b = normalized(b - a * dot(a, b));
        const int l = deg(rng);
        const bool imag = (rng() & 1) != 0;
        const auto w = VectorField::from_function(ball, [&](const Vec3& x) {
            const cplx v = std::pow(cplx{dot(b, x), dot(a, x)}, l);
            return cplx{imag ? v.imag() : v.real(), 0};
        });
        const auto r = harmonic_identities(w);
        const bool holds = r.lhs <= r.rhs * (1 + 1e-3);
        all_hold = all_hold && holds;
        polys.push_back({{"degree", l}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"holds", holds}});
        csv += fmt(1.0 / p.at("random_n").get<int>()) + ",random" + std::to_string(k) + "," + fmt(r.lhs) + "," +
               fmt(r.rhs) + "," + fmt(r.pohozaev_defect) + "\n";
    }
    out["random"] = polys;
    out["inequality_holds"] = all_hold;
    rec.write_text("identities.csv", csv);
    rec.write_json("identities.json", out);
    return out;
}

}  // namespace glsharp::detail
