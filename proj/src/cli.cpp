#include "glsharp/cli.hpp"

#include <boost/version.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "experiments.hpp"
#include "glsharp/certify.hpp"
#include "glsharp/error.hpp"

namespace glsharp {

namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

struct ExperimentSpec {
    std::string summary;
    json defaults;
    json (*run)(const ExperimentConfig&, detail::Recorder&);
};

const std::map<std::string, ExperimentSpec>& registry() {
    static const std::map<std::string, ExperimentSpec> reg = {
        {"growth-rate",
         {"slab energies E(R) from the radial profile, fit E = a R ln R + b R",
          {{"R_list", {25.0, 50.0, 100.0, 200.0}}, {"profile_r_max", 30.0}, {"profile_tol", 1e-10}},
          detail::run_growth_rate}},
        {"eta-sweep",
         {"GL minimizers on B_1 for a decreasing list of eps",
          {{"eps_list", {0.2, 0.1, 0.05}},
           {"n", 96},
           {"data", "degree-zero"},
           {"gamma", 1.0},
           {"max_iters", 20000},
           {"tol", 0.0},
           {"inits", 1}},
          detail::run_eta_sweep}},
        {"prop13",
         {"competitor construction for dipole boundary data on S_R",
          {{"R_list", {30.0, 40.0, 55.0, 75.0}},
           {"alpha", 0.75},
           {"gamma", 5.0},
           {"lambda", 4.0},
           {"h", 1.0},
           {"separation_exponent", 0.5},
           {"core", 1.0},
           {"sphere_density", 1.0},
           {"enforce_gate", false},
           {"minimize", true},
           {"max_iters", 20000},
           {"snapshot", false}},
          detail::run_prop13}},
        {"ballgrowth",
         {"bad-disc cover, ball growth and certification on dipole data, plus a merge cascade",
          {{"R", std::exp(4.0)},
           {"gamma", 5.0},
           {"lambda", 4.0},
           {"n_phi", 0},
           {"separation", 0.0},
           {"core", 1.0}},
          detail::run_ballgrowth}},
        {"certify",
         {"certificate constants r1, R1, T and a measured shell-energy trace",
          {{"constants",
            {{"gamma", 5.0},
             {"eps_margin", -1.0},
             {"beta", 0.5},
             {"delta", -1.0},
             {"sigma", 0.66},
             {"alpha", 0.85},
             {"C", 10.0},
             {"lambda", 0.5},
             {"K", 1.0},
             {"C_tilde", 10.0}}},
           {"r0_measured", 30.0},
           {"M_measured", 40.0},
           {"trace_R", 50.0},
           {"trace_h", 1.0},
           {"trace_samples", 40}},
          detail::run_certify}},
        {"identities",
         {"discrete harmonic identities and the Pohozaev defect under refinement",
          {{"n_list", {16, 32, 64}}, {"random_polys", 10}, {"max_degree", 4}, {"random_n", 32}},
          detail::run_identities}},
    };
    return reg;
}

std::string pointer(const std::string& base, const std::string& key) { return base + "/" + key; }

std::string type_name(const json& j) {
    if (j.is_boolean()) return "boolean";
    if (j.is_number_integer()) return "integer";
    if (j.is_number()) return "number";
    if (j.is_string()) return "string";
    if (j.is_array()) return "array";
    if (j.is_object()) return "object";
    return "null";
}

bool same_kind(const json& ref, const json& v) {
    if (ref.is_boolean()) return v.is_boolean();
    if (ref.is_number_integer()) return v.is_number_integer();
    if (ref.is_number()) return v.is_number();
    if (ref.is_string()) return v.is_string();
    if (ref.is_array()) return v.is_array();
    if (ref.is_object()) return v.is_object();
    return false;
}

// Overlays `given` on `defaults`, rejecting unknown keys and type mismatches.
void merge_checked(json& target, const json& given, const std::string& path, std::vector<ConfigIssue>& issues) {
    if (!given.is_object()) {
        issues.push_back({path, "expected an object"});
        return;
    }
    for (const auto& [key, value] : given.items()) {
        const auto p = pointer(path, key);
        if (!target.contains(key)) {
            issues.push_back({p, "unknown key"});
            continue;
        }
        auto& ref = target[key];
        if (ref.is_object()) {
            merge_checked(ref, value, p, issues);
            continue;
        }
        if (!same_kind(ref, value)) {
            issues.push_back({p, "expected " + type_name(ref) + ", got " + type_name(value)});
            continue;
        }
        if (ref.is_array() && !ref.empty()) {
            bool ok = true;
            for (const auto& e : value) ok = ok && same_kind(ref.front(), e);
            if (!ok) {
                issues.push_back({p, "array elements must be " + type_name(ref.front())});
                continue;
            }
        }
        ref = value;
    }
}

void require(bool ok, const std::string& path, const std::string& msg, std::vector<ConfigIssue>& issues) {
    if (!ok) issues.push_back({path, msg});
}

void check_positive_list(const json& p, const char* key, std::vector<ConfigIssue>& issues) {
    const auto path = pointer("/params", key);
    require(!p.at(key).empty(), path, "must not be empty", issues);
    for (const auto& v : p.at(key)) require(v.get<double>() > 0, path, "entries must be positive", issues);
}

// Initial bad discs have radius ~ lambda eps on S_1 with eps = 1/R; they need at least 4 sphere cells.
void check_resolvable(double lambda, double R, int n_phi, const std::string& path, std::vector<ConfigIssue>& issues) {
    const double h = 2 * pi / n_phi;
    require(lambda / R >= 4 * h * (1 - 1e-12), path,
            "lambda eps < 4 h: initial bad discs are not resolvable on the sphere grid", issues);
}

void cross_checks(const std::string& name, const json& p, std::vector<ConfigIssue>& issues) {
    if (name == "growth-rate") {
        check_positive_list(p, "R_list", issues);
        for (const auto& v : p.at("R_list")) require(v.get<double>() > 1, "/params/R_list", "radii must exceed 1", issues);
        require(p.at("R_list").size() >= 2, "/params/R_list", "a fit needs at least two radii", issues);
        require(p.at("profile_r_max").get<double>() >= 20, "/params/profile_r_max", "must be at least 20", issues);
        require(p.at("profile_tol").get<double>() > 0, "/params/profile_tol", "must be positive", issues);
    } else if (name == "eta-sweep") {
        check_positive_list(p, "eps_list", issues);
        const auto eps = p.at("eps_list").get<std::vector<double>>();
        for (std::size_t k = 1; k < eps.size(); ++k) {
            require(eps[k] < eps[k - 1], "/params/eps_list", "must be strictly decreasing", issues);
        }
        for (double e : eps) require(e < 1, "/params/eps_list", "entries must be below 1", issues);
        require(p.at("n").get<int>() >= 8, "/params/n", "must be at least 8", issues);
        const auto data = p.at("data").get<std::string>();
        require(data == "degree-zero" || data == "constant" || data == "vortex-line", "/params/data",
                "must be one of degree-zero, constant, vortex-line", issues);
        require(p.at("gamma").get<double>() > 0, "/params/gamma", "must be positive", issues);
        require(p.at("max_iters").get<int>() > 0, "/params/max_iters", "must be positive", issues);
        require(p.at("inits").get<int>() >= 1, "/params/inits", "must be at least 1", issues);
    } else if (name == "prop13") {
        check_positive_list(p, "R_list", issues);
        const double alpha = p.at("alpha").get<double>();
        const double h = p.at("h").get<double>();
        require(alpha > 0 && alpha < 1, "/params/alpha", "must lie in (0, 1)", issues);
        require(h > 0, "/params/h", "must be positive", issues);
        require(p.at("gamma").get<double>() > 0 && p.at("gamma").get<double>() < 2 * pi, "/params/gamma",
                "must lie in (0, 2 pi)", issues);
        require(p.at("sphere_density").get<double>() > 0, "/params/sphere_density", "must be positive", issues);
        require(p.at("max_iters").get<int>() > 0, "/params/max_iters", "must be positive", issues);
        for (const auto& v : p.at("R_list")) {
            const double R = v.get<double>();
            if (!(R > 1)) continue;
            require(R - 2 * std::pow(R, alpha) > 2 * h, "/params/R_list",
                    "R - 2 R^alpha must exceed 2 h (core would be empty) for R = " + detail::fmt(R), issues);
            check_resolvable(p.at("lambda").get<double>(), R,
                             static_cast<int>(std::ceil(2 * pi * R * p.at("sphere_density").get<double>())),
                             "/params/lambda", issues);
        }
    } else if (name == "ballgrowth") {
        const double R = p.at("R").get<double>();
        require(R > 2, "/params/R", "must exceed 2", issues);
        require(p.at("gamma").get<double>() > 0 && p.at("gamma").get<double>() < 2 * pi, "/params/gamma",
                "must lie in (0, 2 pi)", issues);
        require(p.at("n_phi").get<int>() >= 0, "/params/n_phi", "must be 0 (automatic) or positive", issues);
        if (R > 2) {
            int n_phi = p.at("n_phi").get<int>();
            if (n_phi == 0) n_phi = static_cast<int>(std::ceil(2 * pi * R));
            if (n_phi > 0) check_resolvable(p.at("lambda").get<double>(), R, n_phi, "/params/lambda", issues);
        }
    } else if (name == "certify") {
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
        for (const auto& msg : cp.validate()) issues.push_back({"/params/constants", msg});
        require(p.at("r0_measured").get<double>() > 0, "/params/r0_measured", "must be positive", issues);
        require(p.at("M_measured").get<double>() > 0, "/params/M_measured", "must be positive", issues);
        const double R = p.at("trace_R").get<double>();
        require(R == 0 || R >= 8, "/params/trace_R", "must be 0 (disabled) or at least 8", issues);
        require(p.at("trace_h").get<double>() > 0, "/params/trace_h", "must be positive", issues);
        require(p.at("trace_samples").get<int>() >= 2, "/params/trace_samples", "must be at least 2", issues);
    } else if (name == "identities") {
        const auto ns = p.at("n_list").get<std::vector<int>>();
        require(!ns.empty(), "/params/n_list", "must not be empty", issues);
        for (int n : ns) require(n >= 4, "/params/n_list", "entries must be at least 4", issues);
        require(p.at("random_polys").get<int>() >= 0, "/params/random_polys", "must be non-negative", issues);
        require(p.at("max_degree").get<int>() >= 1, "/params/max_degree", "must be at least 1", issues);
        require(p.at("random_n").get<int>() >= 4, "/params/random_n", "must be at least 4", issues);
    }
}

json config_json(const ExperimentConfig& cfg, bool with_output) {
    json j{{"experiment", cfg.experiment}, {"seed", cfg.seed}, {"threads", cfg.threads}, {"params", cfg.params}};
    if (with_output) j["output"] = cfg.output;
    return j;
}

json versions() {
    return {{"glsharp", kVersion},
            {"compiler", __VERSION__},
            {"boost", BOOST_LIB_VERSION},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

}  // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [k, _] : registry()) v.push_back(k);
        return v;
    }();
    return names;
}

std::string experiment_summary(const std::string& name) { return registry().at(name).summary; }

json default_params(const std::string& name) {
    const auto it = registry().find(name);
    if (it == registry().end()) throw Error(ErrorKind::invalid_argument, "unknown experiment " + name, "config");
    return it->second.defaults;
}

std::vector<ConfigIssue> resolve_config(const json& doc, const ConfigOverrides& flags, ExperimentConfig* out) {
    std::vector<ConfigIssue> issues;
    if (!doc.is_null() && !doc.is_object()) return {{"", "config must be a JSON object"}};
    const json d = doc.is_null() ? json::object() : doc;
    for (const auto& [key, _] : d.items()) {
        if (key != "experiment" && key != "output" && key != "seed" && key != "threads" && key != "quiet" &&
            key != "params") {
            issues.push_back({"/" + key, "unknown key"});
        }
    }

    ExperimentConfig cfg;
    auto read = [&](const char* key, auto check, const char* expected) {
        if (!d.contains(key)) return false;
        if (!check(d.at(key))) {
            issues.push_back({std::string("/") + key, std::string("expected ") + expected});
            return false;
        }
        return true;
    };
    if (read("experiment", [](const json& v) { return v.is_string(); }, "string")) cfg.experiment = d["experiment"];
    if (read("output", [](const json& v) { return v.is_string(); }, "string")) cfg.output = d["output"];
    if (read("seed", [](const json& v) { return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0); }, "non-negative integer")) {
        cfg.seed = d["seed"].get<std::uint64_t>();
    }
    if (read("threads", [](const json& v) { return v.is_number_integer(); }, "integer")) cfg.threads = d["threads"];
    if (read("quiet", [](const json& v) { return v.is_boolean(); }, "boolean")) cfg.quiet = d["quiet"];

    if (flags.experiment) cfg.experiment = *flags.experiment;
    if (flags.output) cfg.output = *flags.output;
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.threads) cfg.threads = *flags.threads;
    cfg.quiet = cfg.quiet || flags.quiet;

    if (cfg.threads < 1) issues.push_back({"/threads", "must be at least 1"});
    if (cfg.output.empty()) issues.push_back({"/output", "must not be empty"});
    const auto it = registry().find(cfg.experiment);
    if (it == registry().end()) {
        std::string names;
        for (const auto& n : experiment_names()) names += (names.empty() ? "" : ", ") + n;
        issues.push_back({"/experiment", cfg.experiment.empty() ? "missing; one of " + names
                                                                : "unknown experiment '" + cfg.experiment + "'; one of " + names});
        return issues;
    }

    cfg.params = it->second.defaults;
    const auto before = issues.size();
    if (d.contains("params")) merge_checked(cfg.params, d["params"], "/params", issues);
    if (issues.size() == before) cross_checks(cfg.experiment, cfg.params, issues);
    if (issues.empty() && out) *out = std::move(cfg);
    return issues;
}

std::vector<ConfigIssue> load_config(const std::filesystem::path& path, json* doc) {
    std::ifstream in(path);
    if (!in) return {{"", "cannot open " + path.string()}};
    try {
        *doc = json::parse(in);
    } catch (const json::parse_error& e) {
        return {{"", std::string("parse error: ") + e.what()}};
    }
    return {};
}

std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunOutcome run_experiment(const ExperimentConfig& cfg) {
    RunOutcome out;
    const auto it = registry().find(cfg.experiment);
    if (it == registry().end()) {
        out.exit_code = 2;
        out.stage = "config";
        out.message = "unknown experiment " + cfg.experiment;
        return out;
    }
    std::error_code ec;
    std::filesystem::create_directories(cfg.output, ec);
    if (ec) {
        out.exit_code = 1;
        out.stage = "output";
        out.message = "cannot create " + cfg.output + ": " + ec.message();
        return out;
    }

    detail::Recorder rec(cfg.output, cfg.quiet);
    rec.log("running " + cfg.experiment + " into " + cfg.output);
    try {
        out.summary = it->second.run(cfg, rec);
    } catch (const Error& e) {
        out.exit_code = 1;
        out.stage = e.stage().empty() ? rec.current_stage() : rec.current_stage() + "/" + e.stage();
        out.message = std::string(to_string(e.kind())) + ": " + e.what();
    } catch (const std::exception& e) {
        out.exit_code = 1;
        out.stage = rec.current_stage();
        out.message = e.what();
    }
    rec.finish();

    json manifest{{"config", config_json(cfg, true)},
                  {"config_hash", fnv1a_hex(canonical_dump(config_json(cfg, false)))},
                  {"seed", cfg.seed},
                  {"threads", cfg.threads},
                  {"versions", versions()},
                  {"wall_times", rec.wall_times()},
                  {"outputs", rec.files()},
                  {"status", out.exit_code == 0 ? "ok" : "failed"}};
    if (out.exit_code != 0) manifest["error"] = {{"stage", out.stage}, {"message", out.message}};
    std::ofstream mf(std::filesystem::path(cfg.output) / "manifest.json", std::ios::binary);
    mf << canonical_dump(manifest);
    if (!mf && out.exit_code == 0) {
        out.exit_code = 1;
        out.stage = "manifest";
        out.message = "cannot write manifest.json";
    }
    if (out.exit_code != 0) rec.log("failed in stage " + out.stage + ": " + out.message);
    return out;
}

}  // namespace glsharp
