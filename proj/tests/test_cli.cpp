#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "glsharp/cli.hpp"

using namespace glsharp;
using nlohmann::json;

namespace {

std::vector<ConfigIssue> check(const json& doc, ExperimentConfig* out = nullptr) { return resolve_config(doc, {}, out); }

bool mentions(const std::vector<ConfigIssue>& issues, const std::string& path, const std::string& text) {
    for (const auto& i : issues) {
        if (i.path == path && i.message.find(text) != std::string::npos) return true;
    }
    return false;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("glsharp_cli_" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("default configs validate") {
    for (const auto& name : experiment_names()) {
        CAPTURE(name);
        ExperimentConfig cfg;
        CHECK(check({{"experiment", name}}, &cfg).empty());
        CHECK(cfg.params == default_params(name));
    }
    CHECK(experiment_names().size() == 6);
}

TEST_CASE("schema violations") {
    CHECK(mentions(check({{"experiment", "certify"}, {"colour", 1}}), "/colour", "unknown key"));
    CHECK(mentions(check({{"experiment", "certify"}, {"params", {{"constants", {{"gama", 5.0}}}}}}),
                   "/params/constants/gama", "unknown key"));
    CHECK(mentions(check({{"experiment", "eta-sweep"}, {"params", {{"n", 9.5}}}}), "/params/n", "integer"));
    CHECK(mentions(check({{"experiment", "eta-sweep"}, {"params", {{"eps_list", {0.1, "x"}}}}}), "/params/eps_list",
                   "array elements"));
    CHECK(mentions(check({{"experiment", "nonsense"}}), "/experiment", "unknown experiment"));
    CHECK(mentions(check(json::object()), "/experiment", "missing"));
    CHECK(mentions(check({{"experiment", "certify"}, {"seed", -3}}), "/seed", "non-negative"));
}

TEST_CASE("cross-field constraints") {
    const auto g = check({{"experiment", "certify"}, {"params", {{"constants", {{"gamma", 6.3}}}}}});
    CHECK(mentions(g, "/params/constants", "gamma + 3 eps_margin must be below 2 pi"));

    // on S_1 the sphere cell is 2 pi / n_phi; with 100 cells lambda eps = 4 / R spans about one
    const auto r = check({{"experiment", "ballgrowth"}, {"params", {{"n_phi", 100}}}});
    CHECK(mentions(r, "/params/lambda", "lambda eps < 4 h"));

    CHECK(mentions(check({{"experiment", "eta-sweep"}, {"params", {{"eps_list", {0.1, 0.2}}}}}), "/params/eps_list",
                   "decreasing"));
    CHECK(mentions(check({{"experiment", "eta-sweep"}, {"params", {{"data", "spiral"}}}}), "/params/data", "one of"));
    CHECK(mentions(check({{"experiment", "prop13"}, {"params", {{"R_list", {10.0}}}}}), "/params/R_list",
                   "R - 2 R^alpha"));
}

TEST_CASE("flags override the file, the file overrides defaults") {
    const json doc{{"experiment", "growth-rate"}, {"seed", 7}, {"output", "from_file"}, {"threads", 2}};
    ExperimentConfig cfg;
    REQUIRE(check(doc, &cfg).empty());
    CHECK(cfg.seed == 7);
    CHECK(cfg.output == "from_file");
    CHECK(cfg.threads == 2);

    ConfigOverrides flags;
    flags.seed = 11;
    flags.output = "from_flag";
    REQUIRE(resolve_config(doc, flags, &cfg).empty());
    CHECK(cfg.seed == 11);
    CHECK(cfg.output == "from_flag");
    CHECK(cfg.threads == 2);

    ExperimentConfig defaults;
    REQUIRE(check({{"experiment", "growth-rate"}}, &defaults).empty());
    CHECK(defaults.seed == 1);
    CHECK(defaults.output == "out");
}

TEST_CASE("hashing") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("runs are reproducible and emit a manifest") {
    json doc{{"experiment", "identities"},
             {"quiet", true},
             {"params", {{"n_list", {8, 16}}, {"random_polys", 3}, {"random_n", 8}}}};
    ExperimentConfig a, b;
    REQUIRE(check(doc, &a).empty());
    REQUIRE(check(doc, &b).empty());
    a.output = scratch("a").string();
    b.output = scratch("b").string();
    const auto ra = run_experiment(a);
    const auto rb = run_experiment(b);
    REQUIRE(ra.exit_code == 0);
    REQUIRE(rb.exit_code == 0);
    for (const char* f : {"identities.json", "identities.csv"}) {
        CAPTURE(f);
        const auto x = slurp(std::filesystem::path(a.output) / f);
        CHECK_FALSE(x.empty());
        CHECK(x == slurp(std::filesystem::path(b.output) / f));
    }
    const auto ma = json::parse(slurp(std::filesystem::path(a.output) / "manifest.json"));
    const auto mb = json::parse(slurp(std::filesystem::path(b.output) / "manifest.json"));
    CHECK(ma["status"] == "ok");
    CHECK(ma["config_hash"] == mb["config_hash"]);
    CHECK(ma["seed"] == 1);
    CHECK(ma["wall_times"].contains("random"));
    CHECK(ma["outputs"].size() == 2);
    CHECK(ma["versions"].contains("boost"));

    a.seed = 2;
    CHECK(run_experiment(a).exit_code == 0);
    const auto mc = json::parse(slurp(std::filesystem::path(a.output) / "manifest.json"));
    CHECK(mc["config_hash"] != mb["config_hash"]);
}

TEST_CASE("failures carry a stage and exit code 1") {
    const auto blocker = scratch("blocker");
    std::ofstream(blocker) << "not a directory";
    ExperimentConfig cfg;
    REQUIRE(check({{"experiment", "certify"}, {"quiet", true}}, &cfg).empty());
    cfg.output = (blocker / "sub").string();
    const auto r = run_experiment(cfg);
    CHECK(r.exit_code == 1);
    CHECK(r.stage == "output");
}
