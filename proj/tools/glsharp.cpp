#include <iostream>

#include "CLI11.hpp"
#include "glsharp/cli.hpp"

namespace {

void print_issues(const std::vector<glsharp::ConfigIssue>& issues) {
    for (const auto& i : issues) std::cerr << "config error: " << (i.path.empty() ? "/" : i.path) << ": " << i.message << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"glsharp: Ginzburg-Landau numerical experiments"};
    app.require_subcommand(1);

    std::string config_path;
    glsharp::ConfigOverrides flags;
    std::string experiment, out_dir;
    std::uint64_t seed = 0;
    int threads = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--experiment", experiment, "experiment name (overrides the file)");
        sub->add_option("--out", out_dir, "output directory (overrides the file)");
        sub->add_option("--seed", seed, "random seed (overrides the file)");
        sub->add_option("--threads", threads, "worker threads (overrides the file)");
        sub->add_flag("--quiet", flags.quiet, "suppress progress logging");
    };
    auto* run = app.add_subcommand("run", "run an experiment");
    auto* validate = app.add_subcommand("validate", "check a config without computing");
    auto* list = app.add_subcommand("list", "list experiments and their default parameters");
    add_common(run);
    add_common(validate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (list->parsed()) {
        for (const auto& name : glsharp::experiment_names()) {
            std::cout << name << ": " << glsharp::experiment_summary(name) << '\n'
                      << glsharp::canonical_dump(glsharp::default_params(name)) << '\n';
        }
        return 0;
    }

    auto* sub = run->parsed() ? run : validate;
    if (sub->count("--experiment")) flags.experiment = experiment;
    if (sub->count("--out")) flags.output = out_dir;
    if (sub->count("--seed")) flags.seed = seed;
    if (sub->count("--threads")) flags.threads = threads;

    nlohmann::json doc;
    if (!config_path.empty()) {
        const auto issues = glsharp::load_config(config_path, &doc);
        if (!issues.empty()) {
            print_issues(issues);
            return 2;
        }
    }
    glsharp::ExperimentConfig cfg;
    const auto issues = glsharp::resolve_config(doc, flags, &cfg);
    if (!issues.empty()) {
        print_issues(issues);
        return 2;
    }
    if (validate->parsed()) {
        std::cout << "config ok: " << cfg.experiment << '\n';
        return 0;
    }
    const auto outcome = glsharp::run_experiment(cfg);
    if (outcome.exit_code != 0) {
        std::cerr << "experiment failed in stage " << outcome.stage << ": " << outcome.message << '\n';
    }
    return outcome.exit_code;
}
