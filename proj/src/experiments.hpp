#pragma once

// Internal to the library: experiment bodies behind run_experiment.

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "glsharp/cli.hpp"

namespace glsharp::detail {

class Recorder {
public:
    Recorder(std::filesystem::path dir, bool quiet) : dir_(std::move(dir)), quiet_(quiet) {}

    void write_text(const std::string& name, const std::string& body);
    void write_json(const std::string& name, const nlohmann::json& j);
    std::filesystem::path path(const std::string& name) const { return dir_ / name; }
    void note_file(const std::string& name) { files_.push_back(name); }

    /// Starts a named timing stage; the previous one (if any) is closed.
    void stage(const std::string& name);
    void finish();
    const std::string& current_stage() const { return stage_; }

    void log(const std::string& msg) const;

    const std::vector<std::string>& files() const { return files_; }
    const std::map<std::string, double>& wall_times() const { return times_; }

private:
    std::filesystem::path dir_;
    bool quiet_;
    std::vector<std::string> files_;
    std::map<std::string, double> times_;
    std::string stage_;
    std::chrono::steady_clock::time_point start_;
};

/// "%.17g"-style formatting shared by every CSV writer.
std::string fmt(double v);

nlohmann::json run_growth_rate(const ExperimentConfig& cfg, Recorder& rec);
nlohmann::json run_eta_sweep(const ExperimentConfig& cfg, Recorder& rec);
nlohmann::json run_prop13(const ExperimentConfig& cfg, Recorder& rec);
nlohmann::json run_ballgrowth(const ExperimentConfig& cfg, Recorder& rec);
nlohmann::json run_certify(const ExperimentConfig& cfg, Recorder& rec);
nlohmann::json run_identities(const ExperimentConfig& cfg, Recorder& rec);

}  // namespace glsharp::detail
