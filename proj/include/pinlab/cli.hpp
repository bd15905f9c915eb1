#pragma once

// Experiment configuration, dispatch and artifact emission.
//
// A config is sectioned key-value text:
//
//   [law]
//   kind = power_law
//   alpha = 0.75
//
//   [run]
//   mode = quenched
//   seed = 7
//
//   [quenched]
//   beta = 1
//   h = -0.2
//
// Only [law], [run] and the per-mode sections are accepted, and each section
// only its documented keys. Thread counts are not part of the config: they
// never change an artifact.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pinlab/kernel.hpp"

namespace pinlab {

enum class ExitCode : int { ok = 0, failure = 1, config = 2, resource = 3, contradiction = 4 };

struct LawSpec {
    std::string kind = "power_law"; // power_law | srw | explicit | serialized
    double alpha = 0.5;
    double k_infinity = 0.0;
    std::int64_t n_table = 1024;
    std::vector<double> table;          // explicit
    std::optional<InterArrivalLaw> law; // serialized
};

InterArrivalLaw build_law(const LawSpec& spec);

struct HomogParams {
    std::vector<double> h;
};

struct QuenchedParams {
    double beta = 1.0;
    double h = 0.0;
    std::int64_t N = 1024;
    int replicas = 100;
};

struct CertifyParams {
    double beta = 1.0;
    double h = 0.0;
    std::string method = "search"; // simple | iterated | search
    double gamma = 0.8;
    std::int64_t k = 64;
    std::vector<double> gammas = {0.6, 0.7, 0.8, 0.9};
    std::int64_t max_k = 4096;
    int replicas = 200;
    std::vector<double> shift_a = {0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9};
    bool decay_check = true;
    std::int64_t check_N = 1024; // 0 disables the free-energy consistency run
    int check_replicas = 50;
};

struct VarianceParams {
    double beta = 0.2;
    std::int64_t N = 1024;
    int replicas = 200;
};

struct SmoothingParams {
    double beta = 1.0;
    std::vector<double> deltas = {0.1, 0.2, 0.4};
    std::int64_t N = 1024;
    int replicas = 100;
    std::optional<double> bracket_left;
    std::optional<double> bracket_right;
    std::vector<double> scan_h; // used when bracket_right is absent
    std::int64_t scan_N = 1024;
    int scan_replicas = 100;
    double threshold = 3.0;
};

struct SampleParams {
    double beta = 1.0;
    double h = 0.0;
    std::int64_t N = 64;
    int count = 100;
};

struct ScanParams {
    double beta = 1.0;
    std::vector<double> h;
    std::int64_t N = 1024;
    int replicas = 100;
    double threshold = 3.0;
    std::optional<double> certified_left;
};

struct ExperimentConfig {
    LawSpec law;
    std::string mode;
    std::uint64_t seed = 1;
    std::optional<HomogParams> homog;
    std::optional<QuenchedParams> quenched;
    std::optional<CertifyParams> certify;
    std::optional<VarianceParams> variance;
    std::optional<SmoothingParams> smoothing;
    std::optional<SampleParams> sample;
    std::optional<ScanParams> scan;
};

inline const std::vector<std::string>& experiment_modes()
{
    static const std::vector<std::string> modes = {"homog",     "quenched", "certify", "variance",
                                                   "smoothing", "sample",   "scan"};
    return modes;
}

/// Strict parse. Throws ConfigError with line, column and field.
ExperimentConfig parse_config(std::string_view text);

/// Canonical text: every section present in the config, every field spelled out.
std::string to_text(const ExperimentConfig& config);

struct RunOptions {
    std::string out_dir = ".";
    int threads = 0;
};

struct RunResult {
    ExitCode code = ExitCode::ok;
    std::string message;
    std::vector<std::string> artifacts; // paths written
};

/// Runs the configured mode and writes `<mode>.json` (plus CSV grids) into
/// out_dir. Exceptions are mapped to exit codes.
RunResult run(const ExperimentConfig& config, const RunOptions& options = {});

struct Digest {
    std::string text;
    bool contradiction = false;
};

/// One-page summary of JSON artifacts written by run(). Throws ConfigError
/// for an empty list and std::runtime_error for missing or corrupt files.
Digest report_digest(const std::vector<std::string>& paths);

} // namespace pinlab
