#include "pinlab/cli.hpp"
#include "pinlab/errors.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

int finish(pinlab::ExitCode code, const std::string& message)
{
    if (!message.empty())
        std::cerr << "pinlab: " << message << "\n";
    return static_cast<int>(code);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Numerical laboratory for disordered renewal pinning"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string out_dir = ".";

    for (const auto& mode : pinlab::experiment_modes()) {
        auto* sub = app.add_subcommand(mode, "run the " + mode + " experiment");
        sub->add_option("-c,--config", config_path, "experiment config file")->required();
        sub->add_option("--seed", seed, "master seed, overrides [run] seed");
        sub->add_option("-j,--threads", threads, "worker threads (default PINLAB_THREADS or all cores)")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("-o,--out", out_dir, "artifact directory");
    }
    std::vector<std::string> digest_paths;
    auto* digest = app.add_subcommand("digest", "summarise JSON artifacts");
    digest->add_option("artifacts", digest_paths, "artifact files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(pinlab::ExitCode::config);
    }

    auto* chosen = app.get_subcommands().front();
    if (chosen == digest) {
        try {
            const auto d = pinlab::report_digest(digest_paths);
            std::cout << d.text;
            return static_cast<int>(d.contradiction ? pinlab::ExitCode::contradiction
                                                    : pinlab::ExitCode::ok);
        } catch (const pinlab::ConfigError& e) {
            return finish(pinlab::ExitCode::config, e.what());
        } catch (const std::exception& e) {
            return finish(pinlab::ExitCode::failure, e.what());
        }
    }

    pinlab::ExperimentConfig cfg;
    try {
        std::ifstream f(config_path, std::ios::binary);
        if (!f)
            throw pinlab::ConfigError("cannot read " + config_path);
        std::ostringstream text;
        text << f.rdbuf();
        cfg = pinlab::parse_config(text.str());
        const std::string mode = chosen->get_name();
        if (!cfg.mode.empty() && cfg.mode != mode)
            throw pinlab::ConfigError("config mode '" + cfg.mode + "' does not match subcommand '" +
                                      mode + "'", 0, 0, "mode");
        cfg.mode = mode;
        if (seed)
            cfg.seed = *seed;
    } catch (const pinlab::ConfigError& e) {
        return finish(pinlab::ExitCode::config, e.what());
    }

    const auto res = pinlab::run(cfg, {out_dir, threads});
    for (const auto& p : res.artifacts)
        std::cout << p << "\n";
    return finish(res.code, res.message);
}
