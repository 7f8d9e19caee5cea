#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sdd/commands.hpp"
#include "sdd/errors.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::string out_override;
};

int run(const std::string& command, const CliOptions& opts) {
    sdd::RunConfig cfg;
    if (!opts.config_path.empty()) cfg = sdd::parse_config(opts.config_path);
    if (opts.seed_override) cfg.seed = *opts.seed_override;
    if (!opts.out_override.empty()) cfg.out_dir = opts.out_override;

    const sdd::RunReport report = sdd::run_command(sdd::command_from_name(command), cfg);

    std::printf("%s: ok (seed %llu, out %s, %.2fs)\n", report.command.c_str(),
                static_cast<unsigned long long>(cfg.seed), cfg.out_dir.c_str(),
                report.elapsed_seconds);
    for (const auto& [key, value] : report.metrics) {
        std::printf("  %s = %.6g\n", key.c_str(), value);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Selective diffusion distillation lab"};
    app.require_subcommand(1);

    CliOptions opts;
    std::string picked;
    for (const char* name :
         {"train-denoiser", "score-hqs", "distill", "tradeoff", "ablation", "cost"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", opts.config_path, "Run config JSON path");
        sub->add_option("--seed", opts.seed_override, "Override the config seed");
        sub->add_option("--out", opts.out_override, "Override the config out_dir");
        sub->callback([&picked, name]() { picked = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        return run(picked, opts);
    } catch (const sdd::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const sdd::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
