#include "sdd/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "sdd/checkpoint.hpp"
#include "sdd/csv.hpp"
#include "sdd/errors.hpp"
#include "sdd/serialize.hpp"

namespace sdd {

namespace {

namespace fs = std::filesystem;

// Per-command rng labels, so the commands of one pipeline draw from
// disjoint substreams of the config seed.
constexpr std::uint64_t kRngTrainDenoiser = 0;
constexpr std::uint64_t kRngScoreHqs = 1;
constexpr std::uint64_t kRngDistill = 2;
constexpr std::uint64_t kRngTradeoff = 3;
constexpr std::uint64_t kRngHeldOut = 1000;

class OutDirLock {
public:
    explicit OutDirLock(const fs::path& out_dir) : path_(out_dir / ".sdd.lock") {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw IoError("cannot create out_dir " + out_dir.string() + ": " + ec.message());
        if (fs::exists(path_)) {
            throw IoError("out_dir is locked by another run (" + path_.string() +
                          "); remove the lock file if that run is gone");
        }
        std::ofstream lock(path_);
        if (!lock) throw IoError("cannot create lock file " + path_.string());
    }

    ~OutDirLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }

    OutDirLock(const OutDirLock&) = delete;
    OutDirLock& operator=(const OutDirLock&) = delete;

private:
    fs::path path_;
};

struct CommandContext {
    const RunConfig& cfg;
    fs::path out_dir;
    RunReport report;

    void emit(const fs::path& name, const std::string& content) {
        const fs::path path = out_dir / name;
        write_text_atomic(path, content);
        report.artifacts.push_back(path.string());
    }
};

DenoiserCheckpoint load_teacher(const CommandContext& ctx) {
    DenoiserCheckpoint ckpt = load_denoiser(ctx.out_dir / "denoiser.json");
    const MixtureWorld world = ctx.cfg.world.build();
    if (ckpt.denoiser.data_dim() != world.dim() ||
        ckpt.denoiser.condition_count() != world.condition_count()) {
        throw ShapeError("denoiser checkpoint does not match the configured world");
    }
    if (ckpt.schedule.horizon() != ctx.cfg.schedule.T ||
        ckpt.schedule.beta_min() != ctx.cfg.schedule.beta_min ||
        ckpt.schedule.beta_max() != ctx.cfg.schedule.beta_max) {
        throw ShapeError("denoiser checkpoint schedule does not match the configured one");
    }
    return ckpt;
}

HQSProfile load_profile(const CommandContext& ctx) {
    const fs::path path = ctx.out_dir / "profile.csv";
    if (!fs::exists(path)) {
        throw IoError("profile not found at " + path.string() + "; run score-hqs first");
    }
    return profile_from_csv(read_text(path));
}

TimestepSet select_from_spec(const HQSProfile& profile, const HqsSpec& spec) {
    if (spec.top_k) return top_k(profile, *spec.top_k);
    return select_timesteps(profile, spec.threshold_or_default());
}

Strategy build_strategy(const std::string& name, const CommandContext& ctx,
                        const HQSProfile* profile) {
    if (name == "random") return Strategy::random();
    if (name == "descending") return Strategy::descending();
    if (name == "fixed") return Strategy::fixed(ctx.cfg.distill.fixed_t);
    if (profile == nullptr) {
        throw ConfigError("strategy '" + name + "' needs an HQS profile");
    }
    if (name == "selected") return Strategy::selected(select_from_spec(*profile, ctx.cfg.hqs));
    if (name == "largest-hqs") return Strategy::largest_hqs(*profile);
    throw ConfigError("unknown strategy '" + name + "'");
}

bool strategy_needs_profile(const std::string& name) {
    return name == "selected" || name == "largest-hqs";
}

void cmd_train_denoiser(CommandContext& ctx) {
    const MixtureWorld world = ctx.cfg.world.build();
    const NoiseSchedule schedule = ctx.cfg.schedule.build();
    RngStream rng = RngStream{ctx.cfg.seed}.fork(kRngTrainDenoiser);

    DenoiserTraining training = train_denoiser(world, schedule, ctx.cfg.denoiser, rng);
    ctx.emit("denoiser.json", denoiser_to_json(training.denoiser, schedule) + "\n");

    const std::size_t n = training.losses.size();
    if (n > 0) {
        const std::size_t decile = std::max<std::size_t>(1, n / 10);
        double first = 0.0, last = 0.0;
        for (std::size_t i = 0; i < decile; ++i) {
            first += training.losses[i];
            last += training.losses[n - 1 - i];
        }
        ctx.report.metrics["first_decile_loss"] = first / static_cast<double>(decile);
        ctx.report.metrics["last_decile_loss"] = last / static_cast<double>(decile);
        ctx.report.metrics["final_loss"] = training.losses.back();
    }
    ctx.report.metrics["iterations"] = static_cast<double>(ctx.cfg.denoiser.iterations);
    ctx.report.metrics["trunk_params"] =
        static_cast<double>(training.denoiser.trunk().param_count());
}

void cmd_score_hqs(CommandContext& ctx) {
    const MixtureWorld world = ctx.cfg.world.build();
    const DenoiserCheckpoint ckpt = load_teacher(ctx);
    const RngStream rng = RngStream{ctx.cfg.seed}.fork(kRngScoreHqs);

    const HQSProfile profile =
        hqs_profile(ckpt.denoiser, ckpt.schedule, world, ctx.cfg.edit.source(),
                    ctx.cfg.edit.target(ctx.cfg.world), ctx.cfg.hqs.params(), rng);
    ctx.emit("profile.csv", profile_to_csv(profile));

    const TimestepSet set = select_from_spec(profile, ctx.cfg.hqs);
    const Strategy best = Strategy::largest_hqs(profile);
    ctx.report.metrics["selected_count"] = static_cast<double>(set.steps.size());
    ctx.report.metrics["top1_t"] = static_cast<double>(best.best_t());
    ctx.report.metrics["max_hqs"] =
        profile.hqs[static_cast<std::size_t>(best.best_t() - 1)];
}

void cmd_distill(CommandContext& ctx) {
    const MixtureWorld world = ctx.cfg.world.build();
    const DenoiserCheckpoint ckpt = load_teacher(ctx);

    HQSProfile profile;
    const HQSProfile* profile_ptr = nullptr;
    if (strategy_needs_profile(ctx.cfg.distill.strategy)) {
        profile = load_profile(ctx);
        profile_ptr = &profile;
    }
    const Strategy strategy = build_strategy(ctx.cfg.distill.strategy, ctx, profile_ptr);

    RngStream rng = RngStream{ctx.cfg.seed}.fork(kRngDistill);
    const ConditionId source = ctx.cfg.edit.source();
    const ConditionId target = ctx.cfg.edit.target(ctx.cfg.world);

    DistillResult result = train_manipulator(world, ckpt.denoiser, ckpt.schedule, source,
                                             target, strategy, ctx.cfg.distill.config, rng);
    ctx.emit("manipulator.json", manipulator_to_json(result.manipulator) + "\n");
    ctx.emit("history.csv", history_to_csv(result.history));

    RngStream held_rng = RngStream{ctx.cfg.seed}.fork(kRngHeldOut);
    const LabeledBatch held = sample_world(world, source, ctx.cfg.eval.samples, held_rng);
    const DenseArray outputs = manipulate_batch(result.manipulator, held.samples);
    ctx.report.metrics["alignment"] = alignment_score(world, outputs, target);
    ctx.report.metrics["fidelity_rmse"] = fidelity_rmse(held.samples, outputs, world);
    ctx.report.metrics["iterations"] = static_cast<double>(ctx.cfg.distill.config.iterations);
    ctx.report.metrics["manipulator_params"] =
        static_cast<double>(result.manipulator.param_count());
}

void cmd_tradeoff(CommandContext& ctx) {
    const MixtureWorld world = ctx.cfg.world.build();
    const DenoiserCheckpoint ckpt = load_teacher(ctx);
    const RngStream rng = RngStream{ctx.cfg.seed}.fork(kRngTradeoff);

    const std::vector<TradeoffPoint> points =
        tradeoff_curve(ckpt.denoiser, ckpt.schedule, world, ctx.cfg.edit.source(),
                       ctx.cfg.edit.target(ctx.cfg.world), ctx.cfg.eval.alpha_grid,
                       ctx.cfg.eval.samples, rng);
    ctx.emit("tradeoff.csv", tradeoff_to_csv(points));

    std::vector<double> alphas, alignments, fidelities;
    for (const TradeoffPoint& p : points) {
        alphas.push_back(p.alpha);
        alignments.push_back(p.alignment);
        fidelities.push_back(p.fidelity_rmse);
    }
    if (points.size() >= 2) {
        ctx.report.metrics["spearman_alignment_alpha"] =
            spearman_correlation(alphas, alignments);
        ctx.report.metrics["spearman_fidelity_alpha"] =
            spearman_correlation(alphas, fidelities);
    }
}

void cmd_ablation(CommandContext& ctx) {
    const MixtureWorld world = ctx.cfg.world.build();
    const DenoiserCheckpoint ckpt = load_teacher(ctx);

    HQSProfile profile;
    const HQSProfile* profile_ptr = nullptr;
    for (const std::string& name : ctx.cfg.eval.strategies) {
        if (strategy_needs_profile(name)) {
            profile = load_profile(ctx);
            profile_ptr = &profile;
            break;
        }
    }

    std::vector<NamedStrategy> strategies;
    for (const std::string& name : ctx.cfg.eval.strategies) {
        strategies.push_back({name, build_strategy(name, ctx, profile_ptr)});
    }

    const AblationReport report =
        run_ablation(world, ckpt.denoiser, ckpt.schedule, ctx.cfg.edit.source(),
                     ctx.cfg.edit.target(ctx.cfg.world), strategies, ctx.cfg.eval.seeds,
                     ctx.cfg.distill.config, ctx.cfg.eval.samples);
    ctx.emit("ablation.csv", ablation_to_csv(report));

    for (const NamedStrategy& named : strategies) {
        double acc = 0.0;
        int count = 0;
        for (const AblationRow& row : report.rows) {
            if (row.strategy == named.tag) {
                acc += row.alignment;
                ++count;
            }
        }
        if (count > 0) {
            ctx.report.metrics["mean_alignment_" + named.tag] =
                acc / static_cast<double>(count);
        }
    }
}

void cmd_cost(CommandContext& ctx) {
    const CostParams& p = ctx.cfg.cost.params;
    const double total_diffusion = cost_diffusion(p);
    const double total_sdd = cost_sdd(p);
    const double threshold = break_even_m(p);

    std::string doc = "{\"inputs\":{";
    doc += "\"m\":" + std::to_string(p.images_per_prompt);
    doc += ",\"n\":" + std::to_string(p.prompts);
    doc += ",\"tau_diff_infer\":" + format_g17(p.tau_diff_infer);
    doc += ",\"tau_sdd_train\":" + format_g17(p.tau_sdd_train);
    doc += ",\"tau_sdd_infer\":" + format_g17(p.tau_sdd_infer);
    doc += "},\"total_diffusion\":" + format_g17(total_diffusion);
    doc += ",\"total_sdd\":" + format_g17(total_sdd);
    doc += ",\"break_even_m\":" + format_g17(threshold);
    doc += "}\n";
    ctx.emit("cost.json", doc);

    ctx.report.metrics["total_diffusion"] = total_diffusion;
    ctx.report.metrics["total_sdd"] = total_sdd;
    ctx.report.metrics["break_even_m"] = threshold;
}

}  // namespace

Command command_from_name(const std::string& name) {
    if (name == "train-denoiser") return Command::train_denoiser;
    if (name == "score-hqs") return Command::score_hqs;
    if (name == "distill") return Command::distill;
    if (name == "tradeoff") return Command::tradeoff;
    if (name == "ablation") return Command::ablation;
    if (name == "cost") return Command::cost;
    throw ConfigError("unknown command '" + name + "'");
}

std::string command_name(Command cmd) {
    switch (cmd) {
        case Command::train_denoiser: return "train-denoiser";
        case Command::score_hqs: return "score-hqs";
        case Command::distill: return "distill";
        case Command::tradeoff: return "tradeoff";
        case Command::ablation: return "ablation";
        case Command::cost: return "cost";
    }
    throw ConfigError("unknown command");
}

RunReport run_command(Command cmd, const RunConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();

    CommandContext ctx{cfg, fs::path(cfg.out_dir), {}};
    OutDirLock lock(ctx.out_dir);

    ctx.report.command = command_name(cmd);
    ctx.report.config_hash = config_hash(cfg);

    switch (cmd) {
        case Command::train_denoiser: cmd_train_denoiser(ctx); break;
        case Command::score_hqs: cmd_score_hqs(ctx); break;
        case Command::distill: cmd_distill(ctx); break;
        case Command::tradeoff: cmd_tradeoff(ctx); break;
        case Command::ablation: cmd_ablation(ctx); break;
        case Command::cost: cmd_cost(ctx); break;
    }

    ctx.report.artifacts.push_back((ctx.out_dir / "report.json").string());
    ctx.report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_report(ctx.report, ctx.out_dir);
    return ctx.report;
}

}  // namespace sdd
