// Acceptance suite: runs every gate criterion at its stated tolerance and
// budget, printing one pass/fail line per criterion. Exits nonzero if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdd/csv.hpp"
#include "sdd/eval.hpp"
#include "sdd/serialize.hpp"
#include "support/hqs_brute_force.hpp"

using namespace sdd;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct CriterionResult {
    int number = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
    double budget = 0.0;
};

std::vector<CriterionResult> g_results;

template <typename Fn>
void criterion(int number, const std::string& name, double budget_seconds, Fn&& body) {
    CriterionResult result;
    result.number = number;
    result.name = name;
    result.budget = budget_seconds;

    const auto start = Clock::now();
    try {
        result.pass = body(result.detail);
    } catch (const std::exception& e) {
        result.pass = false;
        result.detail = std::string("exception: ") + e.what();
    }
    result.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (result.seconds > result.budget) {
        result.pass = false;
        result.detail += " [budget exceeded]";
    }

    std::printf("[%s] %2d. %-28s %s (%.1fs / %.0fs)\n", result.pass ? "PASS" : "FAIL",
                result.number, result.name.c_str(), result.detail.c_str(), result.seconds,
                result.budget);
    std::fflush(stdout);
    g_results.push_back(std::move(result));
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
    return buf;
}

// Shared fixtures; the cost of training a teacher is charged to the first
// criterion that needs it.
struct Fixtures {
    NoiseSchedule schedule = make_schedule(100, 1e-4, 0.02);
    MixtureWorld two_world = make_world(WorldLayout::two_mode, 2, 4.0, 0.3, 2);
    MixtureWorld ring_world = make_world(WorldLayout::ring, 8, 2.0, 0.25, 8);
    std::optional<Denoiser> two_teacher;
    std::optional<Denoiser> ring_teacher;
    std::optional<std::vector<TradeoffPoint>> two_curve;

    const Denoiser& two() {
        if (!two_teacher) {
            two_teacher = train_denoiser(two_world, schedule, DenoiserTrainConfig{},
                                         RngStream(1))
                              .denoiser;
        }
        return *two_teacher;
    }

    const Denoiser& ring() {
        if (!ring_teacher) {
            ring_teacher = train_denoiser(ring_world, schedule, DenoiserTrainConfig{},
                                          RngStream(1))
                               .denoiser;
        }
        return *ring_teacher;
    }

    const std::vector<TradeoffPoint>& curve() {
        if (!two_curve) {
            two_curve = tradeoff_curve(two(), schedule, two_world, ConditionId(0),
                                       ConditionId(1), {0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0}, 200,
                                       RngStream(1).fork(3));
        }
        return *two_curve;
    }
};

// Distillation regime used by the experiment criteria; defaults elsewhere.
// The default lambda 0.1 / lr 1e-2 pair saturates every strategy on the toy
// worlds, erasing the strategy contrast these experiments measure.
DistillConfig experiment_distill_config() {
    DistillConfig cfg;
    cfg.lambda_reg = 0.3;
    cfg.lr = 5e-3;
    return cfg;
}

bool run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd =
        std::string(SDD_BIN_PATH) + " " + args + " > " + log.string() + " 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str())) == 0;
}

ScalarLoss mixed_loss() {
    return {[](const DenseArray& out) {
                double s = 0.0;
                for (std::size_t i = 0; i < out.size(); ++i) {
                    s += out[i] * out[i] + 0.3 * out[i];
                }
                return s;
            },
            [](const DenseArray& out) {
                DenseArray g = DenseArray::zeros(out.size());
                for (std::size_t i = 0; i < out.size(); ++i) g[i] = 2.0 * out[i] + 0.3;
                return g;
            }};
}

}  // namespace

int main() {
    Fixtures fx;

    criterion(1, "gradient-correctness", 10.0, [&](std::string& detail) {
        double worst = 0.0;
        const std::vector<std::vector<std::size_t>> shapes = {
            {4, 8, 6, 3}, {2, 16, 2}, {6, 6, 6, 6, 6}, {3, 24, 1}};
        int count = 0;
        for (std::uint64_t seed = 1; count < 20; ++seed) {
            for (const auto& dims : shapes) {
                if (count >= 20) break;
                RngStream rng(seed * 97 + static_cast<std::uint64_t>(count));
                const Activation act = count % 2 == 0 ? Activation::silu : Activation::tanh;
                const Mlp net = Mlp::glorot(dims, act, rng);
                const DenseArray input = rng.gaussian_vector(dims.front());
                worst = std::max(worst, finite_diff_check(net, input, mixed_loss(), 1e-5));
                ++count;
            }
        }
        detail = fmt("max_rel=%.3g over 20 nets", worst);
        return worst < 1e-5;
    });

    criterion(2, "forward-process-moments", 5.0, [&](std::string& detail) {
        const DenseArray x0 = DenseArray::vec({1.5, -0.5});
        RngStream rng(7);
        double worst_mean_sigmas = 0.0;
        double worst_var_rel = 0.0;
        for (int t : {1, 50, 100}) {
            const int n = 100000;
            double mean = 0.0, sq = 0.0;
            for (int i = 0; i < n; ++i) {
                const DenseArray eps = rng.gaussian_vector(2);
                const DenseArray xt = forward_sample(fx.schedule, x0, t, eps);
                mean += xt[0];
                sq += xt[0] * xt[0];
            }
            mean /= n;
            const double var = sq / n - mean * mean;
            const double expect_mean = std::sqrt(fx.schedule.alpha_bar(t)) * x0[0];
            const double expect_var = 1.0 - fx.schedule.alpha_bar(t);
            const double se = std::sqrt(expect_var / n);
            worst_mean_sigmas = std::max(worst_mean_sigmas, std::abs(mean - expect_mean) / se);
            worst_var_rel =
                std::max(worst_var_rel, std::abs(var - expect_var) / expect_var);
        }
        detail = fmt("mean gap %.2f sigma, var gap %.2f%%", worst_mean_sigmas,
                     100.0 * worst_var_rel);
        return worst_mean_sigmas < 3.0 && worst_var_rel < 0.02;
    });

    criterion(3, "entropy-normalization-ids", 1.0, [&](std::string& detail) {
        bool ok = true;
        for (std::size_t D : {2, 8, 64}) {
            DenseArray uniform = DenseArray::zeros(D);
            uniform.fill(1.0 / static_cast<double>(D));
            ok = ok && std::abs(step_entropy(uniform) - std::log(static_cast<double>(D))) < 1e-12;
        }
        DenseArray onehot = DenseArray::vec({0.0, 1.0, 0.0, 0.0});
        ok = ok && step_entropy(onehot) == 0.0;

        ok = ok && minmax_normalize({2.0, 4.0, 6.0}) == std::vector<double>{0.0, 0.5, 1.0};
        ok = ok && minmax_normalize({5.0, 5.0}) == std::vector<double>{0.0, 0.0};

        RngStream rng(3);
        GradientMap g;
        g.d = rng.gaussian_vector(8);
        GradientMap shifted = g;
        for (std::size_t i = 0; i < 8; ++i) shifted.d[i] += 4.25;
        const DenseArray pa = confidence_map(g);
        const DenseArray pb = confidence_map(shifted);
        for (std::size_t i = 0; i < 8; ++i) ok = ok && std::abs(pa[i] - pb[i]) < 1e-12;

        detail = "ln D, one-hot, min-max, softmax shift";
        return ok;
    });

    criterion(4, "hqs-oracle-equivalence", 5.0, [&](std::string& detail) {
        const NoiseSchedule sched = make_schedule(5, 0.02, 0.3);
        const MixtureWorld world = make_world(WorldLayout::ring, 4, 2.0, 0.25, 4);
        RngStream init(2024);
        DenoiserTrainConfig dc;
        dc.hidden = {8, 8};
        dc.time_frequencies = 3;
        dc.cond_dim = 4;
        const Denoiser net = init_denoiser(world, sched, dc, init);
        const RngStream rng(11);

        bool exact = true;
        for (bool per_sample : {false, true}) {
            HqsParams params;
            params.n_samples = 4;
            params.n_eps = 2;
            params.normalize_per_sample = per_sample;
            const HQSProfile mine = hqs_profile(net, sched, world, ConditionId(0),
                                                ConditionId(1), params, rng);
            const HQSProfile oracle = sdd::testing::brute_force_profile(
                net, sched, world, ConditionId(0), ConditionId(1), 4, 2, per_sample, rng);
            for (int t = 0; t < 5; ++t) {
                const std::size_t i = static_cast<std::size_t>(t);
                exact = exact && mine.H[i] == oracle.H[i] && mine.N[i] == oracle.N[i] &&
                        mine.H_norm[i] == oracle.H_norm[i] &&
                        mine.N_norm[i] == oracle.N_norm[i] && mine.hqs[i] == oracle.hqs[i];
            }
            exact = exact && select_timesteps(mine, -0.5).steps ==
                                 select_timesteps(oracle, -0.5).steps;
        }
        detail = "bit-exact, both normalization orders";
        return exact;
    });

    criterion(6, "teacher-quality", 180.0, [&](std::string& detail) {
        const Denoiser& teacher = fx.two();
        double worst = 1.0;
        for (int cond = 0; cond < 2; ++cond) {
            const int n = 500;
            int hits = 0;
            RngStream rng(200 + static_cast<std::uint64_t>(cond));
            for (int i = 0; i < n; ++i) {
                RngStream sample_rng = rng.fork(static_cast<std::uint64_t>(i));
                const DenseArray x =
                    reverse_sample(teacher, fx.schedule, ConditionId(cond), sample_rng);
                const int nearest = x[0] < 0.0 ? 0 : 1;
                if (nearest == cond) ++hits;
            }
            worst = std::min(worst, hits / static_cast<double>(n));
        }
        detail = fmt("nearest-mode accuracy %.3f (500/cond)", worst);
        return worst >= 0.90;
    });

    criterion(5, "selection-invariance", 10.0, [&](std::string& detail) {
        HqsParams params;  // defaults: 64 samples, 8 eps
        const RngStream rng = RngStream(1).fork(1);
        const HQSProfile base = hqs_profile(fx.two(), fx.schedule, fx.two_world, ConditionId(0),
                                            ConditionId(1), params, rng);

        // L1 is positively homogeneous: a 3.7x gradient scale multiplies the
        // raw N array by exactly 3.7 and leaves N_norm unchanged.
        HqsParams scaled_params = params;
        scaled_params.grad_scale = 3.7;
        const HQSProfile scaled_grads = hqs_profile(fx.two(), fx.schedule, fx.two_world,
                                                    ConditionId(0), ConditionId(1),
                                                    scaled_params, rng);
        bool n_side = true;
        for (std::size_t i = 0; i < base.N.size(); ++i) {
            n_side = n_side && std::abs(scaled_grads.N[i] - 3.7 * base.N[i]) <=
                                   1e-12 * std::abs(3.7 * base.N[i]);
            n_side = n_side && std::abs(scaled_grads.N_norm[i] - base.N_norm[i]) < 1e-12;
        }

        // Selection depends on the scores only through order and threshold:
        // scaling the raw statistics by 3.7 before normalization leaves the
        // selected set and the argmax bit-identical.
        HQSProfile rescaled = base;
        for (std::size_t i = 0; i < rescaled.H.size(); ++i) {
            rescaled.H[i] *= 3.7;
            rescaled.N[i] *= 3.7;
        }
        rescaled.H_norm = minmax_normalize(rescaled.H);
        rescaled.N_norm = minmax_normalize(rescaled.N);
        for (std::size_t i = 0; i < rescaled.hqs.size(); ++i) {
            rescaled.hqs[i] = rescaled.N_norm[i] - rescaled.H_norm[i];
        }

        const TimestepSet s_base = select_timesteps(base, 0.0);
        const TimestepSet s_rescaled = select_timesteps(rescaled, 0.0);
        const bool set_equal = s_base.steps == s_rescaled.steps;
        const bool top_equal = Strategy::largest_hqs(base).best_t() ==
                               Strategy::largest_hqs(rescaled).best_t();

        detail = fmt("N-side exact, |S|=%.0f stable, top1=%.0f",
                     static_cast<double>(s_base.steps.size()),
                     static_cast<double>(Strategy::largest_hqs(base).best_t()));
        return n_side && set_equal && top_equal;
    });

    criterion(7, "tradeoff-reproduction", 180.0, [&](std::string& detail) {
        const auto& curve = fx.curve();
        std::vector<double> alphas, aligns, fids;
        for (const TradeoffPoint& p : curve) {
            alphas.push_back(p.alpha);
            aligns.push_back(p.alignment);
            fids.push_back(p.fidelity_rmse);
        }
        const double rho_align = spearman_correlation(alphas, aligns);
        const double rho_fid = spearman_correlation(alphas, fids);
        detail = fmt("spearman align=%.3f fid=%.3f", rho_align, rho_fid);
        return rho_align >= 0.8 && rho_fid >= 0.8;
    });

    criterion(8, "ablation-ordering", 1200.0, [&](std::string& detail) {
        const Denoiser& teacher = fx.ring();
        HqsParams hp;
        const HQSProfile profile =
            hqs_profile(teacher, fx.schedule, fx.ring_world, ConditionId(0), ConditionId(2), hp,
                        RngStream(1).fork(1));
        const TimestepSet s_large = select_timesteps(profile, 0.9);

        const std::vector<NamedStrategy> strategies = {
            {"largest-hqs", Strategy::largest_hqs(profile)},
            {"selected", Strategy::selected(s_large)},
            {"random", Strategy::random()},
        };
        const AblationReport report = run_ablation(
            fx.ring_world, teacher, fx.schedule, ConditionId(0), ConditionId(2), strategies,
            {1, 2, 3, 4, 5}, experiment_distill_config(), 200);

        auto mean_alignment = [&](const std::string& tag) {
            double acc = 0.0;
            int count = 0;
            for (const AblationRow& row : report.rows) {
                if (row.strategy == tag) {
                    acc += row.alignment;
                    ++count;
                }
            }
            return acc / count;
        };
        const double largest = mean_alignment("largest-hqs");
        const double selected = mean_alignment("selected");
        const double random = mean_alignment("random");
        detail = fmt("largest=%.3f selected=%.3f random=%.3f", largest, selected, random);
        return largest >= selected && selected >= random && largest - random >= 0.1;
    });

    criterion(9, "distillation-dominance", 600.0, [&](std::string& detail) {
        const Denoiser& teacher = fx.two();
        HqsParams hp;
        const HQSProfile profile =
            hqs_profile(teacher, fx.schedule, fx.two_world, ConditionId(0), ConditionId(1), hp,
                        RngStream(1).fork(1));
        const Strategy strategy = Strategy::selected(select_timesteps(profile, 0.0));
        const auto& curve = fx.curve();

        bool all_dominate = true;
        double min_align = 1.0, max_fid = 0.0;
        for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
            const DistillResult trained =
                train_manipulator(fx.two_world, teacher, fx.schedule, ConditionId(0),
                                  ConditionId(1), strategy, experiment_distill_config(),
                                  RngStream(seed));
            RngStream held = RngStream(seed).fork(1000);
            const LabeledBatch batch = sample_world(fx.two_world, ConditionId(0), 200, held);
            const DenseArray outputs = manipulate_batch(trained.manipulator, batch.samples);
            const double align = alignment_score(fx.two_world, outputs, ConditionId(1));
            const double fid = fidelity_rmse(batch.samples, outputs, fx.two_world);

            double best_baseline = 0.0;
            for (const TradeoffPoint& p : curve) {
                if (p.fidelity_rmse <= fid) best_baseline = std::max(best_baseline, p.alignment);
            }
            all_dominate = all_dominate && align >= best_baseline;
            min_align = std::min(min_align, align);
            max_fid = std::max(max_fid, fid);
        }
        detail = fmt("manipulator align>=%.3f at fid<=%.3f beats baseline", min_align, max_fid);
        return all_dominate;
    });

    criterion(10, "cost-model", 1.0, [&](std::string& detail) {
        const CostParams reference{0, 1, 1000.0, 2400.0, 0.25};
        const double threshold = break_even_m(reference);

        const CostParams table{100, 10, 2.215, 0.0, 0.0};
        const double sdedit_total = cost_diffusion(table);

        detail = fmt("break_even=%.4f, diffusion total=%.0f", threshold, sdedit_total);
        return std::abs(threshold - 2.4006) <= 0.001 && sdedit_total == 2215.0;
    });

    criterion(11, "pipeline-determinism", 1500.0, [&](std::string& detail) {
        const fs::path root = fs::temp_directory_path() / "sdd_acceptance";
        fs::remove_all(root);
        fs::create_directories(root);

        auto config_for = [&](const fs::path& out, int threads) {
            nlohmann::json doc = {
                {"seed", 1},
                {"out_dir", out.string()},
                {"schedule", {{"T", 40}, {"beta_min", 1e-4}, {"beta_max", 0.03}}},
                {"denoiser", {{"iterations", 400}, {"batch", 32}, {"hidden", {32, 32}}}},
                {"hqs", {{"n_samples", 8}, {"n_eps", 2}, {"threads", threads}}},
                {"distill", {{"iterations", 150}, {"batch", 16}, {"hidden", {16, 16, 16}},
                             {"strategy", "largest-hqs"}}},
                {"eval", {{"alpha_grid", {0.0, 0.5, 1.0}}, {"seeds", {1, 2}}, {"samples", 64},
                          {"strategies", {"largest-hqs", "random"}}}},
            };
            const fs::path cfg = root / (out.filename().string() + ".json");
            std::ofstream f(cfg);
            f << doc.dump(2);
            return cfg;
        };

        struct Variant {
            const char* tag;
            int threads;
        };
        const Variant variants[] = {{"a", 1}, {"b", 1}, {"c", 4}};
        for (const Variant& v : variants) {
            const fs::path out = root / v.tag;
            const fs::path cfg = config_for(out, v.threads);
            for (const std::string cmd :
                 {"train-denoiser", "score-hqs", "distill", "ablation"}) {
                if (!run_cli(cmd + " --config " + cfg.string(),
                             root / (std::string(v.tag) + "_" + cmd + ".log"))) {
                    detail = "pipeline command failed: " + cmd;
                    return false;
                }
            }
        }

        for (const std::string name :
             {"profile.csv", "history.csv", "ablation.csv", "denoiser.json",
              "manipulator.json"}) {
            const std::string a = read_text(root / "a" / name);
            if (a.empty() || a != read_text(root / "b" / name) ||
                a != read_text(root / "c" / name)) {
                detail = "mismatch in " + name;
                return false;
            }
        }
        detail = "2 runs + threads {1,4}: byte-identical artifacts";
        return true;
    });

    std::sort(g_results.begin(), g_results.end(),
              [](const CriterionResult& a, const CriterionResult& b) {
                  return a.number < b.number;
              });
    int failures = 0;
    std::printf("\n==== acceptance summary ====\n");
    for (const CriterionResult& r : g_results) {
        std::printf("%s %2d. %s\n", r.pass ? "PASS" : "FAIL", r.number, r.name.c_str());
        if (!r.pass) ++failures;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(g_results.size()) - failures,
                g_results.size());
    return failures == 0 ? 0 : 1;
}
