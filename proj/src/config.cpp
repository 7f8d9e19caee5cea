#include "sdd/config.hpp"

#include <algorithm>
#include <cstdio>

#include "sdd/errors.hpp"
#include "sdd/serialize.hpp"

namespace sdd {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::string& scope,
                         const std::vector<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            const std::string where = scope.empty() ? key : scope + "." + key;
            throw ConfigError("unknown config key '" + where + "'");
        }
    }
}

template <typename T>
T get_field(const json& obj, const std::string& scope, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + (scope.empty() ? key : scope + "." + key) +
                          "' has the wrong type");
    }
}

void parse_world(const json& obj, WorldSpec& spec) {
    reject_unknown_keys(obj, "world", {"layout", "dim", "separation", "std", "conditions"});
    spec.layout = layout_from_name(get_field<std::string>(obj, "world", "layout",
                                                          layout_name(spec.layout)));
    spec.dim = get_field<std::size_t>(obj, "world", "dim", spec.dim);
    spec.separation = get_field<double>(obj, "world", "separation", spec.separation);
    spec.std_dev = get_field<double>(obj, "world", "std", spec.std_dev);
    spec.conditions = get_field<std::size_t>(obj, "world", "conditions", spec.conditions);
}

void parse_schedule(const json& obj, ScheduleSpec& spec) {
    reject_unknown_keys(obj, "schedule", {"T", "beta_min", "beta_max"});
    spec.T = get_field<int>(obj, "schedule", "T", spec.T);
    spec.beta_min = get_field<double>(obj, "schedule", "beta_min", spec.beta_min);
    spec.beta_max = get_field<double>(obj, "schedule", "beta_max", spec.beta_max);
    if (spec.T < 2) throw ConfigError("schedule.T must be >= 2");
    if (!(spec.beta_min > 0.0)) throw ConfigError("schedule.beta_min must be > 0");
    if (spec.beta_min > spec.beta_max) {
        throw ConfigError("schedule.beta_min must not exceed schedule.beta_max");
    }
    if (!(spec.beta_max < 1.0)) throw ConfigError("schedule.beta_max must be < 1");
}

void parse_denoiser(const json& obj, DenoiserTrainConfig& cfg) {
    reject_unknown_keys(obj, "denoiser",
                        {"hidden", "time_frequencies", "cond_dim", "iterations", "batch", "lr",
                         "clip_norm"});
    cfg.hidden = get_field<std::vector<std::size_t>>(obj, "denoiser", "hidden", cfg.hidden);
    cfg.time_frequencies = get_field<int>(obj, "denoiser", "time_frequencies",
                                          cfg.time_frequencies);
    cfg.cond_dim = get_field<std::size_t>(obj, "denoiser", "cond_dim", cfg.cond_dim);
    cfg.iterations = get_field<int>(obj, "denoiser", "iterations", cfg.iterations);
    cfg.batch = get_field<std::size_t>(obj, "denoiser", "batch", cfg.batch);
    cfg.lr = get_field<double>(obj, "denoiser", "lr", cfg.lr);
    if (obj.contains("clip_norm") && !obj.at("clip_norm").is_null()) {
        cfg.clip_norm = get_field<double>(obj, "denoiser", "clip_norm", 1.0);
    }
    if (cfg.iterations < 0) throw ConfigError("denoiser.iterations must be >= 0");
    if (cfg.batch == 0) throw ConfigError("denoiser.batch must be >= 1");
    if (!(cfg.lr > 0.0)) throw ConfigError("denoiser.lr must be > 0");
    if (cfg.time_frequencies < 1) throw ConfigError("denoiser.time_frequencies must be >= 1");
    if (cfg.cond_dim == 0) throw ConfigError("denoiser.cond_dim must be >= 1");
}

void parse_edit(const json& obj, EditSpec& spec) {
    reject_unknown_keys(obj, "edit", {"source_condition", "target_condition"});
    spec.source_condition = get_field<int>(obj, "edit", "source_condition",
                                           spec.source_condition);
    if (obj.contains("target_condition")) {
        spec.target_condition = get_field<int>(obj, "edit", "target_condition", 0);
    }
}

void parse_hqs(const json& obj, HqsSpec& spec) {
    reject_unknown_keys(obj, "hqs",
                        {"n_samples", "n_eps", "xi", "top_k", "normalize_per_sample",
                         "threads"});
    spec.n_samples = get_field<int>(obj, "hqs", "n_samples", spec.n_samples);
    spec.n_eps = get_field<int>(obj, "hqs", "n_eps", spec.n_eps);
    if (obj.contains("xi") && !obj.at("xi").is_null()) {
        spec.xi = get_field<double>(obj, "hqs", "xi", 0.0);
    }
    if (obj.contains("top_k") && !obj.at("top_k").is_null()) {
        spec.top_k = get_field<int>(obj, "hqs", "top_k", 1);
    }
    spec.normalize_per_sample = get_field<bool>(obj, "hqs", "normalize_per_sample",
                                                spec.normalize_per_sample);
    spec.threads = get_field<int>(obj, "hqs", "threads", spec.threads);

    if (spec.xi && spec.top_k) {
        throw ConfigError("hqs.xi and hqs.top_k are mutually exclusive");
    }
    if (spec.n_samples < 1) throw ConfigError("hqs.n_samples must be >= 1");
    if (spec.n_eps < 1) throw ConfigError("hqs.n_eps must be >= 1");
    if (spec.threads < 1) throw ConfigError("hqs.threads must be >= 1");
}

void parse_distill(const json& obj, DistillSpec& spec) {
    reject_unknown_keys(obj, "distill",
                        {"iterations", "lr", "lambda_reg", "clip_norm", "batch", "weight_rule",
                         "hidden", "strategy", "fixed_t"});
    DistillConfig& cfg = spec.config;
    cfg.iterations = get_field<int>(obj, "distill", "iterations", cfg.iterations);
    cfg.lr = get_field<double>(obj, "distill", "lr", cfg.lr);
    cfg.lambda_reg = get_field<double>(obj, "distill", "lambda_reg", cfg.lambda_reg);
    if (obj.contains("clip_norm")) {
        if (obj.at("clip_norm").is_null()) {
            cfg.clip_norm.reset();
        } else {
            cfg.clip_norm = get_field<double>(obj, "distill", "clip_norm", 1.0);
        }
    }
    cfg.batch = get_field<std::size_t>(obj, "distill", "batch", cfg.batch);
    cfg.weight_rule = weight_rule_from_name(
        get_field<std::string>(obj, "distill", "weight_rule", weight_rule_name(cfg.weight_rule)));
    cfg.hidden = get_field<std::vector<std::size_t>>(obj, "distill", "hidden", cfg.hidden);
    spec.strategy = get_field<std::string>(obj, "distill", "strategy", spec.strategy);
    spec.fixed_t = get_field<int>(obj, "distill", "fixed_t", spec.fixed_t);

    if (cfg.iterations < 0) throw ConfigError("distill.iterations must be >= 0");
    if (cfg.batch == 0) throw ConfigError("distill.batch must be >= 1");
    if (cfg.lambda_reg < 0.0) throw ConfigError("distill.lambda_reg must be >= 0");
    static const std::vector<std::string> kStrategies = {"selected", "random", "descending",
                                                         "fixed", "largest-hqs"};
    if (std::find(kStrategies.begin(), kStrategies.end(), spec.strategy) == kStrategies.end()) {
        throw ConfigError("distill.strategy '" + spec.strategy + "' is not one of "
                          "selected|random|descending|fixed|largest-hqs");
    }
}

void parse_eval(const json& obj, EvalSpec& spec) {
    reject_unknown_keys(obj, "eval", {"alpha_grid", "seeds", "samples", "strategies"});
    spec.alpha_grid = get_field<std::vector<double>>(obj, "eval", "alpha_grid", spec.alpha_grid);
    spec.seeds = get_field<std::vector<std::uint64_t>>(obj, "eval", "seeds", spec.seeds);
    spec.samples = get_field<std::size_t>(obj, "eval", "samples", spec.samples);
    spec.strategies = get_field<std::vector<std::string>>(obj, "eval", "strategies",
                                                          spec.strategies);
    for (double a : spec.alpha_grid) {
        if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("eval.alpha_grid entries must be in [0,1]");
    }
    if (spec.samples == 0) throw ConfigError("eval.samples must be >= 1");
    if (spec.alpha_grid.empty()) throw ConfigError("eval.alpha_grid must be nonempty");
    if (spec.seeds.empty()) throw ConfigError("eval.seeds must be nonempty");
}

void parse_cost(const json& obj, CostSpec& spec) {
    reject_unknown_keys(obj, "cost",
                        {"m", "n", "tau_diff_infer", "tau_sdd_train", "tau_sdd_infer"});
    spec.params.images_per_prompt = get_field<std::int64_t>(obj, "cost", "m",
                                                            spec.params.images_per_prompt);
    spec.params.prompts = get_field<std::int64_t>(obj, "cost", "n", spec.params.prompts);
    spec.params.tau_diff_infer = get_field<double>(obj, "cost", "tau_diff_infer",
                                                   spec.params.tau_diff_infer);
    spec.params.tau_sdd_train = get_field<double>(obj, "cost", "tau_sdd_train",
                                                  spec.params.tau_sdd_train);
    spec.params.tau_sdd_infer = get_field<double>(obj, "cost", "tau_sdd_infer",
                                                  spec.params.tau_sdd_infer);
    spec.params.validate();
}

}  // namespace

MixtureWorld WorldSpec::build() const {
    return make_world(layout, dim, separation, std_dev, conditions);
}

NoiseSchedule ScheduleSpec::build() const { return make_schedule(T, beta_min, beta_max); }

ConditionId EditSpec::target(const WorldSpec& world) const {
    if (target_condition) return ConditionId(*target_condition);
    if (world.layout == WorldLayout::two_mode) return ConditionId(1);
    const int quarter = static_cast<int>(world.conditions / 4);
    return ConditionId(std::max(1, quarter));
}

HqsParams HqsSpec::params() const {
    HqsParams p;
    p.n_samples = n_samples;
    p.n_eps = n_eps;
    p.normalize_per_sample = normalize_per_sample;
    p.threads = threads;
    return p;
}

RunConfig parse_config_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    reject_unknown_keys(doc, "",
                        {"seed", "out_dir", "world", "schedule", "denoiser", "edit", "hqs",
                         "distill", "eval", "cost"});

    RunConfig cfg;
    cfg.seed = get_field<std::uint64_t>(doc, "", "seed", cfg.seed);
    cfg.out_dir = get_field<std::string>(doc, "", "out_dir", cfg.out_dir);

    if (doc.contains("world")) parse_world(doc.at("world"), cfg.world);
    if (doc.contains("schedule")) parse_schedule(doc.at("schedule"), cfg.schedule);
    if (doc.contains("denoiser")) parse_denoiser(doc.at("denoiser"), cfg.denoiser);
    if (doc.contains("edit")) parse_edit(doc.at("edit"), cfg.edit);
    if (doc.contains("hqs")) parse_hqs(doc.at("hqs"), cfg.hqs);
    if (doc.contains("distill")) parse_distill(doc.at("distill"), cfg.distill);
    if (doc.contains("eval")) parse_eval(doc.at("eval"), cfg.eval);
    if (doc.contains("cost")) parse_cost(doc.at("cost"), cfg.cost);

    // Cross-section checks that need the final world.
    cfg.world.build();
    if (cfg.edit.source_condition < 0 ||
        static_cast<std::size_t>(cfg.edit.source_condition) >= cfg.world.conditions) {
        throw ConfigError("edit.source_condition out of range for the world");
    }
    if (cfg.edit.target_condition &&
        (*cfg.edit.target_condition < 0 ||
         static_cast<std::size_t>(*cfg.edit.target_condition) >= cfg.world.conditions)) {
        throw ConfigError("edit.target_condition out of range for the world");
    }
    if (cfg.distill.strategy == "fixed" &&
        (cfg.distill.fixed_t < 1 || cfg.distill.fixed_t > cfg.schedule.T)) {
        throw ConfigError("distill.fixed_t out of range for schedule.T");
    }
    return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw ConfigError("config file not found: " + path.string());
    }
    nlohmann::json doc = nlohmann::json::parse(read_text(path), nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config is not valid JSON: " + path.string());
    return parse_config_json(doc);
}

std::string RunConfig::canonical_json() const {
    nlohmann::json doc;
    doc["seed"] = seed;
    doc["out_dir"] = out_dir;
    doc["world"] = {{"layout", layout_name(world.layout)},
                    {"dim", world.dim},
                    {"separation", world.separation},
                    {"std", world.std_dev},
                    {"conditions", world.conditions}};
    doc["schedule"] = {{"T", schedule.T},
                       {"beta_min", schedule.beta_min},
                       {"beta_max", schedule.beta_max}};
    doc["denoiser"] = {{"hidden", denoiser.hidden},
                       {"time_frequencies", denoiser.time_frequencies},
                       {"cond_dim", denoiser.cond_dim},
                       {"iterations", denoiser.iterations},
                       {"batch", denoiser.batch},
                       {"lr", denoiser.lr}};
    if (denoiser.clip_norm) doc["denoiser"]["clip_norm"] = *denoiser.clip_norm;
    doc["edit"] = {{"source_condition", edit.source_condition}};
    if (edit.target_condition) doc["edit"]["target_condition"] = *edit.target_condition;
    doc["hqs"] = {{"n_samples", hqs.n_samples},
                  {"n_eps", hqs.n_eps},
                  {"normalize_per_sample", hqs.normalize_per_sample},
                  {"threads", hqs.threads}};
    if (hqs.xi) doc["hqs"]["xi"] = *hqs.xi;
    if (hqs.top_k) doc["hqs"]["top_k"] = *hqs.top_k;
    doc["distill"] = {{"iterations", distill.config.iterations},
                      {"lr", distill.config.lr},
                      {"lambda_reg", distill.config.lambda_reg},
                      {"batch", distill.config.batch},
                      {"weight_rule", weight_rule_name(distill.config.weight_rule)},
                      {"hidden", distill.config.hidden},
                      {"strategy", distill.strategy},
                      {"fixed_t", distill.fixed_t}};
    if (distill.config.clip_norm) doc["distill"]["clip_norm"] = *distill.config.clip_norm;
    doc["eval"] = {{"alpha_grid", eval.alpha_grid},
                   {"seeds", eval.seeds},
                   {"samples", eval.samples},
                   {"strategies", eval.strategies}};
    doc["cost"] = {{"m", cost.params.images_per_prompt},
                   {"n", cost.params.prompts},
                   {"tau_diff_infer", cost.params.tau_diff_infer},
                   {"tau_sdd_train", cost.params.tau_sdd_train},
                   {"tau_sdd_infer", cost.params.tau_sdd_infer}};
    return doc.dump();
}

std::string config_hash(const RunConfig& cfg) {
    // FNV-1a 64 over the canonical bytes.
    const std::string bytes = cfg.canonical_json();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace sdd
