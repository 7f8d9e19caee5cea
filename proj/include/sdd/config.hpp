#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdd/denoiser.hpp"
#include "sdd/distill.hpp"
#include "sdd/eval.hpp"
#include "sdd/hqs.hpp"
#include "sdd/world.hpp"

namespace sdd {

struct WorldSpec {
    WorldLayout layout = WorldLayout::two_mode;
    std::size_t dim = 2;
    double separation = 4.0;
    double std_dev = 0.3;
    std::size_t conditions = 2;

    MixtureWorld build() const;
};

struct ScheduleSpec {
    int T = 100;
    double beta_min = 1e-4;
    double beta_max = 0.02;

    NoiseSchedule build() const;
};

struct EditSpec {
    int source_condition = 0;
    // Defaults to 1 on two-mode worlds and to a quarter turn on ring worlds.
    std::optional<int> target_condition;

    ConditionId source() const { return ConditionId(source_condition); }
    ConditionId target(const WorldSpec& world) const;
};

struct HqsSpec {
    int n_samples = 64;
    int n_eps = 8;
    std::optional<double> xi;  // threshold selection; default 0 when top_k unset
    std::optional<int> top_k;  // mutually exclusive with xi
    bool normalize_per_sample = false;
    int threads = 1;

    HqsParams params() const;
    double threshold_or_default() const { return xi.value_or(0.0); }
};

struct DistillSpec {
    DistillConfig config;
    std::string strategy = "selected";
    int fixed_t = 1;
};

struct EvalSpec {
    std::vector<double> alpha_grid = {0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::size_t samples = 200;
    std::vector<std::string> strategies = {"largest-hqs", "selected", "random"};
};

struct CostSpec {
    CostParams params{100, 10, 1000.0, 2400.0, 0.25};
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "runs/out";
    WorldSpec world;
    ScheduleSpec schedule;
    DenoiserTrainConfig denoiser;
    EditSpec edit;
    HqsSpec hqs;
    DistillSpec distill;
    EvalSpec eval;
    CostSpec cost;

    // Canonical bytes the config hash is computed from.
    std::string canonical_json() const;
};

RunConfig parse_config_json(const nlohmann::json& doc);
RunConfig parse_config(const std::filesystem::path& path);

std::string config_hash(const RunConfig& cfg);

}  // namespace sdd
