#pragma once

#include <optional>
#include <vector>

#include "sdd/adam.hpp"
#include "sdd/array.hpp"
#include "sdd/mlp.hpp"
#include "sdd/rng.hpp"
#include "sdd/schedule.hpp"
#include "sdd/world.hpp"

namespace sdd {

// Sinusoidal timestep features: [sin(t w_k), cos(t w_k)] for F geometric
// frequencies w_k.
struct TimeEmbedding {
    int frequencies = 8;

    std::size_t feature_count() const { return 2 * static_cast<std::size_t>(frequencies); }
    DenseArray embed(int t) const;
};

// Conditional noise predictor. The trunk consumes
// [x_t (D) | timestep features (2F) | condition embedding (E)] and outputs a
// D-vector; the condition table is learned alongside the trunk.
class Denoiser {
public:
    Denoiser() = default;
    Denoiser(Mlp trunk, std::vector<DenseArray> cond_table, TimeEmbedding temb, int horizon);

    const Mlp& trunk() const { return trunk_; }
    Mlp& trunk() { return trunk_; }
    const std::vector<DenseArray>& cond_table() const { return cond_table_; }
    std::vector<DenseArray>& cond_table() { return cond_table_; }
    const TimeEmbedding& time_embedding() const { return temb_; }
    int horizon() const { return horizon_; }

    std::size_t data_dim() const { return trunk_.output_dim(); }
    std::size_t cond_dim() const { return cond_table_.empty() ? 0 : cond_table_[0].size(); }
    std::size_t condition_count() const { return cond_table_.size(); }

    void check_condition(ConditionId c) const;

    // Trunk input vector for (x_t, t, cond).
    DenseArray assemble_input(const DenseArray& x_t, int t, ConditionId cond) const;

private:
    Mlp trunk_;
    std::vector<DenseArray> cond_table_;
    TimeEmbedding temb_;
    int horizon_ = 0;
};

DenseArray predict_eps(const Denoiser& d, const DenseArray& x_t, int t, ConditionId cond);

struct DenoiserGrads {
    std::vector<Layer> trunk;
    std::vector<DenseArray> cond_table;  // full table, zero rows for inactive conditions
};

// Squared-residual denoising loss at one (x0, t, eps) triple, with gradients
// for every denoiser parameter.
std::pair<double, DenoiserGrads> elbo_step(const Denoiser& d, const NoiseSchedule& s,
                                           const DenseArray& x0, int t, ConditionId cond,
                                           const DenseArray& eps);

struct DenoiserTrainConfig {
    std::vector<std::size_t> hidden = {64, 64, 64};
    int time_frequencies = 8;
    std::size_t cond_dim = 8;
    int iterations = 5000;
    std::size_t batch = 128;
    double lr = 1e-3;
    std::optional<double> clip_norm;
};

struct DenoiserTraining {
    Denoiser denoiser;
    std::vector<double> losses;  // mean batch loss per iteration
};

Denoiser init_denoiser(const MixtureWorld& w, const NoiseSchedule& s,
                       const DenoiserTrainConfig& cfg, RngStream& rng);

DenoiserTraining train_denoiser(const MixtureWorld& w, const NoiseSchedule& s,
                                const DenoiserTrainConfig& cfg, RngStream rng);

// Ancestral sampling from x_T ~ N(0, I) down to x_0, conditioned on cond.
DenseArray reverse_sample(const Denoiser& d, const NoiseSchedule& s, ConditionId cond,
                          RngStream& rng);

}  // namespace sdd
