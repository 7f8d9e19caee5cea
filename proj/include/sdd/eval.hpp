#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdd/denoiser.hpp"
#include "sdd/distill.hpp"
#include "sdd/world.hpp"

namespace sdd {

// Frechet distance between Gaussians fitted to two n x D sample sets:
// |mu_a - mu_b|^2 + tr(Sa + Sb - 2 (Sa Sb)^{1/2}).
// Covariances get a 1e-8 I ridge; the matrix square root uses a symmetric
// eigendecomposition.
double frechet_gaussian(const DenseArray& a, const DenseArray& b);

// Noise y to t* = round(alpha T), then denoise back conditioned on target.
// alpha = 0 returns y unchanged.
DenseArray noise_denoise_edit(const Denoiser& d, const NoiseSchedule& s, const DenseArray& y,
                              ConditionId target, double alpha, RngStream& rng);

struct TradeoffPoint {
    double alpha = 0.0;
    double alignment = 0.0;
    double fidelity_rmse = 0.0;
    double frechet = 0.0;
};

std::vector<TradeoffPoint> tradeoff_curve(const Denoiser& d, const NoiseSchedule& s,
                                          const MixtureWorld& w, ConditionId source,
                                          ConditionId target,
                                          const std::vector<double>& alpha_list, std::size_t n,
                                          const RngStream& rng);

struct CostParams {
    std::int64_t images_per_prompt = 0;  // m
    std::int64_t prompts = 0;            // n
    double tau_diff_infer = 0.0;
    double tau_sdd_train = 0.0;
    double tau_sdd_infer = 0.0;

    void validate() const;
};

double cost_diffusion(const CostParams& p);
double cost_sdd(const CostParams& p);

// m beyond which per-prompt distillation wins:
// tau_sdd_train / (tau_diff_infer - tau_sdd_infer).
double break_even_m(const CostParams& p);

struct AblationRow {
    std::string strategy;
    std::uint64_t seed = 0;
    double alignment = 0.0;
    double fidelity_rmse = 0.0;
    double frechet = 0.0;
    int iterations = 0;
};

struct AblationReport {
    std::vector<AblationRow> rows;
};

struct NamedStrategy {
    std::string tag;
    Strategy strategy;
};

// One manipulator per (strategy, seed) with identical config, each evaluated
// on a held-out source batch shared across strategies at the same seed.
AblationReport run_ablation(const MixtureWorld& w, const Denoiser& d, const NoiseSchedule& s,
                            ConditionId source, ConditionId target,
                            const std::vector<NamedStrategy>& strategies,
                            const std::vector<std::uint64_t>& seeds, const DistillConfig& cfg,
                            std::size_t eval_samples);

// Spearman rank correlation with average ranks on ties.
double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace sdd
