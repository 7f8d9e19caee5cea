#pragma once

#include <string>
#include <vector>

#include "sdd/denoiser.hpp"
#include "sdd/rng.hpp"
#include "sdd/schedule.hpp"
#include "sdd/world.hpp"

namespace sdd {

// Gradient of the denoising loss with respect to the clean input, at one
// timestep and condition.
struct GradientMap {
    DenseArray d;
    int t = 0;
    ConditionId cond;
};

// Full input gradient of |eps - eps_theta(sqrt(ab) y + sqrt(1-ab) eps, t, c)|^2
// with respect to y, through the denoiser Jacobian and the sqrt(ab) chain
// factor.
GradientMap input_gradient(const Denoiser& d, const NoiseSchedule& s, const DenseArray& y,
                           int t, ConditionId cond, const DenseArray& eps);

// Softmax over the signed gradient entries, stabilized by max subtraction.
DenseArray confidence_map(const GradientMap& g);

// Natural-log entropy of a probability vector, with 0 log 0 = 0.
double step_entropy(const DenseArray& p);

// L1 mass of the gradient map.
double step_l1(const GradientMap& g);

// (v - min) / (max - min); a constant input maps to all zeros.
std::vector<double> minmax_normalize(const std::vector<double>& v);

// Per-timestep score profile for one manipulation target. hqs = N_norm - H_norm.
struct HQSProfile {
    ConditionId cond;
    std::vector<double> H;
    std::vector<double> N;
    std::vector<double> H_norm;
    std::vector<double> N_norm;
    std::vector<double> hqs;
    int sample_count = 0;
    int eps_count = 0;

    int horizon() const { return static_cast<int>(hqs.size()); }
};

struct HqsParams {
    int n_samples = 64;
    int n_eps = 8;
    // false: average raw H_t/N_t over (y, eps), then normalize across t.
    // true: normalize across t within each sample, then average.
    bool normalize_per_sample = false;
    int threads = 1;
    // Multiplies every gradient map before scoring. Diagnostics knob.
    double grad_scale = 1.0;
};

HQSProfile hqs_profile(const Denoiser& d, const NoiseSchedule& s, const MixtureWorld& w,
                       ConditionId source, ConditionId target, const HqsParams& params,
                       const RngStream& rng);

enum class SelectionOrigin { threshold, top_k };

struct TimestepSet {
    std::vector<int> steps;  // sorted ascending
    SelectionOrigin origin = SelectionOrigin::threshold;
    double xi = 0.0;
    int k = 0;

    bool contains(int t) const;
};

// S = { t : hqs_t > xi }, strict inequality.
TimestepSet select_timesteps(const HQSProfile& p, double xi);

// k timesteps with the largest hqs; ties break toward smaller t.
TimestepSet top_k(const HQSProfile& p, int k);

}  // namespace sdd
