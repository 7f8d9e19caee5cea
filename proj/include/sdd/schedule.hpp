#pragma once

#include <vector>

#include "sdd/array.hpp"

namespace sdd {

// Variance schedule of the forward process. Timesteps are indexed 1..T; the
// accessors take that 1-based index.
class NoiseSchedule {
public:
    NoiseSchedule() = default;
    NoiseSchedule(double beta_min, double beta_max, std::vector<double> betas);

    int horizon() const { return static_cast<int>(betas_.size()); }
    double beta_min() const { return beta_min_; }
    double beta_max() const { return beta_max_; }

    double beta(int t) const { return betas_[index(t)]; }
    double alpha(int t) const { return alphas_[index(t)]; }
    double alpha_bar(int t) const { return alpha_bars_[index(t)]; }

    // alpha_bar(0) = 1 by convention.
    double alpha_bar_prev(int t) const { return t <= 1 ? 1.0 : alpha_bars_[index(t - 1)]; }

    void check_timestep(int t) const;

private:
    std::size_t index(int t) const;

    double beta_min_ = 0.0;
    double beta_max_ = 0.0;
    std::vector<double> betas_;
    std::vector<double> alphas_;
    std::vector<double> alpha_bars_;
};

// Linear beta ramp from beta_min at t=1 to beta_max at t=T.
NoiseSchedule make_schedule(int T, double beta_min, double beta_max);

// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps
DenseArray forward_sample(const NoiseSchedule& s, const DenseArray& x0, int t,
                          const DenseArray& eps);

struct PosteriorStats {
    DenseArray mean;
    double variance = 0.0;
};

// Mean and variance of the reverse-step posterior given the predicted noise.
PosteriorStats posterior_stats(const NoiseSchedule& s, const DenseArray& x_t,
                               const DenseArray& eps_hat, int t);

}  // namespace sdd
