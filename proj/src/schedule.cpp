#include "sdd/schedule.hpp"

#include <cmath>
#include <string>

#include "sdd/errors.hpp"

namespace sdd {

NoiseSchedule::NoiseSchedule(double beta_min, double beta_max, std::vector<double> betas)
    : beta_min_(beta_min), beta_max_(beta_max), betas_(std::move(betas)) {
    alphas_.reserve(betas_.size());
    alpha_bars_.reserve(betas_.size());
    double running = 1.0;
    for (double b : betas_) {
        const double a = 1.0 - b;
        running *= a;
        alphas_.push_back(a);
        alpha_bars_.push_back(running);
    }
}

void NoiseSchedule::check_timestep(int t) const {
    if (t < 1 || t > horizon()) {
        throw IndexError("timestep " + std::to_string(t) + " outside 1.." +
                         std::to_string(horizon()));
    }
}

std::size_t NoiseSchedule::index(int t) const {
    check_timestep(t);
    return static_cast<std::size_t>(t - 1);
}

NoiseSchedule make_schedule(int T, double beta_min, double beta_max) {
    if (T < 2) throw ConfigError("schedule.T must be >= 2");
    if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 1.0)) {
        throw ConfigError("schedule betas must satisfy 0 < beta_min <= beta_max < 1");
    }
    std::vector<double> betas(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        betas[static_cast<std::size_t>(t)] =
            beta_min + (beta_max - beta_min) * static_cast<double>(t) /
                           static_cast<double>(T - 1);
    }
    return NoiseSchedule(beta_min, beta_max, std::move(betas));
}

DenseArray forward_sample(const NoiseSchedule& s, const DenseArray& x0, int t,
                          const DenseArray& eps) {
    s.check_timestep(t);
    require_same_shape(x0, eps, "forward_sample");
    const double a = std::sqrt(s.alpha_bar(t));
    const double b = std::sqrt(1.0 - s.alpha_bar(t));
    DenseArray x_t = x0;
    for (std::size_t i = 0; i < x_t.size(); ++i) x_t[i] = a * x0[i] + b * eps[i];
    return x_t;
}

PosteriorStats posterior_stats(const NoiseSchedule& s, const DenseArray& x_t,
                               const DenseArray& eps_hat, int t) {
    s.check_timestep(t);
    require_same_shape(x_t, eps_hat, "posterior_stats");

    const double beta = s.beta(t);
    const double coef = beta / std::sqrt(1.0 - s.alpha_bar(t));
    const double inv_sqrt_alpha = 1.0 / std::sqrt(s.alpha(t));

    PosteriorStats stats;
    stats.mean = DenseArray::zeros(x_t.size());
    for (std::size_t i = 0; i < x_t.size(); ++i) {
        stats.mean[i] = inv_sqrt_alpha * (x_t[i] - coef * eps_hat[i]);
    }
    stats.variance = (1.0 - s.alpha_bar_prev(t)) / (1.0 - s.alpha_bar(t)) * beta;
    return stats;
}

}  // namespace sdd
