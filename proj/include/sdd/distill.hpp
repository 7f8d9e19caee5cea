#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdd/adam.hpp"
#include "sdd/denoiser.hpp"
#include "sdd/hqs.hpp"
#include "sdd/world.hpp"

namespace sdd {

// Residual editing network f(y) = y + g(y). g starts with a zero output
// layer, so a fresh manipulator is exactly the identity.
class Manipulator {
public:
    Manipulator() = default;
    explicit Manipulator(Mlp residual);

    static Manipulator init(std::size_t dim, const std::vector<std::size_t>& hidden,
                            RngStream& rng);

    const Mlp& residual() const { return residual_; }
    Mlp& residual() { return residual_; }
    std::size_t dim() const { return residual_.output_dim(); }
    std::size_t param_count() const { return residual_.param_count(); }

private:
    Mlp residual_;
};

DenseArray manipulate(const Manipulator& m, const DenseArray& y);

// Applies the manipulator to every row of a batch.
DenseArray manipulate_batch(const Manipulator& m, const DenseArray& batch);

enum class WeightRule { unit, sqrt_alpha_bar };

std::string weight_rule_name(WeightRule r);
WeightRule weight_rule_from_name(const std::string& name);

// Jacobian-skipped distillation gradient at x_hat:
// w(t) * (eps_theta(sqrt(ab) x_hat + sqrt(1-ab) eps, t, cond) - eps).
DenseArray sds_gradient(const Denoiser& d, const NoiseSchedule& s, const DenseArray& x_hat,
                        int t, ConditionId cond, const DenseArray& eps, WeightRule rule);

// Gradient of lambda * |x_hat - y|^2 at x_hat.
DenseArray preservation_gradient(const DenseArray& x_hat, const DenseArray& y, double lambda);

// Timestep source for the training loop.
class Strategy {
public:
    enum class Kind { selected, random, descending, fixed, largest_hqs };

    static Strategy selected(TimestepSet set);
    static Strategy random();
    static Strategy descending();
    static Strategy fixed(int t);
    static Strategy largest_hqs(const HQSProfile& profile);

    Kind kind() const { return kind_; }
    const TimestepSet& set() const { return set_; }
    int fixed_t() const { return fixed_t_; }
    int best_t() const { return best_t_; }
    std::string name() const;

private:
    Kind kind_ = Kind::random;
    TimestepSet set_;
    int fixed_t_ = 1;
    int best_t_ = 1;
};

int pick_timestep(const Strategy& strategy, int iteration, int total_iterations, int T,
                  RngStream& rng);

struct DistillConfig {
    int iterations = 2000;
    double lr = 1e-2;
    double lambda_reg = 0.1;
    std::optional<double> clip_norm = 1.0;
    std::size_t batch = 64;
    WeightRule weight_rule = WeightRule::unit;
    std::vector<std::size_t> hidden = {64, 64, 64};
};

struct IterationMetrics {
    int iteration = 0;
    int t = 0;
    double sds_norm = 0.0;           // mean injected SDS gradient norm over the batch
    double reg_norm = 0.0;           // mean preservation gradient norm
    double mean_displacement = 0.0;  // mean |f(y) - y|
};

// One optimizer step at a fixed timestep. The combined gradient
// (sds + preservation) is injected at x_hat and backpropagated through the
// residual net only. Row noise comes from rng.fork(row).
IterationMetrics distill_iteration(Manipulator& m, const Denoiser& d, const NoiseSchedule& s,
                                   const LabeledBatch& batch, ConditionId target, int t,
                                   const DistillConfig& cfg, AdamState& opt,
                                   const RngStream& rng);

struct DistillResult {
    Manipulator manipulator;
    std::vector<IterationMetrics> history;
};

DistillResult train_manipulator(const MixtureWorld& w, const Denoiser& d,
                                const NoiseSchedule& s, ConditionId source, ConditionId target,
                                const Strategy& strategy, const DistillConfig& cfg,
                                RngStream rng);

}  // namespace sdd
