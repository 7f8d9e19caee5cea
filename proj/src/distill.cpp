#include "sdd/distill.hpp"

#include <algorithm>
#include <cmath>

#include "sdd/errors.hpp"

namespace sdd {

Manipulator::Manipulator(Mlp residual) : residual_(std::move(residual)) {
    if (residual_.input_dim() != residual_.output_dim()) {
        throw ShapeError("manipulator: residual net must map D -> D");
    }
}

Manipulator Manipulator::init(std::size_t dim, const std::vector<std::size_t>& hidden,
                              RngStream& rng) {
    std::vector<std::size_t> dims;
    dims.push_back(dim);
    for (std::size_t h : hidden) dims.push_back(h);
    dims.push_back(dim);
    Mlp net = Mlp::glorot(dims, Activation::silu, rng);
    // Zero output layer: f(y) = y at initialization.
    Layer& last = net.layers().back();
    last.w.fill(0.0);
    last.b.fill(0.0);
    return Manipulator(std::move(net));
}

DenseArray manipulate(const Manipulator& m, const DenseArray& y) {
    if (y.size() != m.dim()) {
        throw ShapeError("manipulate: input dim " + std::to_string(y.size()) + " != " +
                         std::to_string(m.dim()));
    }
    DenseArray out = mlp_forward(m.residual(), y);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
    return out;
}

DenseArray manipulate_batch(const Manipulator& m, const DenseArray& batch) {
    DenseArray out = DenseArray::matrix(batch.rows(), batch.cols());
    DenseArray row = DenseArray::zeros(batch.cols());
    for (std::size_t r = 0; r < batch.rows(); ++r) {
        for (std::size_t j = 0; j < batch.cols(); ++j) row[j] = batch.at(r, j);
        const DenseArray edited = manipulate(m, row);
        for (std::size_t j = 0; j < batch.cols(); ++j) out.at(r, j) = edited[j];
    }
    return out;
}

std::string weight_rule_name(WeightRule r) {
    switch (r) {
        case WeightRule::unit: return "unit";
        case WeightRule::sqrt_alpha_bar: return "sqrt_alpha_bar";
    }
    throw ConfigError("unknown weight rule");
}

WeightRule weight_rule_from_name(const std::string& name) {
    if (name == "unit") return WeightRule::unit;
    if (name == "sqrt_alpha_bar") return WeightRule::sqrt_alpha_bar;
    throw ConfigError("unknown weight rule '" + name + "'");
}

DenseArray sds_gradient(const Denoiser& d, const NoiseSchedule& s, const DenseArray& x_hat,
                        int t, ConditionId cond, const DenseArray& eps, WeightRule rule) {
    require_same_shape(x_hat, eps, "sds_gradient");
    const DenseArray x_t = forward_sample(s, x_hat, t, eps);
    const DenseArray predicted = predict_eps(d, x_t, t, cond);
    const double w = rule == WeightRule::unit ? 1.0 : std::sqrt(s.alpha_bar(t));
    DenseArray grad = DenseArray::zeros(x_hat.size());
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = w * (predicted[i] - eps[i]);
    return grad;
}

DenseArray preservation_gradient(const DenseArray& x_hat, const DenseArray& y, double lambda) {
    require_same_shape(x_hat, y, "preservation_gradient");
    DenseArray grad = DenseArray::zeros(x_hat.size());
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = 2.0 * lambda * (x_hat[i] - y[i]);
    return grad;
}

Strategy Strategy::selected(TimestepSet set) {
    if (set.steps.empty()) throw ConfigError("strategy: selected set is empty");
    Strategy s;
    s.kind_ = Kind::selected;
    s.set_ = std::move(set);
    return s;
}

Strategy Strategy::random() {
    Strategy s;
    s.kind_ = Kind::random;
    return s;
}

Strategy Strategy::descending() {
    Strategy s;
    s.kind_ = Kind::descending;
    return s;
}

Strategy Strategy::fixed(int t) {
    if (t < 1) throw ConfigError("strategy: fixed t must be >= 1");
    Strategy s;
    s.kind_ = Kind::fixed;
    s.fixed_t_ = t;
    return s;
}

Strategy Strategy::largest_hqs(const HQSProfile& profile) {
    if (profile.hqs.empty()) throw ConfigError("strategy: empty profile");
    int best = 1;
    double best_value = profile.hqs[0];
    for (int t = 2; t <= profile.horizon(); ++t) {
        const double v = profile.hqs[static_cast<std::size_t>(t - 1)];
        if (v > best_value) {
            best_value = v;
            best = t;
        }
    }
    Strategy s;
    s.kind_ = Kind::largest_hqs;
    s.best_t_ = best;
    return s;
}

std::string Strategy::name() const {
    switch (kind_) {
        case Kind::selected: return "selected";
        case Kind::random: return "random";
        case Kind::descending: return "descending";
        case Kind::fixed: return "fixed";
        case Kind::largest_hqs: return "largest-hqs";
    }
    return "?";
}

int pick_timestep(const Strategy& strategy, int iteration, int total_iterations, int T,
                  RngStream& rng) {
    switch (strategy.kind()) {
        case Strategy::Kind::selected: {
            const auto& steps = strategy.set().steps;
            return steps[static_cast<std::size_t>(rng.uniform_int(steps.size()))];
        }
        case Strategy::Kind::random:
            return 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(T)));
        case Strategy::Kind::descending: {
            const double frac = total_iterations > 0
                                    ? static_cast<double>(iteration) /
                                          static_cast<double>(total_iterations)
                                    : 0.0;
            const int t = static_cast<int>(std::ceil(static_cast<double>(T) * (1.0 - frac)));
            return std::clamp(t, 1, T);
        }
        case Strategy::Kind::fixed:
            if (strategy.fixed_t() > T) {
                throw ConfigError("strategy: fixed t " + std::to_string(strategy.fixed_t()) +
                                  " exceeds horizon " + std::to_string(T));
            }
            return strategy.fixed_t();
        case Strategy::Kind::largest_hqs:
            return strategy.best_t();
    }
    throw ConfigError("unknown strategy kind");
}

IterationMetrics distill_iteration(Manipulator& m, const Denoiser& d, const NoiseSchedule& s,
                                   const LabeledBatch& batch, ConditionId target, int t,
                                   const DistillConfig& cfg, AdamState& opt,
                                   const RngStream& rng) {
    const std::size_t n = batch.count();
    if (n == 0) throw ShapeError("distill_iteration: empty batch");
    if (batch.samples.cols() != m.dim()) {
        throw ShapeError("distill_iteration: batch dim does not match manipulator");
    }

    std::vector<Layer> acc;
    for (const auto& layer : m.residual().layers()) {
        acc.push_back({DenseArray(layer.w.shape()), DenseArray(layer.b.shape())});
    }

    IterationMetrics metrics;
    metrics.t = t;

    for (std::size_t row = 0; row < n; ++row) {
        RngStream row_rng = rng.fork(row);
        const DenseArray y = batch.row(row);
        const DenseArray eps = row_rng.gaussian_vector(y.size());

        const DenseArray x_hat = manipulate(m, y);
        const DenseArray sds = sds_gradient(d, s, x_hat, t, target, eps, cfg.weight_rule);
        const DenseArray pres = preservation_gradient(x_hat, y, cfg.lambda_reg);

        DenseArray injected = DenseArray::zeros(x_hat.size());
        double disp_sq = 0.0;
        for (std::size_t i = 0; i < injected.size(); ++i) {
            injected[i] = sds[i] + pres[i];
            const double dd = x_hat[i] - y[i];
            disp_sq += dd * dd;
        }

        // d x_hat / d phi = d g(y) / d phi, so the injected gradient seeds
        // the residual net directly.
        const MlpGrads back = mlp_backward(m.residual(), y, injected);
        for (std::size_t li = 0; li < acc.size(); ++li) {
            for (std::size_t i = 0; i < acc[li].w.size(); ++i) {
                acc[li].w[i] += back.layers[li].w[i];
            }
            for (std::size_t i = 0; i < acc[li].b.size(); ++i) {
                acc[li].b[i] += back.layers[li].b[i];
            }
        }

        metrics.sds_norm += l2_norm(sds);
        metrics.reg_norm += l2_norm(pres);
        metrics.mean_displacement += std::sqrt(disp_sq);
    }

    const double inv_n = 1.0 / static_cast<double>(n);
    metrics.sds_norm *= inv_n;
    metrics.reg_norm *= inv_n;
    metrics.mean_displacement *= inv_n;

    MlpGrads grads;
    grads.layers = std::move(acc);
    for (auto& layer : grads.layers) {
        for (auto& g : layer.w) g *= inv_n;
        for (auto& g : layer.b) g *= inv_n;
    }
    if (!std::all_of(grads.layers.begin(), grads.layers.end(), [](const Layer& l) {
            return l.w.all_finite() && l.b.all_finite();
        })) {
        throw TrainingError("distillation produced non-finite gradients at t=" +
                            std::to_string(t));
    }

    AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8, cfg.clip_norm};
    adam_step(m.residual(), grads, opt, adam);
    return metrics;
}

DistillResult train_manipulator(const MixtureWorld& w, const Denoiser& d,
                                const NoiseSchedule& s, ConditionId source, ConditionId target,
                                const Strategy& strategy, const DistillConfig& cfg,
                                RngStream rng) {
    if (cfg.iterations < 0) throw ConfigError("distill.iterations must be >= 0");
    if (cfg.batch == 0) throw ConfigError("distill.batch must be >= 1");
    w.check_condition(source);
    d.check_condition(target);

    RngStream init_rng = rng.fork(0);
    const RngStream batch_root = rng.fork(1);
    const RngStream pick_root = rng.fork(2);
    const RngStream eps_root = rng.fork(3);

    DistillResult result;
    result.manipulator = Manipulator::init(w.dim(), cfg.hidden, init_rng);
    result.history.reserve(static_cast<std::size_t>(cfg.iterations));

    AdamState opt = make_adam_state(result.manipulator.residual());

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        RngStream batch_rng = batch_root.fork(static_cast<std::uint64_t>(iter));
        RngStream pick_rng = pick_root.fork(static_cast<std::uint64_t>(iter));
        const RngStream eps_rng = eps_root.fork(static_cast<std::uint64_t>(iter));

        const LabeledBatch batch = sample_world(w, source, cfg.batch, batch_rng);
        const int t = pick_timestep(strategy, iter, cfg.iterations, s.horizon(), pick_rng);

        IterationMetrics metrics =
            distill_iteration(result.manipulator, d, s, batch, target, t, cfg, opt, eps_rng);
        metrics.iteration = iter;
        result.history.push_back(metrics);
    }
    return result;
}

}  // namespace sdd
