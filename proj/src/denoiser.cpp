#include "sdd/denoiser.hpp"

#include <cmath>
#include <string>

#include "sdd/errors.hpp"

namespace sdd {

DenseArray TimeEmbedding::embed(int t) const {
    DenseArray features = DenseArray::zeros(feature_count());
    const double td = static_cast<double>(t);
    for (int k = 0; k < frequencies; ++k) {
        const double exponent =
            frequencies > 1 ? static_cast<double>(k) / static_cast<double>(frequencies - 1) : 0.0;
        const double omega = std::pow(10000.0, -exponent);
        features[2 * static_cast<std::size_t>(k)] = std::sin(td * omega);
        features[2 * static_cast<std::size_t>(k) + 1] = std::cos(td * omega);
    }
    return features;
}

Denoiser::Denoiser(Mlp trunk, std::vector<DenseArray> cond_table, TimeEmbedding temb,
                   int horizon)
    : trunk_(std::move(trunk)),
      cond_table_(std::move(cond_table)),
      temb_(temb),
      horizon_(horizon) {
    if (cond_table_.empty()) throw ConfigError("denoiser: empty condition table");
    const std::size_t expected =
        trunk_.output_dim() + temb_.feature_count() + cond_table_[0].size();
    if (trunk_.input_dim() != expected) {
        throw ShapeError("denoiser: trunk input dim " + std::to_string(trunk_.input_dim()) +
                         " != D + 2F + E = " + std::to_string(expected));
    }
}

void Denoiser::check_condition(ConditionId c) const {
    if (c.id < 0 || static_cast<std::size_t>(c.id) >= cond_table_.size()) {
        throw ConditionError("unknown condition " + std::to_string(c.id) +
                             " (denoiser has " + std::to_string(cond_table_.size()) + ")");
    }
}

DenseArray Denoiser::assemble_input(const DenseArray& x_t, int t, ConditionId cond) const {
    if (t < 1 || t > horizon_) {
        throw IndexError("timestep " + std::to_string(t) + " outside 1.." +
                         std::to_string(horizon_));
    }
    check_condition(cond);
    if (x_t.size() != data_dim()) {
        throw ShapeError("denoiser: input dim " + std::to_string(x_t.size()) + " != D = " +
                         std::to_string(data_dim()));
    }

    DenseArray input = DenseArray::zeros(trunk_.input_dim());
    std::size_t o = 0;
    for (std::size_t i = 0; i < x_t.size(); ++i) input[o++] = x_t[i];
    const DenseArray tf = temb_.embed(t);
    for (std::size_t i = 0; i < tf.size(); ++i) input[o++] = tf[i];
    const DenseArray& ce = cond_table_[static_cast<std::size_t>(cond.id)];
    for (std::size_t i = 0; i < ce.size(); ++i) input[o++] = ce[i];
    return input;
}

DenseArray predict_eps(const Denoiser& d, const DenseArray& x_t, int t, ConditionId cond) {
    return mlp_forward(d.trunk(), d.assemble_input(x_t, t, cond));
}

std::pair<double, DenoiserGrads> elbo_step(const Denoiser& d, const NoiseSchedule& s,
                                           const DenseArray& x0, int t, ConditionId cond,
                                           const DenseArray& eps) {
    const DenseArray x_t = forward_sample(s, x0, t, eps);
    const DenseArray input = d.assemble_input(x_t, t, cond);
    const DenseArray predicted = mlp_forward(d.trunk(), input);

    double loss = 0.0;
    DenseArray output_grad = DenseArray::zeros(predicted.size());
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double r = predicted[i] - eps[i];
        loss += r * r;
        output_grad[i] = 2.0 * r;
    }

    MlpGrads back = mlp_backward(d.trunk(), input, output_grad);

    DenoiserGrads grads;
    grads.trunk = std::move(back.layers);
    grads.cond_table.reserve(d.condition_count());
    for (std::size_t k = 0; k < d.condition_count(); ++k) {
        grads.cond_table.emplace_back(DenseArray::zeros(d.cond_dim()));
    }
    const std::size_t cond_offset = d.data_dim() + d.time_embedding().feature_count();
    DenseArray& row = grads.cond_table[static_cast<std::size_t>(cond.id)];
    for (std::size_t i = 0; i < d.cond_dim(); ++i) row[i] = back.input[cond_offset + i];

    return {loss, std::move(grads)};
}

Denoiser init_denoiser(const MixtureWorld& w, const NoiseSchedule& s,
                       const DenoiserTrainConfig& cfg, RngStream& rng) {
    const std::size_t D = w.dim();
    const TimeEmbedding temb{cfg.time_frequencies};

    std::vector<std::size_t> dims;
    dims.push_back(D + temb.feature_count() + cfg.cond_dim);
    for (std::size_t h : cfg.hidden) dims.push_back(h);
    dims.push_back(D);

    RngStream trunk_rng = rng.fork(0);
    Mlp trunk = Mlp::glorot(dims, Activation::silu, trunk_rng);

    RngStream table_rng = rng.fork(1);
    std::vector<DenseArray> table;
    table.reserve(w.condition_count());
    for (std::size_t k = 0; k < w.condition_count(); ++k) {
        DenseArray row = DenseArray::zeros(cfg.cond_dim);
        for (std::size_t i = 0; i < row.size(); ++i) row[i] = 0.5 * table_rng.gaussian();
        table.push_back(std::move(row));
    }
    return Denoiser(std::move(trunk), std::move(table), temb, s.horizon());
}

DenoiserTraining train_denoiser(const MixtureWorld& w, const NoiseSchedule& s,
                                const DenoiserTrainConfig& cfg, RngStream rng) {
    if (cfg.iterations < 0) throw ConfigError("denoiser.iterations must be >= 0");
    if (cfg.batch == 0) throw ConfigError("denoiser.batch must be >= 1");
    if (w.condition_count() == 0) throw ConfigError("train_denoiser: empty world");

    RngStream init_rng = rng.fork(0);
    Denoiser model = init_denoiser(w, s, cfg, init_rng);
    const RngStream data_rng = rng.fork(1);

    std::vector<DenseArray*> params;
    std::vector<std::string> names = block_names(model.trunk(), "denoiser trunk");
    for (auto& layer : model.trunk().layers()) {
        params.push_back(&layer.w);
        params.push_back(&layer.b);
    }
    for (std::size_t k = 0; k < model.cond_table().size(); ++k) {
        params.push_back(&model.cond_table()[k]);
        names.push_back("denoiser cond[" + std::to_string(k) + "]");
    }
    AdamState opt = make_adam_state(
        std::vector<const DenseArray*>(params.begin(), params.end()));
    AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8, cfg.clip_norm};

    DenoiserTraining result;
    result.losses.reserve(static_cast<std::size_t>(cfg.iterations));

    const int T = s.horizon();
    const std::size_t K = w.condition_count();

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        RngStream iter_rng = data_rng.fork(static_cast<std::uint64_t>(iter));

        std::vector<Layer> trunk_acc;
        for (const auto& layer : model.trunk().layers()) {
            trunk_acc.push_back({DenseArray(layer.w.shape()), DenseArray(layer.b.shape())});
        }
        std::vector<DenseArray> table_acc;
        for (const auto& row : model.cond_table()) table_acc.emplace_back(row.shape());

        double batch_loss = 0.0;
        for (std::size_t row = 0; row < cfg.batch; ++row) {
            RngStream row_rng = iter_rng.fork(row);
            const ConditionId cond(static_cast<int>(row_rng.uniform_int(K)));
            const LabeledBatch sample = sample_world(w, cond, 1, row_rng);
            const DenseArray x0 = sample.row(0);
            const int t = 1 + static_cast<int>(row_rng.uniform_int(static_cast<std::uint64_t>(T)));
            const DenseArray eps = row_rng.gaussian_vector(w.dim());

            auto [loss, grads] = elbo_step(model, s, x0, t, cond, eps);
            batch_loss += loss;
            for (std::size_t li = 0; li < trunk_acc.size(); ++li) {
                for (std::size_t i = 0; i < trunk_acc[li].w.size(); ++i) {
                    trunk_acc[li].w[i] += grads.trunk[li].w[i];
                }
                for (std::size_t i = 0; i < trunk_acc[li].b.size(); ++i) {
                    trunk_acc[li].b[i] += grads.trunk[li].b[i];
                }
            }
            for (std::size_t k = 0; k < table_acc.size(); ++k) {
                for (std::size_t i = 0; i < table_acc[k].size(); ++i) {
                    table_acc[k][i] += grads.cond_table[k][i];
                }
            }
        }

        const double inv_batch = 1.0 / static_cast<double>(cfg.batch);
        batch_loss *= inv_batch;
        if (!std::isfinite(batch_loss)) {
            throw TrainingError("denoiser training diverged at iteration " +
                                std::to_string(iter));
        }
        for (auto& layer : trunk_acc) {
            for (auto& g : layer.w) g *= inv_batch;
            for (auto& g : layer.b) g *= inv_batch;
        }
        for (auto& row : table_acc) {
            for (auto& g : row) g *= inv_batch;
        }

        std::vector<const DenseArray*> grads;
        for (const auto& layer : trunk_acc) {
            grads.push_back(&layer.w);
            grads.push_back(&layer.b);
        }
        for (const auto& row : table_acc) grads.push_back(&row);

        adam_step_blocks(params, grads, names, opt, adam);
        result.losses.push_back(batch_loss);
    }

    result.denoiser = std::move(model);
    return result;
}

DenseArray reverse_sample(const Denoiser& d, const NoiseSchedule& s, ConditionId cond,
                          RngStream& rng) {
    d.check_condition(cond);
    DenseArray x = rng.gaussian_vector(d.data_dim());
    for (int t = s.horizon(); t >= 1; --t) {
        const DenseArray eps_hat = predict_eps(d, x, t, cond);
        const PosteriorStats stats = posterior_stats(s, x, eps_hat, t);
        x = stats.mean;
        if (stats.variance > 0.0) {
            const double sd = std::sqrt(stats.variance);
            for (std::size_t i = 0; i < x.size(); ++i) x[i] += sd * rng.gaussian();
        }
    }
    return x;
}

}  // namespace sdd
