#include "sdd/adam.hpp"

#include <cmath>

#include "sdd/errors.hpp"

namespace sdd {

AdamState make_adam_state(const std::vector<const DenseArray*>& params) {
    AdamState state;
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const DenseArray* p : params) {
        state.m.emplace_back(p->shape());
        state.v.emplace_back(p->shape());
    }
    return state;
}

AdamState make_adam_state(const Mlp& net) {
    std::vector<const DenseArray*> blocks;
    for (const auto& layer : net.layers()) {
        blocks.push_back(&layer.w);
        blocks.push_back(&layer.b);
    }
    return make_adam_state(blocks);
}

void adam_step_blocks(const std::vector<DenseArray*>& params,
                      const std::vector<const DenseArray*>& grads,
                      const std::vector<std::string>& names, AdamState& state,
                      const AdamConfig& cfg) {
    if (!(cfg.lr >= 0.0)) throw ConfigError("adam: lr must be >= 0");
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw ShapeError("adam: block count mismatch");
    }

    for (std::size_t b = 0; b < grads.size(); ++b) {
        require_same_shape(*params[b], *grads[b], "adam");
        if (!grads[b]->all_finite()) {
            const std::string name = b < names.size() ? names[b] : "block " + std::to_string(b);
            throw NumericError("adam: non-finite gradient in " + name);
        }
    }

    double scale = 1.0;
    if (cfg.clip_norm) {
        double sq = 0.0;
        for (const DenseArray* g : grads) {
            for (std::size_t i = 0; i < g->size(); ++i) sq += (*g)[i] * (*g)[i];
        }
        const double norm = std::sqrt(sq);
        if (norm > *cfg.clip_norm && norm > 0.0) scale = *cfg.clip_norm / norm;
    }

    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);

    for (std::size_t b = 0; b < params.size(); ++b) {
        DenseArray& p = *params[b];
        const DenseArray& g = *grads[b];
        DenseArray& m = state.m[b];
        DenseArray& v = state.v[b];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = g[i] * scale;
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

std::vector<DenseArray*> param_blocks(Mlp& net) {
    std::vector<DenseArray*> blocks;
    for (auto& layer : net.layers()) {
        blocks.push_back(&layer.w);
        blocks.push_back(&layer.b);
    }
    return blocks;
}

std::vector<const DenseArray*> grad_blocks(const MlpGrads& grads) {
    std::vector<const DenseArray*> blocks;
    for (const auto& layer : grads.layers) {
        blocks.push_back(&layer.w);
        blocks.push_back(&layer.b);
    }
    return blocks;
}

std::vector<std::string> block_names(const Mlp& net, const std::string& prefix) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
        names.push_back(prefix + " layer " + std::to_string(i) + " weights");
        names.push_back(prefix + " layer " + std::to_string(i) + " bias");
    }
    return names;
}

void adam_step(Mlp& params, const MlpGrads& grads, AdamState& state, const AdamConfig& cfg) {
    adam_step_blocks(param_blocks(params), grad_blocks(grads), block_names(params, "mlp"),
                     state, cfg);
}

}  // namespace sdd
