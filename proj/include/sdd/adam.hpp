#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sdd/array.hpp"
#include "sdd/mlp.hpp"

namespace sdd {

// Bias-corrected adaptive-moment optimizer state. One moment pair per
// parameter block, shapes matching the parameters.
struct AdamState {
    std::vector<DenseArray> m;
    std::vector<DenseArray> v;
    std::int64_t step = 0;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::optional<double> clip_norm;
};

AdamState make_adam_state(const std::vector<const DenseArray*>& params);
AdamState make_adam_state(const Mlp& net);

// One update over a flat list of parameter blocks. If clip_norm is set, the
// global gradient norm is rescaled to at most clip_norm first. block_names
// label the tensors in numeric-error messages.
void adam_step_blocks(const std::vector<DenseArray*>& params,
                      const std::vector<const DenseArray*>& grads,
                      const std::vector<std::string>& block_names, AdamState& state,
                      const AdamConfig& cfg);

// Mlp-shaped convenience wrapper.
void adam_step(Mlp& params, const MlpGrads& grads, AdamState& state, const AdamConfig& cfg);

std::vector<DenseArray*> param_blocks(Mlp& net);
std::vector<const DenseArray*> grad_blocks(const MlpGrads& grads);
std::vector<std::string> block_names(const Mlp& net, const std::string& prefix);

}  // namespace sdd
