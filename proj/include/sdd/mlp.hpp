#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sdd/array.hpp"
#include "sdd/rng.hpp"

namespace sdd {

enum class Activation { silu, tanh };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// One affine layer: w is out x in (row-major), b is out.
struct Layer {
    DenseArray w;
    DenseArray b;
};

// Plain fully connected net. Hidden layers share one smooth activation, the
// output layer is linear. Immutable value type; all evaluation is pure.
class Mlp {
public:
    Mlp() = default;

    // dims = {in, h1, ..., out}; weights and biases start at zero.
    Mlp(const std::vector<std::size_t>& dims, Activation act);

    // Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases.
    static Mlp glorot(const std::vector<std::size_t>& dims, Activation act, RngStream& rng);

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }
    Activation activation() const { return act_; }

    std::size_t input_dim() const { return layers_.front().w.cols(); }
    std::size_t output_dim() const { return layers_.back().w.rows(); }
    std::size_t param_count() const;

private:
    std::vector<Layer> layers_;
    Activation act_ = Activation::silu;
};

// Gradients of a scalar with respect to every parameter and to the input.
struct MlpGrads {
    std::vector<Layer> layers;
    DenseArray input;
};

DenseArray mlp_forward(const Mlp& net, const DenseArray& input);

// Exact reverse-mode gradients of the scalar whose gradient with respect to
// the net output is output_grad.
MlpGrads mlp_backward(const Mlp& net, const DenseArray& input, const DenseArray& output_grad);

// Scalar loss over the net output, with its analytic output gradient. Used
// to seed mlp_backward when cross-checking against finite differences.
struct ScalarLoss {
    std::function<double(const DenseArray& out)> value;
    std::function<DenseArray(const DenseArray& out)> grad;
};

// Central finite differences over every parameter and every input
// coordinate; returns the worst relative disagreement with mlp_backward.
double finite_diff_check(const Mlp& net, const DenseArray& input, const ScalarLoss& loss,
                         double step);

}  // namespace sdd
