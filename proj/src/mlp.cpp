#include "sdd/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "sdd/errors.hpp"

namespace sdd {

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::silu: return "silu";
        case Activation::tanh: return "tanh";
    }
    throw ConfigError("unknown activation tag");
}

Activation activation_from_name(const std::string& name) {
    if (name == "silu") return Activation::silu;
    if (name == "tanh") return Activation::tanh;
    throw ConfigError("unknown activation '" + name + "'");
}

namespace {

inline double act_value(Activation a, double x) {
    switch (a) {
        case Activation::silu: return x / (1.0 + std::exp(-x));
        case Activation::tanh: return std::tanh(x);
    }
    return 0.0;
}

inline double act_derivative(Activation a, double x) {
    switch (a) {
        case Activation::silu: {
            double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 + x * (1.0 - s));
        }
        case Activation::tanh: {
            double t = std::tanh(x);
            return 1.0 - t * t;
        }
    }
    return 0.0;
}

// out = w * x + b
void affine(const Layer& layer, const DenseArray& x, DenseArray& out) {
    const std::size_t rows = layer.w.rows();
    const std::size_t cols = layer.w.cols();
    if (x.size() != cols) {
        throw ShapeError("mlp: input length " + std::to_string(x.size()) +
                         " does not match layer input dim " + std::to_string(cols));
    }
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = layer.w.data() + r * cols;
        double s = layer.b[r];
        for (std::size_t c = 0; c < cols; ++c) s += wr[c] * x[c];
        out[r] = s;
    }
}

}  // namespace

Mlp::Mlp(const std::vector<std::size_t>& dims, Activation act) : act_(act) {
    if (dims.size() < 2) throw ConfigError("Mlp: need at least input and output dims");
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        if (dims[i] == 0 || dims[i + 1] == 0) throw ConfigError("Mlp: zero layer dim");
        layers_.push_back({DenseArray::matrix(dims[i + 1], dims[i]), DenseArray::zeros(dims[i + 1])});
    }
}

Mlp Mlp::glorot(const std::vector<std::size_t>& dims, Activation act, RngStream& rng) {
    Mlp net(dims, act);
    for (auto& layer : net.layers_) {
        const double bound = std::sqrt(6.0 / static_cast<double>(layer.w.rows() + layer.w.cols()));
        for (std::size_t i = 0; i < layer.w.size(); ++i) {
            layer.w[i] = (2.0 * rng.uniform() - 1.0) * bound;
        }
    }
    return net;
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += layer.w.size() + layer.b.size();
    return n;
}

DenseArray mlp_forward(const Mlp& net, const DenseArray& input) {
    if (net.layers().empty()) throw ShapeError("mlp_forward: empty net");
    DenseArray cur = input;
    const std::size_t last = net.layers().size() - 1;
    for (std::size_t li = 0; li < net.layers().size(); ++li) {
        DenseArray next = DenseArray::zeros(net.layers()[li].w.rows());
        affine(net.layers()[li], cur, next);
        if (li != last) {
            for (std::size_t i = 0; i < next.size(); ++i) {
                next[i] = act_value(net.activation(), next[i]);
            }
        }
        cur = std::move(next);
    }
    return cur;
}

MlpGrads mlp_backward(const Mlp& net, const DenseArray& input, const DenseArray& output_grad) {
    const auto& layers = net.layers();
    if (layers.empty()) throw ShapeError("mlp_backward: empty net");
    if (output_grad.size() != net.output_dim()) {
        throw ShapeError("mlp_backward: output_grad length " + std::to_string(output_grad.size()) +
                         " does not match output dim " + std::to_string(net.output_dim()));
    }

    const std::size_t L = layers.size();

    // Forward pass, keeping pre-activations and layer inputs.
    std::vector<DenseArray> inputs(L);    // input fed to layer li
    std::vector<DenseArray> preact(L);    // w*x+b of layer li
    DenseArray cur = input;
    for (std::size_t li = 0; li < L; ++li) {
        inputs[li] = cur;
        DenseArray z = DenseArray::zeros(layers[li].w.rows());
        affine(layers[li], cur, z);
        preact[li] = z;
        if (li + 1 != L) {
            for (std::size_t i = 0; i < z.size(); ++i) {
                z[i] = act_value(net.activation(), z[i]);
            }
        }
        cur = std::move(z);
    }

    MlpGrads grads;
    grads.layers.resize(L);

    // delta = dLoss/d(preact of current layer)
    DenseArray delta = output_grad;
    for (std::size_t li = L; li-- > 0;) {
        if (li + 1 != L) {
            for (std::size_t i = 0; i < delta.size(); ++i) {
                delta[i] *= act_derivative(net.activation(), preact[li][i]);
            }
        }
        const Layer& layer = layers[li];
        const std::size_t rows = layer.w.rows();
        const std::size_t cols = layer.w.cols();

        Layer g{DenseArray::matrix(rows, cols), DenseArray::zeros(rows)};
        const DenseArray& x = inputs[li];
        for (std::size_t r = 0; r < rows; ++r) {
            double* gw = g.w.data() + r * cols;
            const double d = delta[r];
            for (std::size_t c = 0; c < cols; ++c) gw[c] = d * x[c];
            g.b[r] = d;
        }
        grads.layers[li] = std::move(g);

        DenseArray prev = DenseArray::zeros(cols);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* wr = layer.w.data() + r * cols;
            const double d = delta[r];
            for (std::size_t c = 0; c < cols; ++c) prev[c] += wr[c] * d;
        }
        delta = std::move(prev);
    }
    grads.input = std::move(delta);
    return grads;
}

double finite_diff_check(const Mlp& net, const DenseArray& input, const ScalarLoss& loss,
                         double step) {
    if (!(step > 0.0)) throw ConfigError("finite_diff_check: step must be > 0");

    DenseArray out = mlp_forward(net, input);
    MlpGrads analytic = mlp_backward(net, input, loss.grad(out));

    // Relative gaps are floored at a fraction of the largest gradient entry;
    // below that, central differences are pure roundoff.
    double gmax = 0.0;
    for (const auto& layer : analytic.layers) {
        for (std::size_t i = 0; i < layer.w.size(); ++i) {
            gmax = std::max(gmax, std::abs(layer.w[i]));
        }
        for (std::size_t i = 0; i < layer.b.size(); ++i) {
            gmax = std::max(gmax, std::abs(layer.b[i]));
        }
    }
    for (std::size_t i = 0; i < analytic.input.size(); ++i) {
        gmax = std::max(gmax, std::abs(analytic.input[i]));
    }
    const double floor = std::max(1e-3 * gmax, 1e-6);
    auto relative_gap = [floor](double fd, double ad) {
        return std::abs(fd - ad) / std::max({std::abs(fd), std::abs(ad), floor});
    };

    double worst = 0.0;
    auto probe = [&](Mlp& scratch, double* slot, double analytic_grad) {
        const double saved = *slot;
        *slot = saved + step;
        const double up = loss.value(mlp_forward(scratch, input));
        *slot = saved - step;
        const double down = loss.value(mlp_forward(scratch, input));
        *slot = saved;
        const double fd = (up - down) / (2.0 * step);
        worst = std::max(worst, relative_gap(fd, analytic_grad));
    };

    Mlp scratch = net;
    for (std::size_t li = 0; li < scratch.layers().size(); ++li) {
        Layer& layer = scratch.layers()[li];
        for (std::size_t i = 0; i < layer.w.size(); ++i) {
            probe(scratch, &layer.w[i], analytic.layers[li].w[i]);
        }
        for (std::size_t i = 0; i < layer.b.size(); ++i) {
            probe(scratch, &layer.b[i], analytic.layers[li].b[i]);
        }
    }

    DenseArray x = input;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + step;
        const double up = loss.value(mlp_forward(net, x));
        x[i] = saved - step;
        const double down = loss.value(mlp_forward(net, x));
        x[i] = saved;
        const double fd = (up - down) / (2.0 * step);
        worst = std::max(worst, relative_gap(fd, analytic.input[i]));
    }
    return worst;
}

}  // namespace sdd
