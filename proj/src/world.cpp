#include "sdd/world.hpp"

#include <algorithm>
#include <cmath>

#include "sdd/errors.hpp"

namespace sdd {

std::string layout_name(WorldLayout l) {
    switch (l) {
        case WorldLayout::two_mode: return "two-mode";
        case WorldLayout::ring: return "ring";
    }
    throw ConfigError("unknown world layout tag");
}

WorldLayout layout_from_name(const std::string& name) {
    if (name == "two-mode") return WorldLayout::two_mode;
    if (name == "ring") return WorldLayout::ring;
    throw ConfigError("unknown world layout '" + name + "'");
}

MixtureWorld::MixtureWorld(WorldLayout layout, std::size_t dim, std::size_t semantic_dims,
                           std::vector<std::vector<Mode>> modes_per_condition,
                           double separation, double std_dev)
    : layout_(layout),
      dim_(dim),
      semantic_dims_(semantic_dims),
      modes_(std::move(modes_per_condition)),
      separation_(separation),
      std_dev_(std_dev) {
    if (dim_ < semantic_dims_ || semantic_dims_ == 0) {
        throw ConfigError("world: need D >= S >= 1");
    }
    for (const auto& condition_modes : modes_) {
        if (condition_modes.empty()) throw ConfigError("world: condition with no modes");
        for (const auto& mode : condition_modes) {
            if (mode.mean.size() != semantic_dims_) {
                throw ConfigError("world: mode mean dimension mismatch");
            }
            if (!(mode.std_dev > 0.0)) throw ConfigError("world: mode std must be > 0");
        }
    }
}

const std::vector<Mode>& MixtureWorld::modes(ConditionId c) const {
    check_condition(c);
    return modes_[static_cast<std::size_t>(c.id)];
}

void MixtureWorld::check_condition(ConditionId c) const {
    if (c.id < 0 || static_cast<std::size_t>(c.id) >= modes_.size()) {
        throw ConditionError("unknown condition " + std::to_string(c.id) + " (world has " +
                             std::to_string(modes_.size()) + ")");
    }
}

DenseArray MixtureWorld::mode_center(ConditionId c, std::size_t mode_index) const {
    const auto& mode = modes(c).at(mode_index);
    DenseArray center = DenseArray::zeros(dim_);
    for (std::size_t i = 0; i < semantic_dims_; ++i) center[i] = mode.mean[i];
    return center;
}

DenseArray LabeledBatch::row(std::size_t i) const {
    DenseArray r = DenseArray::zeros(samples.cols());
    for (std::size_t j = 0; j < samples.cols(); ++j) r[j] = samples.at(i, j);
    return r;
}

MixtureWorld make_world(WorldLayout layout, std::size_t dim, double separation, double std_dev,
                        std::size_t conditions) {
    if (dim < 2) throw ConfigError("world.dim must be >= 2");
    if (!(std_dev > 0.0)) throw ConfigError("world.std must be > 0");

    std::vector<std::vector<Mode>> modes;
    std::size_t semantic = 0;

    switch (layout) {
        case WorldLayout::two_mode: {
            if (conditions != 2) throw ConfigError("two-mode world requires conditions = 2");
            semantic = 1;
            modes.push_back({Mode{{-separation / 2.0}, std_dev}});
            modes.push_back({Mode{{+separation / 2.0}, std_dev}});
            break;
        }
        case WorldLayout::ring: {
            if (conditions < 2) throw ConfigError("ring world requires conditions >= 2");
            semantic = 2;
            for (std::size_t k = 0; k < conditions; ++k) {
                const double angle =
                    2.0 * M_PI * static_cast<double>(k) / static_cast<double>(conditions);
                modes.push_back(
                    {Mode{{separation * std::cos(angle), separation * std::sin(angle)}, std_dev}});
            }
            break;
        }
    }
    return MixtureWorld(layout, dim, semantic, std::move(modes), separation, std_dev);
}

LabeledBatch sample_world(const MixtureWorld& w, ConditionId cond, std::size_t n,
                          RngStream& rng) {
    w.check_condition(cond);
    if (n == 0) throw ConfigError("sample_world: n must be >= 1");

    const auto& modes = w.modes(cond);
    LabeledBatch batch;
    batch.condition = cond;
    batch.samples = DenseArray::matrix(n, w.dim());

    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t mi =
            modes.size() == 1 ? 0 : static_cast<std::size_t>(rng.uniform_int(modes.size()));
        const Mode& mode = modes[mi];
        for (std::size_t j = 0; j < w.semantic_dims(); ++j) {
            batch.samples.at(r, j) = mode.mean[j] + mode.std_dev * rng.gaussian();
        }
        for (std::size_t j = w.semantic_dims(); j < w.dim(); ++j) {
            batch.samples.at(r, j) = rng.gaussian();
        }
    }
    return batch;
}

std::vector<double> mode_posterior(const MixtureWorld& w, const DenseArray& x) {
    if (x.size() != w.dim()) {
        throw ShapeError("mode_posterior: sample dim " + std::to_string(x.size()) +
                         " != world dim " + std::to_string(w.dim()));
    }

    // Log density of the semantic block per condition, then a stable softmax.
    const std::size_t K = w.condition_count();
    std::vector<double> log_density(K);
    for (std::size_t k = 0; k < K; ++k) {
        const auto& modes = w.modes(ConditionId(static_cast<int>(k)));
        double best = -std::numeric_limits<double>::infinity();
        std::vector<double> per_mode;
        per_mode.reserve(modes.size());
        for (const auto& mode : modes) {
            double q = 0.0;
            for (std::size_t j = 0; j < w.semantic_dims(); ++j) {
                const double z = (x[j] - mode.mean[j]) / mode.std_dev;
                q += z * z;
            }
            const double ld = -0.5 * q -
                              static_cast<double>(w.semantic_dims()) * std::log(mode.std_dev);
            per_mode.push_back(ld);
            best = std::max(best, ld);
        }
        double acc = 0.0;
        for (double ld : per_mode) acc += std::exp(ld - best);
        log_density[k] = best + std::log(acc / static_cast<double>(modes.size()));
    }

    const double top = *std::max_element(log_density.begin(), log_density.end());
    double total = 0.0;
    std::vector<double> posterior(K);
    for (std::size_t k = 0; k < K; ++k) {
        posterior[k] = std::exp(log_density[k] - top);
        total += posterior[k];
    }
    for (double& p : posterior) p /= total;
    return posterior;
}

double alignment_score(const MixtureWorld& w, const DenseArray& batch, ConditionId target) {
    w.check_condition(target);
    if (batch.rank() != 2 || batch.rows() == 0) {
        throw ShapeError("alignment_score: need a nonempty n x D batch");
    }
    double acc = 0.0;
    DenseArray row = DenseArray::zeros(batch.cols());
    for (std::size_t r = 0; r < batch.rows(); ++r) {
        for (std::size_t j = 0; j < batch.cols(); ++j) row[j] = batch.at(r, j);
        acc += mode_posterior(w, row)[static_cast<std::size_t>(target.id)];
    }
    return acc / static_cast<double>(batch.rows());
}

double fidelity_rmse(const DenseArray& inputs, const DenseArray& outputs,
                     const MixtureWorld& w) {
    require_same_shape(inputs, outputs, "fidelity_rmse");
    if (inputs.rank() != 2 || inputs.cols() != w.dim()) {
        throw ShapeError("fidelity_rmse: need n x D batches matching the world dim");
    }
    if (w.nuisance_dims() == 0) return 0.0;

    double acc = 0.0;
    for (std::size_t r = 0; r < inputs.rows(); ++r) {
        for (std::size_t j = w.semantic_dims(); j < w.dim(); ++j) {
            const double d = outputs.at(r, j) - inputs.at(r, j);
            acc += d * d;
        }
    }
    const double count = static_cast<double>(inputs.rows() * w.nuisance_dims());
    return std::sqrt(acc / count);
}

}  // namespace sdd
