#pragma once

#include <string>
#include <vector>

#include "sdd/array.hpp"
#include "sdd/rng.hpp"

namespace sdd {

// Index into a world's condition vocabulary.
struct ConditionId {
    int id = 0;

    ConditionId() = default;
    explicit ConditionId(int v) : id(v) {}
    bool operator==(const ConditionId& o) const { return id == o.id; }
};

enum class WorldLayout { two_mode, ring };

std::string layout_name(WorldLayout l);
WorldLayout layout_from_name(const std::string& name);

struct Mode {
    std::vector<double> mean;  // semantic coordinates only
    double std_dev = 1.0;
};

// Synthetic conditional distribution q(y). The first S coordinates carry the
// semantics (one Gaussian mode per condition); the remaining D-S nuisance
// coordinates are standard normal regardless of condition.
class MixtureWorld {
public:
    MixtureWorld() = default;
    MixtureWorld(WorldLayout layout, std::size_t dim, std::size_t semantic_dims,
                 std::vector<std::vector<Mode>> modes_per_condition, double separation,
                 double std_dev);

    WorldLayout layout() const { return layout_; }
    std::size_t dim() const { return dim_; }
    std::size_t semantic_dims() const { return semantic_dims_; }
    std::size_t nuisance_dims() const { return dim_ - semantic_dims_; }
    std::size_t condition_count() const { return modes_.size(); }
    double separation() const { return separation_; }
    double std_dev() const { return std_dev_; }

    const std::vector<Mode>& modes(ConditionId c) const;
    void check_condition(ConditionId c) const;

    // Mode mean embedded in full D dimensions (nuisance coords zero).
    DenseArray mode_center(ConditionId c, std::size_t mode_index = 0) const;

private:
    WorldLayout layout_ = WorldLayout::two_mode;
    std::size_t dim_ = 0;
    std::size_t semantic_dims_ = 0;
    std::vector<std::vector<Mode>> modes_;
    double separation_ = 0.0;
    double std_dev_ = 0.0;
};

struct LabeledBatch {
    DenseArray samples;  // n x D
    ConditionId condition;

    std::size_t count() const { return samples.rows(); }
    DenseArray row(std::size_t i) const;
};

MixtureWorld make_world(WorldLayout layout, std::size_t dim, double separation, double std_dev,
                        std::size_t conditions);

LabeledBatch sample_world(const MixtureWorld& w, ConditionId cond, std::size_t n,
                          RngStream& rng);

// Bayes posterior over conditions given the semantic coordinates, equal
// priors. Sums to one.
std::vector<double> mode_posterior(const MixtureWorld& w, const DenseArray& x);

// Mean posterior mass of the target condition over a batch. In [0, 1].
double alignment_score(const MixtureWorld& w, const DenseArray& batch, ConditionId target);

// Root-mean-square displacement over the nuisance coordinates only.
double fidelity_rmse(const DenseArray& inputs, const DenseArray& outputs,
                     const MixtureWorld& w);

}  // namespace sdd
