#pragma once

#include <cstdint>
#include <vector>

#include "sdd/array.hpp"

namespace sdd {

// Counter-based random stream. A stream is identified by (seed, path); the
// path grows by one label per fork. Draws are a pure function of
// (seed, path, counter), so results do not depend on evaluation order across
// streams, platforms, or thread counts. Gaussians come from Box-Muller with
// a cached spare.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed)
        : seed_(seed), digest_(mix(seed + kPhi)) {}

    RngStream fork(std::uint64_t label) const {
        RngStream child(*this);
        child.digest_ = mix(mix(digest_ ^ kForkTweak) + label);
        child.counter_ = 0;
        child.has_spare_ = false;
        child.spare_ = 0.0;
        return child;
    }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        ++counter_;
        return mix(digest_ + counter_ * kPhi);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound). Rejection sampling, no modulo bias.
    std::uint64_t uniform_int(std::uint64_t bound);

    double gaussian();

    void fill_gaussian(DenseArray& out) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = gaussian();
    }

    DenseArray gaussian_vector(std::size_t n) {
        DenseArray v = DenseArray::zeros(n);
        fill_gaussian(v);
        return v;
    }

private:
    static constexpr std::uint64_t kPhi = 0x9e3779b97f4a7c15ULL;
    static constexpr std::uint64_t kForkTweak = 0x1bd11bdaa9fc1a22ULL;

    static std::uint64_t mix(std::uint64_t h) {
        h ^= h >> 30;
        h *= 0xbf58476d1ce4e5b9ULL;
        h ^= h >> 27;
        h *= 0x94d049bb133111ebULL;
        h ^= h >> 31;
        return h;
    }

    std::uint64_t seed_ = 0;
    std::uint64_t digest_ = 0;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline RngStream rng_fork(const RngStream& parent, std::uint64_t label) {
    return parent.fork(label);
}

}  // namespace sdd
