#include "sdd/rng.hpp"

#include <cmath>

namespace sdd {

std::uint64_t RngStream::uniform_int(std::uint64_t bound) {
    if (bound == 0) return 0;
    // Largest multiple of bound that fits in 64 bits; reject above it.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    for (;;) {
        std::uint64_t x = next_u64();
        if (x < limit) return x % bound;
    }
}

double RngStream::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // u1 in (0, 1] keeps the log finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

}  // namespace sdd
