#pragma once

#include <cstdint>
#include <random>

namespace deimlab {

/// Deterministic random source. The mapping from raw 64-bit draws to doubles
/// is spelled out here instead of relying on std distributions, whose output
/// is implementation-defined; two builds with the same seed must produce the
/// same stream bit for bit.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform on [0, 1) with 53 random mantissa bits.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        // Rejection-free modulo bias is negligible for the small n used here,
        // but stay exact anyway.
        const std::uint64_t limit = n * (UINT64_MAX / n);
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

private:
    std::mt19937_64 gen_;
};

} // namespace deimlab
