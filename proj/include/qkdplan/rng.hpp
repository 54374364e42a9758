#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qkdplan {

// Every consumer of randomness draws from its own named substream of one
// master seed, so adding a new consumer never perturbs existing streams and
// identical (seed, name) pairs replay identical sequences on any platform
// (mt19937_64 output is fully specified by the standard).
class SubstreamRng {
public:
    SubstreamRng(std::uint64_t seed, std::string_view name)
        : eng_(fold(seed, name)) {}

    std::uint64_t next_u64() { return eng_(); }

    // Unbiased draw from [0, n). n == 0 is a caller bug; returns 0.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t v = eng_();
        while (v >= limit) v = eng_();
        return v % n;
    }

    // Uniform in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return unit() < p; }

private:
    static std::uint64_t fold(std::uint64_t seed, std::string_view name) {
        // FNV-1a over the name, then mixed with the seed.
        std::uint64_t h = 14695981039346656037ull;
        for (char c : name) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        return h ^ (seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
    }

    std::mt19937_64 eng_;
};

} // namespace qkdplan
