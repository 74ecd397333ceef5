#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>
#include <vector>

namespace melep {

/// Seedable generator whose output stream is fixed across platforms and
/// standard library versions.
///
/// The engine is std::mt19937_64, whose sequence the standard pins down
/// exactly. The standard distributions are not pinned, so integer, uniform
/// and normal draws are derived here from raw engine output:
///  - uniform_index: rejection sampling on the raw 64-bit word (no modulo bias)
///  - uniform01: top 53 bits scaled by 2^-53, in [0, 1)
///  - normal: Box-Muller, both variates of a pair are used
class Rng
{
public:
    static constexpr std::string_view algorithm = "mt19937_64+rejection-index+53bit-unit+box-muller";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t uniform_index(std::uint64_t bound)
    {
        // Largest multiple of bound representable in 64 bits; values at or above it are rejected.
        const std::uint64_t limit = bound * (~std::uint64_t{0} / bound);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    /// Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi)
    {
        return lo + static_cast<std::int64_t>(uniform_index(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Draws k distinct elements of `items` without replacement (partial Fisher-Yates), in draw order.
    template <typename T>
    std::vector<T> sample_without_replacement(std::vector<T> items, std::size_t k)
    {
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(uniform_index(items.size() - i));
            std::swap(items[i], items[j]);
        }
        items.resize(k);
        return items;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace melep
