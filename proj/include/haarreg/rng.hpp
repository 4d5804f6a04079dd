#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <utility>

namespace haarreg::rng {

// splitmix64 finalizer; a bijection on 64-bit words with full avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t combine(std::uint64_t key, std::uint64_t value) noexcept {
    return mix64(key ^ mix64(value + 0x632be59bd9b4e019ULL));
}

/// Derives a stream key from a master seed and a path of integer labels.
constexpr std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t key = mix64(seed);
    for (auto label : path) key = combine(key, label);
    return key;
}

/// Uniform on the open interval (0, 1) with 53 random bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline std::pair<double, double> box_muller(double u1, double u2) noexcept {
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

/// Counter-based generator: the value at (key, counter) never depends on
/// what else was drawn, so draws can be taken in any order or concurrently.
class CounterRng {
public:
    constexpr explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

    /// Position `counter` of the splitmix64 sequence seeded with the key.
    [[nodiscard]] constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
        return mix64(key_ + counter * 0x9e3779b97f4a7c15ULL);
    }
    [[nodiscard]] constexpr double uniform(std::uint64_t counter) const noexcept {
        return to_unit(bits(counter));
    }
    /// Two independent standard normals from counters 2*pair and 2*pair+1.
    [[nodiscard]] std::pair<double, double> normal_pair(std::uint64_t pair) const noexcept {
        return box_muller(uniform(2 * pair), uniform(2 * pair + 1));
    }
    [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }

private:
    std::uint64_t key_;
};

/// Sequential stream over a CounterRng.
class Stream {
public:
    constexpr explicit Stream(std::uint64_t key) noexcept : rng_(key) {}

    double uniform() noexcept { return rng_.uniform(counter_++); }

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        auto [a, b] = box_muller(u1, u2);
        spare_ = b;
        has_spare_ = true;
        return a;
    }

    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) noexcept {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(bound)) % bound;
    }

private:
    CounterRng rng_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline double normal_cdf(double z) noexcept {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

} // namespace haarreg::rng
