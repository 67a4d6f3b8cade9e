#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace oms {

// What a random stream is used for. Part of the stream key so that two
// purposes never share a sequence even for the same (client, round).
enum class StreamPurpose : std::uint64_t {
    Sampling = 1,
    Data = 2,
    Features = 3,
    Permutation = 4,
    Adversary = 5,
    Oracle = 6,
};

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t stream_key(std::uint64_t seed, StreamPurpose purpose, std::uint64_t a,
                                   std::uint64_t b) noexcept {
    std::uint64_t k = mix64(seed);
    k = mix64(k ^ static_cast<std::uint64_t>(purpose));
    k = mix64(k ^ (a * 0xd1b54a32d192ed03ULL));
    k = mix64(k ^ (b * 0x8cb92ba72f3d8dd7ULL));
    return k;
}

// Counter-based generator: the n-th draw is a pure function of
// (seed, purpose, a, b, n). Substreams for different clients or rounds are
// therefore independent of the order in which they are consumed.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, StreamPurpose purpose, std::uint64_t a = 0, std::uint64_t b = 0) noexcept
        : key_(stream_key(seed, purpose, a, b)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return mix64(key_ ^ mix64(counter_++)); }

    std::uint64_t counter() const noexcept { return counter_; }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1).
    double uniform_open() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    // Unbiased integer in [0, n) (Lemire's multiply-shift with rejection).
    std::uint64_t below(std::uint64_t n) noexcept {
        if (n <= 1) return 0;
        unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<unsigned __int128>((*this)()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double prob) noexcept { return uniform() < prob; }

    // Standard normal via Box-Muller; the spare value is cached.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace oms
