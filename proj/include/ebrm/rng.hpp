#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ebrm::rng {

// Counter-based splittable generator (splitmix64 finalizer over a keyed
// counter). Every stochastic operation in the library takes an explicit
// Stream; child streams are derived from a tag, not from consumption
// order, so parallel schedules cannot change the numbers drawn.
class Stream {
public:
    explicit Stream(std::uint64_t seed) noexcept : key_(seed) {}

    static std::uint64_t mix(std::uint64_t z) noexcept {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() noexcept { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    /// Derive an independent stream identified by (this stream's key, tag).
    /// Stable under any amount of consumption from the parent.
    [[nodiscard]] Stream child(std::uint64_t tag) const noexcept {
        return Stream(mix(key_ ^ mix(tag ^ 0xd1b54a32d192ed03ULL)));
    }

    /// Uniform on (0, 1]; never returns 0 so log() is safe.
    double uniform01() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept {
        // 128-bit multiply keeps the modulo bias below 2^-64.
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Standard normal draw (Box-Muller, fixed two-uniform consumption).
    double normal() noexcept {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Injective-by-construction sub-seed for a sweep cell.
inline std::uint64_t cell_seed(std::uint64_t master, std::uint64_t n, std::uint64_t rep) noexcept {
    return Stream::mix(Stream::mix(master ^ 0x5851f42d4c957f2dULL) ^ Stream::mix(n) ^ (rep * 0x9e3779b97f4a7c15ULL));
}

} // namespace ebrm::rng
