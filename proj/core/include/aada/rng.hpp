#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace aada {

/// Seeded generator with platform-independent draws.
///
/// The engine is `std::mt19937_64`, whose output sequence is fixed by the standard.
/// The standard distributions are not, so uniform, normal and index draws are
/// derived here directly from engine bits.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    /// Independent generator for a named sub-stream, e.g. `derive(round, purpose)`.
    Rng derive(std::uint64_t a, std::uint64_t b = 0) const;

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller; consumes two engine draws.
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    /// Unbiased integer in [0, n).
    std::size_t index(std::size_t n);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

    /// `count` distinct values from [0, n) in draw order (partial Fisher-Yates).
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count);

    std::uint64_t seed() const noexcept { return seed_; }

    /// Textual engine state; `restore_state(save_state())` resumes the exact sequence.
    std::string save_state() const;
    void restore_state(std::uint64_t seed, const std::string& state);

    friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer, used to decorrelate derived seeds.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

} // namespace aada
