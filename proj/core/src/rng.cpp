#include "aada/rng.hpp"

#include "aada/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace aada {

std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(mix_seed(seed)) {}

Rng Rng::derive(std::uint64_t a, std::uint64_t b) const {
    return Rng(mix_seed(mix_seed(seed_ ^ 0x5bd1e995ULL) + mix_seed(a + 1)) ^ mix_seed(b + 0x7f4a7c15ULL));
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    // 1 - u lies in (0, 1], so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw Error("Rng::index: empty range");
    const std::uint64_t bound = n;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % bound);
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t count) {
    if (count > n) throw BudgetError("sample_without_replacement: count exceeds population");
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
        std::swap(pool[i], pool[i + index(n - i)]);
    }
    pool.resize(count);
    return pool;
}

std::string Rng::save_state() const {
    std::ostringstream out;
    out << engine_;
    return out.str();
}

void Rng::restore_state(std::uint64_t seed, const std::string& state) {
    std::istringstream in(state);
    std::mt19937_64 engine;
    in >> engine;
    if (in.fail()) throw FormatError("Rng::restore_state: unreadable engine state");
    seed_ = seed;
    engine_ = engine;
}

} // namespace aada
