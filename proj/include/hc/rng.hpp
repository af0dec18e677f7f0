#pragma once

#include <cstdint>
#include <random>

namespace hc {

// Deterministic stream on top of mt19937_64. Distribution draws are written
// out by hand (not std::*_distribution) so the sequence is pinned across
// library implementations; every draw consumes a counted number of engine
// words, which the dropout trial-count tests rely on.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

    std::uint64_t raw() {
        ++draws_;
        return eng_();
    }

    // [0, 1)
    double uniform() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // (0, 1], safe for log()
    double uniform_pos() { return static_cast<double>((raw() >> 11) + 1) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // [0, n)
    int uniform_int(int n) { return static_cast<int>(uniform() * n); }

    // Box-Muller; always two engine words, no caching.
    double normal() {
        double u1 = uniform_pos();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    // Independent child stream; deterministic in (parent seed, key).
    Rng split(std::uint64_t key) const { return Rng(splitmix(seed_ ^ (0x9E3779B97F4A7C15ull * (key + 1)))); }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t draws() const { return draws_; }

    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

  private:
    std::uint64_t seed_;
    std::mt19937_64 eng_;
    std::uint64_t draws_ = 0;
};

}  // namespace hc
