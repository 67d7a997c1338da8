#pragma once

#include <cstdint>
#include <random>

namespace dglearn {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4bbb3ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Seeded generator with deterministic splitting. split(k) depends only on
// (seed, k), never on how many values were drawn, so independent streams can
// be handed to parallel workers and still reproduce bit-identically.
class Rng {
public:
    explicit Rng(std::uint64_t seed)
        : seed_(seed), engine_(splitmix64(seed ^ 0xd6e8feb86659fd93ull)) {}

    Rng split(std::uint64_t stream) const {
        return Rng(splitmix64(seed_ ^ splitmix64(stream ^ 0xa5a5a5a5a5a5a5a5ull)));
    }

    std::uint64_t seed() const { return seed_; }
    std::mt19937_64& engine() { return engine_; }

    std::uint64_t next_u64() { return engine_(); }

    double uniform(double lo, double hi) {
        std::uniform_real_distribution<double> d(lo, hi);
        return d(engine_);
    }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        std::uniform_int_distribution<int> d(lo, hi);
        return d(engine_);
    }

    double normal(double mean = 0.0, double sd = 1.0) {
        std::normal_distribution<double> d(mean, sd);
        return d(engine_);
    }

    bool bernoulli(double prob) {
        std::bernoulli_distribution d(prob);
        return d(engine_);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace dglearn
