#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "seppmix/common.hpp"

namespace seppmix {

// Deterministic random stream: mt19937_64 (algorithm fixed by the standard)
// with hand-rolled variate transforms so draw sequences are identical across
// standard-library implementations. std::*_distribution is never used.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on the 2^53 grid in [0, 1).
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Unbiased integer in [0, n) via rejection.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw InputDomainError("uniform_int: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Approximate standard normal as sum of 12 uniforms minus 6. Pure
    // arithmetic, so the sequence is platform-independent. Used for weight
    // init and synthetic jitter, where tail accuracy is irrelevant.
    double normal() {
        double s = 0.0;
        for (int i = 0; i < 12; ++i) s += uniform01();
        return s - 6.0;
    }

    // Beta variate. The (1,1) case (the shipped default everywhere) is a
    // plain uniform and stays libm-free; other shapes go through
    // Marsaglia-Tsang gamma sampling.
    double beta(double a, double b) {
        if (a <= 0.0 || b <= 0.0) throw InputDomainError("beta: shape parameters must be positive");
        if (a == 1.0 && b == 1.0) return uniform01();
        const double x = gamma(a);
        const double y = gamma(b);
        if (x + y == 0.0) return 0.5;
        return x / (x + y);
    }

    // Fisher-Yates permutation of 0..n-1.
    std::vector<int> permutation(int n) {
        std::vector<int> p(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
        for (int i = n - 1; i > 0; --i) {
            const auto j = static_cast<int>(uniform_int(static_cast<std::uint64_t>(i) + 1));
            std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
        }
        return p;
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = uniform_int(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    double gamma(double shape) {
        // Marsaglia-Tsang; boosts shape < 1 by one and rescales.
        if (shape < 1.0) {
            const double u = uniform01();
            return gamma(shape + 1.0) * std::pow(u > 0 ? u : 0x1.0p-53, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    std::mt19937_64 gen_;
};

// splitmix64 finalizer, used to derive independent sub-streams from a base
// seed plus a stream tag. Workers own derived streams, never shared ones.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = splitmix64(base);
    for (std::uint64_t w : words) h = splitmix64(h ^ w);
    return h;
}

// Stream tags for derived seeds.
enum StreamTag : std::uint64_t {
    kStreamInit = 1,
    kStreamShuffle = 2,
    kStreamMix = 3,
    kStreamFlip = 4,
    kStreamDropout = 5,
    kStreamSynthetic = 6,
    kStreamPreview = 7,
    kStreamRotation = 8,
};

inline SeededRng derive_rng(std::uint64_t base, std::initializer_list<std::uint64_t> words) {
    return SeededRng(derive_seed(base, words));
}

} // namespace seppmix
