#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ancl/errors.hpp"

namespace ancl {

/// splitmix64 finalizer; derives independent seed streams from a base seed
/// and an item index (base XOR index, then whitened).
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = (base ^ index) + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seeded random source with explicit distribution transforms.
///
/// std::mt19937_64 output is fully specified by the standard, and none of the
/// implementation-defined <random> distributions are used, so every draw is a
/// pure function of the seed and call sequence on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on {lo, ..., hi} inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw ConfigError("uniform_int: empty range");
        const double span = static_cast<double>(hi - lo) + 1.0;
        auto offset = static_cast<std::int64_t>(uniform() * span);
        if (offset > hi - lo) offset = hi - lo;  // guard the top edge against rounding
        return lo + offset;
    }

    /// Standard normal via Box-Muller; the spare deviate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * kPi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Exponential with the given rate, via the inverse-CDF transform.
    double exponential(double rate) {
        if (rate <= 0.0) throw ConfigError("exponential: rate must be positive");
        return -std::log1p(-uniform()) / rate;
    }

    /// Gamma(shape, scale 1) via the Marsaglia-Tsang squeeze, with the
    /// usual shape boost for shape < 1.
    double gamma(double shape) {
        if (shape <= 0.0) throw ConfigError("gamma: shape must be positive");
        if (shape < 1.0) {
            double u = uniform();
            while (u <= 0.0) u = uniform();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
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
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

    /// Symmetric Dirichlet(1,...,1): normalized unit exponentials.
    std::vector<double> dirichlet_ones(std::size_t k) {
        std::vector<double> w(k);
        double total = 0.0;
        for (auto& wi : w) {
            wi = exponential(1.0);
            total += wi;
        }
        for (auto& wi : w) wi /= total;
        return w;
    }

    /// Partial Fisher-Yates: the first `take` entries of a random
    /// sample without replacement from indices [0, n).
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t take) {
        if (take > n) take = n;
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (std::size_t i = 0; i < take; ++i) {
            const auto j = static_cast<std::size_t>(uniform_int(static_cast<std::int64_t>(i),
                                                                static_cast<std::int64_t>(n - 1)));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(take);
        return idx;
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i - 1)));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    static constexpr double kPi = 3.14159265358979323846;

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ancl
