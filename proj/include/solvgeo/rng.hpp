#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace solvgeo {

// Deterministic splitmix64 stream.  Campaign reports must be byte-identical
// for a fixed (config, seed), so sampling avoids the standard-library
// distributions whose sequences are implementation-defined.
class rng {
public:
    explicit rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Log-uniform over [lo, hi], lo > 0.
    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

    std::vector<double> uniform_vector(std::size_t n, double lo, double hi) {
        std::vector<double> v(n);
        for (auto& x : v) x = uniform(lo, hi);
        return v;
    }

    // Unit vector by normalized Gaussian components (Box-Muller, deterministic).
    std::vector<double> unit_vector(std::size_t n) {
        std::vector<double> v(n);
        double norm2 = 0.0;
        for (std::size_t i = 0; i < n; i += 2) {
            double u1 = uniform01();
            double u2 = uniform01();
            if (u1 < 1e-300) u1 = 1e-300;
            double rad = std::sqrt(-2.0 * std::log(u1));
            v[i] = rad * std::cos(6.283185307179586 * u2);
            if (i + 1 < n) v[i + 1] = rad * std::sin(6.283185307179586 * u2);
        }
        for (double x : v) norm2 += x * x;
        if (norm2 == 0.0) {
            v[0] = 1.0;
            norm2 = 1.0;
        }
        double inv = 1.0 / std::sqrt(norm2);
        for (auto& x : v) x *= inv;
        return v;
    }

    // Independent child stream; used to shard campaigns deterministically.
    rng fork(std::uint64_t tag) const {
        rng child(state_ ^ (0x6a09e667f3bcc909ULL + tag * 0x9e3779b97f4a7c15ULL));
        child.next_u64();
        return child;
    }

    static std::uint64_t hash_string(std::string_view s) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

private:
    std::uint64_t state_;
};

}  // namespace solvgeo
