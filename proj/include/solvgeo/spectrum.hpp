#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "solvgeo/errors.hpp"

namespace solvgeo {

// One diagonal block of the derivation: `dim` coordinates sharing exponent `alpha`.
struct block {
    std::size_t dim = 0;
    double alpha = 0.0;
};

// Block structure of the derivation A = diag(alpha_1 I, ..., alpha_r I) with
// 0 < alpha_1 < ... < alpha_r.  Boundary vectors live in R^n, n = sum dim_i.
class spectrum {
public:
    spectrum() = default;

    const std::vector<block>& blocks() const { return blocks_; }
    std::size_t r() const { return blocks_.size(); }
    std::size_t n() const { return n_; }
    double alpha(std::size_t i) const { return blocks_[i].alpha; }
    double alpha_min() const { return blocks_.front().alpha; }
    double alpha_max() const { return blocks_.back().alpha; }
    std::size_t offset(std::size_t i) const { return offsets_[i]; }
    std::size_t dim(std::size_t i) const { return blocks_[i].dim; }

    // Homogeneous dimension of the boundary relative to the slowest exponent:
    // Q = sum_i dim_i * alpha_i / alpha_1.
    double homogeneous_dimension() const {
        double q = 0.0;
        for (const auto& b : blocks_) q += static_cast<double>(b.dim) * b.alpha / alpha_min();
        return q;
    }

    // Index of the block containing coordinate c.
    std::size_t block_index(std::size_t c) const {
        std::size_t i = 0;
        while (i + 1 < blocks_.size() && c >= offsets_[i + 1]) ++i;
        return i;
    }

    std::span<const double> block_of(const std::vector<double>& x, std::size_t i) const {
        return std::span<const double>(x.data() + offsets_[i], blocks_[i].dim);
    }

    // Euclidean norm of the i-th block of x - y.
    double block_diff_norm(const std::vector<double>& x, const std::vector<double>& y,
                           std::size_t i) const {
        double s = 0.0;
        for (std::size_t k = offsets_[i]; k < offsets_[i] + blocks_[i].dim; ++k) {
            const double d = x[k] - y[k];
            s += d * d;
        }
        return std::sqrt(s);
    }

    void check_vector(const std::vector<double>& x, const char* who) const {
        require(x.size() == n_, errc::dimension_mismatch,
                std::string(who) + ": expected " + std::to_string(n_) + " coordinates, got " +
                    std::to_string(x.size()));
    }

    // Action of e^{tA}: multiply block i by e^{alpha_i t}.
    std::vector<double> flow(const std::vector<double>& x, double t) const {
        check_vector(x, "flow");
        std::vector<double> y(x);
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            const double f = std::exp(blocks_[i].alpha * t);
            for (std::size_t k = offsets_[i]; k < offsets_[i] + blocks_[i].dim; ++k) y[k] *= f;
        }
        return y;
    }

    friend spectrum build_spectrum(const std::vector<block>& blocks);

private:
    std::vector<block> blocks_;
    std::vector<std::size_t> offsets_;
    std::size_t n_ = 0;
};

inline spectrum build_spectrum(const std::vector<block>& blocks) {
    require(!blocks.empty(), errc::non_increasing_exponents, "spectrum needs at least one block");
    double prev = 0.0;
    for (const auto& b : blocks) {
        require(b.dim >= 1, errc::dimension_mismatch, "block dimension must be >= 1");
        require(b.alpha > prev, errc::non_increasing_exponents,
                "exponents must be strictly increasing and positive");
        prev = b.alpha;
    }
    spectrum s;
    s.blocks_ = blocks;
    s.offsets_.resize(blocks.size());
    std::size_t off = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        s.offsets_[i] = off;
        off += blocks[i].dim;
    }
    s.n_ = off;
    return s;
}

// The two workhorse examples: a single hyperbolic block and the mixed 1+1 spectrum.
inline spectrum spectrum_h(double alpha = 1.0, std::size_t dim = 1) {
    return build_spectrum({{dim, alpha}});
}

inline spectrum spectrum_s2() { return build_spectrum({{1, 1.0}, {1, 2.0}}); }

}  // namespace solvgeo
