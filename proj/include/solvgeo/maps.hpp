#pragma once

// Distortion analysis of sampled self-maps of the ideal boundary (R^n, D):
// quasisymmetry profiles, quasisimilarity fitting, pointwise dilatations,
// foliation preservation, the leaf/fiber factorization, and the
// height-respecting check that ties interior self-maps of the group to
// bilipschitz behaviour of their boundary traces.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "boundary_metrics.hpp"
#include "distance.hpp"
#include "errors.hpp"
#include "group.hpp"
#include "rng.hpp"
#include "spectrum.hpp"

namespace solvgeo {

// Which boundary (quasi)metric a profile is measured in.
enum class boundary_metric_kind { parabolic, vertical, euclidean };

inline double boundary_metric(const spectrum& sp, boundary_metric_kind kind,
                              const std::vector<double>& x, const std::vector<double>& y) {
    switch (kind) {
        case boundary_metric_kind::parabolic:
            return dist_D(sp, x, y);
        case boundary_metric_kind::vertical:
            return dist_DY(sp, x, y);
        case boundary_metric_kind::euclidean:
            break;
    }
    require(x.size() == y.size(), errc::dimension_mismatch,
            "euclidean metric needs equal dimensions");
    double s = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) s += (x[c] - y[c]) * (x[c] - y[c]);
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Sampled maps and the closed-form catalog
// ---------------------------------------------------------------------------

struct sampled_map {
    std::vector<std::vector<double>> domain;
    std::vector<std::vector<double>> image;
    bool injective = true;

    [[nodiscard]] std::size_t size() const { return domain.size(); }
};

inline sampled_map make_sampled_map(std::vector<std::vector<double>> domain,
                                    std::vector<std::vector<double>> image,
                                    bool injective = true) {
    require(domain.size() == image.size(), errc::dimension_mismatch,
            "domain and image sample sizes differ");
    if (!domain.empty()) {
        const std::size_t d = domain.front().size();
        for (const auto& v : domain)
            require(v.size() == d, errc::dimension_mismatch, "ragged domain sample");
        for (const auto& v : image)
            require(v.size() == d, errc::dimension_mismatch,
                    "image dimension differs from domain");
        std::vector<std::size_t> order(domain.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return domain[a] < domain[b]; });
        for (std::size_t i = 1; i < order.size(); ++i)
            require(domain[order[i - 1]] != domain[order[i]], errc::invalid_argument,
                    "duplicate domain point");
    }
    sampled_map m;
    m.domain = std::move(domain);
    m.image = std::move(image);
    m.injective = injective;
    return m;
}

inline sampled_map make_map(const std::vector<std::vector<double>>& domain,
                            const std::function<std::vector<double>(const std::vector<double>&)>& f,
                            bool injective = true) {
    std::vector<std::vector<double>> image;
    image.reserve(domain.size());
    for (const auto& x : domain) image.push_back(f(x));
    return make_sampled_map(domain, std::move(image), injective);
}

// Swap of domain and image; only meaningful for injective samples.
inline sampled_map inverse_map(const sampled_map& m) {
    require(m.injective, errc::invalid_argument, "inverse of a non-injective map");
    return make_sampled_map(m.image, m.domain, true);
}

// Random boundary sample, coordinates uniform in [-half_width, half_width].
inline std::vector<std::vector<double>> boundary_sample(const spectrum& sp, std::size_t count,
                                                        double half_width, std::uint64_t seed) {
    require(half_width > 0.0, errc::non_positive_radius, "sample half width must be positive");
    rng gen(seed);
    std::vector<std::vector<double>> pts;
    pts.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        pts.push_back(gen.uniform_vector(sp.n(), -half_width, half_width));
    return pts;
}

// Sample organized along horizontal leaves: `leaves` distinct Y-components,
// each carrying `per_leaf` first-block points.  Needed by the foliation and
// factorization checks, which group points by exact Y equality.
inline std::vector<std::vector<double>> leaf_structured_sample(const spectrum& sp,
                                                               std::size_t leaves,
                                                               std::size_t per_leaf,
                                                               double half_width,
                                                               std::uint64_t seed) {
    require(sp.r() >= 2, errc::single_block_spectrum,
            "leaf-structured samples need at least two blocks");
    require(half_width > 0.0, errc::non_positive_radius, "sample half width must be positive");
    rng gen(seed);
    const std::size_t n1 = sp.dim(0);
    std::vector<std::vector<double>> pts;
    pts.reserve(leaves * per_leaf);
    for (std::size_t l = 0; l < leaves; ++l) {
        const auto y = gen.uniform_vector(sp.n() - n1, -half_width, half_width);
        for (std::size_t k = 0; k < per_leaf; ++k) {
            auto x = gen.uniform_vector(n1, -half_width, half_width);
            x.insert(x.end(), y.begin(), y.end());
            pts.push_back(std::move(x));
        }
    }
    return pts;
}

// Block scaling x_i -> lambda^{alpha_i/alpha_1} x_i: the exact similarity of D
// with factor lambda.
inline std::vector<double> apply_similarity(const spectrum& sp, double lambda,
                                            const std::vector<double>& x) {
    require(lambda > 0.0, errc::invalid_argument, "similarity factor must be positive");
    sp.check_vector(x, "apply_similarity");
    std::vector<double> out(x);
    for (std::size_t i = 0; i < sp.r(); ++i) {
        const double f = std::pow(lambda, sp.alpha(i) / sp.alpha_min());
        for (std::size_t c = sp.offset(i); c < sp.offset(i) + sp.dim(i); ++c) out[c] *= f;
    }
    return out;
}

// Holder shear along the first block, driven by the leading coordinate of the
// second block: x_1 += L |x_2|^exponent.  With exponent = alpha_1/alpha_2 this
// is a bilipschitz map of (R^n, D) with constant (1+L).
inline std::vector<double> apply_shear(const spectrum& sp, double shear, double exponent,
                                       const std::vector<double>& x) {
    require(sp.r() >= 2, errc::single_block_spectrum, "shear needs a second block");
    sp.check_vector(x, "apply_shear");
    std::vector<double> out(x);
    out[sp.offset(0)] += shear * std::pow(std::abs(x[sp.offset(1)]), exponent);
    return out;
}

// Rotation of the first two global coordinates; on a spectrum with n_1 = 1
// this mixes blocks of different exponents and destroys quasisymmetry.
inline std::vector<double> apply_rotation(double theta, const std::vector<double>& x) {
    require(x.size() >= 2, errc::dimension_mismatch, "rotation needs at least two coordinates");
    std::vector<double> out(x);
    const double c = std::cos(theta), s = std::sin(theta);
    out[0] = c * x[0] - s * x[1];
    out[1] = s * x[0] + c * x[1];
    return out;
}

// Per-block linear scaling plus a global translation.
inline std::vector<double> apply_block_affine(const spectrum& sp,
                                              const std::vector<double>& scales,
                                              const std::vector<double>& shift,
                                              const std::vector<double>& x) {
    require(scales.size() == sp.r(), errc::dimension_mismatch,
            "one scale per block required");
    require(shift.size() == sp.n(), errc::dimension_mismatch,
            "shift dimension mismatch");
    sp.check_vector(x, "apply_block_affine");
    std::vector<double> out(sp.n());
    for (std::size_t i = 0; i < sp.r(); ++i)
        for (std::size_t c = sp.offset(i); c < sp.offset(i) + sp.dim(i); ++c)
            out[c] = scales[i] * x[c] + shift[c];
    return out;
}

// Boundary trace of the left translation by g: xi -> g.x + e^{g.t A} xi.
inline std::vector<double> apply_translation_boundary(const spectrum& sp, const group_point& g,
                                                      const std::vector<double>& xi) {
    sp.check_vector(xi, "apply_translation_boundary");
    auto out = sp.flow(xi, g.t);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += g.x[c];
    return out;
}

inline sampled_map make_identity_map(const std::vector<std::vector<double>>& domain) {
    return make_map(domain, [](const std::vector<double>& x) { return x; });
}

inline sampled_map make_similarity_map(const spectrum& sp,
                                       const std::vector<std::vector<double>>& domain,
                                       double lambda) {
    return make_map(domain,
                    [&](const std::vector<double>& x) { return apply_similarity(sp, lambda, x); });
}

inline sampled_map make_shear_map(const spectrum& sp,
                                  const std::vector<std::vector<double>>& domain, double shear,
                                  double exponent = std::numeric_limits<double>::quiet_NaN()) {
    require(sp.r() >= 2, errc::single_block_spectrum, "shear needs a second block");
    const double e = std::isnan(exponent) ? sp.alpha_min() / sp.alpha(1) : exponent;
    require(e > 0.0, errc::invalid_argument, "shear exponent must be positive");
    return make_map(domain,
                    [&, e](const std::vector<double>& x) { return apply_shear(sp, shear, e, x); });
}

inline sampled_map make_rotation_map(const std::vector<std::vector<double>>& domain,
                                     double theta) {
    return make_map(domain,
                    [theta](const std::vector<double>& x) { return apply_rotation(theta, x); });
}

inline sampled_map make_block_affine_map(const spectrum& sp,
                                         const std::vector<std::vector<double>>& domain,
                                         const std::vector<double>& scales,
                                         const std::vector<double>& shift) {
    bool inj = true;
    for (double s : scales) inj = inj && s != 0.0;
    return make_map(
        domain,
        [&](const std::vector<double>& x) { return apply_block_affine(sp, scales, shift, x); },
        inj);
}

// ---------------------------------------------------------------------------
// Quasisymmetry profiles
// ---------------------------------------------------------------------------

// Per-bin maxima of output ratios against input ratios t over 32 log-spaced
// bins on [1e-3, 1e3]; triples landing outside are clamped into the end bins
// and counted.  Profiles merge as monoids (per-bin max, global sup/inf).
struct distortion_profile {
    static constexpr std::size_t bins = 32;
    static constexpr double t_min = 1e-3;
    static constexpr double t_max = 1e3;

    std::array<double, bins> eta{};
    std::array<std::size_t, bins> filled{};
    double k_plus = 0.0;
    double k_minus = std::numeric_limits<double>::infinity();
    std::size_t clamped_low = 0;
    std::size_t clamped_high = 0;
    std::size_t triples_used = 0;
    std::size_t triples_skipped = 0;

    static std::size_t bin_of(double t) {
        const double u = (std::log10(t) + 3.0) / 6.0;
        const double idx = std::floor(u * static_cast<double>(bins));
        if (idx < 0.0) return 0;
        if (idx >= static_cast<double>(bins)) return bins - 1;
        return static_cast<std::size_t>(idx);
    }

    static double bin_upper(std::size_t b) {
        return std::pow(10.0, -3.0 + 6.0 * static_cast<double>(b + 1) / static_cast<double>(bins));
    }

    // Monotone envelope: a quasisymmetry gauge is nondecreasing, so the raw
    // per-bin maxima are completed by a running max.  Idempotent.
    void finalize() {
        for (std::size_t b = 1; b < bins; ++b) eta[b] = std::max(eta[b], eta[b - 1]);
    }

    [[nodiscard]] double eta_at(double t) const { return eta[bin_of(t)]; }

    void merge(const distortion_profile& other) {
        for (std::size_t b = 0; b < bins; ++b) {
            eta[b] = std::max(eta[b], other.eta[b]);
            filled[b] += other.filled[b];
        }
        k_plus = std::max(k_plus, other.k_plus);
        k_minus = std::min(k_minus, other.k_minus);
        clamped_low += other.clamped_low;
        clamped_high += other.clamped_high;
        triples_used += other.triples_used;
        triples_skipped += other.triples_skipped;
    }
};

inline distortion_profile qs_profile(const spectrum& sp, const sampled_map& m,
                                     boundary_metric_kind kind, std::size_t triples,
                                     std::uint64_t seed) {
    require(m.size() >= 3, errc::too_few_points, "profile needs at least three points");
    distortion_profile prof;
    rng gen(seed);
    const auto dist = [&](const std::vector<double>& a, const std::vector<double>& b) {
        return boundary_metric(sp, kind, a, b);
    };
    for (std::size_t k = 0; k < triples; ++k) {
        const std::size_t i = gen.index(m.size());
        std::size_t j = gen.index(m.size());
        std::size_t l = gen.index(m.size());
        if (i == j || i == l || j == l) {
            ++prof.triples_skipped;
            continue;
        }
        const double in_ab = dist(m.domain[i], m.domain[j]);
        const double in_ac = dist(m.domain[i], m.domain[l]);
        const double out_ab = dist(m.image[i], m.image[j]);
        const double out_ac = dist(m.image[i], m.image[l]);
        if (!(in_ab > 0.0) || !(in_ac > 0.0) || !(out_ac > 0.0) || !std::isfinite(in_ab) ||
            !std::isfinite(in_ac) || !std::isfinite(out_ab) || !std::isfinite(out_ac)) {
            ++prof.triples_skipped;
            continue;
        }
        const double t = in_ab / in_ac;
        const double out = out_ab / out_ac;
        if (t < distortion_profile::t_min) ++prof.clamped_low;
        if (t > distortion_profile::t_max) ++prof.clamped_high;
        const std::size_t b = distortion_profile::bin_of(t);
        prof.eta[b] = std::max(prof.eta[b], out);
        ++prof.filled[b];
        ++prof.triples_used;
        prof.k_plus = std::max(prof.k_plus, out_ab / in_ab);
        prof.k_minus = std::min(prof.k_minus, out_ab / in_ab);
        prof.k_plus = std::max(prof.k_plus, out_ac / in_ac);
        prof.k_minus = std::min(prof.k_minus, out_ac / in_ac);
    }
    require(prof.triples_used > 0, errc::too_few_points, "no usable triples in sample");
    prof.finalize();
    return prof;
}

// ---------------------------------------------------------------------------
// Quasisimilarity fit
// ---------------------------------------------------------------------------

struct similarity_fit {
    double k_hat = 0.0;
    double c_hat = 0.0;
    double k_plus = 0.0;
    double k_minus = 0.0;
    std::size_t pairs = 0;
};

// C-hat is the geometric mean of the pair ratios; K-hat measures how far the
// extreme ratios sit from that central similarity factor.
inline similarity_fit quasisimilarity_fit(const spectrum& sp, const sampled_map& m,
                                          boundary_metric_kind kind,
                                          std::size_t pair_budget = 20000,
                                          std::uint64_t seed = 1) {
    require(m.size() >= 2, errc::too_few_points, "fit needs at least two points");
    similarity_fit fit;
    fit.k_minus = std::numeric_limits<double>::infinity();
    double log_sum = 0.0;
    const auto consume = [&](std::size_t i, std::size_t j) {
        const double in = boundary_metric(sp, kind, m.domain[i], m.domain[j]);
        if (!(in > 0.0) || !std::isfinite(in)) return;
        const double out = boundary_metric(sp, kind, m.image[i], m.image[j]);
        if (!std::isfinite(out)) return;
        if (!(out > 0.0)) {
            fit.k_minus = 0.0;  // collapsed pair: no lower similarity bound
            ++fit.pairs;
            return;
        }
        const double ratio = out / in;
        fit.k_plus = std::max(fit.k_plus, ratio);
        fit.k_minus = std::min(fit.k_minus, ratio);
        log_sum += std::log(ratio);
        ++fit.pairs;
    };
    const std::size_t all = m.size() * (m.size() - 1) / 2;
    if (all <= pair_budget) {
        for (std::size_t i = 0; i < m.size(); ++i)
            for (std::size_t j = i + 1; j < m.size(); ++j) consume(i, j);
    } else {
        rng gen(seed);
        for (std::size_t k = 0; k < pair_budget; ++k) {
            const std::size_t i = gen.index(m.size());
            const std::size_t j = gen.index(m.size());
            if (i != j) consume(i, j);
        }
    }
    require(fit.pairs > 0, errc::too_few_points, "no usable pairs in sample");
    fit.c_hat = std::exp(log_sum / static_cast<double>(fit.pairs));
    fit.k_hat = fit.k_minus > 0.0
                    ? std::max(fit.k_plus / fit.c_hat, fit.c_hat / fit.k_minus)
                    : std::numeric_limits<double>::infinity();
    return fit;
}

// ---------------------------------------------------------------------------
// Pointwise dilatation estimates
// ---------------------------------------------------------------------------

struct pointwise_report {
    std::vector<double> radii;
    std::vector<double> big_l;    // L(x,r) = sup image distance over the r-ball
    std::vector<double> little_l; // l(x,r) = inf image distance outside the r-ball
    double big_l_limit = 0.0;     // power-law extrapolation of L(x,r)/r at the smallest radius
    double little_l_limit = 0.0;
    std::size_t neighbors = 0;
};

namespace detail {

// Least-squares power-law fit log v = a + b log r over the smallest radii,
// reported as the ratio v/r evaluated at the smallest radius.
inline double ratio_limit(const std::vector<double>& radii, const std::vector<double>& values) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < radii.size(); ++k)
        if (std::isfinite(values[k]) && values[k] > 0.0)
            pts.emplace_back(std::log(radii[k]), std::log(values[k]));
    if (pts.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(pts.begin(), pts.end());
    if (pts.size() > 3) pts.erase(pts.begin() + 3, pts.end());
    if (pts.size() == 1) return std::exp(pts[0].second - pts[0].first);
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [lx, ly] : pts) {
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double nn = static_cast<double>(pts.size());
    const double denom = nn * sxx - sx * sx;
    if (std::abs(denom) < 1e-14) return std::exp(pts[0].second - pts[0].first);
    const double b = (nn * sxy - sx * sy) / denom;
    const double a = (sy - b * sx) / nn;
    const double lr = pts.front().first;
    return std::exp(a + (b - 1.0) * lr);
}

}  // namespace detail

inline pointwise_report pointwise_distortion(const spectrum& sp, const sampled_map& m,
                                             boundary_metric_kind kind, std::size_t index,
                                             std::vector<double> radii) {
    require(index < m.size(), errc::invalid_argument, "base index out of range");
    require(!radii.empty(), errc::invalid_argument, "no radii given");
    for (double r : radii)
        require(r > 0.0 && std::isfinite(r), errc::non_positive_radius,
                "radii must be positive");
    const double r_max = *std::max_element(radii.begin(), radii.end());
    std::vector<std::pair<double, double>> legs;  // (input distance, image distance)
    for (std::size_t j = 0; j < m.size(); ++j) {
        if (j == index) continue;
        const double in = boundary_metric(sp, kind, m.domain[index], m.domain[j]);
        if (!(in > 0.0) || !std::isfinite(in)) continue;
        legs.emplace_back(in, boundary_metric(sp, kind, m.image[index], m.image[j]));
    }
    std::size_t inside = 0;
    for (const auto& [in, out] : legs)
        if (in <= r_max) ++inside;
    require(inside >= 20, errc::sparse_neighborhood,
            "fewer than 20 sample points within the largest radius");
    pointwise_report rep;
    rep.radii = std::move(radii);
    rep.neighbors = inside;
    for (double r : rep.radii) {
        double big = 0.0;
        double little = std::numeric_limits<double>::infinity();
        for (const auto& [in, out] : legs) {
            if (in <= r) big = std::max(big, out);
            if (in >= r) little = std::min(little, out);
        }
        rep.big_l.push_back(big);
        rep.little_l.push_back(little);
    }
    rep.big_l_limit = detail::ratio_limit(rep.radii, rep.big_l);
    rep.little_l_limit = detail::ratio_limit(rep.radii, rep.little_l);
    return rep;
}

// ---------------------------------------------------------------------------
// Foliation preservation and factorization
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> leaf_part(const spectrum& sp, const std::vector<double>& x) {
    return {x.begin() + static_cast<std::ptrdiff_t>(sp.dim(0)), x.end()};
}

inline std::vector<double> fiber_part(const spectrum& sp, const std::vector<double>& x) {
    return {x.begin(), x.begin() + static_cast<std::ptrdiff_t>(sp.dim(0))};
}

// D_Y on bare leaf vectors (block coordinates shifted down by n_1).
inline double leaf_metric(const spectrum& sp, const std::vector<double>& a,
                          const std::vector<double>& b) {
    const std::size_t n1 = sp.dim(0);
    double best = 0.0;
    for (std::size_t i = 1; i < sp.r(); ++i) {
        double s = 0.0;
        for (std::size_t c = sp.offset(i); c < sp.offset(i) + sp.dim(i); ++c) {
            const double d = a[c - n1] - b[c - n1];
            s += d * d;
        }
        if (s > 0.0)
            best = std::max(best, std::pow(std::sqrt(s), sp.alpha_min() / sp.alpha(i)));
    }
    return best;
}

// Indices grouped by exactly equal Y-component.
inline std::vector<std::vector<std::size_t>> leaf_groups(const spectrum& sp,
                                                         const std::vector<std::vector<double>>& pts) {
    std::map<std::vector<double>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < pts.size(); ++i) groups[leaf_part(sp, pts[i])].push_back(i);
    std::vector<std::vector<std::size_t>> out;
    out.reserve(groups.size());
    for (auto& [y, idx] : groups) out.push_back(std::move(idx));
    return out;
}

}  // namespace detail

struct foliation_report {
    double max_spread = 0.0;
    bool preserves = false;
    std::size_t leaves_checked = 0;
    std::size_t leaves_skipped = 0;
};

// A map preserves the horizontal foliation when points sharing a leaf keep
// sharing one: the D_Y-spread of each image leaf must vanish.
inline foliation_report foliation_check(const spectrum& sp, const sampled_map& m,
                                        double tol = 1e-9) {
    require(sp.r() >= 2, errc::single_block_spectrum,
            "foliation check needs at least two blocks");
    foliation_report rep;
    for (const auto& group : detail::leaf_groups(sp, m.domain)) {
        if (group.size() < 2) {
            ++rep.leaves_skipped;
            continue;
        }
        ++rep.leaves_checked;
        for (std::size_t a = 0; a < group.size(); ++a)
            for (std::size_t b = a + 1; b < group.size(); ++b)
                rep.max_spread = std::max(
                    rep.max_spread, dist_DY(sp, m.image[group[a]], m.image[group[b]]));
    }
    require(rep.leaves_checked > 0, errc::too_few_points,
            "no leaf carries two or more sample points");
    rep.preserves = rep.max_spread <= tol;
    return rep;
}

struct factorization {
    std::vector<std::vector<double>> leaf_domain;  // distinct Y values
    std::vector<std::vector<double>> leaf_image;   // their image Y values
    std::vector<sampled_map> fibers;               // per-leaf first-block maps

    [[nodiscard]] sampled_map leaf_map() const {
        return make_sampled_map(leaf_domain, leaf_image);
    }
};

// Split a foliation-preserving map into the induced leaf-space map G and the
// per-leaf fiber maps H_y.
inline factorization factorize(const spectrum& sp, const sampled_map& m, double tol = 1e-9) {
    const auto check = foliation_check(sp, m, tol);
    require(check.preserves, errc::foliation_broken,
            "image leaves spread beyond tolerance");
    factorization fact;
    for (const auto& group : detail::leaf_groups(sp, m.domain)) {
        fact.leaf_domain.push_back(detail::leaf_part(sp, m.domain[group.front()]));
        fact.leaf_image.push_back(detail::leaf_part(sp, m.image[group.front()]));
        std::vector<std::vector<double>> fd, fi;
        fd.reserve(group.size());
        fi.reserve(group.size());
        for (std::size_t i : group) {
            fd.push_back(detail::fiber_part(sp, m.domain[i]));
            fi.push_back(detail::fiber_part(sp, m.image[i]));
        }
        fact.fibers.push_back(make_sampled_map(std::move(fd), std::move(fi)));
    }
    return fact;
}

// ---------------------------------------------------------------------------
// Leaf-versus-fiber dilatation inequality
// ---------------------------------------------------------------------------

struct l1_report {
    double eta1 = 0.0;       // profile envelope at ratio 1
    double max_ratio = 0.0;  // max of L_G(y,r) / (eta1 * l_H(x,r))
    std::size_t checked = 0;
    std::size_t violations = 0;
    double slack = 0.0;
};

// For a foliation-preserving quasisymmetry, the leaf map cannot stretch more
// than the gauge at ratio one times the least fiber stretch:
// L_G(y,r) <= eta(1) * l_{H_y}(x,r).  Verified on the sampled factorization.
inline l1_report l1_inequality_check(const spectrum& sp, const sampled_map& m,
                                     const std::vector<double>& radii, double slack = 0.1,
                                     std::size_t triples = 4000, std::uint64_t seed = 7) {
    require(!radii.empty(), errc::invalid_argument, "no radii given");
    const auto fact = factorize(sp, m);
    const auto prof = qs_profile(sp, m, boundary_metric_kind::parabolic, triples, seed);
    l1_report rep;
    rep.slack = slack;
    rep.eta1 = prof.eta_at(1.0);
    const std::size_t leaves = fact.leaf_domain.size();
    for (std::size_t a = 0; a < leaves; ++a) {
        for (double r : radii) {
            require(r > 0.0, errc::non_positive_radius, "radii must be positive");
            // Leaf-space stretch over the r-ball around leaf a.
            double big = 0.0;
            bool any = false;
            for (std::size_t b = 0; b < leaves; ++b) {
                if (b == a) continue;
                const double in = detail::leaf_metric(sp, fact.leaf_domain[a],
                                                      fact.leaf_domain[b]);
                if (!(in > 0.0) || in > r) continue;
                big = std::max(big,
                               detail::leaf_metric(sp, fact.leaf_image[a], fact.leaf_image[b]));
                any = true;
            }
            if (!any) continue;
            // Least fiber stretch outside radius r, over sampled base points.
            const auto& fiber = fact.fibers[a];
            for (std::size_t p = 0; p < fiber.size(); ++p) {
                double little = std::numeric_limits<double>::infinity();
                for (std::size_t q = 0; q < fiber.size(); ++q) {
                    if (p == q) continue;
                    const double in = boundary_metric(sp, boundary_metric_kind::euclidean,
                                                      fiber.domain[p], fiber.domain[q]);
                    if (in < r) continue;
                    little = std::min(little,
                                      boundary_metric(sp, boundary_metric_kind::euclidean,
                                                      fiber.image[p], fiber.image[q]));
                }
                if (!std::isfinite(little) || !(little > 0.0)) continue;
                const double ratio = big / (rep.eta1 * little);
                rep.max_ratio = std::max(rep.max_ratio, ratio);
                if (ratio > 1.0 + slack) ++rep.violations;
                ++rep.checked;
            }
        }
    }
    require(rep.checked > 0, errc::too_few_points,
            "no usable (leaf, base point, radius) combination");
    return rep;
}

// ---------------------------------------------------------------------------
// Global quasisimilarity bound
// ---------------------------------------------------------------------------

struct main_bound_report {
    double k_hat = 0.0;
    double c_hat = 0.0;
    double eta_at_1 = 0.0;
    double eta_inv_at_1 = 0.0;
    double bound = 0.0;
    bool consistent = false;
    bool analytic_eta = false;
};

namespace detail {

// Max output ratio near input ratio 1, bucketed by the decade of the pair
// scale.  A quasisymmetric map keeps these buckets comparable; scale
// divergence (for instance under a block-mixing rotation) shows up as orders
// of magnitude between buckets.
inline std::map<int, double> scale_buckets(const spectrum& sp, const sampled_map& m,
                                           boundary_metric_kind kind, std::size_t triples,
                                           std::uint64_t seed) {
    std::map<int, double> buckets;
    rng gen(seed);
    for (std::size_t k = 0; k < triples; ++k) {
        const std::size_t i = gen.index(m.size());
        std::size_t j = gen.index(m.size());
        std::size_t l = gen.index(m.size());
        if (i == j || i == l || j == l) continue;
        const double in_ab = boundary_metric(sp, kind, m.domain[i], m.domain[j]);
        const double in_ac = boundary_metric(sp, kind, m.domain[i], m.domain[l]);
        const double out_ab = boundary_metric(sp, kind, m.image[i], m.image[j]);
        const double out_ac = boundary_metric(sp, kind, m.image[i], m.image[l]);
        if (!(in_ab > 0.0) || !(in_ac > 0.0) || !(out_ac > 0.0)) continue;
        const double t = in_ab / in_ac;
        if (t < 0.5 || t > 2.0) continue;
        const int decade = static_cast<int>(std::floor(std::log10(in_ab)));
        auto [it, inserted] = buckets.emplace(decade, out_ab / out_ac);
        if (!inserted) it->second = std::max(it->second, out_ab / out_ac);
    }
    return buckets;
}

}  // namespace detail

// Consistency of the fitted quasisimilarity constant with the gauge bound
// K = (eta(1)/eta^{-1}(1))^{2r+2}.  An analytic gauge must be supplied for the
// bound to be trustworthy: empirical envelopes under-estimate eta.
inline main_bound_report main_bound_check(
    const spectrum& sp, const sampled_map& m, boundary_metric_kind kind,
    const std::function<double(double)>& analytic_eta = nullptr, std::size_t triples = 20000,
    std::uint64_t seed = 11) {
    const auto prof = qs_profile(sp, m, kind, triples, seed);
    const auto fit = quasisimilarity_fit(sp, m, kind);
    require(fit.k_minus > 0.0, errc::not_quasisymmetric, "sample collapses a pair");
    const auto buckets = detail::scale_buckets(sp, m, kind, triples, seed + 1);
    if (buckets.size() >= 2) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (const auto& [dec, v] : buckets) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        require(hi <= 100.0 * lo, errc::not_quasisymmetric,
                "output ratios at ratio ~1 diverge across scales");
    }
    main_bound_report rep;
    rep.k_hat = fit.k_hat;
    rep.c_hat = fit.c_hat;
    rep.analytic_eta = static_cast<bool>(analytic_eta);
    if (analytic_eta) {
        rep.eta_at_1 = analytic_eta(1.0);
        double lo = 1e-12, hi = 1e12;
        require(analytic_eta(hi) >= 1.0 && analytic_eta(lo) <= 1.0, errc::invalid_argument,
                "analytic gauge must cross 1 on [1e-12, 1e12]");
        for (int it = 0; it < 200; ++it) {
            const double mid = std::sqrt(lo * hi);
            (analytic_eta(mid) < 1.0 ? lo : hi) = mid;
        }
        rep.eta_inv_at_1 = std::sqrt(lo * hi);
    } else {
        rep.eta_at_1 = prof.eta_at(1.0);
        // Generalized inverse of the envelope: the largest bin edge whose
        // envelope value stays at or below 1 (an over-estimate of eta^{-1}(1)).
        double inv = distortion_profile::t_min;
        for (std::size_t b = 0; b < distortion_profile::bins; ++b)
            if (prof.filled[b] > 0 && prof.eta[b] <= 1.0)
                inv = distortion_profile::bin_upper(b);
        rep.eta_inv_at_1 = inv;
    }
    require(rep.eta_inv_at_1 > 0.0, errc::not_quasisymmetric, "gauge inverse at 1 is zero");
    const double base = rep.eta_at_1 / rep.eta_inv_at_1;
    rep.bound = std::pow(base, 2.0 * static_cast<double>(sp.r()) + 2.0);
    rep.consistent = rep.k_hat <= rep.bound * (1.0 + 1e-12);
    return rep;
}

// ---------------------------------------------------------------------------
// Height-respecting check for interior self-maps
// ---------------------------------------------------------------------------

struct sampled_group_map {
    std::vector<group_point> domain;
    std::vector<group_point> image;

    [[nodiscard]] std::size_t size() const { return domain.size(); }
};

inline sampled_group_map make_group_map(
    const std::vector<group_point>& domain,
    const std::function<group_point(const group_point&)>& f) {
    sampled_group_map m;
    m.domain = domain;
    m.image.reserve(domain.size());
    for (const auto& p : domain) m.image.push_back(f(p));
    return m;
}

struct height_respect_options {
    double height_bound = 100.0;     // verdict threshold for the height defect
    double bilip_bound = 100.0;      // verdict threshold for the boundary fit
    double match_tol = 1e-9;         // boundary point <-> interior sample matching
    double consistency_tol = 1e-6;   // boundary trace agreement
    std::size_t pair_budget = 40;    // distance pairs for the almost-isometry defect
    std::uint64_t seed = 1;
    bvp_options bvp = bvp_quick();
};

struct height_respect_report {
    double height_defect = 0.0;           // sup |height(f(p)) - height(p)|
    double boundary_k_hat = 0.0;
    double boundary_c_hat = 0.0;
    double almost_isometry_defect = 0.0;  // sup |d(fp,fq) - d(p,q)| over sampled pairs
    std::size_t pairs_checked = 0;
    bool height_respecting = false;
    bool boundary_bilipschitz = false;
};

// Both sides of the equivalence for a candidate quasiisometry: the interior
// height defect and the quasisimilarity constant of its boundary trace.  The
// boundary map must actually be the trace of the interior map on the sampled
// vertical lines, checked at the deepest interior sample over each footprint.
inline height_respect_report height_respecting_check(const spectrum& sp,
                                                     const sampled_group_map& gm,
                                                     const sampled_map& bm,
                                                     const height_respect_options& opts = {}) {
    require(gm.domain.size() == gm.image.size(), errc::dimension_mismatch,
            "group map sample sizes differ");
    require(gm.size() >= 2, errc::too_few_points, "need at least two interior samples");
    const auto inf_dist = [](const std::vector<double>& a, const std::vector<double>& b) {
        double d = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) d = std::max(d, std::abs(a[c] - b[c]));
        return d;
    };
    for (std::size_t i = 0; i < bm.size(); ++i) {
        std::size_t best = gm.size();
        for (std::size_t j = 0; j < gm.size(); ++j) {
            if (inf_dist(gm.domain[j].x, bm.domain[i]) > opts.match_tol) continue;
            if (best == gm.size() || gm.domain[j].t < gm.domain[best].t) best = j;
        }
        require(best < gm.size(), errc::inconsistent_pair,
                "boundary point has no interior sample above it");
        require(inf_dist(gm.image[best].x, bm.image[i]) <= opts.consistency_tol,
                errc::inconsistent_pair,
                "boundary image disagrees with the interior map's trace");
    }
    height_respect_report rep;
    for (std::size_t j = 0; j < gm.size(); ++j)
        rep.height_defect = std::max(rep.height_defect,
                                     std::abs(gm.image[j].t - gm.domain[j].t));
    const auto fit = quasisimilarity_fit(sp, bm, boundary_metric_kind::parabolic);
    rep.boundary_k_hat = fit.k_hat;
    rep.boundary_c_hat = fit.c_hat;
    rng gen(opts.seed);
    for (std::size_t k = 0; k < opts.pair_budget; ++k) {
        const std::size_t i = gen.index(gm.size());
        const std::size_t j = gen.index(gm.size());
        if (i == j) continue;
        const double din = distance(sp, gm.domain[i], gm.domain[j], opts.bvp);
        const double dout = distance(sp, gm.image[i], gm.image[j], opts.bvp);
        rep.almost_isometry_defect =
            std::max(rep.almost_isometry_defect, std::abs(dout - din));
        ++rep.pairs_checked;
    }
    rep.height_respecting = rep.height_defect <= opts.height_bound;
    rep.boundary_bilipschitz = std::isfinite(rep.boundary_k_hat) &&
                               rep.boundary_k_hat <= opts.bilip_bound;
    return rep;
}

// ---------------------------------------------------------------------------
// CSV exchange
// ---------------------------------------------------------------------------

inline void save_map_csv(const std::string& path, const sampled_map& m) {
    std::ofstream out(path);
    require(out.good(), errc::invalid_argument, "cannot open map file for writing");
    const std::size_t d = m.size() == 0 ? 0 : m.domain.front().size();
    for (std::size_t c = 0; c < d; ++c) out << (c ? "," : "") << "x" << c;
    for (std::size_t c = 0; c < d; ++c) out << ",y" << c;
    out << "\n";
    out.precision(17);
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t c = 0; c < d; ++c) out << (c ? "," : "") << m.domain[i][c];
        for (std::size_t c = 0; c < d; ++c) out << "," << m.image[i][c];
        out << "\n";
    }
    require(out.good(), errc::invalid_argument, "write to map file failed");
}

inline sampled_map load_map_csv(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), errc::invalid_argument, "cannot open map file");
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), errc::config_invalid,
            "map file is empty");
    std::size_t xs = 0, ys = 0;
    {
        std::stringstream header(line);
        std::string cell;
        while (std::getline(header, cell, ',')) {
            if (cell.rfind('x', 0) == 0)
                ++xs;
            else if (cell.rfind('y', 0) == 0)
                ++ys;
            else
                fail(errc::config_invalid, "map header must hold x- and y-columns");
        }
    }
    require(xs > 0 && xs == ys, errc::config_invalid,
            "map header needs matching x- and y-column counts");
    std::vector<std::vector<double>> domain, image;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(row, cell, ',')) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                fail(errc::config_invalid, "non-numeric cell in map file");
            }
        }
        require(values.size() == xs + ys, errc::config_invalid,
                "map row has wrong number of cells");
        domain.emplace_back(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(xs));
        image.emplace_back(values.begin() + static_cast<std::ptrdiff_t>(xs), values.end());
    }
    return make_sampled_map(std::move(domain), std::move(image));
}

}  // namespace solvgeo
