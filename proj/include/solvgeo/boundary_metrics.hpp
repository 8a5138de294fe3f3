#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "solvgeo/errors.hpp"
#include "solvgeo/spectrum.hpp"

namespace solvgeo {

// Supremum-of-roots quasimetric  D_s(x,y) = max_i |x_i - y_i|^{1/alpha_i}.
inline double dist_Ds(const spectrum& sp, const std::vector<double>& x,
                      const std::vector<double>& y) {
    sp.check_vector(x, "dist_Ds");
    sp.check_vector(y, "dist_Ds");
    double best = 0.0;
    for (std::size_t i = 0; i < sp.r(); ++i) {
        const double d = sp.block_diff_norm(x, y, i);
        if (d > 0.0) best = std::max(best, std::pow(d, 1.0 / sp.alpha(i)));
    }
    return best;
}

// The metric  D = D_s^{alpha_1},  i.e.  max_i |x_i - y_i|^{alpha_1/alpha_i};
// the first block enters with exponent 1, faster blocks are snowflaked.
inline double dist_D(const spectrum& sp, const std::vector<double>& x,
                     const std::vector<double>& y) {
    sp.check_vector(x, "dist_D");
    sp.check_vector(y, "dist_D");
    double best = 0.0;
    const double a1 = sp.alpha_min();
    for (std::size_t i = 0; i < sp.r(); ++i) {
        const double d = sp.block_diff_norm(x, y, i);
        if (d > 0.0) best = std::max(best, std::pow(d, a1 / sp.alpha(i)));
    }
    return best;
}

// Distance between horizontal leaves: the D-metric restricted to the fast
// blocks (indices >= 2).  Requires a genuinely multi-block spectrum.
inline double dist_DY(const spectrum& sp, const std::vector<double>& x,
                      const std::vector<double>& y) {
    require(sp.r() >= 2, errc::single_block_spectrum,
            "leaf metric needs at least two blocks");
    sp.check_vector(x, "dist_DY");
    sp.check_vector(y, "dist_DY");
    double best = 0.0;
    const double a1 = sp.alpha_min();
    for (std::size_t i = 1; i < sp.r(); ++i) {
        const double d = sp.block_diff_norm(x, y, i);
        if (d > 0.0) best = std::max(best, std::pow(d, a1 / sp.alpha(i)));
    }
    return best;
}

namespace detail {

// phi(t) = sum_i e^{-2 alpha_i t} |x_i - y_i|^2, strictly decreasing.
inline double de_profile(const spectrum& sp, const std::vector<double>& x,
                         const std::vector<double>& y, double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < sp.r(); ++i) {
        const double d = sp.block_diff_norm(x, y, i);
        s += std::exp(-2.0 * sp.alpha(i) * t) * d * d;
    }
    return s;
}

inline double de_profile_derivative(const spectrum& sp, const std::vector<double>& x,
                                    const std::vector<double>& y, double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < sp.r(); ++i) {
        const double d = sp.block_diff_norm(x, y, i);
        s += -2.0 * sp.alpha(i) * std::exp(-2.0 * sp.alpha(i) * t) * d * d;
    }
    return s;
}

}  // namespace detail

// Exponential-of-height quasimetric: D_e(x,y) = e^{t*} where the horospherical
// displacement |e^{-t A}(x-y)| equals 1.  Coinciding points return 0 by
// convention.  The root is bracketed by [ln D_s, ln(r^{1/(2 alpha_1)} D_s)]
// and solved by bisection to 1e-12 with a Newton polish.
inline double dist_De(const spectrum& sp, const std::vector<double>& x,
                      const std::vector<double>& y) {
    sp.check_vector(x, "dist_De");
    sp.check_vector(y, "dist_De");
    const double ds = dist_Ds(sp, x, y);
    if (ds == 0.0) return 0.0;
    if (sp.r() == 1) return ds;  // single block: the root is exactly ln D_s

    double lo = std::log(ds);
    double hi = lo + std::log(static_cast<double>(sp.r())) / (2.0 * sp.alpha_min());
    // Guard the analytic bracket against rounding at the endpoints.
    while (detail::de_profile(sp, x, y, lo) < 1.0) lo -= 1e-9;
    while (detail::de_profile(sp, x, y, hi) > 1.0) hi += 1e-9;

    for (int it = 0; it < 200 && (hi - lo) > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (detail::de_profile(sp, x, y, mid) >= 1.0)
            lo = mid;
        else
            hi = mid;
    }
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 3; ++it) {
        const double f = detail::de_profile(sp, x, y, t) - 1.0;
        const double fp = detail::de_profile_derivative(sp, x, y, t);
        if (fp == 0.0) break;
        const double step = f / fp;
        if (std::abs(step) > (hi - lo) + 1e-12) break;
        t -= step;
    }
    return std::exp(t);
}

struct norm_sandwich_report {
    // Signed violations of D_s <= D_e <= r^{1/(2 alpha_1)} D_s; negative or
    // tiny values mean the sandwich holds with margin.
    double max_lower_violation = -std::numeric_limits<double>::infinity();
    double max_upper_violation = -std::numeric_limits<double>::infinity();
    std::size_t pairs = 0;
};

inline norm_sandwich_report check_norm_sandwich(
    const spectrum& sp, const std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs) {
    norm_sandwich_report rep;
    const double factor = std::pow(static_cast<double>(sp.r()), 1.0 / (2.0 * sp.alpha_min()));
    for (const auto& [x, y] : pairs) {
        const double ds = dist_Ds(sp, x, y);
        const double de = dist_De(sp, x, y);
        rep.max_lower_violation = std::max(rep.max_lower_violation, ds - de);
        rep.max_upper_violation = std::max(rep.max_upper_violation, de - factor * ds);
        ++rep.pairs;
    }
    return rep;
}

namespace detail {

inline double unit_ball_volume(std::size_t k) {
    return std::pow(3.141592653589793238462643383279502884, 0.5 * static_cast<double>(k)) /
           std::tgamma(0.5 * static_cast<double>(k) + 1.0);
}

}  // namespace detail

// Lebesgue measure of the D-ball of radius R: the ball is a product of
// Euclidean block balls of radii R^{alpha_i/alpha_1}, so the measure is
// (prod_i omega_{n_i}) * R^Q with Q the homogeneous dimension.
inline double ball_measure(const spectrum& sp, double radius) {
    require(radius > 0.0, errc::non_positive_radius, "ball radius must be positive");
    double m = 1.0;
    const double a1 = sp.alpha_min();
    for (std::size_t i = 0; i < sp.r(); ++i) {
        const double block_radius = std::pow(radius, sp.alpha(i) / a1);
        m *= detail::unit_ball_volume(sp.dim(i)) *
             std::pow(block_radius, static_cast<double>(sp.dim(i)));
    }
    return m;
}

// D-length of a polyline at a fixed refinement: every segment is split into
// `refinement` equal Euclidean pieces and the D-distances of consecutive
// sample points are summed.  Because the fast blocks are snowflaked, lengths
// of curves leaving a horizontal leaf grow without bound as the refinement
// increases; horizontal polylines give the Euclidean block-1 length at every
// refinement.
inline double d_length(const spectrum& sp, const std::vector<std::vector<double>>& polyline,
                       std::size_t refinement) {
    require(polyline.size() >= 2, errc::too_few_vertices, "polyline needs >= 2 vertices");
    require(refinement >= 1, errc::invalid_argument, "refinement must be >= 1");
    for (const auto& v : polyline) sp.check_vector(v, "d_length");
    double total = 0.0;
    std::vector<double> a(sp.n()), b(sp.n());
    for (std::size_t s = 0; s + 1 < polyline.size(); ++s) {
        const auto& p = polyline[s];
        const auto& q = polyline[s + 1];
        for (std::size_t k = 0; k < refinement; ++k) {
            const double u0 = static_cast<double>(k) / static_cast<double>(refinement);
            const double u1 = static_cast<double>(k + 1) / static_cast<double>(refinement);
            for (std::size_t j = 0; j < sp.n(); ++j) {
                a[j] = p[j] + u0 * (q[j] - p[j]);
                b[j] = p[j] + u1 * (q[j] - p[j]);
            }
            total += dist_D(sp, a, b);
        }
    }
    return total;
}

// Hausdorff distance between the horizontal leaves through fast-coordinates
// y1 and y2: it equals the leaf metric D_Y(y1, y2) (each point of one leaf
// has a partner directly "above" it on the other leaf).
inline double leaf_hausdorff(const spectrum& sp, const std::vector<double>& y1,
                             const std::vector<double>& y2) {
    require(sp.r() >= 2, errc::single_block_spectrum,
            "horizontal foliation needs at least two blocks");
    const std::size_t fast = sp.n() - sp.dim(0);
    require(y1.size() == fast && y2.size() == fast, errc::dimension_mismatch,
            "leaf coordinates must cover the fast blocks");
    double best = 0.0;
    const double a1 = sp.alpha_min();
    std::size_t off = 0;
    for (std::size_t i = 1; i < sp.r(); ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < sp.dim(i); ++k) {
            const double d = y1[off + k] - y2[off + k];
            s += d * d;
        }
        off += sp.dim(i);
        if (s > 0.0) best = std::max(best, std::pow(std::sqrt(s), a1 / sp.alpha(i)));
    }
    return best;
}

// Empirical distance from the point (x1, y1) to the leaf through y2: minimum
// of D over sampled horizontal positions on the target leaf (the slow block
// position x1 itself is always among the candidates, which realizes the
// infimum).
inline double point_to_leaf_distance(const spectrum& sp, const std::vector<double>& x1,
                                     const std::vector<double>& y1, const std::vector<double>& y2,
                                     std::size_t probes = 17, double radius = 2.0) {
    require(sp.r() >= 2, errc::single_block_spectrum,
            "horizontal foliation needs at least two blocks");
    require(x1.size() == sp.dim(0), errc::dimension_mismatch, "slow block size mismatch");
    std::vector<double> p(sp.n()), q(sp.n());
    std::copy(x1.begin(), x1.end(), p.begin());
    std::copy(y1.begin(), y1.end(), p.begin() + sp.dim(0));
    std::copy(y2.begin(), y2.end(), q.begin() + sp.dim(0));
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < probes; ++s) {
        const double shift =
            probes == 1 ? 0.0
                        : -radius + 2.0 * radius * static_cast<double>(s) / (probes - 1.0);
        for (std::size_t k = 0; k < sp.dim(0); ++k) q[k] = x1[k] + shift;
        best = std::min(best, dist_D(sp, p, q));
    }
    return best;
}

// Boundary similarity with factor lambda: block i scales by lambda^{alpha_i/alpha_1},
// so every D-distance scales exactly by lambda.
inline std::vector<double> boundary_dilation(const spectrum& sp, const std::vector<double>& x,
                                             double lambda) {
    sp.check_vector(x, "boundary_dilation");
    std::vector<double> y(x);
    const double a1 = sp.alpha_min();
    for (std::size_t i = 0; i < sp.r(); ++i) {
        const double f = std::pow(lambda, sp.alpha(i) / a1);
        for (std::size_t k = sp.offset(i); k < sp.offset(i) + sp.dim(i); ++k) y[k] *= f;
    }
    return y;
}

}  // namespace solvgeo
