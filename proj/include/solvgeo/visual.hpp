#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "solvgeo/boundary_metrics.hpp"
#include "solvgeo/busemann.hpp"
#include "solvgeo/distance.hpp"
#include "solvgeo/errors.hpp"
#include "solvgeo/group.hpp"
#include "solvgeo/quasicenter.hpp"
#include "solvgeo/sampled_space.hpp"
#include "solvgeo/spectrum.hpp"

namespace solvgeo {

// Hyperbolicity scale of the group: the largest quasicenter defect observed in
// closed form for one exponent block, rescaled by the smallest exponent.
inline double delta_hat(const spectrum& sp) {
    return std::log(1.0 + std::sqrt(2.0)) / sp.alpha_min();
}

// Default visual exponent guaranteeing the half-to-one chain sandwich.
inline double epsilon0_default(const spectrum& sp) {
    return std::min(sp.alpha_min(), 1.0 / (4.0 * delta_hat(sp) + 1.0));
}

// Default threshold below which visual quasimetrics behave like metrics.
inline double epsilon1_default(const spectrum& sp) { return sp.alpha_min(); }

// Probe geodesics for Gromov products run ~2T long; extra segments plus the
// shooting cross-check keep the discretization error well below the
// extrapolation error of the probes themselves.
inline bvp_options bvp_deep() {
    bvp_options o;
    o.base_segments = 32;
    o.max_segments = 512;
    return o;
}

struct gromov_result {
    double value = 0.0;                  // extrapolated product
    double spread = 0.0;                 // |last - middle| probe, stability gauge
    std::array<double, 3> probes{};      // raw values at depths T/2, 3T/4, T
};

namespace detail {

constexpr std::array<double, 3> probe_fractions{0.5, 0.75, 1.0};

inline gromov_result stabilize_probes(const std::array<double, 3>& g) {
    gromov_result out;
    out.probes = g;
    out.value = aitken_limit(g[0], g[1], g[2]);
    out.spread = std::abs(g[2] - g[1]);
    return out;
}

}  // namespace detail

// Gromov product (xi | eta)_base of two boundary points: probe points sit at
// heights base.t - s for s in {T/2, 3T/4, T} on the vertical lines through xi
// and eta, and the three products are extrapolated.
inline gromov_result gromov_product(const spectrum& sp, const std::vector<double>& xi,
                                    const std::vector<double>& eta, const group_point& base,
                                    double T = 20.0, const bvp_options& opts = bvp_deep()) {
    sp.check_vector(xi, "gromov_product");
    sp.check_vector(eta, "gromov_product");
    std::array<double, 3> g{};
    for (std::size_t k = 0; k < 3; ++k) {
        const double s = detail::probe_fractions[k] * T;
        const group_point x{xi, base.t - s};
        const group_point y{eta, base.t - s};
        g[k] = 0.5 * (distance(sp, base, x, opts) + distance(sp, base, y, opts) -
                      distance(sp, x, y, opts));
    }
    return detail::stabilize_probes(g);
}

// Gromov product (xi | xi0)_base against the distinguished upward direction:
// the second ray runs straight up from the base point, where distances along
// it are exact.
inline gromov_result gromov_product_xi0(const spectrum& sp, const std::vector<double>& xi,
                                        const group_point& base, double T = 20.0,
                                        const bvp_options& opts = bvp_deep()) {
    sp.check_vector(xi, "gromov_product_xi0");
    std::array<double, 3> g{};
    for (std::size_t k = 0; k < 3; ++k) {
        const double s = detail::probe_fractions[k] * T;
        const group_point x{xi, base.t - s};
        const group_point up{base.x, base.t + s};
        g[k] = 0.5 * (distance(sp, base, x, opts) + s - distance(sp, x, up, opts));
    }
    return detail::stabilize_probes(g);
}

// Visual quasimetric e^{-epsilon (eta1|eta2)_base}; zero on equal points.
inline double visual_quasimetric(const spectrum& sp, const group_point& base, double epsilon,
                                 const std::vector<double>& eta1, const std::vector<double>& eta2,
                                 double T = 20.0, const bvp_options& opts = bvp_deep()) {
    require(epsilon > 0.0, errc::invalid_argument, "visual_quasimetric needs epsilon > 0");
    if (eta1 == eta2) return 0.0;
    return std::exp(-epsilon * gromov_product(sp, eta1, eta2, base, T, opts).value);
}

struct parabolic_result {
    double value = 0.0;   // e^{epsilon (t_top - t_base)}
    double t_top = 0.0;   // apex height of the connecting geodesic
};

// Parabolic visual quasimetric anchored at the upward direction: the height
// functional along the connecting geodesic is exactly t_base - t, so its
// infimum is t_base - t_top and the value is e^{epsilon (t_top - t_base)}.
inline parabolic_result parabolic_quasimetric(const spectrum& sp, const group_point& base,
                                              double epsilon, const std::vector<double>& eta1,
                                              const std::vector<double>& eta2, double depth = 8.0,
                                              const bvp_options& opts = bvp_quick()) {
    require(epsilon > 0.0, errc::invalid_argument, "parabolic_quasimetric needs epsilon > 0");
    if (eta1 == eta2) return {0.0, -std::numeric_limits<double>::infinity()};
    const auto geo = boundary_geodesic_between(sp, eta1, eta2, depth, opts);
    return {std::exp(epsilon * (geo.top_height - base.t)), geo.top_height};
}

namespace detail {

inline std::vector<std::string> point_labels(std::size_t n) {
    std::vector<std::string> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = "p" + std::to_string(i);
    return labels;
}

inline void check_sample(const spectrum& sp, const std::vector<std::vector<double>>& points,
                         const char* who) {
    require(points.size() >= 2, errc::too_few_points,
            std::string(who) + " needs at least two boundary points");
    for (const auto& x : points) sp.check_vector(x, who);
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            if (points[i] == points[j])
                fail(errc::basepoint_degenerate,
                     std::string(who) + ": duplicate boundary point in sample");
}

}  // namespace detail

// Dense table of the parabolic quasimetric over a sample of boundary points.
inline sampled_space parabolic_table(const spectrum& sp,
                                     const std::vector<std::vector<double>>& points,
                                     const group_point& base, double epsilon, double depth = 8.0,
                                     const bvp_options& opts = bvp_quick()) {
    detail::check_sample(sp, points, "parabolic_table");
    const std::size_t n = points.size();
    std::vector<double> t(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = parabolic_quasimetric(sp, base, epsilon, points[i], points[j],
                                                   depth, opts)
                                 .value;
            t[i * n + j] = t[j * n + i] = v;
        }
    return sampled_space(detail::point_labels(n), points, std::move(t), space_kind::quasimetric);
}

inline const std::string xi0_label = "xi0";

// Dense table of the visual quasimetric over a sample.  With with_xi0 set, a
// synthetic far point for the upward direction is adjoined under label "xi0"
// with d(x, xi0) = e^{-epsilon (x|xi0)_base}; base-to-probe distances are
// shared across pairs.
inline sampled_space visual_table(const spectrum& sp,
                                  const std::vector<std::vector<double>>& points,
                                  const group_point& base, double epsilon, bool with_xi0 = false,
                                  double T = 20.0, const bvp_options& opts = bvp_deep()) {
    detail::check_sample(sp, points, "visual_table");
    require(epsilon > 0.0, errc::invalid_argument, "visual_table needs epsilon > 0");
    const std::size_t n = points.size();

    // Probe heights and cached distances base -> deep point, per depth.
    std::array<double, 3> s{};
    std::array<std::vector<double>, 3> d_base_deep;
    for (std::size_t k = 0; k < 3; ++k) {
        s[k] = detail::probe_fractions[k] * T;
        d_base_deep[k].resize(n);
        for (std::size_t i = 0; i < n; ++i)
            d_base_deep[k][i] = distance(sp, base, {points[i], base.t - s[k]}, opts);
    }

    const std::size_t m = with_xi0 ? n + 1 : n;
    std::vector<double> table(m * m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            std::array<double, 3> g{};
            for (std::size_t k = 0; k < 3; ++k) {
                const group_point x{points[i], base.t - s[k]};
                const group_point y{points[j], base.t - s[k]};
                g[k] = 0.5 * (d_base_deep[k][i] + d_base_deep[k][j] - distance(sp, x, y, opts));
            }
            const double v = std::exp(-epsilon * detail::stabilize_probes(g).value);
            table[i * m + j] = table[j * m + i] = v;
        }

    std::vector<std::string> labels = detail::point_labels(n);
    std::vector<std::vector<double>> coords = points;
    if (with_xi0) {
        for (std::size_t i = 0; i < n; ++i) {
            std::array<double, 3> g{};
            for (std::size_t k = 0; k < 3; ++k) {
                const group_point x{points[i], base.t - s[k]};
                const group_point up{base.x, base.t + s[k]};
                g[k] = 0.5 * (d_base_deep[k][i] + s[k] - distance(sp, x, up, opts));
            }
            const double v = std::exp(-epsilon * detail::stabilize_probes(g).value);
            table[i * m + n] = table[n * m + i] = v;
        }
        labels.push_back(xi0_label);
        coords.emplace_back(sp.n(), std::numeric_limits<double>::quiet_NaN());
    }
    return sampled_space(std::move(labels), std::move(coords), std::move(table),
                         space_kind::quasimetric);
}

struct parabolic_vs_inversion_result {
    sampled_space parabolic_metric;   // chain-metrized parabolic quasimetric
    sampled_space inverted_visual;    // visual metric inverted at the far proxy
    ratio_report ratios;              // pairwise parabolic / inverted
};

// Comparison backing the bilipschitz equivalence between the parabolic visual
// metric and the inversion of the visual metric about the upward direction.
inline parabolic_vs_inversion_result compare_parabolic_vs_inversion(
    const spectrum& sp, const std::vector<std::vector<double>>& points, const group_point& base,
    double epsilon, double epsilon_cap = -1.0, double T = 20.0, double depth = 8.0) {
    if (epsilon_cap <= 0.0) epsilon_cap = std::min(epsilon0_default(sp), epsilon1_default(sp));
    require(epsilon > 0.0 && epsilon <= epsilon_cap * (1.0 + 1e-12), errc::config_invalid,
            "compare_parabolic_vs_inversion: epsilon above the configured cap");
    auto parabolic = chain_metrize(parabolic_table(sp, points, base, epsilon, depth));
    auto visual = chain_metrize(visual_table(sp, points, base, epsilon, true, T));
    auto inverted = invert_metric(visual, visual.index_of(xi0_label));
    auto ratios = pairwise_ratio(parabolic, inverted);
    return {std::move(parabolic), std::move(inverted), std::move(ratios)};
}

struct parabolic_vs_D_result {
    sampled_space parabolic;   // raw quasimetric table at epsilon = alpha_min
    sampled_space reference;   // dist_D table on the same sample
    ratio_report ratios;
};

// Comparison backing the bilipschitz equivalence between the parabolic
// quasimetric at epsilon = alpha_min and the boundary quasimetric D.
inline parabolic_vs_D_result compare_parabolic_vs_D(const spectrum& sp,
                                                    const std::vector<std::vector<double>>& points,
                                                    const group_point& base, double depth = 8.0,
                                                    const bvp_options& opts = bvp_quick()) {
    detail::check_sample(sp, points, "compare_parabolic_vs_D");
    auto parabolic = parabolic_table(sp, points, base, sp.alpha_min(), depth, opts);
    const std::size_t n = points.size();
    std::vector<double> t(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            t[i * n + j] = t[j * n + i] = dist_D(sp, points[i], points[j]);
    sampled_space reference(detail::point_labels(n), points, std::move(t),
                            space_kind::quasimetric);
    auto ratios = pairwise_ratio(parabolic, reference);
    return {std::move(parabolic), std::move(reference), std::move(ratios)};
}

}  // namespace solvgeo
