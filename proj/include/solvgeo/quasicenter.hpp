#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "solvgeo/boundary_metrics.hpp"
#include "solvgeo/distance.hpp"
#include "solvgeo/errors.hpp"
#include "solvgeo/group.hpp"
#include "solvgeo/spectrum.hpp"

namespace solvgeo {

// Height of the quasicenter of two boundary points: log of their profile
// distance.  The quasicenter itself sits above the first point.
inline double quasicenter_height(const spectrum& sp, const std::vector<double>& xi,
                                 const std::vector<double>& eta) {
    const double de = dist_De(sp, xi, eta);
    if (de <= 0.0) fail(errc::basepoint_degenerate, "quasicenter of equal boundary points");
    return std::log(de);
}

inline group_point quasicenter(const spectrum& sp, const std::vector<double>& xi,
                               const std::vector<double>& eta) {
    return group_point{xi, quasicenter_height(sp, xi, eta)};
}

namespace detail {

// Golden-section minimization of a unimodal function on [lo, hi].
template <class F>
inline double golden_min(F&& f, double lo, double hi, double xtol, double* arg = nullptr) {
    const double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > xtol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if (arg != nullptr) *arg = 0.5 * (a + b);
    return std::min(fc, fd);
}

}  // namespace detail

// Distance from p to the vertical geodesic {(xi, t) : t real}.  The distance
// is convex in t, so a golden-section search over a generous bracket works.
inline double point_to_vertical(const spectrum& sp, const group_point& p,
                                const std::vector<double>& xi, const bvp_options& opts = {}) {
    sp.check_vector(p.x, "point_to_vertical");
    sp.check_vector(xi, "point_to_vertical");
    if (p.x == xi) return 0.0;
    // The closest height is within d0 of p.t where d0 is any one distance.
    const double d0 = distance(sp, p, group_point{xi, p.t}, opts);
    const double lo = p.t - d0 - 1.0;
    const double hi = p.t + d0 + 1.0;
    auto f = [&](double t) { return distance(sp, p, group_point{xi, t}, opts); };
    return detail::golden_min(f, lo, hi, 1e-4 * std::max(1.0, hi - lo));
}

// Numerical geodesic between two boundary points, realized as the discrete
// geodesic joining deep representatives (xi, t0 - depth) and (eta, t0 - depth)
// where t0 is the quasicenter height.
struct boundary_geodesic {
    std::vector<group_point> waypoints;
    double top_height = 0.0;  // apex height of the discrete geodesic
    double depth = 0.0;
};

inline boundary_geodesic boundary_geodesic_between(const spectrum& sp,
                                                   const std::vector<double>& xi,
                                                   const std::vector<double>& eta,
                                                   double depth = 8.0,
                                                   const bvp_options& opts = bvp_quick()) {
    const double t0 = quasicenter_height(sp, xi, eta);
    const auto res = distance_full(sp, group_point{xi, t0 - depth}, group_point{eta, t0 - depth},
                                   opts);
    boundary_geodesic out;
    out.waypoints = res.waypoints;
    out.top_height = res.apex_height;
    out.depth = depth;
    return out;
}

// Distance from p to a discrete path: coarse scan over every stride-th
// waypoint, then golden refinement of the waypoint index range around the
// coarse minimum (distance along a geodesic is convex).
inline double point_to_path(const spectrum& sp, const group_point& p,
                            const std::vector<group_point>& waypoints,
                            const bvp_options& opts = bvp_quick(), std::size_t stride = 8) {
    if (waypoints.size() < 2) fail(errc::too_few_vertices, "point_to_path needs a real path");
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < waypoints.size(); k += stride) {
        const double d = distance(sp, p, waypoints[k], opts);
        if (d < best) {
            best = d;
            best_k = k;
        }
    }
    {
        const double d = distance(sp, p, waypoints.back(), opts);
        if (d < best) {
            best = d;
            best_k = waypoints.size() - 1;
        }
    }
    const double lo = best_k > stride ? static_cast<double>(best_k - stride) : 0.0;
    const double hi = std::min<double>(static_cast<double>(waypoints.size() - 1),
                                       static_cast<double>(best_k + stride));
    auto f = [&](double u) {
        const std::size_t k = static_cast<std::size_t>(u);
        const double frac = u - static_cast<double>(k);
        if (k + 1 >= waypoints.size()) return distance(sp, p, waypoints.back(), opts);
        group_point mid;
        mid.x.resize(sp.n());
        for (std::size_t c = 0; c < sp.n(); ++c)
            mid.x[c] = (1.0 - frac) * waypoints[k].x[c] + frac * waypoints[k + 1].x[c];
        mid.t = (1.0 - frac) * waypoints[k].t + frac * waypoints[k + 1].t;
        return distance(sp, p, mid, opts);
    };
    const double refined = detail::golden_min(f, lo, hi, 0.05);
    return std::min(best, refined);
}

// Tripod defect of the quasicenter: its worst distance to the three sides of
// the ideal triangle (xi, eta, upper point) - the two vertical geodesics and
// the connecting geodesic between xi and eta.
struct quasicenter_report {
    group_point center;
    double to_own_vertical = 0.0;  // zero by construction
    double to_other_vertical = 0.0;
    double to_connecting = 0.0;
    double defect = 0.0;
};

inline quasicenter_report quasicenter_defect(const spectrum& sp, const std::vector<double>& xi,
                                             const std::vector<double>& eta,
                                             const bvp_options& opts = bvp_quick(),
                                             double depth = 8.0) {
    quasicenter_report out;
    out.center = quasicenter(sp, xi, eta);
    out.to_other_vertical = point_to_vertical(sp, out.center, eta, opts);
    const auto side = boundary_geodesic_between(sp, xi, eta, depth, opts);
    out.to_connecting = point_to_path(sp, out.center, side.waypoints, opts);
    out.defect = std::max({out.to_own_vertical, out.to_other_vertical, out.to_connecting});
    return out;
}

// Coarse distance control through the quasicenter height t0 of the two
// horizontal parts.  Regime 1 (both heights below t0): the distance is the
// up-over-down value (t0-t1)+(t0-t2) up to a bounded defect.  Regime 2 (some
// height at or above t0): the distance is sandwiched between the height gap
// and the height gap plus one.
struct g3_report {
    int regime = 0;
    double t0 = 0.0;
    double d = 0.0;
    double defect = 0.0;      // regime 1: d - (t0-t1) - (t0-t2)
    double slack_low = 0.0;   // regime 2: d - |t1-t2|, expected >= 0
    double slack_high = 0.0;  // regime 2: |t1-t2| + 1 - d, expected >= 0
};

inline g3_report g3_defect(const spectrum& sp, const std::vector<double>& xi,
                           const std::vector<double>& eta, double t1, double t2,
                           const bvp_options& opts = {}) {
    g3_report out;
    out.t0 = quasicenter_height(sp, xi, eta);
    out.d = distance(sp, group_point{xi, t1}, group_point{eta, t2}, opts);
    if (t1 < out.t0 && t2 < out.t0) {
        out.regime = 1;
        out.defect = out.d - (out.t0 - t1) - (out.t0 - t2);
    } else {
        out.regime = 2;
        out.slack_low = out.d - std::abs(t1 - t2);
        out.slack_high = std::abs(t1 - t2) + 1.0 - out.d;
    }
    return out;
}

}  // namespace solvgeo
