#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "solvgeo/distance.hpp"
#include "solvgeo/errors.hpp"
#include "solvgeo/group.hpp"
#include "solvgeo/spectrum.hpp"

namespace solvgeo {

struct busemann_options {
    double horizon = 20.0;  // ray parameter T for the farthest probe
    bool extrapolate = true;
    bvp_options bvp;
};

// Busemann function of the distinguished upper boundary point, normalized to
// vanish at height t_base: the closed form is t_base - t, independent of x.
inline double busemann_upward(const group_point& p, double t_base) { return t_base - p.t; }

namespace detail {

// Accelerate the horofunction limit from probes at T/2, 3T/4, T.  The tail
// decays geometrically, which is exactly the regime Aitken's delta-squared
// removes; fall back to the raw farthest probe when the differences degenerate.
inline double aitken_limit(double b1, double b2, double b3) {
    const double d1 = b2 - b1;
    const double d2 = b3 - b2;
    const double denom = d2 - d1;
    if (std::abs(denom) < 1e-14 * std::max({1.0, std::abs(b1), std::abs(b3)})) return b3;
    const double out = b3 - d2 * d2 / denom;
    if (!std::isfinite(out)) return b3;
    // A slow geometric tail legitimately corrects by many multiples of the
    // last difference; only reject the runaway cancellation regime.
    if (std::abs(out - b3) > 100.0 * (std::abs(d2) + std::abs(d1))) return b3;
    return out;
}

}  // namespace detail

// Numerical Busemann function of the upper boundary point along the upward
// vertical ray through base: lim_T d(p, ray(T)) - T.
inline double busemann_upward_numeric(const spectrum& sp, const group_point& p,
                                      const group_point& base,
                                      const busemann_options& opts = {}) {
    sp.check_vector(p.x, "busemann_upward_numeric");
    sp.check_vector(base.x, "busemann_upward_numeric");
    const double T = opts.horizon;
    double probes[3];
    const double fracs[3] = {0.5, 0.75, 1.0};
    for (int k = 0; k < 3; ++k) {
        const double s = fracs[k] * T;
        const group_point far{base.x, base.t + s};
        probes[k] = distance(sp, p, far, opts.bvp) - s;
    }
    return opts.extrapolate ? detail::aitken_limit(probes[0], probes[1], probes[2]) : probes[2];
}

// Numerical Busemann function of a lower boundary point xi, along the
// downward vertical ray at xi released from height t_base.
inline double busemann_boundary_numeric(const spectrum& sp, const group_point& p,
                                        const std::vector<double>& xi, double t_base,
                                        const busemann_options& opts = {}) {
    sp.check_vector(p.x, "busemann_boundary_numeric");
    sp.check_vector(xi, "busemann_boundary_numeric");
    const double T = opts.horizon;
    double probes[3];
    const double fracs[3] = {0.5, 0.75, 1.0};
    for (int k = 0; k < 3; ++k) {
        const double s = fracs[k] * T;
        const group_point far{xi, t_base - s};
        probes[k] = distance(sp, p, far, opts.bvp) - s;
    }
    return opts.extrapolate ? detail::aitken_limit(probes[0], probes[1], probes[2]) : probes[2];
}

}  // namespace solvgeo
