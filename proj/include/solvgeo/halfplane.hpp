#pragma once

#include <cmath>
#include <vector>

#include "solvgeo/errors.hpp"
#include "solvgeo/group.hpp"
#include "solvgeo/spectrum.hpp"

namespace solvgeo {

// Closed forms for the single-block group: (x, t) |-> (alpha x, e^{alpha t})
// identifies it with real hyperbolic space rescaled by 1/alpha.

// Exact distance.  Stable form:
//   cosh(alpha d) = cosh(alpha (t_p - t_q)) + (alpha^2 |dx|^2 / 2) e^{-alpha (t_p + t_q)}.
inline double hyperbolic_oracle_distance(double alpha, const group_point& p,
                                         const group_point& q) {
    require(alpha > 0.0, errc::invalid_argument, "exponent must be positive");
    require(p.x.size() == q.x.size(), errc::dimension_mismatch,
            "oracle distance: mismatched horizontal dimensions");
    double dx2 = 0.0;
    for (std::size_t k = 0; k < p.x.size(); ++k) {
        const double d = p.x[k] - q.x[k];
        dx2 += d * d;
    }
    const double dt = p.t - q.t;
    // cosh(alpha d) - 1 = (cosh(alpha dt) - 1) + w  with the horosphere term w.
    const double u = std::expm1(alpha * dt) * std::expm1(-alpha * dt) * -0.5 +
                     0.5 * alpha * alpha * dx2 * std::exp(-alpha * (p.t + q.t));
    // acosh(1 + u) = log1p(u + sqrt(u (u + 2))).
    return std::log1p(u + std::sqrt(u * (u + 2.0))) / alpha;
}

inline double hyperbolic_oracle_distance(const spectrum& sp, const group_point& p,
                                         const group_point& q) {
    require(sp.r() == 1, errc::multi_block_spectrum,
            "closed-form distance needs a single-block spectrum");
    return hyperbolic_oracle_distance(sp.alpha_min(), p, q);
}

// Exact horofunction of the downward ray through boundary point xi started at
// height t_start:  b(x,t) = (1/alpha) ln(alpha^2 |x - xi|^2 + e^{2 alpha t}) - t - t_start.
// It vanishes at (xi, t_start) and decreases at unit rate along the ray.
inline double halfplane_busemann(double alpha, const std::vector<double>& xi, double t_start,
                                 const group_point& z) {
    require(z.x.size() == xi.size(), errc::dimension_mismatch,
            "halfplane_busemann: mismatched horizontal dimensions");
    double dx2 = 0.0;
    for (std::size_t k = 0; k < z.x.size(); ++k) {
        const double d = z.x[k] - xi[k];
        dx2 += d * d;
    }
    return std::log(alpha * alpha * dx2 + std::exp(2.0 * alpha * z.t)) / alpha - z.t - t_start;
}

// Unit-speed-free parameterization of the geodesic joining two boundary
// points (scalar horizontal coordinate): the model semicircle evaluated at
// angle theta in (0, pi).  theta = pi/2 is the apex.
inline group_point halfplane_boundary_geodesic(double alpha, double eta1, double eta2,
                                               double theta) {
    const double c = 0.5 * alpha * (eta1 + eta2);
    const double radius = 0.5 * alpha * std::abs(eta2 - eta1);
    require(radius > 0.0, errc::invalid_argument, "geodesic endpoints must differ");
    group_point z;
    z.x = {(c + radius * std::cos(theta)) / alpha};
    z.t = std::log(radius * std::sin(theta)) / alpha;
    return z;
}

// Apex height of that geodesic: ln(alpha |eta2 - eta1| / 2) / alpha.
inline double halfplane_apex_height(double alpha, double eta1, double eta2) {
    return std::log(0.5 * alpha * std::abs(eta2 - eta1)) / alpha;
}

}  // namespace solvgeo
