#pragma once

#include <cmath>
#include <vector>

#include "solvgeo/errors.hpp"
#include "solvgeo/spectrum.hpp"

namespace solvgeo {

// Point (x, t) of the group R^n x| R: horizontal coordinates x and height t.
struct group_point {
    std::vector<double> x;
    double t = 0.0;
};

inline bool same_point(const group_point& p, const group_point& q, double tol = 0.0) {
    if (p.x.size() != q.x.size()) return false;
    if (std::abs(p.t - q.t) > tol) return false;
    for (std::size_t k = 0; k < p.x.size(); ++k)
        if (std::abs(p.x[k] - q.x[k]) > tol) return false;
    return true;
}

// Group law (x,t) * (y,s) = (x + e^{tA} y, t + s).
inline group_point left_translate(const spectrum& sp, const group_point& g,
                                  const group_point& p) {
    sp.check_vector(g.x, "left_translate");
    sp.check_vector(p.x, "left_translate");
    group_point out;
    out.x = sp.flow(p.x, g.t);
    for (std::size_t k = 0; k < out.x.size(); ++k) out.x[k] += g.x[k];
    out.t = g.t + p.t;
    return out;
}

// Diagonal of the left-invariant metric tensor at height t: block i carries
// e^{-2 alpha_i t}, the height direction carries 1.
inline std::vector<double> metric_tensor(const spectrum& sp, double t) {
    std::vector<double> diag(sp.n() + 1, 1.0);
    for (std::size_t i = 0; i < sp.r(); ++i) {
        const double m = std::exp(-2.0 * sp.alpha(i) * t);
        for (std::size_t k = sp.offset(i); k < sp.offset(i) + sp.dim(i); ++k) diag[k] = m;
    }
    return diag;
}

// Squared metric norm of a tangent vector (vx, vt) at height t.
inline double metric_norm2(const spectrum& sp, double t, const std::vector<double>& vx,
                           double vt) {
    double s = vt * vt;
    for (std::size_t i = 0; i < sp.r(); ++i) {
        const double m = std::exp(-2.0 * sp.alpha(i) * t);
        for (std::size_t k = sp.offset(i); k < sp.offset(i) + sp.dim(i); ++k)
            s += m * vx[k] * vx[k];
    }
    return s;
}

// Induced distance |e^{-tA}(x - y)| inside the horosphere at height t.
inline double horospherical_distance(const spectrum& sp, const std::vector<double>& x,
                                     const std::vector<double>& y, double t) {
    sp.check_vector(x, "horospherical_distance");
    sp.check_vector(y, "horospherical_distance");
    double s = 0.0;
    for (std::size_t i = 0; i < sp.r(); ++i) {
        const double d = sp.block_diff_norm(x, y, i);
        const double f = std::exp(-sp.alpha(i) * t) * d;
        s += f * f;
    }
    return std::sqrt(s);
}

}  // namespace solvgeo
