#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "solvgeo/errors.hpp"
#include "solvgeo/group.hpp"
#include "solvgeo/spectrum.hpp"

namespace solvgeo {

// One arclength sample of a geodesic: parameter s, position, velocity.
struct geodesic_sample {
    double s = 0.0;
    group_point p;
    std::vector<double> vx;
    double vt = 0.0;
};

struct geodesic_path {
    std::vector<geodesic_sample> samples;

    const geodesic_sample& front() const { return samples.front(); }
    const geodesic_sample& back() const { return samples.back(); }

    double max_height() const {
        double h = -std::numeric_limits<double>::infinity();
        for (const auto& s : samples) h = std::max(h, s.p.t);
        return h;
    }
};

namespace detail {

// Dormand-Prince 5(4) adaptive step on a generic first-order system.
// f(y, dy) fills dy; integrates from s = 0 to s = length, invoking
// `record(s, y)` after every accepted step (and once at s = 0).
template <typename Rhs, typename Record>
void dp54_integrate(std::vector<double>& y, double length, double rtol, double atol, Rhs&& f,
                    Record&& record) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                            e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                            e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

    const std::size_t m = y.size();
    std::vector<double> k1(m), k2(m), k3(m), k4(m), k5(m), k6(m), k7(m), tmp(m), y5(m);
    double s = 0.0;
    double h = std::min(0.05, length > 0.0 ? length : 0.05);
    record(0.0, y);
    if (length <= 0.0) return;
    f(y, k1);
    int steps = 0;
    while (s < length) {
        require(++steps < 2000000, errc::step_size_underflow, "integration step budget exhausted");
        if (h < 1e-14 * std::max(1.0, length))
            fail(errc::step_size_underflow, "step size underflow in geodesic integration");
        h = std::min(h, length - s);

        for (std::size_t j = 0; j < m; ++j) tmp[j] = y[j] + h * a21 * k1[j];
        f(tmp, k2);
        for (std::size_t j = 0; j < m; ++j) tmp[j] = y[j] + h * (a31 * k1[j] + a32 * k2[j]);
        f(tmp, k3);
        for (std::size_t j = 0; j < m; ++j)
            tmp[j] = y[j] + h * (a41 * k1[j] + a42 * k2[j] + a43 * k3[j]);
        f(tmp, k4);
        for (std::size_t j = 0; j < m; ++j)
            tmp[j] = y[j] + h * (a51 * k1[j] + a52 * k2[j] + a53 * k3[j] + a54 * k4[j]);
        f(tmp, k5);
        for (std::size_t j = 0; j < m; ++j)
            tmp[j] = y[j] + h * (a61 * k1[j] + a62 * k2[j] + a63 * k3[j] + a64 * k4[j] +
                                 a65 * k5[j]);
        f(tmp, k6);
        for (std::size_t j = 0; j < m; ++j)
            y5[j] = y[j] + h * (b1 * k1[j] + b3 * k3[j] + b4 * k4[j] + b5 * k5[j] + b6 * k6[j]);
        f(y5, k7);

        double err = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double ej = h * (e1 * k1[j] + e3 * k3[j] + e4 * k4[j] + e5 * k5[j] +
                                   e6 * k6[j] + e7 * k7[j]);
            const double scale = atol + rtol * std::max(std::abs(y[j]), std::abs(y5[j]));
            const double w = ej / scale;
            err += w * w;
        }
        err = std::sqrt(err / static_cast<double>(m));

        if (err <= 1.0) {
            s += h;
            y.swap(y5);
            k1.swap(k7);  // FSAL
            record(s, y);
        }
        const double factor =
            err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
        h *= factor;
    }
}

}  // namespace detail

struct integrate_options {
    double rtol = 1e-10;
    double atol = 1e-12;
};

// Integrate the geodesic equations
//   x_i'' = 2 alpha_i t' x_i',   t'' = - sum_i alpha_i e^{-2 alpha_i t} |x_i'|^2
// from p with initial velocity v = (vx, vt), which must be unit within 1e-6
// (it is renormalized exactly before integrating).  Arclength runs over [0, T].
inline geodesic_path integrate_geodesic(const spectrum& sp, const group_point& p,
                                        std::vector<double> vx, double vt, double T,
                                        const integrate_options& opts = {}) {
    sp.check_vector(p.x, "integrate_geodesic");
    sp.check_vector(vx, "integrate_geodesic");
    const double norm2 = metric_norm2(sp, p.t, vx, vt);
    require(std::abs(norm2 - 1.0) <= 1e-6, errc::invalid_argument,
            "initial velocity must be unit in the metric at p");
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& c : vx) c *= inv;
    vt *= inv;

    const std::size_t n = sp.n();
    std::vector<double> y(2 * n + 2);
    for (std::size_t k = 0; k < n; ++k) y[k] = p.x[k];
    y[n] = p.t;
    for (std::size_t k = 0; k < n; ++k) y[n + 1 + k] = vx[k];
    y[2 * n + 1] = vt;

    auto rhs = [&sp, n](const std::vector<double>& state, std::vector<double>& d) {
        const double t = state[n];
        const double wt = state[2 * n + 1];
        double acc_t = 0.0;
        for (std::size_t i = 0; i < sp.r(); ++i) {
            const double a = sp.alpha(i);
            const double m = std::exp(-2.0 * a * t);
            double block2 = 0.0;
            for (std::size_t k = sp.offset(i); k < sp.offset(i) + sp.dim(i); ++k) {
                const double w = state[n + 1 + k];
                d[k] = w;
                d[n + 1 + k] = 2.0 * a * wt * w;
                block2 += w * w;
            }
            acc_t += a * m * block2;
        }
        d[n] = wt;
        d[2 * n + 1] = -acc_t;
    };

    geodesic_path path;
    auto record = [&](double s, const std::vector<double>& state) {
        geodesic_sample gs;
        gs.s = s;
        gs.p.x.assign(state.begin(), state.begin() + n);
        gs.p.t = state[n];
        gs.vx.assign(state.begin() + n + 1, state.begin() + 2 * n + 1);
        gs.vt = state[2 * n + 1];
        path.samples.push_back(std::move(gs));
    };
    detail::dp54_integrate(y, T, opts.rtol, opts.atol, rhs, record);
    return path;
}

// Worst deviation of g(gamma', gamma') from 1 along the path, per unit time.
inline double unit_speed_defect(const spectrum& sp, const geodesic_path& path) {
    double worst = 0.0;
    for (const auto& s : path.samples)
        worst = std::max(worst, std::abs(metric_norm2(sp, s.p.t, s.vx, s.vt) - 1.0));
    const double span = std::max(1.0, path.samples.back().s);
    return worst / span;
}

}  // namespace solvgeo
