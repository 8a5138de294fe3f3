#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "solvgeo/boundary_metrics.hpp"
#include "solvgeo/errors.hpp"
#include "solvgeo/geodesics.hpp"
#include "solvgeo/group.hpp"
#include "solvgeo/spectrum.hpp"

namespace solvgeo {

struct bvp_options {
    std::size_t base_segments = 16;
    std::size_t max_segments = 256;
    bool do_shooting = true;
    bool richardson = true;
    double ode_rtol = 1e-11;
    std::size_t newton_cap = 120;
};

// Cheap settings for bulk tables where ~1e-3 accuracy suffices.
inline bvp_options bvp_quick() {
    bvp_options o;
    o.base_segments = 8;
    o.max_segments = 64;
    o.do_shooting = false;
    return o;
}

struct distance_result {
    double value = 0.0;        // min of the two methods
    double path_value = 0.0;   // discrete-geodesic length (Richardson extrapolated)
    double shoot_value = std::numeric_limits<double>::quiet_NaN();
    bool shooting_converged = false;
    bool methods_disagree = false;  // relative gap above 1e-3
    bool exact = false;             // vertical pair resolved in closed form
    double apex_height = 0.0;
    std::vector<group_point> waypoints;  // finest discrete geodesic, ends included
};

namespace detail {

// Discrete path energy with midpoint metric weights.  Nodes: xs[j] (n coords
// each) and ts[j], j = 0..N.  Energy E = (N/2) sum_k e_k with
//   e_k = sum_i e^{-2 alpha_i tbar_k} |dx_{k,i}|^2 + dt_k^2.
class path_energy {
public:
    path_energy(const spectrum& sp, std::size_t segments) : sp_(sp), N_(segments) {}

    double energy(const std::vector<std::vector<double>>& xs,
                  const std::vector<double>& ts) const {
        double total = 0.0;
        for (std::size_t k = 0; k < N_; ++k) total += segment_energy(xs, ts, k);
        return 0.5 * static_cast<double>(N_) * total;
    }

    double length(const std::vector<std::vector<double>>& xs,
                  const std::vector<double>& ts) const {
        double total = 0.0;
        for (std::size_t k = 0; k < N_; ++k)
            total += std::sqrt(std::max(0.0, segment_energy(xs, ts, k)));
        return total;
    }

    double segment_energy(const std::vector<std::vector<double>>& xs,
                          const std::vector<double>& ts, std::size_t k) const {
        const double tbar = 0.5 * (ts[k] + ts[k + 1]);
        const double dt = ts[k + 1] - ts[k];
        double e = dt * dt;
        for (std::size_t i = 0; i < sp_.r(); ++i) {
            const double m = std::exp(-2.0 * sp_.alpha(i) * tbar);
            double b = 0.0;
            for (std::size_t c = sp_.offset(i); c < sp_.offset(i) + sp_.dim(i); ++c) {
                const double d = xs[k + 1][c] - xs[k][c];
                b += d * d;
            }
            e += m * b;
        }
        return e;
    }

    // Gradient over interior nodes, laid out node-major as (x..., t).
    void gradient(const std::vector<std::vector<double>>& xs, const std::vector<double>& ts,
                  std::vector<double>& grad) const {
        const std::size_t n = sp_.n();
        const std::size_t stride = n + 1;
        grad.assign((N_ - 1) * stride, 0.0);
        for (std::size_t k = 0; k < N_; ++k) {
            const double tbar = 0.5 * (ts[k] + ts[k + 1]);
            const double dt = ts[k + 1] - ts[k];
            double tcoef = 0.0;  // sum_i alpha_i m_i |dx_i|^2
            for (std::size_t i = 0; i < sp_.r(); ++i) {
                const double a = sp_.alpha(i);
                const double m = std::exp(-2.0 * a * tbar);
                double b = 0.0;
                for (std::size_t c = sp_.offset(i); c < sp_.offset(i) + sp_.dim(i); ++c) {
                    const double d = xs[k + 1][c] - xs[k][c];
                    b += d * d;
                    // d e_k / d x_{k,c} = -2 m d ;  d e_k / d x_{k+1,c} = +2 m d
                    if (k >= 1) grad[(k - 1) * stride + c] += -2.0 * m * d;
                    if (k + 1 <= N_ - 1) grad[k * stride + c] += 2.0 * m * d;
                }
                tcoef += a * m * b;
            }
            // d e_k / d t_k = -2 dt - tcoef ;  d e_k / d t_{k+1} = +2 dt - tcoef
            if (k >= 1) grad[(k - 1) * stride + n] += -2.0 * dt - tcoef;
            if (k + 1 <= N_ - 1) grad[k * stride + n] += 2.0 * dt - tcoef;
        }
        const double scale = 0.5 * static_cast<double>(N_);
        for (auto& g : grad) g *= scale;
    }

    // Block-tridiagonal Hessian over interior nodes: diag[j] and upper[j]
    // (coupling node j+1), blocks of size (n+1)^2 stored row-major.
    void hessian(const std::vector<std::vector<double>>& xs, const std::vector<double>& ts,
                 std::vector<std::vector<double>>& diag,
                 std::vector<std::vector<double>>& upper) const {
        const std::size_t n = sp_.n();
        const std::size_t stride = n + 1;
        const std::size_t sq = stride * stride;
        diag.assign(N_ - 1, std::vector<double>(sq, 0.0));
        upper.assign(N_ >= 2 ? N_ - 2 : 0, std::vector<double>(sq, 0.0));

        std::vector<double> haa(sq), hab(sq), hbb(sq);
        for (std::size_t k = 0; k < N_; ++k) {
            std::fill(haa.begin(), haa.end(), 0.0);
            std::fill(hab.begin(), hab.end(), 0.0);
            std::fill(hbb.begin(), hbb.end(), 0.0);
            const double tbar = 0.5 * (ts[k] + ts[k + 1]);
            double t2 = 0.0;  // sum_i alpha_i^2 m_i |dx_i|^2
            for (std::size_t i = 0; i < sp_.r(); ++i) {
                const double a = sp_.alpha(i);
                const double m = std::exp(-2.0 * a * tbar);
                for (std::size_t c = sp_.offset(i); c < sp_.offset(i) + sp_.dim(i); ++c) {
                    const double d = xs[k + 1][c] - xs[k][c];
                    t2 += a * a * m * d * d;
                    haa[c * stride + c] += 2.0 * m;
                    hbb[c * stride + c] += 2.0 * m;
                    hab[c * stride + c] += -2.0 * m;
                    const double xt_same = 2.0 * a * m * d;   // (x_a, t_a) and (x_a, t_b)
                    const double xt_opp = -2.0 * a * m * d;   // (x_b, t_a) and (x_b, t_b)
                    haa[c * stride + n] += xt_same;
                    haa[n * stride + c] += xt_same;
                    hbb[c * stride + n] += xt_opp;
                    hbb[n * stride + c] += xt_opp;
                    hab[c * stride + n] += xt_same;   // d^2 e / d x_a d t_b
                    hab[n * stride + c] += xt_opp;    // d^2 e / d t_a d x_b
                }
            }
            haa[n * stride + n] += 2.0 + t2;
            hbb[n * stride + n] += 2.0 + t2;
            hab[n * stride + n] += -2.0 + t2;

            if (k >= 1)
                for (std::size_t u = 0; u < sq; ++u) diag[k - 1][u] += haa[u];
            if (k + 1 <= N_ - 1)
                for (std::size_t u = 0; u < sq; ++u) diag[k][u] += hbb[u];
            if (k >= 1 && k + 1 <= N_ - 1)
                for (std::size_t u = 0; u < sq; ++u) upper[k - 1][u] += hab[u];
        }
        const double scale = 0.5 * static_cast<double>(N_);
        for (auto& b : diag)
            for (auto& v : b) v *= scale;
        for (auto& b : upper)
            for (auto& v : b) v *= scale;
    }

private:
    const spectrum& sp_;
    std::size_t N_;
};

// Dense solve of a small linear system by Gaussian elimination with partial
// pivoting; returns false on a (near-)singular pivot.
inline bool solve_dense(std::vector<double> a, std::vector<double>& b, std::size_t m) {
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t piv = col;
        for (std::size_t rr = col + 1; rr < m; ++rr)
            if (std::abs(a[rr * m + col]) > std::abs(a[piv * m + col])) piv = rr;
        if (std::abs(a[piv * m + col]) < 1e-300) return false;
        if (piv != col) {
            for (std::size_t cc = 0; cc < m; ++cc) std::swap(a[col * m + cc], a[piv * m + cc]);
            std::swap(b[col], b[piv]);
        }
        const double inv = 1.0 / a[col * m + col];
        for (std::size_t rr = col + 1; rr < m; ++rr) {
            const double f = a[rr * m + col] * inv;
            if (f == 0.0) continue;
            for (std::size_t cc = col; cc < m; ++cc) a[rr * m + cc] -= f * a[col * m + cc];
            b[rr] -= f * b[col];
        }
    }
    for (std::size_t col = m; col-- > 0;) {
        double s = b[col];
        for (std::size_t cc = col + 1; cc < m; ++cc) s -= a[col * m + cc] * b[cc];
        b[col] = s / a[col * m + col];
    }
    return true;
}

// Block-tridiagonal solve (block Thomas).  diag/upper are overwritten.
// rhs holds node-major vectors; returns false if a block pivot fails.
inline bool solve_block_tridiag(std::vector<std::vector<double>> diag,
                                std::vector<std::vector<double>> upper,
                                std::vector<double>& rhs, std::size_t stride) {
    const std::size_t nodes = diag.size();
    const std::size_t sq = stride * stride;
    // Forward elimination: eliminate lower blocks (lower[j] = upper[j]^T by symmetry).
    std::vector<double> linv(sq), tmp(stride);
    for (std::size_t j = 0; j + 1 < nodes; ++j) {
        // Solve diag[j] * Z = upper[j] (columns) and diag[j] * w = rhs_j.
        // Then diag[j+1] -= upper[j]^T Z ; rhs_{j+1} -= upper[j]^T w.
        std::vector<double> z(sq);
        for (std::size_t col = 0; col < stride; ++col) {
            for (std::size_t rr = 0; rr < stride; ++rr) tmp[rr] = upper[j][rr * stride + col];
            std::vector<double> rhs_col(tmp);
            if (!solve_dense(diag[j], rhs_col, stride)) return false;
            for (std::size_t rr = 0; rr < stride; ++rr) z[rr * stride + col] = rhs_col[rr];
        }
        std::vector<double> w(rhs.begin() + j * stride, rhs.begin() + (j + 1) * stride);
        if (!solve_dense(diag[j], w, stride)) return false;
        for (std::size_t rr = 0; rr < stride; ++rr) {
            double acc = 0.0;
            for (std::size_t cc = 0; cc < stride; ++cc)
                acc += upper[j][cc * stride + rr] * w[cc];  // upper^T w
            rhs[(j + 1) * stride + rr] -= acc;
        }
        for (std::size_t rr = 0; rr < stride; ++rr)
            for (std::size_t cc = 0; cc < stride; ++cc) {
                double acc = 0.0;
                for (std::size_t kk = 0; kk < stride; ++kk)
                    acc += upper[j][kk * stride + rr] * z[kk * stride + cc];  // upper^T Z
                diag[j + 1][rr * stride + cc] -= acc;
            }
        upper[j] = z;  // stash for back substitution
    }
    // Back substitution.
    std::vector<double> sol(rhs.size());
    {
        std::vector<double> w(rhs.begin() + (nodes - 1) * stride, rhs.begin() + nodes * stride);
        if (!solve_dense(diag[nodes - 1], w, stride)) return false;
        std::copy(w.begin(), w.end(), sol.begin() + (nodes - 1) * stride);
    }
    for (std::size_t j = nodes - 1; j-- > 0;) {
        // x_j = diag[j]^{-1} rhs_j - Z x_{j+1} with Z stashed in upper[j].
        std::vector<double> base(rhs.begin() + j * stride, rhs.begin() + (j + 1) * stride);
        if (!solve_dense(diag[j], base, stride)) return false;
        for (std::size_t rr = 0; rr < stride; ++rr) {
            double acc = 0.0;
            for (std::size_t cc = 0; cc < stride; ++cc)
                acc += upper[j][rr * stride + cc] * sol[(j + 1) * stride + cc];
            sol[j * stride + rr] = base[rr] - acc;
        }
    }
    rhs.swap(sol);
    return true;
}

}  // namespace detail

namespace detail {

struct relaxed_path {
    std::vector<std::vector<double>> xs;
    std::vector<double> ts;
    double length = 0.0;
    double energy = 0.0;
};

// Damped Newton minimization of the discrete path energy with fixed ends.
inline void relax_path(const spectrum& sp, relaxed_path& path, std::size_t newton_cap) {
    const std::size_t N = path.ts.size() - 1;
    if (N < 2) {
        path_energy pe(sp, N);
        path.energy = pe.energy(path.xs, path.ts);
        path.length = pe.length(path.xs, path.ts);
        return;
    }
    const std::size_t n = sp.n();
    const std::size_t stride = n + 1;
    path_energy pe(sp, N);

    double e_cur = pe.energy(path.xs, path.ts);
    std::vector<double> grad;
    std::vector<std::vector<double>> hd, hu;
    std::vector<std::vector<double>> xs_try;
    std::vector<double> ts_try;
    double lambda = 0.0;  // trust-region ridge; zero once near the minimum
    int small_drops = 0;
    for (std::size_t it = 0; it < newton_cap; ++it) {
        pe.gradient(path.xs, path.ts, grad);
        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::abs(g));
        if (gmax < 1e-12 * static_cast<double>(N)) break;
        pe.hessian(path.xs, path.ts, hd, hu);
        double diag_scale = 0.0;
        for (const auto& blk : hd)
            for (std::size_t c = 0; c < stride; ++c) diag_scale += std::abs(blk[c * stride + c]);
        diag_scale /= static_cast<double>(hd.size() * stride);

        // Levenberg step: escalate the ridge until the energy decreases.  A
        // large ridge turns the step into damped gradient descent, so this
        // also rides out indefinite curvature far from the geodesic.
        bool accepted = false;
        for (int attempt = 0; attempt < 24 && !accepted; ++attempt) {
            auto hd_r = hd;
            if (lambda > 0.0)
                for (auto& blk : hd_r)
                    for (std::size_t c = 0; c < stride; ++c)
                        blk[c * stride + c] += lambda * diag_scale;
            std::vector<double> step(grad);
            for (auto& v : step) v = -v;
            bool ok = solve_block_tridiag(hd_r, hu, step, stride);
            if (ok) {
                for (double v : step)
                    if (!std::isfinite(v)) {
                        ok = false;
                        break;
                    }
            }
            if (ok) {
                xs_try = path.xs;
                ts_try = path.ts;
                for (std::size_t j = 1; j < N; ++j) {
                    for (std::size_t c = 0; c < n; ++c)
                        xs_try[j][c] += step[(j - 1) * stride + c];
                    ts_try[j] += step[(j - 1) * stride + n];
                }
                const double e_new = pe.energy(xs_try, ts_try);
                if (std::isfinite(e_new) && e_new <= e_cur) {
                    const double drop = (e_cur - e_new) / std::max(1e-300, e_cur);
                    path.xs.swap(xs_try);
                    path.ts.swap(ts_try);
                    e_cur = e_new;
                    lambda = lambda > 3e-14 ? lambda / 3.0 : 0.0;
                    small_drops = drop < 1e-14 ? small_drops + 1 : 0;
                    accepted = true;
                }
            }
            if (!accepted) lambda = lambda == 0.0 ? 1e-8 : lambda * 8.0;
        }
        if (!accepted || small_drops >= 2) break;
    }
    path.energy = e_cur;
    path.length = pe.length(path.xs, path.ts);
}

inline relaxed_path subdivide(const relaxed_path& in) {
    relaxed_path out;
    const std::size_t N = in.ts.size() - 1;
    out.xs.reserve(2 * N + 1);
    out.ts.reserve(2 * N + 1);
    for (std::size_t k = 0; k < N; ++k) {
        out.xs.push_back(in.xs[k]);
        out.ts.push_back(in.ts[k]);
        std::vector<double> mid(in.xs[k].size());
        for (std::size_t c = 0; c < mid.size(); ++c)
            mid[c] = 0.5 * (in.xs[k][c] + in.xs[k + 1][c]);
        out.xs.push_back(std::move(mid));
        out.ts.push_back(0.5 * (in.ts[k] + in.ts[k + 1]));
    }
    out.xs.push_back(in.xs.back());
    out.ts.push_back(in.ts.back());
    return out;
}

// Two-segment tent initialization through the estimated quasicenter height.
inline relaxed_path tent_path(const spectrum& sp, const group_point& p, const group_point& q,
                              std::size_t segments) {
    const double de = dist_De(sp, p.x, q.x);
    const double apex = std::max({de > 0.0 ? std::log(de) : -std::numeric_limits<double>::infinity(),
                                  p.t, q.t});
    const double climb = apex - p.t;
    const double descent = apex - q.t;
    const double frac = (climb + descent) > 0.0 ? climb / (climb + descent) : 0.5;
    relaxed_path path;
    path.xs.resize(segments + 1);
    path.ts.resize(segments + 1);
    for (std::size_t j = 0; j <= segments; ++j) {
        const double f = static_cast<double>(j) / static_cast<double>(segments);
        path.xs[j].resize(sp.n());
        if (f <= frac && climb > 0.0)
            path.ts[j] = p.t + (f / std::max(frac, 1e-12)) * climb;
        else if (descent > 0.0)
            path.ts[j] = apex - ((f - frac) / std::max(1.0 - frac, 1e-12)) * descent;
        else
            path.ts[j] = p.t + f * (q.t - p.t);
    }
    path.ts[0] = p.t;
    path.ts[segments] = q.t;
    // Horizontal motion follows the conserved-momentum profile for the tent's
    // height curve: dx_i proportional to e^{2 alpha_i t}, so nearly all of it
    // happens near the apex.  A linear ramp instead would give bottom segments
    // energies of order e^{2 alpha depth} and strand the relaxation.
    for (std::size_t b = 0; b < sp.r(); ++b) {
        const double a2 = 2.0 * sp.alpha(b);
        double tmax = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < segments; ++k)
            tmax = std::max(tmax, 0.5 * (path.ts[k] + path.ts[k + 1]));
        std::vector<double> cum(segments + 1, 0.0);
        for (std::size_t k = 0; k < segments; ++k) {
            const double tbar = 0.5 * (path.ts[k] + path.ts[k + 1]);
            cum[k + 1] = cum[k] + std::exp(a2 * (tbar - tmax));
        }
        const double total = cum[segments];
        for (std::size_t j = 0; j <= segments; ++j) {
            const double f = total > 0.0 ? cum[j] / total
                                         : static_cast<double>(j) / static_cast<double>(segments);
            for (std::size_t c = sp.offset(b); c < sp.offset(b) + sp.dim(b); ++c)
                path.xs[j][c] = p.x[c] + f * (q.x[c] - p.x[c]);
        }
    }
    return path;
}

// Reduced shooting: block magnitudes k_j, initial vertical speed w0, total
// parameter S.  Residuals are block progress, final height, and unit speed.
struct shoot_result {
    bool converged = false;
    double length = std::numeric_limits<double>::quiet_NaN();
};

inline shoot_result shoot_distance(const spectrum& sp, const group_point& p,
                                   const group_point& q, const relaxed_path& guess,
                                   double ode_rtol) {
    shoot_result out;
    // Active blocks and their displacement magnitudes.
    std::vector<std::size_t> act;
    std::vector<double> target;
    for (std::size_t i = 0; i < sp.r(); ++i) {
        const double d = sp.block_diff_norm(p.x, q.x, i);
        if (d > 0.0) {
            act.push_back(i);
            target.push_back(d);
        }
    }
    const std::size_t m = act.size();
    if (m == 0) {
        out.converged = true;
        out.length = std::abs(p.t - q.t);
        return out;
    }

    // Initial guess from the relaxed path's first segment.
    const double seg_len = std::max(
        1e-12, std::sqrt(path_energy(sp, guess.ts.size() - 1).segment_energy(guess.xs, guess.ts, 0)));
    std::vector<double> theta(m + 2);
    for (std::size_t j = 0; j < m; ++j) {
        double b = 0.0;
        for (std::size_t c = sp.offset(act[j]); c < sp.offset(act[j]) + sp.dim(act[j]); ++c) {
            const double d = guess.xs[1][c] - guess.xs[0][c];
            b += d * d;
        }
        const double vxj = std::sqrt(b) / seg_len;
        const double kj = std::max(1e-300, std::exp(-2.0 * sp.alpha(act[j]) * p.t) * vxj);
        theta[j] = std::log(kj);
    }
    theta[m] = (guess.ts[1] - guess.ts[0]) / seg_len;  // w0
    theta[m + 1] = std::max(guess.length, 1e-8);       // S

    auto integrate = [&](const std::vector<double>& th, std::vector<double>& res) -> bool {
        const double S = th[m + 1];
        if (!(S > 0.0) || !std::isfinite(S) || S > 1e6) return false;
        std::vector<double> y(m + 2, 0.0);
        y[m] = p.t;
        y[m + 1] = th[m];
        std::vector<double> kexp(m);
        for (std::size_t j = 0; j < m; ++j) kexp[j] = std::exp(th[j]);
        auto rhs = [&](const std::vector<double>& st, std::vector<double>& d) {
            const double t = st[m];
            for (std::size_t j = 0; j < m; ++j) {
                const double arg = 2.0 * sp.alpha(act[j]) * t;
                d[j] = kexp[j] * std::exp(std::min(arg, 500.0));
            }
            d[m] = st[m + 1];
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j)
                acc += sp.alpha(act[j]) * kexp[j] * d[j];  // alpha k^2 e^{2 alpha t}
            d[m + 1] = -acc;
        };
        try {
            dp54_integrate(y, S, ode_rtol, 1e-13, rhs, [](double, const std::vector<double>&) {});
        } catch (const error&) {
            return false;
        }
        res.resize(m + 2);
        for (std::size_t j = 0; j < m; ++j)
            res[j] = (y[j] - target[j]) / std::max(1.0, target[j]);
        res[m] = y[m] - q.t;
        // Speed at s=0 is sum_j k_j^2 e^{2 alpha_j t_p} + w0^2; conservation
        // makes it the squared speed everywhere, so this pins the length unit.
        double speed2 = th[m] * th[m];
        for (std::size_t j = 0; j < m; ++j)
            speed2 += kexp[j] * kexp[j] * std::exp(std::min(2.0 * sp.alpha(act[j]) * p.t, 500.0));
        res[m + 1] = speed2 - 1.0;
        for (double v : res)
            if (!std::isfinite(v)) return false;
        return true;
    };

    const std::size_t dim = m + 2;
    auto run_newton = [&](std::vector<double> theta0) -> shoot_result {
        shoot_result r;
        std::vector<double>& th = theta0;
        std::vector<double> res;
        if (!integrate(th, res)) return r;
        double rnorm = 0.0;
        for (double v : res) rnorm = std::max(rnorm, std::abs(v));

        double lambda = 1e-10;
        for (int it = 0; it < 90 && rnorm > 1e-10; ++it) {
            // Finite-difference Jacobian.
            std::vector<double> jac(dim * dim);
            bool ok = true;
            for (std::size_t c = 0; c < dim && ok; ++c) {
                std::vector<double> th2(th);
                const double h = 1e-7 * std::max(1.0, std::abs(th[c]));
                th2[c] += h;
                std::vector<double> res2;
                ok = integrate(th2, res2);
                if (!ok) break;
                for (std::size_t rr = 0; rr < dim; ++rr)
                    jac[rr * dim + c] = (res2[rr] - res[rr]) / h;
            }
            if (!ok) break;
            bool stepped = false;
            // The ridge must be allowed to grow past the J^T J scale (which can
            // reach e^{2 alpha |t|}) before the step shrinks, so escalate far.
            for (int damp = 0; damp < 24 && !stepped; ++damp) {
                // Solve (J^T J + lambda I) d = -J^T res.
                std::vector<double> a(dim * dim, 0.0), b(dim, 0.0);
                for (std::size_t rr = 0; rr < dim; ++rr)
                    for (std::size_t cc = 0; cc < dim; ++cc) {
                        double acc = 0.0;
                        for (std::size_t kk = 0; kk < dim; ++kk)
                            acc += jac[kk * dim + rr] * jac[kk * dim + cc];
                        a[rr * dim + cc] = acc + (rr == cc ? lambda : 0.0);
                    }
                for (std::size_t rr = 0; rr < dim; ++rr) {
                    double acc = 0.0;
                    for (std::size_t kk = 0; kk < dim; ++kk) acc += jac[kk * dim + rr] * res[kk];
                    b[rr] = -acc;
                }
                if (!solve_dense(a, b, dim)) {
                    lambda *= 10.0;
                    continue;
                }
                std::vector<double> th2(th);
                for (std::size_t c = 0; c < dim; ++c) th2[c] += b[c];
                std::vector<double> res2;
                if (integrate(th2, res2)) {
                    double rn2 = 0.0;
                    for (double v : res2) rn2 = std::max(rn2, std::abs(v));
                    if (rn2 < rnorm) {
                        th.swap(th2);
                        res.swap(res2);
                        rnorm = rn2;
                        lambda = std::max(1e-12, lambda * 0.3);
                        stepped = true;
                        break;
                    }
                }
                lambda *= 10.0;
            }
            if (!stepped) break;
        }

        if (rnorm <= 1e-8) {
            r.converged = true;
            r.length = th[m + 1];
        }
        return r;
    };

    out = run_newton(theta);
    if (out.converged) return out;

    // Fallback guess built around the relaxed path's apex height t*: on a
    // near-vertical profile each active block advances by about
    // k_j e^{2 alpha_j t*}/alpha_j, so k_j = alpha_j |Delta_j| e^{-2 alpha_j t*}
    // (assembled in log space to dodge overflow).
    const double tstar = *std::max_element(guess.ts.begin(), guess.ts.end());
    std::vector<double> th2(m + 2);
    for (std::size_t j = 0; j < m; ++j)
        th2[j] = std::log(std::max(1e-300, sp.alpha(act[j]) * target[j])) -
                 2.0 * sp.alpha(act[j]) * tstar;
    const bool climbs = tstar > p.t + 0.5;
    th2[m] = climbs ? 0.95
                    : std::clamp((q.t - p.t) / std::max(guess.length, 1e-8), -0.99, 0.99);
    th2[m + 1] = std::max(guess.length, 1e-8);
    return run_newton(th2);
}

}  // namespace detail

// Distance between group points: discrete-geodesic energy relaxation over a
// geometric refinement ladder, cross-checked against reduced shooting.
// Vertical pairs are exact.  The result is the smaller of the two methods; a
// relative gap above 1e-3 raises the diagnostic flag instead of an error.
inline distance_result distance_full(const spectrum& sp, const group_point& p,
                                     const group_point& q, const bvp_options& opts = {}) {
    sp.check_vector(p.x, "distance");
    sp.check_vector(q.x, "distance");
    distance_result out;
    if (p.x == q.x) {
        out.value = out.path_value = std::abs(p.t - q.t);
        out.exact = true;
        out.shooting_converged = true;
        out.shoot_value = out.value;
        out.apex_height = std::max(p.t, q.t);
        out.waypoints = {p, q};
        return out;
    }

    detail::relaxed_path path = detail::tent_path(sp, p, q, opts.base_segments);
    detail::relax_path(sp, path, opts.newton_cap);
    double prev_len = path.length;
    while (path.ts.size() - 1 < opts.max_segments) {
        prev_len = path.length;
        path = detail::subdivide(path);
        detail::relax_path(sp, path, opts.newton_cap);
    }
    // Midpoint-rule lengths converge at second order: Richardson across the
    // last two ladder levels cancels the leading term.
    out.path_value = opts.richardson && opts.max_segments > opts.base_segments
                         ? path.length + (path.length - prev_len) / 3.0
                         : path.length;

    out.apex_height = *std::max_element(path.ts.begin(), path.ts.end());
    out.waypoints.resize(path.ts.size());
    for (std::size_t j = 0; j < path.ts.size(); ++j)
        out.waypoints[j] = group_point{path.xs[j], path.ts[j]};

    out.value = out.path_value;
    if (opts.do_shooting) {
        const auto sh = detail::shoot_distance(sp, p, q, path, opts.ode_rtol);
        if (sh.converged) {
            out.shooting_converged = true;
            out.shoot_value = sh.length;
            out.methods_disagree =
                std::abs(sh.length - out.path_value) >
                1e-3 * std::max({1e-12, std::abs(sh.length), std::abs(out.path_value)});
            out.value = std::min(out.path_value, sh.length);
        }
    }
    return out;
}

inline double distance(const spectrum& sp, const group_point& p, const group_point& q,
                       const bvp_options& opts = {}) {
    return distance_full(sp, p, q, opts).value;
}

}  // namespace solvgeo
