#pragma once

// Discrete Q-modulus of curve families in the parabolic boundary geometry
// (R^n, D, Lebesgue): grid densities, cylinder families of parallel
// segments, a multiplicative-update solver for the extremal density, and
// refinement studies exhibiting the positive-versus-vanishing dichotomy
// between horizontal and tilted families.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "boundary_metrics.hpp"
#include "errors.hpp"
#include "spectrum.hpp"

namespace solvgeo {

struct curve_family {
    std::vector<std::vector<std::vector<double>>> curves;  // polylines in R^n
    std::vector<double> lengths;  // per-curve D-length at the last traversal
    bool horizontal = false;
};

namespace detail {

inline bool curve_is_horizontal(const spectrum& sp, const std::vector<std::vector<double>>& c) {
    const std::size_t n1 = sp.dim(0);
    for (std::size_t v = 1; v < c.size(); ++v)
        for (std::size_t j = n1; j < sp.n(); ++j)
            if (c[v][j] != c[0][j]) return false;
    return true;
}

}  // namespace detail

inline void validate_family(const spectrum& sp, const curve_family& fam) {
    require(!fam.curves.empty(), errc::empty_family, "family holds no curves");
    bool all_horizontal = true;
    for (const auto& c : fam.curves) {
        require(c.size() >= 2, errc::too_few_vertices, "curve needs >= 2 vertices");
        for (const auto& v : c) {
            sp.check_vector(v, "validate_family");
            for (double x : v)
                require(std::isfinite(x), errc::unbounded_box, "curve vertex is not finite");
        }
        all_horizontal = all_horizontal && detail::curve_is_horizontal(sp, c);
    }
    require(!fam.horizontal || all_horizontal, errc::invalid_argument,
            "horizontal flag set on a non-horizontal family");
}

// ---------------------------------------------------------------------------
// Cylinder families
// ---------------------------------------------------------------------------

namespace detail {

// Van der Corput radical inverse, used for low-discrepancy cross sections.
inline double radical_inverse(std::size_t idx, std::size_t base) {
    double inv = 1.0 / static_cast<double>(base), f = inv, x = 0.0;
    for (std::size_t i = idx + 1; i > 0; i /= base) {
        x += static_cast<double>(i % base) * f;
        f *= inv;
    }
    return x;
}

}  // namespace detail

// `count` parallel translates of the segment pq filling the circular cylinder
// of the given cross-section radius.  p and q must lie on one horizontal
// leaf, so every translate is a straight horizontal segment.
inline curve_family build_cylinder_family(const spectrum& sp, const std::vector<double>& p,
                                          const std::vector<double>& q, double radius,
                                          std::size_t count) {
    sp.check_vector(p, "build_cylinder_family");
    sp.check_vector(q, "build_cylinder_family");
    require(radius > 0.0, errc::non_positive_radius, "cylinder radius must be positive");
    require(count >= 1, errc::invalid_argument, "cylinder needs at least one segment");
    const std::size_t n1 = sp.dim(0);
    for (std::size_t j = n1; j < sp.n(); ++j)
        require(std::abs(p[j] - q[j]) <= 1e-12, errc::not_same_leaf,
                "cylinder axis endpoints lie on different leaves");
    std::vector<double> u(sp.n(), 0.0);
    double norm2 = 0.0;
    for (std::size_t j = 0; j < sp.n(); ++j) {
        u[j] = q[j] - p[j];
        norm2 += u[j] * u[j];
    }
    require(norm2 > 0.0, errc::invalid_argument, "cylinder axis endpoints coincide");
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : u) x *= inv;
    // Orthonormal complement of the axis direction.
    std::vector<std::vector<double>> basis;
    for (std::size_t d = 0; d < sp.n() && basis.size() + 1 < sp.n(); ++d) {
        std::vector<double> v(sp.n(), 0.0);
        v[d] = 1.0;
        double du = u[d];
        for (std::size_t j = 0; j < sp.n(); ++j) v[j] -= du * u[j];
        for (const auto& b : basis) {
            double dot = 0.0;
            for (std::size_t j = 0; j < sp.n(); ++j) dot += v[j] * b[j];
            for (std::size_t j = 0; j < sp.n(); ++j) v[j] -= dot * b[j];
        }
        double vn = 0.0;
        for (double x : v) vn += x * x;
        if (vn < 1e-20) continue;
        const double s = 1.0 / std::sqrt(vn);
        for (double& x : v) x *= s;
        basis.push_back(std::move(v));
        if (basis.size() == sp.n() - 1) break;
    }
    curve_family fam;
    fam.horizontal = true;
    const double seg_len = std::sqrt(norm2);
    for (std::size_t k = 0; k < count; ++k) {
        std::vector<double> offset(sp.n(), 0.0);
        if (basis.size() == 1) {
            // Stratified midpoints cover the diameter uniformly.
            const double c = radius * (-1.0 + (2.0 * static_cast<double>(k) + 1.0) /
                                                  static_cast<double>(count));
            for (std::size_t j = 0; j < sp.n(); ++j) offset[j] = c * basis[0][j];
        } else if (basis.size() > 1) {
            // Low-discrepancy points in the cross-section ball.
            static constexpr std::size_t primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
            std::size_t idx = k;
            for (std::size_t attempt = 0;; ++attempt, idx += count) {
                require(attempt < 1000, errc::invalid_argument,
                        "cross-section sampling failed to fill the ball");
                std::vector<double> cube(basis.size());
                double r2 = 0.0;
                for (std::size_t j = 0; j < basis.size(); ++j) {
                    cube[j] = 2.0 * detail::radical_inverse(idx, primes[j % 8]) - 1.0;
                    r2 += cube[j] * cube[j];
                }
                if (r2 > 1.0) continue;
                for (std::size_t j = 0; j < basis.size(); ++j)
                    for (std::size_t c = 0; c < sp.n(); ++c)
                        offset[c] += radius * cube[j] * basis[j][c];
                break;
            }
        }
        std::vector<double> a(sp.n()), b(sp.n());
        for (std::size_t j = 0; j < sp.n(); ++j) {
            a[j] = p[j] + offset[j];
            b[j] = q[j] + offset[j];
        }
        fam.curves.push_back({std::move(a), std::move(b)});
        fam.lengths.push_back(seg_len);
    }
    return fam;
}

// ---------------------------------------------------------------------------
// Grid densities and the modulus solver
// ---------------------------------------------------------------------------

struct grid_density {
    std::vector<double> lo;            // box lower corner
    std::vector<double> side;          // cell side per axis
    std::vector<std::size_t> cells;    // cell count per axis
    std::vector<std::size_t> touched;  // flat ids of cells met by curves, ascending
    std::vector<double> rho;           // density per touched cell
    std::vector<double> mu;            // Lebesgue measure per touched cell
    double exponent = 0.0;             // Q

    [[nodiscard]] std::vector<double> cell_center(std::size_t flat) const {
        std::vector<double> c(lo.size());
        for (std::size_t d = 0; d < lo.size(); ++d) {
            c[d] = lo[d] + (static_cast<double>(flat % cells[d]) + 0.5) * side[d];
            flat /= cells[d];
        }
        return c;
    }
};

struct modulus_options {
    double padding = 0.05;               // bbox padding fraction per axis
    std::vector<double> box_lo, box_hi;  // explicit box override when non-empty
    std::size_t max_iterations = 400;
    double tolerance = 1e-6;             // relative objective change
};

struct modulus_result {
    double value = 0.0;
    std::size_t iterations = 0;
    double max_violation = 0.0;
    std::vector<double> curve_lengths;
    grid_density density;
};

namespace detail {

struct grid_geometry {
    std::vector<double> lo, hi, side;
    std::vector<std::size_t> cells;
};

inline grid_geometry make_grid(const spectrum& sp, const curve_family& fam,
                               std::size_t resolution, const modulus_options& opts) {
    require(resolution >= 1, errc::invalid_argument, "grid resolution must be >= 1");
    grid_geometry g;
    const std::size_t n = sp.n();
    if (!opts.box_lo.empty() || !opts.box_hi.empty()) {
        require(opts.box_lo.size() == n && opts.box_hi.size() == n, errc::dimension_mismatch,
                "explicit box dimension mismatch");
        g.lo = opts.box_lo;
        g.hi = opts.box_hi;
        for (std::size_t d = 0; d < n; ++d) {
            require(std::isfinite(g.lo[d]) && std::isfinite(g.hi[d]) && g.hi[d] > g.lo[d],
                    errc::unbounded_box, "explicit box is not a bounded box");
        }
        for (const auto& c : fam.curves)
            for (const auto& v : c)
                for (std::size_t d = 0; d < n; ++d)
                    require(v[d] >= g.lo[d] && v[d] <= g.hi[d], errc::unbounded_box,
                            "curve leaves the grid box");
    } else {
        g.lo.assign(n, std::numeric_limits<double>::infinity());
        g.hi.assign(n, -std::numeric_limits<double>::infinity());
        for (const auto& c : fam.curves)
            for (const auto& v : c)
                for (std::size_t d = 0; d < n; ++d) {
                    g.lo[d] = std::min(g.lo[d], v[d]);
                    g.hi[d] = std::max(g.hi[d], v[d]);
                }
        double scale = 0.0;
        for (std::size_t d = 0; d < n; ++d) scale = std::max(scale, g.hi[d] - g.lo[d]);
        if (scale <= 0.0) scale = 1.0;
        for (std::size_t d = 0; d < n; ++d) {
            const double span = g.hi[d] - g.lo[d];
            const double pad = opts.padding * (span > 0.0 ? span : scale);
            g.lo[d] -= pad;
            g.hi[d] += pad;
        }
    }
    g.side.resize(n);
    g.cells.assign(n, resolution);
    double total = 1.0;
    for (std::size_t d = 0; d < n; ++d) {
        g.side[d] = (g.hi[d] - g.lo[d]) / static_cast<double>(resolution);
        total *= static_cast<double>(resolution);
        require(total < 9.0e15, errc::invalid_argument, "grid has too many cells");
    }
    return g;
}

// Split one polyline into grid pieces; per-cell weights are the D-distances
// of the piece endpoints (the refinement-level snowflaked increments, matching
// the fixed-refinement polyline length bookkeeping).
inline void traverse_curve(const spectrum& sp, const grid_geometry& g,
                           const std::vector<std::vector<double>>& curve,
                           std::map<std::size_t, double>& weights, double& length) {
    const std::size_t n = sp.n();
    std::vector<double> ts;
    std::vector<double> a(n), b(n);
    for (std::size_t s = 0; s + 1 < curve.size(); ++s) {
        const auto& p = curve[s];
        const auto& q = curve[s + 1];
        ts.assign({0.0, 1.0});
        for (std::size_t d = 0; d < n; ++d) {
            const double dp = q[d] - p[d];
            if (dp == 0.0) continue;
            const double k_lo = (std::min(p[d], q[d]) - g.lo[d]) / g.side[d];
            const double k_hi = (std::max(p[d], q[d]) - g.lo[d]) / g.side[d];
            for (double k = std::ceil(k_lo); k <= std::floor(k_hi); k += 1.0) {
                const double t = (g.lo[d] + k * g.side[d] - p[d]) / dp;
                if (t > 0.0 && t < 1.0) ts.push_back(t);
            }
        }
        std::sort(ts.begin(), ts.end());
        for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
            const double t0 = ts[k], t1 = ts[k + 1];
            if (t1 - t0 < 1e-15) continue;
            const double tm = 0.5 * (t0 + t1);
            std::size_t flat = 0, stride = 1;
            for (std::size_t d = 0; d < n; ++d) {
                const double mid = p[d] + tm * (q[d] - p[d]);
                double idx = std::floor((mid - g.lo[d]) / g.side[d]);
                idx = std::max(0.0, std::min(idx, static_cast<double>(g.cells[d] - 1)));
                flat += static_cast<std::size_t>(idx) * stride;
                stride *= g.cells[d];
            }
            for (std::size_t d = 0; d < n; ++d) {
                a[d] = p[d] + t0 * (q[d] - p[d]);
                b[d] = p[d] + t1 * (q[d] - p[d]);
            }
            const double w = dist_D(sp, a, b);
            if (w > 0.0) {
                weights[flat] += w;
                length += w;
            }
        }
    }
}

}  // namespace detail

// Minimize sum rho^Q mu(cell) subject to sum_cells rho * (D-length of curve
// in cell) >= 1 for every curve.  Strictly convex for Q > 1; solved by
// multiplicative dual updates with a final admissibility normalization, so
// the returned value is always an upper bound attained by an admissible rho.
inline modulus_result discrete_modulus_full(const spectrum& sp, const curve_family& fam,
                                            std::size_t resolution, double Q = 0.0,
                                            const modulus_options& opts = {}) {
    validate_family(sp, fam);
    if (Q == 0.0) Q = sp.homogeneous_dimension();
    require(Q > 1.0, errc::invalid_argument, "modulus exponent must exceed 1");
    const auto g = detail::make_grid(sp, fam, resolution, opts);

    // Traverse every curve; build sparse constraint rows over touched cells.
    std::map<std::size_t, std::size_t> slot_of;  // flat cell id -> slot
    std::vector<std::vector<std::pair<std::size_t, double>>> rows;
    modulus_result res;
    for (const auto& curve : fam.curves) {
        std::map<std::size_t, double> weights;
        double length = 0.0;
        detail::traverse_curve(sp, g, curve, weights, length);
        require(!weights.empty(), errc::empty_family,
                "a curve meets the grid in a null set");
        std::vector<std::pair<std::size_t, double>> row;
        row.reserve(weights.size());
        for (const auto& [flat, w] : weights) {
            const auto [it, inserted] = slot_of.emplace(flat, slot_of.size());
            row.emplace_back(it->second, w);
        }
        rows.push_back(std::move(row));
        res.curve_lengths.push_back(length);
    }
    const std::size_t cells = slot_of.size();
    const std::size_t curves = rows.size();
    double mu = 1.0;
    for (double s : g.side) mu *= s;

    // Deterministic start: the uniform admissible density.
    std::vector<double> rho(cells, 0.0);
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_rho;
    std::vector<double> sums(curves, 0.0);
    const auto project_and_score = [&](std::vector<double>& cand) {
        double min_sum = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < curves; ++c) {
            double s = 0.0;
            for (const auto& [slot, w] : rows[c]) s += cand[slot] * w;
            sums[c] = s;
            min_sum = std::min(min_sum, s);
        }
        if (!(min_sum > 0.0)) return std::numeric_limits<double>::infinity();
        const double scale = 1.0 / min_sum;
        double obj = 0.0;
        for (double& x : cand) {
            x *= scale;
            obj += std::pow(x, Q) * mu;
        }
        for (double& s : sums) s *= scale;
        return obj;
    };
    {
        double min_len = std::numeric_limits<double>::infinity();
        for (double l : res.curve_lengths) min_len = std::min(min_len, l);
        std::vector<double> uniform(cells, 1.0 / min_len);
        const double obj = project_and_score(uniform);
        best = obj;
        best_rho = uniform;
    }

    // Dual ascent: lambda weights per curve, density from the stationarity
    // condition Q rho^{Q-1} mu = sum lambda * weight.
    std::vector<double> lambda(curves, 1.0);
    std::vector<double> load(cells, 0.0);
    const double kappa = Q - 1.0;
    double prev_obj = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < opts.max_iterations; ++it) {
        ++res.iterations;
        std::fill(load.begin(), load.end(), 0.0);
        for (std::size_t c = 0; c < curves; ++c)
            for (const auto& [slot, w] : rows[c]) load[slot] += lambda[c] * w;
        for (std::size_t s = 0; s < cells; ++s)
            rho[s] = std::pow(load[s] / (Q * mu), 1.0 / (Q - 1.0));
        auto cand = rho;
        const double obj = project_and_score(cand);
        if (obj < best) {
            best = obj;
            best_rho = cand;
        }
        // Converged when successive dual iterates stop moving the objective.
        if (std::isfinite(obj) && std::abs(obj - prev_obj) <= opts.tolerance * obj) break;
        prev_obj = obj;
        for (std::size_t c = 0; c < curves; ++c)
            lambda[c] *= std::pow(std::max(sums[c], 1e-300), -kappa);
        // Keep the dual scale bounded: only ratios of lambda matter.
        double lmax = 0.0;
        for (double l : lambda) lmax = std::max(lmax, l);
        if (lmax > 0.0)
            for (double& l : lambda) l /= lmax;
    }

    res.value = best;
    res.density.lo = g.lo;
    res.density.side = g.side;
    res.density.cells = g.cells;
    res.density.exponent = Q;
    res.density.touched.resize(cells);
    res.density.rho.resize(cells);
    res.density.mu.assign(cells, mu);
    for (const auto& [flat, slot] : slot_of) {
        res.density.touched[slot] = flat;
        res.density.rho[slot] = best_rho[slot];
    }
    // Report the worst remaining constraint violation of the returned rho.
    double min_sum = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < curves; ++c) {
        double s = 0.0;
        for (const auto& [slot, w] : rows[c]) s += best_rho[slot] * w;
        min_sum = std::min(min_sum, s);
    }
    res.max_violation = std::max(0.0, 1.0 - min_sum);
    // Sort the touched list (with rho) into ascending flat order for export.
    std::vector<std::size_t> order(cells);
    for (std::size_t i = 0; i < cells; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return res.density.touched[a] < res.density.touched[b];
    });
    grid_density sorted = res.density;
    for (std::size_t i = 0; i < cells; ++i) {
        sorted.touched[i] = res.density.touched[order[i]];
        sorted.rho[i] = res.density.rho[order[i]];
    }
    res.density = std::move(sorted);
    return res;
}

inline double discrete_modulus(const spectrum& sp, const curve_family& fam,
                               std::size_t resolution, double Q = 0.0,
                               const modulus_options& opts = {}) {
    return discrete_modulus_full(sp, fam, resolution, Q, opts).value;
}

// ---------------------------------------------------------------------------
// Refinement studies
// ---------------------------------------------------------------------------

struct refinement_step {
    std::size_t resolution = 0;
    double modulus = 0.0;
    std::size_t iterations = 0;
    double max_violation = 0.0;
    double max_curve_length = 0.0;
};

struct refinement_report {
    std::vector<refinement_step> steps;
    bool stabilizes = false;       // spread of the modulus sequence within 10%
    bool decreasing = false;       // strictly decreasing sequence
    double final_modulus = 0.0;
};

inline refinement_report modulus_refinement_study(const spectrum& sp, const curve_family& fam,
                                                  const std::vector<std::size_t>& resolutions,
                                                  double Q = 0.0,
                                                  const modulus_options& opts = {}) {
    require(resolutions.size() >= 3, errc::invalid_argument,
            "refinement study needs at least three resolutions");
    refinement_report rep;
    for (const std::size_t m : resolutions) {
        const auto full = discrete_modulus_full(sp, fam, m, Q, opts);
        refinement_step step;
        step.resolution = m;
        step.modulus = full.value;
        step.iterations = full.iterations;
        step.max_violation = full.max_violation;
        for (double l : full.curve_lengths) step.max_curve_length = std::max(step.max_curve_length, l);
        rep.steps.push_back(step);
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    rep.decreasing = true;
    for (std::size_t k = 0; k < rep.steps.size(); ++k) {
        lo = std::min(lo, rep.steps[k].modulus);
        hi = std::max(hi, rep.steps[k].modulus);
        if (k > 0 && rep.steps[k].modulus >= rep.steps[k - 1].modulus) rep.decreasing = false;
    }
    rep.stabilizes = hi <= 1.1 * lo;
    rep.final_modulus = rep.steps.back().modulus;
    return rep;
}

// ---------------------------------------------------------------------------
// CSV exchange
// ---------------------------------------------------------------------------

inline void save_family_csv(const std::string& path, const curve_family& fam) {
    std::ofstream out(path);
    require(out.good(), errc::invalid_argument, "cannot open family file for writing");
    const std::size_t d = fam.curves.empty() ? 0 : fam.curves.front().front().size();
    out << "curve,vertex";
    for (std::size_t c = 0; c < d; ++c) out << ",x" << c;
    out << "\n";
    out.precision(17);
    for (std::size_t i = 0; i < fam.curves.size(); ++i)
        for (std::size_t v = 0; v < fam.curves[i].size(); ++v) {
            out << i << "," << v;
            for (std::size_t c = 0; c < d; ++c) out << "," << fam.curves[i][v][c];
            out << "\n";
        }
    require(out.good(), errc::invalid_argument, "write to family file failed");
}

inline curve_family load_family_csv(const spectrum& sp, const std::string& path) {
    std::ifstream in(path);
    require(in.good(), errc::invalid_argument, "cannot open family file");
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), errc::config_invalid,
            "family file is empty");
    {
        std::stringstream header(line);
        std::string cell;
        require(std::getline(header, cell, ',') && cell == "curve", errc::config_invalid,
                "family header must start with curve,vertex");
        require(std::getline(header, cell, ',') && cell == "vertex", errc::config_invalid,
                "family header must start with curve,vertex");
        std::size_t coords = 0;
        while (std::getline(header, cell, ',')) ++coords;
        require(coords == sp.n(), errc::config_invalid,
                "family file dimension differs from the spectrum");
    }
    curve_family fam;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(row, cell, ',')) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                fail(errc::config_invalid, "non-numeric cell in family file");
            }
        }
        require(values.size() == sp.n() + 2, errc::config_invalid,
                "family row has wrong number of cells");
        const auto curve_idx = static_cast<std::size_t>(values[0]);
        require(curve_idx <= fam.curves.size(), errc::config_invalid,
                "family rows must list curves consecutively");
        if (curve_idx == fam.curves.size()) fam.curves.emplace_back();
        fam.curves[curve_idx].push_back(
            std::vector<double>(values.begin() + 2, values.end()));
    }
    require(!fam.curves.empty(), errc::config_invalid, "family file lists no curves");
    bool all_horizontal = true;
    for (const auto& c : fam.curves) {
        require(c.size() >= 2, errc::config_invalid, "family file curve has < 2 vertices");
        all_horizontal = all_horizontal && detail::curve_is_horizontal(sp, c);
    }
    fam.horizontal = all_horizontal;
    return fam;
}

inline void save_density_csv(const std::string& path, const grid_density& den) {
    std::ofstream out(path);
    require(out.good(), errc::invalid_argument, "cannot open density file for writing");
    out << "cell";
    for (std::size_t d = 0; d < den.lo.size(); ++d) out << ",center" << d;
    out << ",mu,rho\n";
    out.precision(17);
    for (std::size_t i = 0; i < den.touched.size(); ++i) {
        out << den.touched[i];
        for (double c : den.cell_center(den.touched[i])) out << "," << c;
        out << "," << den.mu[i] << "," << den.rho[i] << "\n";
    }
    require(out.good(), errc::invalid_argument, "write to density file failed");
}

}  // namespace solvgeo
