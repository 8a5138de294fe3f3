#pragma once

// Verification campaigns: one runner per CLI subcommand.  Each runner draws
// its data deterministically from the config seed, exercises the library
// kernels, and returns a report of named checks; side artifacts (CSV tables,
// profile JSON) land in the configured output directory.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "boundary_metrics.hpp"
#include "busemann.hpp"
#include "config.hpp"
#include "distance.hpp"
#include "errors.hpp"
#include "group.hpp"
#include "halfplane.hpp"
#include "maps.hpp"
#include "modulus.hpp"
#include "quasicenter.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "sampled_space.hpp"
#include "spectrum.hpp"
#include "visual.hpp"

namespace solvgeo {

namespace detail {

inline rng campaign_rng(const campaign_config& cfg, const std::string& name) {
    return rng(cfg.seed).fork(rng::hash_string(name));
}

inline std::string witness(const std::string& what, double value) {
    std::ostringstream out;
    out.precision(6);
    out << what << " = " << value;
    return out.str();
}

inline std::filesystem::path out_path(const campaign_config& cfg, const std::string& file) {
    std::filesystem::create_directories(cfg.out_dir);
    return std::filesystem::path(cfg.out_dir) / file;
}

}  // namespace detail

// --------------------------------------------------------------------------
// verify-norms: the two-sided comparison D_s <= D_e <= r^{1/(2 alpha_1)} D_s
// on one-, two-, and three-block spectra.
// --------------------------------------------------------------------------
inline report run_verify_norms(const campaign_config& cfg) {
    report rep;
    rep.config_hash = config_hash(cfg);
    const std::vector<std::pair<std::string, spectrum>> spectra = {
        {"r1", spectrum_h(1.0)},
        {"r2", spectrum_s2()},
        {"r3", build_spectrum({{1, 1.0}, {1, 2.0}, {1, 3.0}})},
    };
    for (const auto& [label, sp] : spectra) {
        rng gen = detail::campaign_rng(cfg, "verify-norms:" + label);
        std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
        pairs.reserve(cfg.quadruples);
        for (std::size_t k = 0; k < cfg.quadruples; ++k) {
            auto x = gen.uniform_vector(sp.n(), -5.0, 5.0);
            auto y = x;
            if (k % 2 == 0) {
                y = gen.uniform_vector(sp.n(), -5.0, 5.0);
            } else {
                // Near-coincident pairs stress the small-scale regime.
                for (auto& c : y)
                    c += (gen.uniform01() < 0.5 ? -1.0 : 1.0) * gen.log_uniform(1e-9, 1e-1);
            }
            if (x == y) continue;
            pairs.emplace_back(std::move(x), std::move(y));
        }
        const auto sandwich = check_norm_sandwich(sp, pairs);
        const double worst =
            std::max({sandwich.max_lower_violation, sandwich.max_upper_violation, 0.0});
        rep.add(cfg.seed, upper_check("verify-norms", "sandwich_" + label, worst, 1e-9,
                                      sandwich.pairs));
    }
    return rep;
}

// --------------------------------------------------------------------------
// distance: closed-form oracle on one-block groups, left-invariance, and the
// height lower bound d >= |t1 - t2|.
// --------------------------------------------------------------------------
inline report run_distance(const campaign_config& cfg, bool oracle_only = false) {
    report rep;
    rep.config_hash = config_hash(cfg);
    double lower_worst = -std::numeric_limits<double>::infinity();
    std::size_t lower_count = 0;
    std::ofstream pairs_out(detail::out_path(cfg, "distance_pairs.jsonl"));

    for (const double alpha : {0.5, 1.0, 2.0}) {
        const spectrum sp = spectrum_h(alpha);
        std::ostringstream tag;
        tag << "oracle_alpha_" << alpha;
        rng gen = detail::campaign_rng(cfg, "distance:" + tag.str());
        double worst = 0.0;
        std::vector<std::string> witnesses;
        for (std::size_t k = 0; k < cfg.pairs; ++k) {
            group_point p, q;
            double oracle = 0.0;
            for (int attempt = 0; attempt < 64; ++attempt) {
                p = {{gen.uniform(-3.0, 3.0)}, gen.uniform(-2.5, 2.5)};
                q = {{gen.uniform(-3.0, 3.0)}, gen.uniform(-2.5, 2.5)};
                oracle = hyperbolic_oracle_distance(alpha, p, q);
                if (oracle > 1e-3 && oracle <= 10.0) break;
            }
            const double numeric = distance(sp, p, q);
            const double rel = std::abs(numeric - oracle) / oracle;
            if (rel > worst) {
                worst = rel;
                witnesses = {detail::witness("pair " + std::to_string(k) + " rel", rel)};
            }
            lower_worst = std::max(lower_worst, std::abs(p.t - q.t) - numeric);
            ++lower_count;
            nlohmann::json row;
            row["alpha"] = alpha;
            row["pair"] = k;
            row["d_numeric"] = numeric;
            row["d_oracle"] = oracle;
            row["defects"] = {{"relative", rel},
                              {"height_lower", std::abs(p.t - q.t) - numeric}};
            pairs_out << row.dump() << "\n";
        }
        rep.add(cfg.seed, upper_check("distance", tag.str(), worst, cfg.tol_distance,
                                      cfg.pairs, witnesses));
    }

    if (!oracle_only) {
        const spectrum sp = cfg.sp();
        rng gen = detail::campaign_rng(cfg, "distance:invariance");
        double worst = 0.0;
        for (std::size_t k = 0; k < cfg.triples; ++k) {
            const group_point p{gen.uniform_vector(sp.n(), -2.0, 2.0), gen.uniform(-2.0, 2.0)};
            const group_point q{gen.uniform_vector(sp.n(), -2.0, 2.0), gen.uniform(-2.0, 2.0)};
            const group_point g{gen.uniform_vector(sp.n(), -2.0, 2.0), gen.uniform(-2.0, 2.0)};
            const double d = distance(sp, p, q);
            const double dg = distance(sp, left_translate(sp, g, p), left_translate(sp, g, q));
            worst = std::max(worst, std::abs(dg - d));
            lower_worst = std::max(lower_worst, std::abs(p.t - q.t) - d);
            ++lower_count;
        }
        rep.add(cfg.seed, upper_check("distance", "left_invariance", worst, 1e-3, cfg.triples));
    }
    if (!oracle_only)
        rep.add(cfg.seed, upper_check("distance", "height_lower_bound",
                                      std::max(lower_worst, 0.0), 1e-6, lower_count));
    return rep;
}

// --------------------------------------------------------------------------
// geodesic: solve one boundary-value problem, export the discrete path, and
// check its internal consistency.
// --------------------------------------------------------------------------
inline report run_geodesic(const campaign_config& cfg) {
    report rep;
    rep.config_hash = config_hash(cfg);
    const spectrum sp = cfg.sp();
    rng gen = detail::campaign_rng(cfg, "geodesic");
    const group_point p{gen.uniform_vector(sp.n(), -1.0, 1.0), gen.uniform(-1.0, 0.0)};
    const group_point q{gen.uniform_vector(sp.n(), 0.5, 2.0), gen.uniform(0.0, 1.0)};
    const auto full = distance_full(sp, p, q);
    require(full.waypoints.size() >= 2, errc::campaign_failed,
            "geodesic solve produced no waypoints");

    // Export rows (s, x..., t) with s the metric chord length accumulated at
    // segment midpoints, matching how the path length itself is measured.
    {
        std::ofstream csv(detail::out_path(cfg, "geodesic.csv"));
        csv << "s";
        for (std::size_t c = 0; c < sp.n(); ++c) csv << ",x" << c;
        csv << ",t\n";
        csv.precision(17);
        double s = 0.0;
        for (std::size_t k = 0; k < full.waypoints.size(); ++k) {
            if (k > 0) {
                const auto& a = full.waypoints[k - 1];
                const auto& b = full.waypoints[k];
                std::vector<double> vx(sp.n());
                for (std::size_t c = 0; c < sp.n(); ++c) vx[c] = b.x[c] - a.x[c];
                s += std::sqrt(metric_norm2(sp, 0.5 * (a.t + b.t), vx, b.t - a.t));
            }
            csv << s;
            for (double c : full.waypoints[k].x) csv << "," << c;
            csv << "," << full.waypoints[k].t << "\n";
        }
    }

    double endpoint_defect = 0.0;
    for (std::size_t c = 0; c < sp.n(); ++c) {
        endpoint_defect = std::max(endpoint_defect, std::abs(full.waypoints.front().x[c] - p.x[c]));
        endpoint_defect = std::max(endpoint_defect, std::abs(full.waypoints.back().x[c] - q.x[c]));
    }
    endpoint_defect = std::max(endpoint_defect, std::abs(full.waypoints.front().t - p.t));
    endpoint_defect = std::max(endpoint_defect, std::abs(full.waypoints.back().t - q.t));
    rep.add(cfg.seed, upper_check("geodesic", "endpoint_defect", endpoint_defect, 1e-9,
                                  full.waypoints.size()));

    double apex = -std::numeric_limits<double>::infinity();
    for (const auto& w : full.waypoints) apex = std::max(apex, w.t);
    rep.add(cfg.seed, upper_check("geodesic", "apex_reaches_report",
                                  std::abs(apex - full.apex_height), 1e-6, 1));
    if (full.shooting_converged) {
        const double gap = std::abs(full.path_value - full.shoot_value) / full.value;
        rep.add(cfg.seed,
                upper_check("geodesic", "methods_agree", gap, 1e-3, 1,
                            {detail::witness("path", full.path_value),
                             detail::witness("shoot", full.shoot_value)}));
    }
    rep.add(cfg.seed, upper_check("geodesic", "height_lower_bound",
                                  std::max(0.0, std::abs(p.t - q.t) - full.value), 1e-6, 1));
    return rep;
}

// --------------------------------------------------------------------------
// busemann: horofunction of the upward direction against its closed form,
// plus the one-block boundary-point closed form.
// --------------------------------------------------------------------------
inline report run_busemann(const campaign_config& cfg) {
    report rep;
    rep.config_hash = config_hash(cfg);
    const spectrum sp = cfg.sp();
    rng gen = detail::campaign_rng(cfg, "busemann");
    const group_point base{std::vector<double>(sp.n(), 0.0), 0.0};
    busemann_options opts;
    opts.horizon = 20.0;
    double worst = 0.0;
    const std::size_t n_points = std::max<std::size_t>(cfg.points, 1);
    for (std::size_t k = 0; k < n_points; ++k) {
        const group_point pt{gen.uniform_vector(sp.n(), -2.0, 2.0), gen.uniform(-2.0, 2.0)};
        const double numeric = busemann_upward_numeric(sp, pt, base, opts);
        worst = std::max(worst, std::abs(numeric - busemann_upward(pt, base.t)));
    }
    rep.add(cfg.seed, upper_check("busemann", "upward_T20", worst, 1e-2, n_points));

    const double alpha = 1.0;
    const spectrum sph = spectrum_h(alpha);
    rng gen1 = detail::campaign_rng(cfg, "busemann:r1");
    double worst1 = 0.0;
    const std::size_t n1 = std::min<std::size_t>(n_points, 20);
    for (std::size_t k = 0; k < n1; ++k) {
        const group_point pt{{gen1.uniform(-2.0, 2.0)}, gen1.uniform(-1.5, 1.5)};
        const std::vector<double> xi{gen1.uniform(-2.0, 2.0)};
        const double numeric = busemann_boundary_numeric(sph, pt, xi, 0.0, opts);
        const double closed = halfplane_busemann(alpha, xi, 0.0, pt);
        worst1 = std::max(worst1, std::abs(numeric - closed));
    }
    rep.add(cfg.seed, upper_check("busemann", "boundary_r1", worst1, 1e-2, n1));
    return rep;
}

namespace detail {

// Pair of boundary points whose profile distance lies in [De_lo, De_hi],
// drawn by rejection around a log-uniform target scale.
inline std::pair<std::vector<double>, std::vector<double>> draw_de_pair(
    const spectrum& sp, rng& gen, double de_lo, double de_hi) {
    for (int attempt = 0; attempt < 256; ++attempt) {
        auto xi = gen.uniform_vector(sp.n(), -2.0, 2.0);
        const double target = gen.log_uniform(de_lo, de_hi);
        auto eta = xi;
        for (std::size_t i = 0; i < sp.r(); ++i) {
            const double mag = std::pow(target, sp.alpha(i)) * gen.uniform(0.2, 1.0);
            for (std::size_t c = sp.offset(i); c < sp.offset(i) + sp.dim(i); ++c)
                eta[c] += (gen.uniform01() < 0.5 ? -1.0 : 1.0) * mag;
        }
        const double de = dist_De(sp, xi, eta);
        if (de >= de_lo && de <= de_hi) return {std::move(xi), std::move(eta)};
    }
    fail(errc::campaign_failed, "could not sample a pair in the requested profile range");
}

}  // namespace detail

// --------------------------------------------------------------------------
// quasicenter: tripod defect over a mid profile range, and its growth when
// the range is extended (uniform-boundedness proxy).
// --------------------------------------------------------------------------
inline report run_quasicenter(const campaign_config& cfg) {
    report rep;
    rep.config_hash = config_hash(cfg);
    const spectrum sp = cfg.sp();
    const auto max_defect = [&](double de_lo, double de_hi, const std::string& tag) {
        rng gen = detail::campaign_rng(cfg, "quasicenter:" + tag);
        double worst = 0.0;
        for (std::size_t k = 0; k < cfg.pairs; ++k) {
            const auto [xi, eta] = detail::draw_de_pair(sp, gen, de_lo, de_hi);
            worst = std::max(worst, quasicenter_defect(sp, xi, eta).defect);
        }
        return worst;
    };
    const double mid = max_defect(std::exp(-5.0), std::exp(5.0), "mid");
    rep.add(cfg.seed, upper_check("quasicenter", "defect_mid_range", mid, 5.0, cfg.pairs));
    const double wide = max_defect(std::exp(-8.0), std::exp(8.0), "wide");
    const double growth = std::max(0.0, (wide - mid) / mid);
    rep.add(cfg.seed, upper_check("quasicenter", "range_extension_growth", growth, 0.10,
                                  cfg.pairs, {detail::witness("wide-range defect", wide)}));
    return rep;
}

// --------------------------------------------------------------------------
// g3: two-regime distance control through the quasicenter height.
// --------------------------------------------------------------------------
inline report run_g3(const campaign_config& cfg) {
    report rep;
    rep.config_hash = config_hash(cfg);
    const spectrum sp = cfg.sp();
    {
        rng gen = detail::campaign_rng(cfg, "g3:regime2");
        double worst = 0.0;
        for (std::size_t k = 0; k < cfg.pairs; ++k) {
            const auto [xi, eta] = detail::draw_de_pair(sp, gen, std::exp(-3.0), std::exp(3.0));
            const double t0 = quasicenter_height(sp, xi, eta);
            const double t1 = t0 + gen.uniform(0.0, 3.0);
            const double t2 = t0 + gen.uniform(-3.0, 3.0);
            const auto g = g3_defect(sp, xi, eta, t1, t2);
            require(g.regime == 2, errc::campaign_failed, "expected regime 2 draw");
            worst = std::max({worst, -g.slack_low, -g.slack_high});
        }
        rep.add(cfg.seed, upper_check("g3", "regime2_sandwich", std::max(worst, 0.0), 1e-3,
                                      cfg.pairs));
    }
    {
        const spectrum sph = spectrum_h(1.0);
        rng gen = detail::campaign_rng(cfg, "g3:regime1");
        double worst = 0.0;
        for (std::size_t k = 0; k < cfg.pairs; ++k) {
            const std::vector<double> xi{gen.uniform(-2.0, 2.0)};
            std::vector<double> eta{xi[0] + (gen.uniform01() < 0.5 ? -1.0 : 1.0) *
                                                gen.log_uniform(0.05, 20.0)};
            const double t0 = quasicenter_height(sph, xi, eta);
            const double t1 = t0 - gen.uniform(1.0, 4.0);
            const double t2 = t0 - gen.uniform(1.0, 4.0);
            const auto g = g3_defect(sph, xi, eta, t1, t2);
            require(g.regime == 1, errc::campaign_failed, "expected regime 1 draw");
            worst = std::max(worst, std::abs(g.defect));
        }
        rep.add(cfg.seed, upper_check("g3", "regime1_defect", worst, 1.2, cfg.pairs));
    }
    return rep;
}

// --------------------------------------------------------------------------
// visual: Gromov-product quasimetric against the one-block closed forms; a
// small table is exported for external tooling.
// --------------------------------------------------------------------------
inline report run_visual(const campaign_config& cfg) {
    report rep;
    rep.config_hash = config_hash(cfg);
    const spectrum sph = spectrum_h(1.0);
    const group_point base{{0.0}, 0.0};
    rng gen = detail::campaign_rng(cfg, "visual");
    const std::size_t n_pairs = std::min<std::size_t>(cfg.pairs, 24);
    double worst_pair = 0.0, worst_xi0 = 0.0;
    for (std::size_t k = 0; k < n_pairs; ++k) {
        const double xi = gen.uniform(-3.0, 3.0);
        const double eta = gen.uniform(-3.0, 3.0);
        if (std::abs(xi - eta) < 1e-2) continue;
        // Closed form: e^{-(xi|eta)} = |xi - eta| / sqrt((1+xi^2)(1+eta^2)).
        const double exact =
            std::abs(xi - eta) / std::sqrt((1.0 + xi * xi) * (1.0 + eta * eta));
        const double numeric = visual_quasimetric(sph, base, 1.0, {xi}, {eta});
        worst_pair = std::max(worst_pair, std::abs(numeric - exact) / exact);
        // Closed form against the upward direction: e^{-(xi|xi0)} = (1+xi^2)^{-1/2}.
        const double exact0 = 1.0 / std::sqrt(1.0 + xi * xi);
        const double numeric0 =
            std::exp(-gromov_product_xi0(sph, {xi}, base, 20.0).value);
        worst_xi0 = std::max(worst_xi0, std::abs(numeric0 - exact0) / exact0);
    }
    rep.add(cfg.seed, upper_check("visual", "r1_pair_oracle", worst_pair, 1e-3, n_pairs));
    rep.add(cfg.seed, upper_check("visual", "r1_xi0_oracle", worst_xi0, 1e-3, n_pairs));

    const spectrum sp = cfg.sp();
    const auto pts = boundary_sample(sp, std::min<std::size_t>(cfg.points, 10), 1.0,
                                     detail::campaign_rng(cfg, "visual:table").next_u64());
    const auto table = visual_table(sp, pts, {std::vector<double>(sp.n(), 0.0), 0.0},
                                    cfg.eps(sp), true, 12.0, bvp_quick());
    save_space_csv(table, detail::out_path(cfg, "visual_space.csv").string());
    rep.add(cfg.seed, upper_check("visual", "table_rows", 0.0, 0.0, table.size()));
    return rep;
}

// --------------------------------------------------------------------------
// parabolic: the chain-metrization sandwich at epsilon <= epsilon0, and the
// comparison against the boundary quasimetric D at epsilon = alpha_1.
// --------------------------------------------------------------------------
inline report run_parabolic(const campaign_config& cfg) {
    report rep;
    rep.config_hash = config_hash(cfg);
    const spectrum sp = cfg.sp();
    const group_point base{std::vector<double>(sp.n(), 0.0), 0.0};
    const std::uint64_t sample_seed = detail::campaign_rng(cfg, "parabolic:sample").next_u64();

    {
        const auto pts = boundary_sample(sp, cfg.points, 1.0, sample_seed);
        const auto raw = parabolic_table(sp, pts, base, cfg.eps(sp));
        const auto chained = chain_metrize(raw);
        double min_factor = std::numeric_limits<double>::infinity();
        double max_excess = 0.0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < raw.size(); ++i)
            for (std::size_t j = i + 1; j < raw.size(); ++j) {
                const double factor = chained.at(i, j) / raw.at(i, j);
                min_factor = std::min(min_factor, factor);
                max_excess = std::max(max_excess, factor - 1.0);
                ++pairs;
            }
        rep.add(cfg.seed, lower_check("parabolic", "chain_lower_factor", min_factor,
                                      cfg.chain_c * (1.0 - 1e-12), pairs));
        rep.add(cfg.seed, upper_check("parabolic", "chain_upper_excess",
                                      std::max(max_excess, 0.0), 1e-12, pairs));
    }

    {
        const std::size_t n_pts = std::min<std::size_t>(cfg.points, 32);
        const auto pts1 = boundary_sample(sp, n_pts, 1.0, sample_seed + 1);
        const auto pts2 = boundary_sample(sp, n_pts, 2.0, sample_seed + 1);
        const auto cmp1 = compare_parabolic_vs_D(sp, pts1, base);
        const auto cmp2 = compare_parabolic_vs_D(sp, pts2, base);
        rep.add(cfg.seed, band_check("parabolic", "vs_D_band", cmp1.ratios.min_ratio,
                                     cmp1.ratios.max_ratio, 1e6, cmp1.ratios.count));
        const double growth =
            std::max(0.0, cmp2.ratios.band() / cmp1.ratios.band() - 1.0);
        rep.add(cfg.seed, upper_check("parabolic", "vs_D_band_growth", growth,
                                      cfg.profile_slack, cmp2.ratios.count));
    }
    return rep;
}

namespace detail {

// Chain-metrized boundary sample with the point farthest from the first
// point used as the inversion basepoint.
inline sampled_space boundary_metric_table(const spectrum& sp,
                                           const std::vector<std::vector<double>>& pts) {
    const std::size_t n = pts.size();
    std::vector<double> t(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            t[i * n + j] = t[j * n + i] = dist_D(sp, pts[i], pts[j]);
    sampled_space quasi(point_labels(n), pts, std::move(t), space_kind::quasimetric);
    return chain_metrize(quasi);
}

inline std::vector<std::array<std::size_t, 4>> draw_quadruples(rng& gen, std::size_t n,
                                                               std::size_t count) {
    std::vector<std::array<std::size_t, 4>> qs;
    qs.reserve(count);
    while (qs.size() < count) {
        std::array<std::size_t, 4> q{gen.index(n), gen.index(n), gen.index(n), gen.index(n)};
        bool distinct = q[0] != q[1] && q[0] != q[2] && q[0] != q[3] && q[1] != q[2] &&
                        q[1] != q[3] && q[2] != q[3];
        if (distinct) qs.push_back(q);
    }
    return qs;
}

// Worst violation of the factor-4 sandwich chain/quasi in [1/4, 1].
inline double factor4_violation(const sampled_space& quasi_num,
                                const sampled_space& chained) {
    double worst = 0.0;
    for (std::size_t a = 0; a < chained.size(); ++a)
        for (std::size_t b = a + 1; b < chained.size(); ++b) {
            const double r = quasi_num.at(a, b);
            const double c = chained.at(a, b);
            worst = std::max({worst, c / r - 1.0, 0.25 - c / r});
        }
    return std::max(worst, 0.0);
}

}  // namespace detail

// --------------------------------------------------------------------------
// invert: metric inversion at a sample point; the chain stays within a
// factor 4 and cross-ratios move by at most 16.
// --------------------------------------------------------------------------
inline report run_invert(const campaign_config& cfg) {
    report rep;
    rep.config_hash = config_hash(cfg);
    const spectrum sp = cfg.sp();
    rng gen = detail::campaign_rng(cfg, "invert");
    const auto pts = boundary_sample(sp, cfg.points, 1.0, gen.next_u64());
    const auto metric = detail::boundary_metric_table(sp, pts);
    const std::size_t p = 0;
    const auto inverted = invert_metric(metric, p);

    // Recompute the inversion quasimetric to measure the sandwich directly.
    const std::size_t m = inverted.size();
    std::vector<double> rho(m * m, 0.0);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) {
            if (a == b) continue;
            const std::size_t ia = a + 1, ib = b + 1;  // basepoint 0 removed
            rho[a * m + b] =
                metric.at(ia, ib) / (metric.at(ia, p) * metric.at(ib, p));
        }
    const sampled_space quasi(inverted.labels(), inverted.coords(), rho,
                              space_kind::quasimetric);
    rep.add(cfg.seed, upper_check("invert", "factor4_sandwich",
                                  detail::factor4_violation(quasi, inverted), 1e-12,
                                  m * (m - 1) / 2));

    const auto shrunk = remove_point(metric, p);
    const auto quads = detail::draw_quadruples(gen, m, cfg.quadruples);
    const auto prof = crossratio_distortion(shrunk, inverted, quads);
    rep.add(cfg.seed, upper_check("invert", "quasimobius_16t", prof.max_out_over_in,
                                  16.0 * (1.0 + 1e-9), prof.used));
    return rep;
}

// --------------------------------------------------------------------------
// sphericalize: the same sandwich and cross-ratio control for the one-point
// extension, plus the measure-weight normalization.
// --------------------------------------------------------------------------
inline report run_sphericalize(const campaign_config& cfg) {
    report rep;
    rep.config_hash = config_hash(cfg);
    const spectrum sp = cfg.sp();
    rng gen = detail::campaign_rng(cfg, "sphericalize");
    const auto pts = boundary_sample(sp, cfg.points, 1.0, gen.next_u64());
    const auto metric = detail::boundary_metric_table(sp, pts);
    const std::size_t p = 0;
    const auto sph = sphericalize(metric, p);

    const std::size_t n = metric.size();
    const std::size_t m = sph.size();
    std::vector<double> s(m * m, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b) continue;
            s[a * m + b] =
                metric.at(a, b) / ((1.0 + metric.at(a, p)) * (1.0 + metric.at(b, p)));
        }
        s[a * m + n] = s[n * m + a] = 1.0 / (1.0 + metric.at(a, p));
    }
    const sampled_space quasi(sph.labels(), sph.coords(), s, space_kind::quasimetric);
    rep.add(cfg.seed, upper_check("sphericalize", "factor4_sandwich",
                                  detail::factor4_violation(quasi, sph), 1e-12,
                                  m * (m - 1) / 2));

    const auto original_part = remove_point(sph, n);
    const auto quads = detail::draw_quadruples(gen, n, cfg.quadruples);
    const auto prof = crossratio_distortion(metric, original_part, quads);
    rep.add(cfg.seed, upper_check("sphericalize", "quasimobius_16t", prof.max_out_over_in,
                                  16.0 * (1.0 + 1e-9), prof.used));

    const double w0 = sphericalized_measure_weight(sp.homogeneous_dimension(), 0.0);
    rep.add(cfg.seed, upper_check("sphericalize", "measure_weight_unit",
                                  std::abs(w0 - 1.0), 1e-15, 1));
    return rep;
}

// --------------------------------------------------------------------------
// relation1: the parabolic quasimetric against the inversion of the visual
// metric about the upward direction; the ratio band must stay finite and
// essentially unchanged when the sample radius doubles.
// --------------------------------------------------------------------------
inline report run_relation1(const campaign_config& cfg) {
    report rep;
    rep.config_hash = config_hash(cfg);
    const std::vector<std::pair<std::string, spectrum>> spectra = {
        {"r1", spectrum_h(1.0)},
        {"s2", spectrum_s2()},
    };
    for (const auto& [label, sp] : spectra) {
        const group_point base{std::vector<double>(sp.n(), 0.0), 0.0};
        const double eps = std::min(cfg.eps(sp), cfg.eps1(sp));
        const std::uint64_t seed =
            detail::campaign_rng(cfg, "relation1:" + label).next_u64();
        const std::size_t n_pts = std::min<std::size_t>(cfg.points, 16);
        const auto pts1 = boundary_sample(sp, n_pts, 1.0, seed);
        const auto pts2 = boundary_sample(sp, n_pts, 2.0, seed);
        const auto cmp1 = compare_parabolic_vs_inversion(sp, pts1, base, eps);
        const auto cmp2 = compare_parabolic_vs_inversion(sp, pts2, base, eps);
        rep.add(cfg.seed, band_check("relation1", "band_" + label, cmp1.ratios.min_ratio,
                                     cmp1.ratios.max_ratio, 1e6, cmp1.ratios.count));
        const double growth =
            std::max(0.0, cmp2.ratios.band() / cmp1.ratios.band() - 1.0);
        rep.add(cfg.seed, upper_check("relation1", "band_growth_" + label, growth,
                                      cfg.profile_slack, cmp2.ratios.count));
    }
    return rep;
}

// --------------------------------------------------------------------------
// qs-profile: distortion profiles of the closed-form catalog; the profile of
// the shear map is exported as JSON.
// --------------------------------------------------------------------------
inline report run_qs_profile(const campaign_config& cfg) {
    report rep;
    rep.config_hash = config_hash(cfg);
    const spectrum sp = cfg.sp();
    const std::uint64_t seed = detail::campaign_rng(cfg, "qs-profile").next_u64();
    const auto pts = boundary_sample(sp, cfg.points, 1.0, seed);

    {
        const auto fit = quasisimilarity_fit(sp, make_identity_map(pts),
                                             boundary_metric_kind::parabolic);
        rep.add(cfg.seed, upper_check("qs-profile", "identity_k_hat",
                                      std::abs(fit.k_hat - 1.0), 1e-12, fit.pairs));
    }
    {
        const auto fit = quasisimilarity_fit(sp, make_similarity_map(sp, pts, 3.0),
                                             boundary_metric_kind::parabolic);
        rep.add(cfg.seed, upper_check("qs-profile", "similarity_k_hat",
                                      std::abs(fit.k_hat - 1.0), 1e-9, fit.pairs));
        rep.add(cfg.seed, upper_check("qs-profile", "similarity_c_hat",
                                      std::abs(fit.c_hat - 3.0) / 3.0, 1e-9, fit.pairs));
    }
    {
        const double gauge = 4.0;  // (1 + L)^2 at L = 1
        const auto shear = make_shear_map(sp, pts, 1.0);
        const auto fit = quasisimilarity_fit(sp, shear, boundary_metric_kind::parabolic);
        rep.add(cfg.seed, upper_check("qs-profile", "shear_k_hat_bound", fit.k_hat, gauge,
                                      fit.pairs));
        const auto prof = qs_profile(sp, shear, boundary_metric_kind::parabolic, 4000, seed);
        nlohmann::json j;
        j["map"] = "shear_L1";
        j["k_plus"] = prof.k_plus;
        j["k_minus"] = prof.k_minus;
        nlohmann::json bins = nlohmann::json::array();
        for (std::size_t b = 0; b < prof.eta.size(); ++b)
            if (prof.filled[b])
                bins.push_back({{"t_hi", distortion_profile::bin_upper(b)},
                                {"eta", prof.eta[b]}});
        j["eta_bins"] = bins;
        std::ofstream out(detail::out_path(cfg, "qs_profile.json"));
        out << j.dump(2) << "\n";
        rep.add(cfg.seed, upper_check("qs-profile", "shear_triples_used", 0.0, 0.0,
                                      prof.triples_used));
    }
    if (sp.n() >= 2 && sp.block_index(0) != sp.block_index(1)) {
        // Block-mixing rotation at one scale: the profile at ratio 1 jumps to
        // s^{-3/2}, far above any quasisymmetry gauge.
        const double s = 1e-3;
        const std::vector<std::vector<double>> tri{{0.0, 0.0}, {s, 0.0}, {0.0, s * s}};
        const auto prof = qs_profile(sp, make_rotation_map(tri, 1.5707963267948966),
                                     boundary_metric_kind::parabolic, 64, seed);
        rep.add(cfg.seed, lower_check("qs-profile", "rotation_eta_floor", prof.eta_at(1.0),
                                      10.0, prof.triples_used));
    }
    return rep;
}

// --------------------------------------------------------------------------
// foliation: shear and similarity preserve the vertical-leaf partition;
// the block-mixing rotation breaks it.
// --------------------------------------------------------------------------
inline report run_foliation(const campaign_config& cfg) {
    report rep;
    rep.config_hash = config_hash(cfg);
    const spectrum sp = cfg.sp();
    const std::uint64_t seed = detail::campaign_rng(cfg, "foliation").next_u64();
    const auto pts = leaf_structured_sample(sp, 6, 8, 1.0, seed);

    const auto shear = foliation_check(sp, make_shear_map(sp, pts, 1.0));
    rep.add(cfg.seed, upper_check("foliation", "shear_spread", shear.max_spread, 1e-9,
                                  shear.leaves_checked));
    require(shear.preserves, errc::campaign_failed, "shear must preserve leaves");

    const auto sim = foliation_check(sp, make_similarity_map(sp, pts, 3.0));
    rep.add(cfg.seed, upper_check("foliation", "similarity_spread", sim.max_spread, 1e-9,
                                  sim.leaves_checked));
    require(sim.preserves, errc::campaign_failed, "similarity must preserve leaves");

    if (sp.n() >= 2 && sp.block_index(0) != sp.block_index(1)) {
        const auto rot = foliation_check(sp, make_rotation_map(pts, 1.5707963267948966));
        rep.add(cfg.seed, lower_check("foliation", "rotation_spread", rot.max_spread, 1e-6,
                                      rot.leaves_checked,
                                      {std::string("verdict = ") +
                                       (rot.preserves ? "PRESERVES" : "BREAKS")}));
        require(!rot.preserves, errc::campaign_failed, "rotation must break leaves");

        const double s = 1e-3;
        const std::vector<std::vector<double>> tri{{0.0, 0.0}, {s, 0.0}, {0.0, s * s}};
        const auto prof = qs_profile(sp, make_rotation_map(tri, 1.5707963267948966),
                                     boundary_metric_kind::parabolic, 64, seed);
        rep.add(cfg.seed, lower_check("foliation", "rotation_eta_at_1", prof.eta_at(1.0),
                                      10.0, prof.triples_used));
    }
    return rep;
}

// --------------------------------------------------------------------------
// factorize: leaf/fiber decomposition of foliation-preserving maps, and the
// leaf-stretch inequality against the fiber stretch.
// --------------------------------------------------------------------------
inline report run_factorize(const campaign_config& cfg) {
    report rep;
    rep.config_hash = config_hash(cfg);
    const spectrum sp = cfg.sp();
    require(sp.r() >= 2, errc::campaign_failed,
            "factorization campaigns need a second block");
    const std::uint64_t seed = detail::campaign_rng(cfg, "factorize").next_u64();
    const auto pts = leaf_structured_sample(sp, 6, 8, 1.0, seed);

    {
        const auto fact = factorize(sp, make_shear_map(sp, pts, 1.0));
        const auto leaf = fact.leaf_map();
        double worst = 0.0;
        for (std::size_t i = 0; i < leaf.size(); ++i)
            for (std::size_t c = 0; c < leaf.domain[i].size(); ++c)
                worst = std::max(worst,
                                 std::abs(leaf.image[i][c] - leaf.domain[i][c]));
        rep.add(cfg.seed, upper_check("factorize", "shear_leaf_identity", worst, 1e-12,
                                      leaf.size()));
    }
    {
        const double lambda = 3.0;
        const auto fact = factorize(sp, make_similarity_map(sp, pts, lambda));
        const auto leaf = fact.leaf_map();
        double worst = 0.0;
        for (std::size_t i = 0; i < leaf.size(); ++i)
            for (std::size_t c = 0; c < leaf.domain[i].size(); ++c) {
                const std::size_t block = sp.block_index(sp.dim(0) + c);
                const double scale = std::pow(lambda, sp.alpha(block) / sp.alpha_min());
                worst = std::max(worst, std::abs(leaf.image[i][c] -
                                                 scale * leaf.domain[i][c]));
            }
        rep.add(cfg.seed, upper_check("factorize", "similarity_leaf_scale", worst, 1e-9,
                                      leaf.size()));
    }
    {
        // Structured grid: a few leaves, a few fiber points each.
        std::vector<std::vector<double>> grid;
        for (double y : {0.0, -0.25, 0.25, 1.0})
            for (double x : {0.0, 0.5, 1.0, 1.5}) {
                std::vector<double> p(sp.n(), 0.0);
                p[0] = x;
                p[sp.offset(1)] = y;
                grid.push_back(std::move(p));
            }
        const auto l1 = l1_inequality_check(sp, make_shear_map(sp, grid, 0.5), {0.5, 1.0});
        rep.add(cfg.seed, upper_check("factorize", "l1_violations",
                                      static_cast<double>(l1.violations), 0.0, l1.checked));
        rep.add(cfg.seed, upper_check("factorize", "l1_ratio", l1.max_ratio, 1.0 + 1e-9,
                                      l1.checked));
    }
    return rep;
}

// --------------------------------------------------------------------------
// main-bound: measured quasisimilarity constants against the analytic gauge
// and the (eta(1)/eta^{-1}(1))^{2r+2} bound.
// --------------------------------------------------------------------------
inline report run_main_bound(const campaign_config& cfg) {
    report rep;
    rep.config_hash = config_hash(cfg);
    const spectrum sp = cfg.sp();
    require(sp.r() >= 2, errc::campaign_failed, "the shear family needs a second block");
    const std::uint64_t seed = detail::campaign_rng(cfg, "main-bound").next_u64();
    const auto pts = boundary_sample(sp, cfg.points, 1.0, seed);

    for (const double L : {0.5, 1.0, 2.0}) {
        const double gauge = (1.0 + L) * (1.0 + L);
        const auto check = main_bound_check(
            sp, make_shear_map(sp, pts, L), boundary_metric_kind::parabolic,
            [gauge](double t) { return gauge * t; }, 4000, seed);
        std::ostringstream tag;
        tag << "shear_L" << L;
        rep.add(cfg.seed, upper_check("main-bound", tag.str() + "_k_le_gauge", check.k_hat,
                                      gauge, pts.size()));
        rep.add(cfg.seed, upper_check("main-bound", tag.str() + "_gauge_le_bound", gauge,
                                      check.bound, pts.size(),
                                      {detail::witness("bound", check.bound)}));
        require(check.consistent, errc::campaign_failed,
                "measured constant escaped the analytic bound");
    }
    {
        const auto check = main_bound_check(sp, make_similarity_map(sp, pts, 3.0),
                                            boundary_metric_kind::parabolic,
                                            [](double t) { return t; }, 4000, seed);
        rep.add(cfg.seed, upper_check("main-bound", "similarity_k_hat",
                                      std::abs(check.k_hat - 1.0), 1e-9, pts.size()));
        rep.add(cfg.seed, upper_check("main-bound", "similarity_bound_unit",
                                      std::abs(check.bound - 1.0), 1e-9, pts.size()));
    }
    return rep;
}

// --------------------------------------------------------------------------
// height-respect: interior maps with bounded height distortion and their
// boundary traces; the almost-isometry defect must not grow when the sample
// box doubles.
// --------------------------------------------------------------------------
inline report run_height_respect(const campaign_config& cfg) {
    report rep;
    rep.config_hash = config_hash(cfg);
    const spectrum sp = cfg.sp();
    rng gen = detail::campaign_rng(cfg, "height-respect");

    const auto make_domain = [&](double half_width, std::uint64_t s) {
        const auto pts = boundary_sample(sp, std::min<std::size_t>(cfg.points, 12),
                                         half_width, s);
        std::vector<group_point> dom;
        for (const auto& x : pts)
            for (double t : {-0.5, 0.0, 0.75}) dom.push_back({x, t});
        return dom;
    };
    const std::uint64_t s0 = gen.next_u64();

    {
        const group_point g{gen.uniform_vector(sp.n(), -0.5, 0.5), 0.7};
        const auto dom = make_domain(1.0, s0);
        const auto gm = make_group_map(
            dom, [&](const group_point& p) { return left_translate(sp, g, p); });
        std::vector<std::vector<double>> bdom;
        for (const auto& p : dom) bdom.push_back(p.x);
        std::sort(bdom.begin(), bdom.end());
        bdom.erase(std::unique(bdom.begin(), bdom.end()), bdom.end());
        const auto bm = make_map(bdom, [&](const std::vector<double>& x) {
            return apply_translation_boundary(sp, g, x);
        });
        const auto hr = height_respecting_check(sp, gm, bm);
        rep.add(cfg.seed, upper_check("height-respect", "translation_height_defect",
                                      hr.height_defect, std::abs(g.t) + 1e-9, dom.size()));
        rep.add(cfg.seed, upper_check("height-respect", "translation_boundary_k",
                                      hr.boundary_k_hat, 1.0 + 1e-6, bdom.size()));
        rep.add(cfg.seed, upper_check("height-respect", "translation_almost_isometry",
                                      hr.almost_isometry_defect, 2e-2, hr.pairs_checked));
        require(hr.height_respecting && hr.boundary_bilipschitz, errc::campaign_failed,
                "left translation must be height respecting");
    }

    {
        const auto dilate = [&](const group_point& p) {
            group_point out = p;
            out.x[0] *= 2.0;
            return out;
        };
        const auto trace = [&](const std::vector<double>& x) {
            auto y = x;
            y[0] *= 2.0;
            return y;
        };
        const auto run_box = [&](double half_width) {
            const auto dom = make_domain(half_width, s0 + 1);
            const auto gm = make_group_map(dom, dilate);
            std::vector<std::vector<double>> bdom;
            for (const auto& p : dom) bdom.push_back(p.x);
            std::sort(bdom.begin(), bdom.end());
            bdom.erase(std::unique(bdom.begin(), bdom.end()), bdom.end());
            return height_respecting_check(sp, gm, make_map(bdom, trace));
        };
        const auto hr1 = run_box(1.0);
        const auto hr2 = run_box(2.0);
        rep.add(cfg.seed, upper_check("height-respect", "dilation_height_defect",
                                      hr1.height_defect, 1e-12, hr1.pairs_checked));
        rep.add(cfg.seed, upper_check("height-respect", "dilation_boundary_k",
                                      hr1.boundary_k_hat, 2.0 + 1e-9, hr1.pairs_checked));
        rep.add(cfg.seed,
                upper_check("height-respect", "dilation_almost_isometry",
                            hr1.almost_isometry_defect, 2.0, hr1.pairs_checked,
                            {detail::witness("defect", hr1.almost_isometry_defect)}));
        const double growth = std::max(0.0, hr2.almost_isometry_defect -
                                                hr1.almost_isometry_defect);
        rep.add(cfg.seed, upper_check("height-respect", "dilation_defect_box_growth",
                                      growth, 0.5, hr2.pairs_checked,
                                      {detail::witness("doubled-box defect",
                                                       hr2.almost_isometry_defect)}));
    }
    return rep;
}

// --------------------------------------------------------------------------
// modulus: the positive-versus-vanishing dichotomy between the horizontal
// cylinder and the tilted family, with artifacts for external plotting.
// --------------------------------------------------------------------------
inline report run_modulus(const campaign_config& cfg) {
    report rep;
    rep.config_hash = config_hash(cfg);
    const spectrum sp = cfg.sp();
    require(sp.r() >= 2, errc::campaign_failed,
            "the modulus dichotomy needs a second block");
    require(cfg.resolutions.size() >= 3, errc::config_invalid,
            "the modulus campaign needs at least three grid resolutions");

    std::vector<double> p(sp.n(), 0.0), q(sp.n(), 0.0);
    q[0] = 1.0;
    const auto cylinder = build_cylinder_family(sp, p, q, 0.25, 512);
    const auto cyl = modulus_refinement_study(sp, cylinder, cfg.resolutions);
    const std::size_t mid = cfg.resolutions.size() / 2;
    rep.add(cfg.seed, upper_check("modulus", "cylinder_anchor",
                                  std::abs(cyl.steps[mid].modulus - 0.5), 0.05,
                                  cylinder.curves.size(),
                                  {detail::witness("modulus", cyl.steps[mid].modulus)}));
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& s : cyl.steps) {
        lo = std::min(lo, s.modulus);
        hi = std::max(hi, s.modulus);
    }
    rep.add(cfg.seed, band_check("modulus", "cylinder_stable", lo, hi, 1.1,
                                 cyl.steps.size()));
    double worst_violation = 0.0;
    for (const auto& s : cyl.steps) worst_violation = std::max(worst_violation, s.max_violation);

    curve_family diagonal;
    for (std::size_t k = 0; k < 512; ++k) {
        const double c = -0.25 + 0.5 * (static_cast<double>(k) + 0.5) / 512.0;
        std::vector<double> a(sp.n(), 0.0), b(sp.n(), 0.0);
        a[sp.offset(1)] = c;
        b[0] = 1.0;
        b[sp.offset(1)] = c + 1.0;
        diagonal.curves.push_back({std::move(a), std::move(b)});
    }
    const auto diag = modulus_refinement_study(sp, diagonal, cfg.resolutions);
    double worst_ratio = 0.0;  // consecutive modulus ratio; < 1 means decreasing
    for (std::size_t k = 0; k + 1 < diag.steps.size(); ++k)
        worst_ratio = std::max(worst_ratio, diag.steps[k + 1].modulus / diag.steps[k].modulus);
    rep.add(cfg.seed, upper_check("modulus", "diagonal_decreasing", worst_ratio,
                                  1.0 - 1e-9, diag.steps.size()));
    rep.add(cfg.seed, lower_check("modulus", "diagonal_total_drop",
                                  diag.steps.front().modulus / diag.steps.back().modulus, 2.0,
                                  diag.steps.size()));
    rep.add(cfg.seed, upper_check("modulus", "diagonal_final", diag.final_modulus, 0.05,
                                  diagonal.curves.size()));
    for (const auto& s : diag.steps) worst_violation = std::max(worst_violation, s.max_violation);
    rep.add(cfg.seed, upper_check("modulus", "constraint_violation", worst_violation, 1e-8,
                                  cyl.steps.size() + diag.steps.size()));

    // Artifacts: the families, the mid-resolution density, and the studies.
    save_family_csv(detail::out_path(cfg, "modulus_cylinder_family.csv").string(), cylinder);
    save_family_csv(detail::out_path(cfg, "modulus_diagonal_family.csv").string(), diagonal);
    const auto full = discrete_modulus_full(sp, cylinder, cfg.resolutions[mid]);
    save_density_csv(detail::out_path(cfg, "modulus_density.csv").string(), full.density);
    nlohmann::json j;
    for (const auto* study : {&cyl, &diag}) {
        nlohmann::json steps = nlohmann::json::array();
        for (const auto& s : study->steps)
            steps.push_back({{"resolution", s.resolution},
                             {"modulus", s.modulus},
                             {"iterations", s.iterations},
                             {"max_constraint_violation", s.max_violation}});
        j[study == &cyl ? "cylinder" : "diagonal"] = steps;
    }
    std::ofstream out(detail::out_path(cfg, "modulus_study.json"));
    out << j.dump(2) << "\n";
    return rep;
}

// --------------------------------------------------------------------------
// Dispatch
// --------------------------------------------------------------------------

inline const std::vector<std::string>& campaign_names() {
    static const std::vector<std::string> names = {
        "verify-norms", "distance",  "geodesic",  "busemann",       "quasicenter",
        "g3",           "visual",    "parabolic", "invert",         "sphericalize",
        "relation1",    "qs-profile", "foliation", "factorize",      "main-bound",
        "height-respect", "modulus",
    };
    return names;
}

inline report run_campaign(const std::string& name, const campaign_config& cfg) {
    validate_config(cfg);
    const auto dispatch = [&]() -> report {
        if (name == "verify-norms") return run_verify_norms(cfg);
        if (name == "distance") return run_distance(cfg);
        if (name == "geodesic") return run_geodesic(cfg);
        if (name == "busemann") return run_busemann(cfg);
        if (name == "quasicenter") return run_quasicenter(cfg);
        if (name == "g3") return run_g3(cfg);
        if (name == "visual") return run_visual(cfg);
        if (name == "parabolic") return run_parabolic(cfg);
        if (name == "invert") return run_invert(cfg);
        if (name == "sphericalize") return run_sphericalize(cfg);
        if (name == "relation1") return run_relation1(cfg);
        if (name == "qs-profile") return run_qs_profile(cfg);
        if (name == "foliation") return run_foliation(cfg);
        if (name == "factorize") return run_factorize(cfg);
        if (name == "main-bound") return run_main_bound(cfg);
        if (name == "height-respect") return run_height_respect(cfg);
        if (name == "modulus") return run_modulus(cfg);
        if (name == "all") {
            // Concatenate each campaign's checks under its shard seed; the
            // seed-idempotent merge is for identical shards, not for this.
            report merged;
            merged.config_hash = config_hash(cfg);
            for (const auto& sub : campaign_names()) {
                const report part = run_campaign(sub, cfg);
                for (const auto& [seed, recs] : part.shards) {
                    auto& dest = merged.shards[seed];
                    dest.insert(dest.end(), recs.begin(), recs.end());
                }
            }
            return merged;
        }
        fail(errc::config_invalid, "unknown campaign '" + name + "'");
    };
    try {
        return dispatch();
    } catch (const error& e) {
        if (e.code() == errc::config_invalid || e.code() == errc::config_hash_mismatch ||
            e.code() == errc::campaign_failed)
            throw;
        fail(errc::campaign_failed,
             "campaign '" + name + "' aborted: " + std::string(e.what()));
    } catch (const std::exception& e) {
        fail(errc::campaign_failed,
             "campaign '" + name + "' aborted: " + std::string(e.what()));
    }
}

// Split a campaign into `jobs` shards with disjoint seeds and divided
// counts, then merge.  The scientific hash ignores seed and counts, so the
// shards merge legally; with one job this is exactly run_campaign.
inline report run_campaign_sharded(const std::string& name, const campaign_config& cfg,
                                   std::size_t jobs) {
    require(jobs >= 1, errc::config_invalid, "jobs must be >= 1");
    if (jobs == 1) return run_campaign(name, cfg);
    report merged;
    merged.config_hash = config_hash(cfg);
    for (std::size_t j = 0; j < jobs; ++j) {
        campaign_config shard = cfg;
        shard.seed = cfg.seed + 1000003ULL * j;
        shard.pairs = std::max<std::size_t>(1, (cfg.pairs + jobs - 1) / jobs);
        shard.triples = std::max<std::size_t>(1, (cfg.triples + jobs - 1) / jobs);
        shard.quadruples = std::max<std::size_t>(1, (cfg.quadruples + jobs - 1) / jobs);
        merged = report_merge(merged, run_campaign(name, shard));
    }
    return merged;
}

// Run, write <out>/<name>.report.jsonl and <out>/<name>.summary.txt, and
// return the report; the exit status for a CLI wrapper is 0 iff all passed.
inline report run_and_write(const std::string& name, const campaign_config& cfg,
                            std::size_t jobs = 1) {
    const report rep = run_campaign_sharded(name, cfg, jobs);
    write_report(rep, cfg.out_dir, name);
    return rep;
}

}  // namespace solvgeo
