#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <vector>

#include "solvgeo/rng.hpp"
#include "solvgeo/visual.hpp"

using namespace solvgeo;

namespace {

// Exact Gromov product of two boundary points of the alpha half-plane seen
// from (0, 0): e^{-alpha (xi|eta)} = alpha|xi-eta| / sqrt((1+alpha^2 xi^2)(1+alpha^2 eta^2)).
double chordal_product(double alpha, double xi, double eta) {
    const double num = alpha * std::abs(xi - eta);
    const double den = std::sqrt((1.0 + alpha * alpha * xi * xi) * (1.0 + alpha * alpha * eta * eta));
    return -std::log(num / den) / alpha;
}

// Exact product against the upward direction: e^{-alpha (xi|xi0)} = (1+alpha^2 xi^2)^{-1/2}.
double chordal_product_xi0(double alpha, double xi) {
    return 0.5 * std::log1p(alpha * alpha * xi * xi) / alpha;
}

std::vector<std::vector<double>> square_sample(rng& gen, std::size_t n, double half_width) {
    std::vector<std::vector<double>> pts;
    for (std::size_t i = 0; i < n; ++i)
        pts.push_back({gen.uniform(-half_width, half_width), gen.uniform(-half_width, half_width)});
    return pts;
}

}  // namespace

TEST_CASE("visual exponent defaults") {
    const double root2 = std::log(1.0 + std::sqrt(2.0));
    CHECK(delta_hat(spectrum_s2()) == Catch::Approx(root2).margin(1e-15));
    CHECK(delta_hat(spectrum_h(0.5)) == Catch::Approx(2.0 * root2).margin(1e-15));
    CHECK(epsilon0_default(spectrum_s2()) ==
          Catch::Approx(1.0 / (4.0 * root2 + 1.0)).margin(1e-15));
    // Large smallest exponent: the hyperbolicity term is binding.
    CHECK(epsilon0_default(spectrum_h(4.0)) ==
          Catch::Approx(1.0 / (root2 + 1.0)).margin(1e-15));
    CHECK(epsilon1_default(spectrum_s2()) == 1.0);
}

TEST_CASE("gromov product along the shared vertical is exactly zero") {
    // When xi sits on the base's own vertical line, all probe points and the
    // upward ray lie on one geodesic; every distance is exact and the product
    // vanishes identically.
    const group_point base_h{{0.4}, 0.9};
    CHECK(gromov_product_xi0(spectrum_h(), base_h.x, base_h).value ==
          Catch::Approx(0.0).margin(1e-12));
    const group_point base_s2{{0.5, -0.3}, 0.7};
    CHECK(gromov_product_xi0(spectrum_s2(), base_s2.x, base_s2).value ==
          Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("gromov products match the half-plane chordal form") {
    const group_point base{{0.0}, 0.0};
    const std::array<std::pair<double, double>, 4> pairs{
        {{0.0, 1.0}, {-0.7, 0.4}, {2.0, 3.0}, {0.2, 0.25}}};
    for (double alpha : {0.5, 1.0, 2.0}) {
        const auto sp = spectrum_h(alpha);
        for (const auto& [xi, eta] : pairs) {
            const auto g = gromov_product(sp, {xi}, {eta}, base);
            const double expected = chordal_product(alpha, xi, eta);
            INFO("alpha=" << alpha << " xi=" << xi << " eta=" << eta << " spread=" << g.spread);
            CHECK(g.value == Catch::Approx(expected).margin(8e-3));
            // The formula is symmetric in its two boundary arguments.
            const auto swapped = gromov_product(sp, {eta}, {xi}, base);
            CHECK(swapped.value == Catch::Approx(g.value).margin(1e-12));
        }
        for (double xi : {1.0, -2.0}) {
            const auto g = gromov_product_xi0(sp, {xi}, base);
            CHECK(g.value == Catch::Approx(chordal_product_xi0(alpha, xi)).margin(8e-3));
        }
    }
}

TEST_CASE("visual quasimetric basics") {
    const auto sp = spectrum_h();
    const group_point base{{0.0}, 0.0};
    SECTION("equal points give zero") {
        CHECK(visual_quasimetric(sp, base, 0.5, {1.25}, {1.25}) == 0.0);
    }
    SECTION("doubling the exponent squares the value") {
        const double v1 = visual_quasimetric(sp, base, 0.3, {0.0}, {1.0});
        const double v2 = visual_quasimetric(sp, base, 0.6, {0.0}, {1.0});
        CHECK(v2 == Catch::Approx(v1 * v1).epsilon(1e-12));
    }
    SECTION("half-plane value matches the chordal form") {
        const double eps = 0.5;
        const double v = visual_quasimetric(sp, base, eps, {0.0}, {1.0});
        CHECK(v == Catch::Approx(std::exp(-eps * chordal_product(1.0, 0.0, 1.0))).epsilon(5e-3));
    }
    SECTION("epsilon must be positive") {
        CHECK_THROWS_AS(visual_quasimetric(sp, base, 0.0, {0.0}, {1.0}), error);
    }
}

TEST_CASE("parabolic quasimetric on the half-plane") {
    SECTION("frozen unit-separation value") {
        // Connecting geodesic 0 <-> 1 is the unit semicircle: apex height
        // ln(1/2), so at epsilon = 1 the value is exactly 1/2.
        const auto res = parabolic_quasimetric(spectrum_h(), {{0.0}, 0.0}, 1.0, {0.0}, {1.0});
        CHECK(res.t_top == Catch::Approx(std::log(0.5)).margin(0.012));
        CHECK(res.value == Catch::Approx(0.5).margin(0.01));
    }
    SECTION("equal points give zero") {
        CHECK(parabolic_quasimetric(spectrum_h(), {{0.0}, 0.0}, 1.0, {0.7}, {0.7}).value == 0.0);
    }
    SECTION("similarity scaling law") {
        // Apex height of the alpha half-plane semicircle over a gap w is
        // ln(alpha w / 2)/alpha, so scaling the gap by lambda multiplies the
        // value at exponent eps by lambda^{eps/alpha}.
        for (double alpha : {0.5, 1.0, 2.0}) {
            const auto sp = spectrum_h(alpha);
            const group_point base{{0.0}, 0.0};
            const double eps = alpha;  // the natural exponent of the group
            const double lambda = 3.0;
            const double v1 = parabolic_quasimetric(sp, base, eps, {0.0}, {1.0}).value;
            const double v3 = parabolic_quasimetric(sp, base, eps, {0.0}, {lambda}).value;
            INFO("alpha=" << alpha);
            CHECK(v3 / v1 == Catch::Approx(std::pow(lambda, eps / alpha)).epsilon(0.01));
            // And against the closed form directly.
            CHECK(v1 == Catch::Approx(std::pow(alpha / 2.0, eps / alpha)).epsilon(0.015));
        }
    }
    SECTION("base height only rescales") {
        const auto sp = spectrum_h();
        const double lo = parabolic_quasimetric(sp, {{0.0}, 0.0}, 0.4, {0.0}, {1.0}).value;
        const double hi = parabolic_quasimetric(sp, {{5.0}, 2.0}, 0.4, {0.0}, {1.0}).value;
        CHECK(hi == Catch::Approx(lo * std::exp(-0.4 * 2.0)).epsilon(1e-12));
    }
}

TEST_CASE("parabolic tables and the chain sandwich") {
    rng gen(31);
    const auto sp = spectrum_s2();
    const group_point base{{0.0, 0.0}, 0.0};
    const double eps = epsilon0_default(sp);
    const auto pts = square_sample(gen, 8, 2.0);
    const auto quasi = parabolic_table(sp, pts, base, eps);
    const auto metric = chain_metrize(quasi);
    REQUIRE(metric.size() == 8);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = i + 1; j < 8; ++j) {
            const double rho = quasi.at(i, j);
            const double d = metric.at(i, j);
            INFO("pair " << i << "," << j);
            CHECK(d <= rho * (1.0 + 1e-9));
            CHECK(d >= 0.5 * rho * (1.0 - 1e-9));
        }
    SECTION("degenerate samples are rejected") {
        CHECK_THROWS_AS(parabolic_table(sp, {{0.0, 0.0}, {0.0, 0.0}}, base, eps), error);
        CHECK_THROWS_AS(parabolic_table(sp, {{0.0, 0.0}}, base, eps), error);
    }
}

TEST_CASE("visual tables share probes with the pointwise construction") {
    const auto sp = spectrum_h();
    const group_point base{{0.0}, 0.0};
    const double eps = 0.5;
    const std::vector<std::vector<double>> pts{{-1.0}, {0.3}, {1.4}};
    const auto table = visual_table(sp, pts, base, eps, true);
    REQUIRE(table.size() == 4);
    CHECK(table.labels().back() == "xi0");
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = i + 1; j < 3; ++j)
            CHECK(table.at(i, j) ==
                  Catch::Approx(visual_quasimetric(sp, base, eps, pts[i], pts[j])).epsilon(1e-14));
    // The synthetic column against the exact closed form.
    for (std::size_t i = 0; i < 3; ++i) {
        const double expected = std::exp(-eps * chordal_product_xi0(1.0, pts[i][0]));
        CHECK(table.at(i, 3) == Catch::Approx(expected).epsilon(5e-3));
    }
}

TEST_CASE("parabolic metric versus inverted visual metric") {
    const auto sp = spectrum_h();
    const group_point base{{0.0}, 0.0};
    const double eps = epsilon0_default(sp);
    const std::vector<std::vector<double>> pts{{-1.5}, {-0.6}, {0.1}, {0.8}, {1.3}, {2.0}};
    const auto res = compare_parabolic_vs_inversion(sp, pts, base, eps);
    CHECK(res.ratios.count == 15);
    CHECK(res.ratios.min_ratio > 0.0);
    CHECK(std::isfinite(res.ratios.max_ratio));
    // Bilipschitz in theory; the observed band on a small sample stays modest.
    CHECK(res.ratios.band() <= 60.0);
    CHECK(res.parabolic_metric.size() == 6);
    CHECK(res.inverted_visual.size() == 6);
    CHECK(res.parabolic_metric.labels() == res.inverted_visual.labels());
    SECTION("the exponent cap is enforced") {
        CHECK_THROWS_AS(compare_parabolic_vs_inversion(sp, pts, base, 0.9), error);
        try {
            compare_parabolic_vs_inversion(sp, pts, base, 0.9);
        } catch (const error& e) {
            CHECK(e.code() == errc::config_invalid);
        }
    }
}

TEST_CASE("parabolic quasimetric versus the boundary quasimetric D") {
    SECTION("half-plane ratio is the constant alpha/2") {
        for (double alpha : {0.5, 1.0}) {
            const auto sp = spectrum_h(alpha);
            const std::vector<std::vector<double>> pts{{-1.2}, {-0.3}, {0.4}, {1.0}, {1.9}};
            const auto res = compare_parabolic_vs_D(sp, pts, {{0.0}, 0.0});
            INFO("alpha=" << alpha);
            CHECK(res.ratios.min_ratio == Catch::Approx(alpha / 2.0).epsilon(0.02));
            CHECK(res.ratios.max_ratio == Catch::Approx(alpha / 2.0).epsilon(0.02));
            CHECK(res.ratios.band() <= 1.05);
        }
    }
    SECTION("two-exponent sample has a bounded band") {
        rng gen(57);
        const auto sp = spectrum_s2();
        const auto pts = square_sample(gen, 6, 1.5);
        const auto res = compare_parabolic_vs_D(sp, pts, {{0.0, 0.0}, 0.0});
        CHECK(res.ratios.count == 15);
        CHECK(res.ratios.min_ratio > 0.0);
        CHECK(res.ratios.band() <= 40.0);
    }
    SECTION("base height shifts both sides of every pair equally") {
        const auto sp = spectrum_h();
        const std::vector<std::vector<double>> pts{{-1.0}, {0.2}, {0.9}};
        const auto lo = compare_parabolic_vs_D(sp, pts, {{0.0}, 0.0});
        const auto hi = compare_parabolic_vs_D(sp, pts, {{0.0}, 1.2});
        CHECK(hi.ratios.band() == Catch::Approx(lo.ratios.band()).epsilon(1e-12));
        CHECK(hi.ratios.max_ratio ==
              Catch::Approx(lo.ratios.max_ratio * std::exp(-1.0 * 1.2)).epsilon(1e-12));
    }
}

TEST_CASE("base point change rescales the parabolic metric by one factor") {
    const auto sp = spectrum_h();
    const double eps = 0.25;
    const std::vector<std::vector<double>> pts{{-0.8}, {0.0}, {0.7}, {1.6}};
    const auto m1 = chain_metrize(parabolic_table(sp, pts, {{0.0}, 0.0}, eps));
    const auto m2 = chain_metrize(parabolic_table(sp, pts, {{0.7}, 1.5}, eps));
    const auto rep = pairwise_ratio(m1, m2);
    // The height functional is base-independent, so the two metrics differ by
    // exactly e^{eps (t2 - t1)} on every pair: the band collapses to 1.
    CHECK(rep.band() == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(rep.max_ratio == Catch::Approx(std::exp(eps * 1.5)).epsilon(1e-12));
}

TEST_CASE("snowflake identity between two parabolic exponents") {
    rng gen(83);
    const auto sp = spectrum_s2();
    const group_point base{{0.0, 0.0}, 0.0};
    const double eps1 = 0.1, eps2 = 0.2;  // both below epsilon0 for this group
    REQUIRE(eps2 <= epsilon0_default(sp));
    const auto pts = square_sample(gen, 6, 1.5);
    const auto d1 = chain_metrize(parabolic_table(sp, pts, base, eps1));
    const auto d2 = chain_metrize(parabolic_table(sp, pts, base, eps2));
    std::vector<std::array<std::size_t, 3>> triples;
    for (std::size_t x = 0; x < 6; ++x)
        for (std::size_t y = 0; y < 6; ++y)
            for (std::size_t z = 0; z < 6; ++z)
                if (x != y && x != z && y != z) triples.push_back({x, y, z});
    const auto prof = triple_distortion(d1, d2, triples);
    const double growth = eps2 / eps1;
    // Both chain metrics sit inside [1/2, 1] x their quasimetrics and the
    // quasimetrics obey an exact power law, so the distortion of the identity
    // is controlled by 2^{1 + eps2/eps1} t^{eps2/eps1}.
    CHECK(prof.eta_constant(growth) <= std::pow(2.0, 1.0 + growth) * (1.0 + 1e-9));
}

TEST_CASE("metric inversion is 16t quasimobius on samples") {
    rng gen(91);
    const auto sp = spectrum_s2();
    const group_point base{{0.0, 0.0}, 0.0};
    const auto metric = chain_metrize(parabolic_table(sp, square_sample(gen, 8, 2.0), base,
                                                      epsilon0_default(sp)));
    const auto inverted = invert_metric(metric, 0);
    const auto rest = remove_point(metric, 0);
    REQUIRE(rest.labels() == inverted.labels());
    std::vector<std::array<std::size_t, 4>> quads;
    for (int k = 0; k < 400; ++k)
        quads.push_back({static_cast<std::size_t>(gen.uniform(0.0, 7.0)),
                         static_cast<std::size_t>(gen.uniform(0.0, 7.0)),
                         static_cast<std::size_t>(gen.uniform(0.0, 7.0)),
                         static_cast<std::size_t>(gen.uniform(0.0, 7.0))});
    const auto prof = crossratio_distortion(rest, inverted, quads);
    CHECK(prof.used >= 100);
    CHECK(prof.max_out_over_in <= 16.0 * (1.0 + 1e-9));
}
