#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "solvgeo/boundary_metrics.hpp"
#include "solvgeo/errors.hpp"
#include "solvgeo/modulus.hpp"
#include "solvgeo/spectrum.hpp"

using namespace solvgeo;

namespace {

errc thrown_code(const std::function<void()>& f) {
    try {
        f();
    } catch (const error& e) {
        return e.code();
    }
    return errc::campaign_failed;  // sentinel: nothing was thrown
}

// Closed form for a single-constraint problem: with one curve of per-cell
// lengths l_c and cell measures mu_c, the minimum of sum rho^Q mu subject to
// sum rho l >= 1 is S^{1-Q} with S = sum l^{Q/(Q-1)} mu^{-1/(Q-1)}.
double one_curve_modulus(const std::vector<double>& lengths, double mu, double Q) {
    double S = 0.0;
    for (double l : lengths) S += std::pow(l, Q / (Q - 1.0)) * std::pow(mu, -1.0 / (Q - 1.0));
    return std::pow(S, 1.0 - Q);
}

curve_family segment_family(std::vector<std::vector<double>> a,
                            std::vector<std::vector<double>> b) {
    curve_family fam;
    for (std::size_t i = 0; i < a.size(); ++i) fam.curves.push_back({a[i], b[i]});
    return fam;
}

modulus_options pinned_box(std::vector<double> lo, std::vector<double> hi) {
    modulus_options opts;
    opts.box_lo = std::move(lo);
    opts.box_hi = std::move(hi);
    return opts;
}

}  // namespace

TEST_CASE("hand-checked grids pin the solver exactly", "[modulus]") {
    const spectrum sp = spectrum_s2();

    SECTION("one cell, horizontal unit segment") {
        auto fam = segment_family({{0.0, 0.2}}, {{1.0, 0.2}});
        const auto res =
            discrete_modulus_full(sp, fam, 1, 3.0, pinned_box({0.0, 0.0}, {1.0, 1.0}));
        // Single cell with mu = 1, length 1: S = 1, modulus = 1.
        CHECK(res.value == Catch::Approx(1.0).epsilon(1e-9));
        CHECK(res.max_violation <= 1e-8);
        CHECK(res.curve_lengths.size() == 1);
        CHECK(res.curve_lengths[0] == Catch::Approx(1.0).margin(1e-15));
        CHECK(res.density.touched.size() == 1);
        CHECK(res.density.mu[0] == Catch::Approx(1.0).margin(1e-15));
    }

    SECTION("two half-cells in one row give exactly one half") {
        auto fam = segment_family({{0.0, 0.0}}, {{1.0, 0.0}});
        const auto res =
            discrete_modulus_full(sp, fam, 2, 3.0, pinned_box({0.0, -0.5}, {1.0, 0.5}));
        // Two pieces of length 1/2, mu = 1/4: S = 2 (1/2)^{3/2} 2 = sqrt 2,
        // modulus = S^{-2} = 1/2.
        CHECK(res.value == Catch::Approx(0.5).epsilon(1e-9));
        CHECK(res.density.touched.size() == 2);
        CHECK(res.max_violation <= 1e-8);
        // The optimal density is uniform over equal pieces.
        CHECK(res.density.rho[0] == Catch::Approx(res.density.rho[1]).epsilon(1e-9));
    }

    SECTION("diagonal through a 2x2 grid uses snowflaked increments") {
        auto fam = segment_family({{0.0, 0.0}}, {{1.0, 1.0}});
        const auto res =
            discrete_modulus_full(sp, fam, 2, 3.0, pinned_box({0.0, 0.0}, {1.0, 1.0}));
        // Each half contributes max(1/2, sqrt(1/2)) = 2^{-1/2}; the closed
        // form collapses to 2^{-5/2}.
        CHECK(res.value == Catch::Approx(std::pow(2.0, -2.5)).epsilon(1e-9));
        const double w = std::sqrt(0.5);
        CHECK(res.curve_lengths[0] == Catch::Approx(2.0 * w).epsilon(1e-12));
    }

    SECTION("unequal pieces produce the KKT-weighted density") {
        auto fam = segment_family({{0.0, 0.2}}, {{1.0, 0.2}});
        const auto res =
            discrete_modulus_full(sp, fam, 2, 3.0, pinned_box({-0.2, 0.0}, {1.0, 1.0}));
        // Cells split the segment at x = 0.4 into lengths 0.4 and 0.6.
        const double mu = 0.6 * 0.5;
        const double expected = one_curve_modulus({0.4, 0.6}, mu, 3.0);
        CHECK(res.value == Catch::Approx(expected).epsilon(1e-9));
        // Stationarity: rho proportional to length^{1/(Q-1)}.
        REQUIRE(res.density.rho.size() == 2);
        const double ratio = std::max(res.density.rho[0], res.density.rho[1]) /
                             std::min(res.density.rho[0], res.density.rho[1]);
        CHECK(ratio == Catch::Approx(std::sqrt(0.6 / 0.4)).epsilon(1e-6));
    }
}

TEST_CASE("solver value matches the closed form recomputed from grid geometry",
          "[modulus]") {
    const spectrum sp = spectrum_s2();
    auto fam = segment_family({{0.0, 0.0}}, {{1.0, 0.0}});
    const auto res = discrete_modulus_full(sp, fam, 16, 3.0);

    // Recompute the one-constraint closed form independently: walk the
    // x-axis cell boundaries reported by the density and accumulate piece
    // lengths of the segment [0,1] x {0}.
    const double lox = res.density.lo[0];
    const double dx = res.density.side[0];
    const double mu = res.density.side[0] * res.density.side[1];
    std::vector<double> pieces;
    for (std::size_t i = 0; i < 16; ++i) {
        const double a = std::max(0.0, lox + static_cast<double>(i) * dx);
        const double b = std::min(1.0, lox + static_cast<double>(i + 1) * dx);
        if (b > a) pieces.push_back(b - a);
    }
    double total = 0.0;
    for (double p : pieces) total += p;
    REQUIRE(total == Catch::Approx(1.0).margin(1e-12));
    const double expected = one_curve_modulus(pieces, mu, 3.0);
    CHECK(res.value == Catch::Approx(expected).epsilon(1e-8));
    CHECK(res.max_violation <= 1e-8);
    // The homogeneous dimension is the default exponent.
    CHECK(res.density.exponent == Catch::Approx(sp.homogeneous_dimension()).margin(0.0));
    CHECK(sp.homogeneous_dimension() == Catch::Approx(3.0).margin(0.0));
}

TEST_CASE("cylinder families of horizontal segments", "[modulus]") {
    const spectrum sp = spectrum_s2();
    const std::vector<double> p{0.0, 0.0}, q{1.0, 0.0};

    SECTION("count one degenerates to the axis segment") {
        const auto fam = build_cylinder_family(sp, p, q, 0.25, 1);
        REQUIRE(fam.curves.size() == 1);
        CHECK(fam.horizontal);
        CHECK(fam.curves[0][0] == p);
        CHECK(fam.curves[0][1] == q);
        CHECK(fam.lengths[0] == Catch::Approx(1.0).margin(1e-15));
    }

    SECTION("stratified offsets fill the diameter") {
        const auto fam = build_cylinder_family(sp, p, q, 0.25, 64);
        REQUIRE(fam.curves.size() == 64);
        CHECK(fam.horizontal);
        std::set<double> offsets;
        for (const auto& c : fam.curves) {
            CHECK(c[0][0] == 0.0);
            CHECK(c[1][0] == 1.0);
            CHECK(c[0][1] == c[1][1]);  // same leaf per translate
            CHECK(std::abs(c[0][1]) < 0.25);
            offsets.insert(c[0][1]);
        }
        CHECK(offsets.size() == 64);  // distinct translates
        // Each curve is a horizontal segment, so its D-length equals the
        // Euclidean length at every refinement.
        for (const auto& c : fam.curves) {
            CHECK(d_length(sp, c, 4) == Catch::Approx(1.0).margin(1e-9));
            CHECK(d_length(sp, c, 16) == Catch::Approx(1.0).margin(1e-9));
        }
    }

    SECTION("multidimensional cross sections stay in the ball") {
        const spectrum sp3 = build_spectrum({{2, 1.0}, {1, 2.0}});
        const std::vector<double> a{0.0, 0.0, 0.0}, b{1.0, 0.0, 0.0};
        const auto fam = build_cylinder_family(sp3, a, b, 0.3, 40);
        REQUIRE(fam.curves.size() == 40);
        for (const auto& c : fam.curves) {
            const double off1 = c[0][1], off2 = c[0][2];
            CHECK(off1 * off1 + off2 * off2 <= 0.3 * 0.3 + 1e-15);
            CHECK(c[0][0] == 0.0);  // offsets orthogonal to the axis
            CHECK(c[1][1] == off1);
            CHECK(c[1][2] == off2);
        }
    }

    SECTION("argument validation") {
        CHECK(thrown_code([&] { build_cylinder_family(sp, p, {1.0, 0.5}, 0.25, 4); }) ==
              errc::not_same_leaf);
        CHECK(thrown_code([&] { build_cylinder_family(sp, p, q, 0.0, 4); }) ==
              errc::non_positive_radius);
        CHECK(thrown_code([&] { build_cylinder_family(sp, p, q, -1.0, 4); }) ==
              errc::non_positive_radius);
        CHECK(thrown_code([&] { build_cylinder_family(sp, p, q, 0.25, 0); }) ==
              errc::invalid_argument);
        CHECK(thrown_code([&] { build_cylinder_family(sp, p, p, 0.25, 4); }) ==
              errc::invalid_argument);
    }
}

TEST_CASE("horizontal cylinders carry positive modulus h ell^{1-Q}", "[modulus]") {
    const spectrum sp = spectrum_s2();
    const auto fam = build_cylinder_family(sp, {0.0, 0.0}, {1.0, 0.0}, 0.25, 256);
    // Continuum value for height h = 0.5, length 1, Q = 3: h * 1^{-2} = 0.5.
    const auto r64 = discrete_modulus_full(sp, fam, 64);
    const auto r128 = discrete_modulus_full(sp, fam, 128);
    CHECK(std::abs(r64.value - 0.5) <= 0.05);
    CHECK(std::abs(r128.value - 0.5) <= 0.05);
    CHECK(std::abs(r64.value - r128.value) <= 0.025);
    CHECK(r64.max_violation <= 1e-8);
    CHECK(r128.max_violation <= 1e-8);
    // Traversal bookkeeping agrees with the polyline D-length.
    for (std::size_t k = 0; k < fam.curves.size(); k += 37)
        CHECK(r64.curve_lengths[k] ==
              Catch::Approx(d_length(sp, fam.curves[k], 8)).margin(1e-9));
}

TEST_CASE("tilted families lose modulus under refinement", "[modulus]") {
    const spectrum sp = spectrum_s2();
    curve_family fam;
    for (std::size_t k = 0; k < 64; ++k) {
        const double c = -0.25 + 0.5 * (static_cast<double>(k) + 0.5) / 64.0;
        fam.curves.push_back({{0.0, c}, {1.0, c + 1.0}});
    }
    const auto rep = modulus_refinement_study(sp, fam, {16, 32, 64});
    REQUIRE(rep.steps.size() == 3);
    CHECK(rep.decreasing);
    CHECK(rep.steps[2].modulus < 0.5 * rep.steps[0].modulus);
    CHECK(rep.final_modulus <= 0.05);
    for (const auto& s : rep.steps) {
        CHECK(s.max_violation <= 1e-8);
        CHECK(s.iterations >= 1);
        // Tilted curves pick up length from the square-root gauge of the
        // second block, so they are much longer than the horizontal spans.
        CHECK(s.max_curve_length > 2.0);
    }
    // The per-curve length grows like sqrt of the resolution.
    CHECK(rep.steps[2].max_curve_length > 1.5 * rep.steps[0].max_curve_length);
}

TEST_CASE("horizontal refinement studies stabilize", "[modulus]") {
    const spectrum sp = spectrum_s2();
    const auto fam = build_cylinder_family(sp, {0.0, 0.0}, {1.0, 0.0}, 0.25, 256);
    const auto rep = modulus_refinement_study(sp, fam, {32, 64, 128});
    CHECK(rep.stabilizes);
    CHECK(rep.final_modulus > 0.4);
    CHECK(rep.final_modulus < 0.6);
    CHECK(thrown_code([&] { modulus_refinement_study(sp, fam, {16, 32}); }) ==
          errc::invalid_argument);
}

TEST_CASE("modulus is monotone in the family and blind to empty cells",
          "[modulus]") {
    const spectrum sp = spectrum_s2();
    const auto full = build_cylinder_family(sp, {0.0, 0.0}, {1.0, 0.0}, 0.25, 64);
    curve_family sub;
    for (std::size_t k = 0; k < 32; ++k) sub.curves.push_back(full.curves[k]);
    sub.horizontal = true;

    const auto box = pinned_box({-0.1, -0.3}, {1.1, 0.3});
    const double m_full = discrete_modulus(sp, full, 48, 3.0, box);
    const double m_sub = discrete_modulus(sp, sub, 48, 3.0, box);
    // Fewer curves to block means a smaller modulus.
    CHECK(m_sub <= m_full * (1.0 + 1e-6));
    CHECK(m_sub > 0.0);

    // Enlarging the box at fixed cell size only adds untouched cells: the
    // enlarged box shares cell boundaries with the small one, so the value
    // is unchanged.
    const auto big = pinned_box({-0.1 - 0.6, -0.3 - 0.3}, {1.1 + 0.6, 0.3 + 0.3});
    const double m_big = discrete_modulus(sp, full, 96, 3.0, big);
    CHECK(m_big == Catch::Approx(m_full).epsilon(1e-9));
}

TEST_CASE("modulus input validation", "[modulus]") {
    const spectrum sp = spectrum_s2();
    const auto fam = build_cylinder_family(sp, {0.0, 0.0}, {1.0, 0.0}, 0.25, 4);

    SECTION("families") {
        CHECK(thrown_code([&] { discrete_modulus(sp, curve_family{}, 8); }) ==
              errc::empty_family);
        curve_family lonely;
        lonely.curves.push_back({{0.0, 0.0}});
        CHECK(thrown_code([&] { discrete_modulus(sp, lonely, 8); }) ==
              errc::too_few_vertices);
        curve_family bad;
        bad.curves.push_back({{0.0, 0.0}, {std::nan(""), 0.0}});
        CHECK(thrown_code([&] { discrete_modulus(sp, bad, 8); }) ==
              errc::unbounded_box);
        curve_family flagged;
        flagged.curves.push_back({{0.0, 0.0}, {1.0, 1.0}});
        flagged.horizontal = true;
        CHECK(thrown_code([&] { discrete_modulus(sp, flagged, 8); }) ==
              errc::invalid_argument);
        curve_family still;
        still.curves.push_back({{0.0, 0.0}, {0.0, 0.0}});
        CHECK(thrown_code([&] { discrete_modulus(sp, still, 8); }) ==
              errc::empty_family);
    }

    SECTION("exponent and grid") {
        CHECK(thrown_code([&] { discrete_modulus(sp, fam, 8, 1.0); }) ==
              errc::invalid_argument);
        CHECK(thrown_code([&] { discrete_modulus(sp, fam, 0); }) ==
              errc::invalid_argument);
        CHECK(thrown_code([&] {
                  discrete_modulus(sp, fam, 8, 3.0, pinned_box({0.0, 0.0}, {0.0, 1.0}));
              }) == errc::unbounded_box);
        CHECK(thrown_code([&] {
                  discrete_modulus(sp, fam, 8, 3.0, pinned_box({0.2, -1.0}, {0.8, 1.0}));
              }) == errc::unbounded_box);
        CHECK(thrown_code([&] {
                  discrete_modulus(sp, fam, 8, 3.0, pinned_box({0.0}, {1.0}));
              }) == errc::dimension_mismatch);
    }
}

TEST_CASE("curve family CSV round trip", "[modulus]") {
    const spectrum sp = spectrum_s2();
    const std::string path = "modulus_family_roundtrip.csv";
    const auto fam = build_cylinder_family(sp, {0.0, 0.0}, {1.0, 0.0}, 0.25, 8);
    save_family_csv(path, fam);
    const auto back = load_family_csv(sp, path);
    REQUIRE(back.curves.size() == fam.curves.size());
    for (std::size_t i = 0; i < fam.curves.size(); ++i) {
        REQUIRE(back.curves[i].size() == fam.curves[i].size());
        for (std::size_t v = 0; v < fam.curves[i].size(); ++v)
            CHECK(back.curves[i][v] == fam.curves[i][v]);  // exact doubles
    }
    CHECK(back.horizontal);

    // A tilted family reloads with the horizontal flag off.
    curve_family tilted;
    tilted.curves.push_back({{0.0, 0.0}, {1.0, 1.0}});
    tilted.curves.push_back({{0.0, 0.5}, {1.0, 1.5}});
    save_family_csv(path, tilted);
    CHECK_FALSE(load_family_csv(sp, path).horizontal);

    const auto write_file = [&](const std::string& text) {
        std::ofstream out(path);
        out << text;
    };
    const auto load_code = [&] { return thrown_code([&] { load_family_csv(sp, path); }); };
    write_file("");
    CHECK(load_code() == errc::config_invalid);
    write_file("vertex,curve,x0,x1\n0,0,0,0\n");
    CHECK(load_code() == errc::config_invalid);
    write_file("curve,vertex,x0\n0,0,0\n");
    CHECK(load_code() == errc::config_invalid);
    write_file("curve,vertex,x0,x1\n0,0,0,zero\n");
    CHECK(load_code() == errc::config_invalid);
    write_file("curve,vertex,x0,x1\n0,0,0,0\n2,0,1,1\n");
    CHECK(load_code() == errc::config_invalid);
    write_file("curve,vertex,x0,x1\n0,0,0,0\n");
    CHECK(load_code() == errc::config_invalid);
    CHECK(thrown_code([&] { load_family_csv(sp, "no_such_family_file.csv"); }) ==
          errc::invalid_argument);
    std::remove(path.c_str());
}

TEST_CASE("density CSV export lists touched cells", "[modulus]") {
    const spectrum sp = spectrum_s2();
    auto fam = segment_family({{0.0, 0.0}}, {{1.0, 0.0}});
    const auto res =
        discrete_modulus_full(sp, fam, 2, 3.0, pinned_box({0.0, -0.5}, {1.0, 0.5}));
    const std::string path = "modulus_density_export.csv";
    save_density_csv(path, res.density);
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "cell,center0,center1,mu,rho");
    std::size_t rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == res.density.touched.size());
    // Cell centers decode the flat index: the two touched cells sit in the
    // top row at x = 0.25 and 0.75.
    const auto c0 = res.density.cell_center(res.density.touched[0]);
    const auto c1 = res.density.cell_center(res.density.touched[1]);
    CHECK(c0[0] == Catch::Approx(0.25).margin(1e-12));
    CHECK(c1[0] == Catch::Approx(0.75).margin(1e-12));
    CHECK(c0[1] == Catch::Approx(0.25).margin(1e-12));
    CHECK(c1[1] == Catch::Approx(0.25).margin(1e-12));
    std::remove(path.c_str());
}
