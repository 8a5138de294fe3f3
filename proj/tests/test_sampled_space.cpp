#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "solvgeo/rng.hpp"
#include "solvgeo/sampled_space.hpp"

using namespace solvgeo;

namespace {

sampled_space make_space(std::vector<std::string> labels, std::vector<double> table,
                         space_kind kind = space_kind::quasimetric) {
    return sampled_space(std::move(labels), {}, std::move(table), kind);
}

// Symmetric table from the strict upper triangle given row by row.
sampled_space from_upper(std::vector<std::string> labels, const std::vector<double>& upper,
                         space_kind kind = space_kind::quasimetric) {
    const std::size_t n = labels.size();
    std::vector<double> t(n * n, 0.0);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            t[i * n + j] = t[j * n + i] = upper[k];
            ++k;
        }
    return make_space(std::move(labels), std::move(t), kind);
}

errc thrown_code(const std::function<void()>& f) {
    try {
        f();
    } catch (const error& e) {
        return e.code();
    }
    FAIL("expected a solvgeo::error");
    return errc::invalid_argument;
}

}  // namespace

TEST_CASE("sampled space validation") {
    SECTION("well formed table passes") {
        auto s = from_upper({"a", "b", "c"}, {1.0, 3.0, 1.0});
        CHECK(s.size() == 3);
        CHECK(s.at(0, 1) == 1.0);
        CHECK(s.at(0, 2) == 3.0);
        CHECK(s.at(2, 0) == 3.0);
        CHECK(s.index_of("c") == 2);
        CHECK(thrown_code([&] { (void)s.index_of("zz"); }) == errc::invalid_argument);
    }
    SECTION("too few points") {
        CHECK(thrown_code([] { make_space({"a"}, {0.0}); }) == errc::too_few_points);
    }
    SECTION("table size mismatch") {
        CHECK(thrown_code([] { make_space({"a", "b"}, {0.0, 1.0, 1.0}); }) ==
              errc::dimension_mismatch);
    }
    SECTION("coords size mismatch") {
        CHECK(thrown_code([] {
            sampled_space({"a", "b"}, {{0.0}}, {0.0, 1.0, 1.0, 0.0}, space_kind::metric);
        }) == errc::dimension_mismatch);
    }
    SECTION("nonzero diagonal") {
        CHECK(thrown_code([] { make_space({"a", "b"}, {0.5, 1.0, 1.0, 0.0}); }) ==
              errc::invalid_argument);
    }
    SECTION("asymmetric table") {
        CHECK(thrown_code([] { make_space({"a", "b"}, {0.0, 1.0, 1.1, 0.0}); }) ==
              errc::invalid_argument);
    }
    SECTION("negative and NaN entries") {
        CHECK(thrown_code([] { make_space({"a", "b"}, {0.0, -1.0, -1.0, 0.0}); }) ==
              errc::invalid_argument);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        CHECK(thrown_code([&] { make_space({"a", "b"}, {0.0, nan, nan, 0.0}); }) ==
              errc::invalid_argument);
    }
    SECTION("metric kind enforces the triangle inequality") {
        CHECK(thrown_code([] {
            from_upper({"a", "b", "c"}, {1.0, 3.0, 1.0}, space_kind::metric);
        }) == errc::invalid_argument);
        // The same table is fine as a quasimetric, with defect 3 - 1 - 1 = 1.
        auto q = from_upper({"a", "b", "c"}, {1.0, 3.0, 1.0});
        CHECK(q.triangle_defect() == Catch::Approx(1.0).margin(1e-15));
    }
}

TEST_CASE("chain metrization") {
    SECTION("three point example") {
        // rho(a,b) = 1, rho(b,c) = 1, rho(a,c) = 3: the chain a-b-c shortens
        // the long edge to exactly 2.
        auto q = from_upper({"a", "b", "c"}, {1.0, 3.0, 1.0});
        auto d = chain_metrize(q);
        CHECK(d.kind() == space_kind::metric);
        CHECK(d.at(0, 2) == 2.0);
        CHECK(d.at(0, 1) == 1.0);
        CHECK(d.at(1, 2) == 1.0);
        CHECK(d.triangle_defect() <= 1e-12);
    }
    SECTION("idempotent and dominated by the input") {
        rng gen(2024);
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t n = 6;
            std::vector<double> t(n * n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    t[i * n + j] = t[j * n + i] = 0.05 + gen.uniform(0.0, 2.0);
            std::vector<std::string> labels;
            for (std::size_t i = 0; i < n; ++i) labels.push_back("p" + std::to_string(i));
            auto q = make_space(labels, t);
            auto d = chain_metrize(q);
            auto dd = chain_metrize(d);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    CHECK(d.at(i, j) <= q.at(i, j) + 1e-15);
                    CHECK(dd.at(i, j) == Catch::Approx(d.at(i, j)).epsilon(1e-12));
                }
            CHECK(d.triangle_defect() <= 1e-12);
        }
    }
    SECTION("labels, coords and basepoint survive") {
        sampled_space q({"a", "b"}, {{0.0, 1.0}, {2.0, 3.0}}, {0.0, 1.0, 1.0, 0.0},
                        space_kind::quasimetric, 1);
        auto d = chain_metrize(q);
        CHECK(d.labels() == q.labels());
        CHECK(d.coords() == q.coords());
        REQUIRE(d.basepoint().has_value());
        CHECK(*d.basepoint() == 1);
    }
}

TEST_CASE("metric inversion at a sample point") {
    SECTION("three points on the real line") {
        // Points 0, 1, 3 with the absolute-value metric, inverted at p = 0:
        // rho(1,3) = 2/(1*3) = 2/3, and with only two remaining points the
        // chain metric equals rho.  The factor-4 window is [1/6, 2/3].
        auto line = from_upper({"p0", "p1", "p3"}, {1.0, 3.0, 2.0}, space_kind::metric);
        auto inv = invert_metric(line, 0);
        REQUIRE(inv.size() == 2);
        CHECK(inv.labels()[0] == "p1");
        CHECK(inv.labels()[1] == "p3");
        CHECK(inv.at(0, 1) == Catch::Approx(2.0 / 3.0).margin(1e-15));
        CHECK(inv.kind() == space_kind::metric);
    }
    SECTION("equidistant configuration stays exact") {
        // m points pairwise at distance s, all at distance a from the
        // basepoint: rho = s/a^2 for every pair and no chain can shorten it.
        const std::size_t m = 5;
        const double s = 0.7, a = 2.0;
        std::vector<std::string> labels{"base"};
        for (std::size_t i = 0; i < m; ++i) labels.push_back("q" + std::to_string(i));
        const std::size_t n = m + 1;
        std::vector<double> t(n * n, 0.0);
        for (std::size_t i = 1; i < n; ++i) {
            t[i] = t[i * n] = a;
            for (std::size_t j = i + 1; j < n; ++j) t[i * n + j] = t[j * n + i] = s;
        }
        auto space = make_space(labels, t);
        auto inv = invert_metric(space, 0);
        REQUIRE(inv.size() == m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                CHECK(inv.at(i, j) == Catch::Approx(s / (a * a)).margin(1e-15));
    }
    SECTION("random metric samples satisfy the factor-4 sandwich") {
        rng gen(77);
        for (int trial = 0; trial < 10; ++trial) {
            const std::size_t n = 7;
            std::vector<double> t(n * n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    t[i * n + j] = t[j * n + i] = 0.2 + gen.uniform(0.0, 2.0);
            std::vector<std::string> labels;
            for (std::size_t i = 0; i < n; ++i) labels.push_back("p" + std::to_string(i));
            auto space = chain_metrize(make_space(labels, t));
            // invert_metric asserts the sandwich internally; returning at all
            // means it held.  Spot check one pair against the raw quotient.
            auto inv = invert_metric(space, 0);
            const double rho01 = space.at(1, 2) / (space.at(1, 0) * space.at(2, 0));
            CHECK(inv.at(0, 1) <= rho01 * (1.0 + 1e-12));
            CHECK(inv.at(0, 1) >= rho01 / 4.0 * (1.0 - 1e-12));
        }
    }
    SECTION("degenerate basepoint and tiny samples are rejected") {
        auto twin = from_upper({"a", "b", "c"}, {0.0, 1.0, 1.0});
        CHECK(thrown_code([&] { invert_metric(twin, 0); }) == errc::basepoint_degenerate);
        auto pair = from_upper({"a", "b"}, {1.0});
        CHECK(thrown_code([&] { invert_metric(pair, 0); }) == errc::too_few_points);
        CHECK(thrown_code([&] { invert_metric(twin, 9); }) == errc::invalid_argument);
    }
}

TEST_CASE("sphericalization with an added point at infinity") {
    SECTION("two points on the real line") {
        // Points 0 and 1 with |x-y|, sphericalized at p = 0:
        //   s_p(0, inf) = 1, s_p(1, inf) = 1/2, s_p(0, 1) = 1/2.
        auto line = from_upper({"p0", "p1"}, {1.0}, space_kind::metric);
        auto sph = sphericalize(line, 0);
        REQUIRE(sph.size() == 3);
        const std::size_t i0 = sph.index_of("p0");
        const std::size_t i1 = sph.index_of("p1");
        const std::size_t ii = sph.index_of("inf");
        CHECK(sph.at(i0, ii) == Catch::Approx(1.0).margin(1e-15));
        CHECK(sph.at(i1, ii) == Catch::Approx(0.5).margin(1e-15));
        CHECK(sph.at(i0, i1) == Catch::Approx(0.5).margin(1e-15));
        CHECK(sph.kind() == space_kind::metric);
    }
    SECTION("random samples pass the internal sandwich and stay bounded") {
        rng gen(402);
        for (int trial = 0; trial < 10; ++trial) {
            const std::size_t n = 6;
            std::vector<double> t(n * n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    t[i * n + j] = t[j * n + i] = 0.2 + gen.uniform(0.0, 5.0);
            std::vector<std::string> labels;
            for (std::size_t i = 0; i < n; ++i) labels.push_back("p" + std::to_string(i));
            auto space = chain_metrize(make_space(labels, t));
            auto sph = sphericalize(space, 0, "omega");
            CHECK(sph.index_of("omega") == n);
            // Sphericalized distances never exceed 1: every raw value is
            // dominated by d/( (1+d(x,p)) (1+d(y,p)) ) <= 1 via the triangle
            // inequality, and chaining only shrinks.
            for (std::size_t i = 0; i <= n; ++i)
                for (std::size_t j = 0; j <= n; ++j)
                    CHECK(sph.at(i, j) <= 1.0 + 1e-12);
        }
    }
    SECTION("basepoint out of range") {
        auto line = from_upper({"p0", "p1"}, {1.0});
        CHECK(thrown_code([&] { sphericalize(line, 5); }) == errc::invalid_argument);
    }
}

TEST_CASE("sphericalized measure weight") {
    CHECK(sphericalized_measure_weight(3.0, 1.0) == Catch::Approx(0.015625).margin(1e-18));
    CHECK(sphericalized_measure_weight(2.0, 0.0) == 1.0);
    // Strictly decreasing in the distance.
    double prev = sphericalized_measure_weight(2.5, 0.0);
    for (double d = 0.5; d <= 4.0; d += 0.5) {
        const double w = sphericalized_measure_weight(2.5, d);
        CHECK(w < prev);
        prev = w;
    }
    CHECK(thrown_code([] { sphericalized_measure_weight(1.0, 1.0); }) == errc::invalid_argument);
    CHECK(thrown_code([] { sphericalized_measure_weight(2.0, -0.5); }) == errc::invalid_argument);
}

TEST_CASE("ratio reports") {
    SECTION("summary statistics") {
        auto rep = make_ratio_report({4.0, 1.0, 2.0});
        CHECK(rep.count == 3);
        CHECK(rep.min_ratio == 1.0);
        CHECK(rep.max_ratio == 4.0);
        CHECK(rep.band() == 4.0);
        REQUIRE(rep.percentiles.size() == 5);
        CHECK(rep.percentiles[2] == Catch::Approx(2.0));
    }
    SECTION("empty input") {
        auto rep = make_ratio_report({});
        CHECK(rep.count == 0);
        CHECK(rep.band() == 0.0);
    }
    SECTION("pairwise ratio of two samples") {
        auto a = from_upper({"a", "b", "c"}, {2.0, 4.0, 6.0});
        auto b = from_upper({"a", "b", "c"}, {1.0, 1.0, 1.0});
        auto rep = pairwise_ratio(a, b);
        CHECK(rep.count == 3);
        CHECK(rep.min_ratio == 2.0);
        CHECK(rep.max_ratio == 6.0);
        CHECK(rep.band() == 3.0);
        auto small = from_upper({"a", "b"}, {1.0});
        CHECK(thrown_code([&] { (void)pairwise_ratio(a, small); }) == errc::dimension_mismatch);
        auto zero = from_upper({"a", "b", "c"}, {1.0, 0.0, 1.0});
        CHECK(thrown_code([&] { (void)pairwise_ratio(a, zero); }) == errc::inconsistent_pair);
    }
}

TEST_CASE("triple distortion profiles") {
    auto a = from_upper({"a", "b", "c", "d"}, {1.0, 2.0, 3.0, 1.5, 2.5, 0.5});
    // Snowflake: square every distance.
    std::vector<double> sq(a.table());
    for (double& v : sq) v = v * v;
    auto b = make_space(a.labels(), sq);

    std::vector<std::array<std::size_t, 3>> triples;
    for (std::size_t x = 0; x < 4; ++x)
        for (std::size_t y = 0; y < 4; ++y)
            for (std::size_t z = 0; z < 4; ++z)
                if (x != y && x != z && y != z) triples.push_back({x, y, z});

    SECTION("identity correspondence") {
        auto prof = triple_distortion(a, a, triples);
        CHECK(prof.used == triples.size());
        CHECK(prof.skipped == 0);
        CHECK(prof.eta_constant(1.0) == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("snowflake correspondence has exponent two") {
        auto prof = triple_distortion(a, b, triples);
        CHECK(prof.eta_constant(2.0) == Catch::Approx(1.0).margin(1e-12));
        // Exponent one underestimates the growth: some triple exceeds 1.
        CHECK(prof.eta_constant(1.0) > 1.5);
    }
    SECTION("degenerate triples are counted") {
        auto mixed = triples;
        mixed.push_back({0, 0, 1});
        mixed.push_back({0, 1, 9});
        auto prof = triple_distortion(a, a, mixed);
        CHECK(prof.used == triples.size());
        CHECK(prof.skipped == 2);
        std::vector<std::array<std::size_t, 3>> bad{{0, 0, 1}};
        CHECK(thrown_code([&] { (void)triple_distortion(a, a, bad); }) == errc::too_few_points);
    }
}

TEST_CASE("cross-ratio distortion profiles") {
    // Points 0, 1, 2, 4 on the real line.
    auto line = from_upper({"q0", "q1", "q2", "q4"}, {1.0, 2.0, 4.0, 1.0, 3.0, 2.0},
                           space_kind::metric);
    SECTION("frozen cross-ratio value") {
        // (d13 d24) / (d14 d23) = (2*3)/(4*1) = 3/2.
        CHECK(cross_ratio(line, 0, 1, 2, 3) == Catch::Approx(1.5).margin(1e-15));
    }
    SECTION("scaling leaves cross-ratios unchanged") {
        std::vector<double> scaled(line.table());
        for (double& v : scaled) v *= 7.5;
        auto out = make_space(line.labels(), scaled);
        std::vector<std::array<std::size_t, 4>> quads{{0, 1, 2, 3}, {3, 1, 0, 2}, {2, 0, 3, 1}};
        auto prof = crossratio_distortion(line, out, quads);
        CHECK(prof.used == 3);
        CHECK(prof.skipped == 0);
        CHECK(prof.max_out_over_in == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("snowflake squares cross-ratios") {
        std::vector<double> sq(line.table());
        for (double& v : sq) v = v * v;
        auto out = make_space(line.labels(), sq);
        std::vector<std::array<std::size_t, 4>> quads{{0, 1, 2, 3}};
        auto prof = crossratio_distortion(line, out, quads);
        // t_in = 1.5, t_out = 1.5^2, ratio 1.5.
        CHECK(prof.max_out_over_in == Catch::Approx(1.5).margin(1e-12));
        REQUIRE(prof.pairs.size() == 1);
        CHECK(prof.pairs[0].first == Catch::Approx(1.5).margin(1e-12));
        CHECK(prof.pairs[0].second == Catch::Approx(2.25).margin(1e-12));
        // The binned envelope records t_out in the bin holding t_in.
        bool found = false;
        for (std::size_t b = 0; b < prof.eta_hat.size(); ++b)
            if (prof.bin_lo[b] <= 1.5 && 1.5 < prof.bin_hi[b]) {
                found = true;
                CHECK(prof.eta_hat[b] == Catch::Approx(2.25).margin(1e-12));
            }
        CHECK(found);
    }
    SECTION("degenerate quadruples are skipped with a count") {
        std::vector<std::array<std::size_t, 4>> quads{
            {0, 1, 2, 3}, {0, 0, 2, 3}, {0, 1, 2, 9}};
        auto prof = crossratio_distortion(line, line, quads);
        CHECK(prof.used == 1);
        CHECK(prof.skipped == 2);
        std::vector<std::array<std::size_t, 4>> all_bad{{0, 0, 2, 3}};
        CHECK(thrown_code([&] { (void)crossratio_distortion(line, line, all_bad); }) ==
              errc::too_few_points);
    }
    SECTION("size mismatch is rejected") {
        auto small = from_upper({"a", "b"}, {1.0});
        std::vector<std::array<std::size_t, 4>> quads{{0, 1, 2, 3}};
        CHECK(thrown_code([&] { (void)crossratio_distortion(line, small, quads); }) ==
              errc::dimension_mismatch);
    }
}

TEST_CASE("distance table CSV round trip") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "solvgeo_test_space.csv";

    SECTION("full round trip with coordinates and basepoint") {
        sampled_space s({"a", "b", "c"},
                        {{0.1, -2.0}, {1.0 / 3.0, 4.5}, {-0.25, 1e-7}},
                        {0.0, 1.25, 2.5, 1.25, 0.0, 0.75, 2.5, 0.75, 0.0},
                        space_kind::quasimetric, 1);
        save_space_csv(s, path.string());
        auto back = load_space_csv(path.string());
        CHECK(back.labels() == s.labels());
        CHECK(back.kind() == s.kind());
        REQUIRE(back.basepoint().has_value());
        CHECK(*back.basepoint() == 1);
        REQUIRE(back.coords().size() == 3);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t c = 0; c < 2; ++c)
                CHECK(back.coords()[i][c] == s.coords()[i][c]);
        CHECK(back.table() == s.table());
        fs::remove(path);
    }
    SECTION("metric kind and no coordinates") {
        auto d = chain_metrize(from_upper({"x", "y", "z"}, {1.0, 3.0, 1.0}));
        save_space_csv(d, path.string());
        auto back = load_space_csv(path.string());
        CHECK(back.kind() == space_kind::metric);
        CHECK(back.coords().empty());
        CHECK(back.table() == d.table());
        CHECK_FALSE(back.basepoint().has_value());
        fs::remove(path);
    }
    SECTION("loader rejects malformed input") {
        auto write = [&](const std::string& text) {
            std::ofstream f(path);
            f << text;
        };
        write("# kind=fancy\nlabel,a,b\na,0,1\nb,1,0\n");
        CHECK(thrown_code([&] { (void)load_space_csv(path.string()); }) == errc::config_invalid);
        write("# kind=metric\nname,a,b\na,0,1\nb,1,0\n");
        CHECK(thrown_code([&] { (void)load_space_csv(path.string()); }) == errc::config_invalid);
        write("# kind=metric\n# basepoint=zz\nlabel,a,b\na,0,1\nb,1,0\n");
        CHECK(thrown_code([&] { (void)load_space_csv(path.string()); }) == errc::config_invalid);
        write("# kind=metric\nlabel,a,b\na,0,1\n");
        CHECK(thrown_code([&] { (void)load_space_csv(path.string()); }) == errc::config_invalid);
        write("# kind=metric\nlabel,a,b\nb,0,1\na,1,0\n");
        CHECK(thrown_code([&] { (void)load_space_csv(path.string()); }) == errc::config_invalid);
        CHECK(thrown_code([&] { (void)load_space_csv("/nonexistent/nowhere.csv"); }) ==
              errc::invalid_argument);
        fs::remove(path);
    }
    SECTION("sphericalized table with padded coordinates survives the trip") {
        sampled_space s({"p0", "p1"}, {{0.0}, {1.0}}, {0.0, 1.0, 1.0, 0.0}, space_kind::metric);
        auto sph = sphericalize(s, 0);
        save_space_csv(sph, path.string());
        auto back = load_space_csv(path.string());
        CHECK(back.labels() == sph.labels());
        CHECK(back.table() == sph.table());
        REQUIRE(back.coords().size() == 3);
        CHECK(std::isnan(back.coords()[2][0]));
        fs::remove(path);
    }
}
