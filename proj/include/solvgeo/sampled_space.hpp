#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "solvgeo/errors.hpp"

namespace solvgeo {

enum class space_kind { metric, quasimetric };

// Finite sample of a (quasi)metric space: opaque labels, optional coordinates,
// and a dense symmetric distance table.
class sampled_space {
public:
    sampled_space() = default;
    sampled_space(std::vector<std::string> labels, std::vector<std::vector<double>> coords,
                  std::vector<double> dist, space_kind kind,
                  std::optional<std::size_t> basepoint = std::nullopt)
        : labels_(std::move(labels)),
          coords_(std::move(coords)),
          dist_(std::move(dist)),
          kind_(kind),
          basepoint_(basepoint) {
        validate();
    }

    std::size_t size() const { return labels_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::vector<std::vector<double>>& coords() const { return coords_; }
    space_kind kind() const { return kind_; }
    std::optional<std::size_t> basepoint() const { return basepoint_; }

    double at(std::size_t i, std::size_t j) const { return dist_[i * size() + j]; }
    const std::vector<double>& table() const { return dist_; }

    std::size_t index_of(const std::string& label) const {
        for (std::size_t i = 0; i < labels_.size(); ++i)
            if (labels_[i] == label) return i;
        fail(errc::invalid_argument, "sampled_space: unknown label '" + label + "'");
    }

    // Largest triangle violation d(i,j) - d(i,k) - d(k,j) over all triples.
    double triangle_defect() const {
        const std::size_t n = size();
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    worst = std::max(worst, at(i, j) - at(i, k) - at(k, j));
        return worst;
    }

private:
    void validate() {
        const std::size_t n = labels_.size();
        if (n < 2) fail(errc::too_few_points, "sampled_space needs at least two points");
        if (dist_.size() != n * n)
            fail(errc::dimension_mismatch, "sampled_space: table size does not match label count");
        if (!coords_.empty() && coords_.size() != n)
            fail(errc::dimension_mismatch, "sampled_space: coords size does not match label count");
        if (basepoint_ && *basepoint_ >= n)
            fail(errc::invalid_argument, "sampled_space: basepoint out of range");
        for (std::size_t i = 0; i < n; ++i) {
            if (dist_[i * n + i] != 0.0)
                fail(errc::invalid_argument, "sampled_space: nonzero diagonal entry");
            for (std::size_t j = i + 1; j < n; ++j) {
                const double a = dist_[i * n + j];
                const double b = dist_[j * n + i];
                if (!(a >= 0.0) || !(b >= 0.0))
                    fail(errc::invalid_argument, "sampled_space: negative or NaN distance");
                if (std::abs(a - b) > 1e-12 * std::max(1.0, std::max(a, b)))
                    fail(errc::invalid_argument, "sampled_space: asymmetric table");
            }
        }
        if (kind_ == space_kind::metric && triangle_defect() > 1e-9)
            fail(errc::invalid_argument, "sampled_space: metric kind violates triangle inequality");
    }

    std::vector<std::string> labels_;
    std::vector<std::vector<double>> coords_;
    std::vector<double> dist_;
    space_kind kind_ = space_kind::quasimetric;
    std::optional<std::size_t> basepoint_;
};

// All-pairs shortest-path closure: the largest metric dominated by the input
// table on the sample.  The triangle inequality holds up to roundoff.
inline sampled_space chain_metrize(const sampled_space& in) {
    const std::size_t n = in.size();
    std::vector<double> d(in.table());
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            const double dik = d[i * n + k];
            for (std::size_t j = 0; j < n; ++j)
                d[i * n + j] = std::min(d[i * n + j], dik + d[k * n + j]);
        }
    return sampled_space(in.labels(), in.coords(), std::move(d), space_kind::metric,
                         in.basepoint());
}

// The same sample without one point.
inline sampled_space remove_point(const sampled_space& in, std::size_t p) {
    const std::size_t n = in.size();
    if (p >= n) fail(errc::invalid_argument, "remove_point: index out of range");
    if (n < 3) fail(errc::too_few_points, "remove_point would leave fewer than two points");
    std::vector<std::string> labels;
    std::vector<std::vector<double>> coords;
    std::vector<double> d;
    d.reserve((n - 1) * (n - 1));
    for (std::size_t i = 0; i < n; ++i) {
        if (i == p) continue;
        labels.push_back(in.labels()[i]);
        if (!in.coords().empty()) coords.push_back(in.coords()[i]);
        for (std::size_t j = 0; j < n; ++j)
            if (j != p) d.push_back(in.at(i, j));
    }
    std::optional<std::size_t> basepoint;
    if (in.basepoint() && *in.basepoint() != p)
        basepoint = *in.basepoint() < p ? *in.basepoint() : *in.basepoint() - 1;
    return sampled_space(std::move(labels), std::move(coords), std::move(d), in.kind(), basepoint);
}

// Metric inversion at a sample point: rho_p(x,y) = d(x,y)/(d(x,p) d(y,p)) on
// the sample minus p, then chain metrization.  The chain metric always lands
// in [rho_p/4, rho_p]; a violation means a programming error, so it throws.
inline sampled_space invert_metric(const sampled_space& in, std::size_t p) {
    const std::size_t n = in.size();
    if (p >= n) fail(errc::invalid_argument, "invert_metric: basepoint out of range");
    if (n < 3) fail(errc::too_few_points, "invert_metric needs two points besides the basepoint");
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < n; ++i)
        if (i != p) {
            if (in.at(i, p) <= 0.0)
                fail(errc::basepoint_degenerate,
                     "invert_metric: sample point at zero distance from basepoint");
            keep.push_back(i);
        }
    const std::size_t m = keep.size();
    std::vector<std::string> labels(m);
    std::vector<std::vector<double>> coords;
    if (!in.coords().empty()) coords.resize(m);
    std::vector<double> rho(m * m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
        labels[a] = in.labels()[keep[a]];
        if (!coords.empty()) coords[a] = in.coords()[keep[a]];
        for (std::size_t b = 0; b < m; ++b) {
            if (a == b) continue;
            rho[a * m + b] = in.at(keep[a], keep[b]) / (in.at(keep[a], p) * in.at(keep[b], p));
        }
    }
    sampled_space quasi(labels, coords, rho, space_kind::quasimetric);
    sampled_space out = chain_metrize(quasi);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b) {
            const double r = rho[a * m + b];
            const double c = out.at(a, b);
            if (c > r * (1.0 + 1e-12) || c < r / 4.0 * (1.0 - 1e-12))
                fail(errc::inconsistent_pair, "invert_metric: factor-4 sandwich violated");
        }
    return out;
}

// Sphericalization at a sample point: s_p(x,y) = d(x,y)/((1+d(x,p))(1+d(y,p)))
// with an added point at infinity, s_p(x, inf) = 1/(1+d(x,p)), then chain
// metrization; the factor-4 sandwich is asserted the same way.
inline sampled_space sphericalize(const sampled_space& in, std::size_t p,
                                  const std::string& infinity_label = "inf") {
    const std::size_t n = in.size();
    if (p >= n) fail(errc::invalid_argument, "sphericalize: basepoint out of range");
    const std::size_t m = n + 1;
    std::vector<std::string> labels(in.labels());
    labels.push_back(infinity_label);
    std::vector<std::vector<double>> coords;
    if (!in.coords().empty()) {
        coords = in.coords();
        // The added point has no genuine coordinates; pad with NaN so every
        // row keeps the same width.
        coords.emplace_back(coords.front().size(), std::numeric_limits<double>::quiet_NaN());
    }
    std::vector<double> s(m * m, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b) continue;
            s[a * m + b] = in.at(a, b) / ((1.0 + in.at(a, p)) * (1.0 + in.at(b, p)));
        }
        s[a * m + n] = s[n * m + a] = 1.0 / (1.0 + in.at(a, p));
    }
    sampled_space quasi(labels, coords, s, space_kind::quasimetric);
    sampled_space out = chain_metrize(quasi);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b) {
            const double r = s[a * m + b];
            const double c = out.at(a, b);
            if (c > r * (1.0 + 1e-12) || c < r / 4.0 * (1.0 - 1e-12))
                fail(errc::inconsistent_pair, "sphericalize: factor-4 sandwich violated");
        }
    return out;
}

// Density of the sphericalized measure against the original one at distance
// d from the basepoint.
inline double sphericalized_measure_weight(double Q, double d_to_p) {
    if (!(Q > 1.0)) fail(errc::invalid_argument, "sphericalized_measure_weight needs Q > 1");
    if (!(d_to_p >= 0.0))
        fail(errc::invalid_argument, "sphericalized_measure_weight needs a nonnegative distance");
    return std::pow(1.0 + d_to_p, -2.0 * Q);
}

struct ratio_report {
    double min_ratio = std::numeric_limits<double>::infinity();
    double max_ratio = 0.0;
    std::size_t count = 0;
    // Quantiles at 5, 25, 50, 75, 95 percent.
    std::vector<double> percentiles;

    double band() const { return count == 0 ? 0.0 : max_ratio / min_ratio; }
};

inline ratio_report make_ratio_report(std::vector<double> ratios) {
    ratio_report out;
    out.count = ratios.size();
    if (ratios.empty()) return out;
    std::sort(ratios.begin(), ratios.end());
    out.min_ratio = ratios.front();
    out.max_ratio = ratios.back();
    for (double q : {0.05, 0.25, 0.5, 0.75, 0.95}) {
        const double pos = q * static_cast<double>(ratios.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        const double v = lo + 1 < ratios.size()
                             ? (1.0 - frac) * ratios[lo] + frac * ratios[lo + 1]
                             : ratios[lo];
        out.percentiles.push_back(v);
    }
    return out;
}

// Pairwise ratio a(i,j)/b(i,j) over distinct pairs of two same-size samples.
inline ratio_report pairwise_ratio(const sampled_space& a, const sampled_space& b) {
    if (a.size() != b.size())
        fail(errc::dimension_mismatch, "pairwise_ratio: sample sizes differ");
    std::vector<double> ratios;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            const double den = b.at(i, j);
            if (den <= 0.0)
                fail(errc::inconsistent_pair, "pairwise_ratio: zero denominator distance");
            ratios.push_back(a.at(i, j) / den);
        }
    return make_ratio_report(std::move(ratios));
}

struct triple_profile {
    std::size_t used = 0;
    std::size_t skipped = 0;
    std::vector<std::pair<double, double>> pairs;  // (t_in, t_out) per triple

    // Smallest eta constant: max over triples of t_out / t_in^exponent.
    double eta_constant(double exponent) const {
        double worst = 0.0;
        for (const auto& [tin, tout] : pairs)
            worst = std::max(worst, tout / std::pow(tin, exponent));
        return worst;
    }
};

// Quasisymmetry data of the index-wise correspondence between two samples:
// per triple (x, y, z) the ratios t_in = a(x,y)/a(x,z), t_out = b(x,y)/b(x,z).
inline triple_profile triple_distortion(const sampled_space& a, const sampled_space& b,
                                        const std::vector<std::array<std::size_t, 3>>& triples) {
    if (a.size() != b.size())
        fail(errc::dimension_mismatch, "triple_distortion: sample sizes differ");
    triple_profile prof;
    for (const auto& t : triples) {
        const auto [x, y, z] = t;
        if (x == y || x == z || y == z || x >= a.size() || y >= a.size() || z >= a.size()) {
            ++prof.skipped;
            continue;
        }
        const double ain = a.at(x, z), bin_ = b.at(x, z);
        if (ain <= 0.0 || bin_ <= 0.0) {
            ++prof.skipped;
            continue;
        }
        const double tin = a.at(x, y) / ain;
        const double tout = b.at(x, y) / bin_;
        if (!std::isfinite(tin) || !std::isfinite(tout) || tin <= 0.0) {
            ++prof.skipped;
            continue;
        }
        ++prof.used;
        prof.pairs.emplace_back(tin, tout);
    }
    if (prof.used == 0) fail(errc::too_few_points, "triple_distortion: no valid triple");
    return prof;
}

// Cross-ratio of four indices under a distance table:
//   (d13 d24) / (d14 d23).
inline double cross_ratio(const sampled_space& s, std::size_t x1, std::size_t x2, std::size_t x3,
                          std::size_t x4) {
    const double num = s.at(x1, x3) * s.at(x2, x4);
    const double den = s.at(x1, x4) * s.at(x2, x3);
    return num / den;
}

struct crossratio_profile {
    std::size_t used = 0;
    std::size_t skipped = 0;         // degenerate quadruples, counted not dropped
    double max_out_over_in = 0.0;    // sup of t_out / t_in over quadruples
    std::vector<double> bin_lo;      // log-spaced input-cross-ratio bins
    std::vector<double> bin_hi;
    std::vector<double> eta_hat;     // max output cross-ratio per bin (NaN when empty)
    std::vector<std::pair<double, double>> pairs;  // (t_in, t_out), capped
};

// Measured quasimobius profile of the index-wise correspondence between two
// samples: per quadruple the input and output cross-ratios, binned over
// [1e-3, 1e3] in the input value.
inline crossratio_profile crossratio_distortion(
    const sampled_space& in, const sampled_space& out,
    const std::vector<std::array<std::size_t, 4>>& quadruples, std::size_t keep_pairs = 256) {
    if (in.size() != out.size())
        fail(errc::dimension_mismatch, "crossratio_distortion: sample sizes differ");
    crossratio_profile prof;
    const std::size_t bins = 32;
    const double lo = 1e-3, hi = 1e3;
    prof.bin_lo.resize(bins);
    prof.bin_hi.resize(bins);
    prof.eta_hat.assign(bins, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t b = 0; b < bins; ++b) {
        prof.bin_lo[b] = lo * std::pow(hi / lo, static_cast<double>(b) / bins);
        prof.bin_hi[b] = lo * std::pow(hi / lo, static_cast<double>(b + 1) / bins);
    }
    for (const auto& q : quadruples) {
        const auto [x1, x2, x3, x4] = q;
        bool distinct = x1 != x2 && x1 != x3 && x1 != x4 && x2 != x3 && x2 != x4 && x3 != x4;
        if (!distinct || x1 >= in.size() || x2 >= in.size() || x3 >= in.size() ||
            x4 >= in.size()) {
            ++prof.skipped;
            continue;
        }
        const double den_in = in.at(x1, x4) * in.at(x2, x3);
        const double den_out = out.at(x1, x4) * out.at(x2, x3);
        if (den_in <= 0.0 || den_out <= 0.0) {
            ++prof.skipped;
            continue;
        }
        const double t_in = cross_ratio(in, x1, x2, x3, x4);
        const double t_out = cross_ratio(out, x1, x2, x3, x4);
        if (!std::isfinite(t_in) || !std::isfinite(t_out) || t_in <= 0.0) {
            ++prof.skipped;
            continue;
        }
        ++prof.used;
        prof.max_out_over_in = std::max(prof.max_out_over_in, t_out / t_in);
        if (t_in >= lo && t_in < hi) {
            const std::size_t b = std::min(
                bins - 1, static_cast<std::size_t>(std::floor(
                              std::log(t_in / lo) / std::log(hi / lo) * static_cast<double>(bins))));
            if (std::isnan(prof.eta_hat[b]) || t_out > prof.eta_hat[b]) prof.eta_hat[b] = t_out;
        }
        if (prof.pairs.size() < keep_pairs) prof.pairs.emplace_back(t_in, t_out);
    }
    if (prof.used == 0)
        fail(errc::too_few_points, "crossratio_distortion: no valid quadruple");
    return prof;
}

// CSV round trip.  Comment lines carry kind and basepoint; the header names
// the coordinate columns then one column per label; each row is a label, its
// coordinates, and its distance row.
inline void save_space_csv(const sampled_space& s, const std::string& path) {
    std::ofstream f(path);
    if (!f) fail(errc::invalid_argument, "save_space_csv: cannot open '" + path + "'");
    f << "# kind=" << (s.kind() == space_kind::metric ? "metric" : "quasimetric") << "\n";
    if (s.basepoint()) f << "# basepoint=" << s.labels()[*s.basepoint()] << "\n";
    const std::size_t dim = s.coords().empty() ? 0 : s.coords().front().size();
    f << "label";
    for (std::size_t c = 0; c < dim; ++c) f << ",x" << c;
    for (const auto& l : s.labels()) f << "," << l;
    f << "\n";
    f.precision(17);
    for (std::size_t i = 0; i < s.size(); ++i) {
        f << s.labels()[i];
        for (std::size_t c = 0; c < dim; ++c) f << "," << s.coords()[i][c];
        for (std::size_t j = 0; j < s.size(); ++j) f << "," << s.at(i, j);
        f << "\n";
    }
    if (!f) fail(errc::invalid_argument, "save_space_csv: write failed for '" + path + "'");
}

inline sampled_space load_space_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(errc::invalid_argument, "load_space_csv: cannot open '" + path + "'");
    std::string line;
    space_kind kind = space_kind::quasimetric;
    std::string basepoint_label;
    // Comments, then header.
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line.rfind("# kind=", 0) == 0) {
            const std::string v = line.substr(7);
            if (v == "metric") kind = space_kind::metric;
            else if (v == "quasimetric") kind = space_kind::quasimetric;
            else fail(errc::config_invalid, "load_space_csv: unknown kind '" + v + "'");
            continue;
        }
        if (line.rfind("# basepoint=", 0) == 0) {
            basepoint_label = line.substr(12);
            continue;
        }
        if (line.rfind("#", 0) == 0) continue;
        break;  // header line reached
    }
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.empty() || header.front() != "label")
        fail(errc::config_invalid, "load_space_csv: missing 'label' header");
    std::size_t dim = 0;
    while (1 + dim < header.size() && header[1 + dim].rfind("x", 0) == 0 &&
           header[1 + dim].size() > 1 &&
           header[1 + dim].find_first_not_of("0123456789", 1) == std::string::npos)
        ++dim;
    const std::size_t n = header.size() - 1 - dim;
    std::vector<std::string> labels(header.begin() + 1 + dim, header.end());
    std::vector<std::vector<double>> coords(dim > 0 ? n : 0);
    std::vector<double> dist(n * n, 0.0);
    std::size_t row = 0;
    while (std::getline(f, line)) {
        if (line.empty() || line.rfind("#", 0) == 0) continue;
        if (row >= n) fail(errc::config_invalid, "load_space_csv: too many rows");
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        if (cell != labels[row])
            fail(errc::config_invalid, "load_space_csv: row label mismatch at '" + cell + "'");
        for (std::size_t c = 0; c < dim; ++c) {
            if (!std::getline(ss, cell, ','))
                fail(errc::config_invalid, "load_space_csv: short row");
            coords[row].push_back(std::stod(cell));
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::getline(ss, cell, ','))
                fail(errc::config_invalid, "load_space_csv: short row");
            dist[row * n + j] = std::stod(cell);
        }
        ++row;
    }
    if (row != n) fail(errc::config_invalid, "load_space_csv: missing rows");
    std::optional<std::size_t> basepoint;
    if (!basepoint_label.empty()) {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == basepoint_label) basepoint = i;
        if (!basepoint)
            fail(errc::config_invalid, "load_space_csv: basepoint label not in sample");
    }
    return sampled_space(std::move(labels), std::move(coords), std::move(dist), kind, basepoint);
}

}  // namespace solvgeo
