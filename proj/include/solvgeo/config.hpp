#pragma once

// Campaign configuration: one structured JSON file with nested sections for
// counts, tolerances, and exponent values.  Every constant the theory leaves
// unpinned (the hyperbolicity reference delta_hat, the exponents epsilon_0
// and epsilon_1, the chain-comparison constant c) lives here with documented
// defaults; a zero requests the spectrum-derived default.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "spectrum.hpp"
#include "visual.hpp"

namespace solvgeo {

struct campaign_config {
    std::vector<block> spectrum_blocks{{1, 1.0}, {1, 2.0}};
    std::uint64_t seed = 7;

    // counts
    std::size_t pairs = 200;
    std::size_t triples = 200;
    std::size_t quadruples = 10000;
    std::size_t points = 48;  // boundary sample size for table campaigns

    // tolerances
    double tol_root = 1e-10;      // root solves inside the distance engine
    double tol_distance = 1e-4;   // relative distance error vs closed forms
    double profile_slack = 0.25;  // allowed relative growth of stability bands

    // exponents; zero means "use the spectrum-derived default"
    double epsilon = 0.0;    // visual exponent for quasimetric tables
    double epsilon0 = 0.0;   // chain-sandwich exponent cap
    double epsilon1 = 0.0;   // metric-behavior threshold
    double chain_c = 0.5;    // lower chain-comparison factor
    double delta_hat = 0.0;  // hyperbolicity reference scale

    std::vector<std::size_t> resolutions{64, 128, 256};
    std::string out_dir = "reports";

    [[nodiscard]] spectrum sp() const { return build_spectrum(spectrum_blocks); }
    [[nodiscard]] double eps0(const spectrum& s) const {
        return epsilon0 > 0.0 ? epsilon0 : epsilon0_default(s);
    }
    [[nodiscard]] double eps1(const spectrum& s) const {
        return epsilon1 > 0.0 ? epsilon1 : epsilon1_default(s);
    }
    [[nodiscard]] double eps(const spectrum& s) const {
        return epsilon > 0.0 ? epsilon : eps0(s);
    }
    [[nodiscard]] double dhat(const spectrum& s) const {
        return delta_hat > 0.0 ? delta_hat : solvgeo::delta_hat(s);
    }
};

inline void validate_config(const campaign_config& cfg) {
    spectrum s;
    try {
        s = cfg.sp();
    } catch (const error& e) {
        fail(errc::config_invalid, std::string("config spectrum rejected: ") + e.what());
    }
    require(cfg.pairs >= 1 && cfg.triples >= 1 && cfg.quadruples >= 1 && cfg.points >= 1,
            errc::config_invalid, "config counts must be >= 1");
    require(cfg.tol_root > 0.0 && cfg.tol_distance > 0.0 && cfg.profile_slack > 0.0,
            errc::config_invalid, "config tolerances must be > 0");
    require(cfg.epsilon >= 0.0 && cfg.epsilon0 >= 0.0 && cfg.epsilon1 >= 0.0 &&
                cfg.delta_hat >= 0.0,
            errc::config_invalid, "config exponents must be >= 0");
    require(cfg.chain_c > 0.0 && cfg.chain_c <= 1.0, errc::config_invalid,
            "config chain factor must lie in (0, 1]");
    // Chain metrization only keeps the half-to-one sandwich below the cap.
    require(cfg.eps(s) <= cfg.eps0(s) * (1.0 + 1e-12), errc::config_invalid,
            "config epsilon exceeds the chain-sandwich cap epsilon0");
    require(!cfg.resolutions.empty(), errc::config_invalid,
            "config needs at least one grid resolution");
    for (std::size_t m : cfg.resolutions)
        require(m >= 1, errc::config_invalid, "grid resolutions must be >= 1");
    require(!cfg.out_dir.empty(), errc::config_invalid, "config output directory is empty");
}

namespace detail {

template <typename T>
inline void read_field(const nlohmann::json& j, const char* key, T& slot) {
    if (!j.contains(key)) return;
    try {
        slot = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(errc::config_invalid, std::string("config field '") + key + "' has the wrong type");
    }
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                           const char* where) {
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok)
            fail(errc::config_invalid,
                 std::string("unknown config key '") + key + "' in " + where);
    }
}

}  // namespace detail

inline campaign_config parse_config(const nlohmann::json& j) {
    require(j.is_object(), errc::config_invalid, "config root must be an object");
    detail::reject_unknown(
        j, {"spectrum", "seed", "counts", "tolerances", "epsilons", "resolutions", "out_dir"},
        "the config root");
    campaign_config cfg;
    if (j.contains("spectrum")) {
        const auto& spec = j.at("spectrum");
        require(spec.is_array() && !spec.empty(), errc::config_invalid,
                "config spectrum must be a nonempty array of {dim, alpha}");
        cfg.spectrum_blocks.clear();
        for (const auto& entry : spec) {
            require(entry.is_object(), errc::config_invalid,
                    "config spectrum entries must be {dim, alpha} objects");
            detail::reject_unknown(entry, {"dim", "alpha"}, "a spectrum entry");
            block b;
            std::size_t dim = 0;
            double alpha = 0.0;
            detail::read_field(entry, "dim", dim);
            detail::read_field(entry, "alpha", alpha);
            b.dim = dim;
            b.alpha = alpha;
            cfg.spectrum_blocks.push_back(b);
        }
    }
    detail::read_field(j, "seed", cfg.seed);
    if (j.contains("counts")) {
        const auto& c = j.at("counts");
        detail::reject_unknown(c, {"pairs", "triples", "quadruples", "points"}, "counts");
        detail::read_field(c, "pairs", cfg.pairs);
        detail::read_field(c, "triples", cfg.triples);
        detail::read_field(c, "quadruples", cfg.quadruples);
        detail::read_field(c, "points", cfg.points);
    }
    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        detail::reject_unknown(t, {"root", "distance", "profile_slack"}, "tolerances");
        detail::read_field(t, "root", cfg.tol_root);
        detail::read_field(t, "distance", cfg.tol_distance);
        detail::read_field(t, "profile_slack", cfg.profile_slack);
    }
    if (j.contains("epsilons")) {
        const auto& e = j.at("epsilons");
        detail::reject_unknown(e, {"epsilon", "epsilon0", "epsilon1", "chain_c", "delta_hat"},
                               "epsilons");
        detail::read_field(e, "epsilon", cfg.epsilon);
        detail::read_field(e, "epsilon0", cfg.epsilon0);
        detail::read_field(e, "epsilon1", cfg.epsilon1);
        detail::read_field(e, "chain_c", cfg.chain_c);
        detail::read_field(e, "delta_hat", cfg.delta_hat);
    }
    detail::read_field(j, "resolutions", cfg.resolutions);
    detail::read_field(j, "out_dir", cfg.out_dir);
    validate_config(cfg);
    return cfg;
}

inline campaign_config load_config(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), errc::config_invalid, "cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(errc::config_invalid, std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

// Canonical serialization.  The hash identifies the scientific content a
// report shard was produced under; seed, counts, and output directory are
// shard-varying plumbing and deliberately left out so disjoint-seed shards
// of one campaign share a hash and may be merged.
inline std::string config_canonical(const campaign_config& cfg) {
    nlohmann::json j;
    nlohmann::json spec = nlohmann::json::array();
    for (const auto& b : cfg.spectrum_blocks) spec.push_back({{"dim", b.dim}, {"alpha", b.alpha}});
    j["spectrum"] = spec;
    j["tolerances"] = {{"root", cfg.tol_root},
                       {"distance", cfg.tol_distance},
                       {"profile_slack", cfg.profile_slack}};
    j["epsilons"] = {{"epsilon", cfg.epsilon},
                     {"epsilon0", cfg.epsilon0},
                     {"epsilon1", cfg.epsilon1},
                     {"chain_c", cfg.chain_c},
                     {"delta_hat", cfg.delta_hat}};
    j["resolutions"] = cfg.resolutions;
    return j.dump();
}

inline std::string config_hash(const campaign_config& cfg) {
    // FNV-1a, printed as 16 hex digits.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : config_canonical(cfg)) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << h;
    return out.str();
}

}  // namespace solvgeo
