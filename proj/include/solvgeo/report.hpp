#pragma once

// Campaign reports: per-check records keyed by shard seed, a monoidal merge
// over shards, JSON-lines emission for machines, and a fixed-width summary
// for humans.  Merging is idempotent (a shard already present is kept as is),
// commutative, and associative; disjoint-seed shards add their counts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace solvgeo {

// How a check compares its observation to its bound:
//   upper: worst <= bound, worst max-merged across shards;
//   lower: worst >= bound, worst min-merged (conservative);
//   band:  lo/hi are min/max-merged ratios, worst = hi/lo <= bound.
enum class check_kind { upper, lower, band };

struct check_record {
    std::string campaign;
    std::string check;
    check_kind kind = check_kind::upper;
    bool passed = true;
    std::size_t count = 0;
    double worst = 0.0;
    double bound = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    std::vector<std::string> witnesses;
};

inline constexpr std::size_t witness_cap = 8;

namespace detail {

inline void cap_witnesses(std::vector<std::string>& w) {
    std::sort(w.begin(), w.end());
    w.erase(std::unique(w.begin(), w.end()), w.end());
    if (w.size() > witness_cap) w.resize(witness_cap);
}

}  // namespace detail

inline check_record upper_check(std::string campaign, std::string check, double worst,
                                double bound, std::size_t count,
                                std::vector<std::string> witnesses = {}) {
    check_record r;
    r.campaign = std::move(campaign);
    r.check = std::move(check);
    r.kind = check_kind::upper;
    r.worst = worst;
    r.bound = bound;
    r.count = count;
    r.passed = worst <= bound;
    r.witnesses = std::move(witnesses);
    detail::cap_witnesses(r.witnesses);
    return r;
}

inline check_record lower_check(std::string campaign, std::string check, double worst,
                                double bound, std::size_t count,
                                std::vector<std::string> witnesses = {}) {
    check_record r = upper_check(std::move(campaign), std::move(check), worst, bound, count,
                                 std::move(witnesses));
    r.kind = check_kind::lower;
    r.passed = worst >= bound;
    return r;
}

inline check_record band_check(std::string campaign, std::string check, double lo, double hi,
                               double bound, std::size_t count,
                               std::vector<std::string> witnesses = {}) {
    require(lo > 0.0 && hi >= lo, errc::invalid_argument,
            "band_check needs 0 < lo <= hi");
    check_record r = upper_check(std::move(campaign), std::move(check), hi / lo, bound, count,
                                 std::move(witnesses));
    r.kind = check_kind::band;
    r.lo = lo;
    r.hi = hi;
    return r;
}

struct report {
    std::string config_hash;
    // Shard seed -> that shard's checks.  A shard is the unit of idempotence:
    // re-merging a seed already present is a no-op.
    std::map<std::uint64_t, std::vector<check_record>> shards;

    void add(std::uint64_t seed, check_record rec) { shards[seed].push_back(std::move(rec)); }

    [[nodiscard]] std::vector<std::uint64_t> seeds() const {
        std::vector<std::uint64_t> out;
        for (const auto& [s, _] : shards) out.push_back(s);
        return out;
    }
};

namespace detail {

inline check_record merge_records(const check_record& a, const check_record& b) {
    require(a.kind == b.kind, errc::inconsistent_pair,
            "merge: check '" + a.campaign + "." + a.check + "' changed kind across shards");
    check_record out = a;
    out.count += b.count;
    out.bound = std::max(a.bound, b.bound);
    switch (a.kind) {
        case check_kind::upper:
            out.worst = std::max(a.worst, b.worst);
            out.passed = out.worst <= out.bound;
            break;
        case check_kind::lower:
            out.worst = std::min(a.worst, b.worst);
            out.bound = std::min(a.bound, b.bound);
            out.passed = out.worst >= out.bound;
            break;
        case check_kind::band:
            out.lo = std::min(a.lo, b.lo);
            out.hi = std::max(a.hi, b.hi);
            out.worst = out.hi / out.lo;
            out.passed = out.worst <= out.bound;
            break;
    }
    out.witnesses.insert(out.witnesses.end(), b.witnesses.begin(), b.witnesses.end());
    cap_witnesses(out.witnesses);
    return out;
}

}  // namespace detail

// Cross-shard aggregation, sorted by (campaign, check).
inline std::vector<check_record> aggregate(const report& rep) {
    std::map<std::pair<std::string, std::string>, check_record> merged;
    for (const auto& [seed, checks] : rep.shards)
        for (const auto& rec : checks) {
            const auto key = std::make_pair(rec.campaign, rec.check);
            auto it = merged.find(key);
            if (it == merged.end())
                merged.emplace(key, rec);
            else
                it->second = detail::merge_records(it->second, rec);
        }
    std::vector<check_record> out;
    out.reserve(merged.size());
    for (auto& [_, rec] : merged) out.push_back(std::move(rec));
    return out;
}

inline bool all_passed(const report& rep) {
    for (const auto& rec : aggregate(rep))
        if (!rec.passed) return false;
    return !rep.shards.empty();
}

// Monoidal merge of two shard sets produced under the same configuration.
inline report report_merge(const report& a, const report& b) {
    require(a.config_hash == b.config_hash, errc::config_hash_mismatch,
            "report_merge: shards come from different configurations");
    report out = a;
    for (const auto& [seed, checks] : b.shards)
        out.shards.emplace(seed, checks);  // an existing seed wins: idempotence
    return out;
}

inline const char* kind_name(check_kind k) {
    switch (k) {
        case check_kind::upper: return "upper";
        case check_kind::lower: return "lower";
        case check_kind::band: return "band";
    }
    return "upper";
}

// JSON-lines form: one header object, then one object per aggregated check.
inline std::string to_jsonl(const report& rep) {
    std::string out;
    {
        nlohmann::json header;
        header["config_hash"] = rep.config_hash;
        header["seeds"] = rep.seeds();
        out += header.dump();
        out += '\n';
    }
    for (const auto& rec : aggregate(rep)) {
        nlohmann::json j;
        j["campaign"] = rec.campaign;
        j["check"] = rec.check;
        j["kind"] = kind_name(rec.kind);
        j["passed"] = rec.passed;
        j["count"] = rec.count;
        j["worst"] = rec.worst;
        j["bound"] = rec.bound;
        if (rec.kind == check_kind::band) {
            j["lo"] = rec.lo;
            j["hi"] = rec.hi;
        }
        j["witnesses"] = rec.witnesses;
        out += j.dump();
        out += '\n';
    }
    return out;
}

// Fixed-width human summary; one row per aggregated check plus a verdict.
inline std::string to_summary(const report& rep) {
    std::ostringstream out;
    const auto checks = aggregate(rep);
    out << "config " << rep.config_hash << ", " << rep.shards.size() << " shard(s)\n";
    out << std::left;
    out.setf(std::ios::scientific, std::ios::floatfield);
    out.precision(3);
    for (const auto& rec : checks) {
        out.width(18);
        out << rec.campaign;
        out.width(34);
        out << rec.check;
        out.width(6);
        out << (rec.passed ? "pass" : "FAIL");
        out.width(13);
        out << rec.worst;
        out << (rec.kind == check_kind::lower ? ">= " : "<= ");
        out.width(13);
        out << rec.bound;
        out << "n=" << rec.count << "\n";
    }
    std::size_t failed = 0;
    for (const auto& rec : checks)
        if (!rec.passed) ++failed;
    out << (failed == 0 ? "ALL PASS" : "FAILED") << " (" << checks.size() - failed << "/"
        << checks.size() << " checks)\n";
    return out.str();
}

// Write <dir>/<stem>.report.jsonl and <dir>/<stem>.summary.txt.
inline void write_report(const report& rep, const std::string& dir, const std::string& stem) {
    std::filesystem::create_directories(dir);
    const auto base = std::filesystem::path(dir) / stem;
    {
        std::ofstream f(base.string() + ".report.jsonl");
        require(f.good(), errc::invalid_argument, "cannot open report file for writing");
        f << to_jsonl(rep);
        require(f.good(), errc::invalid_argument, "write to report file failed");
    }
    {
        std::ofstream f(base.string() + ".summary.txt");
        require(f.good(), errc::invalid_argument, "cannot open summary file for writing");
        f << to_summary(rep);
        require(f.good(), errc::invalid_argument, "write to summary file failed");
    }
}

}  // namespace solvgeo
