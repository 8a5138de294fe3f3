#pragma once

#include <stdexcept>
#include <string>

namespace solvgeo {

enum class errc {
    non_increasing_exponents,
    dimension_mismatch,
    single_block_spectrum,
    multi_block_spectrum,
    too_few_vertices,
    non_positive_radius,
    step_size_underflow,
    basepoint_degenerate,
    not_same_leaf,
    empty_family,
    unbounded_box,
    too_few_points,
    sparse_neighborhood,
    foliation_broken,
    inconsistent_pair,
    not_quasisymmetric,
    config_invalid,
    campaign_failed,
    config_hash_mismatch,
    invalid_argument,
};

inline const char* errc_name(errc c) {
    switch (c) {
    case errc::non_increasing_exponents: return "NonIncreasingExponents";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::single_block_spectrum: return "SingleBlockSpectrum";
    case errc::multi_block_spectrum: return "MultiBlockSpectrum";
    case errc::too_few_vertices: return "TooFewVertices";
    case errc::non_positive_radius: return "NonPositiveRadius";
    case errc::step_size_underflow: return "StepSizeUnderflow";
    case errc::basepoint_degenerate: return "BasepointDegenerate";
    case errc::not_same_leaf: return "NotSameLeaf";
    case errc::empty_family: return "EmptyFamily";
    case errc::unbounded_box: return "UnboundedBox";
    case errc::too_few_points: return "TooFewPoints";
    case errc::sparse_neighborhood: return "SparseNeighborhood";
    case errc::foliation_broken: return "FoliationBroken";
    case errc::inconsistent_pair: return "InconsistentPair";
    case errc::not_quasisymmetric: return "NotQuasisymmetric";
    case errc::config_invalid: return "ConfigInvalid";
    case errc::campaign_failed: return "CampaignFailed";
    case errc::config_hash_mismatch: return "ConfigHashMismatch";
    case errc::invalid_argument: return "InvalidArgument";
    }
    return "UnknownError";
}

class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

inline void require(bool ok, errc code, const std::string& what) {
    if (!ok) fail(code, what);
}

}  // namespace solvgeo
