#pragma once

#include "wsc/eval.hpp"
#include "wsc/model.hpp"
#include "wsc/quantize.hpp"
#include "wsc/types.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace wsc {

enum class MergeDecision : std::uint8_t { left, right, keep };

const char* to_string(MergeDecision decision);

/// Argmax over (f_left, f_right, f_curr) with first-listed-wins tie order:
/// left beats right beats keep. A merge that leaves the score unchanged is
/// therefore committed, which is what lets the sweep keep shrinking the
/// codebook while the score plateaus.
MergeDecision tie_break(double f_left, double f_right, double f_curr);

/// Merges adjacent bins i and j == i+1: interval [lower_i, upper_j],
/// cardinality-weighted centroid, indices remapped, d reduced by one.
Codebook merge_bins(const Codebook& codebook, std::size_t i, std::size_t j);

struct MergeStep {
    std::size_t pointer = 0;
    bool has_left = false;
    bool has_right = false;
    double f_left = 0.0;  // valid when has_left
    double f_right = 0.0; // valid when has_right
    double f_curr = 0.0;  // score after applying this step's decision
    MergeDecision decision = MergeDecision::keep;
    std::size_t d_after = 0;
};

struct MergeState {
    Codebook codebook;
    std::size_t pointer = 0;
    double f_curr = 0.0;
    std::vector<MergeStep> history;
};

struct MergeResult {
    Codebook codebook;
    EvalReport report;
    std::vector<MergeStep> history;
};

/// Pointer sweep from the first bin. At each position the left and right
/// neighbor merges are scored on the validation split; the best of
/// (f_left, f_right, f_curr) decides. A committed merge keeps the pointer
/// on the merged bin so the losing neighbor can be retried; otherwise the
/// pointer advances. Terminates when the pointer reaches the last bin.
/// Validation F1 never decreases.
MergeResult iterative_merge(const ParameterVector& theta, const ModelSpec& model,
                            const Codebook& codebook, const Dataset& validation);

/// JSON lines, one record per attempted step:
/// {"pointer":..,"f_L":..,"f_R":..,"f_curr":..,"decision":..,"d_after":..}
/// with null for an absent neighbor.
void write_merge_log(const std::vector<MergeStep>& history, const std::filesystem::path& path);
std::vector<MergeStep> load_merge_log(const std::filesystem::path& path);

} // namespace wsc
