#pragma once

#include "wsc/model.hpp"
#include "wsc/types.hpp"

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

namespace wsc {

// Uniform binning request: k equal-width bins of width delta spanning
// [theta_min, theta_max].
struct BinningRequest {
    std::uint32_t k = 0;
    double theta_min = 0.0;
    double theta_max = 0.0;
    double delta = 0.0;
};

BinningRequest make_binning_request(double theta_min, double theta_max, std::uint32_t k);

/// Exact min/max of theta. Throws on fewer than two values or a constant
/// vector (degenerate range).
std::pair<double, double> compute_range(const ParameterVector& theta);

struct Bin {
    double lower = 0.0;
    double upper = 0.0;
    double centroid = 0.0;
    std::uint64_t cardinality = 0;
};

// Quantization result after empty-bin removal: d surviving bins in interval
// order and one bin index per weight. Intervals are half-open [lower, upper)
// except the last, which is closed.
struct Codebook {
    std::uint32_t k_requested = 0;
    std::vector<Bin> bins;
    std::vector<std::uint32_t> indices;

    std::size_t d() const { return bins.size(); }
    std::size_t n() const { return indices.size(); }
    std::vector<std::uint64_t> cardinalities() const;
    double delta() const; // (theta_max - theta_min) / k_requested
};

/// Single-pass uniform binning of theta into k bins; empty bins are removed
/// and survivors re-indexed densely, preserving interval order. Centroids
/// are the plain per-bin means, accumulated in double.
Codebook uniform_bin(const ParameterVector& theta, std::uint32_t k);
Codebook uniform_bin(const ParameterVector& theta, const BinningRequest& request);

/// Structural invariants: non-empty sorted bins, centroid containment,
/// cardinalities matching the index histogram. Throws invariant_error.
void validate(const Codebook& codebook, std::size_t expected_n = 0);

struct QuantizedModel {
    Codebook codebook;
    ParameterVector reconstructed;
};

/// Per-weight centroid lookup; does not touch theta.
QuantizedModel reconstruct(const ParameterVector& theta, const Codebook& codebook);

/// The reconstructed values alone (centroid of each weight's bin), keeping
/// theta's provenance segments.
ParameterVector reconstruct_values(const ParameterVector& theta, const Codebook& codebook);

// Codebook file: magic "WSCB", u16 version=1, u32 k_requested, u32 d, u64 N,
// d records of {f64 lower, f64 upper, f64 centroid, u64 cardinality}, then
// the index stream packed as fixed-width ceil(log2 d)-bit MSB-first
// integers, zero-padded to a byte boundary. JSON mirror accepted on load.
void save_codebook(const Codebook& codebook, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);
void save_codebook_json(const Codebook& codebook, const std::filesystem::path& path);

} // namespace wsc
