#pragma once

#include "wsc/model.hpp"
#include "wsc/quantize.hpp"
#include "wsc/types.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace wsc {

// Canonical Huffman code over bin indices. Only the lengths are needed to
// reproduce the codes: symbols are sorted by (length, index) and assigned
// consecutive codewords.
struct HuffmanTable {
    std::vector<std::uint8_t> lengths; // bits per bin index
    std::vector<std::uint64_t> codes;  // canonical codeword, low `length` bits

    std::size_t size() const { return lengths.size(); }
};

/// Optimal prefix code for the bins, built over frequencies |C_i| + 1 (each
/// bin's members plus its codebook entry). d == 1 gets a single 1-bit code.
/// Tree ties break toward the lower bin index.
HuffmanTable build_huffman(const std::vector<std::uint64_t>& cardinalities);

/// Rebuilds canonical codewords from stored lengths (e.g. from a WSHC file).
HuffmanTable huffman_from_lengths(std::vector<std::uint8_t> lengths);

/// Concatenated codewords, MSB-first, zero-padded to a byte boundary.
/// bit_length_out (optional) receives the unpadded length in bits.
std::vector<std::uint8_t> encode_indices(const std::vector<std::uint32_t>& indices,
                                         const HuffmanTable& table,
                                         std::uint64_t* bit_length_out = nullptr);

/// Decodes exactly `count` indices; trailing padding bits are ignored.
/// Throws io_error on a truncated stream or an invalid codeword.
std::vector<std::uint32_t> decode_indices(const std::vector<std::uint8_t>& payload,
                                          const HuffmanTable& table, std::size_t count);

/// ceil(log2 d): bits for fixed-width bin indices; 0 when d == 1.
std::uint32_t fixed_index_bits(std::size_t d);

/// Fixed-length compression ratio,
///   N*32 / (d*32 + ceil(log2 d) * sum_i (|C_i| + 1)).
double cr_fixed(std::uint64_t n, const std::vector<std::uint64_t>& cardinalities);

/// Variable-length compression ratio,
///   N*32 / (d*32 + sum_i b_i * (|C_i| + 1)).
double cr_huffman(std::uint64_t n, const std::vector<std::uint64_t>& cardinalities,
                  const HuffmanTable& table);

/// Frequency-weighted mean code length, sum_i b_i*(|C_i|+1) / sum_i (|C_i|+1).
double avg_bits(const HuffmanTable& table, const std::vector<std::uint64_t>& cardinalities);

struct CompressionReport {
    std::uint64_t n = 0;
    std::uint64_t d = 0;
    std::uint32_t weight_bits = 32;
    std::uint32_t fixed_bits = 0;
    double avg_bits = 0.0;
    double cr_fixed = 0.0;
    double cr_huffman = 0.0;
};

CompressionReport make_compression_report(std::uint64_t n,
                                          const std::vector<std::uint64_t>& cardinalities,
                                          const HuffmanTable& table);

// Compressed-model file: magic "WSHC", u16 version=1, u64 N, u32 d,
// f32 centroids x d, u8 code lengths x d (canonical Huffman), u64 payload
// bit length, packed bitstream. Numeric fields little-endian. Together with
// a ModelSpec skeleton this reconstructs the quantized model.
void save_compressed(const Codebook& codebook, const HuffmanTable& table,
                     const std::filesystem::path& path);

struct CompressedModel {
    std::uint64_t n = 0;
    std::vector<float> centroids;
    HuffmanTable table;
    std::vector<std::uint32_t> indices;
};

CompressedModel load_compressed(const std::filesystem::path& path);

/// Rebuilds the quantized network from a decoded WSHC payload and a model
/// skeleton providing the layer shapes.
ModelSpec apply_compressed(const ModelSpec& skeleton, const CompressedModel& compressed);

} // namespace wsc
