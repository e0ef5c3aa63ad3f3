#pragma once

#include "wsc/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace wsc {

enum class Activation : std::uint8_t { relu = 0, identity = 1, softmax_output = 2 };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct DenseLayer {
    std::uint32_t in_dim = 0;
    std::uint32_t out_dim = 0;
    MatrixF weights; // in_dim x out_dim
    VectorF bias;    // out_dim
    Activation activation = Activation::relu;
};

struct ModelSpec {
    std::vector<DenseLayer> layers;
};

std::size_t param_count(const ModelSpec& model);

/// Checks layer dimension chaining, tensor shapes and value finiteness.
/// Throws invariant_error naming the offending tensor.
void validate(const ModelSpec& model);

struct Segment {
    std::string tensor_id;
    std::size_t offset = 0;
    std::size_t length = 0;
};

// Flattened view of every weight and bias in the network, with a
// provenance map back to the layer tensors it came from.
struct ParameterVector {
    VectorF values;
    std::vector<Segment> segments;

    std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

/// Flattens all parameters into one vector: layers in declaration order,
/// weight matrix row-major first, then bias.
ParameterVector flatten(const ModelSpec& model);

/// Writes theta's values back into a copy of `model`, preserving shapes and
/// activation metadata. Inverse of flatten.
ModelSpec unflatten(const ParameterVector& theta, const ModelSpec& model);

enum class Split : std::uint8_t { train = 0, validation = 1, test = 2 };

struct Dataset {
    MatrixF features; // rows = samples
    std::vector<std::uint32_t> labels;
    std::uint32_t num_classes = 0;
    Split split = Split::train;

    std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
};

void validate(const Dataset& data);

// Binary model file: magic "WSNN", u16 version=1, u32 layer_count, then per
// layer u32 in_dim, u32 out_dim, u8 activation, f32 weights row-major,
// f32 bias. All integers and floats little-endian. A JSON mirror (see
// README) is accepted by the loaders for hand-written fixtures.
void save_model(const ModelSpec& model, const std::filesystem::path& path);
ModelSpec load_model(const std::filesystem::path& path);
void save_model_json(const ModelSpec& model, const std::filesystem::path& path);

// Binary dataset file: magic "WSDS", u16 version=1, u32 rows, u32 cols,
// u32 num_classes, f32 features row-major, u32 labels. Little-endian.
void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset_json(const Dataset& data, const std::filesystem::path& path);

} // namespace wsc
