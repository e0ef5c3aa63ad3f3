#pragma once

#include "wsc/model.hpp"
#include "wsc/quantize.hpp"
#include "wsc/types.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace wsc {

struct ClassScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;
    bool absent = false; // class seen in neither labels nor predictions
};

// Macro-averaged scores: f1 is the unweighted mean of the per-class F1
// values, each 2PR/(P+R) with the 0/0 -> 0 convention.
struct EvalReport {
    double f1 = 0.0;
    double top1 = 0.0;
    std::vector<ClassScore> per_class;
    std::uint64_t samples = 0;
};

// Baseline validation F1 that accepted solutions must meet or exceed.
struct Threshold {
    double tau = 0.0;
};

/// Final-layer outputs before any softmax (softmax does not change the
/// argmax, so classification works on these directly).
MatrixF forward_logits(const ModelSpec& model, const MatrixF& features);

/// Predicted class per sample: argmax of the final layer, ties resolved to
/// the lowest class index.
std::vector<std::uint32_t> forward(const ModelSpec& model, const MatrixF& features);

EvalReport macro_f1(const std::vector<std::uint32_t>& predictions,
                    const std::vector<std::uint32_t>& labels, std::uint32_t num_classes);

EvalReport evaluate(const ModelSpec& model, const Dataset& data);

/// Evaluates the quantized network: theta is replaced by its per-bin
/// centroids, written back into the model, and scored on `data`.
EvalReport evaluate_codebook(const ModelSpec& model, const ParameterVector& theta,
                             const Codebook& codebook, const Dataset& data);

struct TrainConfig {
    std::vector<std::uint32_t> arch; // layer widths, input first
    std::uint32_t epochs = 200;
    double learning_rate = 0.05;
    std::uint32_t batch_size = 32;
    std::uint64_t seed = 0;
};

/// Seeded initial network for `arch`: ReLU hidden layers, softmax output.
ModelSpec init_model(const std::vector<std::uint32_t>& arch, std::uint64_t seed);

/// Plain softmax cross-entropy SGD, single-threaded, bit-reproducible for a
/// fixed seed. epochs == 0 returns the seeded initial model unchanged.
ModelSpec train_baseline(const TrainConfig& config, const Dataset& train);

struct BlobConfig {
    std::uint32_t num_classes = 3;
    std::uint32_t samples_per_class = 200;
    double spread = 0.3;
    std::uint64_t seed = 0;
};

struct BlobSplits {
    Dataset train;
    Dataset validation;
    Dataset test;
};

/// 2-D Gaussian clusters at seeded centers. Per class, samples_per_class
/// training samples plus an equally sized held-out pool, of which 10% goes
/// to validation and the rest to test; validation and test are disjoint.
BlobSplits make_blobs(const BlobConfig& config);

// EvalReport serializes to JSON with keys f1, top1, per_class, samples.
std::string report_to_json(const EvalReport& report);
void save_report_json(const EvalReport& report, const std::filesystem::path& path);

} // namespace wsc
