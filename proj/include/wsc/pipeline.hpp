#pragma once

#include "wsc/codec.hpp"
#include "wsc/eval.hpp"
#include "wsc/merge.hpp"
#include "wsc/moea.hpp"
#include "wsc/types.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace wsc {

// Stages communicate exclusively through files under out_dir so each
// subcommand is independently runnable and resumable.
struct PipelineConfig {
    std::filesystem::path out_dir = "out";

    // Explicit inputs; when empty the stage outputs under out_dir are used.
    std::filesystem::path model_path;
    std::filesystem::path train_path;
    std::filesystem::path validation_path;
    std::filesystem::path test_path;

    std::optional<BlobConfig> blobs; // dataset generator
    TrainConfig trainer;
    MoeaConfig moea;
    std::uint32_t random_ub_k = 1024;
    bool skip_merge = false;
    bool skip_huffman = false;
};

/// Parses the JSON config file. The WSC_OUT_DIR environment variable
/// overrides out_dir; CLI flags override both.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct PipelineOverrides {
    std::optional<std::filesystem::path> out_dir;
    std::optional<std::uint64_t> seed; // reseeds blobs/trainer/moea as seed, seed+1, seed+2
    std::optional<std::uint32_t> random_ub_k;
    bool skip_merge = false;
    bool skip_huffman = false;
};

void apply_overrides(PipelineConfig& config, const PipelineOverrides& overrides);

// Artifact locations under out_dir.
struct Artifacts {
    explicit Artifacts(const PipelineConfig& config);

    std::filesystem::path model;
    std::filesystem::path train;
    std::filesystem::path validation;
    std::filesystem::path test;
    std::filesystem::path baseline_report;
    std::filesystem::path random_ub_codebook;
    std::filesystem::path random_ub_report;
    std::filesystem::path front_csv;
    std::filesystem::path front_json;
    std::filesystem::path merged_summary;
    std::filesystem::path report_json;
    std::filesystem::path report_csv;

    std::filesystem::path accepted_codebook(std::uint32_t k) const;
    std::filesystem::path merged_codebook(std::uint32_t k) const;
    std::filesystem::path merge_log(std::uint32_t k) const;
    std::filesystem::path compressed(std::uint32_t k) const;
    std::filesystem::path compression_report(std::uint32_t k) const;

private:
    std::filesystem::path dir_;
};

/// Trains the baseline (generating blob datasets first when configured) and
/// writes the model plus the baseline report containing tau.
void cmd_train(const PipelineConfig& config);

/// Uniform binning with the configured fixed k; writes the codebook and a
/// report with d, F1 and compression ratios.
CompressionReport cmd_random_ub(const PipelineConfig& config);

/// NSGA-II search; writes front.csv / front.json and the accepted
/// solutions' codebooks.
void cmd_search(const PipelineConfig& config);

/// Iterative merge of every accepted solution, re-filtered by tau; writes
/// merged codebooks, per-solution merge logs and a summary.
void cmd_merge(const PipelineConfig& config);

/// Huffman-encodes the merged (or, with skip_merge, accepted) codebooks
/// into WSHC files with per-solution compression reports.
void cmd_encode(const PipelineConfig& config);

/// Aggregates the Baseline / Random UB / MO-UB / MO-UB+M / MO-UB+M+H table.
void cmd_report(const PipelineConfig& config);

/// All stages in order, honoring the skip flags.
void cmd_run_all(const PipelineConfig& config);

} // namespace wsc
