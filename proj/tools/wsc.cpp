#include "wsc/pipeline.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

namespace {

struct CliOptions {
    std::string config_path = "wsc.json";
    std::string out_dir;
    std::int64_t seed = -1;
    std::int64_t random_ub_k = -1;
    bool skip_merge = false;
    bool skip_huffman = false;
};

wsc::PipelineConfig resolve_config(const CliOptions& options) {
    wsc::PipelineConfig config = wsc::load_pipeline_config(options.config_path);
    wsc::PipelineOverrides overrides;
    if (!options.out_dir.empty()) overrides.out_dir = options.out_dir;
    if (options.seed >= 0) overrides.seed = static_cast<std::uint64_t>(options.seed);
    if (options.random_ub_k >= 0)
        overrides.random_ub_k = static_cast<std::uint32_t>(options.random_ub_k);
    overrides.skip_merge = options.skip_merge;
    overrides.skip_huffman = options.skip_huffman;
    wsc::apply_overrides(config, overrides);
    return config;
}

void add_common_flags(CLI::App* cmd, CliOptions& options, bool with_k = false) {
    cmd->add_option("--config", options.config_path, "pipeline config file (JSON)")
        ->capture_default_str();
    cmd->add_option("--out", options.out_dir, "output directory override");
    cmd->add_option("--seed", options.seed, "override all seeds from this base value");
    cmd->add_flag("--skip-merge", options.skip_merge, "skip the iterative merge stage");
    cmd->add_flag("--skip-huffman", options.skip_huffman, "skip Huffman encoding");
    if (with_k) cmd->add_option("--k", options.random_ub_k, "bin count for random-ub");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"weight-sharing compression pipeline"};
    app.require_subcommand(1);

    CliOptions options;
    CLI::App* train = app.add_subcommand("train", "train the baseline model and record tau");
    CLI::App* random_ub =
        app.add_subcommand("random-ub", "uniform binning with a fixed k (sanity run)");
    CLI::App* search = app.add_subcommand("search", "NSGA-II search for Pareto-optimal k");
    CLI::App* merge = app.add_subcommand("merge", "iterative merge of accepted solutions");
    CLI::App* encode = app.add_subcommand("encode", "Huffman-encode codebooks to WSHC files");
    CLI::App* report = app.add_subcommand("report", "aggregate the final comparison table");
    CLI::App* run_all = app.add_subcommand("run-all", "run every stage in order");
    for (CLI::App* cmd : {train, search, merge, encode, report, run_all})
        add_common_flags(cmd, options);
    add_common_flags(random_ub, options, /*with_k=*/true);

    CLI11_PARSE(app, argc, argv);

    try {
        const wsc::PipelineConfig config = resolve_config(options);
        if (train->parsed()) wsc::cmd_train(config);
        if (random_ub->parsed()) wsc::cmd_random_ub(config);
        if (search->parsed()) wsc::cmd_search(config);
        if (merge->parsed()) wsc::cmd_merge(config);
        if (encode->parsed()) wsc::cmd_encode(config);
        if (report->parsed()) wsc::cmd_report(config);
        if (run_all->parsed()) wsc::cmd_run_all(config);
    } catch (const wsc::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const wsc::io_error& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
