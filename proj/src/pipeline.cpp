#include "wsc/pipeline.hpp"

#include "io_util.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

namespace wsc {

namespace {

using nlohmann::json;

void require_artifact(const std::filesystem::path& path, const char* producing_stage) {
    if (!std::filesystem::exists(path)) {
        throw io_error("missing artifact " + path.string() + " — run the '" +
                       producing_stage + "' stage first");
    }
}

json parse_json_file(const std::filesystem::path& path) {
    try {
        return json::parse(detail::read_text_file(path));
    } catch (const json::parse_error& e) {
        throw io_error("bad JSON in " + path.string() + ": " + e.what());
    }
}

} // namespace

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw config_error("config file not found: " + path.string());
    json j;
    try {
        j = json::parse(detail::read_text_file(path));
    } catch (const json::parse_error& e) {
        throw config_error("config parse error: " + std::string(e.what()));
    }

    PipelineConfig config;
    try {
        if (j.contains("out_dir")) config.out_dir = j.at("out_dir").get<std::string>();
        if (j.contains("paths")) {
            const auto& p = j.at("paths");
            if (p.contains("model")) config.model_path = p.at("model").get<std::string>();
            if (p.contains("train")) config.train_path = p.at("train").get<std::string>();
            if (p.contains("validation"))
                config.validation_path = p.at("validation").get<std::string>();
            if (p.contains("test")) config.test_path = p.at("test").get<std::string>();
        }
        if (j.contains("blobs")) {
            const auto& b = j.at("blobs");
            BlobConfig blobs;
            blobs.num_classes = b.value("num_classes", blobs.num_classes);
            blobs.samples_per_class = b.value("samples_per_class", blobs.samples_per_class);
            blobs.spread = b.value("spread", blobs.spread);
            blobs.seed = b.value("seed", blobs.seed);
            config.blobs = blobs;
        }
        if (j.contains("trainer")) {
            const auto& t = j.at("trainer");
            config.trainer.arch = t.value("arch", config.trainer.arch);
            config.trainer.epochs = t.value("epochs", config.trainer.epochs);
            config.trainer.learning_rate = t.value("learning_rate", config.trainer.learning_rate);
            config.trainer.batch_size = t.value("batch_size", config.trainer.batch_size);
            config.trainer.seed = t.value("seed", config.trainer.seed);
        }
        if (j.contains("moea")) {
            const auto& m = j.at("moea");
            config.moea.lb = m.value("lb", config.moea.lb);
            config.moea.ub = m.value("ub", config.moea.ub);
            config.moea.np = m.value("np", config.moea.np);
            config.moea.max_iter = m.value("max_iter", config.moea.max_iter);
            config.moea.sbx_eta = m.value("sbx_eta", config.moea.sbx_eta);
            config.moea.sbx_prob = m.value("sbx_prob", config.moea.sbx_prob);
            config.moea.pm_eta = m.value("pm_eta", config.moea.pm_eta);
            config.moea.seed = m.value("seed", config.moea.seed);
        }
        config.random_ub_k = j.value("random_ub_k", config.random_ub_k);
        config.skip_merge = j.value("skip_merge", config.skip_merge);
        config.skip_huffman = j.value("skip_huffman", config.skip_huffman);
    } catch (const json::exception& e) {
        throw config_error("config field error: " + std::string(e.what()));
    }

    if (const char* env = std::getenv("WSC_OUT_DIR"); env != nullptr && *env != '\0')
        config.out_dir = env;

    validate(config.moea);
    if (config.random_ub_k < 2) throw config_error("random_ub_k must be >= 2");
    return config;
}

void apply_overrides(PipelineConfig& config, const PipelineOverrides& overrides) {
    if (overrides.out_dir) config.out_dir = *overrides.out_dir;
    if (overrides.seed) {
        if (config.blobs) config.blobs->seed = *overrides.seed;
        config.trainer.seed = *overrides.seed + 1;
        config.moea.seed = *overrides.seed + 2;
    }
    if (overrides.random_ub_k) config.random_ub_k = *overrides.random_ub_k;
    config.skip_merge = config.skip_merge || overrides.skip_merge;
    config.skip_huffman = config.skip_huffman || overrides.skip_huffman;
}

Artifacts::Artifacts(const PipelineConfig& config) : dir_(config.out_dir) {
    model = config.model_path.empty() ? dir_ / "model.wsnn" : config.model_path;
    train = config.train_path.empty() ? dir_ / "train.wsds" : config.train_path;
    validation =
        config.validation_path.empty() ? dir_ / "validation.wsds" : config.validation_path;
    test = config.test_path.empty() ? dir_ / "test.wsds" : config.test_path;
    baseline_report = dir_ / "baseline_report.json";
    random_ub_codebook = dir_ / "random_ub.wscb";
    random_ub_report = dir_ / "random_ub_report.json";
    front_csv = dir_ / "front.csv";
    front_json = dir_ / "front.json";
    merged_summary = dir_ / "merged.json";
    report_json = dir_ / "report.json";
    report_csv = dir_ / "report.csv";
}

std::filesystem::path Artifacts::accepted_codebook(std::uint32_t k) const {
    return dir_ / ("accepted_k" + std::to_string(k) + ".wscb");
}
std::filesystem::path Artifacts::merged_codebook(std::uint32_t k) const {
    return dir_ / ("merged_k" + std::to_string(k) + ".wscb");
}
std::filesystem::path Artifacts::merge_log(std::uint32_t k) const {
    return dir_ / ("merge_log_k" + std::to_string(k) + ".jsonl");
}
std::filesystem::path Artifacts::compressed(std::uint32_t k) const {
    return dir_ / ("encoded_k" + std::to_string(k) + ".wshc");
}
std::filesystem::path Artifacts::compression_report(std::uint32_t k) const {
    return dir_ / ("compression_k" + std::to_string(k) + ".json");
}

namespace {

struct Inputs {
    ModelSpec model;
    ParameterVector theta;
    Dataset validation;
    Dataset test;
};

Inputs load_inputs(const Artifacts& artifacts) {
    require_artifact(artifacts.model, "train");
    require_artifact(artifacts.validation, "train");
    require_artifact(artifacts.test, "train");
    Inputs inputs;
    inputs.model = load_model(artifacts.model);
    inputs.theta = flatten(inputs.model);
    inputs.validation = load_dataset(artifacts.validation);
    inputs.validation.split = Split::validation;
    inputs.test = load_dataset(artifacts.test);
    inputs.test.split = Split::test;
    return inputs;
}

double load_tau(const Artifacts& artifacts) {
    require_artifact(artifacts.baseline_report, "train");
    return parse_json_file(artifacts.baseline_report).at("tau").get<double>();
}

json report_row_eval(const EvalReport& report) {
    return {{"f1", report.f1}, {"top1", report.top1}};
}

} // namespace

void cmd_train(const PipelineConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    const Artifacts artifacts(config);

    Dataset train_data;
    if (config.blobs) {
        const BlobSplits splits = make_blobs(*config.blobs);
        save_dataset(splits.train, artifacts.train);
        save_dataset(splits.validation, artifacts.validation);
        save_dataset(splits.test, artifacts.test);
        train_data = splits.train;
    } else {
        if (config.train_path.empty() || config.validation_path.empty() ||
            config.test_path.empty())
            throw config_error("no blob generator configured and dataset paths missing");
        train_data = load_dataset(artifacts.train);
        train_data.split = Split::train;
    }

    if (config.trainer.arch.empty()) throw config_error("trainer.arch is required");
    const ModelSpec model = train_baseline(config.trainer, train_data);
    save_model(model, artifacts.model);

    Dataset validation = load_dataset(artifacts.validation);
    validation.split = Split::validation;
    Dataset test = load_dataset(artifacts.test);
    test.split = Split::test;
    const EvalReport val_report = evaluate(model, validation);
    const EvalReport test_report = evaluate(model, test);

    json j = {{"tau", val_report.f1},
              {"n", param_count(model)},
              {"validation", json::parse(report_to_json(val_report))},
              {"test", json::parse(report_to_json(test_report))}};
    detail::write_text_file(artifacts.baseline_report, j.dump(2) + "\n");
}

CompressionReport cmd_random_ub(const PipelineConfig& config) {
    const Artifacts artifacts(config);
    const Inputs inputs = load_inputs(artifacts);

    const Codebook codebook = uniform_bin(inputs.theta, config.random_ub_k);
    save_codebook(codebook, artifacts.random_ub_codebook);

    const EvalReport val_report =
        evaluate_codebook(inputs.model, inputs.theta, codebook, inputs.validation);
    const EvalReport test_report =
        evaluate_codebook(inputs.model, inputs.theta, codebook, inputs.test);

    const auto cards = codebook.cardinalities();
    const HuffmanTable table = build_huffman(cards);
    const CompressionReport report = make_compression_report(codebook.n(), cards, table);

    json j = {{"k", config.random_ub_k},
              {"d", report.d},
              {"n", report.n},
              {"weight_bits", report.weight_bits},
              {"fixed_bits", report.fixed_bits},
              {"avg_bits", report.avg_bits},
              {"cr_fixed", report.cr_fixed},
              {"cr_huffman", report.cr_huffman},
              {"val_f1", val_report.f1},
              {"val_top1", val_report.top1},
              {"test_f1", test_report.f1},
              {"test_top1", test_report.top1}};
    detail::write_text_file(artifacts.random_ub_report, j.dump(2) + "\n");
    return report;
}

void cmd_search(const PipelineConfig& config) {
    const Artifacts artifacts(config);
    const Inputs inputs = load_inputs(artifacts);
    const double tau = load_tau(artifacts);

    ParetoFront front = run_search(config.moea, inputs.theta, inputs.model, inputs.validation);
    filter_by_threshold(front, tau);

    std::vector<FrontRow> rows;
    for (const ParetoSolution& solution : front.solutions) {
        FrontRow row;
        row.k = solution.k;
        row.d = solution.d;
        row.val_f1 = 1.0 - solution.f2;
        row.test_f1 =
            evaluate_codebook(inputs.model, inputs.theta, *solution.codebook, inputs.test).f1;
        row.accepted = solution.accepted;
        rows.push_back(row);
        if (solution.accepted)
            save_codebook(*solution.codebook, artifacts.accepted_codebook(solution.k));
    }
    write_front_csv(rows, artifacts.front_csv);
    write_front_json(rows, config.moea, tau, artifacts.front_json);
}

namespace {

std::vector<std::uint32_t> accepted_ks(const Artifacts& artifacts) {
    require_artifact(artifacts.front_json, "search");
    const json front = parse_json_file(artifacts.front_json);
    std::vector<std::uint32_t> ks;
    for (const auto& solution : front.at("solutions")) {
        if (solution.at("accepted").get<bool>())
            ks.push_back(solution.at("k").get<std::uint32_t>());
    }
    std::sort(ks.begin(), ks.end());
    return ks;
}

std::vector<std::uint32_t> surviving_merged_ks(const Artifacts& artifacts) {
    require_artifact(artifacts.merged_summary, "merge");
    const json merged = parse_json_file(artifacts.merged_summary);
    std::vector<std::uint32_t> ks;
    for (const auto& solution : merged.at("solutions")) {
        if (solution.at("survived").get<bool>())
            ks.push_back(solution.at("k").get<std::uint32_t>());
    }
    std::sort(ks.begin(), ks.end());
    return ks;
}

} // namespace

void cmd_merge(const PipelineConfig& config) {
    const Artifacts artifacts(config);
    const Inputs inputs = load_inputs(artifacts);
    const double tau = load_tau(artifacts);

    json solutions = json::array();
    for (std::uint32_t k : accepted_ks(artifacts)) {
        require_artifact(artifacts.accepted_codebook(k), "search");
        const Codebook codebook = load_codebook(artifacts.accepted_codebook(k));
        const MergeResult result =
            iterative_merge(inputs.theta, inputs.model, codebook, inputs.validation);
        save_codebook(result.codebook, artifacts.merged_codebook(k));
        write_merge_log(result.history, artifacts.merge_log(k));

        const EvalReport test_report =
            evaluate_codebook(inputs.model, inputs.theta, result.codebook, inputs.test);
        const bool survived = result.report.f1 >= tau;
        solutions.push_back({{"k", k},
                             {"d_before", codebook.d()},
                             {"m", result.codebook.d()},
                             {"val_f1", result.report.f1},
                             {"val_top1", result.report.top1},
                             {"test_f1", test_report.f1},
                             {"test_top1", test_report.top1},
                             {"survived", survived}});
    }
    json j = {{"tau", tau}, {"solutions", std::move(solutions)}};
    detail::write_text_file(artifacts.merged_summary, j.dump(2) + "\n");
}

void cmd_encode(const PipelineConfig& config) {
    const Artifacts artifacts(config);

    std::vector<std::pair<std::uint32_t, std::filesystem::path>> sources;
    if (config.skip_merge) {
        for (std::uint32_t k : accepted_ks(artifacts))
            sources.emplace_back(k, artifacts.accepted_codebook(k));
    } else {
        for (std::uint32_t k : surviving_merged_ks(artifacts))
            sources.emplace_back(k, artifacts.merged_codebook(k));
    }

    for (const auto& [k, path] : sources) {
        require_artifact(path, config.skip_merge ? "search" : "merge");
        const Codebook codebook = load_codebook(path);
        const auto cards = codebook.cardinalities();
        const HuffmanTable table = build_huffman(cards);
        save_compressed(codebook, table, artifacts.compressed(k));
        const CompressionReport report = make_compression_report(codebook.n(), cards, table);
        json j = {{"k", k},
                  {"n", report.n},
                  {"d", report.d},
                  {"weight_bits", report.weight_bits},
                  {"fixed_bits", report.fixed_bits},
                  {"avg_bits", report.avg_bits},
                  {"cr_fixed", report.cr_fixed},
                  {"cr_huffman", report.cr_huffman}};
        detail::write_text_file(artifacts.compression_report(k), j.dump(2) + "\n");
    }
}

void cmd_report(const PipelineConfig& config) {
    const Artifacts artifacts(config);
    const Inputs inputs = load_inputs(artifacts);
    require_artifact(artifacts.baseline_report, "train");
    const json baseline = parse_json_file(artifacts.baseline_report);
    const std::uint64_t n = param_count(inputs.model);

    json rows = json::array();
    auto add_row = [&](const std::string& method, const json& k, std::uint64_t params,
                       double avg_bits_value, double cr, const json& val_eval,
                       const json& test_eval, const json& codebook_file) {
        rows.push_back({{"method", method},
                        {"k", k},
                        {"params", params},
                        {"avg_bits", avg_bits_value},
                        {"cr", cr},
                        {"top1", test_eval.at("top1")},
                        {"val_f1", val_eval.at("f1")},
                        {"test_f1", test_eval.at("f1")},
                        {"codebook_file", codebook_file}});
    };

    add_row("baseline", nullptr, n, 32.0, 1.0, baseline.at("validation"), baseline.at("test"),
            nullptr);

    // Evaluates a stored codebook on both splits and derives its fixed-length
    // compression numbers.
    auto codebook_row = [&](const std::string& method, std::uint32_t k,
                            const std::filesystem::path& path) {
        const Codebook codebook = load_codebook(path);
        const EvalReport val_report =
            evaluate_codebook(inputs.model, inputs.theta, codebook, inputs.validation);
        const EvalReport test_report =
            evaluate_codebook(inputs.model, inputs.theta, codebook, inputs.test);
        const auto cards = codebook.cardinalities();
        add_row(method, k, codebook.d(), fixed_index_bits(codebook.d()),
                cr_fixed(codebook.n(), cards), report_row_eval(val_report),
                report_row_eval(test_report),
                std::filesystem::relative(path, config.out_dir).string());
    };

    if (std::filesystem::exists(artifacts.random_ub_report)) {
        const json random_ub = parse_json_file(artifacts.random_ub_report);
        codebook_row("random_ub", random_ub.at("k").get<std::uint32_t>(),
                     artifacts.random_ub_codebook);
    }

    for (std::uint32_t k : accepted_ks(artifacts))
        codebook_row("mo_ub", k, artifacts.accepted_codebook(k));

    if (!config.skip_merge) {
        for (std::uint32_t k : surviving_merged_ks(artifacts))
            codebook_row("mo_ub_m", k, artifacts.merged_codebook(k));
    }

    if (!config.skip_huffman) {
        const std::string method = config.skip_merge ? "mo_ub_h" : "mo_ub_m_h";
        const auto ks =
            config.skip_merge ? accepted_ks(artifacts) : surviving_merged_ks(artifacts);
        for (std::uint32_t k : ks) {
            require_artifact(artifacts.compression_report(k), "encode");
            const json compression = parse_json_file(artifacts.compression_report(k));
            const auto path = config.skip_merge ? artifacts.accepted_codebook(k)
                                                : artifacts.merged_codebook(k);
            const Codebook codebook = load_codebook(path);
            const EvalReport val_report =
                evaluate_codebook(inputs.model, inputs.theta, codebook, inputs.validation);
            const EvalReport test_report =
                evaluate_codebook(inputs.model, inputs.theta, codebook, inputs.test);
            add_row(method, k, codebook.d(), compression.at("avg_bits").get<double>(),
                    compression.at("cr_huffman").get<double>(), report_row_eval(val_report),
                    report_row_eval(test_report),
                    std::filesystem::relative(path, config.out_dir).string());
        }
    }

    json report = {{"n", n}, {"rows", rows}};
    detail::write_text_file(artifacts.report_json, report.dump(2) + "\n");

    std::ostringstream csv;
    csv.precision(10);
    csv << "method,k,params,avg_bits,cr,top1,val_f1,test_f1\n";
    for (const auto& row : rows) {
        csv << row.at("method").get<std::string>() << ',';
        if (row.at("k").is_null())
            csv << '-';
        else
            csv << row.at("k").get<std::uint32_t>();
        csv << ',' << row.at("params").get<std::uint64_t>() << ','
            << row.at("avg_bits").get<double>() << ',' << row.at("cr").get<double>() << ','
            << row.at("top1").get<double>() << ',' << row.at("val_f1").get<double>() << ','
            << row.at("test_f1").get<double>() << '\n';
    }
    detail::write_text_file(artifacts.report_csv, csv.str());
}

void cmd_run_all(const PipelineConfig& config) {
    cmd_train(config);
    cmd_random_ub(config);
    cmd_search(config);
    if (!config.skip_merge) cmd_merge(config);
    if (!config.skip_huffman) cmd_encode(config);
    cmd_report(config);
}

} // namespace wsc
