#include "wsc/merge.hpp"

#include "io_util.hpp"

#include "json.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace wsc {

const char* to_string(MergeDecision decision) {
    switch (decision) {
        case MergeDecision::left: return "left";
        case MergeDecision::right: return "right";
        case MergeDecision::keep: return "keep";
    }
    throw invariant_error("unknown merge decision");
}

MergeDecision tie_break(double f_left, double f_right, double f_curr) {
    const double best = std::max(f_curr, std::max(f_left, f_right));
    if (f_left == best) return MergeDecision::left;
    if (f_right == best) return MergeDecision::right;
    return MergeDecision::keep;
}

Codebook merge_bins(const Codebook& codebook, std::size_t i, std::size_t j) {
    if (j != i + 1 || j >= codebook.d())
        throw std::invalid_argument("merge_bins requires adjacent bins i, i+1");

    Codebook merged;
    merged.k_requested = codebook.k_requested;
    merged.bins.reserve(codebook.d() - 1);
    for (std::size_t b = 0; b < codebook.d(); ++b) {
        if (b == j) continue;
        Bin bin = codebook.bins[b];
        if (b == i) {
            const Bin& left = codebook.bins[i];
            const Bin& right = codebook.bins[j];
            const double total =
                static_cast<double>(left.cardinality) + static_cast<double>(right.cardinality);
            bin.upper = right.upper;
            // Cardinality-weighted mean of the two centroids equals the plain
            // mean over the union of members.
            bin.centroid = (static_cast<double>(left.cardinality) * left.centroid +
                            static_cast<double>(right.cardinality) * right.centroid) /
                           total;
            bin.cardinality = left.cardinality + right.cardinality;
        }
        merged.bins.push_back(bin);
    }

    merged.indices.resize(codebook.n());
    for (std::size_t p = 0; p < codebook.n(); ++p) {
        const std::uint32_t index = codebook.indices[p];
        merged.indices[p] = index > i ? index - 1 : index;
    }
    return merged;
}

MergeResult iterative_merge(const ParameterVector& theta, const ModelSpec& model,
                            const Codebook& codebook, const Dataset& validation) {
    validate(codebook, theta.size());

    MergeState state;
    state.codebook = codebook;
    state.f_curr = evaluate_codebook(model, theta, state.codebook, validation).f1;

    constexpr double kAbsent = -std::numeric_limits<double>::infinity();
    while (state.codebook.d() >= 2 && state.pointer < state.codebook.d() - 1) {
        MergeStep step;
        step.pointer = state.pointer;
        step.has_left = state.pointer > 0;
        step.has_right = true; // pointer < d-1 inside the loop

        Codebook left_candidate;
        double f_left = kAbsent;
        if (step.has_left) {
            left_candidate = merge_bins(state.codebook, state.pointer - 1, state.pointer);
            f_left = evaluate_codebook(model, theta, left_candidate, validation).f1;
            step.f_left = f_left;
        }
        Codebook right_candidate = merge_bins(state.codebook, state.pointer, state.pointer + 1);
        const double f_right = evaluate_codebook(model, theta, right_candidate, validation).f1;
        step.f_right = f_right;

        const MergeDecision decision = tie_break(f_left, f_right, state.f_curr);
        step.decision = decision;
        switch (decision) {
            case MergeDecision::left:
                state.codebook = std::move(left_candidate);
                state.f_curr = f_left;
                --state.pointer; // the merged bin now sits one slot left
                break;
            case MergeDecision::right:
                state.codebook = std::move(right_candidate);
                state.f_curr = f_right;
                break; // pointer already names the merged bin
            case MergeDecision::keep:
                ++state.pointer;
                break;
        }
        step.f_curr = state.f_curr;
        step.d_after = state.codebook.d();
        state.history.push_back(step);
    }

    MergeResult result;
    result.report = evaluate_codebook(model, theta, state.codebook, validation);
    result.codebook = std::move(state.codebook);
    result.history = std::move(state.history);
    return result;
}

void write_merge_log(const std::vector<MergeStep>& history, const std::filesystem::path& path) {
    std::ostringstream out;
    for (const MergeStep& step : history) {
        nlohmann::json j = {{"pointer", step.pointer},
                            {"f_L", step.has_left ? nlohmann::json(step.f_left)
                                                  : nlohmann::json(nullptr)},
                            {"f_R", step.has_right ? nlohmann::json(step.f_right)
                                                   : nlohmann::json(nullptr)},
                            {"f_curr", step.f_curr},
                            {"decision", to_string(step.decision)},
                            {"d_after", step.d_after}};
        out << j.dump() << '\n';
    }
    detail::write_text_file(path, out.str());
}

std::vector<MergeStep> load_merge_log(const std::filesystem::path& path) {
    std::istringstream in(detail::read_text_file(path));
    std::vector<MergeStep> history;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw io_error("bad merge log line: " + std::string(e.what()));
        }
        MergeStep step;
        step.pointer = j.at("pointer").get<std::size_t>();
        step.has_left = !j.at("f_L").is_null();
        if (step.has_left) step.f_left = j.at("f_L").get<double>();
        step.has_right = !j.at("f_R").is_null();
        if (step.has_right) step.f_right = j.at("f_R").get<double>();
        step.f_curr = j.at("f_curr").get<double>();
        const std::string decision = j.at("decision").get<std::string>();
        if (decision == "left") step.decision = MergeDecision::left;
        else if (decision == "right") step.decision = MergeDecision::right;
        else if (decision == "keep") step.decision = MergeDecision::keep;
        else throw io_error("unknown merge decision: " + decision);
        step.d_after = j.at("d_after").get<std::size_t>();
        history.push_back(step);
    }
    return history;
}

} // namespace wsc
