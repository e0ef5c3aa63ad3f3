#pragma once

#include "wsc/eval.hpp"
#include "wsc/model.hpp"
#include "wsc/quantize.hpp"
#include "wsc/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <vector>

namespace wsc {

struct MoeaConfig {
    std::uint32_t lb = 2;
    std::uint32_t ub = 1024; // 2^10 default search range for k
    std::uint32_t np = 100;
    std::uint32_t max_iter = 10;
    double sbx_eta = 15.0;
    double sbx_prob = 0.9;
    double pm_eta = 20.0;
    std::uint64_t seed = 0;
};

void validate(const MoeaConfig& config);

// One candidate: bin count k with objectives f1 = d (shared-weight count)
// and f2 = 1 - validation F1, both minimized.
struct Individual {
    std::uint32_t k = 0;
    std::size_t f1_obj = 0;
    double f2_obj = 0.0;
    bool evaluated = false;
    std::uint32_t rank = 0;
    double crowding = 0.0;
};

/// np values evenly spaced across [lb, ub] inclusive, rounded to the
/// nearest integer (ties to even). First is always lb, last always ub;
/// duplicates after rounding are kept.
std::vector<std::uint32_t> linear_spacing(std::uint32_t lb, std::uint32_t ub, std::uint32_t np);

// Memoizes (d, f2, codebook) per k; objectives are deterministic in k so
// repeated values cost nothing.
class ObjectiveCache {
public:
    struct Entry {
        std::size_t d = 0;
        double f2 = 0.0;
        std::shared_ptr<const Codebook> codebook;
    };

    const Entry& evaluate(std::uint32_t k, const ParameterVector& theta,
                          const BinningRequest& base_request, const ModelSpec& model,
                          const Dataset& validation);

    std::size_t objective_evaluations() const { return evaluations_; }

private:
    std::map<std::uint32_t, Entry> entries_;
    std::size_t evaluations_ = 0;
};

/// Fills f1_obj/f2_obj for every individual (cached by k).
void evaluate_population(std::vector<Individual>& individuals, const ParameterVector& theta,
                         const ModelSpec& model, const Dataset& validation,
                         ObjectiveCache& cache);

/// Fast non-dominated sorting; sets rank on each individual and returns the
/// fronts as index lists, best first.
std::vector<std::vector<std::size_t>> non_dominated_sort(std::vector<Individual>& individuals);

/// Standard crowding distance over one front; boundary solutions get
/// +infinity.
void crowding_distance(std::vector<Individual>& individuals,
                       const std::vector<std::size_t>& front);

/// Bounded simulated binary crossover on k treated as a real, then rounded
/// to the nearest integer and clamped to [lb, ub]. With probability
/// 1 - sbx_prob the parents pass through unchanged.
std::pair<Individual, Individual> sbx_crossover(const Individual& parent_a,
                                                const Individual& parent_b,
                                                const MoeaConfig& config, std::mt19937& rng);

/// Bounded polynomial mutation on k, rounded and clamped like SBX.
Individual pm_mutation(Individual individual, const MoeaConfig& config, std::mt19937& rng);

struct ParetoSolution {
    std::uint32_t k = 0;
    std::size_t d = 0;
    double f2 = 0.0;
    std::shared_ptr<const Codebook> codebook;
    bool accepted = false;
};

// Rank-0 solutions of the final population, deduplicated by k and sorted by
// ascending d (f2 is then non-increasing along the list).
struct ParetoFront {
    std::vector<ParetoSolution> solutions;
};

struct SearchTrace {
    std::vector<double> best_f2_per_generation; // includes the initial population
    std::size_t objective_evaluations = 0;
};

/// NSGA-II over the single decision variable k: linear-spacing
/// initialization, binary tournament on (rank, crowding), SBX + PM
/// variation, (mu + lambda) survival with crowding truncation.
/// Deterministic for a fixed config.
ParetoFront run_search(const MoeaConfig& config, const ParameterVector& theta,
                       const ModelSpec& model, const Dataset& validation,
                       SearchTrace* trace = nullptr);

/// Marks and returns the solutions with 1 - f2 >= tau. May be empty.
std::vector<ParetoSolution> filter_by_threshold(ParetoFront& front, double tau);

// Front export rows; test F1 comes from the pipeline, which also evaluates
// the test split.
struct FrontRow {
    std::uint32_t k = 0;
    std::size_t d = 0;
    double val_f1 = 0.0;
    double test_f1 = 0.0;
    bool accepted = false;
};

void write_front_csv(const std::vector<FrontRow>& rows, const std::filesystem::path& path);
void write_front_json(const std::vector<FrontRow>& rows, const MoeaConfig& config, double tau,
                      const std::filesystem::path& path);

} // namespace wsc
