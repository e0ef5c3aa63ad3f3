#include "wsc/moea.hpp"

#include "io_util.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace wsc {

void validate(const MoeaConfig& config) {
    if (config.lb < 2) throw config_error("moea lb must be >= 2");
    if (config.lb >= config.ub) throw config_error("moea bounds need lb < ub");
    if (config.np < 2) throw config_error("moea population size must be >= 2");
    if (config.max_iter < 1) throw config_error("moea max_iter must be >= 1");
    if (config.sbx_prob < 0.0 || config.sbx_prob > 1.0)
        throw config_error("sbx_prob must be in [0, 1]");
    if (config.sbx_eta <= 0.0 || config.pm_eta <= 0.0)
        throw config_error("distribution indices must be positive");
}

namespace {

// Shared rounding for k: nearest integer, ties to even, clamped to bounds.
std::uint32_t round_clamp(double value, std::uint32_t lb, std::uint32_t ub) {
    const double rounded = std::nearbyint(value);
    if (rounded <= static_cast<double>(lb)) return lb;
    if (rounded >= static_cast<double>(ub)) return ub;
    return static_cast<std::uint32_t>(rounded);
}

double uniform01(std::mt19937& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

} // namespace

std::vector<std::uint32_t> linear_spacing(std::uint32_t lb, std::uint32_t ub, std::uint32_t np) {
    if (np < 2) throw std::invalid_argument("linear spacing needs np >= 2");
    if (lb >= ub) throw std::invalid_argument("linear spacing needs lb < ub");
    std::vector<std::uint32_t> values(np);
    const double step = (static_cast<double>(ub) - lb) / static_cast<double>(np - 1);
    for (std::uint32_t i = 0; i < np; ++i)
        values[i] = round_clamp(static_cast<double>(lb) + step * i, lb, ub);
    values.front() = lb;
    values.back() = ub;
    return values;
}

const ObjectiveCache::Entry& ObjectiveCache::evaluate(std::uint32_t k,
                                                      const ParameterVector& theta,
                                                      const BinningRequest& base_request,
                                                      const ModelSpec& model,
                                                      const Dataset& validation) {
    auto it = entries_.find(k);
    if (it != entries_.end()) return it->second;

    const BinningRequest request =
        make_binning_request(base_request.theta_min, base_request.theta_max, k);
    auto codebook = std::make_shared<Codebook>(uniform_bin(theta, request));
    Entry entry;
    entry.d = codebook->d();
    entry.f2 = 1.0 - evaluate_codebook(model, theta, *codebook, validation).f1;
    entry.codebook = std::move(codebook);
    ++evaluations_;
    return entries_.emplace(k, std::move(entry)).first->second;
}

void evaluate_population(std::vector<Individual>& individuals, const ParameterVector& theta,
                         const ModelSpec& model, const Dataset& validation,
                         ObjectiveCache& cache) {
    const auto [lo, hi] = compute_range(theta);
    const BinningRequest base = make_binning_request(lo, hi, 2);
    for (Individual& individual : individuals) {
        const auto& entry = cache.evaluate(individual.k, theta, base, model, validation);
        individual.f1_obj = entry.d;
        individual.f2_obj = entry.f2;
        individual.evaluated = true;
    }
}

namespace {

bool dominates(const Individual& a, const Individual& b) {
    const bool no_worse = a.f1_obj <= b.f1_obj && a.f2_obj <= b.f2_obj;
    const bool better = a.f1_obj < b.f1_obj || a.f2_obj < b.f2_obj;
    return no_worse && better;
}

} // namespace

std::vector<std::vector<std::size_t>> non_dominated_sort(std::vector<Individual>& individuals) {
    const std::size_t n = individuals.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> domination_count(n, 0);
    std::vector<std::vector<std::size_t>> fronts(1);

    for (std::size_t p = 0; p < n; ++p) {
        if (!individuals[p].evaluated)
            throw invariant_error("objectives must be set before sorting");
        for (std::size_t q = 0; q < n; ++q) {
            if (p == q) continue;
            if (dominates(individuals[p], individuals[q]))
                dominated[p].push_back(q);
            else if (dominates(individuals[q], individuals[p]))
                ++domination_count[p];
        }
        if (domination_count[p] == 0) {
            individuals[p].rank = 0;
            fronts[0].push_back(p);
        }
    }

    std::size_t level = 0;
    while (!fronts[level].empty()) {
        std::vector<std::size_t> next;
        for (std::size_t p : fronts[level]) {
            for (std::size_t q : dominated[p]) {
                if (--domination_count[q] == 0) {
                    individuals[q].rank = static_cast<std::uint32_t>(level + 1);
                    next.push_back(q);
                }
            }
        }
        ++level;
        fronts.push_back(std::move(next));
    }
    fronts.pop_back(); // trailing empty level
    return fronts;
}

void crowding_distance(std::vector<Individual>& individuals,
                       const std::vector<std::size_t>& front) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    for (std::size_t i : front) individuals[i].crowding = 0.0;
    if (front.size() <= 2) {
        for (std::size_t i : front) individuals[i].crowding = kInf;
        return;
    }

    auto accumulate = [&](auto objective) {
        std::vector<std::size_t> order = front;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return objective(individuals[a]) < objective(individuals[b]);
        });
        const double lo = objective(individuals[order.front()]);
        const double hi = objective(individuals[order.back()]);
        individuals[order.front()].crowding = kInf;
        individuals[order.back()].crowding = kInf;
        if (hi == lo) return;
        for (std::size_t i = 1; i + 1 < order.size(); ++i) {
            individuals[order[i]].crowding += (objective(individuals[order[i + 1]]) -
                                               objective(individuals[order[i - 1]])) /
                                              (hi - lo);
        }
    };
    accumulate([](const Individual& ind) { return static_cast<double>(ind.f1_obj); });
    accumulate([](const Individual& ind) { return ind.f2_obj; });
}

std::pair<Individual, Individual> sbx_crossover(const Individual& parent_a,
                                                const Individual& parent_b,
                                                const MoeaConfig& config, std::mt19937& rng) {
    Individual child_a;
    Individual child_b;
    child_a.k = parent_a.k;
    child_b.k = parent_b.k;

    if (uniform01(rng) > config.sbx_prob || parent_a.k == parent_b.k)
        return {child_a, child_b};

    // Bounded SBX (Deb): spread factor from a polynomial distribution with
    // index eta, contracted near the bounds so children stay feasible.
    const double y1 = std::min(parent_a.k, parent_b.k);
    const double y2 = std::max(parent_a.k, parent_b.k);
    const double yl = config.lb;
    const double yu = config.ub;
    const double u = uniform01(rng);

    auto spread = [&](double beta) {
        const double alpha = 2.0 - std::pow(beta, -(config.sbx_eta + 1.0));
        if (u <= 1.0 / alpha) return std::pow(u * alpha, 1.0 / (config.sbx_eta + 1.0));
        return std::pow(1.0 / (2.0 - u * alpha), 1.0 / (config.sbx_eta + 1.0));
    };

    const double betaq1 = spread(1.0 + 2.0 * (y1 - yl) / (y2 - y1));
    double c1 = 0.5 * ((y1 + y2) - betaq1 * (y2 - y1));
    const double betaq2 = spread(1.0 + 2.0 * (yu - y2) / (y2 - y1));
    double c2 = 0.5 * ((y1 + y2) + betaq2 * (y2 - y1));

    c1 = std::clamp(c1, yl, yu);
    c2 = std::clamp(c2, yl, yu);
    if (uniform01(rng) <= 0.5) std::swap(c1, c2);

    child_a.k = round_clamp(c1, config.lb, config.ub);
    child_b.k = round_clamp(c2, config.lb, config.ub);
    return {child_a, child_b};
}

Individual pm_mutation(Individual individual, const MoeaConfig& config, std::mt19937& rng) {
    // Per-variable mutation probability is 1/n_var; with the single decision
    // variable k it always applies.
    const double y = individual.k;
    const double yl = config.lb;
    const double yu = config.ub;
    const double delta1 = (y - yl) / (yu - yl);
    const double delta2 = (yu - y) / (yu - yl);
    const double u = uniform01(rng);
    const double pow_exp = 1.0 / (config.pm_eta + 1.0);

    double deltaq;
    if (u <= 0.5) {
        const double xy = 1.0 - delta1;
        const double val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(xy, config.pm_eta + 1.0);
        deltaq = std::pow(val, pow_exp) - 1.0;
    } else {
        const double xy = 1.0 - delta2;
        const double val =
            2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(xy, config.pm_eta + 1.0);
        deltaq = 1.0 - std::pow(val, pow_exp);
    }

    Individual mutated;
    mutated.k = round_clamp(y + deltaq * (yu - yl), config.lb, config.ub);
    return mutated;
}

namespace {

// Crowded-comparison operator: lower rank wins, then larger crowding.
bool crowded_less(const Individual& a, const Individual& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.crowding > b.crowding;
}

std::size_t tournament(const std::vector<Individual>& population, std::mt19937& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, population.size() - 1);
    const std::size_t a = pick(rng);
    const std::size_t b = pick(rng);
    return crowded_less(population[b], population[a]) ? b : a;
}

} // namespace

ParetoFront run_search(const MoeaConfig& config, const ParameterVector& theta,
                       const ModelSpec& model, const Dataset& validation, SearchTrace* trace) {
    validate(config);
    std::mt19937 rng(static_cast<std::mt19937::result_type>(config.seed));
    ObjectiveCache cache;

    std::vector<Individual> population;
    for (std::uint32_t k : linear_spacing(config.lb, config.ub, config.np)) {
        Individual individual;
        individual.k = k;
        population.push_back(individual);
    }
    evaluate_population(population, theta, model, validation, cache);

    auto rank_population = [&](std::vector<Individual>& individuals) {
        const auto fronts = non_dominated_sort(individuals);
        for (const auto& front : fronts) crowding_distance(individuals, front);
        return fronts;
    };
    rank_population(population);

    auto record_best = [&]() {
        if (!trace) return;
        double best = std::numeric_limits<double>::infinity();
        for (const Individual& individual : population)
            best = std::min(best, individual.f2_obj);
        trace->best_f2_per_generation.push_back(best);
    };
    record_best();

    for (std::uint32_t gen = 0; gen < config.max_iter; ++gen) {
        std::vector<Individual> offspring;
        offspring.reserve(config.np);
        while (offspring.size() < config.np) {
            const Individual& pa = population[tournament(population, rng)];
            const Individual& pb = population[tournament(population, rng)];
            auto [ca, cb] = sbx_crossover(pa, pb, config, rng);
            offspring.push_back(pm_mutation(ca, config, rng));
            if (offspring.size() < config.np)
                offspring.push_back(pm_mutation(cb, config, rng));
        }
        evaluate_population(offspring, theta, model, validation, cache);

        // (mu + lambda) survival: fill whole fronts, crowding-truncate the
        // last partial one.
        std::vector<Individual> combined = population;
        combined.insert(combined.end(), offspring.begin(), offspring.end());
        const auto fronts = rank_population(combined);

        std::vector<Individual> next;
        next.reserve(config.np);
        for (const auto& front : fronts) {
            if (next.size() + front.size() <= config.np) {
                for (std::size_t i : front) next.push_back(combined[i]);
            } else {
                std::vector<std::size_t> order = front;
                std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                    if (combined[a].crowding != combined[b].crowding)
                        return combined[a].crowding > combined[b].crowding;
                    return combined[a].k < combined[b].k; // deterministic tie order
                });
                for (std::size_t i : order) {
                    if (next.size() == config.np) break;
                    next.push_back(combined[i]);
                }
            }
            if (next.size() == config.np) break;
        }
        population = std::move(next);
        rank_population(population);
        record_best();
    }

    // Final front: rank-0 members, one representative per k, sorted by d.
    ParetoFront front;
    std::map<std::uint32_t, const Individual*> by_k;
    for (const Individual& individual : population)
        if (individual.rank == 0) by_k.emplace(individual.k, &individual);
    for (const auto& [k, individual] : by_k) {
        ParetoSolution solution;
        solution.k = k;
        solution.d = individual->f1_obj;
        solution.f2 = individual->f2_obj;
        const auto [lo, hi] = compute_range(theta);
        solution.codebook =
            cache.evaluate(k, theta, make_binning_request(lo, hi, 2), model, validation).codebook;
        front.solutions.push_back(std::move(solution));
    }
    std::sort(front.solutions.begin(), front.solutions.end(),
              [](const ParetoSolution& a, const ParetoSolution& b) {
                  if (a.d != b.d) return a.d < b.d;
                  return a.k < b.k;
              });

    if (trace) trace->objective_evaluations = cache.objective_evaluations();
    return front;
}

std::vector<ParetoSolution> filter_by_threshold(ParetoFront& front, double tau) {
    std::vector<ParetoSolution> accepted;
    for (ParetoSolution& solution : front.solutions) {
        solution.accepted = (1.0 - solution.f2) >= tau;
        if (solution.accepted) accepted.push_back(solution);
    }
    return accepted;
}

void write_front_csv(const std::vector<FrontRow>& rows, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "k,d,val_f1,test_f1,accepted\n";
    out.precision(10);
    for (const FrontRow& row : rows) {
        out << row.k << ',' << row.d << ',' << row.val_f1 << ',' << row.test_f1 << ','
            << (row.accepted ? 1 : 0) << '\n';
    }
    detail::write_text_file(path, out.str());
}

void write_front_json(const std::vector<FrontRow>& rows, const MoeaConfig& config, double tau,
                      const std::filesystem::path& path) {
    nlohmann::json solutions = nlohmann::json::array();
    for (const FrontRow& row : rows) {
        solutions.push_back({{"k", row.k},
                             {"d", row.d},
                             {"val_f1", row.val_f1},
                             {"test_f1", row.test_f1},
                             {"accepted", row.accepted}});
    }
    nlohmann::json j = {{"config",
                         {{"lb", config.lb},
                          {"ub", config.ub},
                          {"np", config.np},
                          {"max_iter", config.max_iter},
                          {"sbx_eta", config.sbx_eta},
                          {"sbx_prob", config.sbx_prob},
                          {"pm_eta", config.pm_eta}}},
                        {"seed", config.seed},
                        {"tau", tau},
                        {"solutions", std::move(solutions)}};
    detail::write_text_file(path, j.dump(2) + "\n");
}

} // namespace wsc
