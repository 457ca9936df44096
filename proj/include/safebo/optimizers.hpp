#pragma once

#include "safebo/bounds.hpp"
#include "safebo/gp.hpp"
#include "safebo/safe_sets.hpp"
#include "safebo/synth.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace safebo {

enum class AlgorithmVariant {
    SafeOptHeuristic,
    RealBetaSafeOpt,
    LoSBO,
    LoSGpUcb,
    /// LoSBO's safe sets with a uniformly random safe query; a baseline.
    RandomSafe,
};

std::string_view to_string(AlgorithmVariant v);
AlgorithmVariant parse_algorithm_variant(std::string_view name);
bool is_grid_variant(AlgorithmVariant v);
bool uses_lipschitz_safety(AlgorithmVariant v);

struct MultistartOptions {
    int num_starts = 20;
    int max_iters = 100;
    /// Initial probe step as a fraction of each axis' width.
    double step_init = 0.1;
};

struct AlgorithmConfig {
    AlgorithmVariant variant = AlgorithmVariant::LoSBO;
    KernelSpec kernel = KernelSpec::isotropic(KernelFamily::SquaredExponential, 0.1, 1.0);
    double lambda = 0.01;
    BetaSchedule schedule = ConstantHeuristic{2.0};
    /// SafeOpt variants only read L; the Lipschitz-safe variants need both L and E.
    LipschitzSafetyModel safety{1.0, 0.0};
    double h = 0.0;
    int budget = 30;
    MultistartOptions multistart;
    /// Continuous seed set: points within this distance of a seed point count as seeds.
    double seed_radius = 0.0;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// Search domain and seed set. Grid variants use `grid` + `seed_indices`,
/// LoS-GP-UCB uses `box` + `seed_points`.
struct SafeProblem {
    Box box = Box::unit(1);
    std::shared_ptr<const GridDomain> grid;
    std::vector<std::size_t> seed_indices;
    std::vector<Point> seed_points;
};

struct IterationRecord {
    int t = 0;
    Point x;
    double y_noisy = 0.0;
    double f_true = 0.0;
    bool safe_actual = true;
    /// Size of the certified safe set at selection time, -1 on the continuous path.
    long long safe_set_size = -1;
    double beta = 0.0;
    double acquisition_value = 0.0;
    long long grid_index = -1;
    bool degenerate = false;
};

struct SafeOptStep {
    std::size_t index = 0;
    DiscreteSafeSet state;
    double beta = 0.0;
    double acquisition_value = 0.0;
    /// M_t and G_t were both empty; the widest safe point was chosen.
    bool degenerate = false;
};

/// One grid iteration: update the safe set (GP bounds for SafeOpt variants,
/// Lipschitz envelope for LoSBO), form M_t and G_t from the GP bounds and pick
/// the widest interval among them, lowest index on ties. `rng` is only used
/// by the RandomSafe baseline.
SafeOptStep step_safeopt_family(const AlgorithmConfig& config, const DiscreteSafeSet& state, const GpPosterior& post,
                                Rng* rng = nullptr);

struct SearchResult {
    Point x;
    double value = 0.0;
};

/// Feasibility-preserving coordinate ascent from every feasible start; returns
/// the best feasible point found. Deterministic.
SearchResult multistart_search(const std::function<double(const Point&)>& objective,
                               const std::function<bool(const Point&)>& feasible, std::span<const Point> starts,
                               const Box& box, int max_iters, double step_init);

struct UcbStep {
    Point x;
    double beta = 0.0;
    double acquisition_value = 0.0;
};

/// Maximizes mu + beta sigma over the certified region by multistart local search.
/// The returned point is re-checked against the exact safety predicate.
UcbStep step_los_gp_ucb(const AlgorithmConfig& config, const ContinuousSafeRegion& region, const GpPosterior& post,
                        Rng& rng);

/// Start points for the LoS-GP-UCB local search: seeds, perturbations of the
/// best-certified observed inputs and feasible uniform draws.
std::vector<Point> generate_ucb_starts(const AlgorithmConfig& config, const ContinuousSafeRegion& region,
                                       const Dataset& data, const Box& box, Rng& rng);

using Objective = std::function<double(const Point&)>;

/// Runs `config.budget` iterations. `truth` is optional instrumentation; when
/// empty, f_true is NaN and safe_actual is reported as true.
std::vector<IterationRecord> run_optimization(const AlgorithmConfig& config, const SafeProblem& problem,
                                              const Objective& oracle, const Objective& truth = {});

}  // namespace safebo
