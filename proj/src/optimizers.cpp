#include "safebo/optimizers.hpp"

#include "safebo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <iterator>
#include <numeric>
#include <optional>

namespace safebo {

std::string_view to_string(AlgorithmVariant v) {
    switch (v) {
        case AlgorithmVariant::SafeOptHeuristic: return "safeopt";
        case AlgorithmVariant::RealBetaSafeOpt: return "real_beta_safeopt";
        case AlgorithmVariant::LoSBO: return "losbo";
        case AlgorithmVariant::LoSGpUcb: return "los_gp_ucb";
        case AlgorithmVariant::RandomSafe: return "random_safe";
    }
    return "unknown";
}

AlgorithmVariant parse_algorithm_variant(std::string_view name) {
    for (auto v : {AlgorithmVariant::SafeOptHeuristic, AlgorithmVariant::RealBetaSafeOpt, AlgorithmVariant::LoSBO,
                   AlgorithmVariant::LoSGpUcb, AlgorithmVariant::RandomSafe}) {
        if (to_string(v) == name) return v;
    }
    throw ArgumentError("unknown algorithm variant '" + std::string(name) + "'");
}

bool is_grid_variant(AlgorithmVariant v) { return v != AlgorithmVariant::LoSGpUcb; }

bool uses_lipschitz_safety(AlgorithmVariant v) {
    return v == AlgorithmVariant::LoSBO || v == AlgorithmVariant::LoSGpUcb || v == AlgorithmVariant::RandomSafe;
}

void AlgorithmConfig::validate() const {
    if (budget < 1) throw ArgumentError("budget must be at least 1");
    if (!(lambda > 0.0)) throw ArgumentError("lambda must be positive");
    if (!(safety.L > 0.0)) throw ArgumentError("Lipschitz bound L must be positive");
    if (!(safety.E >= 0.0)) throw ArgumentError("noise bound E must be non-negative");
    if (variant == AlgorithmVariant::LoSGpUcb) {
        if (multistart.num_starts < 1 || multistart.max_iters < 1 || !(multistart.step_init > 0.0)) {
            throw ArgumentError("multistart options must be positive");
        }
    }
    if (!(seed_radius >= 0.0)) throw ArgumentError("seed radius must be non-negative");
}

namespace {

// Widths within this relative distance count as tied.
constexpr double kTieTolerance = 1e-12;

std::size_t argmax_width(std::span<const std::size_t> candidates, const GridBounds& b) {
    std::size_t best = candidates.front();
    double best_w = b.upper[best] - b.lower[best];
    for (auto i : candidates) {
        const double w = b.upper[i] - b.lower[i];
        const double tol = kTieTolerance * std::max(1.0, std::abs(best_w));
        if (w > best_w + tol || (std::abs(w - best_w) <= tol && i < best)) {
            best = i;
            best_w = w;
        }
    }
    return best;
}

}  // namespace

SafeOptStep step_safeopt_family(const AlgorithmConfig& config, const DiscreteSafeSet& state, const GpPosterior& post,
                                Rng* rng) {
    if (!is_grid_variant(config.variant)) throw ArgumentError("step_safeopt_family needs a grid variant");
    if (state.count() == 0) throw InvalidStateError("current safe set is empty");

    const double beta = beta_value(config.schedule, post);
    const auto bounds = gp_bounds_on_grid(post, beta, state.grid());

    const bool lipschitz_path = uses_lipschitz_safety(config.variant);
    DiscreteSafeSet next = lipschitz_path ? update_safe_set_lipschitz(state, post.data(), config.safety)
                                          : update_safe_set_gp(state, bounds.lower, config.safety.L);

    if (config.variant == AlgorithmVariant::RandomSafe) {
        if (rng == nullptr) throw ArgumentError("RandomSafe baseline needs an rng");
        const auto safe = next.indices();
        std::uniform_int_distribution<std::size_t> pick(0, safe.size() - 1);
        const std::size_t i = safe[pick(*rng)];
        return {i, std::move(next), beta, bounds.upper[i] - bounds.lower[i], false};
    }

    auto maximizers = maximizer_set(next, bounds.lower, bounds.upper);
    const double noise_offset = lipschitz_path ? config.safety.E : 0.0;
    auto expanders = expander_set(next, bounds.upper, config.safety.L, noise_offset);

    std::vector<std::size_t> candidates;
    std::set_union(maximizers.begin(), maximizers.end(), expanders.begin(), expanders.end(),
                   std::back_inserter(candidates));
    bool degenerate = false;
    if (candidates.empty()) {
        candidates = next.indices();
        degenerate = true;
    }
    const std::size_t i = argmax_width(candidates, bounds);
    return {i, std::move(next), beta, bounds.upper[i] - bounds.lower[i], degenerate};
}

SearchResult multistart_search(const std::function<double(const Point&)>& objective,
                               const std::function<bool(const Point&)>& feasible, std::span<const Point> starts,
                               const Box& box, int max_iters, double step_init) {
    if (max_iters < 1 || !(step_init > 0.0)) throw ArgumentError("multistart search needs positive iterations and step");
    const Eigen::VectorXd width = box.upper - box.lower;
    const double min_step = 1e-10;

    std::optional<SearchResult> best;
    for (const auto& start : starts) {
        if (start.size() != box.dim() || !box.contains(start) || !feasible(start)) continue;
        Point x = start;
        double fx = objective(x);
        double step = step_init;
        for (int it = 0; it < max_iters && step >= min_step; ++it) {
            bool improved = false;
            for (Eigen::Index k = 0; k < x.size() && !improved; ++k) {
                for (double sign : {1.0, -1.0}) {
                    Point cand = x;
                    cand[k] += sign * step * width[k];
                    cand = box.project(cand);
                    if (cand[k] == x[k] || !feasible(cand)) continue;
                    const double fc = objective(cand);
                    if (fc > fx) {
                        x = std::move(cand);
                        fx = fc;
                        improved = true;
                        break;
                    }
                }
            }
            if (!improved) step *= 0.5;
        }
        if (!best || fx > best->value) best = SearchResult{x, fx};
    }
    if (!best) throw ArgumentError("multistart search has no feasible start");
    return *best;
}

std::vector<Point> generate_ucb_starts(const AlgorithmConfig& config, const ContinuousSafeRegion& region,
                                       const Dataset& data, const Box& box, Rng& rng) {
    std::vector<Point> starts;
    for (const auto& s : region.seeds) starts.push_back(box.project(s));

    const auto& xs = data.inputs();
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        ranked.emplace_back(lipschitz_lower_envelope(data, region.model, xs[i]), i);
    }
    // Highest envelope first, lower index on ties.
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    constexpr std::size_t kAnchors = 3;
    std::vector<Point> anchors;
    for (std::size_t r = 0; r < ranked.size() && anchors.size() < kAnchors; ++r) {
        const Point& p = xs[ranked[r].second];
        if (region.contains(data, p)) {
            anchors.push_back(p);
            starts.push_back(p);
        }
    }

    const int target = config.multistart.num_starts;
    const int perturbed = anchors.empty() ? 0 : target / 2;
    const double radius = 0.1 * box.diagonal();
    const auto d = box.dim();
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    int accepted = 0;
    for (int attempt = 0; attempt < 10 * perturbed && accepted < perturbed; ++attempt) {
        Point dir(d);
        for (Eigen::Index k = 0; k < d; ++k) dir[k] = normal(rng);
        const double n = dir.norm();
        if (n == 0.0) continue;
        const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(d));
        Point cand = box.project(anchors[static_cast<std::size_t>(attempt) % anchors.size()] + dir * (r / n));
        if (region.contains(data, cand)) {
            starts.push_back(std::move(cand));
            ++accepted;
        }
    }
    const int uniform = target - accepted;
    accepted = 0;
    for (int attempt = 0; attempt < 10 * uniform && accepted < uniform; ++attempt) {
        Point cand = sample_uniform(box, rng);
        if (region.contains(data, cand)) {
            starts.push_back(std::move(cand));
            ++accepted;
        }
    }
    return starts;
}

UcbStep step_los_gp_ucb(const AlgorithmConfig& config, const ContinuousSafeRegion& region, const GpPosterior& post,
                        Rng& rng) {
    const Dataset& data = post.data();
    const Box& box = data.domain();
    const double beta = beta_value(config.schedule, post);
    const auto starts = generate_ucb_starts(config, region, data, box, rng);

    auto ucb = [&](const Point& x) {
        const auto p = post.predict(x);
        return p.mean + beta * p.std;
    };
    auto feasible = [&](const Point& x) { return region.contains(data, x); };

    SearchResult found;
    try {
        found = multistart_search(ucb, feasible, starts, box, config.multistart.max_iters, config.multistart.step_init);
    } catch (const ArgumentError&) {
        throw InvalidStateError("LoS-GP-UCB found no feasible start point");
    }
    if (!feasible(found.x)) throw InvalidStateError("LoS-GP-UCB search returned a point outside the certified region");
    return {found.x, beta, found.value};
}

std::vector<IterationRecord> run_optimization(const AlgorithmConfig& config, const SafeProblem& problem,
                                              const Objective& oracle, const Objective& truth) {
    config.validate();
    Rng rng(config.rng_seed);
    std::vector<IterationRecord> trace;
    trace.reserve(static_cast<std::size_t>(config.budget));

    auto record = [&](int t, const Point& x, double y) {
        IterationRecord r;
        r.t = t;
        r.x = x;
        r.y_noisy = y;
        if (truth) {
            r.f_true = truth(x);
            r.safe_actual = r.f_true >= config.h;
        } else {
            r.f_true = std::numeric_limits<double>::quiet_NaN();
        }
        return r;
    };

    if (is_grid_variant(config.variant)) {
        if (!problem.grid) throw ArgumentError("grid variant needs a grid");
        DiscreteSafeSet state(problem.grid, problem.seed_indices, config.h);
        GpPosterior post(config.kernel, Dataset(problem.grid->box()), config.lambda);
        for (int t = 1; t <= config.budget; ++t) {
            auto step = step_safeopt_family(config, state, post, &rng);
            state = std::move(step.state);
            const Point& x = (*problem.grid)[step.index];
            const double y = oracle(x);
            auto r = record(t, x, y);
            r.safe_set_size = static_cast<long long>(state.count());
            r.beta = step.beta;
            r.acquisition_value = step.acquisition_value;
            r.grid_index = static_cast<long long>(step.index);
            r.degenerate = step.degenerate;
            trace.push_back(std::move(r));
            post = post.add_observation(x, y);
        }
        return trace;
    }

    if (problem.seed_points.empty()) throw ArgumentError("LoS-GP-UCB needs at least one seed point");
    ContinuousSafeRegion region{problem.seed_points, config.seed_radius, config.safety, config.h};
    GpPosterior post(config.kernel, Dataset(problem.box), config.lambda);
    for (int t = 1; t <= config.budget; ++t) {
        const auto step = step_los_gp_ucb(config, region, post, rng);
        const double y = oracle(step.x);
        auto r = record(t, step.x, y);
        r.beta = step.beta;
        r.acquisition_value = step.acquisition_value;
        trace.push_back(std::move(r));
        post = post.add_observation(step.x, y);
    }
    return trace;
}

}  // namespace safebo
