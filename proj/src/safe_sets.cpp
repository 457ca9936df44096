#include "safebo/safe_sets.hpp"

#include "safebo/errors.hpp"

#include <algorithm>
#include <limits>

namespace safebo {

GridDomain::GridDomain(Box box, std::vector<int> points_per_dim) : box_(std::move(box)), counts_(std::move(points_per_dim)) {
    if (static_cast<Eigen::Index>(counts_.size()) != box_.dim()) {
        throw ArgumentError("grid needs one point count per box dimension");
    }
    std::size_t total = 1;
    for (int c : counts_) {
        if (c < 1) throw ArgumentError("grid point counts must be positive");
        total *= static_cast<std::size_t>(c);
    }
    const auto d = box_.dim();
    points_.reserve(total);
    std::vector<int> idx(counts_.size(), 0);
    for (std::size_t n = 0; n < total; ++n) {
        Point p(d);
        for (Eigen::Index k = 0; k < d; ++k) {
            const int c = counts_[k];
            const double frac = c == 1 ? 0.0 : static_cast<double>(idx[k]) / (c - 1);
            p[k] = box_.lower[k] + frac * (box_.upper[k] - box_.lower[k]);
        }
        points_.push_back(std::move(p));
        for (auto k = static_cast<std::ptrdiff_t>(d) - 1; k >= 0; --k) {
            if (++idx[k] < counts_[k]) break;
            idx[k] = 0;
        }
    }
}

DiscreteSafeSet::DiscreteSafeSet(std::shared_ptr<const GridDomain> grid, std::vector<std::size_t> seeds, double h)
    : grid_(std::move(grid)), seeds_(std::move(seeds)), h_(h) {
    if (!grid_) throw ArgumentError("safe set needs a grid");
    if (seeds_.empty()) throw ArgumentError("seed set S0 must be nonempty");
    safe_.assign(grid_->size(), 0);
    for (auto s : seeds_) {
        if (s >= grid_->size()) throw ArgumentError("seed index out of range");
        safe_[s] = 1;
    }
}

std::size_t DiscreteSafeSet::count() const {
    return static_cast<std::size_t>(std::count(safe_.begin(), safe_.end(), char{1}));
}

std::vector<std::size_t> DiscreteSafeSet::indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < safe_.size(); ++i) {
        if (safe_[i]) out.push_back(i);
    }
    return out;
}

DiscreteSafeSet DiscreteSafeSet::with_safe(std::span<const std::size_t> extra) const {
    DiscreteSafeSet next = *this;
    for (auto i : extra) next.safe_.at(i) = 1;
    return next;
}

bool ContinuousSafeRegion::in_seed_set(const Point& x) const {
    return std::any_of(seeds.begin(), seeds.end(), [&](const Point& s) { return (x - s).norm() <= seed_radius; });
}

bool ContinuousSafeRegion::contains(const Dataset& data, const Point& x) const {
    return in_seed_set(x) || lipschitz_lower_envelope(data, model, x) >= h;
}

GridBounds gp_bounds_on_grid(const GpPosterior& post, double beta, const GridDomain& grid) {
    GridBounds b;
    b.lower.resize(grid.size());
    b.upper.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto ci = gp_confidence_interval(post, beta, grid[i]);
        b.lower[i] = ci.lower;
        b.upper[i] = ci.upper;
    }
    return b;
}

namespace {

void require_nonempty(const DiscreteSafeSet& state) {
    if (state.count() == 0) throw InvalidStateError("current safe set is empty");
}

void require_aligned(const DiscreteSafeSet& state, std::span<const double> values) {
    if (values.size() != state.grid().size()) throw ArgumentError("per-point bounds are not aligned with the grid");
}

}  // namespace

DiscreteSafeSet update_safe_set_gp(const DiscreteSafeSet& state, std::span<const double> lower, double lipschitz) {
    if (!(lipschitz > 0.0)) throw ArgumentError("Lipschitz bound L must be positive");
    require_aligned(state, lower);
    require_nonempty(state);
    const auto& grid = state.grid();
    const double h = state.threshold();

    std::vector<std::size_t> certifiers;
    for (auto i : state.indices()) {
        if (lower[i] >= h) certifiers.push_back(i);
    }
    std::vector<std::size_t> added;
    for (std::size_t x = 0; x < grid.size(); ++x) {
        if (state.is_safe(x)) continue;
        for (auto c : certifiers) {
            if (lower[c] - lipschitz * (grid[x] - grid[c]).norm() >= h) {
                added.push_back(x);
                break;
            }
        }
    }
    return state.with_safe(added);
}

DiscreteSafeSet update_safe_set_gp(const DiscreteSafeSet& state, const GpPosterior& post,
                                   const BetaSchedule& schedule, double lipschitz) {
    const auto bounds = gp_bounds_on_grid(post, beta_value(schedule, post), state.grid());
    return update_safe_set_gp(state, bounds.lower, lipschitz);
}

DiscreteSafeSet update_safe_set_lipschitz(const DiscreteSafeSet& state, const Dataset& data,
                                          const LipschitzSafetyModel& model) {
    const auto& grid = state.grid();
    std::vector<std::size_t> added;
    if (!data.empty()) {
        for (std::size_t x = 0; x < grid.size(); ++x) {
            if (!state.is_safe(x) && lipschitz_lower_envelope(data, model, grid[x]) >= state.threshold()) {
                added.push_back(x);
            }
        }
    }
    return state.with_safe(added);
}

std::vector<std::size_t> maximizer_set(const DiscreteSafeSet& state, std::span<const double> lower,
                                       std::span<const double> upper) {
    require_aligned(state, lower);
    require_aligned(state, upper);
    require_nonempty(state);
    const auto safe = state.indices();
    double best_lower = -std::numeric_limits<double>::infinity();
    for (auto i : safe) best_lower = std::max(best_lower, lower[i]);
    std::vector<std::size_t> out;
    for (auto i : safe) {
        if (upper[i] >= best_lower) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> expander_set(const DiscreteSafeSet& state, std::span<const double> upper, double lipschitz,
                                      double noise_offset) {
    if (!(lipschitz > 0.0)) throw ArgumentError("Lipschitz bound L must be positive");
    require_aligned(state, upper);
    require_nonempty(state);
    const auto& grid = state.grid();
    const double h = state.threshold();
    std::vector<std::size_t> unsafe;
    for (std::size_t z = 0; z < grid.size(); ++z) {
        if (!state.is_safe(z)) unsafe.push_back(z);
    }
    std::vector<std::size_t> out;
    for (auto x : state.indices()) {
        const double slack = upper[x] - noise_offset - h;
        if (slack < 0.0) continue;
        for (auto z : unsafe) {
            if (upper[x] - noise_offset - lipschitz * (grid[x] - grid[z]).norm() >= h) {
                out.push_back(x);
                break;
            }
        }
    }
    return out;
}

}  // namespace safebo
