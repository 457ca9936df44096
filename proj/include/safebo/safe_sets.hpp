#pragma once

#include "safebo/bounds.hpp"
#include "safebo/gp.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace safebo {

/// Regular grid over a box, flattened row-major (last dimension varies fastest).
class GridDomain {
public:
    GridDomain(Box box, std::vector<int> points_per_dim);

    const Box& box() const { return box_; }
    const std::vector<int>& points_per_dim() const { return counts_; }
    const std::vector<Point>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    const Point& operator[](std::size_t i) const { return points_[i]; }

private:
    Box box_;
    std::vector<int> counts_;
    std::vector<Point> points_;
};

/// Certified-safe subset of a grid plus the seed set S0 and threshold h.
class DiscreteSafeSet {
public:
    DiscreteSafeSet(std::shared_ptr<const GridDomain> grid, std::vector<std::size_t> seeds, double h);

    const GridDomain& grid() const { return *grid_; }
    const std::shared_ptr<const GridDomain>& grid_ptr() const { return grid_; }
    const std::vector<std::size_t>& seeds() const { return seeds_; }
    double threshold() const { return h_; }

    bool is_safe(std::size_t i) const { return safe_[i] != 0; }
    std::size_t count() const;
    std::vector<std::size_t> indices() const;

    /// Returns a copy with the extra indices marked safe.
    DiscreteSafeSet with_safe(std::span<const std::size_t> extra) const;

private:
    std::shared_ptr<const GridDomain> grid_;
    std::vector<std::size_t> seeds_;
    std::vector<char> safe_;
    double h_;
};

/// Grid-free safe region: x is safe iff it is within seed_radius of a seed
/// point or the Lipschitz lower envelope of the data certifies f(x) >= h.
struct ContinuousSafeRegion {
    std::vector<Point> seeds;
    double seed_radius = 0.0;
    LipschitzSafetyModel model;
    double h = 0.0;

    bool in_seed_set(const Point& x) const;
    bool contains(const Dataset& data, const Point& x) const;
};

/// GP lower/upper bounds mu -/+ beta sigma at every grid point.
struct GridBounds {
    std::vector<double> lower;
    std::vector<double> upper;
};
GridBounds gp_bounds_on_grid(const GpPosterior& post, double beta, const GridDomain& grid);

/// Adds every grid point x with l(x') - L||x - x'|| >= h for some safe x'.
DiscreteSafeSet update_safe_set_gp(const DiscreteSafeSet& state, std::span<const double> lower, double lipschitz);
DiscreteSafeSet update_safe_set_gp(const DiscreteSafeSet& state, const GpPosterior& post,
                                   const BetaSchedule& schedule, double lipschitz);

/// x is safe iff x is a seed or lipschitz_lower_envelope(data, model, x) >= h.
DiscreteSafeSet update_safe_set_lipschitz(const DiscreteSafeSet& state, const Dataset& data,
                                          const LipschitzSafetyModel& model);

/// {x safe : upper(x) >= max over safe x' of lower(x')}, ascending indices.
std::vector<std::size_t> maximizer_set(const DiscreteSafeSet& state, std::span<const double> lower,
                                       std::span<const double> upper);

/// {x safe : exists unsafe z with upper(x) - noise_offset - L||x - z|| >= h}, ascending indices.
std::vector<std::size_t> expander_set(const DiscreteSafeSet& state, std::span<const double> upper, double lipschitz,
                                      double noise_offset);

}  // namespace safebo
