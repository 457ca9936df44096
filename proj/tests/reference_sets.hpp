#pragma once

// Exhaustive double-loop versions of the safe-set operations.

#include "safebo/bounds.hpp"
#include "safebo/safe_sets.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace safebo::testing {

inline std::vector<char> ref_update_gp(const DiscreteSafeSet& s, const std::vector<double>& lower, double L) {
    const auto& g = s.grid();
    std::vector<char> out(g.size(), 0);
    for (std::size_t x = 0; x < g.size(); ++x) {
        if (s.is_safe(x)) {
            out[x] = 1;
            continue;
        }
        for (std::size_t xp = 0; xp < g.size(); ++xp) {
            if (s.is_safe(xp) && lower[xp] - L * (g[x] - g[xp]).norm() >= s.threshold()) out[x] = 1;
        }
    }
    return out;
}

inline std::vector<char> ref_update_lipschitz(const DiscreteSafeSet& s, const Dataset& data, double L, double E) {
    const auto& g = s.grid();
    std::vector<char> out(g.size(), 0);
    for (std::size_t x = 0; x < g.size(); ++x) {
        if (s.is_safe(x)) out[x] = 1;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (data.outputs()[i] - E - L * (g[x] - data.inputs()[i]).norm() >= s.threshold()) out[x] = 1;
        }
    }
    return out;
}

inline std::vector<std::size_t> ref_maximizers(const DiscreteSafeSet& s, const std::vector<double>& lower,
                                               const std::vector<double>& upper) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lower.size(); ++i)
        if (s.is_safe(i)) best = std::max(best, lower[i]);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < upper.size(); ++i)
        if (s.is_safe(i) && upper[i] >= best) out.push_back(i);
    return out;
}

inline std::vector<std::size_t> ref_expanders(const DiscreteSafeSet& s, const std::vector<double>& upper, double L,
                                              double offset) {
    const auto& g = s.grid();
    std::vector<std::size_t> out;
    for (std::size_t x = 0; x < g.size(); ++x) {
        if (!s.is_safe(x)) continue;
        for (std::size_t z = 0; z < g.size(); ++z) {
            if (!s.is_safe(z) && upper[x] - offset - L * (g[x] - g[z]).norm() >= s.threshold()) {
                out.push_back(x);
                break;
            }
        }
    }
    return out;
}

}  // namespace safebo::testing
