#pragma once

// Brute-force search over re-routing flow splits. Each OD in `free_ods`
// splits its demand over its drop regions on a grid of q/steps; the others
// keep their values from `base`. Infeasible points (PUDO bounds) are skipped.

#include "curbflow/reroute.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace oracle {

struct GridBest {
    curbflow::FlowState x;
    double objective = std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;
};

inline GridBest grid_search(const curbflow::ReroutingInstance& inst, const curbflow::FlowState& base,
                            const std::vector<std::size_t>& free_ods, int steps,
                            const std::function<double(const curbflow::FlowState&)>& objective) {
    GridBest best;
    curbflow::FlowState x = base;

    // Assign units to drop slots of OD `o` starting at slot j.
    std::function<void(std::size_t, std::size_t, int)> fill;
    std::function<void(std::size_t)> next_od = [&](std::size_t k) {
        if (k == free_ods.size()) {
            const auto f = curbflow::check_feasibility(inst, x);
            if (f.bounds > 1e-9 || f.conservation > 1e-9) return;
            ++best.evaluated;
            const double v = objective(x);
            if (v < best.objective) {
                best.objective = v;
                best.x = x;
            }
            return;
        }
        fill(k, 0, steps);
    };
    fill = [&](std::size_t k, std::size_t j, int left) {
        const auto& od = inst.ods[free_ods[k]];
        const double unit = od.q / steps;
        const auto var = static_cast<Eigen::Index>(od.first_var + j);
        if (j + 1 == od.drop.size()) {
            x(var) = left * unit;
            next_od(k + 1);
            return;
        }
        for (int u = 0; u <= left; ++u) {
            x(var) = u * unit;
            fill(k, j + 1, left - u);
        }
    };
    next_od(0);
    return best;
}

} // namespace oracle
