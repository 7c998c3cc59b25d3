#pragma once

#include "curbflow/data_model.hpp"
#include "curbflow/lp.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <vector>

namespace curbflow {

// Region sequence from r to s, both endpoints included.
using RegionPath = std::vector<RegionId>;

// Dijkstra with node weights (a path costs the sum of its regions' weights).
// Equal-cost paths resolve to the lexicographically smaller id sequence.
// Throws InputError when s is unreachable from r.
RegionPath shortest_region_path(const RegionGraph& graph, const std::map<RegionId, double>& weights, RegionId r,
                                RegionId s);

struct OdDemand {
    RegionId origin = 0;
    RegionId dest = 0;
    double flow = 0.0; // vehicles per interval
};

struct ReroutingParams {
    double walk_speed = 3.5; // k, mph
    double beta = 0.0;
    double gamma = 1.5;
    double lambda = 1.0;     // demand multiplier applied to q only
    double min_speed = 0.5;  // floor on updated speeds, mph
};

// One interval's re-routing problem. Graph distances are the mean trip
// distances l_v (miles). Variables are ordered per OD pair: f_rs first, then
// h_rsn for each n in N(s) in ascending id order.
struct ReroutingInstance {
    RegionGraph graph;
    std::vector<OdDemand> demand;         // q after scaling by lambda
    std::vector<double> speed;            // baseline y per region index, mph
    std::vector<double> theta;            // effect per region index, mph per PUDO
    ReroutingParams params;

    // Resolved by build_instance.
    struct Od {
        std::size_t origin = 0; // region index
        std::size_t dest = 0;
        double q = 0.0;
        std::size_t first_var = 0;
        std::vector<std::size_t> drop;      // drop region indices: dest, then N(dest)
        std::vector<std::vector<std::size_t>> drive; // path origin -> drop[j]
        std::vector<std::vector<std::size_t>> walk;  // path drop[j] -> dest (empty for j = 0)
    };
    std::vector<Od> ods;
    std::size_t var_count = 0;
    std::vector<double> d;  // baseline drop-offs per region index
    std::vector<bool> involved; // region receives demand or can receive a detour

    std::size_t region_count() const { return graph.size(); }
};

// Validates inputs, scales demand by lambda, merges duplicate OD rows and
// resolves paths on baseline travel times l_v / y_v.
ReroutingInstance build_instance(RegionGraph graph, std::vector<OdDemand> demand,
                                 const std::map<RegionId, double>& speed, const std::map<RegionId, double>& theta,
                                 const ReroutingParams& params);

// Flow vector in the instance's variable order.
using FlowState = Eigen::VectorXd;

FlowState no_reroute_flows(const ReroutingInstance& inst);

struct PsiOutput {
    std::vector<double> d_tilde;
    std::vector<double> delta;
    std::vector<double> y_tilde;
    Eigen::VectorXd cost;        // m~ for f variables, m~_rn + u_ns for h variables
    std::vector<double> walk;    // u_ns per h variable (0 for f)
    std::size_t clipped = 0;     // regions whose speed hit the floor
};

PsiOutput compute_psi(const ReroutingInstance& inst, const FlowState& flows);

// Baseline driving time over a path of region indices.
double baseline_time(const ReroutingInstance& inst, const std::vector<std::size_t>& path);

// Fixes the Psi costs and returns the linear program over the same variables:
// conservation per OD, beta d <= d~ <= gamma d on involved regions.
LpProblem build_subproblem(const ReroutingInstance& inst, const PsiOutput& psi);

double total_travel_time(const ReroutingInstance& inst, const FlowState& flows);

struct TTTBreakdown {
    double before = 0.0;
    double after = 0.0;
    double delta = 0.0;
    double counterfactual = 0.0;
    double pudo_remain = 0.0;
    double pudo_detour = 0.0;
};

TTTBreakdown decompose_ttt(const ReroutingInstance& inst, const FlowState& flows);

double improvement_rate(double ttt_before, double ttt_after);

struct SolverConfig {
    double momentum = 0.8;
    double step = 0.5;
    double tol = 1e-3;
    std::size_t max_iter = 500;
    bool backtrack = true; // halve a step that would raise TTT
};

struct IterationRecord {
    std::size_t iteration = 0;
    double objective = 0.0;    // TTT at the iterate before the step
    double lp_objective = 0.0; // linearised optimum at that iterate
    double step_norm = 0.0;    // l2 change applied
    double scale = 1.0;        // fraction of the momentum step kept; 0 when it was dropped
    std::size_t clipped = 0;
};

struct ReroutingResult {
    FlowState flows;
    TTTBreakdown ttt;
    std::vector<IterationRecord> log;
    std::size_t iterations = 0;
    bool converged = false;
    bool fixed_point = false;
    double final_change = 0.0;
    std::size_t clip_warnings = 0;
};

// Throws InfeasibleProblem naming the regions whose bounds cannot be met.
ReroutingResult solve_rerouting(const ReroutingInstance& inst, const SolverConfig& config = {});

// Max violation of conservation, non-negativity and the d~ bounds.
struct Feasibility {
    double conservation = 0.0;
    double negativity = 0.0;
    double bounds = 0.0;
};
Feasibility check_feasibility(const ReroutingInstance& inst, const FlowState& flows);

} // namespace curbflow
