#include "curbflow/errors.hpp"
#include "curbflow/reroute.hpp"

#include "fixtures/six_ring.hpp"
#include "oracles/grid_search.hpp"

#include <doctest.h>

#include <random>

using namespace curbflow;

namespace {

ReroutingInstance make(const std::vector<AdjacencyPair>& edges, const std::map<RegionId, double>& dist,
                       std::vector<OdDemand> demand, const std::map<RegionId, double>& speed,
                       const std::map<RegionId, double>& theta, ReroutingParams params = {}) {
    return build_instance(build_region_graph(edges, dist), std::move(demand), speed, theta, params);
}

// Direct evaluation of the TTT parts from the instance data, independent of
// compute_psi and decompose_ttt.
struct Parts {
    double before = 0.0, after = 0.0, counterfactual = 0.0, remain = 0.0, detour = 0.0;
};

Parts direct_parts(const ReroutingInstance& inst, const FlowState& x) {
    const std::size_t n = inst.region_count();
    std::vector<double> dt(n, 0.0);
    for (const auto& od : inst.ods)
        for (std::size_t j = 0; j < od.drop.size(); ++j) dt[od.drop[j]] += x(od.first_var + j);
    std::vector<double> yt(n);
    for (std::size_t s = 0; s < n; ++s)
        yt[s] = std::max(inst.params.min_speed, inst.speed[s] + inst.theta[s] * (dt[s] - inst.d[s]));
    auto drive = [&](const std::vector<std::size_t>& p, const std::vector<double>& y) {
        double t = 0.0;
        for (auto v : p) t += inst.graph.mean_trip_distance_at(v) / y[v];
        return t;
    };
    auto walk = [&](const std::vector<std::size_t>& p) {
        double miles = 0.0;
        for (auto v : p) miles += inst.graph.mean_trip_distance_at(v);
        return miles / inst.params.walk_speed;
    };
    Parts out;
    for (const auto& od : inst.ods) {
        const double m = drive(od.drive[0], inst.speed);
        out.before += od.q * m;
        out.counterfactual -= od.q * m;
        const double f = x(od.first_var);
        out.after += f * drive(od.drive[0], yt);
        out.counterfactual += f * m;
        out.remain += f * (drive(od.drive[0], yt) - m);
        for (std::size_t j = 1; j < od.drop.size(); ++j) {
            const double h = x(od.first_var + j);
            const double m_rn = drive(od.drive[j], inst.speed);
            const double m_ns = drive(od.walk[j], inst.speed);
            const double mt_rn = drive(od.drive[j], yt);
            const double u = walk(od.walk[j]);
            out.after += h * (mt_rn + u);
            out.counterfactual += h * (m_rn + m_ns);
            out.detour += h * (mt_rn - m_rn + u - m_ns);
        }
    }
    return out;
}

// Random split of every OD over its drop regions.
FlowState random_flows(const ReroutingInstance& inst, std::mt19937_64& rng) {
    std::exponential_distribution<double> e(1.0);
    FlowState x(static_cast<Eigen::Index>(inst.var_count));
    for (const auto& od : inst.ods) {
        double sum = 0.0;
        for (std::size_t j = 0; j < od.drop.size(); ++j) sum += (x(od.first_var + j) = e(rng));
        for (std::size_t j = 0; j < od.drop.size(); ++j) x(od.first_var + j) *= od.q / sum;
    }
    return x;
}

std::vector<RegionId> ids(const ReroutingInstance& inst, const std::vector<std::size_t>& p) {
    std::vector<RegionId> out;
    for (auto v : p) out.push_back(inst.graph.regions()[v]);
    return out;
}

} // namespace

TEST_CASE("region paths") {
    const std::vector<AdjacencyPair> chain{{1, 2}, {2, 3}};
    const auto g = build_region_graph(chain, std::vector<RegionId>{1, 2, 3});
    const std::map<RegionId, double> w{{1, 1.0}, {2, 1.0}, {3, 1.0}};
    CHECK(shortest_region_path(g, w, 1, 3) == RegionPath{1, 2, 3});
    CHECK(shortest_region_path(g, w, 2, 2) == RegionPath{2});

    // Two equal routes around a square: 1-2-4 and 1-3-4.
    const std::vector<AdjacencyPair> square{{1, 2}, {1, 3}, {2, 4}, {3, 4}};
    const auto sq = build_region_graph(square, std::vector<RegionId>{1, 2, 3, 4});
    std::map<RegionId, double> ws{{1, 1.0}, {2, 0.5}, {3, 0.5}, {4, 1.0}};
    CHECK(shortest_region_path(sq, ws, 1, 4) == RegionPath{1, 2, 4});
    CHECK(shortest_region_path(sq, ws, 4, 1) == RegionPath{4, 2, 1});
    ws[2] = 0.6;
    CHECK(shortest_region_path(sq, ws, 1, 4) == RegionPath{1, 3, 4});

    const auto split = build_region_graph(std::vector<AdjacencyPair>{{1, 2}}, std::vector<RegionId>{1, 2, 3});
    CHECK_THROWS_AS(shortest_region_path(split, w, 1, 3), InputError);
}

TEST_CASE("instance layout") {
    const auto inst = fixtures::six_ring();
    REQUIRE(inst.ods.size() == 3u);
    // Ordered by origin then destination: 1->4, 1->5, 1->6.
    CHECK(inst.graph.regions()[inst.ods[1].dest] == 5);
    CHECK(inst.ods[1].first_var == 3u);
    CHECK(ids(inst, inst.ods[1].drop) == std::vector<RegionId>{5, 4, 6});
    CHECK(ids(inst, inst.ods[1].walk[1]) == std::vector<RegionId>{4, 5});
    CHECK(ids(inst, inst.ods[1].drive[0]) == std::vector<RegionId>{1, 2, 4, 5});
    CHECK(inst.var_count == 9u);
    CHECK(inst.d[inst.graph.index_of(5)] == 100.0);
    CHECK(inst.d[inst.graph.index_of(2)] == 0.0);
}

TEST_CASE("instance validation") {
    const auto edges = fixtures::six_ring_edges();
    const auto g = build_region_graph(edges, fixtures::six_ring_distances());
    auto speeds = fixtures::six_ring_speeds();
    ReroutingParams p;
    p.beta = 2.0;
    p.gamma = 1.5;
    CHECK_THROWS_AS(build_instance(g, fixtures::six_ring_demand(), speeds, {}, p), InputError);
    speeds.erase(3);
    CHECK_THROWS_AS(build_instance(g, fixtures::six_ring_demand(), speeds, {}, {}), InputError);
    const auto nodist = build_region_graph(edges, std::vector<RegionId>{1, 2, 3, 4, 5, 6});
    CHECK_THROWS_AS(build_instance(nodist, fixtures::six_ring_demand(), fixtures::six_ring_speeds(), {}, {}),
                    InputError);
    CHECK_THROWS_AS(build_instance(g, {{1, 9, 1.0}}, fixtures::six_ring_speeds(), {}, {}), InputError);

    // Duplicate rows merge; lambda scales the merged flow.
    p = {};
    p.lambda = 2.0;
    const auto inst = build_instance(g, {{1, 5, 10.0}, {1, 5, 5.0}, {2, 3, 0.0}}, fixtures::six_ring_speeds(), {}, p);
    REQUIRE(inst.ods.size() == 1u);
    CHECK(inst.ods[0].q == 30.0);
}

namespace {

// 1 (origin) - 2 (destination) - 3 (neighbor), with a little demand into 3.
ReroutingInstance three_chain() {
    return make({{1, 2}, {2, 3}}, {{1, 1.0}, {2, 0.4}, {3, 0.3}}, {{1, 2, 100.0}, {1, 3, 10.0}},
                {{1, 10.0}, {2, 10.0}, {3, 10.0}}, {{2, -0.05}});
}

} // namespace

TEST_CASE("psi without re-routing reproduces the baseline") {
    const auto inst = three_chain();
    const auto x = no_reroute_flows(inst);
    const auto psi = compute_psi(inst, x);
    for (std::size_t s = 0; s < 3; ++s) {
        CHECK(psi.d_tilde[s] == inst.d[s]);
        CHECK(psi.delta[s] == 0.0);
        CHECK(psi.y_tilde[s] == inst.speed[s]);
    }
    for (const auto& od : inst.ods) CHECK(psi.cost(od.first_var) == baseline_time(inst, od.drive[0]));
}

TEST_CASE("psi after moving drop-offs to a neighbor") {
    const auto inst = three_chain();
    // OD 1->2 drops at [2, 1, 3]; OD 1->3 at [3, 2].
    FlowState x(5);
    x << 80, 0, 20, 10, 0;
    const auto psi = compute_psi(inst, x);
    CHECK(psi.d_tilde[1] == 80.0);
    CHECK(psi.d_tilde[2] == 30.0);
    CHECK(psi.delta[1] == -20.0);
    CHECK(psi.y_tilde[1] == doctest::Approx(11.0).epsilon(1e-14));
    CHECK(psi.walk[2] == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(psi.cost(2) == doctest::Approx(1.0 / 10 + 0.4 / 11 + 0.3 / 10 + 0.2).epsilon(1e-14));
    CHECK(psi.clipped == 0u);

    // Piling onto region 2 with a large effect hits the speed floor.
    auto heavy = make({{1, 2}, {2, 3}}, {{1, 1.0}, {2, 0.4}, {3, 0.3}}, {{1, 2, 100.0}, {1, 3, 100.0}},
                      {{1, 10.0}, {2, 10.0}, {3, 10.0}}, {{2, -0.5}});
    FlowState y(5);
    y << 100, 0, 0, 0, 100;
    const auto p2 = compute_psi(heavy, y);
    CHECK(p2.clipped == 1u);
    CHECK(p2.y_tilde[1] == heavy.params.min_speed);
}

TEST_CASE("subproblem rows") {
    const auto inst = make({{1, 2}}, {{1, 1.0}, {2, 1.0}}, {{1, 2, 50.0}}, {{1, 10.0}, {2, 10.0}}, {});
    const auto lp = build_subproblem(inst, compute_psi(inst, no_reroute_flows(inst)));
    CHECK(lp.vars() == 2u);
    CHECK(lp.a_eq.rows() == 1);
    std::size_t involved = 0;
    for (bool b : inst.involved) involved += b;
    CHECK(involved == 2u);
    CHECK(lp.a_ub.rows() == 2 * 2);
}

TEST_CASE("gamma of one caps every drop region at its baseline") {
    ReroutingParams p;
    p.gamma = 1.0;
    const auto inst = make({{1, 2}, {2, 3}}, {{1, 1.0}, {2, 0.4}, {3, 0.3}}, {{1, 2, 100.0}, {1, 3, 10.0}},
                           {{1, 10.0}, {2, 10.0}, {3, 10.0}}, {{2, -0.5}}, p);
    const auto lp = solve_lp(build_subproblem(inst, compute_psi(inst, no_reroute_flows(inst))));
    REQUIRE(lp.status == LpStatus::optimal);
    const auto psi = compute_psi(inst, lp.x);
    for (std::size_t s = 0; s < 3; ++s) CHECK(psi.d_tilde[s] <= inst.d[s] + 1e-9);
    // Any detour into 3 displaces 3's own drop-offs one for one.
    CHECK(lp.x(2) == doctest::Approx(10.0 - lp.x(3)));
}

TEST_CASE("linear subproblem matches grid search on two OD pairs") {
    ReroutingParams p;
    p.gamma = 1.5;
    const auto inst = make({{1, 2}}, {{1, 1.0}, {2, 0.5}}, {{1, 2, 100.0}, {2, 1, 60.0}}, {{1, 8.0}, {2, 5.0}},
                           {{1, -0.02}, {2, -0.2}}, p);
    for (int variant = 0; variant < 3; ++variant) {
        FlowState base = no_reroute_flows(inst);
        if (variant == 1) base << 70, 30, 50, 10;
        if (variant == 2) base << 60, 40, 60, 0;
        const auto psi = compute_psi(inst, base);
        const auto lp = solve_lp(build_subproblem(inst, psi));
        REQUIRE(lp.status == LpStatus::optimal);
        const auto grid = oracle::grid_search(inst, base, {0, 1}, 100,
                                              [&](const FlowState& x) { return psi.cost.dot(x); });
        REQUIRE(grid.evaluated > 0u);
        CAPTURE(variant);
        CHECK(std::abs(lp.objective - grid.objective) <= 1e-3 * std::abs(grid.objective));
        CHECK(lp.objective <= grid.objective + 1e-9);
    }
}

TEST_CASE("no effect means no detours") {
    const auto edges = fixtures::six_ring_edges();
    const auto inst = build_instance(build_region_graph(edges, fixtures::six_ring_distances()),
                                     fixtures::six_ring_demand(), fixtures::six_ring_speeds(5.0), {}, {});
    const auto res = solve_rerouting(inst);
    CHECK(res.converged);
    CHECK(res.fixed_point);
    CHECK(res.flows == no_reroute_flows(inst));
    CHECK(res.ttt.pudo_remain == 0.0);
    CHECK(res.ttt.pudo_detour == 0.0);
    CHECK(res.ttt.delta == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(improvement_rate(res.ttt.before, res.ttt.after) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("TTT decomposition identity on random flows") {
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::map<RegionId, double> dist, speed, theta;
        for (RegionId v = 1; v <= 4; ++v) {
            dist[v] = u(rng);
            speed[v] = 5.0 + 20.0 * u(rng);
            theta[v] = -0.1 * u(rng);
        }
        std::vector<OdDemand> demand;
        for (RegionId r = 1; r <= 4; ++r)
            for (RegionId s = 1; s <= 4; ++s)
                if (u(rng) < 0.5) demand.push_back({r, s, std::floor(100.0 * u(rng))});
        if (demand.empty()) continue;
        ReroutingParams p;
        p.gamma = 100.0;
        const auto inst = make({{1, 2}, {2, 3}, {3, 4}, {4, 1}}, dist, demand, speed, theta, p);
        const FlowState x = random_flows(inst, rng);
        const auto b = decompose_ttt(inst, x);
        const auto ref = direct_parts(inst, x);
        CAPTURE(trial);
        CHECK(std::abs(b.delta - (b.counterfactual + b.pudo_remain + b.pudo_detour)) <= 1e-9 * (1.0 + std::abs(b.delta)));
        CHECK(b.before == doctest::Approx(ref.before).epsilon(1e-12));
        CHECK(b.after == doctest::Approx(ref.after).epsilon(1e-12));
        CHECK(b.counterfactual == doctest::Approx(ref.counterfactual).scale(1.0).epsilon(1e-10));
        CHECK(b.pudo_remain == doctest::Approx(ref.remain).scale(1.0).epsilon(1e-10));
        CHECK(b.pudo_detour == doctest::Approx(ref.detour).scale(1.0).epsilon(1e-10));
        CHECK(total_travel_time(inst, x) == doctest::Approx(ref.after).epsilon(1e-12));

        const auto zero = decompose_ttt(inst, no_reroute_flows(inst));
        CHECK(zero.counterfactual == doctest::Approx(0.0).scale(1.0));
        CHECK(zero.pudo_remain == 0.0);
        CHECK(zero.pudo_detour == 0.0);
    }
}

TEST_CASE("detour-only change charges remain flows for the speed change") {
    // Only OD 1->2 detours; OD 1->3 keeps all its flow at 3, whose speed
    // changes because detoured drop-offs arrive there.
    auto inst = make({{1, 2}, {2, 3}}, {{1, 1.0}, {2, 0.4}, {3, 0.3}}, {{1, 2, 100.0}, {1, 3, 10.0}},
                     {{1, 10.0}, {2, 10.0}, {3, 10.0}}, {{2, -0.05}, {3, -0.1}});
    FlowState x(5);
    x << 70, 0, 30, 10, 0;
    const auto b = decompose_ttt(inst, x);
    // Remain: f_12 over path [1,2] and f_13 over path [1,2,3] at updated speeds.
    const double y2 = 10.0 + 0.05 * 30;
    const double y3 = 10.0 - 0.1 * 30;
    const double remain = 70 * (0.4 / y2 - 0.4 / 10) + 10 * (0.4 / y2 - 0.4 / 10 + 0.3 / y3 - 0.3 / 10);
    CHECK(b.pudo_remain == doctest::Approx(remain).epsilon(1e-12));
    const double detour = 30 * ((0.4 / y2 - 0.4 / 10) + (0.3 / y3 - 0.3 / 10) + 0.7 / 3.5 - (0.3 + 0.4) / 10);
    CHECK(b.pudo_detour == doctest::Approx(detour).epsilon(1e-12));
}

TEST_CASE("six-region ring: detours into the short neighbors pay off") {
    const auto inst = fixtures::six_ring();
    const auto res = solve_rerouting(inst);
    CHECK(res.converged);
    CHECK(res.final_change < 1e-3);
    CHECK(res.ttt.delta < 0.0);
    CHECK(res.log.back().objective <= res.log.front().objective);
    const auto& od = inst.ods[1];
    CHECK(res.flows(od.first_var + 1) > 0.0); // into 4
    CHECK(res.flows(od.first_var + 2) > 0.0); // into 6

    // Brute force over the 1->5 split agrees that detouring beats staying.
    const auto grid = oracle::grid_search(inst, no_reroute_flows(inst), {1}, 100,
                                          [&](const FlowState& x) { return total_travel_time(inst, x); });
    CHECK(grid.objective < res.ttt.before);
    CHECK(grid.x(od.first_var + 1) + grid.x(od.first_var + 2) > 0.0);
    MESSAGE("solver TTT " << res.ttt.after << ", grid optimum " << grid.objective << ", baseline " << res.ttt.before);
}

TEST_CASE("every iterate stays feasible") {
    const auto inst = fixtures::six_ring(1.3);
    for (std::size_t k = 1; k <= 12; ++k) {
        SolverConfig cfg;
        cfg.max_iter = k;
        const auto res = solve_rerouting(inst, cfg);
        const auto f = check_feasibility(inst, res.flows);
        CAPTURE(k);
        CHECK(f.conservation <= 1e-9);
        CHECK(f.negativity == 0.0);
        CHECK(f.bounds <= 1e-7);
    }
}

TEST_CASE("a fixed point is returned unchanged") {
    const auto inst = fixtures::six_ring();
    const auto first = solve_rerouting(inst);
    // Restart at the LP optimum of the final costs; if that is the point
    // itself the loop must stop at once.
    const auto lp = solve_lp(build_subproblem(inst, compute_psi(inst, first.flows)));
    REQUIRE(lp.status == LpStatus::optimal);
    if (first.fixed_point) CHECK((lp.x - first.flows).norm() <= 1e-9 * (1.0 + first.flows.norm()));

    const auto flat = build_instance(inst.graph, fixtures::six_ring_demand(), fixtures::six_ring_speeds(5.0), {}, {});
    const auto res = solve_rerouting(flat);
    CHECK(res.fixed_point);
    CHECK(res.iterations == 1u);
    CHECK(res.log.size() == 1u);
    CHECK(res.log[0].step_norm == 0.0);
}

TEST_CASE("convergence on assorted instances") {
    std::mt19937_64 rng(90);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::map<RegionId, double> dist, speed, theta;
        for (RegionId v = 1; v <= 6; ++v) {
            dist[v] = 0.2 + u(rng);
            speed[v] = 3.0 + 15.0 * u(rng);
            theta[v] = -0.08 * u(rng);
        }
        std::vector<OdDemand> demand;
        for (int k = 0; k < 6; ++k) {
            demand.push_back({1 + static_cast<RegionId>(6 * u(rng)) % 6, 1 + static_cast<RegionId>(6 * u(rng)) % 6,
                              std::floor(80.0 * u(rng)) + 1.0});
        }
        ReroutingParams p;
        p.gamma = 1.5;
        const auto inst = make(fixtures::six_ring_edges(), dist, demand, speed, theta, p);
        const auto res = solve_rerouting(inst);
        CAPTURE(trial);
        CHECK(res.converged);
        CHECK(res.final_change < 1e-3);
        CHECK(res.log.back().objective <= res.log.front().objective + 1e-12);
        CHECK(res.ttt.after <= res.ttt.before + 1e-9);
        const auto f = check_feasibility(inst, res.flows);
        CHECK(f.bounds <= 1e-7);
        CHECK(f.conservation <= 1e-9);
    }
}

TEST_CASE("scaling demand never lowers baseline TTT") {
    const auto edges = fixtures::six_ring_edges();
    const auto g = build_region_graph(edges, fixtures::six_ring_distances());
    double prev = -1.0;
    for (double lambda : {0.0, 0.5, 1.0, 1.2, 2.0, 5.0}) {
        ReroutingParams p;
        p.lambda = lambda;
        const auto inst = build_instance(g, fixtures::six_ring_demand(), fixtures::six_ring_speeds(),
                                         fixtures::six_ring_effects(), p);
        const double before = decompose_ttt(inst, no_reroute_flows(inst)).before;
        CHECK(before >= prev);
        prev = before;
    }
}

TEST_CASE("improvement rate") {
    CHECK(improvement_rate(100.0, 98.0) == doctest::Approx(2.0));
    CHECK(improvement_rate(5.0, 5.0) == 0.0);
    CHECK_THROWS_AS(improvement_rate(0.0, 1.0), InputError);
}

TEST_CASE("unreachable bounds name the regions") {
    ReroutingParams p;
    p.beta = 0.95;
    p.gamma = 0.96;
    const auto edges = fixtures::six_ring_edges();
    const auto inst = build_instance(build_region_graph(edges, fixtures::six_ring_distances()),
                                     fixtures::six_ring_demand(), fixtures::six_ring_speeds(),
                                     fixtures::six_ring_effects(), p);
    try {
        solve_rerouting(inst);
        FAIL("expected InfeasibleProblem");
    } catch (const InfeasibleProblem& e) {
        const std::string what = e.what();
        CHECK(what.find("regions") != std::string::npos);
        CHECK(what.find('5') != std::string::npos);
    }
}
