#include "curbflow/reroute.hpp"

#include "curbflow/errors.hpp"
#include "curbflow/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace curbflow {

namespace {

// Indices-based Dijkstra shared by the public path function and instance
// building. Weights are per region index.
std::vector<std::size_t> dijkstra_path(const RegionGraph& g, const std::vector<double>& w, std::size_t src,
                                       std::size_t dst) {
    const std::size_t n = g.size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> cost(n, inf);
    std::vector<std::vector<RegionId>> ids(n); // id sequence, for tie-breaks
    std::vector<std::vector<std::size_t>> path(n);
    std::vector<bool> done(n, false);
    cost[src] = w[src];
    path[src] = {src};
    ids[src] = {g.regions()[src]};

    auto better = [&](double c, const std::vector<RegionId>& seq, std::size_t v) {
        const double tol = 1e-12 * std::max(1.0, std::abs(cost[v]));
        if (c < cost[v] - tol) return true;
        if (c > cost[v] + tol) return false;
        return seq < ids[v];
    };

    for (;;) {
        std::size_t u = n;
        for (std::size_t v = 0; v < n; ++v) {
            if (done[v] || cost[v] == inf) continue;
            if (u == n || better(cost[v], ids[v], u)) u = v;
        }
        if (u == n) break;
        done[u] = true;
        if (u == dst) break;
        for (std::size_t nb : g.neighbors_of_index(u)) {
            if (done[nb]) continue;
            const double c = cost[u] + w[nb];
            std::vector<RegionId> seq = ids[u];
            seq.push_back(g.regions()[nb]);
            if (cost[nb] == inf || better(c, seq, nb)) {
                cost[nb] = c;
                ids[nb] = std::move(seq);
                path[nb] = path[u];
                path[nb].push_back(nb);
            }
        }
    }
    if (!done[dst]) {
        throw InputError("region " + std::to_string(g.regions()[dst]) + " is unreachable from region " +
                         std::to_string(g.regions()[src]));
    }
    return path[dst];
}

double path_time(const ReroutingInstance& inst, const std::vector<std::size_t>& p, const std::vector<double>& speed) {
    double t = 0.0;
    for (std::size_t v : p) t += inst.graph.mean_trip_distance_at(v) / speed[v];
    return t;
}

double walk_time(const ReroutingInstance& inst, const std::vector<std::size_t>& p) {
    double miles = 0.0;
    for (std::size_t v : p) miles += inst.graph.mean_trip_distance_at(v);
    return miles / inst.params.walk_speed;
}

std::vector<double> drop_counts(const ReroutingInstance& inst, const FlowState& x) {
    std::vector<double> d(inst.region_count(), 0.0);
    for (const auto& od : inst.ods) {
        for (std::size_t j = 0; j < od.drop.size(); ++j) d[od.drop[j]] += x(static_cast<Eigen::Index>(od.first_var + j));
    }
    return d;
}

void check_flows(const ReroutingInstance& inst, const FlowState& x) {
    if (static_cast<std::size_t>(x.size()) != inst.var_count) {
        throw InputError("flow vector has " + std::to_string(x.size()) + " entries, instance has " +
                         std::to_string(inst.var_count) + " variables");
    }
}

std::string region_list(const ReroutingInstance& inst, const std::vector<std::size_t>& idx) {
    std::string s;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(inst.graph.regions()[idx[i]]);
    }
    return s;
}

// Regions whose d~ bounds the flows violate by more than `tol`.
std::vector<std::size_t> violated_regions(const ReroutingInstance& inst, const FlowState& x, double tol) {
    const auto dt = drop_counts(inst, x);
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < inst.region_count(); ++s) {
        if (!inst.involved[s]) continue;
        if (dt[s] > inst.params.gamma * inst.d[s] + tol || dt[s] < inst.params.beta * inst.d[s] - tol) out.push_back(s);
    }
    return out;
}

// Largest a in [0, 1] with x + a*v feasible. Conservation holds for any a
// because v sums to zero within each OD.
double max_feasible_fraction(const ReroutingInstance& inst, const FlowState& x, const FlowState& v) {
    double a = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (v(i) < 0.0) a = std::min(a, std::max(0.0, x(i)) / -v(i));
    }
    const auto dx = drop_counts(inst, x);
    const auto dv = drop_counts(inst, v);
    for (std::size_t s = 0; s < inst.region_count(); ++s) {
        if (!inst.involved[s]) continue;
        const double hi = inst.params.gamma * inst.d[s];
        const double lo = inst.params.beta * inst.d[s];
        if (dv[s] > 0.0) a = std::min(a, std::max(0.0, hi - dx[s]) / dv[s]);
        if (dv[s] < 0.0) a = std::min(a, std::max(0.0, dx[s] - lo) / -dv[s]);
    }
    return std::max(0.0, a);
}

} // namespace

RegionPath shortest_region_path(const RegionGraph& graph, const std::map<RegionId, double>& weights, RegionId r,
                                RegionId s) {
    std::vector<double> w(graph.size());
    for (std::size_t i = 0; i < graph.size(); ++i) {
        const auto it = weights.find(graph.regions()[i]);
        if (it == weights.end()) throw InputError("no path weight for region " + std::to_string(graph.regions()[i]));
        if (!(it->second >= 0.0)) throw InputError("path weights must be non-negative");
        w[i] = it->second;
    }
    const auto p = dijkstra_path(graph, w, graph.index_of(r), graph.index_of(s));
    RegionPath out;
    for (std::size_t i : p) out.push_back(graph.regions()[i]);
    return out;
}

ReroutingInstance build_instance(RegionGraph graph, std::vector<OdDemand> demand,
                                 const std::map<RegionId, double>& speed, const std::map<RegionId, double>& theta,
                                 const ReroutingParams& params) {
    if (!graph.has_distances()) throw InputError("re-routing needs mean trip distances for every region");
    if (!(params.walk_speed > 0.0)) throw InputError("walking speed must be positive");
    if (!(params.beta >= 0.0) || !(params.gamma >= params.beta)) {
        throw InputError("bounds must satisfy 0 <= beta <= gamma");
    }
    if (!(params.lambda >= 0.0)) throw InputError("demand multiplier must be non-negative");
    if (!(params.min_speed > 0.0)) throw InputError("speed floor must be positive");

    ReroutingInstance inst;
    inst.params = params;
    inst.graph = std::move(graph);
    const std::size_t n = inst.graph.size();
    inst.speed.resize(n);
    inst.theta.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const RegionId v = inst.graph.regions()[i];
        const auto it = speed.find(v);
        if (it == speed.end()) throw InputError("no baseline speed for region " + std::to_string(v));
        if (!(it->second > 0.0)) throw InputError("baseline speed must be positive (region " + std::to_string(v) + ")");
        inst.speed[i] = it->second;
        if (const auto t = theta.find(v); t != theta.end()) {
            inst.theta[i] = t->second;
        } else {
            log::info("no effect estimate for region ", v, "; using 0");
        }
    }
    for (const auto& [v, _] : theta) {
        if (!inst.graph.contains(v)) log::warn("effect given for region ", v, " which is not in the graph");
    }

    std::map<std::pair<std::size_t, std::size_t>, double> merged;
    for (const auto& q : demand) {
        if (!(q.flow >= 0.0) || !std::isfinite(q.flow)) throw InputError("demand flows must be finite and >= 0");
        if (!inst.graph.contains(q.origin) || !inst.graph.contains(q.dest)) {
            throw InputError("demand " + std::to_string(q.origin) + "->" + std::to_string(q.dest) +
                             " refers to a region outside the graph");
        }
        merged[{inst.graph.index_of(q.origin), inst.graph.index_of(q.dest)}] += q.flow * params.lambda;
    }
    for (const auto& [key, q] : merged) {
        if (q > 0.0) inst.demand.push_back({inst.graph.regions()[key.first], inst.graph.regions()[key.second], q});
    }

    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = inst.graph.mean_trip_distance_at(i) / inst.speed[i];
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> cache;
    auto path = [&](std::size_t a, std::size_t b) -> const std::vector<std::size_t>& {
        auto it = cache.find({a, b});
        if (it == cache.end()) it = cache.emplace(std::make_pair(a, b), dijkstra_path(inst.graph, w, a, b)).first;
        return it->second;
    };

    inst.d.assign(n, 0.0);
    inst.involved.assign(n, false);
    for (const auto& [key, q] : merged) {
        if (!(q > 0.0)) continue;
        ReroutingInstance::Od od;
        od.origin = key.first;
        od.dest = key.second;
        od.q = q;
        od.first_var = inst.var_count;
        od.drop.push_back(od.dest);
        for (std::size_t nb : inst.graph.neighbors_of_index(od.dest)) od.drop.push_back(nb);
        for (std::size_t j = 0; j < od.drop.size(); ++j) {
            od.drive.push_back(path(od.origin, od.drop[j]));
            od.walk.push_back(j == 0 ? std::vector<std::size_t>{} : path(od.drop[j], od.dest));
            inst.involved[od.drop[j]] = true;
        }
        inst.var_count += od.drop.size();
        inst.d[od.dest] += q;
        inst.ods.push_back(std::move(od));
    }
    return inst;
}

FlowState no_reroute_flows(const ReroutingInstance& inst) {
    FlowState x = FlowState::Zero(static_cast<Eigen::Index>(inst.var_count));
    for (const auto& od : inst.ods) x(static_cast<Eigen::Index>(od.first_var)) = od.q;
    return x;
}

double baseline_time(const ReroutingInstance& inst, const std::vector<std::size_t>& path) {
    return path_time(inst, path, inst.speed);
}

PsiOutput compute_psi(const ReroutingInstance& inst, const FlowState& flows) {
    check_flows(inst, flows);
    PsiOutput out;
    const std::size_t n = inst.region_count();
    out.d_tilde = drop_counts(inst, flows);
    out.delta.resize(n);
    out.y_tilde.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
        out.delta[s] = out.d_tilde[s] - inst.d[s];
        double y = inst.speed[s] + inst.theta[s] * out.delta[s];
        if (y < inst.params.min_speed) {
            y = inst.params.min_speed;
            ++out.clipped;
        }
        out.y_tilde[s] = y;
    }
    if (out.clipped > 0) log::debug("speed floor applied in ", out.clipped, " regions");
    out.cost.resize(static_cast<Eigen::Index>(inst.var_count));
    out.walk.assign(inst.var_count, 0.0);
    for (const auto& od : inst.ods) {
        for (std::size_t j = 0; j < od.drop.size(); ++j) {
            const std::size_t var = od.first_var + j;
            const double u = j == 0 ? 0.0 : walk_time(inst, od.walk[j]);
            out.walk[var] = u;
            out.cost(static_cast<Eigen::Index>(var)) = path_time(inst, od.drive[j], out.y_tilde) + u;
        }
    }
    return out;
}

LpProblem build_subproblem(const ReroutingInstance& inst, const PsiOutput& psi) {
    LpProblem p;
    const auto nv = static_cast<Eigen::Index>(inst.var_count);
    p.c = psi.cost;
    p.a_eq = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(inst.ods.size()), nv);
    p.b_eq.resize(static_cast<Eigen::Index>(inst.ods.size()));
    for (std::size_t o = 0; o < inst.ods.size(); ++o) {
        const auto& od = inst.ods[o];
        for (std::size_t j = 0; j < od.drop.size(); ++j) p.a_eq(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(od.first_var + j)) = 1.0;
        p.b_eq(static_cast<Eigen::Index>(o)) = od.q;
    }
    std::vector<std::size_t> rows;
    for (std::size_t s = 0; s < inst.region_count(); ++s) {
        if (inst.involved[s]) rows.push_back(s);
    }
    p.a_ub = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * rows.size()), nv);
    p.b_ub.resize(static_cast<Eigen::Index>(2 * rows.size()));
    std::vector<Eigen::Index> row_of(inst.region_count(), -1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        row_of[rows[i]] = static_cast<Eigen::Index>(2 * i);
        p.b_ub(static_cast<Eigen::Index>(2 * i)) = inst.params.gamma * inst.d[rows[i]];
        p.b_ub(static_cast<Eigen::Index>(2 * i + 1)) = -inst.params.beta * inst.d[rows[i]];
    }
    for (const auto& od : inst.ods) {
        for (std::size_t j = 0; j < od.drop.size(); ++j) {
            const Eigen::Index r = row_of[od.drop[j]];
            const auto c = static_cast<Eigen::Index>(od.first_var + j);
            p.a_ub(r, c) += 1.0;
            p.a_ub(r + 1, c) -= 1.0;
        }
    }
    return p;
}

double total_travel_time(const ReroutingInstance& inst, const FlowState& flows) {
    return compute_psi(inst, flows).cost.dot(flows);
}

TTTBreakdown decompose_ttt(const ReroutingInstance& inst, const FlowState& flows) {
    const PsiOutput psi = compute_psi(inst, flows);
    TTTBreakdown b;
    for (const auto& od : inst.ods) {
        const double m_rs = baseline_time(inst, od.drive[0]);
        b.before += od.q * m_rs;
        b.counterfactual -= od.q * m_rs;
        for (std::size_t j = 0; j < od.drop.size(); ++j) {
            const std::size_t var = od.first_var + j;
            const double x = flows(static_cast<Eigen::Index>(var));
            const double m_drive = baseline_time(inst, od.drive[j]);
            const double mt_drive = path_time(inst, od.drive[j], psi.y_tilde);
            if (j == 0) {
                b.counterfactual += x * m_drive;
                b.pudo_remain += x * (mt_drive - m_drive);
            } else {
                const double m_walk = baseline_time(inst, od.walk[j]);
                b.counterfactual += x * (m_drive + m_walk);
                b.pudo_detour += x * (mt_drive - m_drive + psi.walk[var] - m_walk);
            }
        }
    }
    b.after = psi.cost.dot(flows);
    b.delta = b.after - b.before;
    return b;
}

double improvement_rate(double ttt_before, double ttt_after) {
    if (!(ttt_before > 0.0)) throw InputError("improvement rate needs a positive baseline TTT");
    return (ttt_before - ttt_after) / ttt_before * 100.0;
}

Feasibility check_feasibility(const ReroutingInstance& inst, const FlowState& flows) {
    check_flows(inst, flows);
    Feasibility f;
    for (const auto& od : inst.ods) {
        double sum = 0.0;
        for (std::size_t j = 0; j < od.drop.size(); ++j) sum += flows(static_cast<Eigen::Index>(od.first_var + j));
        f.conservation = std::max(f.conservation, std::abs(sum - od.q));
    }
    if (flows.size() > 0) f.negativity = std::max(0.0, -flows.minCoeff());
    const auto dt = drop_counts(inst, flows);
    for (std::size_t s = 0; s < inst.region_count(); ++s) {
        if (!inst.involved[s]) continue;
        f.bounds = std::max({f.bounds, dt[s] - inst.params.gamma * inst.d[s], inst.params.beta * inst.d[s] - dt[s]});
    }
    return f;
}

ReroutingResult solve_rerouting(const ReroutingInstance& inst, const SolverConfig& config) {
    if (!(config.momentum >= 0.0 && config.momentum < 1.0)) throw InputError("momentum must lie in [0, 1)");
    if (!(config.step > 0.0 && config.step <= 1.0)) throw InputError("step size must lie in (0, 1]");
    if (!(config.tol > 0.0)) throw InputError("tolerance must be positive");

    ReroutingResult res;
    FlowState x = no_reroute_flows(inst);
    if (inst.var_count == 0) {
        res.flows = x;
        res.ttt = decompose_ttt(inst, x);
        res.converged = true;
        res.fixed_point = true;
        return res;
    }

    auto infeasible = [&](const FlowState& at) {
        auto regions = violated_regions(inst, at, 1e-9);
        if (regions.empty()) {
            for (std::size_t s = 0; s < inst.region_count(); ++s) {
                if (inst.involved[s]) regions.push_back(s);
            }
        }
        throw InfeasibleProblem("re-routing LP is infeasible: PUDO bounds [" + std::to_string(inst.params.beta) + ", " +
                                std::to_string(inst.params.gamma) + "] x d cannot hold in regions " +
                                region_list(inst, regions));
    };

    if (!violated_regions(inst, x, 1e-9).empty()) {
        // The untouched flows break a bound (gamma < 1 or beta > 1); start
        // from any LP-feasible point instead, if one exists.
        const LpSolution lp = solve_lp(build_subproblem(inst, compute_psi(inst, x)));
        if (lp.status != LpStatus::optimal) infeasible(x);
        x = lp.x;
    }

    FlowState velocity = FlowState::Zero(x.size());
    for (std::size_t it = 0; it < config.max_iter; ++it) {
        const PsiOutput psi = compute_psi(inst, x);
        res.clip_warnings += psi.clipped;
        const double obj = psi.cost.dot(x);
        const LpSolution lp = solve_lp(build_subproblem(inst, psi));
        if (lp.status != LpStatus::optimal) infeasible(x);

        IterationRecord rec;
        rec.iteration = it;
        rec.objective = obj;
        rec.lp_objective = lp.objective;
        rec.clipped = psi.clipped;

        const FlowState toward = lp.x - x;
        if (toward.norm() <= 1e-9 * (1.0 + x.norm())) {
            rec.step_norm = 0.0;
            res.log.push_back(rec);
            res.fixed_point = true;
            res.converged = true;
            res.iterations = it + 1;
            break;
        }

        // Momentum step toward the linearised optimum; the gradient is x - x_lp.
        FlowState step = config.momentum * velocity + config.step * toward;
        const double frac = max_feasible_fraction(inst, x, step);
        if (frac < 1e-12) {
            step = config.step * toward; // convex combination of two feasible points
        } else {
            step *= frac;
        }
        rec.scale = frac;

        if (config.backtrack) {
            auto raises = [&](const FlowState& st) {
                return total_travel_time(inst, (x + st).cwiseMax(0.0)) > obj + 1e-12 * (1.0 + std::abs(obj));
            };
            if (raises(step)) {
                // Drop the accumulated momentum and retry from the plain step,
                // halving until TTT no longer rises.
                step = config.step * toward;
                rec.scale = 0.0;
                int halvings = 0;
                while (raises(step)) {
                    if (++halvings > 60) {
                        step.setZero();
                        break;
                    }
                    step *= 0.5;
                }
            }
        }

        velocity = step;
        x = (x + step).cwiseMax(0.0);
        rec.step_norm = step.norm();
        res.log.push_back(rec);
        res.iterations = it + 1;
        res.final_change = rec.step_norm;
        if (rec.step_norm < config.tol) {
            res.converged = true;
            break;
        }
    }
    if (!res.converged) log::warn("re-routing stopped at the iteration cap (", config.max_iter, ") before converging");

    res.flows = x;
    res.ttt = decompose_ttt(inst, x);
    res.clip_warnings += compute_psi(inst, x).clipped;
    return res;
}

} // namespace curbflow
