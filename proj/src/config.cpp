#include "curbflow/config.hpp"

#include "curbflow/csv.hpp"
#include "curbflow/errors.hpp"
#include "curbflow/parallel.hpp"

#include <fstream>
#include <set>

namespace curbflow {

using nlohmann::json;

namespace {

void only_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw InputError(std::string(where) + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw InputError(std::string(where) + ": unknown key '" + key + "'");
    }
}

template <class T>
void take(const json& j, const char* key, T& into) {
    if (j.contains(key)) into = j.at(key).get<T>();
}

std::vector<RegressorSpec> learner_list(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "trees" || s == "tree_ensemble") return default_tree_grid();
        if (s == "ridge" || s == "ridge_linear") return default_ridge_grid();
        throw InputError("unknown learner grid '" + s + "' (expected trees|ridge or a list)");
    }
    std::vector<RegressorSpec> out;
    for (const auto& e : j) out.push_back(regressor_from_json(e));
    if (out.empty()) throw InputError("learner candidate list is empty");
    return out;
}

std::vector<double> doubles(const json& j) { return j.get<std::vector<double>>(); }

SemConfig parse_synth(const json& j, std::uint64_t seed) {
    only_keys(j, "synth",
              {"preset", "regions", "adjacency", "horizon", "lags", "warmup", "theta_default", "theta", "theta_slope",
               "phi", "psi", "ramp_width", "sigma_e", "sigma_xi", "y_intercept", "d_intercept", "freeflow", "a_y",
               "b_y", "a_d", "b_d", "c_d", "w_y", "w_d", "control", "start", "interval_len", "day_class"});
    std::vector<RegionId> regions = j.value("regions", std::vector<RegionId>{1, 2});
    std::vector<AdjacencyPair> adjacency;
    if (j.contains("adjacency")) {
        for (const auto& e : j.at("adjacency")) adjacency.emplace_back(e.at(0).get<RegionId>(), e.at(1).get<RegionId>());
    } else if (regions.size() == 2) {
        adjacency.emplace_back(regions[0], regions[1]);
    }
    const std::size_t horizon = j.value("horizon", std::size_t{2000});
    const std::size_t lags = j.value("lags", std::size_t{10});

    SemConfig c;
    const std::string preset = j.value("preset", std::string("standard"));
    if (preset == "standard") {
        c = SemConfig::standard(regions, adjacency, horizon, lags, seed);
    } else if (preset == "none") {
        c.regions = regions;
        c.adjacency = adjacency;
        c.horizon = horizon;
        c.lags = lags;
        c.seed = seed;
    } else {
        throw InputError("synth: unknown preset '" + preset + "' (expected standard|none)");
    }
    take(j, "warmup", c.warmup);
    take(j, "theta_default", c.theta_default);
    if (j.contains("theta")) {
        for (const auto& [k, v] : j.at("theta").items()) {
            try {
                c.theta[static_cast<RegionId>(std::stol(k))] = v.get<double>();
            } catch (const std::logic_error&) {
                throw InputError("synth.theta: bad region id '" + k + "'");
            }
        }
    }
    take(j, "theta_slope", c.theta_slope);
    if (j.contains("phi")) c.phi = parse_sem_family(j.at("phi").get<std::string>());
    if (j.contains("psi")) c.psi = parse_sem_family(j.at("psi").get<std::string>());
    take(j, "ramp_width", c.ramp_width);
    take(j, "sigma_e", c.sigma_e);
    take(j, "sigma_xi", c.sigma_xi);
    take(j, "y_intercept", c.y_intercept);
    take(j, "d_intercept", c.d_intercept);
    take(j, "freeflow", c.freeflow);
    if (j.contains("a_y")) c.a_y = doubles(j.at("a_y"));
    if (j.contains("b_y")) c.b_y = doubles(j.at("b_y"));
    if (j.contains("a_d")) c.a_d = doubles(j.at("a_d"));
    if (j.contains("b_d")) c.b_d = doubles(j.at("b_d"));
    if (j.contains("c_d")) c.c_d = doubles(j.at("c_d"));
    take(j, "w_y", c.w_y);
    take(j, "w_d", c.w_d);
    if (j.contains("control")) {
        const auto& cj = j.at("control");
        only_keys(cj, "synth.control", {"enabled", "name", "persistence"});
        take(cj, "enabled", c.control.enabled);
        take(cj, "name", c.control.name);
        take(cj, "persistence", c.control.persistence);
    }
    if (j.contains("start")) c.start = csv::parse_timestamp(j.at("start").get<std::string>());
    take(j, "interval_len", c.interval_len);
    if (j.contains("day_class")) c.day_class = parse_day_class(j.at("day_class").get<std::string>());
    c.validate();
    return c;
}

json synth_to_json(const SemConfig& c) {
    json theta = json::object();
    for (const auto& [v, t] : c.theta) theta[std::to_string(v)] = t;
    json adj = json::array();
    for (const auto& [a, b] : c.adjacency) adj.push_back({a, b});
    return {
        {"preset", "none"},
        {"regions", c.regions},
        {"adjacency", adj},
        {"horizon", c.horizon},
        {"lags", c.lags},
        {"warmup", c.warmup},
        {"theta_default", c.theta_default},
        {"theta", theta},
        {"theta_slope", c.theta_slope},
        {"phi", std::string(to_string(c.phi))},
        {"psi", std::string(to_string(c.psi))},
        {"ramp_width", c.ramp_width},
        {"sigma_e", c.sigma_e},
        {"sigma_xi", c.sigma_xi},
        {"y_intercept", c.y_intercept},
        {"d_intercept", c.d_intercept},
        {"freeflow", c.freeflow},
        {"a_y", c.a_y},
        {"b_y", c.b_y},
        {"a_d", c.a_d},
        {"b_d", c.b_d},
        {"c_d", c.c_d},
        {"w_y", c.w_y},
        {"w_d", c.w_d},
        {"control", {{"enabled", c.control.enabled}, {"name", c.control.name}, {"persistence", c.control.persistence}}},
        {"start", csv::format_timestamp(c.start)},
        {"interval_len", c.interval_len},
        {"day_class", std::string(to_string(c.day_class))},
    };
}

} // namespace

json regressor_to_json(const RegressorSpec& s) {
    if (s.family == LearnerFamily::ridge_linear) return {{"family", "ridge_linear"}, {"lambda", s.ridge_lambda}};
    return {{"family", "tree_ensemble"},
            {"n_trees", s.n_trees},
            {"max_depth", s.max_depth},
            {"learning_rate", s.learning_rate},
            {"min_samples_leaf", s.min_samples_leaf}};
}

RegressorSpec regressor_from_json(const json& j) {
    only_keys(j, "learner", {"family", "lambda", "n_trees", "max_depth", "learning_rate", "min_samples_leaf"});
    RegressorSpec s;
    s.family = parse_learner_family(j.at("family").get<std::string>());
    take(j, "lambda", s.ridge_lambda);
    take(j, "n_trees", s.n_trees);
    take(j, "max_depth", s.max_depth);
    take(j, "learning_rate", s.learning_rate);
    take(j, "min_samples_leaf", s.min_samples_leaf);
    s.validate();
    return s;
}

std::size_t RunConfig::resolved_jobs() const { return jobs > 0 ? jobs : default_jobs(); }

RunConfig parse_run_config(const json& j) {
    try {
        only_keys(j, "config", {"inputs", "grid", "estimate", "lagmodel", "reroute", "synth", "seed", "jobs", "out"});
        RunConfig c;
        take(j, "seed", c.seed);
        take(j, "jobs", c.jobs);
        take(j, "out", c.out);

        if (j.contains("inputs")) {
            const auto& in = j.at("inputs");
            only_keys(in, "inputs",
                      {"speed_records", "trips", "precip", "adjacency", "distances", "regions", "panels", "demand",
                       "speeds", "effects", "effects_b"});
            take(in, "speed_records", c.speed_records);
            take(in, "trips", c.trips);
            take(in, "precip", c.precip);
            take(in, "adjacency", c.adjacency);
            take(in, "distances", c.distances);
            take(in, "regions", c.regions);
            take(in, "panels", c.panels);
            take(in, "demand", c.demand);
            take(in, "speeds", c.speeds);
            take(in, "effects", c.effects);
            take(in, "effects_b", c.effects_b);
        }
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            only_keys(g, "grid", {"start", "interval_len", "count", "day_class", "hour_begin", "hour_end", "pudo_mode"});
            if (g.contains("start")) c.grid_start = csv::parse_timestamp(g.at("start").get<std::string>());
            take(g, "interval_len", c.interval_len);
            if (g.contains("count")) c.grid_count = g.at("count").get<std::size_t>();
            if (g.contains("day_class")) c.day_class = parse_day_class(g.at("day_class").get<std::string>());
            take(g, "hour_begin", c.hour_begin);
            take(g, "hour_end", c.hour_end);
            if (g.contains("pudo_mode")) c.pudo_mode = parse_pudo_mode(g.at("pudo_mode").get<std::string>());
        }
        if (j.contains("estimate")) {
            const auto& e = j.at("estimate");
            only_keys(e, "estimate",
                      {"lags", "folds", "learners", "candidates_y", "candidates_d", "cate", "strict_nested_cv",
                       "intercept", "dump_residuals", "min_rows"});
            take(e, "lags", c.lags);
            take(e, "folds", c.folds);
            if (e.contains("learners")) c.candidates_y = c.candidates_d = learner_list(e.at("learners"));
            if (e.contains("candidates_y")) c.candidates_y = learner_list(e.at("candidates_y"));
            if (e.contains("candidates_d")) c.candidates_d = learner_list(e.at("candidates_d"));
            take(e, "cate", c.cate);
            take(e, "strict_nested_cv", c.strict_nested_cv);
            take(e, "intercept", c.intercept);
            take(e, "dump_residuals", c.dump_residuals);
            take(e, "min_rows", c.min_rows);
        }
        if (j.contains("lagmodel")) {
            only_keys(j.at("lagmodel"), "lagmodel", {"per_region"});
            take(j.at("lagmodel"), "per_region", c.lag_per_region);
        }
        if (j.contains("reroute")) {
            const auto& r = j.at("reroute");
            only_keys(r, "reroute",
                      {"walk_speed", "beta", "gamma", "lambda", "min_speed", "momentum", "step", "tol", "max_iter",
                       "backtrack"});
            take(r, "walk_speed", c.reroute.walk_speed);
            take(r, "beta", c.reroute.beta);
            take(r, "gamma", c.reroute.gamma);
            take(r, "lambda", c.reroute.lambda);
            take(r, "min_speed", c.reroute.min_speed);
            take(r, "momentum", c.solver.momentum);
            take(r, "step", c.solver.step);
            take(r, "tol", c.solver.tol);
            take(r, "max_iter", c.solver.max_iter);
            take(r, "backtrack", c.solver.backtrack);
        }
        c.synth = parse_synth(j.value("synth", json::object()), c.seed);

        if (c.interval_len <= 0) throw InputError("grid.interval_len must be positive");
        if (c.hour_begin < 0 || c.hour_end > 24 || c.hour_begin >= c.hour_end) {
            throw InputError("grid hour window must satisfy 0 <= hour_begin < hour_end <= 24");
        }
        if (c.lags < 1) throw InputError("estimate.lags must be at least 1");
        if (c.folds < 2) throw InputError("estimate.folds must be at least 2");
        return c;
    } catch (const json::exception& e) {
        throw InputError(std::string("config: ") + e.what());
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
    return parse_run_config(j);
}

json RunConfig::to_json() const {
    json cy = json::array();
    json cd = json::array();
    for (const auto& s : candidates_y) cy.push_back(regressor_to_json(s));
    for (const auto& s : candidates_d) cd.push_back(regressor_to_json(s));
    json grid = {{"interval_len", interval_len},
                 {"day_class", std::string(to_string(day_class))},
                 {"hour_begin", hour_begin},
                 {"hour_end", hour_end},
                 {"pudo_mode", std::string(to_string(pudo_mode))}};
    if (grid_start) grid["start"] = csv::format_timestamp(*grid_start);
    if (grid_count) grid["count"] = *grid_count;
    json synth_json = synth_to_json(synth);
    return {
        {"inputs",
         {{"speed_records", speed_records},
          {"trips", trips},
          {"precip", precip},
          {"adjacency", adjacency},
          {"distances", distances},
          {"regions", regions},
          {"panels", panels},
          {"demand", demand},
          {"speeds", speeds},
          {"effects", effects},
          {"effects_b", effects_b}}},
        {"grid", grid},
        {"estimate",
         {{"lags", lags},
          {"folds", folds},
          {"candidates_y", cy},
          {"candidates_d", cd},
          {"cate", cate},
          {"strict_nested_cv", strict_nested_cv},
          {"intercept", intercept},
          {"dump_residuals", dump_residuals},
          {"min_rows", min_rows}}},
        {"lagmodel", {{"per_region", lag_per_region}}},
        {"reroute",
         {{"walk_speed", reroute.walk_speed},
          {"beta", reroute.beta},
          {"gamma", reroute.gamma},
          {"lambda", reroute.lambda},
          {"min_speed", reroute.min_speed},
          {"momentum", solver.momentum},
          {"step", solver.step},
          {"tol", solver.tol},
          {"max_iter", solver.max_iter},
          {"backtrack", solver.backtrack}}},
        {"synth", synth_json},
        {"seed", seed},
        {"jobs", resolved_jobs()},
        {"out", out},
    };
}

} // namespace curbflow
