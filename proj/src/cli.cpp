#include "curbflow/cli.hpp"

#include "curbflow/csv.hpp"
#include "curbflow/dsml.hpp"
#include "curbflow/errors.hpp"
#include "curbflow/ingest.hpp"
#include "curbflow/lagmodel.hpp"
#include "curbflow/log.hpp"
#include "curbflow/panel_io.hpp"
#include "curbflow/report.hpp"
#include "curbflow/stats.hpp"
#include "curbflow/tables.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

namespace curbflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require(const std::string& value, const char* what) {
    if (value.empty()) throw InputError(std::string("missing required input: ") + what);
}

std::ofstream open_out(const RunConfig& c, const std::string& name) {
    const fs::path p = fs::path(c.out) / name;
    std::ofstream out(p);
    if (!out) throw InputError("cannot write " + p.string());
    return out;
}

void prepare_out(const RunConfig& c) {
    fs::create_directories(c.out);
    open_out(c, "resolved_config.json") << c.to_json().dump(2) << '\n';
}

RegionGraph panel_graph(const RunConfig& c, const std::vector<RegionId>& regions) {
    require(c.adjacency, "inputs.adjacency");
    const auto pairs = read_adjacency(c.adjacency);
    return build_region_graph(pairs, regions);
}

DsmlConfig dsml_config(const RunConfig& c) {
    DsmlConfig d;
    d.lags = c.lags;
    d.folds = c.folds;
    d.candidates_y = c.candidates_y;
    d.candidates_d = c.candidates_d;
    d.day_class = c.day_class;
    d.seed = c.seed;
    d.strict_nested_cv = c.strict_nested_cv;
    d.intercept = c.intercept;
    d.cate = c.cate;
    d.jobs = c.resolved_jobs();
    d.min_rows = c.min_rows;
    return d;
}

std::vector<RegionId> ingest_regions(const RunConfig& c, const std::vector<RoadSpeedRecord>& speed) {
    std::set<RegionId> ids;
    if (!c.distances.empty()) {
        for (const auto& [v, _] : read_distances(c.distances)) ids.insert(v);
    } else if (!c.regions.empty()) {
        ids.insert(c.regions.begin(), c.regions.end());
    } else if (!c.adjacency.empty()) {
        for (const auto& [a, b] : read_adjacency(c.adjacency)) {
            ids.insert(a);
            ids.insert(b);
        }
    } else {
        for (const auto& r : speed) ids.insert(r.region);
    }
    if (ids.empty()) throw InputError("no regions declared");
    return {ids.begin(), ids.end()};
}

} // namespace

void cmd_ingest(const RunConfig& c) {
    require(c.speed_records, "inputs.speed_records");
    require(c.trips, "inputs.trips");
    const auto speed_records = read_speed_records(c.speed_records);
    const auto trips = read_trip_records(c.trips);
    if (trips.empty()) log::warn(c.trips, ": no trips; every PUDO count will be zero");
    const auto regions = ingest_regions(c, speed_records);

    TimeGrid grid;
    grid.interval_len = c.interval_len;
    grid.day_class = c.day_class;
    if (c.grid_start) {
        grid.start = *c.grid_start;
    } else {
        if (speed_records.empty()) throw InputError("grid.start is needed when there are no speed records");
        auto lo = speed_records.front().ts;
        for (const auto& r : speed_records) lo = std::min(lo, r.ts);
        const auto secs = lo.time_since_epoch().count();
        grid.start = Timestamp(std::chrono::seconds(secs - ((secs % c.interval_len) + c.interval_len) % c.interval_len));
    }
    if (c.grid_count) {
        grid.count = *c.grid_count;
    } else {
        if (speed_records.empty()) throw InputError("grid.count is needed when there are no speed records");
        auto hi = speed_records.front().ts;
        for (const auto& r : speed_records) hi = std::max(hi, r.ts);
        grid.count = static_cast<std::size_t>((hi - grid.start).count() / c.interval_len) + 1;
    }
    grid.validate();

    IngestWindow window;
    window.day_class = c.day_class;
    window.hour_begin = c.hour_begin;
    window.hour_end = c.hour_end;

    IngestStats speed_stats;
    IngestStats trip_stats;
    PanelSet set;
    set.speed = aggregate_speed(speed_records, grid, regions, window, &speed_stats);
    set.pudo = count_pudo(trips, grid, c.pudo_mode, regions, window, &trip_stats);
    if (!c.precip.empty()) set.controls = align_weather(read_precip_records(c.precip), grid, regions, window);

    prepare_out(c);
    write_panel_set(c.out, set);
    auto stats_json = [](const IngestStats& s) {
        return json{{"rows", s.rows},
                    {"out_of_range", s.out_of_range},
                    {"unknown_region", s.unknown_region},
                    {"out_of_window", s.out_of_window},
                    {"missing_cells", s.missing_cells}};
    };
    open_out(c, "ingest_stats.json") << json{{"speed", stats_json(speed_stats)}, {"trips", stats_json(trip_stats)}}.dump(2)
                                     << '\n';
    log::info("ingest: ", regions.size(), " regions x ", grid.count, " intervals written to ", c.out);
}

void cmd_estimate(const RunConfig& c) {
    require(c.panels, "inputs.panels");
    const PanelSet set = read_panel_set(c.panels);
    const RegionGraph graph = panel_graph(c, set.speed.values.regions());
    const DsmlConfig dc = dsml_config(c);
    log::info("estimate: seed ", dc.seed);
    for (RegionId v : graph.regions()) {
        log::debug("region ", v, " seed ", stats::mix_seed(dc.seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(v))));
    }
    const DsmlResult result = run_dsml(set.speed, set.pudo, set.controls ? &*set.controls : nullptr, graph, dc);

    prepare_out(c);
    {
        auto o = open_out(c, "effects.csv");
        write_effects(o, result.estimates());
    }
    {
        auto o = open_out(c, "skipped.csv");
        write_skipped(o, result);
    }
    {
        auto out = open_out(c, "folds.csv");
        out << "region,fold,held_out,train_y,train_d,chosen_y,chosen_d,val_mse_y,val_mse_d\n";
        for (const auto& [v, r] : result.regions) {
            for (const auto& f : r.folds) {
                out << v << ',' << f.fold << ',' << f.held_out.size() << ',' << f.train_y.size() << ','
                    << f.train_d.size() << ",\"" << f.chosen_y.label() << "\",\"" << f.chosen_d.label() << "\","
                    << csv::format_double(f.val_mse_y) << ',' << csv::format_double(f.val_mse_d) << '\n';
            }
        }
    }
    if (c.dump_residuals) {
        auto o = open_out(c, "residuals.csv");
        write_residuals(o, result);
    }
    if (c.cate) {
        {
            auto o = open_out(c, "cate_coefficients.csv");
            write_cate_coefficients(o, result);
        }
        {
            auto o = open_out(c, "cate_theta.csv");
            write_cate_series(o, result);
        }
    }
    if (result.regions.empty()) throw InputError("no region could be estimated; see skipped.csv");
}

void cmd_reroute(const RunConfig& c) {
    require(c.adjacency, "inputs.adjacency");
    require(c.distances, "inputs.distances");
    require(c.demand, "inputs.demand");
    require(c.speeds, "inputs.speeds");
    const auto graph = build_region_graph(read_adjacency(c.adjacency), read_distances(c.distances));
    std::map<RegionId, double> theta;
    if (!c.effects.empty()) {
        for (const auto& [v, e] : read_effects(c.effects)) theta[v] = e.theta_hat;
    } else {
        log::warn("no effects file; every region's effect is taken as 0");
    }
    const auto inst = build_instance(graph, read_demand(c.demand), read_region_speeds(c.speeds), theta, c.reroute);
    const auto res = solve_rerouting(inst, c.solver);

    prepare_out(c);
    {
        auto o = open_out(c, "solution.csv");
        write_solution(o, inst, res.flows);
    }
    {
        auto o = open_out(c, "iterations.csv");
        write_iterations(o, res.log);
    }
    const auto& t = res.ttt;
    const json summary = {
        {"ttt_before_h", t.before},
        {"ttt_after_h", t.after},
        {"delta_ttt_h", t.delta},
        {"delta_counterfactual_h", t.counterfactual},
        {"delta_pudo_remain_h", t.pudo_remain},
        {"delta_pudo_detour_h", t.pudo_detour},
        {"improvement_rate_pct", t.before > 0.0 ? improvement_rate(t.before, t.after) : 0.0},
        {"iterations", res.iterations},
        {"converged", res.converged},
        {"fixed_point", res.fixed_point},
        {"final_change", res.final_change},
        {"clip_warnings", res.clip_warnings},
    };
    open_out(c, "summary.json") << summary.dump(2) << '\n';
    if (res.clip_warnings > 0) log::warn(res.clip_warnings, " speed-floor clips during re-routing");
}

void cmd_synth(const RunConfig& c) {
    SemConfig sc = c.synth;
    sc.seed = c.seed;
    const SyntheticData data = generate_sem(sc);
    prepare_out(c);
    write_panel_set(c.out, data.panels);
    {
        auto out = open_out(c, "adjacency.csv");
        out << "u,v\n";
        for (const auto& [a, b] : sc.adjacency) out << a << ',' << b << '\n';
    }
    {
        auto out = open_out(c, "truth.csv");
        out << "region,theta\n";
        for (const auto& [v, t] : data.truth.theta) out << v << ',' << csv::format_double(t) << '\n';
    }
    if (data.truth.floored > 0) log::warn(data.truth.floored, " synthetic speeds hit the 0.1 mph floor");
}

void cmd_lagmodel(const RunConfig& c) {
    require(c.panels, "inputs.panels");
    const PanelSet set = read_panel_set(c.panels);
    prepare_out(c);
    if (!c.lag_per_region) {
        {
            auto o = open_out(c, "lag.csv");
            write_lag_csv(o, fit_distributed_lag(set.speed, set.pudo, c.lags));
        }
        return;
    }
    auto out = open_out(c, "lag_per_region.csv");
    out << "region,lag,coef,std_err,p_value\n";
    for (const auto& [v, fit] : fit_distributed_lag_per_region(set.speed, set.pudo, c.lags)) {
        for (std::size_t k = 0; k <= fit.lags; ++k) {
            const auto i = static_cast<Eigen::Index>(k);
            out << v << ',' << k << ',' << csv::format_double(fit.coef(i)) << ',' << csv::format_double(fit.std_err(i))
                << ',' << csv::format_double(fit.p_value(i)) << '\n';
        }
        out << v << ",intercept," << csv::format_double(fit.intercept) << ','
            << csv::format_double(fit.intercept_std_err) << ',' << csv::format_double(fit.intercept_p_value) << '\n';
    }
}

void cmd_report(const RunConfig& c) {
    if (c.panels.empty() && c.effects.empty()) throw InputError("report needs inputs.panels or inputs.effects");
    std::vector<LongRow> rows;
    json summary = json::object();
    std::map<RegionId, double> index;
    std::map<RegionId, double> theta;
    std::map<RegionId, double> theta_b;

    if (!c.panels.empty()) {
        const PanelSet set = read_panel_set(c.panels);
        IngestWindow window;
        window.day_class = c.day_class;
        window.hour_begin = c.hour_begin;
        window.hour_end = c.hour_end;
        index = speed_index(set.speed, window);
        for (const auto& [v, x] : index) rows.push_back({v, "speed_index", x});
    }
    if (!c.effects.empty()) {
        for (const auto& [v, e] : read_effects(c.effects)) theta[v] = e.theta_hat;
        for (const auto& [v, x] : theta) rows.push_back({v, "theta_hat", x});
    }
    if (!c.effects_b.empty()) {
        for (const auto& [v, e] : read_effects(c.effects_b)) theta_b[v] = e.theta_hat;
        for (const auto& [v, x] : theta_b) rows.push_back({v, "theta_hat_b", x});
    }
    auto correlate = [&](const char* key, const auto& a, const auto& b) {
        if (a.empty() || b.empty()) return;
        try {
            summary[key] = pearson_correlation(a, b);
        } catch (const std::exception& e) {
            log::warn(key, ": ", e.what());
            summary[key] = nullptr;
        }
    };
    correlate("corr_theta_theta_b", theta, theta_b);
    correlate("corr_theta_speed_index", theta, index);

    std::stable_sort(rows.begin(), rows.end(), [](const LongRow& a, const LongRow& b) { return a.region < b.region; });
    prepare_out(c);
    {
        auto o = open_out(c, "report.csv");
        write_long(o, rows);
    }
    open_out(c, "summary.json") << summary.dump(2) << '\n';
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"curbflow: curbside PUDO congestion effects and re-routing"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::size_t> jobs;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> day_class;
    bool cate = false;
    bool strict = false;
    std::optional<std::string> out;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--jobs", jobs, "worker threads (default: logical cores)");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--day-class", day_class, "weekday|weekend");
    app.add_flag("--cate", cate, "also estimate conditional effects");
    app.add_flag("--strict-nested-cv", strict, "select learners on an inner split of each training half");
    app.add_option("--out", out, "output directory");

    struct Command {
        const char* name;
        const char* help;
        void (*run)(const RunConfig&);
    };
    const Command commands[] = {
        {"ingest", "aggregate raw feeds into panels", cmd_ingest},
        {"estimate", "estimate per-region PUDO effects", cmd_estimate},
        {"reroute", "solve the PUDO re-routing problem", cmd_reroute},
        {"synth", "generate synthetic panels with known effects", cmd_synth},
        {"lagmodel", "fit the distributed lag regression", cmd_lagmodel},
        {"report", "speed index and correlation tables", cmd_report},
    };
    for (const auto& cmd : commands) app.add_subcommand(cmd.name, cmd.help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::input_error);
    }

    try {
        RunConfig c = config_path.empty() ? parse_run_config(json::object()) : load_run_config(config_path);
        if (jobs) c.jobs = *jobs;
        if (seed) {
            c.seed = *seed;
            c.synth.seed = *seed;
        }
        if (day_class) c.day_class = parse_day_class(*day_class);
        if (cate) c.cate = true;
        if (strict) c.strict_nested_cv = true;
        if (out) c.out = *out;
        for (const auto& cmd : commands) {
            if (app.got_subcommand(cmd.name)) cmd.run(c);
        }
        return static_cast<int>(ExitCode::ok);
    } catch (const InfeasibleProblem& e) {
        log::error(e.what());
        return static_cast<int>(ExitCode::solver_infeasible);
    } catch (const InputError& e) {
        log::error(e.what());
        return static_cast<int>(ExitCode::input_error);
    } catch (const std::exception& e) {
        log::error(e.what());
        return static_cast<int>(ExitCode::internal);
    }
}

} // namespace curbflow
