#include "curbflow/cli.hpp"
#include "curbflow/synth.hpp"
#include "curbflow/tables.hpp"

#include "fixtures/six_ring.hpp"
#include "unit/helpers.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

using namespace curbflow;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "curbflow");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path write_config(const fs::path& dir, const std::string& name, const json& body) {
    const auto path = dir / name;
    testing::write_text(path, body.dump(2));
    return path;
}

json read_json(const fs::path& path) { return json::parse(testing::read_text(path)); }

// Two linear regions with known effects; small enough to estimate quickly.
fs::path synth_pair(const fs::path& dir) {
    const json cfg = {{"seed", 11},
                      {"out", (dir / "synth").string()},
                      {"synth",
                       {{"regions", {1, 2}},
                        {"adjacency", {{1, 2}}},
                        {"horizon", 3000},
                        {"lags", 2},
                        {"theta", {{"1", -0.05}, {"2", -0.02}}}}}};
    REQUIRE(run({"synth", "--config", write_config(dir, "synth.json", cfg).string()}) == 0);
    return dir / "synth";
}

json estimate_config(const fs::path& panels, const fs::path& out) {
    return {{"seed", 5},
            {"out", out.string()},
            {"inputs", {{"panels", panels.string()}, {"adjacency", (panels / "adjacency.csv").string()}}},
            {"estimate", {{"lags", 2}, {"folds", 2}, {"learners", "ridge"}}}};
}

// Six-region ring written out as reroute input files.
json six_ring_inputs(const fs::path& dir, bool with_effects, double slow = 2.5) {
    std::string adj = "u,v\n";
    for (const auto& [a, b] : fixtures::six_ring_edges()) adj += std::to_string(a) + "," + std::to_string(b) + "\n";
    std::string dist = "v,miles\n";
    for (const auto& [v, m] : fixtures::six_ring_distances()) dist += std::to_string(v) + "," + csv::format_double(m) + "\n";
    std::string speeds = "region,mph\n";
    for (const auto& [v, s] : fixtures::six_ring_speeds(slow)) speeds += std::to_string(v) + "," + csv::format_double(s) + "\n";
    std::string demand = "origin,dest,flow\n";
    for (const auto& d : fixtures::six_ring_demand()) {
        demand += std::to_string(d.origin) + "," + std::to_string(d.dest) + "," + csv::format_double(d.flow) + "\n";
    }
    std::string effects = "region,day_class,theta_hat,std_err,t_stat,p_value,n\n";
    for (const auto& [v, t] : fixtures::six_ring_effects()) {
        effects += std::to_string(v) + ",weekday," + csv::format_double(t) + ",0.001,-10,0,1000\n";
    }
    testing::write_text(dir / "adjacency.csv", adj);
    testing::write_text(dir / "distances.csv", dist);
    testing::write_text(dir / "speeds.csv", speeds);
    testing::write_text(dir / "demand.csv", demand);
    testing::write_text(dir / "effects.csv", effects);
    json in = {{"adjacency", (dir / "adjacency.csv").string()},
               {"distances", (dir / "distances.csv").string()},
               {"speeds", (dir / "speeds.csv").string()},
               {"demand", (dir / "demand.csv").string()}};
    if (with_effects) in["effects"] = (dir / "effects.csv").string();
    return in;
}

} // namespace

TEST_CASE("ingest writes panels for a small fixture") {
    const auto dir = testing::scratch("cli_ingest");
    std::string speeds = "road_id,region_id,ts,speed,freeflow\n";
    std::string trips = "pu_region,do_region,ts\n";
    for (int h = 0; h < 24; ++h) {
        char ts[32];
        std::snprintf(ts, sizeof ts, "2024-03-04T%02d:10:00", h);
        for (int v = 1; v <= 3; ++v) {
            speeds += "r" + std::to_string(v) + "," + std::to_string(v) + "," + ts + ",20,30\n";
        }
        trips += std::string("1,2,") + ts + "\n";
    }
    testing::write_text(dir / "speeds.csv", speeds);
    testing::write_text(dir / "trips.csv", trips);
    testing::write_text(dir / "no_trips.csv", "pu_region,do_region,ts\n");
    testing::write_text(dir / "bad.csv", "road,region_id,ts,speed,freeflow\n");

    auto cfg = [&](const char* trips_file, const char* speed_file, const char* out) {
        return json{{"out", (dir / out).string()},
                    {"inputs",
                     {{"speed_records", (dir / speed_file).string()},
                      {"trips", (dir / trips_file).string()},
                      {"regions", {1, 2, 3}}}},
                    {"grid", {{"start", "2024-03-04T00:00:00"}, {"count", 288}}}};
    };

    SUBCASE("valid fixture") {
        REQUIRE(run({"ingest", "--config", write_config(dir, "a.json", cfg("trips.csv", "speeds.csv", "a")).string()}) == 0);
        for (const char* f : {"speed.csv", "pudo.csv", "freeflow.csv", "grid.json", "resolved_config.json"}) {
            CHECK(fs::exists(dir / "a" / f));
        }
        const auto rows = testing::read_rows(dir / "a" / "pudo.csv");
        CHECK(rows.size() == 1u + 3u * 288u);
        double total = 0.0;
        for (std::size_t i = 1; i < rows.size(); ++i) total += std::stod(rows[i][2]);
        CHECK(total == 48.0);
    }
    SUBCASE("bad header") {
        CHECK(run({"ingest", "--config", write_config(dir, "b.json", cfg("trips.csv", "bad.csv", "b")).string()}) == 2);
    }
    SUBCASE("empty trips") {
        REQUIRE(run({"ingest", "--config", write_config(dir, "c.json", cfg("no_trips.csv", "speeds.csv", "c")).string()}) ==
                0);
        const auto rows = testing::read_rows(dir / "c" / "pudo.csv");
        REQUIRE(rows.size() == 1u + 3u * 288u);
        for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][2] == "0");
    }
}

TEST_CASE("synth then estimate recovers the planted effects") {
    const auto dir = testing::scratch("cli_estimate");
    const auto panels = synth_pair(dir);
    const auto cfg = write_config(dir, "est.json", estimate_config(panels, dir / "est"));
    REQUIRE(run({"estimate", "--config", cfg.string(), "--jobs", "1"}) == 0);

    const auto effects = read_effects((dir / "est" / "effects.csv").string());
    REQUIRE(effects.size() == 2u);
    const std::map<RegionId, double> truth{{1, -0.05}, {2, -0.02}};
    const auto report = oracle_check(effects, truth, 3.0);
    CHECK(report.pass_rate == 1.0);

    const auto truth_rows = testing::read_rows(panels / "truth.csv");
    REQUIRE(truth_rows.size() == 3u);
    CHECK(truth_rows[1] == std::vector<std::string>{"1", "-0.05"});

    SUBCASE("byte-identical across worker counts") {
        REQUIRE(run({"estimate", "--config", cfg.string(), "--jobs", "4", "--out", (dir / "est4").string()}) == 0);
        CHECK(testing::read_text(dir / "est" / "effects.csv") == testing::read_text(dir / "est4" / "effects.csv"));
        CHECK(testing::read_text(dir / "est" / "folds.csv") == testing::read_text(dir / "est4" / "folds.csv"));
    }
    SUBCASE("conditional effects") {
        REQUIRE(run({"estimate", "--config", cfg.string(), "--cate", "--out", (dir / "cate").string()}) == 0);
        const auto coef = testing::read_rows(dir / "cate" / "cate_coefficients.csv");
        const auto series = testing::read_rows(dir / "cate" / "cate_theta.csv");
        CHECK(coef.size() >= 3u);
        CHECK(series.size() > 2u * 2000u);
    }
    SUBCASE("unknown config key") {
        auto bad = estimate_config(panels, dir / "bad");
        bad["estimate"]["folds_typo"] = 3;
        CHECK(run({"estimate", "--config", write_config(dir, "bad.json", bad).string()}) == 2);
    }
}

TEST_CASE("reroute command") {
    const auto dir = testing::scratch("cli_reroute");

    SUBCASE("zero effects leave travel time unchanged") {
        const json cfg = {{"out", (dir / "zero").string()}, {"inputs", six_ring_inputs(dir, false, 5.0)}};
        REQUIRE(run({"reroute", "--config", write_config(dir, "zero.json", cfg).string()}) == 0);
        const auto s = read_json(dir / "zero" / "summary.json");
        CHECK(s.at("improvement_rate_pct").get<double>() == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }
    SUBCASE("six-region ring improves travel time") {
        const json cfg = {{"out", (dir / "ring").string()},
                          {"inputs", six_ring_inputs(dir, true)},
                          {"reroute", {{"gamma", 2.0}}}};
        const auto path = write_config(dir, "ring.json", cfg);
        REQUIRE(run({"reroute", "--config", path.string()}) == 0);
        const auto s = read_json(dir / "ring" / "summary.json");
        CHECK(s.at("delta_ttt_h").get<double>() < 0.0);
        CHECK(s.at("improvement_rate_pct").get<double>() > 0.0);
        CHECK(fs::exists(dir / "ring" / "solution.csv"));

        REQUIRE(run({"reroute", "--config", path.string(), "--out", (dir / "ring2").string()}) == 0);
        for (const char* f : {"solution.csv", "iterations.csv", "summary.json"}) {
            CHECK(testing::read_text(dir / "ring" / f) == testing::read_text(dir / "ring2" / f));
        }
    }
    SUBCASE("infeasible bounds exit with 3") {
        const json cfg = {{"out", (dir / "inf").string()},
                          {"inputs", six_ring_inputs(dir, true)},
                          {"reroute", {{"beta", 0.95}, {"gamma", 0.96}}}};
        CHECK(run({"reroute", "--config", write_config(dir, "inf.json", cfg).string()}) == 3);
    }
}

TEST_CASE("lagmodel puts the most negative coefficient on the current interval") {
    const auto dir = testing::scratch("cli_lag");
    const json synth = {{"seed", 3},
                        {"out", (dir / "panels").string()},
                        {"synth",
                         {{"preset", "none"},
                          {"regions", {1, 2}},
                          {"adjacency", {{1, 2}}},
                          {"horizon", 3000},
                          {"lags", 2},
                          {"theta_default", -0.03},
                          {"sigma_e", 0.1},
                          {"c_d", {0.5}}}}};
    REQUIRE(run({"synth", "--config", write_config(dir, "s.json", synth).string()}) == 0);
    const json lag = {{"out", (dir / "lag").string()},
                      {"inputs", {{"panels", (dir / "panels").string()}}},
                      {"estimate", {{"lags", 3}}}};
    REQUIRE(run({"lagmodel", "--config", write_config(dir, "l.json", lag).string()}) == 0);
    const auto rows = testing::read_rows(dir / "lag" / "lag.csv");
    REQUIRE(rows.size() == 1u + 4u + 1u);
    std::size_t best = 1;
    for (std::size_t i = 1; i <= 4; ++i) {
        if (std::stod(rows[i][1]) < std::stod(rows[best][1])) best = i;
    }
    CHECK(rows[best][0] == "0");
}

TEST_CASE("report correlates two effect tables and indexes speed") {
    const auto dir = testing::scratch("cli_report");
    const auto panels = synth_pair(dir);
    testing::write_text(dir / "a.csv", "region,day_class,theta_hat,std_err,t_stat,p_value,n\n"
                                       "1,weekday,-0.05,0.01,-5,0,100\n2,weekday,-0.02,0.01,-2,0.05,100\n"
                                       "3,weekday,-0.03,0.01,-3,0.01,100\n");
    testing::write_text(dir / "b.csv", "region,day_class,theta_hat,std_err,t_stat,p_value,n\n"
                                       "1,weekday,-0.06,0.01,-6,0,100\n2,weekday,-0.02,0.01,-2,0.05,100\n"
                                       "3,weekday,-0.04,0.01,-4,0.01,100\n");
    const json cfg = {{"out", (dir / "rep").string()},
                      {"inputs",
                       {{"panels", panels.string()},
                        {"effects", (dir / "a.csv").string()},
                        {"effects_b", (dir / "b.csv").string()}}}};
    REQUIRE(run({"report", "--config", write_config(dir, "r.json", cfg).string()}) == 0);
    const auto s = read_json(dir / "rep" / "summary.json");
    CHECK(s.at("corr_theta_theta_b").get<double>() > 0.9);
    const auto rows = testing::read_rows(dir / "rep" / "report.csv");
    CHECK(rows.front() == std::vector<std::string>{"region", "metric", "value"});
    std::size_t index_rows = 0;
    for (const auto& r : rows) index_rows += r.size() == 3 && r[1] == "speed_index";
    CHECK(index_rows == 2u);
}
