#pragma once

#include "curbflow/data_model.hpp"
#include "curbflow/learners.hpp"
#include "curbflow/reroute.hpp"
#include "curbflow/synth.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace curbflow {

// Everything a command needs, read from a JSON file and then overridden by
// flags. Paths are used as given (relative to the working directory).
struct RunConfig {
    // ingest inputs
    std::string speed_records;
    std::string trips;
    std::string precip;
    std::string adjacency;
    std::string distances;
    std::vector<RegionId> regions; // used when no distances file is given

    // grid; start and count default to the span of the speed records
    std::optional<Timestamp> grid_start;
    std::int64_t interval_len = 300;
    std::optional<std::size_t> grid_count;
    DayClass day_class = DayClass::weekday;
    int hour_begin = 0;
    int hour_end = 24;
    PudoMode pudo_mode = PudoMode::combined_pu_do;

    // estimation
    std::string panels; // directory written by ingest or synth
    std::size_t lags = 10;
    std::size_t folds = 5;
    std::vector<RegressorSpec> candidates_y = default_tree_grid();
    std::vector<RegressorSpec> candidates_d = default_tree_grid();
    std::uint64_t seed = 20240101;
    bool cate = false;
    bool strict_nested_cv = false;
    bool intercept = false;
    bool dump_residuals = false;
    std::size_t min_rows = 0;
    std::size_t jobs = 0; // 0 -> logical cores

    // lagmodel
    bool lag_per_region = false;

    // reroute
    std::string demand;
    std::string speeds;
    std::string effects;
    ReroutingParams reroute;
    SolverConfig solver;

    // report
    std::string effects_b; // second effects file to correlate against `effects`

    // synth
    SemConfig synth;

    std::string out = "out";

    std::size_t resolved_jobs() const;
    nlohmann::json to_json() const;
};

// Throws InputError on unknown keys, wrong types or invalid values.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

nlohmann::json regressor_to_json(const RegressorSpec& s);
RegressorSpec regressor_from_json(const nlohmann::json& j);

} // namespace curbflow
