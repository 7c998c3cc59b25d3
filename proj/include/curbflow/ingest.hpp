#pragma once

#include "curbflow/data_model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace curbflow {

struct RoadSpeedRecord {
    std::string road_id;
    RegionId region = 0;
    Timestamp ts{};
    double speed = 0.0;    // mph
    double freeflow = 0.0; // mph
};

struct TripRecord {
    RegionId pickup_region = 0;
    RegionId dropoff_region = 0;
    Timestamp ts{};
};

struct PrecipRecord {
    Timestamp ts{};
    double mm = 0.0;
};

// Which intervals of the grid are in scope. Intervals whose start falls on
// the wrong day class or outside [hour_begin, hour_end) are left missing in
// every panel ingest produces.
struct IngestWindow {
    std::optional<DayClass> day_class;
    int hour_begin = 0;
    int hour_end = 24;

    bool accepts(Timestamp interval_start) const;
};

DayClass day_class_of(Timestamp ts);

// Counters for records that were discarded rather than aggregated.
struct IngestStats {
    std::size_t rows = 0;
    std::size_t out_of_range = 0;
    std::size_t unknown_region = 0;
    std::size_t out_of_window = 0;
    std::size_t missing_cells = 0;
};

// Flow-weighted regional speed per interval with the road's free-flow speed
// as the flow weight. Cells with no records stay missing.
SpeedPanel aggregate_speed(const std::vector<RoadSpeedRecord>& records, const TimeGrid& grid,
                           const std::vector<RegionId>& regions, const IngestWindow& window = {},
                           IngestStats* stats = nullptr);

// Pick-up/drop-off counts. In-window cells start at zero, so an empty trip
// list yields an all-zero panel.
PudoPanel count_pudo(const std::vector<TripRecord>& trips, const TimeGrid& grid, PudoMode mode,
                     const std::vector<RegionId>& regions, const IngestWindow& window = {},
                     IngestStats* stats = nullptr);

// Steps hourly (or finer) precipitation onto the grid: every interval takes the
// mean of the observations inside its enclosing clock hour, broadcast to all
// regions. Hours without an observation leave their intervals missing.
ControlPanel align_weather(const std::vector<PrecipRecord>& precip, const TimeGrid& grid,
                           const std::vector<RegionId>& regions, const IngestWindow& window = {});

// Feed readers for the documented CSV schemas. Malformed rows raise
// InputError naming the file and line.
std::vector<RoadSpeedRecord> read_speed_records(const std::string& path);
std::vector<TripRecord> read_trip_records(const std::string& path);
std::vector<PrecipRecord> read_precip_records(const std::string& path);
std::vector<AdjacencyPair> read_adjacency(const std::string& path);
std::map<RegionId, double> read_distances(const std::string& path);

enum class FeatureTarget { speed, pudo };

// Column layout of a feature matrix: own-speed lags, neighbor-mean-speed lags,
// NoPUDO lags (pudo target only), then controls. Lags are ordered oldest
// first (t-I .. t-1).
struct FeatureLayout {
    std::size_t lags = 10;
    FeatureTarget target = FeatureTarget::speed;
    std::vector<std::string> control_names;

    bool has_pudo_lags() const { return target == FeatureTarget::pudo; }
    std::size_t arity() const;
    std::vector<std::string> column_names() const;

    friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

struct FeatureMatrix {
    RegionId region = 0;
    FeatureLayout layout;
    Eigen::MatrixXd x;                  // rows x layout.arity()
    Eigen::VectorXd y;                  // target at t
    std::vector<std::size_t> intervals; // t for each row
    std::size_t skipped = 0;            // candidate rows dropped for missing cells

    std::size_t rows() const { return intervals.size(); }
};

FeatureMatrix build_features(const SpeedPanel& speed, const PudoPanel& pudo, const ControlPanel* controls,
                             const RegionGraph& graph, RegionId v, std::size_t lags, FeatureTarget target);

// Joint dataset for one region: the Model Y and Model D designs restricted to
// intervals where both are complete, so rows line up one-to-one.
struct RegionDataset {
    RegionId region = 0;
    FeatureMatrix speed_features; // y = y_v^t
    FeatureMatrix pudo_features;  // y = d_v^t
    std::vector<double> neighbor_speed_now; // mean neighbor speed at t, for CATE conditions
    std::size_t skipped = 0;

    std::size_t rows() const { return speed_features.rows(); }
};

RegionDataset build_region_dataset(const SpeedPanel& speed, const PudoPanel& pudo, const ControlPanel* controls,
                                   const RegionGraph& graph, RegionId v, std::size_t lags);

} // namespace curbflow
