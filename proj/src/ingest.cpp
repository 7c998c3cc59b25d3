#include "curbflow/ingest.hpp"

#include "curbflow/csv.hpp"
#include "curbflow/errors.hpp"
#include "curbflow/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace curbflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool known(const std::vector<RegionId>& sorted, RegionId id) {
    return std::binary_search(sorted.begin(), sorted.end(), id);
}

std::vector<RegionId> sorted_unique(std::vector<RegionId> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

// Mean of neighbor speeds at each interval, NaN where any neighbor is missing.
std::vector<double> neighbor_series(const SpeedPanel& speed, const RegionGraph& graph, RegionId v) {
    const auto& nb = graph.neighbors_of_index(graph.index_of(v));
    if (nb.empty()) throw InputError("region " + std::to_string(v) + " has no neighbors");
    std::vector<std::size_t> rows;
    for (std::size_t j : nb) rows.push_back(speed.values.index_of(graph.regions()[j]));
    std::vector<double> out(speed.values.interval_count(), kNaN);
    for (std::size_t t = 0; t < out.size(); ++t) {
        double sum = 0.0;
        bool ok = true;
        for (std::size_t r : rows) {
            auto v = speed.values.get(r, t);
            if (!v) {
                ok = false;
                break;
            }
            sum += *v;
        }
        if (ok) out[t] = sum / static_cast<double>(rows.size());
    }
    return out;
}

} // namespace

DayClass day_class_of(Timestamp ts) {
    const std::chrono::weekday wd{std::chrono::floor<std::chrono::days>(ts)};
    return (wd == std::chrono::Saturday || wd == std::chrono::Sunday) ? DayClass::weekend : DayClass::weekday;
}

bool IngestWindow::accepts(Timestamp interval_start) const {
    if (day_class && day_class_of(interval_start) != *day_class) return false;
    const auto day = std::chrono::floor<std::chrono::days>(interval_start);
    const auto hour = std::chrono::duration_cast<std::chrono::hours>(interval_start - day).count();
    return hour >= hour_begin && hour < hour_end;
}

// ------------------------------------------------------------ aggregation

SpeedPanel aggregate_speed(const std::vector<RoadSpeedRecord>& records, const TimeGrid& grid,
                           const std::vector<RegionId>& regions_in, const IngestWindow& window, IngestStats* stats) {
    grid.validate();
    const auto regions = sorted_unique(regions_in);
    const std::size_t n = regions.size();
    std::vector<double> num(n * grid.count, 0.0);
    std::vector<double> den(n * grid.count, 0.0);
    std::vector<double> ff_num(n, 0.0);
    std::vector<double> ff_den(n, 0.0);
    IngestStats local;

    for (const auto& rec : records) {
        ++local.rows;
        if (rec.speed < 0.0 || !(rec.freeflow > 0.0)) {
            throw InputError("road " + rec.road_id + ": speed must be >= 0 and free-flow > 0");
        }
        if (!known(regions, rec.region)) {
            ++local.unknown_region;
            continue;
        }
        auto t = grid.index_of(rec.ts);
        if (!t) {
            ++local.out_of_range;
            continue;
        }
        if (!window.accepts(grid.interval_start(*t))) {
            ++local.out_of_window;
            continue;
        }
        const std::size_t r = static_cast<std::size_t>(std::lower_bound(regions.begin(), regions.end(), rec.region) -
                                                       regions.begin());
        const double w = rec.freeflow;
        num[r * grid.count + *t] += rec.speed * w;
        den[r * grid.count + *t] += w;
        ff_num[r] += rec.freeflow * w;
        ff_den[r] += w;
    }

    SpeedPanel out{Panel(regions, grid), std::vector<double>(n, 0.0)};
    for (std::size_t r = 0; r < n; ++r) {
        out.freeflow[r] = ff_den[r] > 0.0 ? ff_num[r] / ff_den[r] : 0.0;
        for (std::size_t t = 0; t < grid.count; ++t) {
            const double d = den[r * grid.count + t];
            if (d > 0.0) {
                out.values.set(r, t, num[r * grid.count + t] / d);
            } else {
                ++local.missing_cells;
            }
        }
    }
    if (local.unknown_region + local.out_of_range > 0) {
        log::info("speed records dropped: ", local.unknown_region, " unknown region, ", local.out_of_range,
                  " outside grid");
    }
    if (stats) *stats = local;
    return out;
}

PudoPanel count_pudo(const std::vector<TripRecord>& trips, const TimeGrid& grid, PudoMode mode,
                     const std::vector<RegionId>& regions_in, const IngestWindow& window, IngestStats* stats) {
    grid.validate();
    const auto regions = sorted_unique(regions_in);
    PudoPanel out{Panel(regions, grid), mode};
    for (std::size_t t = 0; t < grid.count; ++t) {
        if (!window.accepts(grid.interval_start(t))) continue;
        for (std::size_t r = 0; r < regions.size(); ++r) out.values.set(r, t, 0.0);
    }
    IngestStats local;
    auto bump = [&](RegionId id, std::size_t t) {
        const std::size_t r = out.values.index_of(id);
        out.values.set(r, t, out.values.at(r, t) + 1.0);
    };
    for (const auto& trip : trips) {
        ++local.rows;
        if (!known(regions, trip.pickup_region) || !known(regions, trip.dropoff_region)) {
            ++local.unknown_region;
            continue;
        }
        auto t = grid.index_of(trip.ts);
        if (!t) {
            ++local.out_of_range;
            continue;
        }
        if (!window.accepts(grid.interval_start(*t))) {
            ++local.out_of_window;
            continue;
        }
        if (mode == PudoMode::combined_pu_do) bump(trip.pickup_region, *t);
        bump(trip.dropoff_region, *t);
    }
    if (local.unknown_region + local.out_of_range > 0) {
        log::info("trip records dropped: ", local.unknown_region, " unknown region, ", local.out_of_range,
                  " outside grid");
    }
    if (stats) *stats = local;
    return out;
}

ControlPanel align_weather(const std::vector<PrecipRecord>& precip, const TimeGrid& grid,
                           const std::vector<RegionId>& regions_in, const IngestWindow& window) {
    grid.validate();
    const auto regions = sorted_unique(regions_in);
    std::map<std::int64_t, std::pair<double, int>> hourly; // hour bucket -> (sum, count)
    for (const auto& rec : precip) {
        if (rec.mm < 0.0) throw InputError("negative precipitation");
        const auto bucket = std::chrono::floor<std::chrono::hours>(rec.ts).time_since_epoch().count();
        auto& slot = hourly[bucket];
        slot.first += rec.mm;
        slot.second += 1;
    }
    ControlPanel out{Panel(regions, grid, 1), {"precip_mm"}};
    for (std::size_t t = 0; t < grid.count; ++t) {
        const Timestamp start = grid.interval_start(t);
        if (!window.accepts(start)) continue;
        const auto bucket = std::chrono::floor<std::chrono::hours>(start).time_since_epoch().count();
        auto it = hourly.find(bucket);
        if (it == hourly.end()) continue;
        const double value = it->second.first / it->second.second;
        for (std::size_t r = 0; r < regions.size(); ++r) out.values.set(r, t, 0, value);
    }
    return out;
}

// ------------------------------------------------------------------ readers

std::vector<RoadSpeedRecord> read_speed_records(const std::string& path) {
    std::vector<RoadSpeedRecord> out;
    csv::read_file(path, {"road_id", "region_id", "ts", "speed", "freeflow"}, [&](const csv::Row& row) {
        RoadSpeedRecord rec;
        rec.road_id = row.fields[0];
        rec.region = static_cast<RegionId>(csv::parse_int(row, 1, path));
        try {
            rec.ts = csv::parse_timestamp(row.fields[2]);
        } catch (const InputError& e) {
            throw InputError(path + ":" + std::to_string(row.line) + ": " + e.what());
        }
        rec.speed = csv::parse_double(row, 3, path);
        rec.freeflow = csv::parse_double(row, 4, path);
        if (rec.speed < 0.0 || !(rec.freeflow > 0.0)) {
            throw InputError(path + ":" + std::to_string(row.line) + ": speed must be >= 0 and free-flow > 0");
        }
        out.push_back(std::move(rec));
    });
    return out;
}

std::vector<TripRecord> read_trip_records(const std::string& path) {
    std::vector<TripRecord> out;
    csv::read_file(path, {"pu_region", "do_region", "ts"}, [&](const csv::Row& row) {
        TripRecord rec;
        rec.pickup_region = static_cast<RegionId>(csv::parse_int(row, 0, path));
        rec.dropoff_region = static_cast<RegionId>(csv::parse_int(row, 1, path));
        try {
            rec.ts = csv::parse_timestamp(row.fields[2]);
        } catch (const InputError& e) {
            throw InputError(path + ":" + std::to_string(row.line) + ": " + e.what());
        }
        out.push_back(rec);
    });
    return out;
}

std::vector<PrecipRecord> read_precip_records(const std::string& path) {
    std::vector<PrecipRecord> out;
    csv::read_file(path, {"ts", "mm"}, [&](const csv::Row& row) {
        PrecipRecord rec;
        try {
            rec.ts = csv::parse_timestamp(row.fields[0]);
        } catch (const InputError& e) {
            throw InputError(path + ":" + std::to_string(row.line) + ": " + e.what());
        }
        rec.mm = csv::parse_double(row, 1, path);
        out.push_back(rec);
    });
    return out;
}

std::vector<AdjacencyPair> read_adjacency(const std::string& path) {
    std::vector<AdjacencyPair> out;
    csv::read_file(path, {"u", "v"}, [&](const csv::Row& row) {
        out.emplace_back(static_cast<RegionId>(csv::parse_int(row, 0, path)),
                         static_cast<RegionId>(csv::parse_int(row, 1, path)));
    });
    return out;
}

std::map<RegionId, double> read_distances(const std::string& path) {
    std::map<RegionId, double> out;
    csv::read_file(path, {"v", "miles"}, [&](const csv::Row& row) {
        const auto id = static_cast<RegionId>(csv::parse_int(row, 0, path));
        if (!out.emplace(id, csv::parse_double(row, 1, path)).second) {
            throw InputError(path + ":" + std::to_string(row.line) + ": duplicate region " + std::to_string(id));
        }
    });
    return out;
}

// ---------------------------------------------------------------- features

std::size_t FeatureLayout::arity() const {
    return lags * (has_pudo_lags() ? 3 : 2) + control_names.size();
}

std::vector<std::string> FeatureLayout::column_names() const {
    std::vector<std::string> names;
    names.reserve(arity());
    for (std::size_t k = lags; k >= 1; --k) names.push_back("y_lag" + std::to_string(k));
    for (std::size_t k = lags; k >= 1; --k) names.push_back("yN_lag" + std::to_string(k));
    if (has_pudo_lags()) {
        for (std::size_t k = lags; k >= 1; --k) names.push_back("d_lag" + std::to_string(k));
    }
    for (const auto& c : control_names) names.push_back("w_" + c);
    return names;
}

namespace {

struct RowSource {
    const SpeedPanel& speed;
    const PudoPanel& pudo;
    const ControlPanel* controls;
    std::size_t r_speed;
    std::size_t r_pudo;
    std::size_t r_ctrl;
    std::vector<double> neighbor;
    std::size_t lags;

    bool speed_row_ok(std::size_t t) const {
        if (!speed.values.has(r_speed, t)) return false;
        for (std::size_t k = 1; k <= lags; ++k) {
            if (!speed.values.has(r_speed, t - k) || std::isnan(neighbor[t - k])) return false;
        }
        return !controls || controls->values.complete(r_ctrl, t);
    }

    bool pudo_row_ok(std::size_t t) const {
        if (!pudo.values.has(r_pudo, t)) return false;
        for (std::size_t k = 1; k <= lags; ++k) {
            if (!pudo.values.has(r_pudo, t - k) || !speed.values.has(r_speed, t - k) || std::isnan(neighbor[t - k])) {
                return false;
            }
        }
        return !controls || controls->values.complete(r_ctrl, t);
    }

    void fill(Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row, std::size_t t, bool with_pudo) const {
        std::size_t c = 0;
        for (std::size_t k = lags; k >= 1; --k) row(c++) = speed.values.at(r_speed, t - k);
        for (std::size_t k = lags; k >= 1; --k) row(c++) = neighbor[t - k];
        if (with_pudo) {
            for (std::size_t k = lags; k >= 1; --k) row(c++) = pudo.values.at(r_pudo, t - k);
        }
        if (controls) {
            for (std::size_t k = 0; k < controls->arity(); ++k) row(c++) = controls->values.at(r_ctrl, t, k);
        }
    }
};

RowSource make_source(const SpeedPanel& speed, const PudoPanel& pudo, const ControlPanel* controls,
                      const RegionGraph& graph, RegionId v, std::size_t lags) {
    if (lags < 1) throw InputError("lag depth I must be at least 1");
    if (!(speed.values.grid() == pudo.values.grid())) throw InputError("speed and PUDO panels use different grids");
    if (controls && !(controls->values.grid() == speed.values.grid())) {
        throw InputError("control panel uses a different grid");
    }
    if (speed.values.interval_count() <= lags) throw InputError("time grid shorter than lag depth");
    return RowSource{speed,
                     pudo,
                     controls,
                     speed.values.index_of(v),
                     pudo.values.index_of(v),
                     controls ? controls->values.index_of(v) : 0,
                     neighbor_series(speed, graph, v),
                     lags};
}

FeatureLayout make_layout(const ControlPanel* controls, std::size_t lags, FeatureTarget target) {
    FeatureLayout layout;
    layout.lags = lags;
    layout.target = target;
    if (controls) layout.control_names = controls->names;
    return layout;
}

} // namespace

FeatureMatrix build_features(const SpeedPanel& speed, const PudoPanel& pudo, const ControlPanel* controls,
                             const RegionGraph& graph, RegionId v, std::size_t lags, FeatureTarget target) {
    const RowSource src = make_source(speed, pudo, controls, graph, v, lags);
    FeatureMatrix fm;
    fm.region = v;
    fm.layout = make_layout(controls, lags, target);
    const bool pudo_target = target == FeatureTarget::pudo;

    std::vector<std::size_t> keep;
    const std::size_t count = speed.values.interval_count();
    for (std::size_t t = lags; t < count; ++t) {
        const bool ok = pudo_target ? src.pudo_row_ok(t) : src.speed_row_ok(t);
        if (ok) {
            keep.push_back(t);
        } else {
            ++fm.skipped;
        }
    }
    if (keep.empty()) throw InputError("region " + std::to_string(v) + ": no complete feature rows");

    fm.x.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(fm.layout.arity()));
    fm.y.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        src.fill(fm.x.row(row), keep[i], pudo_target);
        fm.y(row) = pudo_target ? pudo.values.at(src.r_pudo, keep[i]) : speed.values.at(src.r_speed, keep[i]);
    }
    fm.intervals = std::move(keep);
    if (fm.skipped > 0) log::debug("region ", v, ": ", fm.skipped, " feature rows skipped for missing cells");
    return fm;
}

RegionDataset build_region_dataset(const SpeedPanel& speed, const PudoPanel& pudo, const ControlPanel* controls,
                                   const RegionGraph& graph, RegionId v, std::size_t lags) {
    const RowSource src = make_source(speed, pudo, controls, graph, v, lags);
    RegionDataset ds;
    ds.region = v;

    std::vector<std::size_t> keep;
    const std::size_t count = speed.values.interval_count();
    for (std::size_t t = lags; t < count; ++t) {
        if (src.speed_row_ok(t) && src.pudo_row_ok(t)) {
            keep.push_back(t);
        } else {
            ++ds.skipped;
        }
    }
    if (ds.skipped > 0) log::debug("region ", v, ": ", ds.skipped, " rows dropped for missing cells");

    auto assemble = [&](FeatureTarget target) {
        FeatureMatrix fm;
        fm.region = v;
        fm.layout = make_layout(controls, lags, target);
        fm.skipped = ds.skipped;
        const bool pudo_target = target == FeatureTarget::pudo;
        fm.x.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(fm.layout.arity()));
        fm.y.resize(static_cast<Eigen::Index>(keep.size()));
        for (std::size_t i = 0; i < keep.size(); ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            src.fill(fm.x.row(row), keep[i], pudo_target);
            fm.y(row) = pudo_target ? pudo.values.at(src.r_pudo, keep[i]) : speed.values.at(src.r_speed, keep[i]);
        }
        fm.intervals = keep;
        return fm;
    };
    ds.speed_features = assemble(FeatureTarget::speed);
    ds.pudo_features = assemble(FeatureTarget::pudo);
    ds.neighbor_speed_now.reserve(keep.size());
    for (std::size_t t : keep) ds.neighbor_speed_now.push_back(src.neighbor[t]);
    return ds;
}

} // namespace curbflow
