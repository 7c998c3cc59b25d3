#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace curbflow {

using RegionId = std::int32_t;
using Timestamp = std::chrono::sys_seconds;

enum class DayClass { weekday, weekend };

std::string_view to_string(DayClass c);
DayClass parse_day_class(std::string_view text);

// Uniform grid of analysis intervals. Interval t covers
// [start + t*interval_len, start + (t+1)*interval_len).
struct TimeGrid {
    Timestamp start{};
    std::int64_t interval_len = 300;
    std::size_t count = 1;
    DayClass day_class = DayClass::weekday;

    void validate() const;

    Timestamp interval_start(std::size_t t) const {
        return start + std::chrono::seconds(interval_len * static_cast<std::int64_t>(t));
    }
    // Interval containing ts, or nullopt when ts falls outside the grid.
    std::optional<std::size_t> index_of(Timestamp ts) const;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

// Region adjacency graph. Regions are kept sorted by id; `index_of` maps an
// id to its dense position, which every panel built on the same region list
// shares.
class RegionGraph {
public:
    RegionGraph() = default;

    const std::vector<RegionId>& regions() const { return regions_; }
    std::size_t size() const { return regions_.size(); }
    bool contains(RegionId id) const;
    std::size_t index_of(RegionId id) const;

    // Neighbors as dense indices, sorted ascending.
    const std::vector<std::size_t>& neighbors_of_index(std::size_t i) const { return neighbors_[i]; }
    std::vector<RegionId> neighbors(RegionId id) const;
    bool adjacent(RegionId a, RegionId b) const;

    bool has_distances() const { return has_distances_; }
    double mean_trip_distance(RegionId id) const;
    double mean_trip_distance_at(std::size_t i) const { return distance_[i]; }

    // Declared regions with no edges to anything are permitted here; consumers
    // that need neighbors check for themselves.
    static RegionGraph from_parts(std::vector<RegionId> regions,
                                  std::vector<std::set<std::size_t>> neighbors,
                                  std::optional<std::vector<double>> distances);

private:
    std::vector<RegionId> regions_;
    std::vector<std::vector<std::size_t>> neighbors_;
    std::vector<double> distance_;
    bool has_distances_ = false;
};

using AdjacencyPair = std::pair<RegionId, RegionId>;

// Declares the regions listed in `distances` and closes the edge list
// symmetrically. Throws InputError on self-loops, unknown ids or
// non-positive distances.
RegionGraph build_region_graph(std::span<const AdjacencyPair> pairs,
                               const std::map<RegionId, double>& distances);

// Same, for estimation-only runs where trip distances are not known.
RegionGraph build_region_graph(std::span<const AdjacencyPair> pairs,
                               const std::vector<RegionId>& regions);

// Dense region x interval x arity store. Missing cells hold NaN internally and
// are reported through has()/get(); reading a missing cell with at() throws
// MissingCell.
class Panel {
public:
    Panel() = default;
    Panel(std::vector<RegionId> regions, TimeGrid grid, std::size_t arity = 1);

    const std::vector<RegionId>& regions() const { return regions_; }
    const TimeGrid& grid() const { return grid_; }
    std::size_t arity() const { return arity_; }
    std::size_t region_count() const { return regions_.size(); }
    std::size_t interval_count() const { return grid_.count; }

    std::size_t index_of(RegionId id) const;
    bool contains(RegionId id) const;

    bool has(std::size_t ri, std::size_t t, std::size_t k = 0) const;
    double at(std::size_t ri, std::size_t t, std::size_t k = 0) const;
    std::optional<double> get(std::size_t ri, std::size_t t, std::size_t k = 0) const;
    void set(std::size_t ri, std::size_t t, double value) { set(ri, t, 0, value); }
    void set(std::size_t ri, std::size_t t, std::size_t k, double value);
    void mark_missing(std::size_t ri, std::size_t t, std::size_t k = 0);

    // True when every component of cell (ri, t) is present.
    bool complete(std::size_t ri, std::size_t t) const;
    std::size_t missing_count() const;

    double at_id(RegionId id, std::size_t t, std::size_t k = 0) const { return at(index_of(id), t, k); }

private:
    std::size_t offset(std::size_t ri, std::size_t t, std::size_t k) const {
        return (ri * grid_.count + t) * arity_ + k;
    }

    std::vector<RegionId> regions_;
    TimeGrid grid_;
    std::size_t arity_ = 1;
    std::vector<double> data_;
};

// Region speed y_v^t in mph plus the region's flow-weighted free-flow speed.
struct SpeedPanel {
    Panel values;
    std::vector<double> freeflow; // indexed like values.regions()

    void validate() const;
};

enum class PudoMode { combined_pu_do, dropoff_only };

std::string_view to_string(PudoMode m);
PudoMode parse_pudo_mode(std::string_view text);

// NoPUDO counts d_v^t.
struct PudoPanel {
    Panel values;
    PudoMode mode = PudoMode::combined_pu_do;

    void validate() const;
};

// Exogenous controls W_v^t with fixed arity; `names` labels each component.
struct ControlPanel {
    Panel values;
    std::vector<std::string> names;

    std::size_t arity() const { return values.arity(); }
};

// Arithmetic mean of neighbor speeds at interval t.
double neighbor_mean_speed(const SpeedPanel& panel, const RegionGraph& graph, RegionId v, std::size_t t);

struct MergeResult {
    RegionGraph graph;
    SpeedPanel speed;
    PudoPanel pudo;
    RegionId merged_id = 0;
};

// Collapses a connected group of regions into one aggregate region carrying
// the smallest member id. NoPUDO is summed; speed is the free-flow weighted
// mean of member speeds (missing if any member is missing); neighbors are the
// union of member neighbors outside the group. When `demand_weights` is
// given, the merged trip distance is the demand-weighted mean of member
// distances; otherwise members are weighted by total NoPUDO.
MergeResult merge_regions(const RegionGraph& graph, const SpeedPanel& speed, const PudoPanel& pudo,
                          const std::set<RegionId>& group,
                          const std::map<RegionId, double>* demand_weights = nullptr);

// Re-indexes a control panel onto a new region list (used after merging:
// controls are regional broadcasts, so the merged region inherits the first
// member's row).
ControlPanel remap_controls(const ControlPanel& controls, const std::vector<RegionId>& regions,
                            const std::map<RegionId, RegionId>& source_of);

} // namespace curbflow
