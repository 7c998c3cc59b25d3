#include "curbflow/data_model.hpp"

#include "curbflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace curbflow {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string region_str(RegionId id) { return std::to_string(id); }

} // namespace

std::string_view to_string(DayClass c) { return c == DayClass::weekday ? "weekday" : "weekend"; }

DayClass parse_day_class(std::string_view text) {
    if (text == "weekday") return DayClass::weekday;
    if (text == "weekend") return DayClass::weekend;
    throw InputError("unknown day class '" + std::string(text) + "' (expected weekday|weekend)");
}

std::string_view to_string(PudoMode m) { return m == PudoMode::combined_pu_do ? "combined_pu_do" : "dropoff_only"; }

PudoMode parse_pudo_mode(std::string_view text) {
    if (text == "combined_pu_do" || text == "combined") return PudoMode::combined_pu_do;
    if (text == "dropoff_only") return PudoMode::dropoff_only;
    throw InputError("unknown PUDO mode '" + std::string(text) + "'");
}

// ---------------------------------------------------------------- TimeGrid

void TimeGrid::validate() const {
    if (interval_len <= 0) throw InputError("time grid interval length must be positive");
    if (count < 1) throw InputError("time grid must contain at least one interval");
}

std::optional<std::size_t> TimeGrid::index_of(Timestamp ts) const {
    const auto offset = (ts - start).count();
    if (offset < 0) return std::nullopt;
    const auto idx = static_cast<std::size_t>(offset / interval_len);
    if (idx >= count) return std::nullopt;
    return idx;
}

// ------------------------------------------------------------- RegionGraph

bool RegionGraph::contains(RegionId id) const { return std::binary_search(regions_.begin(), regions_.end(), id); }

std::size_t RegionGraph::index_of(RegionId id) const {
    auto it = std::lower_bound(regions_.begin(), regions_.end(), id);
    if (it == regions_.end() || *it != id) throw InputError("unknown region id " + region_str(id));
    return static_cast<std::size_t>(it - regions_.begin());
}

std::vector<RegionId> RegionGraph::neighbors(RegionId id) const {
    std::vector<RegionId> out;
    for (std::size_t j : neighbors_[index_of(id)]) out.push_back(regions_[j]);
    return out;
}

bool RegionGraph::adjacent(RegionId a, RegionId b) const {
    const auto& n = neighbors_[index_of(a)];
    return std::binary_search(n.begin(), n.end(), index_of(b));
}

double RegionGraph::mean_trip_distance(RegionId id) const {
    if (!has_distances_) throw InputError("region graph has no trip distances");
    return distance_[index_of(id)];
}

RegionGraph RegionGraph::from_parts(std::vector<RegionId> regions, std::vector<std::set<std::size_t>> neighbors,
                                    std::optional<std::vector<double>> distances) {
    RegionGraph g;
    g.regions_ = std::move(regions);
    if (!std::is_sorted(g.regions_.begin(), g.regions_.end()) ||
        std::adjacent_find(g.regions_.begin(), g.regions_.end()) != g.regions_.end()) {
        throw InputError("region ids must be unique");
    }
    const std::size_t n = g.regions_.size();
    if (neighbors.size() != n) throw InputError("neighbor table size mismatch");
    g.neighbors_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j : neighbors[i]) {
            if (j >= n) throw InputError("neighbor index out of range");
            if (j == i) throw InputError("self-loop on region " + region_str(g.regions_[i]));
            if (!neighbors[j].contains(i)) {
                throw InputError("adjacency is not symmetric between " + region_str(g.regions_[i]) + " and " +
                                 region_str(g.regions_[j]));
            }
        }
        g.neighbors_[i].assign(neighbors[i].begin(), neighbors[i].end());
    }
    if (distances) {
        if (distances->size() != n) throw InputError("distance table size mismatch");
        for (std::size_t i = 0; i < n; ++i) {
            if (!((*distances)[i] > 0.0)) {
                throw InputError("non-positive trip distance for region " + region_str(g.regions_[i]));
            }
        }
        g.distance_ = std::move(*distances);
        g.has_distances_ = true;
    } else {
        g.distance_.assign(n, kMissing);
    }
    return g;
}

namespace {

RegionGraph close_edges(std::span<const AdjacencyPair> pairs, std::vector<RegionId> regions,
                        std::optional<std::vector<double>> distances) {
    std::vector<std::set<std::size_t>> nb(regions.size());
    auto idx = [&](RegionId id) {
        auto it = std::lower_bound(regions.begin(), regions.end(), id);
        if (it == regions.end() || *it != id) throw InputError("adjacency references unknown region id " + region_str(id));
        return static_cast<std::size_t>(it - regions.begin());
    };
    for (const auto& [u, v] : pairs) {
        if (u == v) throw InputError("self-loop on region " + region_str(u));
        const std::size_t a = idx(u);
        const std::size_t b = idx(v);
        nb[a].insert(b);
        nb[b].insert(a);
    }
    return RegionGraph::from_parts(std::move(regions), std::move(nb), std::move(distances));
}

} // namespace

RegionGraph build_region_graph(std::span<const AdjacencyPair> pairs, const std::map<RegionId, double>& distances) {
    std::vector<RegionId> regions;
    std::vector<double> dist;
    for (const auto& [id, miles] : distances) {
        if (!(miles > 0.0) || !std::isfinite(miles)) {
            throw InputError("non-positive trip distance for region " + region_str(id));
        }
        regions.push_back(id);
        dist.push_back(miles);
    }
    return close_edges(pairs, std::move(regions), std::move(dist));
}

RegionGraph build_region_graph(std::span<const AdjacencyPair> pairs, const std::vector<RegionId>& regions) {
    std::vector<RegionId> sorted = regions;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    return close_edges(pairs, std::move(sorted), std::nullopt);
}

// ------------------------------------------------------------------- Panel

Panel::Panel(std::vector<RegionId> regions, TimeGrid grid, std::size_t arity)
    : regions_(std::move(regions)), grid_(grid), arity_(arity) {
    grid_.validate();
    std::sort(regions_.begin(), regions_.end());
    if (std::adjacent_find(regions_.begin(), regions_.end()) != regions_.end()) {
        throw InputError("panel region ids must be unique");
    }
    data_.assign(regions_.size() * grid_.count * arity_, kMissing);
}

std::size_t Panel::index_of(RegionId id) const {
    auto it = std::lower_bound(regions_.begin(), regions_.end(), id);
    if (it == regions_.end() || *it != id) throw InputError("region " + region_str(id) + " not in panel");
    return static_cast<std::size_t>(it - regions_.begin());
}

bool Panel::contains(RegionId id) const { return std::binary_search(regions_.begin(), regions_.end(), id); }

bool Panel::has(std::size_t ri, std::size_t t, std::size_t k) const { return !std::isnan(data_[offset(ri, t, k)]); }

double Panel::at(std::size_t ri, std::size_t t, std::size_t k) const {
    const double v = data_[offset(ri, t, k)];
    if (std::isnan(v)) {
        std::ostringstream os;
        os << "missing cell: region " << regions_[ri] << ", interval " << t;
        if (arity_ > 1) os << ", component " << k;
        throw MissingCell(os.str());
    }
    return v;
}

std::optional<double> Panel::get(std::size_t ri, std::size_t t, std::size_t k) const {
    const double v = data_[offset(ri, t, k)];
    if (std::isnan(v)) return std::nullopt;
    return v;
}

void Panel::set(std::size_t ri, std::size_t t, std::size_t k, double value) {
    if (!std::isfinite(value)) throw InputError("panel values must be finite");
    data_[offset(ri, t, k)] = value;
}

void Panel::mark_missing(std::size_t ri, std::size_t t, std::size_t k) { data_[offset(ri, t, k)] = kMissing; }

bool Panel::complete(std::size_t ri, std::size_t t) const {
    for (std::size_t k = 0; k < arity_; ++k) {
        if (!has(ri, t, k)) return false;
    }
    return true;
}

std::size_t Panel::missing_count() const {
    return static_cast<std::size_t>(std::count_if(data_.begin(), data_.end(), [](double v) { return std::isnan(v); }));
}

void SpeedPanel::validate() const {
    if (freeflow.size() != values.region_count()) throw InputError("free-flow table does not match panel regions");
    for (std::size_t r = 0; r < values.region_count(); ++r) {
        for (std::size_t t = 0; t < values.interval_count(); ++t) {
            if (auto v = values.get(r, t); v && *v < 0.0) throw InputError("negative speed in panel");
        }
    }
}

void PudoPanel::validate() const {
    for (std::size_t r = 0; r < values.region_count(); ++r) {
        for (std::size_t t = 0; t < values.interval_count(); ++t) {
            if (auto v = values.get(r, t); v && (*v < 0.0 || *v != std::floor(*v))) {
                throw InputError("NoPUDO counts must be non-negative integers");
            }
        }
    }
}

// ---------------------------------------------------------- neighbor speed

double neighbor_mean_speed(const SpeedPanel& panel, const RegionGraph& graph, RegionId v, std::size_t t) {
    const auto& nb = graph.neighbors_of_index(graph.index_of(v));
    if (nb.empty()) throw InputError("region " + region_str(v) + " has no neighbors");
    double sum = 0.0;
    for (std::size_t j : nb) {
        sum += panel.values.at_id(graph.regions()[j], t);
    }
    return sum / static_cast<double>(nb.size());
}

// ------------------------------------------------------------ merge_regions

MergeResult merge_regions(const RegionGraph& graph, const SpeedPanel& speed, const PudoPanel& pudo,
                          const std::set<RegionId>& group, const std::map<RegionId, double>* demand_weights) {
    if (group.size() < 2) throw InputError("merge group needs at least two regions");
    for (RegionId id : group) {
        if (!graph.contains(id)) throw InputError("merge group references unknown region " + region_str(id));
    }

    // Connectivity inside the group (BFS restricted to members).
    {
        std::set<RegionId> seen{*group.begin()};
        std::deque<RegionId> frontier{*group.begin()};
        while (!frontier.empty()) {
            RegionId cur = frontier.front();
            frontier.pop_front();
            for (RegionId n : graph.neighbors(cur)) {
                if (group.contains(n) && seen.insert(n).second) frontier.push_back(n);
            }
        }
        if (seen.size() != group.size()) throw InputError("merge group is not connected in the region graph");
    }

    const RegionId merged_id = *group.begin();
    std::vector<RegionId> new_regions;
    for (RegionId id : graph.regions()) {
        if (!group.contains(id) || id == merged_id) new_regions.push_back(id);
    }
    auto new_index = [&](RegionId id) {
        if (group.contains(id)) id = merged_id;
        return static_cast<std::size_t>(std::lower_bound(new_regions.begin(), new_regions.end(), id) -
                                        new_regions.begin());
    };

    std::vector<std::set<std::size_t>> nb(new_regions.size());
    for (RegionId id : graph.regions()) {
        for (RegionId n : graph.neighbors(id)) {
            const std::size_t a = new_index(id);
            const std::size_t b = new_index(n);
            if (a != b) nb[a].insert(b);
        }
    }

    const TimeGrid& grid = speed.values.grid();
    if (!(pudo.values.grid() == grid)) throw InputError("speed and PUDO panels use different time grids");

    // PUDO: sum of members.
    PudoPanel merged_pudo{Panel(new_regions, grid), pudo.mode};
    std::vector<double> member_total(graph.size(), 0.0);
    for (std::size_t t = 0; t < grid.count; ++t) {
        for (RegionId id : new_regions) {
            const std::size_t dst = new_index(id);
            if (id != merged_id) {
                if (auto v = pudo.values.get(pudo.values.index_of(id), t)) merged_pudo.values.set(dst, t, *v);
                continue;
            }
            double sum = 0.0;
            bool ok = true;
            for (RegionId m : group) {
                auto v = pudo.values.get(pudo.values.index_of(m), t);
                if (!v) {
                    ok = false;
                    break;
                }
                sum += *v;
            }
            if (ok) merged_pudo.values.set(dst, t, sum);
        }
        for (RegionId m : group) {
            if (auto v = pudo.values.get(pudo.values.index_of(m), t)) member_total[graph.index_of(m)] += *v;
        }
    }

    // Speed: free-flow weighted mean of members.
    SpeedPanel merged_speed{Panel(new_regions, grid), std::vector<double>(new_regions.size(), 0.0)};
    double ff_sum = 0.0;
    double ff_sq = 0.0;
    for (RegionId m : group) {
        const double ff = speed.freeflow[speed.values.index_of(m)];
        ff_sum += ff;
        ff_sq += ff * ff;
    }
    for (RegionId id : new_regions) {
        const std::size_t dst = new_index(id);
        if (id != merged_id) {
            const std::size_t src = speed.values.index_of(id);
            merged_speed.freeflow[dst] = speed.freeflow[src];
            for (std::size_t t = 0; t < grid.count; ++t) {
                if (auto v = speed.values.get(src, t)) merged_speed.values.set(dst, t, *v);
            }
            continue;
        }
        // Free-flow of the aggregate is itself free-flow weighted, matching
        // the per-road rule used when aggregating raw records.
        merged_speed.freeflow[dst] = ff_sq / ff_sum;
        for (std::size_t t = 0; t < grid.count; ++t) {
            double num = 0.0;
            bool ok = true;
            for (RegionId m : group) {
                const std::size_t src = speed.values.index_of(m);
                auto v = speed.values.get(src, t);
                if (!v) {
                    ok = false;
                    break;
                }
                num += *v * speed.freeflow[src];
            }
            if (ok) merged_speed.values.set(dst, t, num / ff_sum);
        }
    }

    std::optional<std::vector<double>> distances;
    if (graph.has_distances()) {
        distances.emplace(new_regions.size(), 0.0);
        double wsum = 0.0;
        double dsum = 0.0;
        for (RegionId m : group) {
            double w = demand_weights ? demand_weights->at(m) : member_total[graph.index_of(m)];
            wsum += w;
            dsum += w * graph.mean_trip_distance(m);
        }
        for (RegionId id : new_regions) {
            const std::size_t dst = new_index(id);
            if (id != merged_id) {
                (*distances)[dst] = graph.mean_trip_distance(id);
            } else if (wsum > 0.0) {
                (*distances)[dst] = dsum / wsum;
            } else {
                double plain = 0.0;
                for (RegionId m : group) plain += graph.mean_trip_distance(m);
                (*distances)[dst] = plain / static_cast<double>(group.size());
            }
        }
    }

    return MergeResult{RegionGraph::from_parts(new_regions, std::move(nb), std::move(distances)),
                       std::move(merged_speed), std::move(merged_pudo), merged_id};
}

ControlPanel remap_controls(const ControlPanel& controls, const std::vector<RegionId>& regions,
                            const std::map<RegionId, RegionId>& source_of) {
    ControlPanel out{Panel(regions, controls.values.grid(), controls.arity()), controls.names};
    for (std::size_t r = 0; r < out.values.region_count(); ++r) {
        const RegionId id = out.values.regions()[r];
        auto it = source_of.find(id);
        const RegionId src_id = it == source_of.end() ? id : it->second;
        const std::size_t src = controls.values.index_of(src_id);
        for (std::size_t t = 0; t < out.values.interval_count(); ++t) {
            for (std::size_t k = 0; k < out.arity(); ++k) {
                if (auto v = controls.values.get(src, t, k)) out.values.set(r, t, k, *v);
            }
        }
    }
    return out;
}

} // namespace curbflow
