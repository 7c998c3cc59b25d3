#pragma once

// Six regions on a ring (1-2-4-5-6-3-1). Destination 5 is slow and strongly
// affected by drop-offs; its neighbors 4 and 6 are short and barely affected,
// so moving some drop-offs there and walking should pay off. Region 5 is
// slower than walking by default; pass a faster `slow` speed for an instance
// where detours only add time.

#include "curbflow/reroute.hpp"

#include <map>
#include <vector>

namespace fixtures {

inline std::vector<curbflow::AdjacencyPair> six_ring_edges() {
    return {{1, 2}, {1, 3}, {2, 4}, {3, 6}, {4, 5}, {5, 6}};
}

inline std::map<curbflow::RegionId, double> six_ring_distances() {
    return {{1, 1.0}, {2, 1.0}, {3, 1.0}, {4, 0.2}, {5, 1.0}, {6, 0.2}};
}

inline std::map<curbflow::RegionId, double> six_ring_speeds(double slow = 2.5) {
    return {{1, 10.0}, {2, 10.0}, {3, 10.0}, {4, 10.0}, {5, slow}, {6, 10.0}};
}

inline std::map<curbflow::RegionId, double> six_ring_effects() {
    return {{4, -0.01}, {5, -0.05}, {6, -0.01}};
}

inline std::vector<curbflow::OdDemand> six_ring_demand() {
    return {{1, 5, 100.0}, {1, 4, 20.0}, {1, 6, 20.0}};
}

inline curbflow::ReroutingInstance six_ring(double gamma = 2.0) {
    curbflow::ReroutingParams params;
    params.gamma = gamma;
    auto edges = six_ring_edges();
    return curbflow::build_instance(curbflow::build_region_graph(edges, six_ring_distances()), six_ring_demand(),
                                    six_ring_speeds(), six_ring_effects(), params);
}

} // namespace fixtures
