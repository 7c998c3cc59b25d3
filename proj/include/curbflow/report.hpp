#pragma once

#include "curbflow/data_model.hpp"
#include "curbflow/ingest.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace curbflow {

// Time-averaged region speed divided by the region's free-flow speed, over the
// intervals `window` accepts. Regions with no observed interval are omitted.
std::map<RegionId, double> speed_index(const SpeedPanel& panel, const IngestWindow& window = {});

// Pearson r over the keys both maps share.
double pearson_correlation(const std::map<RegionId, double>& a, const std::map<RegionId, double>& b);

struct LongRow {
    RegionId region = 0;
    std::string metric;
    double value = 0.0;
};

// `region,metric,value`
void write_long(std::ostream& out, const std::vector<LongRow>& rows);

} // namespace curbflow
