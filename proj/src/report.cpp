#include "curbflow/report.hpp"

#include "curbflow/csv.hpp"
#include "curbflow/errors.hpp"
#include "curbflow/stats.hpp"

#include <ostream>

namespace curbflow {

std::map<RegionId, double> speed_index(const SpeedPanel& panel, const IngestWindow& window) {
    panel.validate();
    const Panel& p = panel.values;
    std::map<RegionId, double> out;
    for (std::size_t r = 0; r < p.region_count(); ++r) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t t = 0; t < p.interval_count(); ++t) {
            if (!p.has(r, t) || !window.accepts(p.grid().interval_start(t))) continue;
            sum += p.at(r, t);
            ++n;
        }
        if (n == 0) continue;
        if (!(panel.freeflow[r] > 0.0)) {
            throw InputError("speed index undefined: region " + std::to_string(p.regions()[r]) +
                             " has zero free-flow speed");
        }
        out[p.regions()[r]] = sum / static_cast<double>(n) / panel.freeflow[r];
    }
    return out;
}

double pearson_correlation(const std::map<RegionId, double>& a, const std::map<RegionId, double>& b) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& [v, x] : a) {
        if (const auto it = b.find(v); it != b.end()) {
            xs.push_back(x);
            ys.push_back(it->second);
        }
    }
    return stats::pearson(xs, ys);
}

void write_long(std::ostream& out, const std::vector<LongRow>& rows) {
    out << "region,metric,value\n";
    for (const auto& r : rows) out << r.region << ',' << r.metric << ',' << csv::format_double(r.value) << '\n';
}

} // namespace curbflow
