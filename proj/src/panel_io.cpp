#include "curbflow/panel_io.hpp"

#include "curbflow/csv.hpp"
#include "curbflow/errors.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>

namespace curbflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw InputError("cannot write " + p.string());
    return out;
}

void write_cells(std::ostream& out, const Panel& panel) {
    for (std::size_t r = 0; r < panel.region_count(); ++r) {
        for (std::size_t t = 0; t < panel.interval_count(); ++t) {
            out << panel.regions()[r] << ',' << t;
            for (std::size_t k = 0; k < panel.arity(); ++k) {
                out << ',';
                if (panel.has(r, t, k)) {
                    out << csv::format_double(panel.at(r, t, k));
                } else {
                    out << "NA";
                }
            }
            out << '\n';
        }
    }
}

void read_cells(const fs::path& path, const std::vector<std::string>& header, Panel& panel) {
    const std::string source = path.string();
    csv::read_file(source, header, [&](const csv::Row& row) {
        const auto v = static_cast<RegionId>(csv::parse_int(row, 0, source));
        const long long t = csv::parse_int(row, 1, source);
        if (!panel.contains(v)) {
            throw InputError(source + ":" + std::to_string(row.line) + ": region " + std::to_string(v) +
                             " not declared in grid.json");
        }
        if (t < 0 || static_cast<std::size_t>(t) >= panel.interval_count()) {
            throw InputError(source + ":" + std::to_string(row.line) + ": interval " + std::to_string(t) +
                             " outside the grid");
        }
        const std::size_t ri = panel.index_of(v);
        for (std::size_t k = 0; k < panel.arity(); ++k) {
            if (row.fields[2 + k] == "NA") continue;
            panel.set(ri, static_cast<std::size_t>(t), k, csv::parse_double(row, 2 + k, source));
        }
    });
}

} // namespace

void write_panel_set(const std::string& dir, const PanelSet& set) {
    const fs::path root(dir);
    fs::create_directories(root);
    const Panel& sp = set.speed.values;

    json grid = {
        {"start", csv::format_timestamp(sp.grid().start)},
        {"interval_len", sp.grid().interval_len},
        {"count", sp.grid().count},
        {"day_class", std::string(to_string(sp.grid().day_class))},
        {"pudo_mode", std::string(to_string(set.pudo.mode))},
        {"regions", sp.regions()},
    };
    if (set.controls) grid["controls"] = set.controls->names;
    open_out(root / "grid.json") << grid.dump(2) << '\n';

    {
        auto out = open_out(root / "speed.csv");
        out << "region,t,value\n";
        write_cells(out, sp);
    }
    {
        auto out = open_out(root / "freeflow.csv");
        out << "region,freeflow\n";
        for (std::size_t r = 0; r < sp.region_count(); ++r) {
            out << sp.regions()[r] << ',' << csv::format_double(set.speed.freeflow[r]) << '\n';
        }
    }
    {
        auto out = open_out(root / "pudo.csv");
        out << "region,t,count\n";
        write_cells(out, set.pudo.values);
    }
    if (set.controls) {
        auto out = open_out(root / "controls.csv");
        out << "region,t";
        for (const auto& n : set.controls->names) out << ',' << n;
        out << '\n';
        write_cells(out, set.controls->values);
    }
}

PanelSet read_panel_set(const std::string& dir) {
    const fs::path root(dir);
    std::ifstream gin(root / "grid.json");
    if (!gin) throw InputError("cannot read " + (root / "grid.json").string());
    json grid;
    try {
        gin >> grid;
    } catch (const json::exception& e) {
        throw InputError((root / "grid.json").string() + ": " + e.what());
    }

    TimeGrid g;
    std::vector<RegionId> regions;
    PudoMode mode = PudoMode::combined_pu_do;
    std::vector<std::string> control_names;
    try {
        g.start = csv::parse_timestamp(grid.at("start").get<std::string>());
        g.interval_len = grid.at("interval_len").get<std::int64_t>();
        g.count = grid.at("count").get<std::size_t>();
        g.day_class = parse_day_class(grid.at("day_class").get<std::string>());
        mode = parse_pudo_mode(grid.value("pudo_mode", std::string("combined_pu_do")));
        regions = grid.at("regions").get<std::vector<RegionId>>();
        if (grid.contains("controls")) control_names = grid.at("controls").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw InputError((root / "grid.json").string() + ": " + e.what());
    }
    g.validate();
    if (std::set<RegionId>(regions.begin(), regions.end()).size() != regions.size()) {
        throw InputError((root / "grid.json").string() + ": duplicate region ids");
    }
    std::sort(regions.begin(), regions.end());

    PanelSet set;
    set.speed.values = Panel(regions, g);
    set.speed.freeflow.assign(regions.size(), 0.0);
    read_cells(root / "speed.csv", {"region", "t", "value"}, set.speed.values);
    const std::string ff_source = (root / "freeflow.csv").string();
    csv::read_file(ff_source, {"region", "freeflow"}, [&](const csv::Row& row) {
        const auto v = static_cast<RegionId>(csv::parse_int(row, 0, ff_source));
        if (!set.speed.values.contains(v)) {
            throw InputError(ff_source + ":" + std::to_string(row.line) + ": unknown region " + std::to_string(v));
        }
        set.speed.freeflow[set.speed.values.index_of(v)] = csv::parse_double(row, 1, ff_source);
    });
    set.speed.validate();

    set.pudo.mode = mode;
    set.pudo.values = Panel(regions, g);
    read_cells(root / "pudo.csv", {"region", "t", "count"}, set.pudo.values);
    set.pudo.validate();

    if (!control_names.empty()) {
        ControlPanel c;
        c.names = control_names;
        c.values = Panel(regions, g, control_names.size());
        std::vector<std::string> header{"region", "t"};
        header.insert(header.end(), control_names.begin(), control_names.end());
        read_cells(root / "controls.csv", header, c.values);
        set.controls = std::move(c);
    }
    return set;
}

} // namespace curbflow
