#pragma once

#include "curbflow/data_model.hpp"

#include <optional>
#include <string>

namespace curbflow {

// The canonical on-disk form of ingested panels, shared by `ingest`, `synth`
// and everything that reads their output:
//   grid.json      start, interval_len, count, day_class, pudo_mode, regions
//   speed.csv      region,t,value     (NA marks a missing cell)
//   freeflow.csv   region,freeflow
//   pudo.csv       region,t,count
//   controls.csv   region,t,<name>... (only when controls exist)
struct PanelSet {
    SpeedPanel speed;
    PudoPanel pudo;
    std::optional<ControlPanel> controls;
};

void write_panel_set(const std::string& dir, const PanelSet& set);
PanelSet read_panel_set(const std::string& dir);

} // namespace curbflow
