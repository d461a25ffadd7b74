#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmeobs/grid.hpp"
#include "pmeobs/report.hpp"

namespace pmeobs::io {

using Path = std::filesystem::path;

nlohmann::json grid_metadata(const SpaceTimeGrid<double>& grid);

/// One row per node, slices in time order: x[,y],t,value with %.17g, so a
/// dump read back by read_field_csv reproduces the field bit for bit.
void write_field_csv(const Path& path, const SpaceTimeGrid<double>& grid, const Field<double>& f);
/// Same layout with 0/1 values.
void write_mask_csv(const Path& path, const SpaceTimeGrid<double>& grid, const Mask& mask);
/// Writes `<path>.json` next to a field dump with the grid metadata.
void write_sidecar(const Path& csv_path, const SpaceTimeGrid<double>& grid, const std::string& quantity);

/// Reads a field dump for `grid`; coordinates must match the grid nodes.
Field<double> read_field_csv(const Path& path, const SpaceTimeGrid<double>& grid);

nlohmann::json to_json(const SolveReport& r);
void write_trace_csv(const Path& path, const std::vector<double>& decrements);
void write_json(const Path& path, const nlohmann::json& j);

}  // namespace pmeobs::io
