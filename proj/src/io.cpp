#include "pmeobs/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pmeobs::io {

using json = nlohmann::json;

namespace {

std::ofstream open_out(const Path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_header(std::ostream& out, const SpaceTimeGrid<double>& grid) {
  out << (grid.dim() == 2 ? "x,y,t,value\n" : "x,t,value\n");
}

template <typename ValueAt>
void write_rows(std::ostream& out, const SpaceTimeGrid<double>& grid, ValueAt&& value) {
  char buf[128];
  for (Index k = 0; k < grid.time_points(); ++k)
    for (Index n = 0; n < grid.slice_size(); ++n) {
      if (grid.dim() == 2)
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", grid.x(n), grid.y(n), grid.t(k), value(n, k));
      else
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", grid.x(n), grid.t(k), value(n, k));
      out << buf;
    }
}

}  // namespace

json grid_metadata(const SpaceTimeGrid<double>& grid) {
  json j = {{"d", grid.dim()},   {"nx", grid.nx()}, {"nt", grid.nt()}, {"T", grid.T()},
            {"dx", grid.dx()},   {"dt", grid.dt()}, {"points_x", grid.points_x()},
            {"time_points", grid.time_points()}};
  if (grid.dim() == 2) {
    j["ny"] = grid.ny();
    j["dy"] = grid.dy();
    j["points_y"] = grid.points_y();
  }
  j["ordering"] = grid.dim() == 2 ? "t slowest, then y, then x" : "t slowest, then x";
  return j;
}

void write_field_csv(const Path& path, const SpaceTimeGrid<double>& grid, const Field<double>& f) {
  detail::require_field(grid, f, "write_field_csv");
  auto out = open_out(path);
  write_header(out, grid);
  write_rows(out, grid, [&](Index n, Index k) { return f(n, k); });
}

void write_mask_csv(const Path& path, const SpaceTimeGrid<double>& grid, const Mask& mask) {
  if (mask.rows() != grid.slice_size() || mask.cols() != grid.time_points())
    throw std::invalid_argument("write_mask_csv: mask shape does not match the grid");
  auto out = open_out(path);
  write_header(out, grid);
  write_rows(out, grid, [&](Index n, Index k) { return mask(n, k) ? 1.0 : 0.0; });
}

void write_sidecar(const Path& csv_path, const SpaceTimeGrid<double>& grid, const std::string& quantity) {
  json j = grid_metadata(grid);
  j["quantity"] = quantity;
  j["file"] = csv_path.filename().string();
  write_json(Path(csv_path.string() + ".json"), j);
}

Field<double> read_field_csv(const Path& path, const SpaceTimeGrid<double>& grid) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  const int cols = grid.dim() == 2 ? 4 : 3;
  Field<double> f(grid.slice_size(), grid.time_points());
  const double tol = 1e-9;
  Index row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= f.size()) throw std::runtime_error(path.string() + ": more rows than grid nodes");
    double v[4];
    std::istringstream ss(line);
    std::string cell;
    int c = 0;
    while (c < cols && std::getline(ss, cell, ',')) v[c++] = std::strtod(cell.c_str(), nullptr);
    if (c != cols) throw std::runtime_error(path.string() + ": row " + std::to_string(row + 2) + " has too few columns");
    const Index k = row / grid.slice_size(), n = row % grid.slice_size();
    const bool match = std::abs(v[0] - grid.x(n)) <= tol &&
                       (grid.dim() == 1 || std::abs(v[1] - grid.y(n)) <= tol) &&
                       std::abs(v[cols - 2] - grid.t(k)) <= tol;
    if (!match) throw std::runtime_error(path.string() + ": row " + std::to_string(row + 2) + " does not match the grid node");
    f(n, k) = v[cols - 1];
    ++row;
  }
  if (row != f.size()) throw std::runtime_error(path.string() + ": fewer rows than grid nodes");
  return f;
}

json to_json(const SolveReport& r) {
  return {{"steps", r.steps},
          {"newton_iters", r.newton_iters},
          {"max_residual", r.max_residual},
          {"complementarity_residual", r.complementarity_residual},
          {"contact_nodes", r.contact_nodes},
          {"sweeps", r.sweeps},
          {"sweep_decrements", r.sweep_decrements},
          {"wallclock", r.wallclock}};
}

void write_trace_csv(const Path& path, const std::vector<double>& decrements) {
  auto out = open_out(path);
  out << "sweep,decrement\n";
  char buf[64];
  for (std::size_t i = 0; i < decrements.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, decrements[i]);
    out << buf;
  }
}

void write_json(const Path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

}  // namespace pmeobs::io
