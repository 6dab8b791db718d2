#include "awarenav/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "awarenav/error.hpp"

namespace awarenav {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::WindowTooLarge: return "WindowTooLarge";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidMap: return "InvalidMap";
    case Errc::InvalidGoal: return "InvalidGoal";
    case Errc::EmptyWorld: return "EmptyWorld";
    case Errc::Unreachable: return "Unreachable";
    case Errc::SingularInnovation: return "SingularInnovation";
    case Errc::InvalidAwareness: return "InvalidAwareness";
    case Errc::InvalidParticleCount: return "InvalidParticleCount";
    case Errc::DegenerateBelief: return "DegenerateBelief";
    case Errc::EmptyBelief: return "EmptyBelief";
    case Errc::Config: return "Config";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

std::string_view to_string(GlobalAction a) noexcept {
  switch (a) {
    case GlobalAction::E: return "E";
    case GlobalAction::EN: return "EN";
    case GlobalAction::N: return "N";
    case GlobalAction::NW: return "NW";
    case GlobalAction::W: return "W";
    case GlobalAction::WS: return "WS";
    case GlobalAction::S: return "S";
    case GlobalAction::SE: return "SE";
  }
  return "?";
}

double distance(Vec2 a, Vec2 b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

OccupancyGrid::OccupancyGrid(int width, int height, double resolution)
    : width_(width), height_(height), resolution_(resolution) {
  if (width <= 0 || height <= 0) {
    throw Error(Errc::InvalidArgument, "grid dimensions must be positive");
  }
  if (!(resolution > 0.0)) {
    throw Error(Errc::InvalidArgument, "grid resolution must be positive");
  }
  cells_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), Occupancy::Free);
}

Occupancy OccupancyGrid::at(GridIndex idx) const {
  if (!in_bounds(idx)) {
    throw Error(Errc::OutOfBounds, "cell (" + std::to_string(idx.i) + ", " + std::to_string(idx.j) + ")");
  }
  return cells_[linear(idx)];
}

void OccupancyGrid::set(GridIndex idx, Occupancy value) {
  if (!in_bounds(idx)) {
    throw Error(Errc::OutOfBounds, "cell (" + std::to_string(idx.i) + ", " + std::to_string(idx.j) + ")");
  }
  cells_[linear(idx)] = value;
}

std::size_t OccupancyGrid::free_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(),
                                                [](Occupancy o) { return o != Occupancy::Obstacle; }));
}

OccupancyGrid OccupancyGrid::with_humans(std::span<const GridIndex> humans) const {
  OccupancyGrid out = *this;
  for (const GridIndex& h : humans) {
    if (in_bounds(h) && out.cells_[linear(h)] == Occupancy::Free) {
      out.cells_[linear(h)] = Occupancy::Human;
    }
  }
  return out;
}

OccupancyGrid OccupancyGrid::humans_as_obstacles() const {
  OccupancyGrid out = *this;
  std::replace(out.cells_.begin(), out.cells_.end(), Occupancy::Human, Occupancy::Obstacle);
  return out;
}

GridIndex world_to_grid(Vec2 pos, const OccupancyGrid& grid) {
  const double fi = std::floor(pos.x / grid.resolution());
  const double fj = std::floor(pos.y / grid.resolution());
  if (!(fi >= 0.0 && fj >= 0.0 && fi < grid.width() && fj < grid.height())) {
    std::ostringstream msg;
    msg << "point (" << pos.x << ", " << pos.y << ") outside grid extent";
    throw Error(Errc::OutOfBounds, msg.str());
  }
  return {static_cast<int>(fi), static_cast<int>(fj)};
}

Vec2 grid_to_world(GridIndex idx, double resolution) noexcept {
  return {(idx.i + 0.5) * resolution, (idx.j + 0.5) * resolution};
}

double cell_distance(GridIndex a, GridIndex b, double resolution) noexcept {
  return std::hypot(static_cast<double>(a.i - b.i), static_cast<double>(a.j - b.j)) * resolution;
}

std::vector<std::pair<GridIndex, GlobalAction>> neighbors8(GridIndex idx, const OccupancyGrid& grid) {
  std::vector<std::pair<GridIndex, GlobalAction>> out;
  out.reserve(8);
  for (GlobalAction a : kGlobalActions) {
    const GridIndex n = step(idx, a);
    if (grid.in_bounds(n)) out.emplace_back(n, a);
  }
  return out;
}

GridIndex LocalWindow::clamp(GridIndex global) const noexcept {
  return {std::clamp(global.i, origin.i, origin.i + size - 1), std::clamp(global.j, origin.j, origin.j + size - 1)};
}

Occupancy LocalWindow::at_global(GridIndex global) const {
  if (!contains(global)) throw Error(Errc::OutOfBounds, "cell outside local window");
  const auto li = static_cast<std::size_t>(global.i - origin.i);
  const auto lj = static_cast<std::size_t>(global.j - origin.j);
  return view[lj * static_cast<std::size_t>(size) + li];
}

LocalWindow local_window(const OccupancyGrid& grid, GridIndex center, int size) {
  if (size < 3) throw Error(Errc::InvalidArgument, "local window size must be at least 3");
  if (size > grid.width() || size > grid.height()) {
    throw Error(Errc::WindowTooLarge, "window " + std::to_string(size) + " exceeds grid " +
                                          std::to_string(grid.width()) + "x" + std::to_string(grid.height()));
  }
  if (!grid.in_bounds(center)) throw Error(Errc::OutOfBounds, "window center outside grid");

  LocalWindow w;
  w.size = size;
  w.origin = {std::clamp(center.i - size / 2, 0, grid.width() - size),
              std::clamp(center.j - size / 2, 0, grid.height() - size)};
  w.view.reserve(static_cast<std::size_t>(size) * static_cast<std::size_t>(size));
  for (int lj = 0; lj < size; ++lj) {
    for (int li = 0; li < size; ++li) {
      w.view.push_back(grid.at({w.origin.i + li, w.origin.j + lj}));
    }
  }
  return w;
}

OccupancyGrid parse_map(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;

  auto fail = [&](const std::string& what) -> Error {
    return Error(Errc::InvalidMap, "line " + std::to_string(line_no) + ": " + what);
  };

  int width = 0;
  int height = 0;
  double resolution = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream header(line);
    if (!(header >> width >> height >> resolution) || width <= 0 || height <= 0 || !(resolution > 0.0)) {
      throw fail("expected header \"width height resolution\"");
    }
    break;
  }
  if (width == 0) throw fail("missing header");

  OccupancyGrid grid(width, height, resolution);
  int row = 0;
  while (row < height && std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (static_cast<int>(line.size()) != width) {
      throw fail("expected " + std::to_string(width) + " cells, got " + std::to_string(line.size()));
    }
    const int j = height - 1 - row;
    for (int i = 0; i < width; ++i) {
      switch (line[static_cast<std::size_t>(i)]) {
        case '.': break;
        case '#': grid.set({i, j}, Occupancy::Obstacle); break;
        default: throw fail(std::string("invalid cell character '") + line[static_cast<std::size_t>(i)] + "'");
      }
    }
    ++row;
  }
  if (row != height) throw fail("expected " + std::to_string(height) + " rows, got " + std::to_string(row));
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) throw fail("trailing content after map rows");
  }
  return grid;
}

OccupancyGrid load_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open map file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_map(buf.str());
}

std::string format_map(const OccupancyGrid& grid) {
  std::ostringstream out;
  out << grid.width() << ' ' << grid.height() << ' ' << grid.resolution() << '\n';
  for (int j = grid.height() - 1; j >= 0; --j) {
    for (int i = 0; i < grid.width(); ++i) {
      out << (grid.at({i, j}) == Occupancy::Obstacle ? '#' : '.');
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace awarenav
