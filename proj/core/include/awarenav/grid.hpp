#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace awarenav {

/// Cell coordinates: i is the column (East), j the row (North).
struct GridIndex {
  int i = 0;
  int j = 0;

  friend constexpr bool operator==(const GridIndex&, const GridIndex&) = default;
  friend constexpr auto operator<=>(const GridIndex&, const GridIndex&) = default;
};

/// Point in world meters.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

double distance(Vec2 a, Vec2 b) noexcept;

enum class Occupancy : std::uint8_t { Free = 0, Obstacle = 1, Human = 2 };

/// The eight moves of the global planner, in the fixed order used for
/// argmax tie-breaking.
enum class GlobalAction : std::uint8_t { E, EN, N, NW, W, WS, S, SE };

inline constexpr std::array<GlobalAction, 8> kGlobalActions = {
    GlobalAction::E, GlobalAction::EN, GlobalAction::N, GlobalAction::NW,
    GlobalAction::W, GlobalAction::WS, GlobalAction::S, GlobalAction::SE};

constexpr GridIndex offset(GlobalAction a) noexcept {
  constexpr std::array<GridIndex, 8> table = {{{1, 0}, {1, 1}, {0, 1}, {-1, 1},
                                               {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};
  return table[static_cast<std::size_t>(a)];
}

constexpr GridIndex step(GridIndex from, GlobalAction a) noexcept {
  const GridIndex d = offset(a);
  return {from.i + d.i, from.j + d.j};
}

std::string_view to_string(GlobalAction a) noexcept;

/// Chebyshev (8-connected hop) distance.
constexpr int hop_distance(GridIndex a, GridIndex b) noexcept {
  const int di = a.i > b.i ? a.i - b.i : b.i - a.i;
  const int dj = a.j > b.j ? a.j - b.j : b.j - a.j;
  return di > dj ? di : dj;
}

constexpr bool is_neighbor8(GridIndex a, GridIndex b) noexcept { return hop_distance(a, b) == 1; }

/// Dense row-major occupancy field. Cells follow the half-open convention:
/// cell (i, j) covers [i*res, (i+1)*res) x [j*res, (j+1)*res).
class OccupancyGrid {
 public:
  static constexpr double kDefaultResolution = 0.75;

  OccupancyGrid(int width, int height, double resolution = kDefaultResolution);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  double resolution() const noexcept { return resolution_; }
  std::size_t cell_count() const noexcept { return cells_.size(); }

  bool in_bounds(GridIndex idx) const noexcept {
    return idx.i >= 0 && idx.j >= 0 && idx.i < width_ && idx.j < height_;
  }

  std::size_t linear(GridIndex idx) const noexcept {
    return static_cast<std::size_t>(idx.j) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(idx.i);
  }
  GridIndex unlinear(std::size_t k) const noexcept {
    return {static_cast<int>(k % static_cast<std::size_t>(width_)), static_cast<int>(k / static_cast<std::size_t>(width_))};
  }

  /// Throws OutOfBounds for cells outside the grid.
  Occupancy at(GridIndex idx) const;
  void set(GridIndex idx, Occupancy value);

  /// In bounds and Free. Human cells count as free here; callers that must
  /// respect pedestrians use is_clear().
  bool is_free(GridIndex idx) const noexcept {
    return in_bounds(idx) && cells_[linear(idx)] != Occupancy::Obstacle;
  }
  bool is_clear(GridIndex idx) const noexcept {
    return in_bounds(idx) && cells_[linear(idx)] == Occupancy::Free;
  }

  std::span<const Occupancy> cells() const noexcept { return cells_; }

  std::size_t free_count() const noexcept;

  /// Copy with the given cells marked Human (out-of-bounds and obstacle cells
  /// are skipped). The receiver is left untouched.
  OccupancyGrid with_humans(std::span<const GridIndex> humans) const;

  /// Copy in which every Human cell is promoted to Obstacle.
  OccupancyGrid humans_as_obstacles() const;

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  int width_;
  int height_;
  double resolution_;
  std::vector<Occupancy> cells_;
};

/// floor(pos / resolution); throws OutOfBounds outside the grid extent.
GridIndex world_to_grid(Vec2 pos, const OccupancyGrid& grid);

/// Cell center in meters.
Vec2 grid_to_world(GridIndex idx, double resolution) noexcept;
inline Vec2 grid_to_world(GridIndex idx, const OccupancyGrid& grid) noexcept {
  return grid_to_world(idx, grid.resolution());
}

double cell_distance(GridIndex a, GridIndex b, double resolution) noexcept;

/// In-bounds 8-neighbors labeled with the move that reaches them, in
/// GlobalAction order. Occupancy is not consulted.
std::vector<std::pair<GridIndex, GlobalAction>> neighbors8(GridIndex idx, const OccupancyGrid& grid);

struct LocalWindow {
  GridIndex origin;  // lower-left corner in global coordinates
  int size = 10;
  std::vector<Occupancy> view;  // size*size, row-major

  bool contains(GridIndex global) const noexcept {
    return global.i >= origin.i && global.j >= origin.j && global.i < origin.i + size &&
           global.j < origin.j + size;
  }
  /// Nearest in-window cell.
  GridIndex clamp(GridIndex global) const noexcept;
  Occupancy at_global(GridIndex global) const;
};

/// Window of size x size cells centered on `center`, shifted toward the
/// interior near borders so it always fits. Throws WindowTooLarge when the
/// grid is smaller than the window, InvalidArgument when size < 3.
LocalWindow local_window(const OccupancyGrid& grid, GridIndex center, int size);

/// Text map: "width height resolution" then `height` rows of `width`
/// characters, '.' Free and '#' Obstacle. The first row is the top
/// (j = height - 1). Throws InvalidMap with a line number on bad input.
OccupancyGrid parse_map(std::string_view text);
OccupancyGrid load_map(const std::string& path);
std::string format_map(const OccupancyGrid& grid);

}  // namespace awarenav
