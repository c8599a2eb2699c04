#pragma once

// Cyclic-group capture detection, D4 normalization and heatmaps.

#include <array>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "advgo/sgf.hpp"

namespace advgo {

class ReplayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class MixedSizes : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CycleConfig {
  int min_group_size = 6;
  int min_interior_adversary = 1;
};

/// A captured ring of victim stones, described on the position one ply
/// before the capturing move. Vertex lists are sorted.
struct CycleEvent {
  std::string game;
  int board_size = 0;
  /// Index into the move list of the capturing move.
  int capture_move_index = -1;
  Color victim = Color::white;
  std::vector<Vertex> captured_group;
  /// Vertices cut off from the edge by the group.
  std::vector<Vertex> interior_region;
  std::vector<Vertex> interior_adversary;
  std::vector<Vertex> interior_victim;
  std::vector<Vertex> adversary_stones;
  /// Victim stones outside the captured group.
  std::vector<Vertex> victim_other_stones;
  /// D4 element applied by normalize_symmetry (0 = identity).
  int symmetry = 0;

  bool operator==(const CycleEvent&) const = default;
};

void validate_victim(Color victim);

/// Largest qualifying capture in the game, earliest on ties. Throws ReplayError.
std::optional<CycleEvent> detect_cycle_capture(const SgfGame& game, Color victim, const CycleConfig& config = {},
                                               const std::string& game_ref = "");

/// The victim is the side whose player name does not mention "adversary",
/// when exactly one side's does.
std::optional<Color> victim_color_from_names(const SgfGame& game);

// D4 elements: index = k + 4 * flip, applying a clockwise rotation by k * 90
// degrees and then, if flip, a reflection across the main diagonal.
inline constexpr int kSymmetries = 8;
Vertex transform_vertex(Vertex v, int size, int element);
int inverse_symmetry(int element);
/// Composition: apply `first`, then `second`.
int compose_symmetry(int first, int second);

/// Element applied to every vertex set; `symmetry` becomes the composition.
CycleEvent transform_event(const CycleEvent& event, int element);
SgfGame transform_game(const SgfGame& game, int element);

/// Centroid of the group lies in the closed top-left quadrant and on or above the main diagonal.
bool in_canonical_region(const std::vector<Vertex>& group, int size);
/// Lowest-index element placing the group in the canonical region.
int canonical_symmetry(const std::vector<Vertex>& group, int size);
CycleEvent normalize_symmetry(const CycleEvent& event);

enum class HeatCategory { cyclic, adversary, victim_other, interior_adversary, interior_victim };
inline constexpr std::array<HeatCategory, 5> kHeatCategories{HeatCategory::cyclic, HeatCategory::adversary,
                                                             HeatCategory::victim_other,
                                                             HeatCategory::interior_adversary,
                                                             HeatCategory::interior_victim};
std::string heat_category_name(HeatCategory c);

struct Heatmap {
  int board_size = 0;
  int events = 0;
  /// Per category, row-major counts.
  std::array<std::vector<double>, 5> grids;

  const std::vector<double>& grid(HeatCategory c) const { return grids[static_cast<int>(c)]; }
  /// Counts divided by the event count (zero grids when empty).
  Heatmap normalized() const;
};

/// Throws MixedSizes. With no events the board size must be supplied.
Heatmap accumulate_heatmaps(const std::vector<CycleEvent>& events, int board_size = 0);
/// Cellwise a - b. Throws MixedSizes.
Heatmap heatmap_difference(const Heatmap& a, const Heatmap& b);

/// Header of column letters, then one row of values per board row.
void write_heatmap_csv(std::ostream& out, const Heatmap& map, HeatCategory category);
/// Grayscale panels, one per category; signed maps use a diverging scale.
std::string heatmap_svg(const Heatmap& map, const std::string& title);

/// Writes <stem>.<category>.csv, <stem>.<category>.normalized.csv and <stem>.svg into dir.
void emit_heatmap(const Heatmap& map, const std::string& dir, const std::string& stem);
/// Raw and normalized differences a - b.
void emit_heatmap_difference(const Heatmap& a, const Heatmap& b, const std::string& dir, const std::string& stem);

}  // namespace advgo
