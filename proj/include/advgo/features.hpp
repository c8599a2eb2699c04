#pragma once

#include <array>
#include <vector>

#include "advgo/rules.hpp"

namespace advgo {

/// Spatial plane order produced by encode().
enum Plane : int {
  kPlaneOnBoard = 0,
  kPlaneOwnStones,
  kPlaneOpponentStones,
  kPlaneOneLiberty,
  kPlaneTwoLiberties,
  kPlaneThreePlusLiberties,
  kPlaneLastMove,
  kPlaneSuperkoIllegal,
  kNumSpatialPlanes
};

/// Global feature order produced by encode().
enum GlobalFeature : int {
  kGlobalKomi = 0,  // komi / 15 from the mover's perspective
  kGlobalLastMovePass,
  kGlobalPreviousMovePass,
  kGlobalBlackToMove,
  kNumGlobalFeatures
};

struct SpatialPlanes {
  int height = 0;
  int width = 0;
  int planes = kNumSpatialPlanes;
  /// Vertex-major: data[(row * width + col) * planes + plane].
  std::vector<float> data;

  float at(int plane, int row, int col) const { return data[(row * width + col) * planes + plane]; }
};

struct GlobalFeatures {
  std::vector<float> values;
};

struct EncodedPosition {
  SpatialPlanes spatial;
  GlobalFeatures globals;
};

/// Mover-perspective encoding. `padded_size` > board size zero-pads the
/// spatial planes (the on-board mask marks real vertices).
EncodedPosition encode(const BoardState& state, int padded_size = 0);

/// Vertices whose play would recreate an earlier grid.
VertexMask superko_illegal_mask(const BoardState& state);

}  // namespace advgo
