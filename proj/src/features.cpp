#include "advgo/features.hpp"

#include <algorithm>

namespace advgo {

VertexMask superko_illegal_mask(const BoardState& state) {
  VertexMask mask(state.area(), 0);
  if (state.game_over()) return mask;
  for (int i = 0; i < state.area(); ++i) {
    if (state.at_index(i) != Color::empty) continue;
    mask[i] = probe_move(state, Move::from_index(i, state.size())) == MoveError::superko;
  }
  return mask;
}

EncodedPosition encode(const BoardState& state, int padded_size) {
  const int n = state.size();
  const int p = std::max(n, padded_size);
  EncodedPosition out;
  SpatialPlanes& sp = out.spatial;
  sp.height = p;
  sp.width = p;
  sp.planes = kNumSpatialPlanes;
  sp.data.assign(static_cast<std::size_t>(p) * p * kNumSpatialPlanes, 0.0f);
  auto set = [&](int plane, int idx) {
    const int r = idx / n, c = idx % n;
    sp.data[(r * p + c) * kNumSpatialPlanes + plane] = 1.0f;
  };

  const Color me = state.to_move();
  std::vector<int> liberties(state.area(), 0);
  std::vector<std::uint8_t> seen(state.area(), 0), lib_seen(state.area(), 0);
  for (int i = 0; i < state.area(); ++i) {
    set(kPlaneOnBoard, i);
    const Color c = state.at_index(i);
    if (c == Color::empty) continue;
    set(c == me ? kPlaneOwnStones : kPlaneOpponentStones, i);
    if (seen[i]) continue;
    std::vector<int> chain, stack{i}, libs;
    seen[i] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      chain.push_back(v);
      int nb[4];
      const int k = state.neighbors(v, nb);
      for (int j = 0; j < k; ++j) {
        const int u = nb[j];
        if (state.at_index(u) == Color::empty) {
          if (!lib_seen[u]) { lib_seen[u] = 1; libs.push_back(u); }
        } else if (state.at_index(u) == c && !seen[u]) {
          seen[u] = 1;
          stack.push_back(u);
        }
      }
    }
    for (int u : libs) lib_seen[u] = 0;
    for (int v : chain) liberties[v] = static_cast<int>(libs.size());
  }
  for (int i = 0; i < state.area(); ++i) {
    if (state.at_index(i) == Color::empty) continue;
    const int l = liberties[i];
    set(l <= 1 ? kPlaneOneLiberty : (l == 2 ? kPlaneTwoLiberties : kPlaneThreePlusLiberties), i);
  }
  const int last = state.last_move_index();
  if (last >= 0 && last < state.area()) set(kPlaneLastMove, last);
  const VertexMask ko = superko_illegal_mask(state);
  for (int i = 0; i < state.area(); ++i) {
    if (ko[i]) set(kPlaneSuperkoIllegal, i);
  }

  out.globals.values.assign(kNumGlobalFeatures, 0.0f);
  const double komi = me == Color::white ? state.komi() : -state.komi();
  out.globals.values[kGlobalKomi] = static_cast<float>(std::clamp(komi / 15.0, -1.0, 1.0));
  out.globals.values[kGlobalLastMovePass] = last == state.area() ? 1.0f : 0.0f;
  out.globals.values[kGlobalPreviousMovePass] =
      state.previous_move_index() == state.area() ? 1.0f : 0.0f;
  out.globals.values[kGlobalBlackToMove] = me == Color::black ? 1.0f : 0.0f;
  return out;
}

}  // namespace advgo
