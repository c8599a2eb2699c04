#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "advgo/cycles.hpp"
#include "advgo/random.hpp"

namespace oracle {

using advgo::CycleEvent;
using advgo::Rng;
using advgo::uniform_index;
using advgo::Vertex;

// Independent D4 oracle: integer coordinates relative to the doubled board center.
struct Rel {
  long r, c;
};
inline Rel apply_oracle(Rel p, int element) {
  for (int k = 0; k < element % 4; ++k) p = {p.c, -p.r};  // clockwise quarter turn
  if (element >= 4) p = {p.c, p.r};
  return p;
}

inline int oracle_symmetry(const std::vector<Vertex>& group, int size) {
  for (int e = 0; e < 8; ++e) {
    long sr = 0, sc = 0;
    for (const auto& v : group) {
      const Rel t = apply_oracle({2L * v.row - (size - 1), 2L * v.col - (size - 1)}, e);
      sr += t.r;
      sc += t.c;
    }
    if (sr <= 0 && sc <= 0 && sr <= sc) return e;
  }
  return -1;
}

inline CycleEvent random_event(Rng& rng) {
  CycleEvent e;
  e.board_size = 5 + static_cast<int>(uniform_index(rng, 15));
  const int n = e.board_size;
  std::set<Vertex> used;
  auto draw = [&](std::vector<Vertex>& out, int count) {
    for (int i = 0; i < count; ++i) {
      const Vertex v{static_cast<int>(uniform_index(rng, n)), static_cast<int>(uniform_index(rng, n))};
      if (used.insert(v).second) out.push_back(v);
    }
    std::sort(out.begin(), out.end());
  };
  // a random walk makes the group a connected chain
  Vertex cur{static_cast<int>(uniform_index(rng, n)), static_cast<int>(uniform_index(rng, n))};
  const int len = 6 + static_cast<int>(uniform_index(rng, 20));
  for (int i = 0; i < len; ++i) {
    used.insert(cur);
    const int d = static_cast<int>(uniform_index(rng, 4));
    const Vertex next{cur.row + (d == 0) - (d == 1), cur.col + (d == 2) - (d == 3)};
    if (next.row >= 0 && next.col >= 0 && next.row < n && next.col < n) cur = next;
  }
  e.captured_group.assign(used.begin(), used.end());
  draw(e.adversary_stones, 8);
  draw(e.victim_other_stones, 5);
  draw(e.interior_region, 3);
  if (!e.adversary_stones.empty()) e.interior_adversary = {e.adversary_stones.front()};
  return e;
}

}  // namespace oracle
