#include "advgo/cycles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "advgo/selfplay.hpp"

namespace advgo {

namespace {

std::vector<Vertex> to_vertices(const std::vector<int>& idx, int size) {
  std::vector<Vertex> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back({i / size, i % size});
  std::sort(out.begin(), out.end());
  return out;
}

// Non-group vertices that cannot reach the edge without crossing the group.
std::vector<int> enclosed_by(const BoardState& s, const std::vector<int>& group) {
  const int n = s.size(), area = s.area();
  std::vector<std::uint8_t> wall(area, 0), seen(area, 0);
  for (int i : group) wall[i] = 1;
  std::vector<int> stack;
  for (int i = 0; i < area; ++i) {
    const int r = i / n, c = i % n;
    const bool edge = r == 0 || c == 0 || r == n - 1 || c == n - 1;
    if (edge && !wall[i]) {
      seen[i] = 1;
      stack.push_back(i);
    }
  }
  int nb[4];
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    const int k = s.neighbors(v, nb);
    for (int j = 0; j < k; ++j) {
      if (!wall[nb[j]] && !seen[nb[j]]) {
        seen[nb[j]] = 1;
        stack.push_back(nb[j]);
      }
    }
  }
  std::vector<int> inside;
  for (int i = 0; i < area; ++i) {
    if (!wall[i] && !seen[i]) inside.push_back(i);
  }
  return inside;
}

// Same-colour chains among the flagged vertices, each sorted.
std::vector<std::vector<int>> chains_within(const BoardState& s, const std::vector<std::uint8_t>& flagged) {
  std::vector<std::vector<int>> out;
  std::vector<std::uint8_t> seen(s.area(), 0);
  int nb[4];
  for (int i = 0; i < s.area(); ++i) {
    if (!flagged[i] || seen[i]) continue;
    std::vector<int> chain{i}, stack{i};
    seen[i] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      const int k = s.neighbors(v, nb);
      for (int j = 0; j < k; ++j) {
        if (flagged[nb[j]] && !seen[nb[j]] && s.at_index(nb[j]) == s.at_index(i)) {
          seen[nb[j]] = 1;
          chain.push_back(nb[j]);
          stack.push_back(nb[j]);
        }
      }
    }
    std::sort(chain.begin(), chain.end());
    out.push_back(std::move(chain));
  }
  return out;
}

bool contains(const std::string& hay, const std::string& needle) {
  std::string h = hay;
  std::transform(h.begin(), h.end(), h.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return h.find(needle) != std::string::npos;
}

}  // namespace

void validate_victim(Color victim) {
  if (victim == Color::empty) throw ConfigError("victim color must be black or white");
}

std::optional<Color> victim_color_from_names(const SgfGame& game) {
  const bool b = game.black && contains(*game.black, "adversary");
  const bool w = game.white && contains(*game.white, "adversary");
  if (b == w) return std::nullopt;
  return b ? Color::white : Color::black;
}

std::optional<CycleEvent> detect_cycle_capture(const SgfGame& game, Color victim, const CycleConfig& config,
                                               const std::string& game_ref) {
  validate_victim(victim);
  if (game.size < kMinBoardSize || game.size > kMaxBoardSize) {
    throw ReplayError("board size " + std::to_string(game.size) + " cannot be replayed");
  }
  const Color adversary = opponent(victim);
  BoardState s(game.size, game.komi.value_or(kDefaultKomi));
  std::optional<CycleEvent> best;
  for (std::size_t i = 0; i < game.moves.size(); ++i) {
    const SgfMove& m = game.moves[i];
    if (s.game_over()) throw ReplayError("move " + std::to_string(i) + " after the game ended");
    const BoardState before = m.color == s.to_move() ? s : s.with_to_move(m.color);
    BoardState after = before;
    try {
      after = apply_move(before, m.move);
    } catch (const IllegalMoveError& e) {
      throw ReplayError("illegal move " + std::to_string(i) + " (" + move_to_gtp(m.move, game.size) +
                        "): " + move_error_name(e.reason()));
    }
    if (m.color == adversary && !m.move.is_pass()) {
      std::vector<std::uint8_t> captured(before.area(), 0);
      bool any = false;
      for (int v = 0; v < before.area(); ++v) {
        if (before.at_index(v) == victim && after.at_index(v) == Color::empty) {
          captured[v] = 1;
          any = true;
        }
      }
      if (any) {
        for (const auto& chain : chains_within(before, captured)) {
          if (static_cast<int>(chain.size()) < config.min_group_size) continue;
          if (best && best->captured_group.size() >= chain.size()) continue;
          const std::vector<int> inside = enclosed_by(before, chain);
          std::vector<int> in_adv, in_vic;
          for (int v : inside) {
            if (before.at_index(v) == adversary) in_adv.push_back(v);
            if (before.at_index(v) == victim) in_vic.push_back(v);
          }
          if (static_cast<int>(in_adv.size()) < config.min_interior_adversary) continue;
          std::vector<std::uint8_t> in_group(before.area(), 0);
          for (int v : chain) in_group[v] = 1;
          std::vector<int> adv, vic_other;
          for (int v = 0; v < before.area(); ++v) {
            if (before.at_index(v) == adversary) adv.push_back(v);
            if (before.at_index(v) == victim && !in_group[v]) vic_other.push_back(v);
          }
          CycleEvent e;
          e.game = game_ref;
          e.board_size = game.size;
          e.capture_move_index = static_cast<int>(i);
          e.victim = victim;
          e.captured_group = to_vertices(chain, game.size);
          e.interior_region = to_vertices(inside, game.size);
          e.interior_adversary = to_vertices(in_adv, game.size);
          e.interior_victim = to_vertices(in_vic, game.size);
          e.adversary_stones = to_vertices(adv, game.size);
          e.victim_other_stones = to_vertices(vic_other, game.size);
          best = std::move(e);
        }
      }
    }
    s = std::move(after);
  }
  return best;
}

// ---- symmetry ------------------------------------------------------------

Vertex transform_vertex(Vertex v, int size, int element) {
  const int k = element % 4;
  for (int i = 0; i < k; ++i) v = {v.col, size - 1 - v.row};
  if (element >= 4) v = {v.col, v.row};
  return v;
}

int compose_symmetry(int first, int second) {
  // two vertices in general position identify an element
  constexpr int n = 5;
  const Vertex p{0, 1}, q{1, 3};
  const Vertex tp = transform_vertex(transform_vertex(p, n, first), n, second);
  const Vertex tq = transform_vertex(transform_vertex(q, n, first), n, second);
  for (int e = 0; e < kSymmetries; ++e) {
    if (transform_vertex(p, n, e) == tp && transform_vertex(q, n, e) == tq) return e;
  }
  throw std::logic_error("D4 composition not closed");
}

int inverse_symmetry(int element) {
  for (int e = 0; e < kSymmetries; ++e) {
    if (compose_symmetry(element, e) == 0) return e;
  }
  throw std::logic_error("D4 element without inverse");
}

CycleEvent transform_event(const CycleEvent& event, int element) {
  CycleEvent out = event;
  auto map = [&](std::vector<Vertex>& vs) {
    for (auto& v : vs) v = transform_vertex(v, event.board_size, element);
    std::sort(vs.begin(), vs.end());
  };
  map(out.captured_group);
  map(out.interior_region);
  map(out.interior_adversary);
  map(out.interior_victim);
  map(out.adversary_stones);
  map(out.victim_other_stones);
  out.symmetry = compose_symmetry(event.symmetry, element);
  return out;
}

SgfGame transform_game(const SgfGame& game, int element) {
  SgfGame out = game;
  for (auto& m : out.moves) {
    if (!m.move.is_pass()) m.move.vertex = transform_vertex(m.move.vertex, game.size, element);
  }
  return out;
}

bool in_canonical_region(const std::vector<Vertex>& group, int size) {
  if (group.empty()) return true;
  // compare sums against count * center in integers: 2 * sum <= (size - 1) * count
  long r = 0, c = 0;
  for (const auto& v : group) {
    r += v.row;
    c += v.col;
  }
  const long bound = static_cast<long>(size - 1) * static_cast<long>(group.size());
  return 2 * r <= bound && 2 * c <= bound && r <= c;
}

int canonical_symmetry(const std::vector<Vertex>& group, int size) {
  for (int e = 0; e < kSymmetries; ++e) {
    std::vector<Vertex> t;
    t.reserve(group.size());
    for (const auto& v : group) t.push_back(transform_vertex(v, size, e));
    if (in_canonical_region(t, size)) return e;
  }
  throw std::logic_error("no D4 element reaches the canonical region");
}

CycleEvent normalize_symmetry(const CycleEvent& event) {
  return transform_event(event, canonical_symmetry(event.captured_group, event.board_size));
}

// ---- heatmaps ------------------------------------------------------------

std::string heat_category_name(HeatCategory c) {
  switch (c) {
    case HeatCategory::cyclic: return "cyclic";
    case HeatCategory::adversary: return "adversary";
    case HeatCategory::victim_other: return "victim_other";
    case HeatCategory::interior_adversary: return "interior_adversary";
    case HeatCategory::interior_victim: return "interior_victim";
  }
  return "?";
}

Heatmap Heatmap::normalized() const {
  Heatmap out = *this;
  if (events == 0) return out;
  for (auto& g : out.grids) {
    for (auto& v : g) v /= events;
  }
  return out;
}

Heatmap accumulate_heatmaps(const std::vector<CycleEvent>& events, int board_size) {
  Heatmap h;
  h.board_size = board_size > 0 ? board_size : (events.empty() ? 0 : events.front().board_size);
  if (h.board_size < kMinBoardSize || h.board_size > kMaxBoardSize) throw MixedSizes("heatmap needs a board size");
  for (auto& g : h.grids) g.assign(static_cast<std::size_t>(h.board_size * h.board_size), 0.0);
  for (const auto& e : events) {
    if (e.board_size != h.board_size) {
      throw MixedSizes("events of size " + std::to_string(e.board_size) + " and " + std::to_string(h.board_size));
    }
    const std::vector<Vertex>* sets[5] = {&e.captured_group, &e.adversary_stones, &e.victim_other_stones,
                                          &e.interior_adversary, &e.interior_victim};
    for (int c = 0; c < 5; ++c) {
      for (const auto& v : *sets[c]) h.grids[c][v.row * h.board_size + v.col] += 1;
    }
    ++h.events;
  }
  return h;
}

Heatmap heatmap_difference(const Heatmap& a, const Heatmap& b) {
  if (a.board_size != b.board_size) throw MixedSizes("heatmaps of different sizes");
  Heatmap out = a;
  for (int c = 0; c < 5; ++c) {
    for (std::size_t i = 0; i < out.grids[c].size(); ++i) out.grids[c][i] -= b.grids[c][i];
  }
  out.events = 0;
  return out;
}

namespace {

std::string cell(double v) {
  char buf[64];
  if (v == std::floor(v) && std::abs(v) < 1e15) std::snprintf(buf, sizeof buf, "%.0f", v);
  else std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path);
}

}  // namespace

void write_heatmap_csv(std::ostream& out, const Heatmap& map, HeatCategory category) {
  static const char* kCols = "ABCDEFGHJKLMNOPQRST";
  const int n = map.board_size;
  for (int c = 0; c < n; ++c) out << (c ? "," : "") << kCols[c];
  out << '\n';
  const auto& g = map.grid(category);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) out << (c ? "," : "") << cell(g[r * n + c]);
    out << '\n';
  }
}

std::string heatmap_svg(const Heatmap& map, const std::string& title) {
  const int n = map.board_size, px = 16, pad = 10, panel = n * px;
  const int width = 5 * panel + 6 * pad, height = panel + 2 * pad + 30;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  s << "<text x=\"" << pad << "\" y=\"14\" font-family=\"sans-serif\" font-size=\"12\">" << title << " ("
    << map.events << " events)</text>\n";
  for (int k = 0; k < 5; ++k) {
    const auto& g = map.grids[k];
    double lo = 0, hi = 0;
    for (double v : g) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const bool signed_map = lo < 0;
    const double scale = std::max(std::abs(lo), std::abs(hi));
    const int x0 = pad + k * (panel + pad), y0 = 30;
    s << "<text x=\"" << x0 << "\" y=\"26\" font-family=\"sans-serif\" font-size=\"10\">"
      << heat_category_name(kHeatCategories[k]) << "</text>\n";
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        const double t = scale > 0 ? g[r * n + c] / scale : 0.0;
        // darker is more frequent; signed maps put zero at mid gray
        const int level =
            signed_map ? static_cast<int>(std::lround(128 - 127 * t)) : static_cast<int>(std::lround(255 * (1 - t)));
        s << "<rect x=\"" << x0 + c * px << "\" y=\"" << y0 + r * px << "\" width=\"" << px << "\" height=\"" << px
          << "\" fill=\"rgb(" << level << ',' << level << ',' << level << ")\" stroke=\"#999\" stroke-width=\"0.5\"/>\n";
      }
    }
  }
  s << "</svg>\n";
  return s.str();
}

void emit_heatmap(const Heatmap& map, const std::string& dir, const std::string& stem) {
  const Heatmap norm = map.normalized();
  for (HeatCategory c : kHeatCategories) {
    std::ostringstream raw, nrm;
    write_heatmap_csv(raw, map, c);
    write_heatmap_csv(nrm, norm, c);
    const std::string base = dir + "/" + stem + "." + heat_category_name(c);
    write_file(base + ".csv", raw.str());
    write_file(base + ".normalized.csv", nrm.str());
  }
  write_file(dir + "/" + stem + ".svg", heatmap_svg(map, stem));
}

void emit_heatmap_difference(const Heatmap& a, const Heatmap& b, const std::string& dir, const std::string& stem) {
  const Heatmap raw = heatmap_difference(a, b);
  const Heatmap nrm = heatmap_difference(a.normalized(), b.normalized());
  for (HeatCategory c : kHeatCategories) {
    std::ostringstream r, n;
    write_heatmap_csv(r, raw, c);
    write_heatmap_csv(n, nrm, c);
    const std::string base = dir + "/" + stem + "." + heat_category_name(c);
    write_file(base + ".csv", r.str());
    write_file(base + ".normalized.csv", n.str());
  }
  write_file(dir + "/" + stem + ".svg", heatmap_svg(nrm, stem + " (normalized difference)"));
}

}  // namespace advgo
