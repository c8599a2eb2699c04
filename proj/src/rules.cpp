#include "advgo/rules.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <sstream>

#include "advgo/random.hpp"

namespace advgo {

namespace {

// Fixed seed so hashes agree across runs and platforms.
constexpr std::uint64_t kZobristSeed = 0x5A0B12157D1CE5EDULL;

struct ZobristTable {
  // [size][vertex][color-1]
  std::array<std::array<std::array<std::uint64_t, 2>, kMaxBoardSize * kMaxBoardSize>,
             kMaxBoardSize + 1>
      stones{};
  std::array<std::uint64_t, kMaxBoardSize + 1> size_keys{};

  ZobristTable() {
    std::uint64_t state = kZobristSeed;
    for (int s = 0; s <= kMaxBoardSize; ++s) {
      size_keys[s] = splitmix64(state);
      for (int v = 0; v < kMaxBoardSize * kMaxBoardSize; ++v) {
        stones[s][v][0] = splitmix64(state);
        stones[s][v][1] = splitmix64(state);
      }
    }
  }
};

const ZobristTable& zobrist() {
  static const ZobristTable table;
  return table;
}

void check_size(int size) {
  if (size < kMinBoardSize || size > kMaxBoardSize) {
    throw BoardSizeError("board size must be in [5, 19], got " + std::to_string(size));
  }
}

// Collects the chain containing `start` and reports whether it has a liberty.
// `mark` must be zero-initialised over the area and is left set on the chain.
struct ChainScan {
  std::vector<int> stones;
  int liberties = 0;
};

ChainScan scan_chain(const BoardState& s, const std::vector<Color>& grid, int start,
                     std::vector<std::uint8_t>& mark, std::vector<std::uint8_t>& lib_mark) {
  ChainScan out;
  const Color c = grid[start];
  std::vector<int> stack{start};
  mark[start] = 1;
  std::vector<int> libs;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    out.stones.push_back(v);
    int nb[4];
    const int k = s.neighbors(v, nb);
    for (int i = 0; i < k; ++i) {
      const int u = nb[i];
      if (grid[u] == Color::empty) {
        if (!lib_mark[u]) {
          lib_mark[u] = 1;
          libs.push_back(u);
        }
      } else if (grid[u] == c && !mark[u]) {
        mark[u] = 1;
        stack.push_back(u);
      }
    }
  }
  out.liberties = static_cast<int>(libs.size());
  for (int u : libs) lib_mark[u] = 0;
  return out;
}

}  // namespace

std::string color_name(Color c) {
  switch (c) {
    case Color::black: return "black";
    case Color::white: return "white";
    default: return "empty";
  }
}

std::string move_error_name(MoveError e) {
  switch (e) {
    case MoveError::none: return "none";
    case MoveError::off_board: return "off board";
    case MoveError::occupied: return "occupied vertex";
    case MoveError::suicide: return "suicide";
    case MoveError::superko: return "superko violation";
    case MoveError::game_over: return "game over";
  }
  return "unknown";
}

Move Move::from_index(int index, int board_size) {
  if (index == board_size * board_size) return pass();
  return play(index / board_size, index % board_size);
}

int Move::index(int board_size) const {
  return is_pass() ? board_size * board_size : vertex.row * board_size + vertex.col;
}

std::uint64_t zobrist_key(int size, int idx, Color c) {
  return zobrist().stones[size][idx][c == Color::black ? 0 : 1];
}

std::uint64_t zobrist_size_key(int size) { return zobrist().size_keys[size]; }

std::uint64_t grid_hash(int size, const std::vector<Color>& grid) {
  std::uint64_t h = zobrist_size_key(size);
  for (int i = 0; i < size * size; ++i) {
    if (grid[i] != Color::empty) h ^= zobrist_key(size, i, grid[i]);
  }
  return h;
}

std::uint64_t position_hash(const BoardState& state) { return grid_hash(state.size(), state.grid()); }

BoardState::BoardState(int size, double komi)
    : size_(size), komi_(komi), grid_(static_cast<std::size_t>(size) * size, Color::empty) {
  check_size(size);
  position_hashes_.push_back(grid_hash(size_, grid_));
}

BoardState BoardState::from_diagram(const std::vector<std::string>& rows, Color to_move, double komi) {
  const int size = static_cast<int>(rows.size());
  BoardState s(size, komi);
  for (int r = 0; r < size; ++r) {
    int c = 0;
    for (char ch : rows[r]) {
      if (std::isspace(static_cast<unsigned char>(ch))) continue;
      if (c >= size) throw BoardSizeError("diagram row too long: " + rows[r]);
      const int idx = r * size + c;
      if (ch == 'X' || ch == 'x' || ch == 'B') s.grid_[idx] = Color::black;
      else if (ch == 'O' || ch == 'o' || ch == 'W') s.grid_[idx] = Color::white;
      else if (ch != '.' && ch != '+') throw BoardSizeError(std::string("bad diagram char ") + ch);
      ++c;
    }
    if (c != size) throw BoardSizeError("diagram is not square");
  }
  std::vector<std::uint8_t> mark(s.area(), 0), lib(s.area(), 0);
  for (int i = 0; i < s.area(); ++i) {
    if (s.grid_[i] != Color::empty && !mark[i]) {
      if (scan_chain(s, s.grid_, i, mark, lib).liberties == 0) {
        throw BoardSizeError("diagram contains a chain without liberties");
      }
    }
  }
  s.to_move_ = to_move;
  s.position_hashes_ = {grid_hash(size, s.grid_)};
  return s;
}

bool BoardState::seen_position(std::uint64_t h) const {
  return std::find(position_hashes_.begin(), position_hashes_.end(), h) != position_hashes_.end();
}

int BoardState::neighbors(int idx, int out[4]) const {
  const int r = idx / size_;
  const int c = idx % size_;
  int k = 0;
  if (r > 0) out[k++] = idx - size_;
  if (c > 0) out[k++] = idx - 1;
  if (c + 1 < size_) out[k++] = idx + 1;
  if (r + 1 < size_) out[k++] = idx + size_;
  return k;
}

BoardState BoardState::with_komi(double komi) const {
  BoardState s = *this;
  s.komi_ = komi;
  return s;
}

BoardState BoardState::with_to_move(Color c) const {
  BoardState s = *this;
  s.to_move_ = c;
  return s;
}

std::string BoardState::to_string() const {
  std::ostringstream out;
  for (int r = 0; r < size_; ++r) {
    for (int c = 0; c < size_; ++c) {
      const Color x = at(r, c);
      out << (x == Color::black ? 'X' : x == Color::white ? 'O' : '.');
    }
    out << '\n';
  }
  return out.str();
}

MoveError probe_move(const BoardState& state, const Move& move, BoardState* successor,
                     std::uint64_t* successor_hash) {
  if (state.game_over()) return MoveError::game_over;
  const int size = state.size_;
  if (move.is_pass()) {
    if (successor) {
      *successor = state;
      successor->to_move_ = opponent(state.to_move_);
      successor->consecutive_passes_ = state.consecutive_passes_ + 1;
      successor->move_count_ = state.move_count_ + 1;
      successor->last_moves_[1] = state.last_moves_[0];
      successor->last_moves_[0] = state.area();
      successor->position_hashes_.push_back(state.hash());
    }
    if (successor_hash) *successor_hash = state.hash();
    return MoveError::none;
  }
  if (!state.on_board(move.vertex.row, move.vertex.col)) return MoveError::off_board;
  const int idx = move.vertex.row * size + move.vertex.col;
  if (state.grid_[idx] != Color::empty) return MoveError::occupied;

  const Color me = state.to_move_;
  const Color them = opponent(me);
  std::vector<Color> grid = state.grid_;
  grid[idx] = me;
  std::uint64_t h = state.hash() ^ zobrist_key(size, idx, me);

  std::vector<std::uint8_t> mark(state.area(), 0), lib(state.area(), 0);
  int nb[4];
  const int k = state.neighbors(idx, nb);
  bool captured_any = false;
  for (int i = 0; i < k; ++i) {
    const int u = nb[i];
    if (grid[u] != them || mark[u]) continue;
    ChainScan chain = scan_chain(state, grid, u, mark, lib);
    if (chain.liberties == 0) {
      captured_any = true;
      for (int v : chain.stones) {
        grid[v] = Color::empty;
        h ^= zobrist_key(size, v, them);
      }
    }
  }
  if (!captured_any) {
    std::fill(mark.begin(), mark.end(), 0);
    if (scan_chain(state, grid, idx, mark, lib).liberties == 0) return MoveError::suicide;
  }
  if (state.seen_position(h)) return MoveError::superko;

  if (successor_hash) *successor_hash = h;
  if (successor) {
    BoardState next = state;
    next.grid_ = std::move(grid);
    next.to_move_ = them;
    next.consecutive_passes_ = 0;
    next.move_count_ = state.move_count_ + 1;
    next.last_moves_[1] = state.last_moves_[0];
    next.last_moves_[0] = idx;
    next.position_hashes_.push_back(h);
    *successor = std::move(next);
  }
  return MoveError::none;
}

BoardState apply_move(const BoardState& state, const Move& move) {
  BoardState next(state.size(), state.komi());
  const MoveError err = probe_move(state, move, &next, nullptr);
  if (err != MoveError::none) {
    throw IllegalMoveError(err, "illegal move " + move_to_gtp(move, state.size()) + ": " +
                                    move_error_name(err));
  }
  return next;
}

std::vector<std::uint8_t> legal_move_mask(const BoardState& state) {
  if (state.game_over()) throw IllegalMoveError(MoveError::game_over, "game is over");
  std::vector<std::uint8_t> mask(state.area() + 1, 0);
  for (int i = 0; i < state.area(); ++i) {
    if (state.at_index(i) != Color::empty) continue;
    mask[i] = probe_move(state, Move::from_index(i, state.size())) == MoveError::none;
  }
  mask[state.area()] = 1;
  return mask;
}

std::vector<Move> legal_moves(const BoardState& state) {
  const auto mask = legal_move_mask(state);
  std::vector<Move> out;
  for (int i = 0; i <= state.area(); ++i) {
    if (mask[i]) out.push_back(Move::from_index(i, state.size()));
  }
  return out;
}

ScoreResult score_tromp_taylor(const BoardState& state) {
  ScoreResult res;
  const int n = state.area();
  std::vector<std::uint8_t> seen(n, 0);
  double black = 0, white = 0;
  int neutral = 0;
  for (int i = 0; i < n; ++i) {
    const Color c = state.at_index(i);
    if (c == Color::black) { black += 1; continue; }
    if (c == Color::white) { white += 1; continue; }
    if (seen[i]) continue;
    // Flood the empty region and record which colors it touches.
    bool reach_b = false, reach_w = false;
    int count = 0;
    std::vector<int> stack{i};
    seen[i] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      ++count;
      int nb[4];
      const int k = state.neighbors(v, nb);
      for (int j = 0; j < k; ++j) {
        const Color x = state.at_index(nb[j]);
        if (x == Color::black) reach_b = true;
        else if (x == Color::white) reach_w = true;
        else if (!seen[nb[j]]) {
          seen[nb[j]] = 1;
          stack.push_back(nb[j]);
        }
      }
    }
    if (reach_b && !reach_w) black += count;
    else if (reach_w && !reach_b) white += count;
    else neutral += count;
  }
  res.black_points = black;
  res.white_points = white + state.komi();
  res.neutral_points = neutral;
  res.winner = res.black_points > res.white_points ? Color::black : Color::white;
  res.margin = std::abs(res.black_points - res.white_points);
  return res;
}

VertexMask pass_alive_regions(const BoardState& state, Color color) {
  const int n = state.area();
  VertexMask out(n, 0);
  if (color == Color::empty) return out;

  // Chains of `color`.
  std::vector<int> chain_of(n, -1);
  std::vector<std::vector<int>> chains;
  for (int i = 0; i < n; ++i) {
    if (state.at_index(i) != color || chain_of[i] >= 0) continue;
    const int id = static_cast<int>(chains.size());
    chains.emplace_back();
    std::vector<int> stack{i};
    chain_of[i] = id;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      chains[id].push_back(v);
      int nb[4];
      const int k = state.neighbors(v, nb);
      for (int j = 0; j < k; ++j) {
        if (state.at_index(nb[j]) == color && chain_of[nb[j]] < 0) {
          chain_of[nb[j]] = id;
          stack.push_back(nb[j]);
        }
      }
    }
  }
  if (chains.empty()) return out;

  // Regions: maximal connected sets of vertices not occupied by `color`.
  struct Region {
    std::vector<int> points;
    std::set<int> border;  // bordering chain ids
    std::set<int> vital_to;
  };
  std::vector<int> region_of(n, -1);
  std::vector<Region> regions;
  for (int i = 0; i < n; ++i) {
    if (state.at_index(i) == color || region_of[i] >= 0) continue;
    const int id = static_cast<int>(regions.size());
    regions.emplace_back();
    std::vector<int> stack{i};
    region_of[i] = id;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      regions[id].points.push_back(v);
      int nb[4];
      const int k = state.neighbors(v, nb);
      for (int j = 0; j < k; ++j) {
        const int u = nb[j];
        if (state.at_index(u) == color) {
          regions[id].border.insert(chain_of[u]);
        } else if (region_of[u] < 0) {
          region_of[u] = id;
          stack.push_back(u);
        }
      }
    }
  }
  // A region is vital to a bordering chain when each of its empty points is a
  // liberty of that chain.
  for (auto& reg : regions) {
    bool has_empty = false;
    for (int v : reg.points) has_empty |= state.at_index(v) == Color::empty;
    if (!has_empty) continue;
    for (int cid : reg.border) {
      bool vital = true;
      for (int v : reg.points) {
        if (state.at_index(v) != Color::empty) continue;
        int nb[4];
        const int k = state.neighbors(v, nb);
        bool adjacent = false;
        for (int j = 0; j < k && !adjacent; ++j) adjacent = chain_of[nb[j]] == cid;
        if (!adjacent) { vital = false; break; }
      }
      if (vital) reg.vital_to.insert(cid);
    }
  }

  std::vector<std::uint8_t> chain_alive(chains.size(), 1);
  std::vector<std::uint8_t> region_healthy(regions.size(), 1);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t c = 0; c < chains.size(); ++c) {
      if (!chain_alive[c]) continue;
      int vital_count = 0;
      for (std::size_t r = 0; r < regions.size(); ++r) {
        if (region_healthy[r] && regions[r].vital_to.count(static_cast<int>(c))) ++vital_count;
      }
      if (vital_count < 2) {
        chain_alive[c] = 0;
        changed = true;
      }
    }
    for (std::size_t r = 0; r < regions.size(); ++r) {
      if (!region_healthy[r]) continue;
      for (int cid : regions[r].border) {
        if (!chain_alive[cid]) {
          region_healthy[r] = 0;
          changed = true;
          break;
        }
      }
    }
  }

  for (std::size_t c = 0; c < chains.size(); ++c) {
    if (!chain_alive[c]) continue;
    for (int v : chains[c]) out[v] = 1;
  }
  for (std::size_t r = 0; r < regions.size(); ++r) {
    if (!region_healthy[r]) continue;
    bool vital_to_alive = false;
    for (int cid : regions[r].vital_to) vital_to_alive |= chain_alive[cid] != 0;
    if (!vital_to_alive) continue;
    for (int v : regions[r].points) out[v] = 1;
  }
  return out;
}

std::vector<Vertex> mask_to_vertices(const VertexMask& mask, int size) {
  std::vector<Vertex> out;
  for (int i = 0; i < static_cast<int>(mask.size()); ++i) {
    if (mask[i]) out.push_back(Vertex{i / size, i % size});
  }
  return out;
}

std::string move_to_gtp(const Move& m, int size) {
  if (m.is_pass()) return "pass";
  static const char* kCols = "ABCDEFGHJKLMNOPQRST";
  std::string s(1, kCols[m.vertex.col]);
  s += std::to_string(size - m.vertex.row);
  return s;
}

std::optional<Move> move_from_gtp(const std::string& text, int size) {
  std::string t;
  for (char ch : text) t += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (t == "PASS") return Move::pass();
  if (t.size() < 2) return std::nullopt;
  static const std::string kCols = "ABCDEFGHJKLMNOPQRST";
  const auto col = kCols.find(t[0]);
  if (col == std::string::npos || static_cast<int>(col) >= size) return std::nullopt;
  int number = 0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(t[i]))) return std::nullopt;
    number = number * 10 + (t[i] - '0');
    if (number > size) return std::nullopt;
  }
  if (number < 1) return std::nullopt;
  return Move::play(size - number, static_cast<int>(col));
}

}  // namespace advgo
