#pragma once

// Go rules engine: Tromp-Taylor area scoring, positional superko, suicide
// forbidden, game over after two consecutive passes.

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace advgo {

inline constexpr int kMinBoardSize = 5;
inline constexpr int kMaxBoardSize = 19;
inline constexpr double kDefaultKomi = 7.5;

enum class Color : std::uint8_t { empty = 0, black = 1, white = 2 };

constexpr Color opponent(Color c) {
  return c == Color::black ? Color::white : (c == Color::white ? Color::black : Color::empty);
}

std::string color_name(Color c);

struct Vertex {
  int row = 0;
  int col = 0;
  auto operator<=>(const Vertex&) const = default;
};

/// A play or a pass. Plays are ordered row-major; pass sorts after every play.
struct Move {
  enum class Kind : std::uint8_t { play, pass };
  Kind kind = Kind::pass;
  Vertex vertex{};

  static Move pass() { return Move{}; }
  static Move play(int row, int col) { return Move{Kind::play, Vertex{row, col}}; }
  static Move from_index(int index, int board_size);

  bool is_pass() const { return kind == Kind::pass; }
  /// row * size + col for plays, size * size for pass.
  int index(int board_size) const;

  bool operator==(const Move& other) const {
    return kind == other.kind && (kind == Kind::pass || vertex == other.vertex);
  }
};

enum class MoveError : std::uint8_t { none, off_board, occupied, suicide, superko, game_over };

std::string move_error_name(MoveError e);

class IllegalMoveError : public std::runtime_error {
 public:
  IllegalMoveError(MoveError reason, const std::string& what)
      : std::runtime_error(what), reason_(reason) {}
  MoveError reason() const { return reason_; }

 private:
  MoveError reason_;
};

class BoardSizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Per-vertex flags, indexed row * size + col.
using VertexMask = std::vector<std::uint8_t>;

/// Immutable Go position. Successors are produced by apply_move.
class BoardState {
 public:
  explicit BoardState(int size = 19, double komi = kDefaultKomi);

  /// Builds a position from rows of 'X' (black), 'O' (white) and '.' (empty).
  /// Chains without liberties are rejected.
  static BoardState from_diagram(const std::vector<std::string>& rows, Color to_move,
                                 double komi = kDefaultKomi);

  int size() const { return size_; }
  int area() const { return size_ * size_; }
  double komi() const { return komi_; }
  Color to_move() const { return to_move_; }
  int consecutive_passes() const { return consecutive_passes_; }
  int move_count() const { return move_count_; }
  bool game_over() const { return consecutive_passes_ >= 2; }

  Color at(int row, int col) const { return grid_[row * size_ + col]; }
  Color at(Vertex v) const { return at(v.row, v.col); }
  Color at_index(int idx) const { return grid_[idx]; }
  const std::vector<Color>& grid() const { return grid_; }

  /// Hash of the current grid; equals position_hashes().back().
  std::uint64_t hash() const { return position_hashes_.back(); }
  const std::vector<std::uint64_t>& position_hashes() const { return position_hashes_; }
  bool seen_position(std::uint64_t h) const;

  /// Move index of the last move and the one before it, -1 when absent.
  int last_move_index() const { return last_moves_[0]; }
  int previous_move_index() const { return last_moves_[1]; }

  bool on_board(int row, int col) const {
    return row >= 0 && col >= 0 && row < size_ && col < size_;
  }
  /// Orthogonal neighbours of a vertex index, written to out; returns the count.
  int neighbors(int idx, int out[4]) const;

  /// Replaces the komi while keeping the position.
  BoardState with_komi(double komi) const;
  /// Replaces the side to move (setup positions only).
  BoardState with_to_move(Color c) const;

  std::string to_string() const;

 private:
  friend MoveError probe_move(const BoardState&, const Move&, BoardState*, std::uint64_t*);

  int size_;
  double komi_;
  Color to_move_ = Color::black;
  int consecutive_passes_ = 0;
  int move_count_ = 0;
  int last_moves_[2] = {-1, -1};
  std::vector<Color> grid_;
  std::vector<std::uint64_t> position_hashes_;
};

struct ScoreResult {
  double black_points = 0.0;
  double white_points = 0.0;  // includes komi
  int neutral_points = 0;
  Color winner = Color::white;
  double margin = 0.0;
};

/// Legality check; on success optionally fills the successor state and its hash.
MoveError probe_move(const BoardState& state, const Move& move, BoardState* successor = nullptr,
                     std::uint64_t* successor_hash = nullptr);

/// Returns the successor position or throws IllegalMoveError.
BoardState apply_move(const BoardState& state, const Move& move);

/// All moves for which apply_move succeeds, in index order with pass last.
/// Throws IllegalMoveError(game_over) when the game has ended.
std::vector<Move> legal_moves(const BoardState& state);

/// Mask over area + 1 move indices (pass last).
std::vector<std::uint8_t> legal_move_mask(const BoardState& state);

ScoreResult score_tromp_taylor(const BoardState& state);

/// Benson unconditional life: chains of `color` that survive any sequence of
/// opponent moves while `color` only passes, plus the regions vital to them.
VertexMask pass_alive_regions(const BoardState& state, Color color);

/// Zobrist grid hash from scratch, depends on size and grid only.
std::uint64_t position_hash(const BoardState& state);
std::uint64_t grid_hash(int size, const std::vector<Color>& grid);

/// Zobrist key for (size, vertex, stone color).
std::uint64_t zobrist_key(int size, int idx, Color c);
std::uint64_t zobrist_size_key(int size);

std::vector<Vertex> mask_to_vertices(const VertexMask& mask, int size);

/// GTP coordinate ("A1" bottom-left, no 'I'); pass as "pass".
std::string move_to_gtp(const Move& m, int size);
std::optional<Move> move_from_gtp(const std::string& text, int size);

}  // namespace advgo
