#pragma once

// Training-game generation (self-play and victim-play), row extraction and
// the sliding data window.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "advgo/nnet.hpp"
#include "advgo/random.hpp"
#include "advgo/rules.hpp"
#include "advgo/search.hpp"

namespace advgo {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};
class EmptyWindow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class GenMode { selfplay, victimplay, mixed };
enum class MoveLimitPolicy { score_as_is, zero_score_loss, utility };

std::string gen_mode_name(GenMode m);
GenMode parse_gen_mode(const std::string& s);
std::string move_limit_policy_name(MoveLimitPolicy p);
MoveLimitPolicy parse_move_limit_policy(const std::string& s);

/// Percentage of games per board size for full-size training (19x19 dominant).
std::map<int, double> default_board_size_distribution();
/// Keeps sizes in [lo, hi] and renormalizes. Throws ConfigError if nothing is left.
std::map<int, double> restrict_sizes(const std::map<int, double>& dist, int lo, int hi);

struct GenConfig {
  GenMode mode = GenMode::selfplay;
  double adversary_fraction = 0.0;  // mixed mode only
  int selfplay_visits = 32;
  int adversary_visits = 64;
  int victim_visits = 1;
  std::map<int, double> board_size_distribution{{5, 1.0}};
  double komi = kDefaultKomi;
  double move_limit_factor = 900.0;  // moves = factor * area / 361
  MoveLimitPolicy move_limit_policy = MoveLimitPolicy::score_as_is;
  double move_limit_utility = -1.6;
  bool pass_alive_defense = false;
  /// Exploration used by whichever side is learning.
  bool root_noise = true;
  double dirichlet_alpha = 0.8;
  double noise_fraction = 0.25;
  double temperature_early = 1.0;
  double temperature = 0.25;
  double early_moves_fraction = 0.25;  // of the board area
  /// Uniformly random non-pass plies played before the agents take over
  /// (match diversity for deterministic agents). Not stored as training rows.
  int random_opening_moves = 0;
  /// cpuct/fpu shared by all searches.
  SearchConfig search_base;

  /// Throws ConfigError.
  void validate() const;
  int move_limit(int board_size) const;
};

int sample_board_size(const std::map<int, double>& distribution, Rng& rng);

/// One side of a training game.
struct Agent {
  std::string id;
  std::shared_ptr<const Evaluator> net;
  int visits = 1;
  /// Set for an A-MCTS adversary: its model of the opponent.
  std::shared_ptr<const Evaluator> opponent_model;
  /// Learning sides search with exploration noise and temperature.
  bool learner = true;
  /// Pass masking for adversaries (see GenConfig::pass_alive_defense).
  bool adversary = false;
};

enum class GameResult : std::uint8_t { black_win, white_win, move_limit };
std::string game_result_name(GameResult r);

struct GameRecord {
  int board_size = 0;
  double komi = kDefaultKomi;
  std::vector<Move> moves;
  std::vector<std::vector<float>> policy_targets;  // one per move, area + 1
  std::vector<int> visits;                          // search visits used for each move, 0 for opening plies
  int opening_moves = 0;
  GameResult result = GameResult::black_win;
  /// Winner of the scored final position (empty for a zero-scored move-limit game).
  Color winner = Color::empty;
  double black_margin = 0.0;  // black minus white on the final position
  /// Outcome for black in [-1.6, 1]; the adversary's utility in victim-play
  /// is utility_for(adversary_color).
  double black_utility = 0.0;
  double white_utility = 0.0;
  Color adversary_color = Color::empty;  // empty in self-play
  std::string black_id;
  std::string white_id;
  std::uint64_t seed = 0;
  std::int64_t index = 0;

  double utility_for(Color c) const { return c == Color::black ? black_utility : white_utility; }
};

/// True while some empty region larger than `threshold` points is not
/// pass-alive territory for either player.
bool unsettled_territory(const BoardState& state, int threshold = 4);

/// Plays one game. `a` takes `a_color`; board size is sampled unless given.
GameRecord play_training_game(const Agent& a, const Agent& b, const GenConfig& config, Rng& rng,
                              Color a_color = Color::black, int board_size = 0);

/// Which sides of a record become training rows.
enum class RowMode { both_sides, adversary_only, non_adversary_only };

std::vector<TrainingRow> to_rows(const GameRecord& record, RowMode mode);

/// m = (0.4 m0^0.35 / 0.65)(N^0.65 - m0^0.65) + m0, rounded. Throws DomainError if N < m0.
std::int64_t window_size(std::int64_t total_rows, std::int64_t m0);

/// Sliding window of the most recent rows; capacity follows window_size.
class DataWindow {
 public:
  explicit DataWindow(std::int64_t m0 = 250000);

  std::int64_t m0() const { return m0_; }
  std::int64_t total_rows() const { return total_rows_; }
  /// m0 until N reaches m0, window_size(N, m0) afterwards.
  std::int64_t capacity() const { return capacity_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const std::deque<TrainingRow>& rows() const { return rows_; }

  void append(std::vector<TrainingRow> rows);
  /// Adds history_N to N and keeps the newest history rows that fit.
  void warm_start(const std::vector<TrainingRow>& history_rows, std::int64_t history_total);
  /// Uniform with replacement. Throws EmptyWindow when the pool is empty and batch_size > 0.
  TrainingBatch sample_batch(std::size_t batch_size, Rng& rng) const;

  /// Restores a saved window (used by resumable runs).
  void restore(std::int64_t total_rows, std::deque<TrainingRow> rows);

 private:
  void refresh();

  std::int64_t m0_;
  std::int64_t total_rows_ = 0;
  std::int64_t capacity_;
  std::deque<TrainingRow> rows_;
};

/// Plays `count` games in parallel; game i reseeds from (seed, i) so the
/// output does not depend on the worker count. `schedule(i)` picks the
/// agents and a's color.
struct GameAssignment {
  const Agent* a = nullptr;
  const Agent* b = nullptr;
  Color a_color = Color::black;
};
std::vector<GameRecord> play_games(int count, std::uint64_t seed, const GenConfig& config,
                                   const std::function<GameAssignment(int)>& schedule, int workers = 0,
                                   std::int64_t first_index = 0);

/// True for the games of a mixed schedule that are played against the adversary:
/// an evenly spaced interleave with the given fraction.
bool interleave_pick(std::int64_t index, double fraction);

int default_workers();

// ---- data segments ------------------------------------------------------

/// Append-only binary row file for one board size.
void write_segment(const std::string& path, const std::vector<TrainingRow>& rows);
std::vector<TrainingRow> read_segment(const std::string& path);

/// key = value generation manifest.
void write_manifest(const std::string& path, const std::vector<std::pair<std::string, std::string>>& entries);
std::vector<std::pair<std::string, std::string>> read_manifest(const std::string& path);

}  // namespace advgo
