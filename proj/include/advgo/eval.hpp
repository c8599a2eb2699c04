#pragma once

// Matches, binomial confidence intervals, Elo fitting, robustness metrics and
// the KataGo training-compute estimate.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "advgo/selfplay.hpp"

namespace advgo {

class CheckpointMissing : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DisconnectedGraph : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class NeverAchieved : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One side of a match.
struct AgentSpec {
  std::string id;
  std::shared_ptr<const Evaluator> net;
  int visits = 1;
  /// A-MCTS using the opponent's network as the opponent model.
  bool amcts = false;
  /// Root noise and move temperature as in training games. With a uniform
  /// prior at 1 visit this plays a uniformly random legal move.
  bool explore = false;
};

/// Loads a checkpoint as a network evaluator. Throws CheckpointMissing.
std::shared_ptr<const NetworkEvaluator> load_evaluator(const std::string& path);

struct MatchSpec {
  AgentSpec a;
  AgentSpec b;
  int games = 100;
  int board_size = 5;
  double komi = kDefaultKomi;
  bool alternate_colors = true;
  int random_opening_moves = 0;
  double move_limit_factor = 900.0;
  /// Pass masking for A-MCTS agents, as in their victim-play games.
  bool pass_alive_defense = false;
  std::uint64_t seed = 0;
  int workers = 0;
  SearchConfig search_base;

  void validate() const;
};

struct WinRateCI {
  int wins = 0;
  int losses = 0;
  double point = 0;
  double lower = 0;
  double upper = 1;
  double confidence = 0.95;
};

struct MatchResult {
  std::vector<GameRecord> games;
  std::vector<Color> a_colors;
  int a_wins = 0;
  int b_wins = 0;
  int a_black_games = 0;
  /// Games without a winner (move limit under a zero-score policy).
  int undecided = 0;

  double a_win_rate() const { return games.empty() ? 0.0 : static_cast<double>(a_wins) / games.size(); }
  /// Clopper-Pearson interval on a's win rate.
  WinRateCI a_ci(double confidence = 0.95) const;
  /// 1 = a won, 0 = b won, per game.
  std::vector<int> outcomes() const;
};

MatchResult run_match(const MatchSpec& spec);

/// Regularized incomplete beta function I_x(a, b).
double regularized_incomplete_beta(double a, double b, double x);
/// Exact binomial interval by bisection on the beta CDF. Throws DomainError.
WinRateCI clopper_pearson(int wins, int n, double confidence = 0.95);

/// Games between an ordered pair; wins_a + wins_b games in total.
struct PairTally {
  std::string a;
  std::string b;
  double wins_a = 0;
  double wins_b = 0;
};

struct EloModel {
  std::map<std::string, double> ratings;
  std::string anchor;
  double prior_sigma = 1200.0;
  int iterations = 0;
  double gradient_norm = 0.0;

  /// P(a beats b) under the fitted ratings.
  double expected_score(const std::string& a, const std::string& b) const;
};

/// 1 / (1 + 10^(-(ra - rb) / 400)).
double elo_expected_score(double rating_a, double rating_b);

/// MAP ratings with a Gaussian prior on every non-anchor rating. The anchor
/// defaults to the lexicographically first agent. Throws DisconnectedGraph.
EloModel fit_elo(const std::vector<PairTally>& results, const std::string& anchor = "",
                 double prior_sigma = 1200.0);

// ---- robustness ----------------------------------------------------------

/// Attacker progress: win rate measured at a compute point (games or steps).
struct ComputePoint {
  double compute = 0;
  int wins = 0;
  int games = 0;
};
using AttackRun = std::vector<ComputePoint>;

struct TrainingRobustness {
  double p_level = 0.5;
  double compute_to_exploit = 0;
  /// compute_to_exploit / victim_compute when a victim compute is given.
  std::optional<double> relative;
  std::size_t run_index = 0;
  std::size_t point_index = 0;
};

/// Minimum over runs of the first compute point where the attacker reaches
/// 1 - p (the CI lower bound must reach it in strict mode). Throws NeverAchieved.
TrainingRobustness training_compute_robustness(const std::vector<AttackRun>& runs, double p,
                                               std::optional<double> victim_compute = std::nullopt,
                                               bool strict = false, double confidence = 0.95);

struct RobustnessPoint {
  int victim_visits = 0;
  WinRateCI victim_vs_adversary;
  WinRateCI victim_vs_baseline;
  /// The adversary does better against this victim budget than the baseline does.
  bool adversary_above_baseline = false;
};

struct RobustnessReport {
  std::string victim;
  std::string adversary;
  std::string baseline;
  std::vector<RobustnessPoint> points;
};

/// Victim win rate against the adversary and against a fixed-budget copy of
/// itself for each victim visit count on the grid. `base` supplies the board,
/// games, seed and the opponent's spec is taken from `adversary`/`baseline`.
RobustnessReport inference_compute_robustness(const AgentSpec& victim, const AgentSpec& adversary,
                                              const AgentSpec& baseline, const std::vector<int>& visit_grid,
                                              const MatchSpec& base);

// ---- compute estimate ----------------------------------------------------

inline constexpr double kKataGoBaseRows = 1229425124.0;
inline constexpr double kKataGoVisitSwitchRows = 3211000000.0;

/// V100 GPU-days for a network from KataGo's distributed run trained on
/// `rows` data rows. Throws DomainError below the base row count.
double estimate_katago_compute(double rows);

// ---- tables --------------------------------------------------------------

void write_match_csv(std::ostream& out, const MatchResult& result, const MatchSpec& spec);
void write_elo_csv(std::ostream& out, const EloModel& model);
void write_robustness_csv(std::ostream& out, const RobustnessReport& report);

/// Fixed-precision number formatting shared by every CSV writer.
std::string format_number(double v, int digits = 6);

}  // namespace advgo
