#pragma once

// Victim-play curricula, defense (adversarial training) phases and the
// iterated attack/defense loop.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "advgo/eval.hpp"
#include "advgo/selfplay.hpp"

namespace advgo {

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ScheduleExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Phase { attack, defend };
std::string phase_name(Phase p);
Phase parse_phase(const std::string& s);

/// Rolling record of the most recent game outcomes.
class WinTracker {
 public:
  explicit WinTracker(std::size_t capacity = 200) : capacity_(capacity) {}
  void add(bool win);
  void clear() { outcomes_.clear(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return outcomes_.size(); }
  bool full() const { return outcomes_.size() >= capacity_; }
  int wins() const;
  double rate() const;
  const std::deque<std::uint8_t>& outcomes() const { return outcomes_; }

 private:
  std::size_t capacity_;
  std::deque<std::uint8_t> outcomes_;
};

/// first, 2*first, ... up to and including last.
std::vector<int> doubling_schedule(int first, int last);

struct AdvanceEvent {
  int from_visits = 0;
  int to_visits = 0;
  int wins = 0;
  int games = 0;
  double threshold = 0;
  std::int64_t games_played = 0;
};

struct CurriculumState {
  Phase phase = Phase::attack;
  int iteration = 0;
  std::vector<int> visit_schedule = doubling_schedule(1, 256);
  int victim_visits = 1;
  /// Visit count from which the higher threshold applies.
  int high_visit_cutoff = 256;
  double low_threshold = 0.75;
  double high_threshold = 0.90;
  double threshold = 0.75;
  WinTracker tracker{200};
  std::int64_t games_played = 0;
  std::int64_t train_steps = 0;
  std::vector<AdvanceEvent> events;

  double threshold_for(int visits) const { return visits >= high_visit_cutoff ? high_threshold : low_threshold; }
  void validate() const;
  std::string serialize() const;
  static CurriculumState deserialize(const std::string& text);
};

/// Starts at the first rung of `schedule`.
CurriculumState make_curriculum(std::vector<int> schedule, int high_visit_cutoff = 256, std::size_t window = 200);

/// Throws InsufficientData until the tracker holds a full window.
bool should_advance(const CurriculumState& state);
/// Next rung, tracker cleared, event logged. Throws ScheduleExhausted on the last rung.
CurriculumState advance(const CurriculumState& state);

// ---- training ------------------------------------------------------------

struct TrainConfig {
  int batch_size = 64;
  double learning_rate = 0.02;
  double momentum = 0.9;
  double l2 = 1e-4;
  int games_per_round = 40;
  int steps_per_round = 100;
  std::int64_t window_m0 = 20000;
  int workers = 0;
  /// Evaluate (and emit a checkpoint) every this many rounds.
  int eval_every = 5;
  int eval_games = 100;
  int eval_opening_moves = 2;
  std::uint64_t seed = 1;
};

/// Abstract compute units; a phase stops at the first round boundary past either limit.
struct Budget {
  std::int64_t max_games = 1000;
  std::int64_t max_steps = 1000000;
};

struct Checkpoint {
  std::string id;
  std::shared_ptr<const NetworkParameters> params;
  std::int64_t step_count = 0;
  std::int64_t games = 0;
  int eval_wins = 0;
  int eval_games = 0;
  /// Win rate of the trained agent in the phase's evaluation match.
  double win_rate = 0;
  int victim_visits = 0;
};

enum class StopReason { plateau, budget, target };
std::string stop_reason_name(StopReason r);

struct DefensePlan {
  double adversary_fraction = 0.18;
  int selfplay_visits = 32;
  /// Victim and frozen-adversary visits in the adversarial games.
  int victim_visits = 32;
  int adversary_visits = 64;
  double plateau_delta = 0.01;
  int plateau_points = 3;
  /// Evaluation budgets; 0 means the training-game values above.
  int eval_victim_visits_override = 0;
  int eval_adversary_visits_override = 0;
  /// The adversary's pass masking applies while the victim searches fewer visits than this.
  int pass_alive_defense_below = 100;

  int eval_victim_visits() const { return eval_victim_visits_override > 0 ? eval_victim_visits_override : victim_visits; }
  int eval_adversary_visits() const {
    return eval_adversary_visits_override > 0 ? eval_adversary_visits_override : adversary_visits;
  }
};

struct AttackPlan {
  std::vector<int> visit_schedule = doubling_schedule(1, 256);
  int high_visit_cutoff = 256;
  std::size_t tracker_window = 200;
  int adversary_visits = 64;
  /// Victim visits used for checkpoint evaluation; 0 follows the curriculum.
  int eval_victim_visits = 0;
  /// Pass-alive defense is on while the victim searches fewer visits than this.
  int pass_alive_defense_below = 100;
};

struct IterationPlan {
  DefensePlan defend;
  AttackPlan attack;
};

/// Everything a phase leaves behind for its successors.
struct PhaseResult {
  Phase phase = Phase::attack;
  std::vector<Checkpoint> series;
  StopReason stop = StopReason::budget;
  std::shared_ptr<const NetworkParameters> final_params;
  /// Window contents and total N, for warm-starting the next phase of this agent.
  std::vector<TrainingRow> window_rows;
  std::int64_t window_total = 0;
  std::int64_t games = 0;
  std::int64_t steps = 0;
  int adversary_games = 0;
  CurriculumState curriculum;  // attack phases only
  std::vector<int> curriculum_trace;  // victim visits per round
};

/// Training history handed to a phase.
struct WindowSeed {
  std::vector<TrainingRow> rows;
  std::int64_t total = 0;
};

/// Fine-tunes the victim on a fixed mix of self-play and games against the
/// frozen adversary (whose A-MCTS models the victim being trained).
PhaseResult run_defense_iteration(const NetworkParameters& victim, std::shared_ptr<const Evaluator> frozen_adversary,
                                  const DefensePlan& plan, const Budget& budget, const TrainConfig& train,
                                  const GenConfig& gen, const WindowSeed& history = {},
                                  const std::string& id_prefix = "victim");

/// Plain self-play training, evaluated against a fixed opponent.
PhaseResult run_selfplay_training(const NetworkParameters& init, const AgentSpec& eval_opponent, int selfplay_visits,
                                  int eval_visits, const Budget& budget, const TrainConfig& train,
                                  const GenConfig& gen, const WindowSeed& history = {},
                                  const std::string& id_prefix = "victim");

/// Victim-play training of the adversary with a visit curriculum.
PhaseResult run_attack_iteration(const NetworkParameters& adversary, std::shared_ptr<const Evaluator> frozen_victim,
                                 const AttackPlan& plan, const Budget& budget, const TrainConfig& train,
                                 const GenConfig& gen, const WindowSeed& history = {},
                                 const std::string& id_prefix = "adversary");

/// 3-point centered moving average of win rates (2 points at the ends), earliest maximum.
/// Throws InsufficientData below 3 checkpoints.
std::size_t select_checkpoint(const std::vector<Checkpoint>& series);
std::vector<double> smoothed_win_rates(const std::vector<Checkpoint>& series);

/// No evaluation in the last `points` beats the best earlier one by at least `delta`.
bool plateaued(const std::vector<double>& win_rates, int points = 3, double delta = 0.01);

/// One row per checkpoint with its smoothed win rate.
void write_series_csv(const std::filesystem::path& path, const PhaseResult& r);

// ---- iterated training ---------------------------------------------------

struct LineageEntry {
  std::string id;
  std::string role;  // victim | adversary
  int iteration = 0;
  std::string parent;
  std::string checkpoint;  // file name relative to the run directory
  std::int64_t window_total = 0;
  std::int64_t games = 0;
  std::int64_t steps = 0;
  double win_rate = 0;
  std::string stop;
};

struct LineageReport {
  std::vector<LineageEntry> agents;
  int completed_iterations = 0;
  /// Phases finished so far (two per iteration).
  int completed_phases = 0;

  const LineageEntry& latest(const std::string& role) const;
  std::string serialize() const;
  static LineageReport deserialize(const std::string& text);
};

struct IteratedConfig {
  IterationPlan plan;
  TrainConfig train;
  GenConfig gen;
  Budget defend_budget;
  Budget attack_budget;
  int iterations = 0;
};

/// Alternates defense and attack phases starting from the seed checkpoints in
/// `run_dir` (victim-0.ckpt, adversary-0.ckpt). State is saved after every
/// phase; with `resume` finished phases are skipped. `max_phases` < 0 runs to
/// completion, otherwise stops after that many phases in this call.
LineageReport run_iterated(const IteratedConfig& config, const std::filesystem::path& run_dir, bool resume,
                           int max_phases = -1, const std::function<void(const std::string&)>& log = {});

/// Saves/loads a window as numbered same-size segments.
void save_window(const std::filesystem::path& dir, const std::string& stem, const std::vector<TrainingRow>& rows,
                 std::int64_t total);
WindowSeed load_window(const std::filesystem::path& dir, const std::string& stem);

}  // namespace advgo
