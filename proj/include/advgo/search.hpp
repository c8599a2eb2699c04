#pragma once

// PUCT tree search and the adversarial variant that models the opponent with
// its own network.

#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "advgo/nnet.hpp"
#include "advgo/random.hpp"
#include "advgo/rules.hpp"

namespace advgo {

struct SearchConfig {
  int visits = 64;
  double cpuct_init = 1.0;
  double cpuct_log = 0.45;
  double fpu_reduction = 0.2;
  bool use_lcb = false;
  double lcb_z = 1.96;
  double temperature = 0.0;
  double temperature_early = 0.0;
  int early_move_horizon = 0;
  bool root_noise = false;
  double dirichlet_alpha = 0.3;
  double noise_fraction = 0.25;
  /// When false the root never considers passing unless nothing else is legal.
  bool allow_root_pass = true;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Raw network opinion on a position: unnormalized logits over area + 1
/// moves (pass last) and the mover's value.
struct Evaluation {
  std::vector<float> logits;
  float value = 0.0f;
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual Evaluation evaluate(const BoardState& state) const = 0;
};

/// Forward passes through a shared, immutable parameter snapshot.
class NetworkEvaluator final : public Evaluator {
 public:
  explicit NetworkEvaluator(std::shared_ptr<const NetworkParameters> params) : params_(std::move(params)) {}
  Evaluation evaluate(const BoardState& state) const override;
  const NetworkParameters& params() const { return *params_; }
  std::shared_ptr<const NetworkParameters> shared_params() const { return params_; }

 private:
  std::shared_ptr<const NetworkParameters> params_;
};

/// Uniform prior, zero value.
class UniformEvaluator final : public Evaluator {
 public:
  Evaluation evaluate(const BoardState& state) const override;
};

struct SearchResult {
  int board_size = 0;
  std::vector<int> visit_counts;          // per move index, root children
  std::vector<double> visit_distribution;  // sums to 1
  std::vector<double> priors;              // masked, renormalized root priors
  std::vector<double> q_values;            // root mover perspective, NaN if unvisited
  std::vector<double> lcb_values;          // -inf where undefined
  Move chosen_move;
  double root_value = 0.0;
  int root_visits = 0;
  int primary_evaluations = 0;
  int victim_evaluations = 0;
  int victim_node_expansions = 0;
  int tree_nodes = 0;
  /// Every expanded node satisfies N = 1 + sum(child N).
  bool visit_conservation = true;
};

/// c(N) = cpuct_init + cpuct_log * ln((N + 361) / 361).
double exploration_constant(const SearchConfig& config, double parent_visits);

/// Temperature / LCB move choice from a finished search.
Move select_move(const SearchResult& result, const SearchConfig& config, int move_number, Rng& rng);

/// Plain PUCT search. Throws IllegalMoveError(game_over) on a finished game.
SearchResult run_mcts(const BoardState& state, const Evaluator& net, const SearchConfig& config);

/// Adversarial search: nodes where the opponent moves are expanded with the
/// victim network and descend only through its highest-prior reply.
SearchResult run_amcts(const BoardState& state, const Evaluator& adversary_net, const Evaluator& victim_net,
                       const SearchConfig& config);

/// Softmax over legal moves only; illegal entries are zero.
std::vector<double> masked_softmax(const std::vector<float>& logits, const std::vector<std::uint8_t>& legal);

}  // namespace advgo
