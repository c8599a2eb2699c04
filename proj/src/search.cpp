#include "advgo/search.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "advgo/features.hpp"

namespace advgo {

void SearchConfig::validate() const {
  if (visits < 1) throw std::invalid_argument("visits must be >= 1");
  if (temperature < 0 || temperature_early < 0) throw std::invalid_argument("temperatures must be >= 0");
  if (early_move_horizon < 0) throw std::invalid_argument("early_move_horizon must be >= 0");
}

Evaluation NetworkEvaluator::evaluate(const BoardState& state) const {
  NetworkOutput out = forward(*params_, encode(state));
  return Evaluation{std::move(out.policy_logits), out.value};
}

Evaluation UniformEvaluator::evaluate(const BoardState& state) const {
  return Evaluation{std::vector<float>(state.area() + 1, 0.0f), 0.0f};
}

double exploration_constant(const SearchConfig& config, double parent_visits) {
  return config.cpuct_init + config.cpuct_log * std::log((parent_visits + 361.0) / 361.0);
}

std::vector<double> masked_softmax(const std::vector<float>& logits, const std::vector<std::uint8_t>& legal) {
  std::vector<double> p(logits.size(), 0.0);
  double m = -INFINITY;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (legal[i]) m = std::max(m, static_cast<double>(logits[i]));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!legal[i]) continue;
    p[i] = std::exp(static_cast<double>(logits[i]) - m);
    total += p[i];
  }
  for (auto& x : p) x /= total;
  return p;
}

namespace {

struct Node {
  int move = -1;
  double prior = 0.0;
  int visits = 0;
  double value_sum = 0.0;  // perspective of the player to move at this node
  double value_sq_sum = 0.0;
  int first_child = -1;
  int num_children = 0;
  bool expanded = false;
  bool terminal = false;
  bool victim_node = false;
  std::unique_ptr<BoardState> state;
};

class Tree {
 public:
  Tree(const BoardState& root, const Evaluator& primary, const Evaluator* victim, const SearchConfig& config)
      : root_state_(root), primary_(primary), victim_(victim), config_(config),
        noise_rng_(derive_seed(config.seed, {root.hash(), static_cast<std::uint64_t>(root.move_count()), 0x4E01})) {
    nodes_.reserve(static_cast<std::size_t>(config.visits) * 8 + 8);
    nodes_.emplace_back();
  }

  void simulate() {
    std::vector<int> path{0};
    int cur = 0;
    while (nodes_[cur].expanded && !nodes_[cur].terminal) {
      cur = select_child(cur);
      path.push_back(cur);
    }
    double v;
    if (!nodes_[cur].expanded) {
      const int parent = path.size() >= 2 ? path[path.size() - 2] : -1;
      v = expand(cur, parent);
    } else {
      v = terminal_value(*nodes_[cur].state);
    }
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      Node& n = nodes_[*it];
      n.visits += 1;
      n.value_sum += v;
      n.value_sq_sum += v * v;
      v = -v;
    }
  }

  SearchResult result() const {
    SearchResult r;
    const int size = root_state_.size();
    const int moves = root_state_.area() + 1;
    r.board_size = size;
    r.visit_counts.assign(moves, 0);
    r.visit_distribution.assign(moves, 0.0);
    r.priors.assign(moves, 0.0);
    r.q_values.assign(moves, std::numeric_limits<double>::quiet_NaN());
    r.lcb_values.assign(moves, -std::numeric_limits<double>::infinity());
    const Node& root = nodes_[0];
    r.root_visits = root.visits;
    r.root_value = root.visits > 0 ? root.value_sum / root.visits : 0.0;
    int total = 0;
    int best_prior = -1;
    for (int i = 0; i < root.num_children; ++i) {
      const Node& c = nodes_[root.first_child + i];
      r.priors[c.move] = c.prior;
      r.visit_counts[c.move] = c.visits;
      total += c.visits;
      if (best_prior < 0 || c.prior > r.priors[best_prior]) best_prior = c.move;
      if (c.visits > 0) {
        const double q = -c.value_sum / c.visits;
        r.q_values[c.move] = q;
        if (c.visits >= 2) {
          const double mean_sq = c.value_sq_sum / c.visits;
          const double var = std::max(0.0, (mean_sq - q * q) * c.visits / (c.visits - 1));
          r.lcb_values[c.move] = q - config_.lcb_z * std::sqrt(var / c.visits);
        }
      }
    }
    if (total > 0) {
      for (int m = 0; m < moves; ++m) r.visit_distribution[m] = static_cast<double>(r.visit_counts[m]) / total;
    } else if (best_prior >= 0) {
      r.visit_distribution[best_prior] = 1.0;
    }
    r.primary_evaluations = primary_evals_;
    r.victim_evaluations = victim_evals_;
    r.victim_node_expansions = victim_expansions_;
    r.tree_nodes = static_cast<int>(nodes_.size());
    for (const Node& n : nodes_) {
      if (!n.expanded || n.terminal) continue;
      int sum = 0;
      for (int i = 0; i < n.num_children; ++i) sum += nodes_[n.first_child + i].visits;
      if (n.visits != sum + 1) r.visit_conservation = false;
    }
    return r;
  }

 private:
  double terminal_value(const BoardState& s) const {
    return score_tromp_taylor(s).winner == s.to_move() ? 1.0 : -1.0;
  }

  int select_child(int idx) const {
    const Node& n = nodes_[idx];
    if (n.victim_node) {
      // The victim is modelled as its deterministic highest-prior reply.
      int best = n.first_child;
      for (int i = 1; i < n.num_children; ++i) {
        if (nodes_[n.first_child + i].prior > nodes_[best].prior) best = n.first_child + i;
      }
      return best;
    }
    const double parent_q = n.visits > 0 ? n.value_sum / n.visits : 0.0;
    const double fpu = parent_q - config_.fpu_reduction;
    const double c = exploration_constant(config_, n.visits);
    const double sqrt_n = std::sqrt(static_cast<double>(n.visits));
    int best = -1;
    double best_score = -INFINITY;
    for (int i = 0; i < n.num_children; ++i) {
      const Node& ch = nodes_[n.first_child + i];
      const double q = ch.visits > 0 ? -ch.value_sum / ch.visits : fpu;
      const double score = q + c * ch.prior * sqrt_n / (1.0 + ch.visits);
      if (score > best_score) {
        best_score = score;
        best = n.first_child + i;
      }
    }
    return best;
  }

  double expand(int idx, int parent) {
    BoardState state = parent < 0 ? root_state_ : apply_move(*nodes_[parent].state, Move::from_index(nodes_[idx].move, root_state_.size()));
    const bool victim_turn = victim_ != nullptr && state.to_move() != root_state_.to_move();
    nodes_[idx].expanded = true;
    nodes_[idx].victim_node = victim_turn;
    if (state.game_over()) {
      nodes_[idx].terminal = true;
      const double v = terminal_value(state);
      nodes_[idx].state = std::make_unique<BoardState>(std::move(state));
      return v;
    }
    Evaluation ev;
    if (victim_turn) {
      ev = victim_->evaluate(state);
      ++victim_evals_;
      ++victim_expansions_;
    } else {
      ev = primary_.evaluate(state);
      ++primary_evals_;
    }
    auto legal = legal_move_mask(state);
    if (idx == 0 && !config_.allow_root_pass &&
        std::count(legal.begin(), legal.end(), std::uint8_t{1}) > 1) {
      legal.back() = 0;
    }
    std::vector<double> priors = masked_softmax(ev.logits, legal);
    if (idx == 0 && config_.root_noise) {
      std::vector<int> legal_idx;
      for (int m = 0; m < static_cast<int>(legal.size()); ++m) {
        if (legal[m]) legal_idx.push_back(m);
      }
      const auto noise = dirichlet_sample(noise_rng_, legal_idx.size(), config_.dirichlet_alpha);
      for (std::size_t k = 0; k < legal_idx.size(); ++k) {
        double& p = priors[legal_idx[k]];
        p = (1.0 - config_.noise_fraction) * p + config_.noise_fraction * noise[k];
      }
    }
    const int first = static_cast<int>(nodes_.size());
    int count = 0;
    for (int m = 0; m < static_cast<int>(legal.size()); ++m) {
      if (!legal[m]) continue;
      Node child;
      child.move = m;
      child.prior = priors[m];
      nodes_.push_back(std::move(child));
      ++count;
    }
    nodes_[idx].first_child = first;
    nodes_[idx].num_children = count;
    nodes_[idx].state = std::make_unique<BoardState>(std::move(state));
    return std::clamp(static_cast<double>(ev.value), -1.0, 1.0);
  }

  const BoardState& root_state_;
  const Evaluator& primary_;
  const Evaluator* victim_;
  const SearchConfig& config_;
  Rng noise_rng_;
  std::vector<Node> nodes_;
  int primary_evals_ = 0;
  int victim_evals_ = 0;
  int victim_expansions_ = 0;
};

SearchResult search(const BoardState& state, const Evaluator& primary, const Evaluator* victim,
                    const SearchConfig& config) {
  config.validate();
  if (state.game_over()) throw IllegalMoveError(MoveError::game_over, "search on a finished game");
  Tree tree(state, primary, victim, config);
  for (int i = 0; i < config.visits; ++i) tree.simulate();
  SearchResult r = tree.result();
  Rng rng(derive_seed(config.seed, {state.hash(), static_cast<std::uint64_t>(state.move_count()), 0x5E1}));
  r.chosen_move = select_move(r, config, state.move_count(), rng);
  return r;
}

}  // namespace

Move select_move(const SearchResult& result, const SearchConfig& config, int move_number, Rng& rng) {
  const int moves = static_cast<int>(result.visit_distribution.size());
  if (moves == 0) throw std::invalid_argument("empty search result");
  const int size = result.board_size;
  auto argmax_dist = [&]() {
    int best = 0;
    for (int m = 1; m < moves; ++m) {
      if (result.visit_distribution[m] > result.visit_distribution[best]) best = m;
    }
    return best;
  };
  int max_visits = 0;
  int total = 0;
  for (int v : result.visit_counts) {
    max_visits = std::max(max_visits, v);
    total += v;
  }
  if (total > 0 && max_visits == total) return Move::from_index(argmax_dist(), size);

  if (config.use_lcb && total > 0 && !result.lcb_values.empty()) {
    int best = -1;
    for (int m = 0; m < moves; ++m) {
      if (result.visit_counts[m] * 8 < max_visits || result.visit_counts[m] < 2) continue;
      if (!std::isfinite(result.lcb_values[m])) continue;
      if (best < 0 || result.lcb_values[m] > result.lcb_values[best]) best = m;
    }
    if (best >= 0) return Move::from_index(best, size);
  }

  const double t = move_number < config.early_move_horizon ? config.temperature_early : config.temperature;
  if (t <= 0.0) return Move::from_index(argmax_dist(), size);
  // weights proportional to p^(1/T), computed in log space
  std::vector<double> w(moves, 0.0);
  double m = -INFINITY;
  for (int i = 0; i < moves; ++i) {
    if (result.visit_distribution[i] > 0) m = std::max(m, std::log(result.visit_distribution[i]) / t);
  }
  for (int i = 0; i < moves; ++i) {
    if (result.visit_distribution[i] > 0) w[i] = std::exp(std::log(result.visit_distribution[i]) / t - m);
  }
  const std::size_t pick = sample_weighted(rng, w);
  return Move::from_index(pick < w.size() ? static_cast<int>(pick) : argmax_dist(), size);
}

SearchResult run_mcts(const BoardState& state, const Evaluator& net, const SearchConfig& config) {
  return search(state, net, nullptr, config);
}

SearchResult run_amcts(const BoardState& state, const Evaluator& adversary_net, const Evaluator& victim_net,
                       const SearchConfig& config) {
  return search(state, adversary_net, &victim_net, config);
}

}  // namespace advgo
