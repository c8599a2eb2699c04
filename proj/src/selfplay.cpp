#include "advgo/selfplay.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "advgo/features.hpp"

namespace advgo {

std::string gen_mode_name(GenMode m) {
  switch (m) {
    case GenMode::selfplay: return "selfplay";
    case GenMode::victimplay: return "victimplay";
    case GenMode::mixed: return "mixed";
  }
  return "?";
}

GenMode parse_gen_mode(const std::string& s) {
  if (s == "selfplay") return GenMode::selfplay;
  if (s == "victimplay") return GenMode::victimplay;
  if (s == "mixed") return GenMode::mixed;
  throw ConfigError("unknown generation mode: " + s);
}

std::string move_limit_policy_name(MoveLimitPolicy p) {
  switch (p) {
    case MoveLimitPolicy::score_as_is: return "score_as_is";
    case MoveLimitPolicy::zero_score_loss: return "zero_score_loss";
    case MoveLimitPolicy::utility: return "utility";
  }
  return "?";
}

MoveLimitPolicy parse_move_limit_policy(const std::string& s) {
  if (s == "score_as_is") return MoveLimitPolicy::score_as_is;
  if (s == "zero_score_loss") return MoveLimitPolicy::zero_score_loss;
  if (s == "utility") return MoveLimitPolicy::utility;
  throw ConfigError("unknown move limit policy: " + s);
}

std::string game_result_name(GameResult r) {
  switch (r) {
    case GameResult::black_win: return "black";
    case GameResult::white_win: return "white";
    case GameResult::move_limit: return "move_limit";
  }
  return "?";
}

std::map<int, double> default_board_size_distribution() {
  // Games out of every 140.
  const std::map<int, int> per140{{7, 1},  {8, 1},  {9, 4},   {10, 2},  {11, 3},  {12, 4}, {13, 10},
                                  {14, 6}, {15, 7}, {16, 8}, {17, 9}, {18, 10}, {19, 75}};
  std::map<int, double> out;
  for (const auto& [size, n] : per140) out[size] = 100.0 * n / 140.0;
  return out;
}

std::map<int, double> restrict_sizes(const std::map<int, double>& dist, int lo, int hi) {
  std::map<int, double> out;
  double total = 0;
  for (const auto& [size, w] : dist) {
    if (size >= lo && size <= hi && w > 0) {
      out[size] = w;
      total += w;
    }
  }
  if (out.empty()) throw ConfigError("no board sizes left in range");
  for (auto& [size, w] : out) w /= total;
  return out;
}

void GenConfig::validate() const {
  if (board_size_distribution.empty()) throw ConfigError("empty board size distribution");
  double total = 0;
  for (const auto& [size, w] : board_size_distribution) {
    if (size < kMinBoardSize || size > kMaxBoardSize) throw ConfigError("board size out of range");
    if (w < 0) throw ConfigError("negative board size weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-6) throw ConfigError("board size distribution must sum to 1");
  if (!(move_limit_factor > 0)) throw ConfigError("move_limit_factor must be > 0");
  if (adversary_fraction < 0 || adversary_fraction > 1) throw ConfigError("adversary_fraction must be in [0,1]");
  if (selfplay_visits < 1 || adversary_visits < 1 || victim_visits < 1) throw ConfigError("visits must be >= 1");
  if (temperature < 0 || temperature_early < 0) throw ConfigError("temperatures must be >= 0");
  if (random_opening_moves < 0) throw ConfigError("random_opening_moves must be >= 0");
}

int GenConfig::move_limit(int board_size) const {
  return std::max(1, static_cast<int>(std::lround(move_limit_factor * board_size * board_size / 361.0)));
}

int sample_board_size(const std::map<int, double>& distribution, Rng& rng) {
  std::vector<double> w;
  std::vector<int> sizes;
  for (const auto& [size, p] : distribution) {
    sizes.push_back(size);
    w.push_back(p);
  }
  const std::size_t k = sample_weighted(rng, w);
  if (k >= sizes.size()) throw ConfigError("board size distribution has no mass");
  return sizes[k];
}

bool unsettled_territory(const BoardState& state, int threshold) {
  const int n = state.area();
  const VertexMask alive_b = pass_alive_regions(state, Color::black);
  const VertexMask alive_w = pass_alive_regions(state, Color::white);
  std::vector<char> seen(n, 0);
  std::vector<int> region;
  int nb[4];
  for (int v = 0; v < n; ++v) {
    if (seen[v] || state.at_index(v) != Color::empty) continue;
    region.assign(1, v);
    seen[v] = 1;
    for (std::size_t i = 0; i < region.size(); ++i) {
      const int k = state.neighbors(region[i], nb);
      for (int j = 0; j < k; ++j) {
        if (!seen[nb[j]] && state.at_index(nb[j]) == Color::empty) {
          seen[nb[j]] = 1;
          region.push_back(nb[j]);
        }
      }
    }
    if (static_cast<int>(region.size()) <= threshold) continue;
    const bool black_owns = std::all_of(region.begin(), region.end(), [&](int p) { return alive_b[p] != 0; });
    const bool white_owns = std::all_of(region.begin(), region.end(), [&](int p) { return alive_w[p] != 0; });
    if (!black_owns && !white_owns) return true;
  }
  return false;
}

GameRecord play_training_game(const Agent& a, const Agent& b, const GenConfig& config, Rng& rng, Color a_color,
                              int board_size) {
  config.validate();
  if (!a.net || !b.net) throw ConfigError("agents need a network");
  if (a_color != Color::black && a_color != Color::white) throw ConfigError("a_color must be black or white");
  GameRecord rec;
  rec.board_size = board_size > 0 ? board_size : sample_board_size(config.board_size_distribution, rng);
  rec.komi = config.komi;
  rec.black_id = a_color == Color::black ? a.id : b.id;
  rec.white_id = a_color == Color::black ? b.id : a.id;
  if (a.adversary != b.adversary) {
    rec.adversary_color = a.adversary ? a_color : opponent(a_color);
  }
  BoardState s(rec.board_size, rec.komi);
  const int limit = config.move_limit(rec.board_size);
  const int early = static_cast<int>(std::ceil(config.early_moves_fraction * s.area()));

  for (int i = 0; i < config.random_opening_moves && s.move_count() < limit; ++i) {
    std::vector<Move> plays = legal_moves(s);
    plays.pop_back();  // pass
    if (plays.empty()) break;
    const Move m = plays[uniform_index(rng, plays.size())];
    std::vector<float> target(s.area() + 1, 0.0f);
    target[m.index(s.size())] = 1.0f;
    rec.moves.push_back(m);
    rec.policy_targets.push_back(std::move(target));
    rec.visits.push_back(0);
    ++rec.opening_moves;
    s = apply_move(s, m);
  }

  while (!s.game_over() && s.move_count() < limit) {
    const Agent& ag = s.to_move() == a_color ? a : b;
    SearchConfig c = config.search_base;
    c.visits = ag.visits;
    c.seed = rng();
    if (ag.learner) {
      c.root_noise = config.root_noise;
      c.dirichlet_alpha = config.dirichlet_alpha;
      c.noise_fraction = config.noise_fraction;
      c.temperature_early = config.temperature_early;
      c.temperature = config.temperature;
      c.early_move_horizon = early;
    } else {
      c.root_noise = false;
      c.temperature = 0;
      c.temperature_early = 0;
      c.early_move_horizon = 0;
    }
    if (config.pass_alive_defense && ag.adversary && unsettled_territory(s)) c.allow_root_pass = false;
    const SearchResult r =
        ag.opponent_model ? run_amcts(s, *ag.net, *ag.opponent_model, c) : run_mcts(s, *ag.net, c);
    rec.moves.push_back(r.chosen_move);
    rec.policy_targets.emplace_back(r.visit_distribution.begin(), r.visit_distribution.end());
    rec.visits.push_back(ag.visits);
    s = apply_move(s, r.chosen_move);
  }

  const ScoreResult score = score_tromp_taylor(s);
  if (s.game_over()) {
    rec.winner = score.winner;
    rec.black_margin = score.black_points - score.white_points;
    rec.result = score.winner == Color::black ? GameResult::black_win : GameResult::white_win;
    rec.black_utility = score.winner == Color::black ? 1.0 : -1.0;
    rec.white_utility = -rec.black_utility;
    return rec;
  }
  rec.result = GameResult::move_limit;
  switch (config.move_limit_policy) {
    case MoveLimitPolicy::score_as_is:
      rec.winner = score.winner;
      rec.black_margin = score.black_points - score.white_points;
      rec.black_utility = score.winner == Color::black ? 1.0 : -1.0;
      rec.white_utility = -rec.black_utility;
      break;
    case MoveLimitPolicy::zero_score_loss:
    case MoveLimitPolicy::utility: {
      rec.winner = Color::empty;
      rec.black_margin = 0.0;
      const double adv = config.move_limit_policy == MoveLimitPolicy::utility ? config.move_limit_utility : -1.0;
      if (rec.adversary_color == Color::black) {
        rec.black_utility = adv;
        rec.white_utility = 1.0;
      } else if (rec.adversary_color == Color::white) {
        rec.white_utility = adv;
        rec.black_utility = 1.0;
      } else {
        rec.black_utility = rec.white_utility = 0.0;
      }
      break;
    }
  }
  return rec;
}

std::vector<TrainingRow> to_rows(const GameRecord& record, RowMode mode) {
  std::vector<TrainingRow> rows;
  BoardState s(record.board_size, record.komi);
  for (std::size_t i = 0; i < record.moves.size(); ++i) {
    const Color mover = s.to_move();
    bool keep = static_cast<int>(i) >= record.opening_moves;
    if (mode == RowMode::adversary_only) keep = keep && mover == record.adversary_color;
    if (mode == RowMode::non_adversary_only) keep = keep && mover != record.adversary_color;
    if (keep) {
      TrainingRow row = make_row(encode(s), record.policy_targets[i], static_cast<float>(record.utility_for(mover)));
      row.tag = record.index * 4096 + static_cast<std::int64_t>(i);
      rows.push_back(std::move(row));
    }
    s = apply_move(s, record.moves[i]);
  }
  return rows;
}

std::int64_t window_size(std::int64_t total_rows, std::int64_t m0) {
  if (m0 <= 0) throw DomainError("m0 must be positive");
  if (total_rows < m0) throw DomainError("window_size requires N >= m0");
  const double n = static_cast<double>(total_rows), m = static_cast<double>(m0);
  const double v = (0.4 * std::pow(m, 0.35) / 0.65) * (std::pow(n, 0.65) - std::pow(m, 0.65)) + m;
  return static_cast<std::int64_t>(std::llround(v));
}

DataWindow::DataWindow(std::int64_t m0) : m0_(m0), capacity_(m0) {
  if (m0 <= 0) throw DomainError("m0 must be positive");
}

void DataWindow::refresh() {
  capacity_ = total_rows_ < m0_ ? m0_ : window_size(total_rows_, m0_);
  while (static_cast<std::int64_t>(rows_.size()) > capacity_) rows_.pop_front();
}

void DataWindow::append(std::vector<TrainingRow> rows) {
  total_rows_ += static_cast<std::int64_t>(rows.size());
  for (auto& r : rows) rows_.push_back(std::move(r));
  refresh();
}

void DataWindow::warm_start(const std::vector<TrainingRow>& history_rows, std::int64_t history_total) {
  if (!rows_.empty()) throw std::logic_error("warm_start requires an empty window");
  if (history_total < 0) throw DomainError("negative history size");
  total_rows_ += history_total;
  capacity_ = total_rows_ < m0_ ? m0_ : window_size(total_rows_, m0_);
  const std::size_t keep = std::min<std::size_t>(history_rows.size(), static_cast<std::size_t>(capacity_));
  rows_.assign(history_rows.end() - static_cast<std::ptrdiff_t>(keep), history_rows.end());
}

TrainingBatch DataWindow::sample_batch(std::size_t batch_size, Rng& rng) const {
  TrainingBatch batch;
  if (batch_size == 0) return batch;
  if (rows_.empty()) throw EmptyWindow("cannot sample from an empty window");
  batch.rows.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) batch.rows.push_back(rows_[uniform_index(rng, rows_.size())]);
  return batch;
}

void DataWindow::restore(std::int64_t total_rows, std::deque<TrainingRow> rows) {
  total_rows_ = total_rows;
  rows_ = std::move(rows);
  refresh();
}

bool interleave_pick(std::int64_t index, double fraction) {
  if (fraction <= 0) return false;
  if (fraction >= 1) return true;
  return std::floor((index + 1) * fraction) > std::floor(index * fraction);
}

int default_workers() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

std::vector<GameRecord> play_games(int count, std::uint64_t seed, const GenConfig& config,
                                   const std::function<GameAssignment(int)>& schedule, int workers,
                                   std::int64_t first_index) {
  config.validate();
  std::vector<GameRecord> out(std::max(count, 0));
  if (count <= 0) return out;
  const int w = std::clamp(workers > 0 ? workers : default_workers(), 1, count);
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        const GameAssignment g = schedule(i);
        const std::uint64_t game_seed = derive_seed(seed, {static_cast<std::uint64_t>(first_index + i)});
        Rng rng(game_seed);
        GameRecord rec = play_training_game(*g.a, *g.b, config, rng, g.a_color);
        rec.seed = game_seed;
        rec.index = first_index + i;
        out[i] = std::move(rec);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        next = count;
        return;
      }
    }
  };
  if (w == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < w; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace advgo
