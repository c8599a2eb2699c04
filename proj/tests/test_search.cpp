#include <cmath>
#include <numeric>
#include <set>

#include "advgo/search.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace advgo;

namespace {

// Uniform prior; value from the current area score, mover perspective.
class ScoreEvaluator final : public Evaluator {
 public:
  Evaluation evaluate(const BoardState& s) const override {
    const ScoreResult r = score_tromp_taylor(s);
    const double margin = (r.black_points - r.white_points) * (s.to_move() == Color::black ? 1 : -1);
    return Evaluation{std::vector<float>(s.area() + 1, 0.0f), static_cast<float>(std::tanh(margin / 4.0))};
  }
};

// Strongly prefers passing.
class PassingEvaluator final : public Evaluator {
 public:
  Evaluation evaluate(const BoardState& s) const override {
    Evaluation e = ScoreEvaluator().evaluate(s);
    e.logits.back() = 10.0f;
    return e;
  }
};

// Counts calls so the tests can attribute evaluations to networks.
class CountingEvaluator final : public Evaluator {
 public:
  explicit CountingEvaluator(const Evaluator& inner) : inner_(inner) {}
  Evaluation evaluate(const BoardState& s) const override {
    ++calls;
    return inner_.evaluate(s);
  }
  mutable int calls = 0;

 private:
  const Evaluator& inner_;
};

Vertex transform(Vertex v, int k, int n) {
  int r = v.row, c = v.col;
  for (int i = 0; i < k % 4; ++i) {
    const int nr = c, nc = n - 1 - r;
    r = nr;
    c = nc;
  }
  if (k >= 4) std::swap(r, c);
  return {r, c};
}

BoardState transform_state(const BoardState& s, int k) {
  const int n = s.size();
  std::vector<std::string> rows(n, std::string(n, '.'));
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const Vertex t = transform({r, c}, k, n);
      const Color x = s.at(r, c);
      rows[t.row][t.col] = x == Color::black ? 'X' : (x == Color::white ? 'O' : '.');
    }
  }
  return BoardState::from_diagram(rows, s.to_move(), s.komi());
}

int argmax_visits(const SearchResult& r) {
  return static_cast<int>(std::max_element(r.visit_counts.begin(), r.visit_counts.end()) - r.visit_counts.begin());
}

// Black's single winning move captures eleven stones.
const std::vector<std::string> kCapture = {"OO.OO", "OOOOX", "XOOX.", "XOXXX", ".X.XX"};
// Lost for black against best play, won if white keeps passing.
const std::vector<std::string> kTrap = {"XO.OO", ".XOOX", "XXOXX", "XOOXO", "O.OX."};

}  // namespace

TEST_CASE("exploration constant schedule") {
  SearchConfig c;
  CHECK(exploration_constant(c, 0) == doctest::Approx(1.0));
  CHECK(exploration_constant(c, 361) == doctest::Approx(1.0 + 0.45 * std::log(2.0)));
}

TEST_CASE("config validation and finished games") {
  SearchConfig c;
  c.visits = 0;
  CHECK_THROWS(run_mcts(BoardState(5), UniformEvaluator(), c));
  c.visits = 4;
  c.temperature = -1;
  CHECK_THROWS(run_mcts(BoardState(5), UniformEvaluator(), c));
  BoardState over = apply_move(apply_move(BoardState(5), Move::pass()), Move::pass());
  SearchConfig ok;
  CHECK_THROWS_AS(run_mcts(over, UniformEvaluator(), ok), IllegalMoveError);
}

TEST_CASE("one visit yields the prior argmax") {
  auto params = std::make_shared<NetworkParameters>(init_network(NetworkConfig::desk_cnn(), 3));
  NetworkEvaluator net(params);
  BoardState s = apply_move(BoardState(5), Move::play(2, 2));
  SearchConfig c;
  c.visits = 1;
  const SearchResult r = run_mcts(s, net, c);
  const int best = static_cast<int>(std::max_element(r.priors.begin(), r.priors.end()) - r.priors.begin());
  for (int m = 0; m <= 25; ++m) CHECK(r.visit_distribution[m] == (m == best ? 1.0 : 0.0));
  CHECK(r.chosen_move.index(5) == best);
  CHECK(r.priors[12] == 0.0);  // occupied
  CHECK(std::accumulate(r.priors.begin(), r.priors.end(), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("ties break toward the lowest index") {
  SearchConfig c;
  c.visits = 1;
  CHECK(run_mcts(BoardState(5), UniformEvaluator(), c).chosen_move == Move::play(0, 0));
}

TEST_CASE("uniform-prior search finds the only winning capture") {
  const BoardState s = BoardState::from_diagram(kCapture, Color::black);
  oracle::Solver solver(16);
  const auto values = solver.move_values(s);
  int winners = 0;
  for (auto [m, v] : values) winners += v == 1;
  REQUIRE(winners == 1);
  REQUIRE(values.at(2) == 1);
  SearchConfig c;
  c.visits = 256;
  const SearchResult r = run_mcts(s, ScoreEvaluator(), c);
  CHECK(r.chosen_move == Move::play(0, 2));
  CHECK(r.visit_conservation);
  CHECK(r.root_visits == 256);
}

TEST_CASE("search invariants") {
  Rng rng(4);
  std::vector<BoardState> trace;
  oracle::random_playout(5, rng, kDefaultKomi, &trace);
  SearchConfig c;
  c.visits = 50;
  for (std::size_t t = 0; t + 1 < trace.size(); t += 4) {
    const SearchResult r = run_mcts(trace[t], ScoreEvaluator(), c);
    CHECK(r.visit_conservation);
    CHECK(std::accumulate(r.visit_counts.begin(), r.visit_counts.end(), 0) == c.visits - 1);
    CHECK(std::accumulate(r.visit_distribution.begin(), r.visit_distribution.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::accumulate(r.priors.begin(), r.priors.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    const auto legal = legal_move_mask(trace[t]);
    for (std::size_t m = 0; m < legal.size(); ++m) {
      if (!legal[m]) {
        CHECK(r.priors[m] == 0.0);
        CHECK(r.visit_counts[m] == 0);
      }
      if (!std::isnan(r.q_values[m])) {
        CHECK(r.q_values[m] >= -1.0);
        CHECK(r.q_values[m] <= 1.0);
      }
    }
    CHECK(legal[r.chosen_move.index(5)]);
  }
}

TEST_CASE("search is deterministic for a fixed seed") {
  const BoardState s = BoardState::from_diagram(kTrap, Color::black);
  SearchConfig c;
  c.visits = 64;
  c.root_noise = true;
  c.temperature = 1.0;
  c.seed = 9;
  const SearchResult a = run_mcts(s, ScoreEvaluator(), c);
  const SearchResult b = run_mcts(s, ScoreEvaluator(), c);
  CHECK(a.visit_counts == b.visit_counts);
  CHECK(a.chosen_move == b.chosen_move);
  CHECK(a.root_value == b.root_value);
  c.seed = 10;
  const SearchResult d = run_mcts(s, ScoreEvaluator(), c);
  CHECK(d.priors != a.priors);
}

TEST_CASE("symmetric position keeps the argmax orbit under dihedral transforms") {
  BoardState s = BoardState::from_diagram({".....", ".....", "..X..", ".....", "....."}, Color::white);
  SearchConfig c;
  c.visits = 120;
  const SearchResult base = run_mcts(s, ScoreEvaluator(), c);
  const Vertex best = Move::from_index(argmax_visits(base), 5).vertex;
  std::set<Vertex> orbit;
  for (int k = 0; k < 8; ++k) orbit.insert(transform(best, k, 5));
  for (int k = 0; k < 8; ++k) {
    const SearchResult r = run_mcts(transform_state(s, k), ScoreEvaluator(), c);
    const Move m = Move::from_index(argmax_visits(r), 5);
    REQUIRE_FALSE(m.is_pass());
    CHECK(orbit.count(m.vertex) == 1);
  }
}

TEST_CASE("select_move honours LCB, temperature and single-move results") {
  SearchResult r;
  r.board_size = 5;
  r.visit_counts.assign(26, 0);
  r.visit_distribution.assign(26, 0.0);
  r.lcb_values.assign(26, -INFINITY);
  r.visit_counts[3] = 100;
  r.visit_counts[7] = 40;
  r.visit_counts[9] = 10;  // below max/8
  r.lcb_values[3] = 0.05;
  r.lcb_values[7] = 0.20;
  r.lcb_values[9] = 0.90;
  for (int m : {3, 7, 9}) r.visit_distribution[m] = r.visit_counts[m] / 150.0;
  SearchConfig c;
  Rng rng(1);
  CHECK(select_move(r, c, 0, rng).index(5) == 3);
  c.use_lcb = true;
  CHECK(select_move(r, c, 0, rng).index(5) == 7);

  SearchResult single = r;
  single.visit_counts.assign(26, 0);
  single.visit_distribution.assign(26, 0.0);
  single.visit_counts[4] = 10;
  single.visit_distribution[4] = 1.0;
  c.temperature = 5.0;
  CHECK(select_move(single, c, 0, rng).index(5) == 4);

  c.use_lcb = false;
  c.temperature = 1.0;
  std::vector<int> hits(26, 0);
  for (int i = 0; i < 6000; ++i) ++hits[select_move(r, c, 10, rng).index(5)];
  CHECK(hits[3] / 6000.0 == doctest::Approx(100 / 150.0).epsilon(0.05));
  CHECK(hits[9] / 6000.0 == doctest::Approx(10 / 150.0).epsilon(0.25));

  c.temperature = 0.0;
  c.temperature_early = 1.0;
  c.early_move_horizon = 5;
  std::set<int> early;
  for (int i = 0; i < 200; ++i) early.insert(select_move(r, c, 2, rng).index(5));
  CHECK(early.size() > 1);
  CHECK(select_move(r, c, 5, rng).index(5) == 3);
}

TEST_CASE("lcb values follow the standard error formula") {
  const BoardState s = BoardState::from_diagram(kTrap, Color::black);
  SearchConfig c;
  c.visits = 200;
  const SearchResult r = run_mcts(s, ScoreEvaluator(), c);
  for (std::size_t m = 0; m < r.visit_counts.size(); ++m) {
    if (r.visit_counts[m] >= 2) {
      CHECK(std::isfinite(r.lcb_values[m]));
      CHECK(r.lcb_values[m] <= r.q_values[m] + 1e-12);
    } else {
      CHECK(std::isinf(r.lcb_values[m]));
    }
  }
}

TEST_CASE("amcts with identical networks and one visit matches mcts") {
  auto params = std::make_shared<NetworkParameters>(init_network(NetworkConfig::desk_cnn(), 5));
  NetworkEvaluator net(params);
  SearchConfig c;
  c.visits = 1;
  const BoardState s = apply_move(BoardState(5), Move::play(1, 3));
  CHECK(run_amcts(s, net, net, c).chosen_move == run_mcts(s, net, c).chosen_move);
}

TEST_CASE("amcts victim nodes use only the victim network") {
  ScoreEvaluator adv_inner;
  PassingEvaluator vic_inner;
  CountingEvaluator adv(adv_inner), vic(vic_inner);
  SearchConfig c;
  c.visits = 150;
  const SearchResult r = run_amcts(BoardState::from_diagram(kTrap, Color::black), adv, vic, c);
  CHECK(r.victim_evaluations == r.victim_node_expansions);
  CHECK(r.victim_evaluations == vic.calls);
  CHECK(r.primary_evaluations == adv.calls);
  CHECK(r.victim_evaluations > 0);
  CHECK(r.visit_conservation);
}

TEST_CASE("amcts against a uniform victim follows the lowest-index reply") {
  ScoreEvaluator adv_inner;
  UniformEvaluator vic_inner;
  CountingEvaluator adv(adv_inner), vic(vic_inner);
  SearchConfig c;
  c.visits = 3;
  // visit 1 expands the root, visit 2 expands one adversary move (a victim
  // node), visit 3 either opens a new adversary move or steps through the
  // victim's lowest-index reply; both paths add at most one victim expansion.
  const SearchResult r = run_amcts(BoardState(5), adv, vic, c);
  CHECK(vic.calls + adv.calls == 3);
  CHECK(vic.calls >= 1);
}

TEST_CASE("amcts exploits a victim blunder the perfect opponent would not make") {
  const BoardState s = BoardState::from_diagram(kTrap, Color::black);
  oracle::Solver solver(16);
  REQUIRE(solver.solve(s) == -1);
  ScoreEvaluator adversary;
  PassingEvaluator victim;
  SearchConfig c;
  c.visits = 300;
  const SearchResult a = run_amcts(s, adversary, victim, c);
  const SearchResult m = run_mcts(s, adversary, c);
  CHECK(a.root_value > -1.0 + 0.5);
  CHECK(a.root_value > m.root_value);
}
