#include <algorithm>
#include <set>

#include "advgo/rules.hpp"
#include "benson_suite.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace advgo;

namespace {

// Black has just taken two white stones in the corner; white's recapture of
// the lone black stone would restore the starting grid.
BoardState send_two_return_one() {
  BoardState s = BoardState::from_diagram({".O.X.", "OXX..", ".....", ".....", "....."}, Color::white);
  s = apply_move(s, Move::play(0, 2));  // white sends two
  s = apply_move(s, Move::play(0, 0));  // black takes them
  return s;
}

}  // namespace

TEST_CASE("empty board has every vertex plus pass legal") {
  for (int n : {5, 9, 19}) {
    BoardState s(n);
    CHECK(legal_moves(s).size() == static_cast<std::size_t>(n * n + 1));
    CHECK(legal_moves(s).back().is_pass());
  }
}

TEST_CASE("board size is validated") {
  CHECK_THROWS_AS(BoardState(4), BoardSizeError);
  CHECK_THROWS_AS(BoardState(20), BoardSizeError);
  CHECK_NOTHROW(BoardState(5));
}

TEST_CASE("illegal moves raise typed errors") {
  BoardState s(5);
  s = apply_move(s, Move::play(2, 2));
  CHECK_THROWS_AS(apply_move(s, Move::play(2, 2)), IllegalMoveError);
  try {
    apply_move(s, Move::play(2, 2));
  } catch (const IllegalMoveError& e) {
    CHECK(e.reason() == MoveError::occupied);
  }
  CHECK(probe_move(s, Move::play(5, 0)) == MoveError::off_board);

  const BoardState corner = BoardState::from_diagram({".X...", "X....", ".....", ".....", "....."}, Color::white);
  CHECK(probe_move(corner, Move::play(0, 0)) == MoveError::suicide);
  const auto moves = legal_moves(corner);
  CHECK(std::find(moves.begin(), moves.end(), Move::play(0, 0)) == moves.end());
}

TEST_CASE("diagram rejects chains without liberties") {
  CHECK_THROWS(BoardState::from_diagram({"OX...", "X....", ".....", ".....", "....."}, Color::white));
}

TEST_CASE("capture removes stones and a capture into zero liberties is legal") {
  BoardState s = BoardState::from_diagram({".XO..", "XO...", "O....", ".....", "....."}, Color::white);
  CHECK(probe_move(s, Move::play(0, 0)) == MoveError::none);
  const BoardState t = apply_move(s, Move::play(0, 0));
  CHECK(t.at(0, 1) == Color::empty);
  CHECK(t.at(1, 0) == Color::empty);
  CHECK(t.at(0, 0) == Color::white);
}

TEST_CASE("two passes end the game") {
  BoardState s(5);
  s = apply_move(s, Move::pass());
  CHECK_FALSE(s.game_over());
  s = apply_move(s, Move::pass());
  CHECK(s.game_over());
  CHECK_THROWS_AS(apply_move(s, Move::play(0, 0)), IllegalMoveError);
  CHECK_THROWS_AS(legal_moves(s), IllegalMoveError);
  try {
    apply_move(s, Move::pass());
  } catch (const IllegalMoveError& e) {
    CHECK(e.reason() == MoveError::game_over);
  }
}

TEST_CASE("pass resets after a play") {
  BoardState s(5);
  s = apply_move(s, Move::pass());
  s = apply_move(s, Move::play(1, 1));
  s = apply_move(s, Move::pass());
  CHECK_FALSE(s.game_over());
}

TEST_CASE("empty board scores komi for white") {
  for (int n : {5, 9, 19}) {
    const ScoreResult r = score_tromp_taylor(BoardState(n));
    CHECK(r.black_points == 0);
    CHECK(r.white_points == doctest::Approx(7.5));
    CHECK(r.winner == Color::white);
    CHECK(r.margin == doctest::Approx(7.5));
  }
}

TEST_CASE("black filling the board wins by area minus komi") {
  const BoardState s = BoardState::from_diagram({"XXXXX", "XXXXX", "XX.XX", "XXXXX", "XXXXX"}, Color::white);
  const ScoreResult r = score_tromp_taylor(s);
  CHECK(r.black_points == 25);
  CHECK(r.winner == Color::black);
  CHECK(r.margin == doctest::Approx(25 - 7.5));
}

TEST_CASE("dame points are neutral") {
  const BoardState s = BoardState::from_diagram({"X.O..", "X.O..", "X.O..", "X.O..", "X.O.."}, Color::black, 0.5);
  const ScoreResult r = score_tromp_taylor(s);
  CHECK(r.black_points == 5);
  CHECK(r.white_points == doctest::Approx(15 + 0.5));
  CHECK(r.neutral_points == 5);
}

TEST_CASE("scoring matches the flood-fill oracle on random playouts") {
  Rng rng(11);
  for (int n : {5, 7, 9}) {
    for (int g = 0; g < 60; ++g) {
      const BoardState end = oracle::random_playout(n, rng);
      const ScoreResult r = score_tromp_taylor(end);
      const oracle::Score o = oracle::tromp_taylor(end.grid(), n, end.komi());
      CHECK(r.black_points == o.black);
      CHECK(r.white_points == o.white);
    }
  }
}

TEST_CASE("legal_moves agrees with apply_move on every vertex") {
  Rng rng(5);
  for (int g = 0; g < 20; ++g) {
    std::vector<BoardState> trace;
    oracle::random_playout(5, rng, kDefaultKomi, &trace);
    for (std::size_t t = 0; t + 1 < trace.size(); t += 3) {
      const BoardState& s = trace[t];
      if (s.game_over()) continue;
      std::set<int> listed;
      for (const Move& m : legal_moves(s)) listed.insert(m.index(5));
      for (int idx = 0; idx <= 25; ++idx) {
        bool ok = true;
        try {
          apply_move(s, Move::from_index(idx, 5));
        } catch (const IllegalMoveError&) {
          ok = false;
        }
        CHECK(ok == (listed.count(idx) == 1));
      }
      const auto mask = legal_move_mask(s);
      for (int idx = 0; idx <= 25; ++idx) CHECK((mask[idx] != 0) == (listed.count(idx) == 1));
    }
  }
}

TEST_CASE("send-two-return-one recapture is blocked by superko") {
  const BoardState s = send_two_return_one();
  CHECK(s.at(0, 1) == Color::empty);
  CHECK(s.at(0, 2) == Color::empty);
  CHECK(s.at(0, 0) == Color::black);
  CHECK(probe_move(s, Move::play(0, 1)) == MoveError::superko);
  try {
    apply_move(s, Move::play(0, 1));
    FAIL("expected superko");
  } catch (const IllegalMoveError& e) {
    CHECK(e.reason() == MoveError::superko);
  }
  // Other moves stay available, including playing the far point.
  CHECK(probe_move(s, Move::play(0, 2)) == MoveError::none);
}

TEST_CASE("simple ko recapture is a superko violation") {
  BoardState s = BoardState::from_diagram({".XO..", "XO...", ".....", ".....", "....."}, Color::white);
  s = apply_move(s, Move::play(0, 0));  // white captures at the corner
  CHECK(s.at(0, 1) == Color::empty);
  CHECK(s.at(1, 0) == Color::black);
  CHECK(probe_move(s, Move::play(0, 1)) == MoveError::superko);
}

TEST_CASE("hash depends on grid only and is order independent") {
  BoardState a(7), b(7);
  a = apply_move(a, Move::play(1, 1));
  a = apply_move(a, Move::play(3, 3));
  a = apply_move(a, Move::play(5, 5));
  b = apply_move(b, Move::play(5, 5));
  b = apply_move(b, Move::play(3, 3));
  b = apply_move(b, Move::play(1, 1));
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() == position_hash(a));
  CHECK(a.with_to_move(Color::white).hash() == a.with_to_move(Color::black).hash());
  CHECK(BoardState(7).hash() != BoardState(9).hash());
}

TEST_CASE("incremental hash equals from-scratch hash through captures") {
  Rng rng(21);
  for (int g = 0; g < 10; ++g) {
    std::vector<BoardState> trace;
    oracle::random_playout(7, rng, kDefaultKomi, &trace);
    for (const BoardState& s : trace) CHECK(s.hash() == position_hash(s));
  }
}

TEST_CASE("gtp coordinates round trip and skip I") {
  CHECK(move_to_gtp(Move::play(18, 0), 19) == "A1");
  CHECK(move_to_gtp(Move::play(0, 8), 19) == "J19");
  CHECK(move_to_gtp(Move::pass(), 19) == "pass");
  CHECK(move_from_gtp("j19", 19) == Move::play(0, 8));
  CHECK_FALSE(move_from_gtp("I5", 9).has_value());
  CHECK_FALSE(move_from_gtp("A10", 9).has_value());
  for (int idx = 0; idx <= 81; ++idx) {
    const Move m = Move::from_index(idx, 9);
    CHECK(move_from_gtp(move_to_gtp(m, 9), 9) == m);
  }
}

TEST_CASE("pass-alive: two-eyed group is alive with its eyes") {
  const BoardState s = BoardState::from_diagram({".X.X...", "XXXX...", ".......", ".......", ".......",
                                                ".......", "......."},
                                               Color::white);
  const VertexMask m = pass_alive_regions(s, Color::black);
  for (int c = 0; c < 4; ++c) CHECK(m[c] == 1);
  for (int c = 0; c < 4; ++c) CHECK(m[7 + c] == 1);
  CHECK(m[2 * 7] == 0);
}

TEST_CASE("pass-alive: single eye and lone stones are not alive") {
  const BoardState one_eye = BoardState::from_diagram({".X.....", "XX.....", ".......", ".......", ".......",
                                                      ".......", "......."},
                                                     Color::white);
  const VertexMask m = pass_alive_regions(one_eye, Color::black);
  CHECK(std::count(m.begin(), m.end(), 1) == 0);
  const VertexMask e = pass_alive_regions(BoardState(7), Color::white);
  CHECK(std::count(e.begin(), e.end(), 1) == 0);
}

TEST_CASE("pass-alive matches the brute-force oracle on random sparse corners") {
  // Random blocks near a corner on 5x5 with a few empties left for the search.
  Rng rng(77);
  int checked = 0;
  for (int trial = 0; trial < 400 && checked < 40; ++trial) {
    std::vector<std::string> rows(5, std::string(5, '.'));
    for (auto& r : rows) {
      for (auto& ch : r) {
        const double u = uniform01(rng);
        ch = u < 0.55 ? 'X' : (u < 0.7 ? 'O' : '.');
      }
    }
    BoardState s(5);
    try {
      s = BoardState::from_diagram(rows, Color::white);
    } catch (const std::exception&) {
      continue;
    }
    int empties = 0;
    for (Color c : s.grid()) empties += c == Color::empty;
    if (empties > 9) continue;
    try {
      for (Color c : {Color::black, Color::white}) {
        CHECK(pass_alive_regions(s, c) == oracle::pass_alive(s, c, 200000));
      }
      ++checked;
    } catch (const oracle::SearchBudgetExceeded&) {
    }
  }
  CHECK(checked >= 20);
}

TEST_CASE("pass-alive is monotone under adding stones outside it") {
  Rng rng(3);
  const BoardState base = BoardState::from_diagram({".X.X...", "XXXX...", ".......", ".......", ".......",
                                                   ".......", "......."},
                                                  Color::black);
  const VertexMask before = pass_alive_regions(base, Color::black);
  for (int idx = 0; idx < base.area(); ++idx) {
    if (base.at_index(idx) != Color::empty || before[idx]) continue;
    BoardState t = base.with_to_move(Color::black);
    if (probe_move(t, Move::from_index(idx, 7)) != MoveError::none) continue;
    t = apply_move(t, Move::from_index(idx, 7));
    const VertexMask after = pass_alive_regions(t, Color::black);
    for (int v = 0; v < base.area(); ++v) {
      if (before[v]) CHECK(after[v] == 1);
    }
  }
}

TEST_CASE("pass-alive matches the brute-force oracle on the 7x7 suite") {
  const auto& suite = testutil::benson_suite_7x7();
  REQUIRE(suite.size() >= 20);
  for (std::size_t i = 0; i < suite.size(); ++i) {
    INFO("position " << i + 1);
    const BoardState s = BoardState::from_diagram(suite[i], Color::black);
    for (Color c : {Color::black, Color::white}) CHECK(pass_alive_regions(s, c) == oracle::pass_alive(s, c));
  }
  // A few by hand: both sides two-eyed; a 3x3 eye that can be filled; a lone-eyed white group.
  auto count = [](const VertexMask& m) { return std::count(m.begin(), m.end(), 1); };
  const BoardState both = BoardState::from_diagram(suite[0], Color::black);
  CHECK(count(pass_alive_regions(both, Color::black)) == 29);
  CHECK(count(pass_alive_regions(both, Color::white)) == 20);
  const BoardState big_eye = BoardState::from_diagram(suite[5], Color::black);
  CHECK(count(pass_alive_regions(big_eye, Color::black)) == 0);
  const BoardState one_eye = BoardState::from_diagram(suite[1], Color::black);
  CHECK(count(pass_alive_regions(one_eye, Color::white)) == 0);
}
