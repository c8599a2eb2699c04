#include <sstream>

#include "advgo/gtp.hpp"
#include "advgo/nnet.hpp"
#include "doctest.h"

using namespace advgo;

namespace {

std::shared_ptr<const Evaluator> small_net() {
  return std::make_shared<NetworkEvaluator>(
      std::make_shared<const NetworkParameters>(init_network(NetworkConfig::desk_cnn(), 5)));
}

SearchConfig search(int visits) {
  SearchConfig s;
  s.visits = visits;
  s.seed = 3;
  return s;
}

}  // namespace

TEST_CASE("gtp framing") {
  GtpEngine e(std::make_shared<UniformEvaluator>(), search(4));
  CHECK(e.handle("protocol_version") == "= 2\n\n");
  CHECK(e.handle("7 protocol_version") == "=7 2\n\n");
  CHECK(e.handle("name") == "= advgo\n\n");
  CHECK(e.handle("version") == "= 0.1.0\n\n");
  CHECK(e.handle("known_command genmove") == "= true\n\n");
  CHECK(e.handle("known_command fly") == "= false\n\n");
  CHECK(e.handle("") == "");
  CHECK(e.handle("# comment") == "");
  CHECK(e.handle("frobnicate") == "? unknown command\n\n");
  CHECK(e.handle("3 frobnicate") == "?3 unknown command\n\n");
  CHECK(e.handle("boardsize 4") == "? unacceptable size\n\n");
  CHECK(e.handle("boardsize x") == "? syntax error\n\n");
  CHECK(e.handle("komi abc") == "? syntax error\n\n");
  const std::string list = "\n" + e.handle("list_commands").substr(2);
  for (const char* c : {"protocol_version", "name", "version", "boardsize", "clear_board", "komi", "play", "genmove",
                        "showboard", "quit"}) {
    CHECK(list.find(std::string("\n") + c) != std::string::npos);
  }
  CHECK_FALSE(e.quit_requested());
  CHECK(e.handle("quit") == "=\n\n");
  CHECK(e.quit_requested());
}

TEST_CASE("gtp play and genmove") {
  GtpEngine e(small_net(), search(8));
  CHECK(e.handle("boardsize 9") == "=\n\n");
  CHECK(e.handle("clear_board") == "=\n\n");
  CHECK(e.board().size() == 9);
  CHECK(e.handle("play b A1") == "=\n\n");
  CHECK(e.board().at(8, 0) == Color::black);
  CHECK(e.handle("play b A1") == "? illegal move\n\n");
  CHECK(e.handle("play w A1") == "? illegal move\n\n");
  CHECK(e.handle("play w Z9") == "? syntax error\n\n");
  CHECK(e.handle("play purple B2") == "? syntax error\n\n");

  const std::string r = e.handle("genmove w");
  REQUIRE(r.size() > 4);
  CHECK(r.substr(0, 2) == "= ");
  const std::string v = r.substr(2, r.size() - 4);
  const auto m = move_from_gtp(v, 9);
  REQUIRE(m.has_value());
  CHECK(e.board().move_count() == 2);

  const std::string board = e.handle("showboard");
  CHECK(board.rfind("= ", 0) == 0);
  CHECK(board.find('X') != std::string::npos);
}

TEST_CASE("gtp sessions never produce an illegal genmove") {
  // Mirror every accepted command on a separate board and replay each
  // generated move against the rules.
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const int size = seed % 2 ? 5 : 7;
    GtpEngine e(seed % 3 == 0 ? std::shared_ptr<const Evaluator>(std::make_shared<UniformEvaluator>()) : small_net(),
                search(static_cast<int>(2 + seed)));
    REQUIRE(e.handle("boardsize " + std::to_string(size)) == "=\n\n");
    BoardState mirror(size);
    Rng rng(seed);
    for (int ply = 0; ply < 80 && !mirror.game_over(); ++ply) {
      const Color c = mirror.to_move();
      const std::string cname = c == Color::black ? "b" : "w";
      if (uniform01(rng) < 0.5) {
        const std::string r = e.handle("genmove " + cname);
        REQUIRE(r.rfind("= ", 0) == 0);
        const auto m = move_from_gtp(r.substr(2, r.size() - 4), size);
        REQUIRE(m.has_value());
        REQUIRE(probe_move(mirror, *m) == MoveError::none);
        mirror = apply_move(mirror, *m);
      } else {
        auto moves = legal_moves(mirror);
        const Move m = moves[uniform_index(rng, moves.size())];
        REQUIRE(e.handle("play " + cname + " " + move_to_gtp(m, size)) == "=\n\n");
        mirror = apply_move(mirror, m);
      }
      REQUIRE(e.board().grid() == mirror.grid());
    }
  }
}

TEST_CASE("gtp genmove with an opponent model") {
  GtpEngine e(small_net(), search(6), std::make_shared<UniformEvaluator>());
  REQUIRE(e.handle("boardsize 5") == "=\n\n");
  BoardState mirror(5);
  for (int i = 0; i < 10 && !mirror.game_over(); ++i) {
    const std::string r = e.handle(std::string("genmove ") + (mirror.to_move() == Color::black ? "b" : "w"));
    const auto m = move_from_gtp(r.substr(2, r.size() - 4), 5);
    REQUIRE(m.has_value());
    REQUIRE(probe_move(mirror, *m) == MoveError::none);
    mirror = apply_move(mirror, *m);
  }
}

TEST_CASE("run_gtp stops at quit") {
  GtpEngine e(std::make_shared<UniformEvaluator>(), search(1));
  std::istringstream in("1 name\n\nquit\nname\n");
  std::ostringstream out;
  run_gtp(e, in, out);
  CHECK(out.str() == "=1 advgo\n\n=\n\n");
}

TEST_CASE("gtp genmove is reproducible") {
  auto session = [] {
    GtpEngine e(small_net(), search(8));
    e.handle("boardsize 7");
    std::string all;
    for (int i = 0; i < 12; ++i) all += e.handle(i % 2 ? "genmove w" : "genmove b");
    return all;
  };
  CHECK(session() == session());
}
