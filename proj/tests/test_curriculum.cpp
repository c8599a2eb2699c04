#include <filesystem>
#include <fstream>
#include <sstream>

#include "advgo/curriculum.hpp"
#include "doctest.h"

using namespace advgo;
namespace fs = std::filesystem;

namespace {

CurriculumState with_outcomes(CurriculumState s, int wins, int games) {
  for (int i = 0; i < games; ++i) s.tracker.add(i < wins);
  return s;
}

Checkpoint point(double wr, std::int64_t step) {
  Checkpoint c;
  c.id = "c" + std::to_string(step);
  c.win_rate = wr;
  c.step_count = step;
  return c;
}

std::vector<Checkpoint> series(const std::vector<double>& rates) {
  std::vector<Checkpoint> out;
  for (std::size_t i = 0; i < rates.size(); ++i) out.push_back(point(rates[i], static_cast<std::int64_t>(i + 1)));
  return out;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string param_bytes(const NetworkParameters& p, const std::string& tag) {
  const fs::path path = fs::temp_directory_path() / ("advgo_params_" + tag + ".ckpt");
  save_checkpoint(p, path.string());
  std::string b = file_bytes(path);
  fs::remove(path);
  return b;
}

// Small enough for a unit test: a few games per round, two SGD steps.
TrainConfig tiny_train() {
  TrainConfig t;
  t.games_per_round = 4;
  t.steps_per_round = 2;
  t.batch_size = 8;
  t.eval_every = 1;
  t.eval_games = 2;
  t.workers = 1;
  t.window_m0 = 500;
  return t;
}

GenConfig tiny_gen() {
  GenConfig g;
  g.board_size_distribution = {{5, 1.0}};
  g.selfplay_visits = 2;
  return g;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("doubling schedule") {
  CHECK(doubling_schedule(1, 256) == std::vector<int>{1, 2, 4, 8, 16, 32, 64, 128, 256});
  CHECK(doubling_schedule(3, 20) == std::vector<int>{3, 6, 12, 20});
  CHECK_THROWS_AS(doubling_schedule(0, 4), ConfigError);
}

TEST_CASE("should_advance thresholds") {
  CurriculumState low = make_curriculum(doubling_schedule(1, 256));
  CHECK_THROWS_AS(should_advance(low), InsufficientData);
  CHECK_THROWS_AS(should_advance(with_outcomes(low, 199, 199)), InsufficientData);
  CHECK(should_advance(with_outcomes(low, 150, 200)));
  CHECK_FALSE(should_advance(with_outcomes(low, 149, 200)));

  CurriculumState high = low;
  high.victim_visits = 256;
  high.threshold = high.threshold_for(256);
  CHECK(high.threshold == 0.90);
  CHECK_FALSE(should_advance(with_outcomes(high, 170, 200)));
  CHECK(should_advance(with_outcomes(high, 180, 200)));
  // only the most recent W outcomes count
  CurriculumState rolling = with_outcomes(low, 0, 100);
  rolling = with_outcomes(rolling, 200, 200);
  CHECK(rolling.tracker.size() == 200);
  CHECK(rolling.tracker.wins() == 200);
}

TEST_CASE("advance steps through the schedule") {
  CurriculumState s = make_curriculum(doubling_schedule(1, 256));
  s.victim_visits = 4;
  s = with_outcomes(s, 160, 200);
  REQUIRE(should_advance(s));
  const CurriculumState n = advance(s);
  CHECK(n.victim_visits == 8);
  CHECK(n.tracker.size() == 0);
  REQUIRE(n.events.size() == 1);
  CHECK(n.events[0].from_visits == 4);
  CHECK(n.events[0].to_visits == 8);
  CHECK(n.events[0].wins == 160);
  CHECK(n.events[0].wins >= n.events[0].threshold * n.events[0].games);

  CurriculumState top = s;
  top.victim_visits = 128;
  const CurriculumState at_cutoff = advance(with_outcomes(top, 160, 200));
  CHECK(at_cutoff.victim_visits == 256);
  CHECK(at_cutoff.threshold == 0.90);
  CHECK_THROWS_AS(advance(with_outcomes(at_cutoff, 200, 200)), ScheduleExhausted);
}

TEST_CASE("curriculum state round trip and resumability") {
  CurriculumState s = make_curriculum({1, 2, 4, 8}, 4, 10);
  s.iteration = 3;
  s.games_played = 1234;
  s.train_steps = 77;
  s = advance(with_outcomes(s, 9, 10));
  s = with_outcomes(s, 3, 7);
  const CurriculumState back = CurriculumState::deserialize(s.serialize());
  CHECK(back.serialize() == s.serialize());
  CHECK(back.tracker.outcomes() == s.tracker.outcomes());
  CHECK(back.events.size() == 1);

  // identical continuation from the restored state
  auto run = [](CurriculumState c) {
    for (int i = 0; i < 40; ++i) {
      c.tracker.add(i % 5 != 0);
      if (c.tracker.full() && should_advance(c) && c.victim_visits != c.visit_schedule.back()) c = advance(c);
    }
    return c.serialize();
  };
  CHECK(run(back) == run(s));
  CHECK_THROWS_AS(CurriculumState::deserialize("phase = attack\n"), ConfigError);
}

TEST_CASE("select_checkpoint favors stable plateaus") {
  // smoothed: 94.5 93.33 94.67 93.33 95 95.5
  const auto s = series({0.90, 0.99, 0.91, 0.94, 0.95, 0.96});
  CHECK(select_checkpoint(s) == 5);
  const auto sm = smoothed_win_rates(s);
  CHECK(sm[0] == doctest::Approx(0.945));
  CHECK(sm[2] == doctest::Approx((0.99 + 0.91 + 0.94) / 3));
  CHECK(select_checkpoint(series({0.2, 0.8, 0.8, 0.8, 0.8, 0.2})) == 2);
  CHECK(select_checkpoint(series({0.5, 0.5, 0.5, 0.5})) == 0);
  CHECK_THROWS_AS(select_checkpoint(series({0.1, 0.2})), InsufficientData);
}

TEST_CASE("plateau rule") {
  CHECK_FALSE(plateaued({0.5, 0.6, 0.7}));
  CHECK(plateaued({0.5, 0.6, 0.7, 0.705, 0.709, 0.70}));
  CHECK_FALSE(plateaued({0.5, 0.6, 0.7, 0.705, 0.711, 0.70}));
  CHECK(plateaued({0.9, 0.8, 0.7, 0.6}));
}

TEST_CASE("defense with no adversary games is plain self-play") {
  const NetworkParameters victim = init_network(NetworkConfig::desk_cnn(), 3);
  const auto adv_params = std::make_shared<const NetworkParameters>(init_network(NetworkConfig::desk_cnn(), 4));
  const std::string before = param_bytes(*adv_params, "adv_before");
  DefensePlan plan;
  plan.adversary_fraction = 0;
  plan.selfplay_visits = 2;
  plan.victim_visits = 2;
  plan.adversary_visits = 2;
  const auto r = run_defense_iteration(victim, std::make_shared<NetworkEvaluator>(adv_params), plan,
                                       Budget{12, 1000}, tiny_train(), tiny_gen());
  CHECK(r.adversary_games == 0);
  CHECK(r.games == 12);
  CHECK(r.steps == 6);
  REQUIRE(r.series.size() == 3);
  for (std::size_t i = 1; i < r.series.size(); ++i) CHECK(r.series[i].step_count > r.series[i - 1].step_count);
  for (const auto& row : r.window_rows) CHECK(row.board_size == 5);
  CHECK(param_bytes(*adv_params, "adv_after") == before);
}

TEST_CASE("defense mixes in the configured adversary fraction") {
  const NetworkParameters victim = init_network(NetworkConfig::desk_cnn(), 3);
  const auto adv = std::make_shared<NetworkEvaluator>(
      std::make_shared<const NetworkParameters>(init_network(NetworkConfig::desk_cnn(), 4)));
  DefensePlan plan;
  plan.selfplay_visits = 1;
  plan.victim_visits = 1;
  plan.adversary_visits = 2;
  TrainConfig t = tiny_train();
  t.games_per_round = 25;
  t.steps_per_round = 1;
  t.eval_every = 4;
  const auto r = run_defense_iteration(victim, adv, plan, Budget{100, 1000}, t, tiny_gen());
  CHECK(r.games == 100);
  CHECK(r.adversary_games == 18);
  CHECK_THROWS_AS(run_defense_iteration(victim, nullptr, plan, Budget{}, t, tiny_gen()), ConfigError);
}

TEST_CASE("attack leaves the victim frozen and the curriculum monotone") {
  const auto victim_params = std::make_shared<const NetworkParameters>(init_network(NetworkConfig::desk_cnn(), 9));
  const std::string before = param_bytes(*victim_params, "victim_before");
  AttackPlan plan;
  plan.visit_schedule = {1, 2, 4};
  plan.tracker_window = 4;
  plan.adversary_visits = 4;
  const NetworkParameters adversary = init_network(NetworkConfig::desk_cnn(), 10);
  const auto r = run_attack_iteration(adversary, std::make_shared<NetworkEvaluator>(victim_params), plan,
                                      Budget{24, 1000}, tiny_train(), tiny_gen());
  CHECK(param_bytes(*victim_params, "victim_after") == before);
  REQUIRE_FALSE(r.curriculum_trace.empty());
  for (std::size_t i = 1; i < r.curriculum_trace.size(); ++i) CHECK(r.curriculum_trace[i] >= r.curriculum_trace[i - 1]);
  for (const auto& e : r.curriculum.events) {
    CHECK(e.games == 4);
    CHECK(e.wins >= e.threshold * e.games);
  }
  // every adversary row comes from the adversary's own moves
  CHECK(r.window_total > 0);
  CHECK(r.curriculum.games_played == r.games);
}

TEST_CASE("adversary beats a 1-visit uniform victim") {
  // The victim's net is uniform, so at one visit it always plays the first legal point.
  AttackPlan plan;
  plan.visit_schedule = {1};
  plan.tracker_window = 20;
  plan.adversary_visits = 16;
  TrainConfig t = tiny_train();
  t.games_per_round = 10;
  t.eval_every = 4;
  t.eval_games = 20;
  const auto r = run_attack_iteration(init_network(NetworkConfig::desk_cnn(), 12), std::make_shared<UniformEvaluator>(),
                                      plan, Budget{200, 1000}, t, tiny_gen());
  CHECK(r.stop == StopReason::target);
  CHECK(r.curriculum.tracker.rate() >= 0.75);
  CHECK(r.series.back().win_rate > 0.75);
}

TEST_CASE("self-play training reports win rates against its opponent") {
  AgentSpec base{"baseline", std::make_shared<UniformEvaluator>(), 1, false, true};
  const auto r = run_selfplay_training(init_network(NetworkConfig::desk_cnn(), 5), base, 2, 1, Budget{8, 1000},
                                       tiny_train(), tiny_gen());
  CHECK(r.adversary_games == 0);
  REQUIRE(r.series.size() == 2);
  CHECK(r.series[0].eval_games == 2);
  CHECK_THROWS_AS(run_selfplay_training(init_network(NetworkConfig::desk_cnn(), 5), AgentSpec{}, 2, 1, Budget{},
                                        tiny_train(), tiny_gen()),
                  ConfigError);
}

TEST_CASE("lineage report round trip") {
  LineageReport r;
  r.completed_phases = 2;
  r.completed_iterations = 1;
  r.agents.push_back({"victim-0", "victim", 0, "", "victim-0.ckpt", 10, 0, 0, 0, ""});
  r.agents.push_back({"victim-1", "victim", 1, "victim-0", "victim-1.ckpt", 30, 4, 8, 0.625, "budget"});
  const LineageReport back = LineageReport::deserialize(r.serialize());
  CHECK(back.serialize() == r.serialize());
  CHECK(back.latest("victim").id == "victim-1");
  CHECK_THROWS_AS(back.latest("adversary"), CheckpointMissing);
}

TEST_CASE("window save and load") {
  const fs::path d = fresh_dir("advgo_window_test");
  GenConfig g = tiny_gen();
  Agent a{"a", std::make_shared<UniformEvaluator>(), 1, nullptr, true, false};
  Rng rng(2);
  auto rows = to_rows(play_training_game(a, a, g, rng, Color::black, 5), RowMode::both_sides);
  Rng rng7(3);
  auto more = to_rows(play_training_game(a, a, g, rng7, Color::black, 7), RowMode::both_sides);
  rows.insert(rows.end(), more.begin(), more.end());
  save_window(d, "w", rows, 12345);
  const WindowSeed back = load_window(d, "w");
  CHECK(back.total == 12345);
  REQUIRE(back.rows.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back.rows[i].planes == rows[i].planes);
    CHECK(back.rows[i].policy_target == rows[i].policy_target);
  }
  CHECK(load_window(d, "absent").rows.empty());
  fs::remove_all(d);
}

namespace {

IteratedConfig tiny_iterated(int iterations) {
  IteratedConfig c;
  c.iterations = iterations;
  c.train = tiny_train();
  c.gen = tiny_gen();
  c.plan.defend.selfplay_visits = 1;
  c.plan.defend.victim_visits = 1;
  c.plan.defend.adversary_visits = 2;
  c.plan.attack.visit_schedule = {1, 2};
  c.plan.attack.tracker_window = 4;
  c.plan.attack.adversary_visits = 2;
  c.defend_budget = Budget{12, 1000};
  c.attack_budget = Budget{12, 1000};
  return c;
}

void seed_run(const fs::path& d) {
  save_checkpoint(init_network(NetworkConfig::desk_cnn(), 21), (d / "victim-0.ckpt").string());
  save_checkpoint(init_network(NetworkConfig::desk_cnn(), 22), (d / "adversary-0.ckpt").string());
}

}  // namespace

TEST_CASE("iterated training with zero iterations keeps only the seeds") {
  const fs::path d = fresh_dir("advgo_iter_zero");
  CHECK_THROWS_AS(run_iterated(tiny_iterated(0), d, false), CheckpointMissing);
  seed_run(d);
  const LineageReport r = run_iterated(tiny_iterated(0), d, false);
  REQUIRE(r.agents.size() == 2);
  CHECK(r.agents[0].id == "victim-0");
  CHECK(r.agents[1].id == "adversary-0");
  CHECK(r.completed_phases == 0);
  CHECK(fs::exists(d / "lineage.txt"));
  fs::remove_all(d);
}

TEST_CASE("iterated training resumes to the same result") {
  const fs::path a = fresh_dir("advgo_iter_a");
  const fs::path b = fresh_dir("advgo_iter_b");
  seed_run(a);
  seed_run(b);
  const IteratedConfig cfg = tiny_iterated(2);
  const LineageReport full = run_iterated(cfg, a, false);

  const LineageReport first = run_iterated(cfg, b, false, 1);
  CHECK(first.completed_phases == 1);
  const LineageReport second = run_iterated(cfg, b, true, 2);
  CHECK(second.completed_phases == 3);
  const LineageReport rest = run_iterated(cfg, b, true);
  CHECK(rest.serialize() == full.serialize());
  CHECK(file_bytes(a / "lineage.txt") == file_bytes(b / "lineage.txt"));
  for (const char* f : {"victim-1.ckpt", "adversary-1.ckpt", "victim-2.ckpt", "adversary-2.ckpt",
                        "adversary-2.curriculum.txt", "victim-2.series.csv", "victim-2.window", "victim-2.000.seg"}) {
    INFO(f);
    CHECK(file_bytes(a / f) == file_bytes(b / f));
  }

  // lineage is a chain, and windows carry their parent's row count forward
  REQUIRE(full.agents.size() == 6);
  CHECK(full.completed_iterations == 2);
  std::map<std::string, LineageEntry> by_id;
  for (const auto& e : full.agents) by_id[e.id] = e;
  for (const auto& e : full.agents) {
    if (e.iteration == 0) continue;
    const std::string expect = e.role + "-" + std::to_string(e.iteration - 1);
    CHECK(e.parent == expect);
    CHECK(e.window_total > by_id.at(expect).window_total);
  }
  CHECK(full.agents[2].role == "victim");
  CHECK(full.agents[3].role == "adversary");
  fs::remove_all(a);
  fs::remove_all(b);
}
