#include "advgo/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace advgo {

namespace fs = std::filesystem;

std::string phase_name(Phase p) { return p == Phase::attack ? "attack" : "defend"; }

Phase parse_phase(const std::string& s) {
  if (s == "attack") return Phase::attack;
  if (s == "defend") return Phase::defend;
  throw ConfigError("unknown phase: " + s);
}

std::string stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::plateau: return "plateau";
    case StopReason::budget: return "budget";
    case StopReason::target: return "target";
  }
  return "?";
}

// ---- win tracker / curriculum state -------------------------------------

void WinTracker::add(bool win) {
  outcomes_.push_back(win ? 1 : 0);
  while (outcomes_.size() > capacity_) outcomes_.pop_front();
}

int WinTracker::wins() const {
  int w = 0;
  for (auto o : outcomes_) w += o;
  return w;
}

double WinTracker::rate() const { return outcomes_.empty() ? 0.0 : static_cast<double>(wins()) / outcomes_.size(); }

std::vector<int> doubling_schedule(int first, int last) {
  if (first < 1 || last < first) throw ConfigError("bad visit schedule bounds");
  std::vector<int> out;
  for (long v = first; v <= last; v *= 2) out.push_back(static_cast<int>(v));
  if (out.back() != last) out.push_back(last);
  return out;
}

void CurriculumState::validate() const {
  if (visit_schedule.empty()) throw ConfigError("empty visit schedule");
  for (std::size_t i = 1; i < visit_schedule.size(); ++i) {
    if (visit_schedule[i] <= visit_schedule[i - 1]) throw ConfigError("visit schedule must increase");
  }
  if (std::find(visit_schedule.begin(), visit_schedule.end(), victim_visits) == visit_schedule.end()) {
    throw ConfigError("victim visits not on the schedule");
  }
  if (threshold != low_threshold && threshold != high_threshold) throw ConfigError("threshold must be low or high");
}

namespace {

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t"), b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw ConfigError("missing key: " + key);
  return it->second;
}

}  // namespace

std::string CurriculumState::serialize() const {
  std::ostringstream out;
  out << "phase = " << phase_name(phase) << "\n";
  out << "iteration = " << iteration << "\n";
  out << "visit_schedule = ";
  for (std::size_t i = 0; i < visit_schedule.size(); ++i) out << (i ? "," : "") << visit_schedule[i];
  out << "\nvictim_visits = " << victim_visits << "\n";
  out << "high_visit_cutoff = " << high_visit_cutoff << "\n";
  out << "low_threshold = " << exact(low_threshold) << "\n";
  out << "high_threshold = " << exact(high_threshold) << "\n";
  out << "threshold = " << exact(threshold) << "\n";
  out << "tracker_capacity = " << tracker.capacity() << "\n";
  out << "tracker = ";
  for (auto o : tracker.outcomes()) out << static_cast<int>(o);
  out << "\ngames_played = " << games_played << "\n";
  out << "train_steps = " << train_steps << "\n";
  out << "events = " << events.size() << "\n";
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    out << "event." << i << " = " << e.from_visits << "," << e.to_visits << "," << e.wins << "," << e.games << ","
        << exact(e.threshold) << "," << e.games_played << "\n";
  }
  return out.str();
}

CurriculumState CurriculumState::deserialize(const std::string& text) {
  const auto kv = parse_kv(text);
  CurriculumState s;
  s.phase = parse_phase(need(kv, "phase"));
  s.iteration = std::stoi(need(kv, "iteration"));
  s.visit_schedule.clear();
  for (const auto& v : split(need(kv, "visit_schedule"), ',')) s.visit_schedule.push_back(std::stoi(v));
  s.victim_visits = std::stoi(need(kv, "victim_visits"));
  s.high_visit_cutoff = std::stoi(need(kv, "high_visit_cutoff"));
  s.low_threshold = std::stod(need(kv, "low_threshold"));
  s.high_threshold = std::stod(need(kv, "high_threshold"));
  s.threshold = std::stod(need(kv, "threshold"));
  s.tracker = WinTracker(std::stoul(need(kv, "tracker_capacity")));
  for (char c : need(kv, "tracker")) s.tracker.add(c == '1');
  s.games_played = std::stoll(need(kv, "games_played"));
  s.train_steps = std::stoll(need(kv, "train_steps"));
  const int n = std::stoi(need(kv, "events"));
  for (int i = 0; i < n; ++i) {
    const auto f = split(need(kv, "event." + std::to_string(i)), ',');
    if (f.size() != 6) throw ConfigError("bad event line");
    s.events.push_back({std::stoi(f[0]), std::stoi(f[1]), std::stoi(f[2]), std::stoi(f[3]), std::stod(f[4]),
                        std::stoll(f[5])});
  }
  s.validate();
  return s;
}

CurriculumState make_curriculum(std::vector<int> schedule, int high_visit_cutoff, std::size_t window) {
  CurriculumState s;
  s.visit_schedule = std::move(schedule);
  if (s.visit_schedule.empty()) throw ConfigError("empty visit schedule");
  s.victim_visits = s.visit_schedule.front();
  s.high_visit_cutoff = high_visit_cutoff;
  s.threshold = s.threshold_for(s.victim_visits);
  s.tracker = WinTracker(window);
  s.validate();
  return s;
}

bool should_advance(const CurriculumState& state) {
  if (!state.tracker.full()) {
    throw InsufficientData("need " + std::to_string(state.tracker.capacity()) + " games at the current rung, have " +
                           std::to_string(state.tracker.size()));
  }
  // compare counts to keep the boundary exact: wins / n >= threshold
  const double need_wins = state.threshold_for(state.victim_visits) * static_cast<double>(state.tracker.size());
  return state.tracker.wins() >= need_wins - 1e-9;
}

CurriculumState advance(const CurriculumState& state) {
  const auto it = std::find(state.visit_schedule.begin(), state.visit_schedule.end(), state.victim_visits);
  if (it == state.visit_schedule.end() || it + 1 == state.visit_schedule.end()) {
    throw ScheduleExhausted("no rung after " + std::to_string(state.victim_visits) + " visits");
  }
  CurriculumState next = state;
  AdvanceEvent e;
  e.from_visits = state.victim_visits;
  e.to_visits = *(it + 1);
  e.wins = state.tracker.wins();
  e.games = static_cast<int>(state.tracker.size());
  e.threshold = state.threshold_for(state.victim_visits);
  e.games_played = state.games_played;
  next.events.push_back(e);
  next.victim_visits = e.to_visits;
  next.threshold = next.threshold_for(next.victim_visits);
  next.tracker.clear();
  return next;
}

// ---- checkpoint selection ------------------------------------------------

std::vector<double> smoothed_win_rates(const std::vector<Checkpoint>& series) {
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    double sum = 0;
    int n = 0;
    for (std::size_t j = i == 0 ? 0 : i - 1; j <= std::min(i + 1, series.size() - 1); ++j) {
      sum += series[j].win_rate;
      ++n;
    }
    out[i] = sum / n;
  }
  return out;
}

std::size_t select_checkpoint(const std::vector<Checkpoint>& series) {
  if (series.size() < 3) throw InsufficientData("checkpoint selection needs at least 3 evaluated checkpoints");
  const auto s = smoothed_win_rates(series);
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i] > s[best] + 1e-12) best = i;
  }
  return best;
}

bool plateaued(const std::vector<double>& win_rates, int points, double delta) {
  if (static_cast<int>(win_rates.size()) <= points) return false;
  const auto split_at = win_rates.end() - points;
  const double before = *std::max_element(win_rates.begin(), split_at);
  const double recent = *std::max_element(split_at, win_rates.end());
  return recent < before + delta;
}

// ---- phases --------------------------------------------------------------

namespace {

enum : std::uint64_t { kTagGen = 1, kTagTrain = 2, kTagEval = 3 };

int main_board_size(const GenConfig& gen) {
  int best = gen.board_size_distribution.begin()->first;
  double w = -1;
  for (const auto& [size, p] : gen.board_size_distribution) {
    if (p > w) {
      w = p;
      best = size;
    }
  }
  return best;
}

struct Trainer {
  NetworkParameters params;
  SgdState sgd;
  DataWindow window;
  const TrainConfig& cfg;

  Trainer(const NetworkParameters& init, const TrainConfig& c, const WindowSeed& history)
      : params(init), window(c.window_m0), cfg(c) {
    if (history.total > 0 || !history.rows.empty()) window.warm_start(history.rows, history.total);
  }

  std::shared_ptr<const NetworkParameters> snapshot() const { return std::make_shared<const NetworkParameters>(params); }

  void train(std::uint64_t seed) {
    if (window.empty()) return;
    Rng rng(seed);
    for (int s = 0; s < cfg.steps_per_round; ++s) {
      const TrainingBatch batch = window.sample_batch(static_cast<std::size_t>(cfg.batch_size), rng);
      sgd_step(params, gradients(params, batch), cfg.learning_rate, cfg.momentum, sgd, cfg.l2);
    }
  }
};

Checkpoint make_checkpoint(const std::string& prefix, std::shared_ptr<const NetworkParameters> p, std::int64_t games,
                           const MatchResult& m, int victim_visits) {
  Checkpoint c;
  c.id = prefix + "-s" + std::to_string(p->step_count);
  c.params = std::move(p);
  c.step_count = c.params->step_count;
  c.games = games;
  c.eval_wins = m.a_wins;
  c.eval_games = static_cast<int>(m.games.size());
  c.win_rate = m.a_win_rate();
  c.victim_visits = victim_visits;
  return c;
}

MatchSpec eval_spec(const TrainConfig& train, const GenConfig& gen, std::uint64_t seed) {
  MatchSpec m;
  m.games = train.eval_games;
  m.board_size = main_board_size(gen);
  m.komi = gen.komi;
  m.random_opening_moves = train.eval_opening_moves;
  m.move_limit_factor = gen.move_limit_factor;
  m.search_base = gen.search_base;
  m.seed = seed;
  m.workers = train.workers;
  return m;
}

void finish(PhaseResult& r, Trainer& t, std::int64_t start_steps) {
  r.final_params = t.snapshot();
  r.window_rows.assign(t.window.rows().begin(), t.window.rows().end());
  r.window_total = t.window.total_rows();
  r.steps = t.params.step_count - start_steps;
}

}  // namespace

namespace {

// Self-play plus an interleaved fraction of games against a frozen adversary;
// only the learner's moves become rows. `evaluate_with` scores a snapshot.
PhaseResult run_mixed(const NetworkParameters& init, std::shared_ptr<const Evaluator> frozen_adversary,
                      double fraction, int selfplay_visits, int victim_visits, int adversary_visits,
                      std::optional<DefensePlan> plateau, const Budget& budget, const TrainConfig& train,
                      const GenConfig& gen, const WindowSeed& history, const std::string& id_prefix,
                      const std::function<MatchResult(std::shared_ptr<const NetworkParameters>, std::uint64_t)>&
                          evaluate_with,
                      int eval_visits, int pass_alive_below) {
  if (fraction < 0 || fraction > 1) throw ConfigError("adversary_fraction in [0,1]");
  if (fraction > 0 && !frozen_adversary) throw ConfigError("adversarial games need a frozen adversary");
  GenConfig g = gen;
  g.mode = fraction > 0 ? GenMode::mixed : GenMode::selfplay;
  g.adversary_fraction = fraction;
  g.pass_alive_defense = victim_visits < pass_alive_below;
  g.validate();

  Trainer t(init, train, history);
  const std::int64_t start_steps = t.params.step_count;
  PhaseResult r;
  r.phase = Phase::defend;
  std::vector<double> rates;
  std::int64_t games = 0;

  auto evaluate = [&](int round) {
    const auto snap = t.snapshot();
    const MatchResult m = evaluate_with(snap, derive_seed(train.seed, {kTagEval, static_cast<std::uint64_t>(round)}));
    r.series.push_back(make_checkpoint(id_prefix, snap, games, m, eval_visits));
    rates.push_back(r.series.back().win_rate);
  };

  for (int round = 0;; ++round) {
    if (games >= budget.max_games || t.params.step_count - start_steps >= budget.max_steps) {
      r.stop = StopReason::budget;
      break;
    }
    const auto net = std::make_shared<NetworkEvaluator>(t.snapshot());
    Agent self{id_prefix, net, selfplay_visits, nullptr, true, false};
    Agent vic{id_prefix, net, victim_visits, nullptr, true, false};
    Agent adv{"frozen-adversary", frozen_adversary, adversary_visits, net, false, true};
    const std::int64_t first = games;
    auto schedule = [&](int i) {
      const std::int64_t global = first + i;
      if (!interleave_pick(global, fraction)) return GameAssignment{&self, &self, Color::black};
      const auto k = static_cast<std::int64_t>(std::floor(global * fraction));
      return GameAssignment{&vic, &adv, k % 2 ? Color::white : Color::black};
    };
    const auto recs = play_games(train.games_per_round, derive_seed(train.seed, {kTagGen}), g, schedule,
                                 train.workers, first);
    std::vector<TrainingRow> rows;
    for (const auto& rec : recs) {
      const bool adversarial = rec.adversary_color != Color::empty;
      r.adversary_games += adversarial;
      auto add = to_rows(rec, adversarial ? RowMode::non_adversary_only : RowMode::both_sides);
      std::move(add.begin(), add.end(), std::back_inserter(rows));
    }
    games += static_cast<std::int64_t>(recs.size());
    t.window.append(std::move(rows));
    t.train(derive_seed(train.seed, {kTagTrain, static_cast<std::uint64_t>(round)}));
    if ((round + 1) % train.eval_every == 0) {
      evaluate(round);
      if (plateau && plateaued(rates, plateau->plateau_points, plateau->plateau_delta)) {
        r.stop = StopReason::plateau;
        break;
      }
    }
  }
  if (r.series.empty() || r.series.back().step_count != t.params.step_count) evaluate(-1);
  r.games = games;
  finish(r, t, start_steps);
  return r;
}

}  // namespace

PhaseResult run_defense_iteration(const NetworkParameters& victim, std::shared_ptr<const Evaluator> frozen_adversary,
                                  const DefensePlan& plan, const Budget& budget, const TrainConfig& train,
                                  const GenConfig& gen, const WindowSeed& history, const std::string& id_prefix) {
  if (!frozen_adversary) throw ConfigError("defense needs a frozen adversary");
  auto evaluate = [&](std::shared_ptr<const NetworkParameters> snap, std::uint64_t seed) {
    MatchSpec m = eval_spec(train, gen, seed);
    m.a = {id_prefix, std::make_shared<NetworkEvaluator>(snap), plan.eval_victim_visits(), false};
    m.b = {"frozen-adversary", frozen_adversary, plan.eval_adversary_visits(), true};
    m.pass_alive_defense = plan.eval_victim_visits() < plan.pass_alive_defense_below;
    return run_match(m);
  };
  return run_mixed(victim, frozen_adversary, plan.adversary_fraction, plan.selfplay_visits, plan.victim_visits,
                   plan.adversary_visits, plan, budget, train, gen, history, id_prefix, evaluate,
                   plan.eval_victim_visits(), plan.pass_alive_defense_below);
}

PhaseResult run_selfplay_training(const NetworkParameters& init, const AgentSpec& eval_opponent, int selfplay_visits,
                                  int eval_visits, const Budget& budget, const TrainConfig& train,
                                  const GenConfig& gen, const WindowSeed& history, const std::string& id_prefix) {
  if (!eval_opponent.net) throw ConfigError("self-play training needs an evaluation opponent");
  auto evaluate = [&](std::shared_ptr<const NetworkParameters> snap, std::uint64_t seed) {
    MatchSpec m = eval_spec(train, gen, seed);
    m.a = {id_prefix, std::make_shared<NetworkEvaluator>(snap), eval_visits, false};
    m.b = eval_opponent;
    return run_match(m);
  };
  return run_mixed(init, nullptr, 0.0, selfplay_visits, selfplay_visits, 1, std::nullopt, budget, train, gen, history,
                   id_prefix, evaluate, eval_visits, 0);
}

PhaseResult run_attack_iteration(const NetworkParameters& adversary, std::shared_ptr<const Evaluator> frozen_victim,
                                 const AttackPlan& plan, const Budget& budget, const TrainConfig& train,
                                 const GenConfig& gen, const WindowSeed& history, const std::string& id_prefix) {
  if (!frozen_victim) throw ConfigError("attack needs a frozen victim");
  GenConfig g = gen;
  g.mode = GenMode::victimplay;
  g.validate();

  Trainer t(adversary, train, history);
  const std::int64_t start_steps = t.params.step_count;
  PhaseResult r;
  r.phase = Phase::attack;
  r.curriculum = make_curriculum(plan.visit_schedule, plan.high_visit_cutoff, plan.tracker_window);
  CurriculumState& cs = r.curriculum;
  std::int64_t games = 0;

  auto evaluate = [&](int round) {
    const auto snap = t.snapshot();
    MatchSpec m = eval_spec(train, g, derive_seed(train.seed, {kTagEval, static_cast<std::uint64_t>(round)}));
    m.a = {id_prefix, std::make_shared<NetworkEvaluator>(snap), plan.adversary_visits, true};
    const int vv = plan.eval_victim_visits > 0 ? plan.eval_victim_visits : cs.victim_visits;
    m.b = {"frozen-victim", frozen_victim, vv, false};
    m.pass_alive_defense = vv < plan.pass_alive_defense_below;
    r.series.push_back(make_checkpoint(id_prefix, snap, games, run_match(m), vv));
  };

  bool done = false;
  for (int round = 0; !done; ++round) {
    if (games >= budget.max_games || t.params.step_count - start_steps >= budget.max_steps) {
      r.stop = StopReason::budget;
      break;
    }
    r.curriculum_trace.push_back(cs.victim_visits);
    const auto net = std::make_shared<NetworkEvaluator>(t.snapshot());
    Agent adv{id_prefix, net, plan.adversary_visits, frozen_victim, true, true};
    Agent vic{"frozen-victim", frozen_victim, cs.victim_visits, nullptr, false, false};
    g.pass_alive_defense = cs.victim_visits < plan.pass_alive_defense_below;
    const std::int64_t first = games;
    auto schedule = [&](int i) {
      return GameAssignment{&adv, &vic, (first + i) % 2 ? Color::white : Color::black};
    };
    const auto recs = play_games(train.games_per_round, derive_seed(train.seed, {kTagGen}), g, schedule,
                                 train.workers, first);
    std::vector<TrainingRow> rows;
    bool rung_done = false;
    for (const auto& rec : recs) {
      auto add = to_rows(rec, RowMode::adversary_only);
      std::move(add.begin(), add.end(), std::back_inserter(rows));
      ++cs.games_played;
      // games after an advancement in this round were played at the old rung
      if (rung_done) continue;
      cs.tracker.add(rec.winner == rec.adversary_color);
      if (cs.tracker.full() && should_advance(cs)) {
        rung_done = true;
        if (cs.victim_visits == cs.visit_schedule.back()) done = true;
        else cs = advance(cs);
      }
    }
    games += static_cast<std::int64_t>(recs.size());
    t.window.append(std::move(rows));
    t.train(derive_seed(train.seed, {kTagTrain, static_cast<std::uint64_t>(round)}));
    cs.train_steps = t.params.step_count - start_steps;
    if ((round + 1) % train.eval_every == 0) evaluate(round);
    if (done) r.stop = StopReason::target;
  }
  if (r.series.empty() || r.series.back().step_count != t.params.step_count) evaluate(-1);
  r.games = games;
  finish(r, t, start_steps);
  return r;
}

// ---- windows on disk -----------------------------------------------------

void save_window(const fs::path& dir, const std::string& stem, const std::vector<TrainingRow>& rows,
                 std::int64_t total) {
  std::vector<std::pair<std::string, std::string>> man{{"total_rows", std::to_string(total)}};
  int seg = 0;
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    while (j < rows.size() && rows[j].board_size == rows[i].board_size) ++j;
    char name[32];
    std::snprintf(name, sizeof name, ".%03d.seg", seg++);
    write_segment((dir / (stem + name)).string(),
                  std::vector<TrainingRow>(rows.begin() + static_cast<std::ptrdiff_t>(i),
                                           rows.begin() + static_cast<std::ptrdiff_t>(j)));
    i = j;
  }
  man.emplace_back("segments", std::to_string(seg));
  write_manifest((dir / (stem + ".window")).string(), man);
}

WindowSeed load_window(const fs::path& dir, const std::string& stem) {
  WindowSeed w;
  const fs::path man = dir / (stem + ".window");
  if (!fs::exists(man)) return w;
  std::map<std::string, std::string> kv;
  for (const auto& [k, v] : read_manifest(man.string())) kv[k] = v;
  w.total = std::stoll(need(kv, "total_rows"));
  const int segs = std::stoi(need(kv, "segments"));
  for (int s = 0; s < segs; ++s) {
    char name[32];
    std::snprintf(name, sizeof name, ".%03d.seg", s);
    auto rows = read_segment((dir / (stem + name)).string());
    std::move(rows.begin(), rows.end(), std::back_inserter(w.rows));
  }
  return w;
}

// ---- lineage -------------------------------------------------------------

const LineageEntry& LineageReport::latest(const std::string& role) const {
  for (auto it = agents.rbegin(); it != agents.rend(); ++it) {
    if (it->role == role) return *it;
  }
  throw CheckpointMissing("no " + role + " in lineage");
}

std::string LineageReport::serialize() const {
  std::ostringstream out;
  out << "completed_iterations = " << completed_iterations << "\n";
  out << "completed_phases = " << completed_phases << "\n";
  for (const auto& a : agents) {
    out << "\n[agent " << a.id << "]\n";
    out << "role = " << a.role << "\n";
    out << "iteration = " << a.iteration << "\n";
    out << "parent = " << a.parent << "\n";
    out << "checkpoint = " << a.checkpoint << "\n";
    out << "window_total = " << a.window_total << "\n";
    out << "games = " << a.games << "\n";
    out << "steps = " << a.steps << "\n";
    out << "win_rate = " << exact(a.win_rate) << "\n";
    out << "stop = " << a.stop << "\n";
  }
  return out.str();
}

LineageReport LineageReport::deserialize(const std::string& text) {
  LineageReport r;
  std::istringstream in(text);
  std::string line, block;
  std::vector<std::string> blocks;
  std::string header;
  while (std::getline(in, line)) {
    if (line.rfind("[agent ", 0) == 0) {
      blocks.push_back(block);
      block = line + "\n";
    } else {
      block += line + "\n";
    }
  }
  blocks.push_back(block);
  const auto top = parse_kv(blocks.front());
  r.completed_iterations = std::stoi(need(top, "completed_iterations"));
  r.completed_phases = std::stoi(need(top, "completed_phases"));
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    const std::string& b = blocks[i];
    const auto close = b.find(']');
    if (close == std::string::npos) throw ConfigError("bad lineage block");
    const auto kv = parse_kv(b.substr(close + 1));
    LineageEntry e;
    e.id = b.substr(7, close - 7);
    e.role = need(kv, "role");
    e.iteration = std::stoi(need(kv, "iteration"));
    e.parent = kv.count("parent") ? kv.at("parent") : "";
    e.checkpoint = need(kv, "checkpoint");
    e.window_total = std::stoll(need(kv, "window_total"));
    e.games = std::stoll(need(kv, "games"));
    e.steps = std::stoll(need(kv, "steps"));
    e.win_rate = std::stod(need(kv, "win_rate"));
    e.stop = kv.count("stop") ? kv.at("stop") : "";
    r.agents.push_back(e);
  }
  return r;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << text;
    if (!f) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

void write_series_csv(const fs::path& path, const PhaseResult& r) {
  std::ostringstream out;
  out << "checkpoint,step_count,games,victim_visits,eval_wins,eval_games,win_rate,smoothed\n";
  const auto sm = smoothed_win_rates(r.series);
  for (std::size_t i = 0; i < r.series.size(); ++i) {
    const auto& c = r.series[i];
    out << c.id << ',' << c.step_count << ',' << c.games << ',' << c.victim_visits << ',' << c.eval_wins << ','
        << c.eval_games << ',' << format_number(c.win_rate) << ',' << format_number(sm[i]) << '\n';
  }
  write_text(path, out.str());
}

namespace {

std::size_t pick(const PhaseResult& r) { return r.series.size() >= 3 ? select_checkpoint(r.series) : r.series.size() - 1; }

}  // namespace

LineageReport run_iterated(const IteratedConfig& config, const fs::path& run_dir, bool resume, int max_phases,
                           const std::function<void(const std::string&)>& log) {
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  const fs::path lineage_path = run_dir / "lineage.txt";
  LineageReport report;
  if (resume && fs::exists(lineage_path)) {
    report = LineageReport::deserialize(read_text(lineage_path));
  } else {
    for (const char* role : {"victim", "adversary"}) {
      const std::string file = std::string(role) + "-0.ckpt";
      if (!fs::exists(run_dir / file)) throw CheckpointMissing("seed checkpoint missing: " + (run_dir / file).string());
      LineageEntry e;
      e.id = std::string(role) + "-0";
      e.role = role;
      e.checkpoint = file;
      e.window_total = load_window(run_dir, e.id).total;
      report.agents.push_back(e);
    }
    write_text(lineage_path, report.serialize());
  }

  int ran = 0;
  while (report.completed_phases < 2 * config.iterations) {
    if (max_phases >= 0 && ran >= max_phases) break;
    const int p = report.completed_phases;
    const int n = p / 2 + 1;
    const bool defend = p % 2 == 0;
    const LineageEntry parent = report.latest(defend ? "victim" : "adversary");
    const LineageEntry opponent = report.latest(defend ? "adversary" : "victim");
    const NetworkParameters init = load_checkpoint((run_dir / parent.checkpoint).string());
    const auto frozen = load_evaluator((run_dir / opponent.checkpoint).string());
    const WindowSeed history = load_window(run_dir, parent.id);
    TrainConfig train = config.train;
    train.seed = derive_seed(config.train.seed, {static_cast<std::uint64_t>(n), defend ? 0u : 1u});
    const std::string id = std::string(defend ? "victim-" : "adversary-") + std::to_string(n);
    say("phase " + std::to_string(p) + ": " + (defend ? "defend " : "attack ") + id + " from " + parent.id +
        " against " + opponent.id);
    PhaseResult r = defend ? run_defense_iteration(init, frozen, config.plan.defend, config.defend_budget, train,
                                                   config.gen, history, id)
                           : run_attack_iteration(init, frozen, config.plan.attack, config.attack_budget, train,
                                                  config.gen, history, id);
    const std::size_t best = pick(r);
    LineageEntry e;
    e.id = id;
    e.role = defend ? "victim" : "adversary";
    e.iteration = n;
    e.parent = parent.id;
    e.checkpoint = id + ".ckpt";
    e.window_total = r.window_total;
    e.games = r.games;
    e.steps = r.steps;
    e.win_rate = r.series[best].win_rate;
    e.stop = stop_reason_name(r.stop);
    save_checkpoint(*r.series[best].params, (run_dir / e.checkpoint).string());
    save_window(run_dir, id, r.window_rows, r.window_total);
    write_series_csv(run_dir / (id + ".series.csv"), r);
    if (!defend) write_text(run_dir / (id + ".curriculum.txt"), r.curriculum.serialize());
    report.agents.push_back(e);
    ++report.completed_phases;
    report.completed_iterations = report.completed_phases / 2;
    write_text(lineage_path, report.serialize());
    say("  " + id + ": " + std::to_string(r.games) + " games, " + std::to_string(r.steps) + " steps, stop " + e.stop +
        ", selected " + r.series[best].id + " win rate " + format_number(e.win_rate, 3));
    ++ran;
  }
  return report;
}

}  // namespace advgo
