#include "advgo/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "advgo/gtp.hpp"

namespace advgo {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kTagSelfplay = 11;
constexpr std::uint64_t kTagVictimplay = 12;
constexpr std::uint64_t kTagMatch = 13;
constexpr std::uint64_t kTagRobustness = 14;

using Manifest = std::vector<std::pair<std::string, std::string>>;

struct Context {
  const RunConfig& config;
  fs::path out;
  bool resume;
  const std::vector<std::string>& args;
  std::istream& in;
  std::ostream& out_stream;
  std::ostream& log;
  Manifest stats;
};

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + p.string());
}

template <typename Fn>
void write_with(const fs::path& p, Fn&& fn) {
  std::ostringstream s;
  fn(s);
  write_file(p, s.str());
}

// "uniform" or a checkpoint path.
std::shared_ptr<const Evaluator> load_net(const std::string& spec, const std::string& key) {
  if (spec.empty()) throw ConfigError(key + " is required");
  if (spec == "uniform") return std::make_shared<UniformEvaluator>();
  return load_evaluator(spec);
}

NetworkParameters params_or_init(const std::string& path, const RunConfig& cfg) {
  if (path.empty()) return init_network(cfg.net_config(), static_cast<std::uint64_t>(cfg.get_int64("net", "init_seed")));
  if (!fs::exists(path)) throw CheckpointMissing("checkpoint not found: " + path);
  return load_checkpoint(path, cfg.net_config());
}

std::string stem_name(const std::string& spec) { return spec == "uniform" ? spec : fs::path(spec).stem().string(); }

std::string agent_name(const std::string& spec, int visits) { return stem_name(spec) + "@" + std::to_string(visits); }

std::string game_name(std::int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "game-%06lld.sgf", static_cast<long long>(index));
  return buf;
}

void write_records(Context& c, const std::vector<GameRecord>& games, RowMode rows, bool sgf) {
  std::map<int, std::vector<TrainingRow>> by_size;
  std::int64_t row_count = 0;
  int black_wins = 0;
  for (const auto& g : games) {
    auto r = to_rows(g, rows);
    row_count += static_cast<std::int64_t>(r.size());
    auto& dst = by_size[g.board_size];
    std::move(r.begin(), r.end(), std::back_inserter(dst));
    black_wins += g.winner == Color::black;
  }
  for (const auto& [size, r] : by_size) {
    fs::create_directories(c.out / "data");
    write_segment((c.out / "data" / ("rows-" + std::to_string(size) + ".seg")).string(), r);
  }
  write_with(c.out / "games.csv", [&](std::ostream& o) {
    o << "game,board_size,black,white,winner,moves,black_margin,result,adversary_color\n";
    for (const auto& g : games) {
      o << g.index << ',' << g.board_size << ',' << g.black_id << ',' << g.white_id << ',' << color_name(g.winner)
        << ',' << g.moves.size() << ',' << format_number(g.black_margin, 1) << ',' << game_result_name(g.result)
        << ',' << color_name(g.adversary_color) << '\n';
    }
  });
  if (sgf) {
    for (const auto& g : games) write_file(c.out / "sgf" / game_name(g.index), write_sgf(sgf_from_record(g)));
  }
  c.stats.emplace_back("games", std::to_string(games.size()));
  c.stats.emplace_back("rows", std::to_string(row_count));
  c.stats.emplace_back("black_wins", std::to_string(black_wins));
}

// Minimal line chart: win rate (0..1) against x, optionally on a log2 axis.
struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::vector<Series>& series,
                           bool log_x) {
  const double w = 480, h = 320, l = 56, r = 16, t = 32, b = 48;
  double lo = 1e300, hi = -1e300;
  auto tx = [&](double x) { return log_x ? std::log2(std::max(x, 1e-12)) : x; };
  for (const auto& s : series) {
    for (double x : s.x) lo = std::min(lo, tx(x)), hi = std::max(hi, tx(x));
  }
  if (!(hi > lo)) lo -= 1, hi += 1;
  auto px = [&](double x) { return l + (tx(x) - lo) / (hi - lo) * (w - l - r); };
  auto py = [&](double y) { return t + (1 - y) * (h - t - b); };
  const char* shades[] = {"#000000", "#777777", "#bbbbbb"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << w / 2 << "\" y=\"18\" text-anchor=\"middle\">" << title << "</text>\n";
  o << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = i / 4.0;
    o << "<line x1=\"" << l << "\" x2=\"" << w - r << "\" y1=\"" << py(y) << "\" y2=\"" << py(y)
      << "\" stroke=\"#dddddd\"/>\n";
    o << "<text x=\"" << l - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << format_number(y, 2)
      << "</text>\n";
  }
  std::set<double> ticks;
  for (const auto& s : series) ticks.insert(s.x.begin(), s.x.end());
  for (double x : ticks) {
    o << "<text x=\"" << px(x) << "\" y=\"" << h - b + 14 << "\" text-anchor=\"middle\">" << format_number(x, 0)
      << "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    o << "<polyline fill=\"none\" stroke=\"" << shades[k % 3] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) o << (i ? " " : "") << px(s.x[i]) << ',' << py(s.y[i]);
    o << "\"/>\n";
    o << "<text x=\"" << l + 8 << "\" y=\"" << t + 14 * (k + 1) << "\" fill=\"" << shades[k % 3] << "\">" << s.name
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

// ---- commands -------------------------------------------------------------

void cmd_init(Context& c) {
  const NetworkParameters p = params_or_init("", c.config);
  save_checkpoint(p, (c.out / "init.ckpt").string());
}

void cmd_selfplay(Context& c) {
  const RunConfig& cfg = c.config;
  GenConfig gen = cfg.gen_config();
  gen.mode = GenMode::selfplay;
  const std::string spec = cfg.get("selfplay", "checkpoint");
  const auto net = spec == "uniform" ? std::shared_ptr<const Evaluator>(std::make_shared<UniformEvaluator>())
                                     : std::make_shared<NetworkEvaluator>(
                                           std::make_shared<const NetworkParameters>(params_or_init(spec, cfg)));
  Agent a;
  a.id = "selfplay";
  a.net = net;
  a.visits = gen.selfplay_visits;
  const int games = cfg.get_int("gen", "games");
  if (games < 1) throw ConfigError("gen.games must be >= 1");
  c.log << "selfplay: " << games << " games at " << gen.selfplay_visits << " visits\n";
  const auto records = play_games(
      games, derive_seed(cfg.seed(), {kTagSelfplay}), gen,
      [&](int i) { return GameAssignment{&a, &a, i % 2 ? Color::white : Color::black}; }, cfg.workers());
  write_records(c, records, RowMode::both_sides, cfg.get_bool("gen", "sgf"));
}

void cmd_victimplay(Context& c) {
  const RunConfig& cfg = c.config;
  GenConfig gen = cfg.gen_config();
  gen.mode = GenMode::victimplay;
  const auto victim = load_net(cfg.get("victimplay", "victim"), "victimplay.victim");
  const auto adversary =
      std::make_shared<NetworkEvaluator>(std::make_shared<const NetworkParameters>(
          params_or_init(cfg.get("victimplay", "adversary"), cfg)));
  const Agent adv{.id = "adversary", .net = adversary, .visits = gen.adversary_visits, .opponent_model = victim,
                  .learner = true, .adversary = true};
  Agent vic;
  vic.id = "victim";
  vic.net = victim;
  vic.visits = gen.victim_visits;
  vic.learner = false;
  const int games = cfg.get_int("gen", "games");
  if (games < 1) throw ConfigError("gen.games must be >= 1");
  c.log << "victimplay: " << games << " games, adversary " << gen.adversary_visits << " visits, victim "
        << gen.victim_visits << "\n";
  const auto records = play_games(
      games, derive_seed(cfg.seed(), {kTagVictimplay}), gen,
      [&](int i) { return GameAssignment{&adv, &vic, i % 2 ? Color::white : Color::black}; }, cfg.workers());
  write_records(c, records, RowMode::adversary_only, cfg.get_bool("gen", "sgf"));
  int adv_wins = 0;
  for (const auto& g : records) adv_wins += g.winner == g.adversary_color;
  c.stats.emplace_back("adversary_wins", std::to_string(adv_wins));
}

std::size_t pick_checkpoint(const PhaseResult& r) {
  return r.series.size() >= 3 ? select_checkpoint(r.series) : r.series.size() - 1;
}

void cmd_train(Context& c) {
  const RunConfig& cfg = c.config;
  const NetworkParameters init = params_or_init(cfg.get("train", "checkpoint"), cfg);
  const int bv = cfg.get_int("train", "baseline_visits");
  const std::string bspec = cfg.get("train", "baseline");
  const AgentSpec baseline{.id = "baseline-" + agent_name(bspec, bv), .net = load_net(bspec, "train.baseline"),
                           .visits = bv, .explore = cfg.get_bool("train", "baseline_explore")};
  const GenConfig gen = cfg.gen_config();
  const TrainConfig train = cfg.train_config();
  c.log << "train: self-play at " << gen.selfplay_visits << " visits, budget " << cfg.train_budget().max_games
        << " games\n";
  const PhaseResult r = run_selfplay_training(init, baseline, gen.selfplay_visits, cfg.get_int("train", "eval_visits"),
                                              cfg.train_budget(), train, gen, {}, "victim");
  if (r.series.empty()) throw std::runtime_error("training produced no checkpoints");
  for (const auto& ck : r.series) {
    fs::create_directories(c.out / "checkpoints");
    save_checkpoint(*ck.params, (c.out / "checkpoints" / (ck.id + ".ckpt")).string());
    c.log << "  " << ck.id << " games " << ck.games << " win rate " << format_number(ck.win_rate, 3) << "\n";
  }
  write_series_csv(c.out / "series.csv", r);
  Series s{"vs " + baseline.id, {}, {}};
  for (const auto& ck : r.series) s.x.push_back(static_cast<double>(ck.games)), s.y.push_back(ck.win_rate);
  write_file(c.out / "series.svg", line_chart_svg("win rate during training", "games", {s}, false));

  const std::size_t best = pick_checkpoint(r);
  save_checkpoint(*r.series[best].params, (c.out / "victim-0.ckpt").string());
  save_window(c.out, "victim-0", r.window_rows, r.window_total);
  save_checkpoint(*r.final_params, (c.out / "final.ckpt").string());
  c.stats.emplace_back("selected", r.series[best].id);
  c.stats.emplace_back("selected_win_rate", format_number(r.series[best].win_rate));
  c.stats.emplace_back("games", std::to_string(r.games));
  c.stats.emplace_back("steps", std::to_string(r.steps));
  c.stats.emplace_back("stop", stop_reason_name(r.stop));
}

// Copies a seed checkpoint (and its window, when one sits next to it) into the run directory.
void seed_checkpoint(const fs::path& from, const fs::path& run_dir, const std::string& stem) {
  const fs::path to = run_dir / (stem + ".ckpt");
  if (!fs::exists(from)) throw CheckpointMissing("seed checkpoint missing: " + from.string());
  if (fs::exists(to) && fs::equivalent(from, to)) return;
  fs::copy_file(from, to, fs::copy_options::overwrite_existing);
  const WindowSeed w = load_window(from.parent_path().empty() ? fs::path(".") : from.parent_path(),
                                   from.stem().string());
  if (w.total > 0) save_window(run_dir, stem, w.rows, w.total);
}

void cmd_iterate(Context& c) {
  const RunConfig& cfg = c.config;
  const IteratedConfig ic = cfg.iterated_config();
  if (!(c.resume && fs::exists(c.out / "lineage.txt"))) {
    const std::string victim = cfg.get("iterate", "victim");
    if (!victim.empty()) seed_checkpoint(victim, c.out, "victim-0");
    const std::string adversary = cfg.get("iterate", "adversary");
    if (adversary == "init") {
      save_checkpoint(params_or_init("", cfg), (c.out / "adversary-0.ckpt").string());
    } else if (adversary == "victim") {
      const fs::path v = c.out / "victim-0.ckpt";
      if (!fs::exists(v)) throw CheckpointMissing("seed checkpoint missing: " + v.string());
      fs::copy_file(v, c.out / "adversary-0.ckpt", fs::copy_options::overwrite_existing);
    } else if (!adversary.empty()) {
      seed_checkpoint(adversary, c.out, "adversary-0");
    }
  }
  const LineageReport report = run_iterated(ic, c.out, c.resume, -1, [&](const std::string& s) { c.log << s << "\n"; });
  write_with(c.out / "lineage.csv", [&](std::ostream& o) {
    o << "id,role,iteration,parent,checkpoint,window_total,games,steps,win_rate,stop\n";
    for (const auto& e : report.agents) {
      o << e.id << ',' << e.role << ',' << e.iteration << ',' << e.parent << ',' << e.checkpoint << ','
        << e.window_total << ',' << e.games << ',' << e.steps << ',' << format_number(e.win_rate) << ',' << e.stop
        << '\n';
    }
  });
  c.stats.emplace_back("completed_iterations", std::to_string(report.completed_iterations));
  c.stats.emplace_back("completed_phases", std::to_string(report.completed_phases));
}

MatchSpec base_match(const RunConfig& cfg, std::uint64_t tag) {
  const GenConfig gen = cfg.gen_config();
  MatchSpec m;
  m.games = cfg.get_int("match", "games");
  m.board_size = cfg.get_int("match", "board_size");
  m.komi = gen.komi;
  m.alternate_colors = cfg.get_bool("match", "alternate_colors");
  m.random_opening_moves = cfg.get_int("match", "random_opening_moves");
  m.move_limit_factor = gen.move_limit_factor;
  m.pass_alive_defense = cfg.get_bool("match", "pass_alive_defense");
  m.seed = derive_seed(cfg.seed(), {tag});
  m.workers = cfg.workers();
  m.search_base = cfg.search_config();
  return m;
}

AgentSpec match_side(const RunConfig& cfg, const std::string& side) {
  const std::string spec = cfg.get("match", side);
  AgentSpec a;
  a.visits = cfg.get_int("match", side + "_visits");
  a.net = load_net(spec, "match." + side);
  a.amcts = cfg.get_bool("match", side + "_amcts");
  a.explore = cfg.get_bool("match", side + "_explore");
  a.id = cfg.get("match", side + "_id");
  if (a.id.empty()) a.id = agent_name(spec, a.visits);
  if (a.id.find(',') != std::string::npos) throw ConfigError("match." + side + "_id must not contain ','");
  return a;
}

void cmd_match(Context& c) {
  const RunConfig& cfg = c.config;
  MatchSpec m = base_match(cfg, kTagMatch);
  m.a = match_side(cfg, "a");
  m.b = match_side(cfg, "b");
  if (m.a.id == m.b.id) m.a.id += "#a", m.b.id += "#b";
  c.log << "match: " << m.a.id << " vs " << m.b.id << ", " << m.games << " games\n";
  const MatchResult r = run_match(m);
  write_with(c.out / "match.csv", [&](std::ostream& o) { write_match_csv(o, r, m); });
  const WinRateCI ci = r.a_ci();
  write_with(c.out / "summary.csv", [&](std::ostream& o) {
    o << "agent_a,agent_b,games,a_wins,b_wins,undecided,a_win_rate,lower,upper\n";
    o << m.a.id << ',' << m.b.id << ',' << r.games.size() << ',' << r.a_wins << ',' << r.b_wins << ',' << r.undecided
      << ',' << format_number(r.a_win_rate()) << ',' << format_number(ci.lower) << ',' << format_number(ci.upper)
      << '\n';
  });
  if (cfg.get_bool("gen", "sgf")) {
    for (std::size_t i = 0; i < r.games.size(); ++i) {
      write_file(c.out / "sgf" / game_name(static_cast<std::int64_t>(i)), write_sgf(sgf_from_record(r.games[i])));
    }
  }
  c.log << "  " << m.a.id << " won " << r.a_wins << "/" << r.games.size() << " [" << format_number(ci.lower, 3)
        << ", " << format_number(ci.upper, 3) << "]\n";
  c.stats.emplace_back("a_wins", std::to_string(r.a_wins));
  c.stats.emplace_back("b_wins", std::to_string(r.b_wins));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void cmd_elo(Context& c) {
  if (c.args.empty()) throw ConfigError("elo needs one or more match CSV files");
  // Pairs are keyed in lexicographic order so both directions pool.
  std::map<std::pair<std::string, std::string>, PairTally> pairs;
  for (const auto& path : c.args) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
    const auto header = split_csv_line(line);
    auto col = [&](const std::string& name) {
      const auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) throw ConfigError(path + ": missing column " + name);
      return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t ca = col("agent_a"), cb = col("agent_b"), cw = col("winner"), cx = col("a_win");
    int n = 1;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      const auto cells = split_csv_line(line);
      if (cells.size() != header.size()) throw ConfigError(path + ":" + std::to_string(n) + ": wrong column count");
      std::string a = cells[ca], b = cells[cb];
      double wa = cells[cw] == "empty" ? 0.5 : (cells[cx] == "1" ? 1.0 : 0.0);
      if (b < a) std::swap(a, b), wa = 1.0 - wa;
      auto& t = pairs[{a, b}];
      t.a = a, t.b = b;
      t.wins_a += wa;
      t.wins_b += 1.0 - wa;
    }
  }
  std::vector<PairTally> tallies;
  for (const auto& [k, t] : pairs) tallies.push_back(t);
  const EloModel model = fit_elo(tallies, c.config.get("elo", "anchor"), c.config.get_double("elo", "prior_sigma"));
  write_with(c.out / "elo.csv", [&](std::ostream& o) { write_elo_csv(o, model); });
  // Cross-play matrix: row agent's score against the column agent.
  write_with(c.out / "crossplay.csv", [&](std::ostream& o) {
    o << "agent";
    for (const auto& [name, r] : model.ratings) o << ',' << name;
    o << '\n';
    for (const auto& [row, r1] : model.ratings) {
      o << row;
      for (const auto& [col, r2] : model.ratings) {
        o << ',';
        const bool flip = col < row;
        const auto it = pairs.find(flip ? std::pair{col, row} : std::pair{row, col});
        if (row == col || it == pairs.end()) continue;
        const double total = it->second.wins_a + it->second.wins_b;
        o << format_number((flip ? it->second.wins_b : it->second.wins_a) / total);
      }
      o << '\n';
    }
  });
  c.stats.emplace_back("agents", std::to_string(model.ratings.size()));
  c.stats.emplace_back("anchor", model.anchor);
}

void cmd_robustness(Context& c) {
  const RunConfig& cfg = c.config;
  const std::string vspec = cfg.get("robustness", "victim");
  const std::string aspec = cfg.get("robustness", "adversary");
  std::string bspec = cfg.get("robustness", "baseline");
  if (bspec.empty()) bspec = vspec;
  const int av = cfg.get_int("robustness", "adversary_visits");
  const int bv = cfg.get_int("robustness", "baseline_visits");
  const AgentSpec victim{.id = stem_name(vspec),
                         .net = load_net(vspec, "robustness.victim")};
  const AgentSpec adversary{.id = agent_name(aspec, av), .net = load_net(aspec, "robustness.adversary"), .visits = av,
                            .amcts = true};
  const AgentSpec baseline{.id = "baseline-" + agent_name(bspec, bv), .net = load_net(bspec, "robustness.baseline"),
                           .visits = bv};
  const std::vector<int> grid = cfg.get_int_list("robustness", "visit_grid");
  MatchSpec base = base_match(cfg, kTagRobustness);
  base.pass_alive_defense = true;  // A-MCTS adversary, as in its training games
  c.log << "robustness: " << victim.id << " over " << grid.size() << " visit counts\n";
  const RobustnessReport report = inference_compute_robustness(victim, adversary, baseline, grid, base);
  write_with(c.out / "robustness.csv", [&](std::ostream& o) { write_robustness_csv(o, report); });
  write_with(c.out / "grid.csv", [&](std::ostream& o) {
    o << "series";
    for (int v : grid) o << ',' << v;
    o << '\n';
    const std::pair<const char*, std::function<double(const RobustnessPoint&)>> rows[] = {
        {"vs_adversary", [](const RobustnessPoint& p) { return p.victim_vs_adversary.point; }},
        {"vs_adversary_lower", [](const RobustnessPoint& p) { return p.victim_vs_adversary.lower; }},
        {"vs_adversary_upper", [](const RobustnessPoint& p) { return p.victim_vs_adversary.upper; }},
        {"vs_baseline", [](const RobustnessPoint& p) { return p.victim_vs_baseline.point; }},
        {"vs_baseline_lower", [](const RobustnessPoint& p) { return p.victim_vs_baseline.lower; }},
        {"vs_baseline_upper", [](const RobustnessPoint& p) { return p.victim_vs_baseline.upper; }},
    };
    for (const auto& [name, get] : rows) {
      o << name;
      for (const auto& p : report.points) o << ',' << format_number(get(p));
      o << '\n';
    }
  });
  Series sa{"vs " + adversary.id, {}, {}}, sb{"vs " + baseline.id, {}, {}};
  for (const auto& p : report.points) {
    sa.x.push_back(p.victim_visits), sa.y.push_back(p.victim_vs_adversary.point);
    sb.x.push_back(p.victim_visits), sb.y.push_back(p.victim_vs_baseline.point);
  }
  write_file(c.out / "robustness.svg", line_chart_svg("victim win rate", "victim visits", {sa, sb}, true));
}

struct ScanResult {
  std::vector<CycleEvent> events;
  int games = 0;
  int skipped = 0;
  int board_size = 0;
};

ScanResult scan_sgf_dir(const fs::path& dir, const RunConfig& cfg) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".sgf") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  const std::string vopt = cfg.get("heatmap", "victim");
  if (vopt != "auto" && vopt != "black" && vopt != "white") throw ConfigError("heatmap.victim: auto, black or white");
  const CycleConfig cc = cfg.cycle_config();
  ScanResult r;
  for (const auto& f : files) {
    const SgfGame g = parse_sgf(read_file(f));
    if (r.board_size && g.size != r.board_size) {
      throw MixedSizes(f.filename().string() + ": size " + std::to_string(g.size) + " after " +
                       std::to_string(r.board_size));
    }
    r.board_size = g.size;
    ++r.games;
    std::optional<Color> victim;
    if (vopt == "auto") {
      victim = victim_color_from_names(g);
    } else {
      victim = vopt == "black" ? Color::black : Color::white;
    }
    if (!victim) {
      ++r.skipped;
      continue;
    }
    if (auto ev = detect_cycle_capture(g, *victim, cc, f.filename().string())) {
      r.events.push_back(normalize_symmetry(*ev));
    }
  }
  return r;
}

void cmd_heatmap(Context& c) {
  const RunConfig& cfg = c.config;
  if (c.args.size() != 1) throw ConfigError("heatmap needs exactly one SGF directory");
  const ScanResult scan = scan_sgf_dir(c.args[0], cfg);
  int size = cfg.get_int("heatmap", "board_size");
  if (size == 0) size = scan.board_size ? scan.board_size : kMaxBoardSize;
  if (scan.board_size && scan.board_size != size) {
    throw MixedSizes("games are " + std::to_string(scan.board_size) + "x" + std::to_string(scan.board_size) +
                     ", heatmap.board_size is " + std::to_string(size));
  }
  const Heatmap map = accumulate_heatmaps(scan.events, size);
  emit_heatmap(map, c.out.string(), "heatmap");
  write_with(c.out / "events.csv", [&](std::ostream& o) {
    o << "game,board_size,capture_move_index,victim,group_size,interior_size,interior_adversary,interior_victim,"
         "symmetry\n";
    for (const auto& e : scan.events) {
      o << e.game << ',' << e.board_size << ',' << e.capture_move_index << ',' << color_name(e.victim) << ','
        << e.captured_group.size() << ',' << e.interior_region.size() << ',' << e.interior_adversary.size() << ','
        << e.interior_victim.size() << ',' << e.symmetry << '\n';
    }
  });
  const std::string compare = cfg.get("heatmap", "compare_dir");
  if (!compare.empty()) {
    const ScanResult other = scan_sgf_dir(compare, cfg);
    const Heatmap om = accumulate_heatmaps(other.events, size);
    emit_heatmap(om, c.out.string(), "compare");
    emit_heatmap_difference(map, om, c.out.string(), "difference");
    c.stats.emplace_back("compare_events", std::to_string(om.events));
  }
  c.stats.emplace_back("games", std::to_string(scan.games));
  c.stats.emplace_back("skipped", std::to_string(scan.skipped));
  c.stats.emplace_back("events", std::to_string(map.events));
  c.log << "heatmap: " << map.events << " cyclic captures in " << scan.games << " games\n";
}

void cmd_gtp(Context& c) {
  const RunConfig& cfg = c.config;
  SearchConfig search = cfg.search_config();
  search.visits = cfg.get_int("gtp", "visits");
  search.validate();
  const auto net = load_net(cfg.get("gtp", "checkpoint"), "gtp.checkpoint");
  const std::string model = cfg.get("gtp", "opponent_model");
  GtpEngine engine(net, search, model.empty() ? nullptr : load_net(model, "gtp.opponent_model"));
  run_gtp(engine, c.in, c.out_stream);
}

using Handler = void (*)(Context&);
const std::vector<std::pair<std::string, Handler>>& handlers() {
  static const std::vector<std::pair<std::string, Handler>> h{
      {"init", cmd_init},   {"selfplay", cmd_selfplay}, {"victimplay", cmd_victimplay},
      {"train", cmd_train}, {"iterate", cmd_iterate},   {"match", cmd_match},
      {"elo", cmd_elo},     {"robustness", cmd_robustness}, {"heatmap", cmd_heatmap},
      {"gtp", cmd_gtp},
  };
  return h;
}

void collect_files(const fs::path& root, std::vector<fs::path>& out) {
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  }
  std::sort(out.begin(), out.end());
}

}  // namespace

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : handlers()) n.push_back(name);
    return n;
  }();
  return names;
}

int run_command(const CommandRequest& request, std::istream& in, std::ostream& out, std::ostream& log) {
  try {
    const auto& hs = handlers();
    const auto it = std::find_if(hs.begin(), hs.end(), [&](const auto& h) { return h.first == request.command; });
    if (it == hs.end()) throw ConfigError("unknown command: " + request.command);
    const RunConfig& cfg = request.config;
    Context c{cfg, request.out_dir.empty() ? fs::path(cfg.get("run", "out_dir")) : request.out_dir,
              request.resume, request.args, in, out, log, {}};
    const bool files = request.command != "gtp";
    if (files) {
      fs::create_directories(c.out);
      write_file(c.out / "resolved.cfg", cfg.resolved());
    }
    it->second(c);
    if (!files) return kExitOk;

    Manifest m{{"command", request.command}, {"version", kEngineVersion}};
    std::string joined;
    for (const auto& a : request.args) joined += (joined.empty() ? "" : " ") + a;
    m.emplace_back("args", joined);
    m.emplace_back("resume", request.resume ? "true" : "false");
    m.emplace_back("config_hash", content_hash(cfg.resolved()));
    m.emplace_back("seed", std::to_string(cfg.seed()));
    for (auto& kv : c.stats) m.push_back(kv);
    std::vector<fs::path> written;
    collect_files(c.out, written);
    for (const auto& rel : written) {
      if (rel == "manifest.txt") continue;
      const std::string bytes = read_file(c.out / rel);
      m.emplace_back("file." + rel.generic_string(), std::to_string(bytes.size()) + " " + content_hash(bytes));
    }
    write_manifest((c.out / "manifest.txt").string(), m);
    return kExitOk;
  } catch (const std::invalid_argument& e) {  // ConfigError, MixedSizes
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CheckpointMissing& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ShapeMismatch& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace advgo
