#include "advgo/runconfig.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace advgo {

namespace fs = std::filesystem;

namespace {

struct Default {
  const char* section;
  const char* key;
  const char* value;
};

// clang-format off
const Default kSchema[] = {
    {"run", "seed", "1"},
    {"run", "workers", "0"},
    {"run", "out_dir", "out"},

    {"net", "backbone", "cnn"},
    {"net", "init_seed", "1"},

    {"search", "cpuct_init", "1.0"},
    {"search", "cpuct_log", "0.45"},
    {"search", "fpu_reduction", "0.2"},
    {"search", "use_lcb", "false"},
    {"search", "lcb_z", "1.96"},

    {"gen", "board_sizes", "5"},
    {"gen", "komi", "7.5"},
    {"gen", "move_limit_factor", "900"},
    {"gen", "move_limit_policy", "score_as_is"},
    {"gen", "move_limit_utility", "-1.6"},
    {"gen", "selfplay_visits", "32"},
    {"gen", "victim_visits", "1"},
    {"gen", "adversary_visits", "64"},
    {"gen", "pass_alive_defense", "true"},
    {"gen", "dirichlet_alpha", "0.8"},
    {"gen", "noise_fraction", "0.25"},
    {"gen", "temperature_early", "1.0"},
    {"gen", "temperature", "0.25"},
    {"gen", "early_moves_fraction", "0.25"},
    {"gen", "random_opening_moves", "0"},
    {"gen", "games", "100"},
    {"gen", "sgf", "true"},
    {"gen", "root_noise", "true"},

    {"selfplay", "checkpoint", ""},

    {"victimplay", "adversary", ""},
    {"victimplay", "victim", ""},

    {"train", "checkpoint", ""},
    {"train", "batch_size", "64"},
    {"train", "learning_rate", "0.02"},
    {"train", "momentum", "0.9"},
    {"train", "l2", "0.0001"},
    {"train", "games_per_round", "40"},
    {"train", "steps_per_round", "100"},
    {"train", "window_m0", "20000"},
    {"train", "eval_every", "5"},
    {"train", "eval_games", "100"},
    {"train", "eval_opening_moves", "2"},
    {"train", "eval_visits", "1"},
    {"train", "baseline", "uniform"},
    {"train", "baseline_visits", "1"},
    {"train", "baseline_explore", "true"},
    {"train", "max_games", "800"},
    {"train", "max_steps", "1000000"},

    {"defend", "adversary_fraction", "0.18"},
    {"defend", "selfplay_visits", "32"},
    {"defend", "victim_visits", "32"},
    {"defend", "adversary_visits", "64"},
    {"defend", "plateau_delta", "0.01"},
    {"defend", "plateau_points", "3"},
    {"defend", "eval_victim_visits", "0"},
    {"defend", "eval_adversary_visits", "0"},
    {"defend", "pass_alive_defense_below", "100"},
    {"defend", "max_games", "2000"},
    {"defend", "max_steps", "1000000"},

    {"attack", "visit_schedule", "1,2,4,8,16,32,64,128,256"},
    {"attack", "high_visit_cutoff", "256"},
    {"attack", "tracker_window", "200"},
    {"attack", "adversary_visits", "64"},
    {"attack", "eval_victim_visits", "0"},
    {"attack", "pass_alive_defense_below", "100"},
    {"attack", "max_games", "2000"},
    {"attack", "max_steps", "1000000"},

    {"iterate", "iterations", "1"},
    {"iterate", "victim", ""},
    {"iterate", "adversary", "victim"},

    {"match", "a", "uniform"},
    {"match", "b", "uniform"},
    {"match", "a_visits", "1"},
    {"match", "b_visits", "1"},
    {"match", "a_amcts", "false"},
    {"match", "b_amcts", "false"},
    {"match", "a_explore", "false"},
    {"match", "b_explore", "false"},
    {"match", "a_id", ""},
    {"match", "b_id", ""},
    {"match", "games", "100"},
    {"match", "board_size", "5"},
    {"match", "alternate_colors", "true"},
    {"match", "random_opening_moves", "0"},
    {"match", "pass_alive_defense", "false"},

    {"robustness", "victim", ""},
    {"robustness", "adversary", ""},
    {"robustness", "baseline", ""},
    {"robustness", "visit_grid", "1,2,4,8,16,32"},
    {"robustness", "adversary_visits", "64"},
    {"robustness", "baseline_visits", "1"},

    {"elo", "anchor", ""},
    {"elo", "prior_sigma", "1200"},

    {"heatmap", "victim", "auto"},
    {"heatmap", "board_size", "0"},
    {"heatmap", "compare_dir", ""},
    {"heatmap", "min_group_size", "6"},
    {"heatmap", "min_interior_adversary", "1"},

    {"gtp", "checkpoint", ""},
    {"gtp", "visits", "32"},
    {"gtp", "opponent_model", ""},
};
// clang-format on

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

std::string where(const std::string& section, const std::string& key) { return section + "." + key; }

template <typename T>
T parse_number(const std::string& v, const std::string& name) {
  T out{};
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) throw ConfigError(name + ": not a number: '" + v + "'");
  return out;
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& d : kSchema) {
    if (sections_.empty() || sections_.back().name != d.section) sections_.push_back({d.section, {}});
    sections_.back().entries.push_back({d.key, d.value});
  }
}

RunConfig::Entry* RunConfig::find(const std::string& section, const std::string& key) {
  for (auto& s : sections_) {
    if (s.name != section) continue;
    for (auto& e : s.entries) {
      if (e.key == key) return &e;
    }
  }
  return nullptr;
}

const RunConfig::Entry* RunConfig::find(const std::string& section, const std::string& key) const {
  return const_cast<RunConfig*>(this)->find(section, key);
}

void RunConfig::set(const std::string& section, const std::string& key, const std::string& value) {
  Entry* e = find(section, key);
  if (!e) {
    bool known_section = false;
    for (const auto& s : sections_) known_section = known_section || s.name == section;
    throw ConfigError(known_section ? "unknown key " + where(section, key) : "unknown section [" + section + "]");
  }
  e->value = value;
}

void RunConfig::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("expected section.key=value, got '" + assignment + "'");
  }
  set(trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)), trim(assignment.substr(eq + 1)));
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  RunConfig c;
  c.apply(text, origin);
  return c;
}

void RunConfig::apply(const std::string& text, const std::string& origin) {
  RunConfig& c = *this;
  std::istringstream in(text);
  std::string line, section;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string at = origin + ":" + std::to_string(n) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(at + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& s : c.sections_) known = known || s.name == section;
      if (!known) throw ConfigError(at + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(at + "expected key = value");
    if (section.empty()) throw ConfigError(at + "key outside of a section");
    try {
      c.set(section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(at + e.what());
    }
  }
}

fs::path RunConfig::resolve_path(const std::string& path) {
  const fs::path p(path);
  if (fs::exists(p) || p.is_absolute()) return p;
  if (const char* dir = std::getenv(kConfigDirEnv); dir && *dir) {
    const fs::path alt = fs::path(dir) / p;
    if (fs::exists(alt)) return alt;
  }
  return p;
}

RunConfig RunConfig::load(const std::string& path) {
  RunConfig c;
  c.apply_file(path);
  return c;
}

void RunConfig::apply_file(const std::string& path) {
  const fs::path p = resolve_path(path);
  std::ifstream f(p);
  if (!f) throw std::runtime_error("cannot read config " + p.string());
  std::ostringstream s;
  s << f.rdbuf();
  apply(s.str(), p.string());
}

const std::string& RunConfig::get(const std::string& section, const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e) throw std::logic_error("key not in schema: " + where(section, key));
  return e->value;
}

int RunConfig::get_int(const std::string& section, const std::string& key) const {
  return parse_number<int>(get(section, key), where(section, key));
}

std::int64_t RunConfig::get_int64(const std::string& section, const std::string& key) const {
  return parse_number<std::int64_t>(get(section, key), where(section, key));
}

double RunConfig::get_double(const std::string& section, const std::string& key) const {
  return parse_number<double>(get(section, key), where(section, key));
}

bool RunConfig::get_bool(const std::string& section, const std::string& key) const {
  const std::string& v = get(section, key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(where(section, key) + ": not a boolean: '" + v + "'");
}

std::vector<int> RunConfig::get_int_list(const std::string& section, const std::string& key) const {
  std::vector<int> out;
  std::istringstream in(get(section, key));
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number<int>(trim(item), where(section, key)));
  if (out.empty()) throw ConfigError(where(section, key) + ": empty list");
  return out;
}

std::string RunConfig::resolved() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    out << (i ? "\n" : "") << "[" << sections_[i].name << "]\n";
    for (const auto& e : sections_[i].entries) out << e.key << " = " << e.value << "\n";
  }
  return out.str();
}

std::map<int, double> parse_board_sizes(const std::string& text) {
  std::map<int, double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    const auto colon = item.find(':');
    const int size = parse_number<int>(trim(item.substr(0, colon)), "gen.board_sizes");
    const double w = colon == std::string::npos ? 1.0 : parse_number<double>(trim(item.substr(colon + 1)), "gen.board_sizes");
    out[size] += w;
  }
  double total = 0;
  for (const auto& [size, w] : out) {
    if (w < 0) throw ConfigError("gen.board_sizes: negative weight");
    total += w;
  }
  if (out.empty() || !(total > 0)) throw ConfigError("gen.board_sizes: empty");
  for (auto& [size, w] : out) w /= total;
  return out;
}

NetworkConfig RunConfig::net_config() const {
  const std::string& b = get("net", "backbone");
  if (b == "cnn") return NetworkConfig::desk_cnn();
  if (b == "vit") return NetworkConfig::desk_vit();
  throw ConfigError("net.backbone: expected cnn or vit, got '" + b + "'");
}

SearchConfig RunConfig::search_config() const {
  SearchConfig s;
  s.cpuct_init = get_double("search", "cpuct_init");
  s.cpuct_log = get_double("search", "cpuct_log");
  s.fpu_reduction = get_double("search", "fpu_reduction");
  s.use_lcb = get_bool("search", "use_lcb");
  s.lcb_z = get_double("search", "lcb_z");
  s.seed = seed();
  s.validate();
  return s;
}

GenConfig RunConfig::gen_config() const {
  GenConfig g;
  g.board_size_distribution = parse_board_sizes(get("gen", "board_sizes"));
  g.komi = get_double("gen", "komi");
  g.move_limit_factor = get_double("gen", "move_limit_factor");
  g.move_limit_policy = parse_move_limit_policy(get("gen", "move_limit_policy"));
  g.move_limit_utility = get_double("gen", "move_limit_utility");
  g.selfplay_visits = get_int("gen", "selfplay_visits");
  g.victim_visits = get_int("gen", "victim_visits");
  g.adversary_visits = get_int("gen", "adversary_visits");
  g.pass_alive_defense = get_bool("gen", "pass_alive_defense");
  g.dirichlet_alpha = get_double("gen", "dirichlet_alpha");
  g.noise_fraction = get_double("gen", "noise_fraction");
  g.temperature_early = get_double("gen", "temperature_early");
  g.temperature = get_double("gen", "temperature");
  g.early_moves_fraction = get_double("gen", "early_moves_fraction");
  g.random_opening_moves = get_int("gen", "random_opening_moves");
  g.root_noise = get_bool("gen", "root_noise");
  g.search_base = search_config();
  g.validate();
  return g;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.batch_size = get_int("train", "batch_size");
  t.learning_rate = get_double("train", "learning_rate");
  t.momentum = get_double("train", "momentum");
  t.l2 = get_double("train", "l2");
  t.games_per_round = get_int("train", "games_per_round");
  t.steps_per_round = get_int("train", "steps_per_round");
  t.window_m0 = get_int64("train", "window_m0");
  t.workers = workers();
  t.eval_every = get_int("train", "eval_every");
  t.eval_games = get_int("train", "eval_games");
  t.eval_opening_moves = get_int("train", "eval_opening_moves");
  t.seed = seed();
  if (t.batch_size < 1 || t.games_per_round < 1 || t.steps_per_round < 0 || t.eval_every < 1 || t.eval_games < 1 ||
      t.window_m0 < 1 || t.learning_rate <= 0) {
    throw ConfigError("train: sizes and rates must be positive");
  }
  return t;
}

Budget RunConfig::train_budget() const { return {get_int64("train", "max_games"), get_int64("train", "max_steps")}; }

DefensePlan RunConfig::defense_plan() const {
  DefensePlan p;
  p.adversary_fraction = get_double("defend", "adversary_fraction");
  p.selfplay_visits = get_int("defend", "selfplay_visits");
  p.victim_visits = get_int("defend", "victim_visits");
  p.adversary_visits = get_int("defend", "adversary_visits");
  p.plateau_delta = get_double("defend", "plateau_delta");
  p.plateau_points = get_int("defend", "plateau_points");
  p.eval_victim_visits_override = get_int("defend", "eval_victim_visits");
  p.eval_adversary_visits_override = get_int("defend", "eval_adversary_visits");
  p.pass_alive_defense_below = get_int("defend", "pass_alive_defense_below");
  if (p.adversary_fraction < 0 || p.adversary_fraction > 1) throw ConfigError("defend.adversary_fraction in [0,1]");
  return p;
}

Budget RunConfig::defense_budget() const {
  return {get_int64("defend", "max_games"), get_int64("defend", "max_steps")};
}

AttackPlan RunConfig::attack_plan() const {
  AttackPlan p;
  p.visit_schedule = get_int_list("attack", "visit_schedule");
  p.high_visit_cutoff = get_int("attack", "high_visit_cutoff");
  p.tracker_window = static_cast<std::size_t>(get_int("attack", "tracker_window"));
  p.adversary_visits = get_int("attack", "adversary_visits");
  p.eval_victim_visits = get_int("attack", "eval_victim_visits");
  p.pass_alive_defense_below = get_int("attack", "pass_alive_defense_below");
  make_curriculum(p.visit_schedule, p.high_visit_cutoff, p.tracker_window).validate();
  return p;
}

Budget RunConfig::attack_budget() const {
  return {get_int64("attack", "max_games"), get_int64("attack", "max_steps")};
}

IteratedConfig RunConfig::iterated_config() const {
  IteratedConfig c;
  c.plan.defend = defense_plan();
  c.plan.attack = attack_plan();
  c.train = train_config();
  c.gen = gen_config();
  c.defend_budget = defense_budget();
  c.attack_budget = attack_budget();
  c.iterations = get_int("iterate", "iterations");
  if (c.iterations < 0) throw ConfigError("iterate.iterations must be >= 0");
  return c;
}

CycleConfig RunConfig::cycle_config() const {
  CycleConfig c;
  c.min_group_size = get_int("heatmap", "min_group_size");
  c.min_interior_adversary = get_int("heatmap", "min_interior_adversary");
  return c;
}

}  // namespace advgo
