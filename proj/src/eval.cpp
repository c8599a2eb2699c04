#include "advgo/eval.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

namespace advgo {

std::shared_ptr<const NetworkEvaluator> load_evaluator(const std::string& path) {
  if (!std::filesystem::exists(path)) throw CheckpointMissing("checkpoint not found: " + path);
  return std::make_shared<NetworkEvaluator>(std::make_shared<const NetworkParameters>(load_checkpoint(path)));
}

void MatchSpec::validate() const {
  if (games < 1) throw ConfigError("a match needs at least one game");
  if (!a.net || !b.net) throw ConfigError("both agents need a network");
  if (a.visits < 1 || b.visits < 1) throw ConfigError("visits must be >= 1");
  if (board_size < kMinBoardSize || board_size > kMaxBoardSize) throw ConfigError("board size out of range");
}

WinRateCI MatchResult::a_ci(double confidence) const {
  WinRateCI ci = clopper_pearson(a_wins, static_cast<int>(games.size()), confidence);
  ci.losses = static_cast<int>(games.size()) - a_wins;
  return ci;
}

std::vector<int> MatchResult::outcomes() const {
  std::vector<int> out;
  out.reserve(games.size());
  for (std::size_t i = 0; i < games.size(); ++i) out.push_back(games[i].winner == a_colors[i] ? 1 : 0);
  return out;
}

MatchResult run_match(const MatchSpec& spec) {
  spec.validate();
  auto agent = [](const AgentSpec& self, const AgentSpec& other) {
    Agent g;
    g.id = self.id;
    g.net = self.net;
    g.visits = self.visits;
    if (self.amcts) g.opponent_model = other.net;
    g.learner = self.explore;
    g.adversary = self.amcts;
    return g;
  };
  const Agent a = agent(spec.a, spec.b);
  const Agent b = agent(spec.b, spec.a);
  GenConfig g;
  g.board_size_distribution = {{spec.board_size, 1.0}};
  g.komi = spec.komi;
  g.move_limit_factor = spec.move_limit_factor;
  g.random_opening_moves = spec.random_opening_moves;
  g.pass_alive_defense = spec.pass_alive_defense;
  g.search_base = spec.search_base;
  auto color_of = [&](int i) { return !spec.alternate_colors || i % 2 == 0 ? Color::black : Color::white; };
  MatchResult r;
  r.games = play_games(spec.games, spec.seed, g, [&](int i) { return GameAssignment{&a, &b, color_of(i)}; },
                       spec.workers);
  for (int i = 0; i < spec.games; ++i) {
    const Color c = color_of(i);
    r.a_colors.push_back(c);
    r.a_black_games += c == Color::black;
    const Color w = r.games[i].winner;
    if (w == Color::empty) ++r.undecided;
    else if (w == c) ++r.a_wins;
    else ++r.b_wins;
  }
  return r;
}

// ---- Clopper-Pearson -----------------------------------------------------

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_cf(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  const double qab = a + b, qap = a + 1, qam = a - 1;
  double c = 1, d = 1 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1) < 1e-15) break;
  }
  return h;
}

double bisect_beta(double a, double b, double target) {
  double lo = 0, hi = 1;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (regularized_incomplete_beta(a, b, mid) < target) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0 || b <= 0) throw DomainError("beta parameters must be positive");
  if (x <= 0) return 0;
  if (x >= 1) return 1;
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1) / (a + b + 2)) return front * beta_cf(a, b, x) / a;
  return 1 - front * beta_cf(b, a, 1 - x) / b;
}

WinRateCI clopper_pearson(int wins, int n, double confidence) {
  if (n < 1 || wins < 0 || wins > n) throw DomainError("clopper_pearson needs 0 <= wins <= n and n >= 1");
  if (!(confidence > 0 && confidence < 1)) throw DomainError("confidence must be in (0, 1)");
  const double alpha = 1 - confidence;
  WinRateCI ci;
  ci.wins = wins;
  ci.losses = n - wins;
  ci.confidence = confidence;
  ci.point = static_cast<double>(wins) / n;
  ci.lower = wins == 0 ? 0.0 : bisect_beta(wins, n - wins + 1, alpha / 2);
  ci.upper = wins == n ? 1.0 : bisect_beta(wins + 1, n - wins, 1 - alpha / 2);
  ci.lower = std::min(ci.lower, ci.point);
  ci.upper = std::max(ci.upper, ci.point);
  return ci;
}

// ---- Elo -----------------------------------------------------------------

double elo_expected_score(double rating_a, double rating_b) {
  return 1.0 / (1.0 + std::pow(10.0, -(rating_a - rating_b) / 400.0));
}

double EloModel::expected_score(const std::string& a, const std::string& b) const {
  return elo_expected_score(ratings.at(a), ratings.at(b));
}

EloModel fit_elo(const std::vector<PairTally>& results, const std::string& anchor, double prior_sigma) {
  std::set<std::string> names;
  for (const auto& t : results) {
    if (t.a == t.b) throw DomainError("self-pairing in Elo input: " + t.a);
    if (t.wins_a < 0 || t.wins_b < 0) throw DomainError("negative win count");
    names.insert(t.a);
    names.insert(t.b);
  }
  if (names.empty()) throw DomainError("no games");
  EloModel model;
  model.prior_sigma = prior_sigma;
  model.anchor = anchor.empty() ? *names.begin() : anchor;
  if (!names.count(model.anchor)) throw DomainError("anchor has no games: " + model.anchor);

  std::vector<std::string> order(names.begin(), names.end());
  std::map<std::string, int> idx;
  for (std::size_t i = 0; i < order.size(); ++i) idx[order[i]] = static_cast<int>(i);
  const int n = static_cast<int>(order.size());

  // connectivity over pairs that actually played
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& t : results) {
    if (t.wins_a + t.wins_b > 0) parent[find(idx[t.a])] = find(idx[t.b]);
  }
  for (int i = 1; i < n; ++i) {
    if (find(i) != find(0)) throw DisconnectedGraph("game graph is not connected: " + order[i]);
  }

  const double k = std::log(10.0) / 400.0;
  const double inv_var = 1.0 / (prior_sigma * prior_sigma);
  const int anchor_i = idx[model.anchor];
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);

  auto objective = [&](const Eigen::VectorXd& x) {
    double f = 0;
    for (const auto& t : results) {
      const double d = k * (x[idx[t.a]] - x[idx[t.b]]);
      // log sigmoid, stable for large |d|
      auto logsig = [](double z) { return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); };
      f += t.wins_a * logsig(d) + t.wins_b * logsig(-d);
    }
    for (int i = 0; i < n; ++i) {
      if (i != anchor_i) f -= 0.5 * x[i] * x[i] * inv_var;
    }
    return f;
  };

  for (int it = 0; it < 500; ++it) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);  // negative Hessian
    for (const auto& t : results) {
      const int a = idx[t.a], b = idx[t.b];
      const double p = 1.0 / (1.0 + std::exp(-k * (r[a] - r[b])));
      const double total = t.wins_a + t.wins_b;
      const double ga = k * (t.wins_a - total * p);
      g[a] += ga;
      g[b] -= ga;
      const double w = k * k * total * p * (1 - p);
      h(a, a) += w;
      h(b, b) += w;
      h(a, b) -= w;
      h(b, a) -= w;
    }
    for (int i = 0; i < n; ++i) {
      if (i == anchor_i) continue;
      g[i] -= r[i] * inv_var;
      h(i, i) += inv_var;
    }
    g[anchor_i] = 0;
    h.row(anchor_i).setZero();
    h.col(anchor_i).setZero();
    h(anchor_i, anchor_i) = 1;
    model.gradient_norm = g.norm();
    model.iterations = it;
    if (model.gradient_norm < 1e-8) break;
    const Eigen::VectorXd step = h.ldlt().solve(g);
    // damped Newton: halve the step until the posterior does not decrease
    const double f0 = objective(r);
    double t = 1.0;
    Eigen::VectorXd next = r + step;
    while (objective(next) < f0 && t > 1e-8) {
      t *= 0.5;
      next = r + t * step;
    }
    r = next;
  }
  for (int i = 0; i < n; ++i) model.ratings[order[i]] = i == anchor_i ? 0.0 : r[i];
  return model;
}

// ---- robustness ----------------------------------------------------------

TrainingRobustness training_compute_robustness(const std::vector<AttackRun>& runs, double p,
                                               std::optional<double> victim_compute, bool strict,
                                               double confidence) {
  if (!(p > 0 && p < 1)) throw DomainError("p must be in (0, 1)");
  TrainingRobustness best;
  best.p_level = p;
  bool found = false;
  for (std::size_t ri = 0; ri < runs.size(); ++ri) {
    for (std::size_t pi = 0; pi < runs[ri].size(); ++pi) {
      const ComputePoint& pt = runs[ri][pi];
      if (pt.games < 1) continue;
      const double rate = strict ? clopper_pearson(pt.wins, pt.games, confidence).lower
                                 : static_cast<double>(pt.wins) / pt.games;
      if (rate >= 1 - p) {
        if (!found || pt.compute < best.compute_to_exploit) {
          best.compute_to_exploit = pt.compute;
          best.run_index = ri;
          best.point_index = pi;
          found = true;
        }
        break;
      }
    }
  }
  if (!found) throw NeverAchieved("no attack run reached the target win rate");
  if (victim_compute) {
    if (!(*victim_compute > 0)) throw DomainError("victim compute must be positive");
    best.relative = best.compute_to_exploit / *victim_compute;
  }
  return best;
}

RobustnessReport inference_compute_robustness(const AgentSpec& victim, const AgentSpec& adversary,
                                              const AgentSpec& baseline, const std::vector<int>& visit_grid,
                                              const MatchSpec& base) {
  RobustnessReport report;
  report.victim = victim.id;
  report.adversary = adversary.id;
  report.baseline = baseline.id;
  for (int v : visit_grid) {
    RobustnessPoint pt;
    pt.victim_visits = v;
    MatchSpec m = base;
    m.a = victim;
    m.a.visits = v;
    m.seed = derive_seed(base.seed, {static_cast<std::uint64_t>(v)});
    m.b = adversary;
    pt.victim_vs_adversary = run_match(m).a_ci();
    m.b = baseline;
    pt.victim_vs_baseline = run_match(m).a_ci();
    pt.adversary_above_baseline = pt.victim_vs_adversary.point < pt.victim_vs_baseline.point;
    report.points.push_back(pt);
  }
  return report;
}

// ---- compute estimate ----------------------------------------------------

double estimate_katago_compute(double rows) {
  if (!(rows >= kKataGoBaseRows)) throw DomainError("row count below the third-run total");
  const double early = std::min(rows, kKataGoVisitSwitchRows) - kKataGoBaseRows;
  const double late = std::max(rows - kKataGoVisitSwitchRows, 0.0);
  return 6730.0 + (early * 1.25 + late * 1.75) * (5451.0 / 760807175.0);
}

// ---- tables --------------------------------------------------------------

std::string format_number(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_match_csv(std::ostream& out, const MatchResult& result, const MatchSpec& spec) {
  out << "game,agent_a,agent_b,a_color,winner,a_win,moves,black_margin,result\n";
  for (std::size_t i = 0; i < result.games.size(); ++i) {
    const GameRecord& g = result.games[i];
    out << i << ',' << spec.a.id << ',' << spec.b.id << ',' << color_name(result.a_colors[i]) << ','
        << color_name(g.winner) << ',' << (g.winner == result.a_colors[i] ? 1 : 0) << ',' << g.moves.size() << ','
        << format_number(g.black_margin, 1) << ',' << game_result_name(g.result) << '\n';
  }
}

void write_elo_csv(std::ostream& out, const EloModel& model) {
  out << "agent,elo,anchor\n";
  for (const auto& [name, r] : model.ratings) {
    out << name << ',' << format_number(r, 2) << ',' << (name == model.anchor ? 1 : 0) << '\n';
  }
}

void write_robustness_csv(std::ostream& out, const RobustnessReport& report) {
  out << "victim_visits,vs_adversary,vs_adversary_lower,vs_adversary_upper,vs_baseline,vs_baseline_lower,"
         "vs_baseline_upper,adversary_above_baseline\n";
  for (const auto& p : report.points) {
    out << p.victim_visits << ',' << format_number(p.victim_vs_adversary.point) << ','
        << format_number(p.victim_vs_adversary.lower) << ',' << format_number(p.victim_vs_adversary.upper) << ','
        << format_number(p.victim_vs_baseline.point) << ',' << format_number(p.victim_vs_baseline.lower) << ','
        << format_number(p.victim_vs_baseline.upper) << ',' << (p.adversary_above_baseline ? 1 : 0) << '\n';
  }
}

}  // namespace advgo
