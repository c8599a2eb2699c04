#include "advgo/gtp.hpp"

#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>

#include "advgo/random.hpp"
#include "advgo/selfplay.hpp"

namespace advgo {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

std::optional<Color> parse_color(const std::string& s) {
  const std::string c = lower(s);
  if (c == "b" || c == "black") return Color::black;
  if (c == "w" || c == "white") return Color::white;
  return std::nullopt;
}

const char* kCommands[] = {"protocol_version", "name",  "version", "known_command", "list_commands", "boardsize",
                           "clear_board",      "komi",  "play",    "genmove",       "showboard",     "quit"};

}  // namespace

GtpEngine::GtpEngine(std::shared_ptr<const Evaluator> net, SearchConfig search,
                     std::shared_ptr<const Evaluator> opponent_model)
    : net_(std::move(net)), opponent_model_(std::move(opponent_model)), search_(search), board_(19, kDefaultKomi) {
  if (!net_) throw ConfigError("gtp needs a network");
  search_.validate();
}

std::string GtpEngine::execute(const std::string& cmd, const std::string& args, bool& ok) {
  std::istringstream in(args);
  auto fail = [&](const std::string& msg) {
    ok = false;
    return msg;
  };
  if (cmd == "protocol_version") return "2";
  if (cmd == "name") return kEngineName;
  if (cmd == "version") return kEngineVersion;
  if (cmd == "known_command") {
    std::string c;
    in >> c;
    for (const char* k : kCommands) {
      if (c == k) return "true";
    }
    return "false";
  }
  if (cmd == "list_commands") {
    std::string out;
    for (const char* k : kCommands) out += (out.empty() ? "" : "\n") + std::string(k);
    return out;
  }
  if (cmd == "boardsize") {
    int n = 0;
    if (!(in >> n)) return fail("syntax error");
    if (n < kMinBoardSize || n > kMaxBoardSize) return fail("unacceptable size");
    board_ = BoardState(n, komi_);
    return "";
  }
  if (cmd == "clear_board") {
    board_ = BoardState(board_.size(), komi_);
    return "";
  }
  if (cmd == "komi") {
    double k = 0;
    if (!(in >> k)) return fail("syntax error");
    komi_ = k;
    board_ = board_.with_komi(k);
    return "";
  }
  if (cmd == "play") {
    std::string c, v;
    if (!(in >> c >> v)) return fail("syntax error");
    const auto color = parse_color(c);
    const auto move = move_from_gtp(v, board_.size());
    if (!color || !move) return fail("syntax error");
    const BoardState s = board_.to_move() == *color ? board_ : board_.with_to_move(*color);
    if (probe_move(s, *move) != MoveError::none) return fail("illegal move");
    board_ = apply_move(s, *move);
    return "";
  }
  if (cmd == "genmove") {
    std::string c;
    if (!(in >> c)) return fail("syntax error");
    const auto color = parse_color(c);
    if (!color) return fail("syntax error");
    BoardState s = board_.to_move() == *color ? board_ : board_.with_to_move(*color);
    if (s.game_over()) return "pass";
    SearchConfig cfg = search_;
    cfg.seed = derive_seed(search_.seed, {static_cast<std::uint64_t>(genmoves_++)});
    const SearchResult r = opponent_model_ ? run_amcts(s, *net_, *opponent_model_, cfg) : run_mcts(s, *net_, cfg);
    Rng rng(cfg.seed);
    const Move m = select_move(r, cfg, s.move_count(), rng);
    board_ = apply_move(s, m);
    return move_to_gtp(m, s.size());
  }
  if (cmd == "showboard") return "\n" + board_.to_string();
  if (cmd == "quit") {
    quit_ = true;
    return "";
  }
  return fail("unknown command");
}

std::string GtpEngine::handle(const std::string& raw) {
  std::string line;
  for (char c : raw) {
    if (c == '#') break;
    if (c == '\t') c = ' ';
    if (std::iscntrl(static_cast<unsigned char>(c)) && c != '\n') continue;
    line.push_back(c);
  }
  line = trim(line);
  if (line.empty()) return "";
  std::string id;
  std::size_t pos = 0;
  while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) ++pos;
  if (pos > 0 && (pos == line.size() || line[pos] == ' ')) {
    id = line.substr(0, pos);
    line = trim(line.substr(pos));
  }
  const auto sp = line.find(' ');
  const std::string cmd = lower(line.substr(0, sp));
  const std::string args = sp == std::string::npos ? "" : line.substr(sp + 1);
  bool ok = true;
  std::string body;
  try {
    body = execute(cmd, args, ok);
  } catch (const std::exception& e) {
    ok = false;
    body = e.what();
  }
  while (!body.empty() && body.back() == '\n') body.pop_back();
  std::string out = (ok ? "=" : "?") + id;
  if (!body.empty()) out += " " + body;
  return out + "\n\n";
}

void run_gtp(GtpEngine& engine, std::istream& in, std::ostream& out) {
  std::string line;
  while (!engine.quit_requested() && std::getline(in, line)) {
    const std::string r = engine.handle(line);
    if (!r.empty()) {
      out << r;
      out.flush();
    }
  }
}

}  // namespace advgo
