#include "advgo/sgf.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

#include "advgo/selfplay.hpp"

namespace advgo {

namespace {

class Reader {
 public:
  explicit Reader(const std::string& text) : s_(text) {}

  bool done() const { return pos_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }

  char get() {
    const char c = s_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_ws() {
    while (!done() && std::isspace(static_cast<unsigned char>(peek()))) get();
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    get();
  }

  int line() const { return line_; }
  int col() const { return col_; }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct RawNode {
  std::vector<SgfProperty> props;
  int line = 0;
  int col = 0;
};

std::string read_value(Reader& r) {
  const int line = r.line(), col = r.col();
  r.get();  // '['
  std::string v;
  for (;;) {
    if (r.done()) throw ParseError("unterminated property value", line, col);
    char c = r.get();
    if (c == ']') break;
    if (c == '\\') {
      if (r.done()) throw ParseError("unterminated property value", line, col);
      c = r.get();
      if (c == '\n') continue;  // soft line break
      if (c == '\r') {
        if (r.peek() == '\n') r.get();
        continue;
      }
    }
    v.push_back(c);
  }
  return v;
}

RawNode read_node(Reader& r) {
  RawNode node;
  node.line = r.line();
  node.col = r.col();
  r.get();  // ';'
  for (;;) {
    r.skip_ws();
    const char c = r.peek();
    if (!std::isalpha(static_cast<unsigned char>(c))) break;
    SgfProperty p;
    while (std::isalpha(static_cast<unsigned char>(r.peek()))) {
      const char ch = r.get();
      if (!std::isupper(static_cast<unsigned char>(ch))) r.fail("property identifiers must be upper case");
      p.id.push_back(ch);
    }
    r.skip_ws();
    if (r.peek() != '[') r.fail("property " + p.id + " has no value");
    while (r.peek() == '[') {
      p.values.push_back(read_value(r));
      r.skip_ws();
    }
    for (const auto& q : node.props) {
      if (q.id == p.id) r.fail("duplicate property " + p.id);
    }
    node.props.push_back(std::move(p));
  }
  return node;
}

int parse_int(const std::string& s, const RawNode& n, const char* what) {
  int v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw ParseError(std::string("bad ") + what, n.line, n.col);
  return v;
}

double parse_real(const std::string& s, const RawNode& n) {
  double v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError("bad komi", n.line, n.col);
  }
  return v;
}

const std::string& single(const SgfProperty& p, const RawNode& n) {
  if (p.values.size() != 1) throw ParseError("property " + p.id + " takes one value", n.line, n.col);
  return p.values[0];
}

Move parse_point(const std::string& v, int size, const RawNode& n) {
  if (v.empty() || (v == "tt" && size <= 19)) return Move::pass();
  if (v.size() != 2 || v[0] < 'a' || v[0] > 'z' || v[1] < 'a' || v[1] > 'z') {
    throw ParseError("bad point '" + v + "'", n.line, n.col);
  }
  const int col = v[0] - 'a', row = v[1] - 'a';
  if (col >= size || row >= size) throw ParseError("point '" + v + "' is off the board", n.line, n.col);
  return Move::play(row, col);
}

std::string escape(const std::string& v) {
  std::string out;
  for (char c : v) {
    if (c == ']' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

void put(std::string& out, const std::string& id, const std::string& value) {
  out += id;
  out += '[';
  out += escape(value);
  out += ']';
}

void put(std::string& out, const SgfProperty& p) {
  out += p.id;
  for (const auto& v : p.values) {
    out += '[';
    out += escape(v);
    out += ']';
  }
}

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

SgfGame parse_sgf(const std::string& text) {
  Reader r(text);
  r.expect('(');
  std::vector<RawNode> nodes;
  for (;;) {
    r.skip_ws();
    const char c = r.peek();
    if (c == ';') {
      nodes.push_back(read_node(r));
    } else if (c == ')') {
      r.get();
      break;
    } else if (c == '(') {
      r.fail("variations are not supported");
    } else if (r.done()) {
      r.fail("unexpected end of input");
    } else {
      r.fail(std::string("unexpected character '") + c + "'");
    }
  }
  r.skip_ws();
  if (!r.done()) r.fail("trailing content after the game tree");
  if (nodes.empty()) r.fail("game tree has no nodes");

  SgfGame g;
  const RawNode& root = nodes.front();
  std::vector<RawNode> move_nodes;
  RawNode root_moves;  // a move in the root node is treated as the first move node
  root_moves.line = root.line;
  root_moves.col = root.col;
  for (const auto& p : root.props) {
    if (p.id == "GM") {
      if (parse_int(single(p, root), root, "GM") != 1) throw ParseError("not a Go game", root.line, root.col);
    } else if (p.id == "FF") {
      parse_int(single(p, root), root, "FF");
    } else if (p.id == "SZ") {
      const std::string& v = single(p, root);
      if (v.find(':') != std::string::npos) throw ParseError("rectangular boards are not supported", root.line, root.col);
      g.size = parse_int(v, root, "SZ");
      if (g.size < 1 || g.size > 26) throw ParseError("board size out of range", root.line, root.col);
    } else if (p.id == "KM") {
      g.komi = parse_real(single(p, root), root);
    } else if (p.id == "RU") {
      g.rules = single(p, root);
    } else if (p.id == "PB") {
      g.black = single(p, root);
    } else if (p.id == "PW") {
      g.white = single(p, root);
    } else if (p.id == "RE") {
      g.result = single(p, root);
    } else if (p.id == "C") {
      g.comment = single(p, root);
    } else if (p.id == "B" || p.id == "W") {
      root_moves.props.push_back(p);
    } else {
      g.root_extra.push_back(p);
    }
  }
  if (!root_moves.props.empty()) move_nodes.push_back(root_moves);
  move_nodes.insert(move_nodes.end(), nodes.begin() + 1, nodes.end());

  for (const auto& n : move_nodes) {
    if (n.props.empty()) continue;
    SgfMove m;
    bool have = false;
    for (const auto& p : n.props) {
      if (p.id == "B" || p.id == "W") {
        if (have) throw ParseError("node has two moves", n.line, n.col);
        have = true;
        m.color = p.id == "B" ? Color::black : Color::white;
        m.move = parse_point(single(p, n), g.size, n);
      } else if (p.id == "C") {
        m.comment = single(p, n);
      } else {
        m.extra.push_back(p);
      }
    }
    if (!have) throw ParseError("node without a move", n.line, n.col);
    g.moves.push_back(std::move(m));
  }
  return g;
}

std::string write_sgf(const SgfGame& g) {
  std::string out = "(;GM[1]FF[4]";
  put(out, "SZ", std::to_string(g.size));
  if (g.komi) put(out, "KM", shortest(*g.komi));
  if (g.rules) put(out, "RU", *g.rules);
  if (g.black) put(out, "PB", *g.black);
  if (g.white) put(out, "PW", *g.white);
  if (g.result) put(out, "RE", *g.result);
  if (g.comment) put(out, "C", *g.comment);
  for (const auto& p : g.root_extra) put(out, p);
  for (const auto& m : g.moves) {
    out += "\n;";
    std::string point;
    if (!m.move.is_pass()) {
      point.push_back(static_cast<char>('a' + m.move.vertex.col));
      point.push_back(static_cast<char>('a' + m.move.vertex.row));
    }
    put(out, m.color == Color::black ? "B" : "W", point);
    if (m.comment) put(out, "C", *m.comment);
    for (const auto& p : m.extra) put(out, p);
  }
  out += ")\n";
  return out;
}

std::string sgf_result_string(Color winner, double margin) {
  if (winner == Color::empty) return "Void";
  return std::string(winner == Color::black ? "B+" : "W+") + shortest(std::abs(margin));
}

SgfGame sgf_from_record(const GameRecord& rec) {
  SgfGame g;
  g.size = rec.board_size;
  g.komi = rec.komi;
  g.rules = "tromp-taylor";
  g.black = rec.black_id;
  g.white = rec.white_id;
  g.result = sgf_result_string(rec.winner, rec.black_margin);
  Color c = Color::black;
  for (const auto& mv : rec.moves) {
    g.moves.push_back({c, mv, std::nullopt, {}});
    c = opponent(c);
  }
  return g;
}

}  // namespace advgo
