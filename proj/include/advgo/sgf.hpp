#pragma once

// SGF (FF[4]) reading and writing for single-line Go games.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "advgo/rules.hpp"

namespace advgo {

struct GameRecord;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line, int column)
      : std::runtime_error(msg + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// A property kept verbatim; values are stored unescaped.
struct SgfProperty {
  std::string id;
  std::vector<std::string> values;

  bool operator==(const SgfProperty&) const = default;
};

struct SgfMove {
  Color color = Color::black;
  Move move;
  std::optional<std::string> comment;
  std::vector<SgfProperty> extra;

  bool operator==(const SgfMove&) const = default;
};

struct SgfGame {
  int size = 19;
  std::optional<double> komi;
  std::optional<std::string> rules;
  std::optional<std::string> black;
  std::optional<std::string> white;
  std::optional<std::string> result;
  std::optional<std::string> comment;
  std::vector<SgfMove> moves;
  /// Unrecognised root properties, in input order.
  std::vector<SgfProperty> root_extra;

  bool operator==(const SgfGame&) const = default;
};

/// Parses one game tree without variations. Throws ParseError.
SgfGame parse_sgf(const std::string& text);
/// Canonical text: root properties in fixed order, one node per line.
std::string write_sgf(const SgfGame& game);

/// SGF for a generated game; RE uses the scored margin or "Void" for a zero-scored move-limit game.
SgfGame sgf_from_record(const GameRecord& record);

/// "B+3.5", "W+R", ...; empty when unknown.
std::string sgf_result_string(Color winner, double margin);

}  // namespace advgo
