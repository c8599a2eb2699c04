#pragma once

// Go Text Protocol engine over a network and a search configuration.

#include <iosfwd>
#include <memory>
#include <string>

#include "advgo/search.hpp"

namespace advgo {

inline constexpr const char* kEngineName = "advgo";
inline constexpr const char* kEngineVersion = "0.1.0";

class GtpEngine {
 public:
  /// `opponent_model` turns genmove into an A-MCTS search.
  GtpEngine(std::shared_ptr<const Evaluator> net, SearchConfig search,
            std::shared_ptr<const Evaluator> opponent_model = nullptr);

  /// One command line in, one framed response out ("=..." or "?...", blank-line terminated).
  /// Empty for blank and comment lines.
  std::string handle(const std::string& line);
  bool quit_requested() const { return quit_; }
  const BoardState& board() const { return board_; }

 private:
  std::string execute(const std::string& cmd, const std::string& args, bool& ok);

  std::shared_ptr<const Evaluator> net_;
  std::shared_ptr<const Evaluator> opponent_model_;
  SearchConfig search_;
  BoardState board_;
  double komi_ = kDefaultKomi;
  int genmoves_ = 0;
  bool quit_ = false;
};

/// Reads commands until quit or end of input.
void run_gtp(GtpEngine& engine, std::istream& in, std::ostream& out);

}  // namespace advgo
