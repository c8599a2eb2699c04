#pragma once

// Run configuration: `key = value` lines grouped in [section]s, checked
// against a fixed schema of known keys and defaults.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "advgo/curriculum.hpp"
#include "advgo/cycles.hpp"

namespace advgo {

/// Directory searched for relative config paths that do not exist as given.
inline constexpr const char* kConfigDirEnv = "ADVGO_CONFIG_DIR";

class RunConfig {
 public:
  /// Every known key at its default.
  RunConfig();

  /// Throws ConfigError (unknown section/key, bad syntax) naming the line.
  static RunConfig parse(const std::string& text, const std::string& origin = "<config>");
  /// Resolves the path (see kConfigDirEnv) and parses it. Throws std::runtime_error when unreadable.
  static RunConfig load(const std::string& path);
  static std::filesystem::path resolve_path(const std::string& path);

  /// Applies the keys in `text` (or a file) on top of the current values.
  void apply(const std::string& text, const std::string& origin = "<config>");
  void apply_file(const std::string& path);

  /// "section.key=value". Throws ConfigError.
  void set(const std::string& assignment);
  void set(const std::string& section, const std::string& key, const std::string& value);

  const std::string& get(const std::string& section, const std::string& key) const;
  int get_int(const std::string& section, const std::string& key) const;
  std::int64_t get_int64(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key) const;
  bool get_bool(const std::string& section, const std::string& key) const;
  std::vector<int> get_int_list(const std::string& section, const std::string& key) const;

  /// All keys, sections and keys in schema order.
  std::string resolved() const;

  std::uint64_t seed() const { return static_cast<std::uint64_t>(get_int64("run", "seed")); }
  int workers() const { return get_int("run", "workers"); }
  NetworkConfig net_config() const;
  SearchConfig search_config() const;
  GenConfig gen_config() const;
  TrainConfig train_config() const;
  Budget train_budget() const;
  DefensePlan defense_plan() const;
  Budget defense_budget() const;
  AttackPlan attack_plan() const;
  Budget attack_budget() const;
  IteratedConfig iterated_config() const;
  CycleConfig cycle_config() const;

 private:
  struct Entry {
    std::string key;
    std::string value;
  };
  struct Section {
    std::string name;
    std::vector<Entry> entries;
  };
  Entry* find(const std::string& section, const std::string& key);
  const Entry* find(const std::string& section, const std::string& key) const;

  std::vector<Section> sections_;
};

/// "5" or "5:0.4,7:0.6".
std::map<int, double> parse_board_sizes(const std::string& text);

}  // namespace advgo
