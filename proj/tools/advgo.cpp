// advgo: self-play, victim-play, evaluation and analysis from the command line.

#include <iostream>

#include "CLI11.hpp"
#include "advgo/commands.hpp"

int main(int argc, char** argv) {
  using namespace advgo;
  CLI::App app{"Adversarial policies for Go on small boards"};
  app.require_subcommand(1);

  std::vector<std::string> configs;
  std::vector<std::string> overrides;
  std::string out_dir;
  bool resume = false;
  std::vector<std::string> args;

  const std::map<std::string, std::string> help{
      {"init", "write a freshly initialized network"},
      {"selfplay", "generate self-play games and training rows"},
      {"victimplay", "generate adversary-vs-victim games and adversary rows"},
      {"train", "train a victim by self-play from scratch or a checkpoint"},
      {"iterate", "alternate defense and attack phases"},
      {"match", "play two agents against each other"},
      {"elo", "fit ratings from match CSVs"},
      {"robustness", "victim win rate across a visit grid"},
      {"heatmap", "cyclic-capture heatmaps from a directory of SGFs"},
      {"gtp", "speak GTP on stdin/stdout"},
  };
  for (const auto& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name, help.count(name) ? help.at(name) : "");
    sub->add_option("-c,--config", configs, "config file(s), applied in order");
    sub->add_option("-s,--set", overrides, "section.key=value override");
    sub->add_option("-o,--out", out_dir, "output directory (default: run.out_dir)");
    if (name == "iterate") sub->add_flag("--resume", resume, "continue the run in the output directory");
    if (name == "elo") sub->add_option("csv", args, "match.csv files")->required();
    if (name == "heatmap") sub->add_option("sgf_dir", args, "directory of .sgf files")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  CommandRequest req;
  req.command = app.get_subcommands().front()->get_name();
  try {
    for (const auto& path : configs) req.config.apply_file(path);
    for (const auto& o : overrides) req.config.set(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  req.out_dir = out_dir;
  req.resume = resume;
  req.args = args;
  return run_command(req, std::cin, std::cout, std::cerr);
}
