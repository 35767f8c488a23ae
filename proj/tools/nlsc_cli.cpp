// Command-line front end: one subcommand per experiment.

#include "nlsc/experiment.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <cstdio>

int main(int argc, char** argv) {
  CLI::App app{"Spectral control toolkit for the cubic Schrodinger equation on the torus"};
  app.require_subcommand(0, 1);

  bool list_presets = false;
  app.add_flag("--list-presets", list_presets, "Print the shipped preset names and exit");

  struct Options {
    std::string config_path, preset_name, out_dir;
    long long seed = -1;
    int threads = 0;
  };
  std::vector<std::pair<CLI::App*, Options>> subs;
  subs.reserve(nlsc::experiment_names().size());
  for (const std::string& name : nlsc::experiment_names()) {
    CLI::App* sub = app.add_subcommand(name, "Run the '" + name + "' experiment");
    subs.push_back({sub, {}});
    Options& opt = subs.back().second;
    sub->add_option("--config", opt.config_path, "JSON config file");
    sub->add_option("--preset", opt.preset_name, "Start from a shipped preset");
    sub->add_option("--out", opt.out_dir, "Output directory");
    sub->add_option("--seed", opt.seed, "RNG seed override");
    sub->add_option("--threads", opt.threads, "Worker threads (0 = library default)");
  }

  CLI11_PARSE(app, argc, argv);

  if (list_presets) {
    for (const std::string& name : nlsc::preset_names()) std::printf("%s\n", name.c_str());
    return 0;
  }

  for (auto& [sub, opt] : subs) {
    if (!sub->parsed()) continue;
    try {
      nlsc::ExperimentConfig cfg;
      if (!opt.preset_name.empty()) cfg = nlsc::preset(opt.preset_name);
      if (!opt.config_path.empty()) cfg = nlsc::ExperimentConfig::from_json_file(opt.config_path);
      cfg.experiment = sub->get_name();
      if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
      if (opt.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opt.seed);
      if (opt.threads > 0) Eigen::setNbThreads(opt.threads);
      return nlsc::run_experiment(cfg);
    } catch (const std::invalid_argument& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 2;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 3;
    }
  }

  std::fprintf(stderr, "no experiment selected; see --help\n");
  return 2;
}
