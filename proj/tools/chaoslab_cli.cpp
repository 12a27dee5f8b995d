// Command-line front end over the C interface.

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "chaoslab/chaoslab.h"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> reps;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::optional<double> tmax;
};

int exit_code(chaoslab_status s) {
  switch (s) {
    case CHAOSLAB_OK:
      return 0;
    case CHAOSLAB_RUNTIME_ERROR:
      return 2;
    default:
      return 1;
  }
}

int report(chaoslab_status s) {
  if (s != CHAOSLAB_OK) std::fprintf(stderr, "chaoslab: %s\n", chaoslab_last_error());
  return exit_code(s);
}

void add_run_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON configuration file")->required();
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--reps", o.reps, "replications per estimate");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  cmd->add_option("--tmax", o.tmax, "largest time of the t-grid");
}

int run(const std::string& command, const Overrides& o) {
  chaoslab_config* cfg = nullptr;
  chaoslab_status s = chaoslab_config_load(o.config.c_str(), &cfg);
  if (s != CHAOSLAB_OK) return report(s);
  std::optional<int> threads = o.threads;
  if (!threads) {
    if (const char* env = std::getenv("CHAOSLAB_THREADS")) {
      try {
        threads = std::stoi(env);
      } catch (const std::exception&) {
        chaoslab_config_free(cfg);
        std::fprintf(stderr, "chaoslab: CHAOSLAB_THREADS must be an integer\n");
        return 1;
      }
    }
  }
  if (s == CHAOSLAB_OK && o.seed) s = chaoslab_config_set_seed(cfg, *o.seed);
  if (s == CHAOSLAB_OK && o.reps) s = chaoslab_config_set_reps(cfg, *o.reps);
  if (s == CHAOSLAB_OK && o.out) s = chaoslab_config_set_out(cfg, o.out->c_str());
  if (s == CHAOSLAB_OK && threads) s = chaoslab_config_set_threads(cfg, *threads);
  if (s == CHAOSLAB_OK && o.tmax) s = chaoslab_config_set_tmax(cfg, *o.tmax);
  if (s == CHAOSLAB_OK) s = chaoslab_run(cfg, command.c_str());
  const int code = report(s);
  chaoslab_config_free(cfg);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poisson chaos and superconcentration diagnostics"};
  app.set_version_flag("--version", chaoslab_version());
  app.require_subcommand(1);

  Overrides o;
  std::string command;
  const std::pair<const char*, const char*> commands[] = {
      {"sample", "draw one Poisson pattern"},
      {"evolve", "simulate a birth-death trajectory and its slices"},
      {"diagnose", "run the configured diagnostics"},
      {"scan", "run the diagnostics over a parameter grid"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_run_flags(sub, o);
    sub->callback([&command, n = std::string(name)] { command = n; });
  }

  std::string report_path, plot_out = ".";
  auto* plot = app.add_subcommand("plot", "render SVG plots of a diagnose or scan report");
  plot->add_option("report", report_path, "diagnose.json or scan.json")->required();
  plot->add_option("--out", plot_out, "output directory");
  plot->callback([&command] { command = "plot"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (command == "plot") return report(chaoslab_plot(report_path.c_str(), plot_out.c_str()));
  return run(command, o);
}
