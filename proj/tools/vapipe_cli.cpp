// vapipe: prepare / sweep / evaluate / project / synth

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "vapipe/experiment.hpp"

namespace {

int exit_code(vapipe::ErrorKind kind) {
  using vapipe::ErrorKind;
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::schema: return 3;
    case ErrorKind::parse: return 4;
    case ErrorKind::empty_corpus: return 5;
    case ErrorKind::io: return 6;
    case ErrorKind::divergence: return 7;
    case ErrorKind::degenerate: return 8;
    case ErrorKind::shape: return 9;
    case ErrorKind::leakage: return 10;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verbal-autopsy text + structured feature classification pipeline"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool print_config = false;
  app.add_option("--config", config_path, "JSON config file (defaults apply to absent keys)");
  app.add_option("--seed", seed, "master seed, overrides the config");
  app.add_option("--out", out, "output directory, overrides the config");
  app.add_flag("--print-config", print_config, "print the effective config and exit");

  auto* synth = app.add_subcommand("synth", "write a seeded synthetic corpus CSV");
  auto* prepare = app.add_subcommand("prepare", "tokenize narratives and encode structured features");
  auto* sweep = app.add_subcommand("sweep", "embedding mode x dimension table with a random forest scorer");
  auto* evaluate = app.add_subcommand("evaluate", "cross-validate every (setting, classifier) cell");
  auto* project = app.add_subcommand("project", "PCA projection of a saved paragraph model to 2-D");

  std::string model_path;
  std::optional<std::size_t> top_n;
  std::optional<std::string> what;
  project->add_option("--model", model_path, "saved paragraph model (JSON)")->required();
  project->add_option("--top", top_n, "number of rows to project");
  project->add_option("--what", what, "words or docs")->check(CLI::IsMember({"words", "docs"}));

  CLI11_PARSE(app, argc, argv);

  try {
    vapipe::ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = vapipe::load_experiment_config(config_path);
    } else {
      cfg.validate();
    }
    if (seed) cfg.seed = *seed;
    if (out) cfg.out = *out;
    if (top_n) cfg.project.top_n = *top_n;
    if (what) cfg.project.what = *what;

    if (print_config) {
      std::cout << vapipe::to_json(cfg).dump(2) << "\n";
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return 64;
    }
    if (synth->parsed()) vapipe::cmd_synth(cfg, std::cout);
    if (prepare->parsed()) vapipe::cmd_prepare(cfg, std::cout);
    if (sweep->parsed()) vapipe::cmd_sweep(cfg, std::cout);
    if (evaluate->parsed()) vapipe::cmd_evaluate(cfg, std::cout);
    if (project->parsed()) vapipe::cmd_project(cfg, model_path, std::cout);
  } catch (const vapipe::Error& e) {
    std::cerr << "error [" << vapipe::error_kind_name(e.kind()) << "]: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
