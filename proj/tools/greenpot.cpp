// greenpot: experiment runner. One subcommand per experiment; every flag has
// a config-file key of the same name (without dashes).

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "greenpot/harness.hpp"

namespace {

greenpot::Json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw greenpot::UsageError("cannot open config file " + path);
  try {
    greenpot::Json j = greenpot::Json::parse(in);
    if (!j.is_object()) throw greenpot::UsageError("config file must hold a JSON object");
    return j;
  } catch (const greenpot::Json::exception& e) {
    throw greenpot::UsageError("malformed config file: " + std::string(e.what()));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Green potential experiments"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path;
  std::string output_dir;
  std::string seed;
  bool force = false;
  app.add_option("--config", config_path, "JSON config file (keys as flag names; plus experiment, output)");
  app.add_option("--output", output_dir, "directory for <experiment>.json/.csv reports (default greenpot-out)");
  app.add_option("--seed", seed, "global seed");
  app.add_flag("--force", force, "let config-file values override command-line flags");

  // flag values are kept as strings and typed by the harness
  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, CLI::App*> commands;
  for (const auto& name : greenpot::experiment_names()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    commands[name] = sub;
    for (const auto& key : greenpot::experiment_options(name)) {
      if (key == "seed") continue;
      sub->add_option("--" + key, values[name][key]);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : greenpot::kExitUsage;
  }

  try {
    greenpot::Json file = config_path.empty() ? greenpot::Json::object() : read_config(config_path);
    std::string experiment;
    greenpot::Json cli = greenpot::Json::object();
    for (const auto& [name, sub] : commands) {
      if (!sub->parsed()) continue;
      experiment = name;
      for (const auto& [key, value] : values[name]) {
        if (sub->count("--" + key) > 0) cli[key] = value;
      }
    }
    if (!seed.empty()) cli["seed"] = seed;
    if (!output_dir.empty()) cli["output"] = output_dir;
    if (!experiment.empty()) cli["experiment"] = experiment;

    greenpot::Json merged = greenpot::merge_options(cli, file, force);
    if (!merged.contains("experiment") || !merged["experiment"].is_string()) {
      std::cerr << "no experiment given; choose a subcommand or set \"experiment\" in the config\n";
      return greenpot::kExitUsage;
    }
    greenpot::ExperimentConfig config;
    config.experiment = merged["experiment"].get<std::string>();
    config.output_dir = merged.value("output", std::string("greenpot-out"));
    merged.erase("experiment");
    merged.erase("output");
    config.options = merged;

    const greenpot::RunResult result = greenpot::run(config);
    if (result.exit_code == greenpot::kExitUsage) {
      std::cerr << "usage error: " << result.message << "\n";
    } else {
      std::cout << config.experiment << ": " << result.message << "\n";
      if (result.exit_code == greenpot::kExitPass || result.report.contains("result")) {
        std::cout << "reports in " << config.output_dir << "/" << config.experiment << ".{json,csv}\n";
      }
    }
    return result.exit_code;
  } catch (const greenpot::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return greenpot::kExitUsage;
  }
}
