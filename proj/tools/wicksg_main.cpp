#include "wicksg/experiment.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

// "--set /solver/tol=1e-8" style overrides via JSON pointers
void apply_overrides(nlohmann::json& j, const std::vector<std::string>& sets) {
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw std::runtime_error("--set expects pointer=value, got: " + s);
    const std::string pointer = s.substr(0, eq);
    const std::string value = s.substr(eq + 1);
    j[nlohmann::json::json_pointer(pointer)] = nlohmann::json::parse(value, nullptr, true, true);
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Galerkin solvers for log-normal elliptic problems with a Wick-type preconditioner"};
  app.require_subcommand(1);

  std::string config_path, output_root, output_dir;
  std::vector<std::string> sets;
  bool has_seed = false;
  std::uint64_t seed = 0;

  CLI::App* run = app.add_subcommand("run", "execute an experiment config (or a manifest)");
  run->add_option("config", config_path, "JSON config file")->required();
  run->add_option("--output-root", output_root, "output root (default $WICKSG_OUTPUT_ROOT or .)");
  run->add_option("--output-dir", output_dir, "override output_dir");
  run->add_option("--seed", seed, "override seed")->each([&](const std::string&) { has_seed = true; });
  run->add_option("--set", sets, "override a field, e.g. --set /solver/tol=1e-6");

  CLI::App* validate = app.add_subcommand("validate", "check a config without computing");
  validate->add_option("config", config_path, "JSON config file")->required();
  validate->add_option("--set", sets, "override a field before validation");

  CLI::App* list = app.add_subcommand("list-experiments", "enumerate experiment kinds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& kind : wicksg::cli::list_experiments()) std::cout << kind << "\n";
      return 0;
    }
    nlohmann::json j = read_json(config_path);
    nlohmann::json& body = j.contains("config") ? j.at("config") : j;
    if (!output_dir.empty()) body["output_dir"] = output_dir;
    if (has_seed) body["seed"] = seed;
    apply_overrides(body, sets);
    if (validate->parsed()) {
      wicksg::cli::validate_config(j);
      std::cout << "ok\n";
      return 0;
    }
    const auto result = wicksg::cli::run_experiment(j, output_root);
    for (const auto& path : result.outputs) std::cout << path << "\n";
    std::cerr << "done in " << result.wall_time_s << " s\n";
    return 0;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}
