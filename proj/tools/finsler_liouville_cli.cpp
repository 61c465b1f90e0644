// finsler-liouville: list and run the named experiments.

#include "finsler_liouville/experiments.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <map>

namespace {

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw fl::InputError("cannot read config " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw fl::InputError("config " + path + ": " + e.what());
  }
}

int run(const std::vector<std::string>& requested, const std::string& config_path, const std::string& out_flag,
        bool parallel) {
  std::vector<std::string> ids;
  for (const auto& id : requested) {
    if (id == "all") {
      for (const auto& e : fl::list_experiments()) ids.push_back(e.id);
    } else if (!fl::is_experiment(id)) {
      std::cerr << "error: unknown experiment '" << id << "' (see 'finsler-liouville list')\n";
      return 1;
    } else {
      ids.push_back(id);
    }
  }
  const auto json = load_config(config_path);
  // --out, then the environment, then the config file.
  std::string out_dir;
  if (!out_flag.empty()) {
    out_dir = out_flag;
  } else if (const char* env = std::getenv("FINSLER_LIOUVILLE_OUT"); env && *env) {
    out_dir = env;
  }
  std::vector<fl::ExperimentConfig> configs;
  for (const auto& id : ids) {
    auto c = fl::ExperimentConfig::from_json(id, json);
    if (!out_dir.empty()) c.out_dir = out_dir;
    configs.push_back(std::move(c));
  }
  std::vector<fl::ExperimentResult> results;
  if (parallel) {
    std::vector<std::future<fl::ExperimentResult>> jobs;
    for (const auto& c : configs) jobs.push_back(std::async(std::launch::async, fl::run_experiment, c));
    for (auto& j : jobs) results.push_back(j.get());
  } else {
    for (const auto& c : configs) results.push_back(fl::run_experiment(c));
  }
  int status = 0;
  for (const auto& r : results) {
    const char* word = r.status == 0 ? "passed" : r.status == 2 ? "FAILED" : "ERROR";
    std::cout << r.id << ": " << word;
    if (r.status == 1) std::cout << " (" << r.report["error"]["message"].get<std::string>() << ")";
    std::cout << '\n';
    status = std::max(status, r.status == 1 ? 3 : r.status);
  }
  // Each experiment may pick its own directory; one MANIFEST per directory.
  std::map<std::string, std::pair<std::vector<fl::ExperimentConfig>, std::vector<fl::ExperimentResult>>> by_dir;
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto& slot = by_dir[configs[i].out_dir];
    slot.first.push_back(configs[i]);
    slot.second.push_back(results[i]);
  }
  for (const auto& [dir, entry] : by_dir) fl::write_manifest(dir, entry.first, entry.second);
  // 0 all passed, 2 a check failed, 1 an experiment raised an error.
  return status == 3 ? 1 : status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anisotropic Liouville experiments."};
  app.footer("\n" + fl::config_help() +
             "\n\nFINSLER_LIOUVILLE_OUT overrides the output directory of the config file;"
             "\n--out overrides both.\n\nExit status: 0 all checks passed, 2 a check failed, 1 error.");
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "Print the experiment ids with one-line descriptions.");

  auto* run_cmd = app.add_subcommand("run", "Run experiments; 'all' runs the whole catalog.");
  std::vector<std::string> ids;
  std::string config_path, out_dir;
  bool parallel = false;
  run_cmd->add_option("ids", ids, "Experiment ids")->required();
  run_cmd->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out_dir, "Output directory");
  run_cmd->add_flag("--parallel", parallel, "Run the experiments concurrently");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& e : fl::list_experiments()) std::cout << e.id << "  " << e.description << '\n';
      return 0;
    }
    return run(ids, config_path, out_dir, parallel);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
