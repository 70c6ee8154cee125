// Command-line runner for the gmis experiment library. Talks to the core
// exclusively through the C API in gmis/gmis.h.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gmis/gmis.h"
#include "json.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int exit_code(gmis_status status) {
  switch (status) {
    case GMIS_OK:
      return kExitOk;
    case GMIS_ERR_INVALID:
    case GMIS_ERR_CONFIG:
      return kExitConfig;
    case GMIS_ERR_RUNTIME:
      return kExitRuntime;
  }
  return kExitRuntime;
}

// Single-line machine-readable error on stderr.
void print_error(const std::string& message) {
  nlohmann::json doc;
  doc["error"] = message;
  std::cerr << doc.dump() << '\n';
}

int fail(gmis_status status) {
  print_error(gmis_last_error());
  return exit_code(status);
}

std::string take_string(char* owned) {
  std::string s = owned ? owned : "";
  gmis_string_free(owned);
  return s;
}

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    print_error("cannot open for writing: " + path);
    return false;
  }
  out << content;
  return true;
}

struct RunOptions {
  std::string config_path;
  std::string preset;
  std::string scheme;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<long> n_samples;
  std::optional<long> n_adp;
  std::optional<long> n_max;
  std::optional<double> beta;
  std::optional<int> grid_points;
  std::optional<int> thin;
  std::string estimator;
  std::string checkpoint_dir;
  bool desk_scale = false;
};

// Config file first, CLI flags layered on top.
std::optional<std::string> assemble_config(const RunOptions& opt) {
  nlohmann::json doc = nlohmann::json::object();
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path, std::ios::binary);
    if (!in) {
      print_error("cannot open config file: " + opt.config_path);
      return std::nullopt;
    }
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      print_error(std::string("config parse error: ") + e.what());
      return std::nullopt;
    }
  }
  if (!opt.preset.empty()) doc["preset"] = opt.preset;
  if (!opt.scheme.empty()) doc["scheme"] = opt.scheme;
  if (!opt.output_dir.empty()) doc["output_dir"] = opt.output_dir;
  if (opt.seed) doc["seed"] = *opt.seed;
  if (opt.n_samples) doc["n_samples"] = *opt.n_samples;
  if (opt.n_adp) doc["n_adp"] = *opt.n_adp;
  if (opt.n_max) doc["n_max"] = *opt.n_max;
  if (opt.beta) doc["beta"] = *opt.beta;
  if (opt.grid_points) doc["grid_points"] = *opt.grid_points;
  if (opt.thin) doc["thin"] = *opt.thin;
  if (!opt.estimator.empty()) doc["estimator"] = opt.estimator;
  if (!opt.checkpoint_dir.empty()) doc["checkpoint_dir"] = opt.checkpoint_dir;
  if (opt.desk_scale) doc["desk_scale"] = true;
  return doc.dump();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gmis — adaptive Gaussian-mixture independence sampler "
               "benchmarks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gmis_version()));

  RunOptions run_opt;
  auto* run = app.add_subcommand("run", "Run an experiment");
  run->add_option("-c,--config", run_opt.config_path, "Config JSON file");
  run->add_option("-p,--preset", run_opt.preset,
                  "Preset: ode|bimodal|bimodal-far|heat|linear-gaussian");
  run->add_option("-s,--scheme", run_opt.scheme,
                  "Scheme: prior-is|adaptive-is-gaussian|adaptive-is-mixture|"
                  "pcn");
  run->add_option("-o,--output-dir", run_opt.output_dir, "Artifact directory");
  run->add_option("--seed", run_opt.seed, "Root seed");
  run->add_option("-n,--n-samples", run_opt.n_samples, "Number of draws");
  run->add_option("--n-adp", run_opt.n_adp, "Draws between refits");
  run->add_option("--n-max", run_opt.n_max, "Adaptation freeze point");
  run->add_option("--beta", run_opt.beta,
                  "pCN step size (aim for 20-30% acceptance)");
  run->add_option("--grid-points", run_opt.grid_points, "Grid resolution");
  run->add_option("--thin", run_opt.thin, "samples.csv thinning stride");
  run->add_option("--estimator", run_opt.estimator,
                  "Mixture estimator: clustering|em");
  run->add_option("--checkpoint-dir", run_opt.checkpoint_dir,
                  "Write the proposal after every refit");
  run->add_flag("--desk-scale", run_opt.desk_scale,
                "Divide preset sample counts by 10");

  std::string preset_name;
  std::string preset_out;
  bool preset_desk = false;
  auto* preset = app.add_subcommand("preset", "Print a preset's full config");
  preset->add_option("name", preset_name, "Preset name")->required();
  preset->add_option("-o,--output", preset_out, "Write to file");
  preset->add_flag("--desk-scale", preset_desk,
                   "Divide sample counts by 10");

  std::string validate_path;
  auto* validate =
      app.add_subcommand("validate-config", "Parse, validate and resolve");
  validate->add_option("-c,--config", validate_path, "Config JSON file")
      ->required();

  std::vector<std::string> compare_dirs;
  std::string compare_out;
  std::string compare_csv;
  auto* compare =
      app.add_subcommand("compare", "Compare completed run directories");
  compare->add_option("dirs", compare_dirs, "Run directories")
      ->expected(2, -1);
  compare->add_option("-o,--output", compare_out, "Write JSON to file");
  compare->add_option("--csv", compare_csv, "Write CSV table to file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    print_error(e.what());
    return kExitConfig;
  }

  if (run->parsed()) {
    if (run_opt.config_path.empty() && run_opt.preset.empty()) {
      print_error("run: need --config or --preset");
      return kExitConfig;
    }
    const auto config = assemble_config(run_opt);
    if (!config) return kExitConfig;
    char* report = nullptr;
    const gmis_status status = gmis_run(config->c_str(), nullptr, &report);
    if (status != GMIS_OK) return fail(status);
    std::cout << take_string(report) << '\n';
    return kExitOk;
  }

  if (preset->parsed()) {
    char* config = nullptr;
    const gmis_status status =
        gmis_preset_config(preset_name.c_str(), preset_desk ? 1 : 0, &config);
    if (status != GMIS_OK) return fail(status);
    const std::string text = take_string(config);
    if (!preset_out.empty()) {
      if (!write_file(preset_out, text + "\n")) return kExitRuntime;
    } else {
      std::cout << text << '\n';
    }
    return kExitOk;
  }

  if (validate->parsed()) {
    std::ifstream in(validate_path, std::ios::binary);
    if (!in) {
      print_error("cannot open config file: " + validate_path);
      return kExitConfig;
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    char* resolved = nullptr;
    const gmis_status status =
        gmis_config_resolve(buffer.str().c_str(), &resolved);
    if (status != GMIS_OK) return fail(status);
    std::cout << take_string(resolved) << '\n';
    return kExitOk;
  }

  if (compare->parsed()) {
    std::vector<const char*> dirs;
    dirs.reserve(compare_dirs.size());
    for (const auto& dir : compare_dirs) dirs.push_back(dir.c_str());
    char* comparison = nullptr;
    const gmis_status status =
        gmis_compare(dirs.data(), dirs.size(), &comparison);
    if (status != GMIS_OK) return fail(status);
    const std::string text = take_string(comparison);

    if (!compare_csv.empty()) {
      char* csv = nullptr;
      const gmis_status csv_status = gmis_comparison_csv(text.c_str(), &csv);
      if (csv_status != GMIS_OK) return fail(csv_status);
      if (!write_file(compare_csv, take_string(csv))) return kExitRuntime;
    }
    if (!compare_out.empty()) {
      if (!write_file(compare_out, text + "\n")) return kExitRuntime;
    } else {
      std::cout << text << '\n';
    }
    return kExitOk;
  }

  return kExitConfig;
}
