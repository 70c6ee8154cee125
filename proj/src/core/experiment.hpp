#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "core/adaptation.hpp"
#include "core/forward_models.hpp"
#include "core/proposal.hpp"
#include "core/samplers.hpp"

#include "json.hpp"

namespace gmis {

enum class Preset { Ode, Bimodal, BimodalFar, Heat, LinearGaussian };
enum class Scheme { PriorIs, AdaptiveIsGaussian, AdaptiveIsMixture, Pcn };

std::string preset_name(Preset preset);
Preset preset_from_name(const std::string& name);
std::string scheme_name(Scheme scheme);
Scheme scheme_from_name(const std::string& name);

struct ExperimentConfig {
  Preset preset = Preset::Ode;
  Scheme scheme = Scheme::AdaptiveIsMixture;
  std::uint64_t seed = 42;

  long n_samples = 0;
  long n_adp = 1000;
  long n_max = 0;
  int i_temp = 0;
  long n_temp = 500;

  double beta = 0.1;       // pCN step size
  double epsilon = 0.01;   // truncation threshold
  int k_override = 0;      // fixed K when positive
  std::vector<int> j_range = {1, 2, 3};
  Estimator estimator = Estimator::Clustering;

  int grid_points = 100;
  double domain_a = 0.0;
  double domain_b = 1.0;
  KernelKind kernel = KernelKind::Exponential;
  double kernel_scale = 2.0;

  // forward-model parameters
  int ode_nsteps = 1000;
  double ode_x0 = 1.0;
  double obs_noise_sd = 0.05;
  int obs_count = 21;
  double bimodal_amplitude = 1.0;
  HeatConfig heat;

  int thin = 10;
  double burn_in_frac = 0.1;
  bool desk_scale = false;
  std::string output_dir;
  std::string checkpoint_dir;
};

// Paper-scale parameters for each benchmark; desk_scale divides the sample
// counts (n_samples, n_max, n_temp) by 10 for quick runs.
ExperimentConfig preset_defaults(Preset preset, bool desk_scale = false);

// Parses a JSON config: preset is required, every other field is optional
// and falls back to the preset default. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& config);

void validate_config(const ExperimentConfig& config);

// Everything a run produces, kept in memory for tests and diagnostics.
struct RunResult {
  ExperimentConfig config;
  std::shared_ptr<const SpectralBasis> basis;
  std::shared_ptr<const Potential> potential;
  int truncation = 0;
  std::vector<ChainRecord> records;
  MixtureProposal proposal;
  bool has_proposal = false;
  ObservationSet observations;
  bool has_observations = false;
  Eigen::VectorXd truth_coeffs;
  bool has_truth = false;
  long refits = 0;
  long refit_failures = 0;
  long validity_violations = 0;
  long model_eval_failures = 0;
  std::vector<double> tempering_acceptance;
  nlohmann::json report;
};

// Builds the preset's basis, truth and data, runs the selected scheme and
// computes the diagnostics report. Pure compute, no file output.
RunResult execute(const ExperimentConfig& config);

// samples.csv, trace.csv, proposal.json (IS schemes), report.json,
// manifest.json and the observation files where the preset has data.
void write_artifacts(const RunResult& result, const std::string& dir);

// execute + write_artifacts into config.output_dir; returns the report.
nlohmann::json run_experiment(const ExperimentConfig& config);

// Side-by-side table of acceptance rates, ESS, tau and ACF curves from
// previously written run directories. Runs must share a preset; unreadable
// directories produce per-dir error entries.
nlohmann::json compare_runs(const std::vector<std::string>& dirs);

// Flattens a comparison document into CSV (one metric per row).
std::string comparison_to_csv(const nlohmann::json& comparison);

}  // namespace gmis
