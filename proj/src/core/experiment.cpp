#include "core/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "core/diagnostics.hpp"
#include "core/errors.hpp"
#include "core/io_util.hpp"
#include "core/version.hpp"

namespace gmis {

namespace fs = std::filesystem;

std::string preset_name(Preset preset) {
  switch (preset) {
    case Preset::Ode:
      return "ode";
    case Preset::Bimodal:
      return "bimodal";
    case Preset::BimodalFar:
      return "bimodal-far";
    case Preset::Heat:
      return "heat";
    case Preset::LinearGaussian:
      return "linear-gaussian";
  }
  throw ParamError("preset: unknown value");
}

Preset preset_from_name(const std::string& name) {
  if (name == "ode") return Preset::Ode;
  if (name == "bimodal") return Preset::Bimodal;
  if (name == "bimodal-far") return Preset::BimodalFar;
  if (name == "heat") return Preset::Heat;
  if (name == "linear-gaussian") return Preset::LinearGaussian;
  throw ParamError("preset: unknown name '" + name + "'");
}

std::string scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::PriorIs:
      return "prior-is";
    case Scheme::AdaptiveIsGaussian:
      return "adaptive-is-gaussian";
    case Scheme::AdaptiveIsMixture:
      return "adaptive-is-mixture";
    case Scheme::Pcn:
      return "pcn";
  }
  throw ParamError("scheme: unknown value");
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "prior-is") return Scheme::PriorIs;
  if (name == "adaptive-is-gaussian") return Scheme::AdaptiveIsGaussian;
  if (name == "adaptive-is-mixture") return Scheme::AdaptiveIsMixture;
  if (name == "pcn") return Scheme::Pcn;
  throw ParamError("scheme: unknown name '" + name + "'");
}

ExperimentConfig preset_defaults(Preset preset, bool desk_scale) {
  ExperimentConfig config;
  config.preset = preset;
  config.desk_scale = desk_scale;

  switch (preset) {
    case Preset::Ode:
      config.seed = 1;
      config.n_samples = 300000;
      config.n_adp = 1000;
      config.n_max = 200000;
      config.i_temp = 0;
      config.beta = 0.1;
      config.grid_points = 100;
      config.domain_a = 0.0;
      config.domain_b = 1.0;
      config.kernel = KernelKind::Exponential;
      config.kernel_scale = 2.0;
      config.obs_noise_sd = 0.05;
      config.obs_count = 21;  // measured every T/20 from 0 to T
      break;
    case Preset::Bimodal:
    case Preset::BimodalFar:
      config.seed = preset == Preset::BimodalFar ? 42 : 1;
      config.n_samples = 500000;
      config.n_adp = 1000;
      config.n_max = 400000;
      config.i_temp = 0;
      config.beta = 0.5;
      config.grid_points = 100;
      config.domain_a = 0.0;
      config.domain_b = 1.0;
      config.kernel = KernelKind::Exponential;
      config.kernel_scale = 2.0;
      config.bimodal_amplitude = preset == Preset::BimodalFar ? 2.0 : 1.0;
      break;
    case Preset::Heat:
      config.seed = 11;
      config.n_samples = 150000;
      config.n_adp = 500;
      config.n_max = 100000;
      config.i_temp = 11;
      config.n_temp = 500;
      config.beta = 0.1;
      config.grid_points = 100;
      config.domain_a = 0.0;
      config.domain_b = 2.0;
      config.kernel = KernelKind::SquaredExponential;
      config.kernel_scale = 0.3;
      config.obs_noise_sd = 0.1;
      config.obs_count = 50;
      config.heat = HeatConfig{};
      break;
    case Preset::LinearGaussian:
      config.seed = 42;
      config.n_samples = 200000;
      config.n_adp = 2000;
      config.n_max = 100000;
      config.i_temp = 0;
      config.beta = 0.2;
      config.grid_points = 50;
      config.domain_a = 0.0;
      config.domain_b = 1.0;
      config.kernel = KernelKind::Exponential;
      config.kernel_scale = 2.0;
      config.obs_noise_sd = 1.0;  // likelihood sigma on the spectral data
      config.obs_count = 5;
      config.k_override = 5;
      break;
  }

  if (desk_scale) {
    // Chains shrink tenfold; the tempering warm-up keeps its full budget,
    // since mode discovery is what the pre-run exists for.
    config.n_samples = std::max<long>(config.n_samples / 10, 1);
    config.n_max = config.n_max / 10;
  }
  return config;
}

void validate_config(const ExperimentConfig& config) {
  if (config.n_samples < 1) throw ParamError("config: n_samples must be >= 1");
  if (config.n_adp < 1) throw ParamError("config: n_adp must be >= 1");
  if (config.n_max < 0 || config.n_max > config.n_samples) {
    throw ParamError("config: n_max must lie in [0, n_samples]");
  }
  if (config.i_temp < 0) throw ParamError("config: i_temp must be >= 0");
  if (config.i_temp > 0 && config.n_temp < 1) {
    throw ParamError("config: n_temp must be >= 1 when i_temp > 0");
  }
  if (!(config.beta > 0.0 && config.beta <= 1.0)) {
    throw ParamError("config: beta must lie in (0, 1]");
  }
  if (config.k_override < 0) throw ParamError("config: k must be >= 0");
  if (config.k_override == 0 &&
      !(config.epsilon > 0.0 && config.epsilon < 1.0)) {
    throw ParamError("config: epsilon must lie in (0, 1)");
  }
  if (config.grid_points < 2) {
    throw ParamError("config: grid_points must be >= 2");
  }
  if (!(config.domain_b > config.domain_a)) {
    throw ParamError("config: domain must have positive length");
  }
  if (config.thin < 1) throw ParamError("config: thin must be >= 1");
  if (!(config.burn_in_frac >= 0.0 && config.burn_in_frac < 1.0)) {
    throw ParamError("config: burn_in_frac must lie in [0, 1)");
  }
  if (config.j_range.empty()) throw ParamError("config: j_range is empty");
  for (int j : config.j_range) {
    if (j < 1) throw ParamError("config: j_range entries must be >= 1");
  }
  if (config.scheme == Scheme::AdaptiveIsMixture &&
      config.estimator == Estimator::SingleGaussian) {
    throw ParamError(
        "config: the mixture scheme needs the clustering or em estimator");
  }
  if (!(config.obs_noise_sd > 0.0)) {
    throw ParamError("config: obs_noise_sd must be positive");
  }
  if (config.obs_count < 1) throw ParamError("config: obs_count must be >= 1");
  if (!(config.bimodal_amplitude > 0.0)) {
    throw ParamError("config: bimodal_amplitude must be positive");
  }
  if (config.heat.nx < 3 || config.heat.nt < 1) {
    throw ParamError("config: heat solver resolution too small");
  }
  if (!(config.heat.sensor_pos >= 0.0 &&
        config.heat.sensor_pos <= config.heat.length)) {
    throw ParamError("config: heat sensor outside the medium");
  }
}

namespace {

const char* const kConfigKeys[] = {
    "preset",     "scheme",       "seed",          "n_samples",
    "n_adp",      "n_max",        "i_temp",        "n_temp",
    "beta",       "epsilon",      "k",             "j_range",
    "estimator",  "grid_points",  "domain_a",      "domain_b",
    "kernel",     "kernel_scale", "ode_nsteps",    "ode_x0",
    "obs_noise_sd", "obs_count",  "bimodal_amplitude",
    "heat_nx",    "heat_nt",      "heat_length",   "heat_horizon",
    "heat_sensor_pos", "thin",    "burn_in_frac",  "desk_scale",
    "output_dir", "checkpoint_dir"};

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParamError("config: expected a JSON object");
  if (!doc.contains("preset")) throw ParamError("config: missing 'preset'");

  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (std::find_if(std::begin(kConfigKeys), std::end(kConfigKeys),
                     [&](const char* k) { return key == k; }) ==
        std::end(kConfigKeys)) {
      throw ParamError("config: unknown key '" + key + "'");
    }
  }

  const Preset preset = preset_from_name(doc.at("preset").get<std::string>());
  const bool desk_scale = doc.value("desk_scale", false);
  ExperimentConfig config = preset_defaults(preset, desk_scale);

  try {
    if (doc.contains("scheme")) {
      config.scheme = scheme_from_name(doc.at("scheme").get<std::string>());
    }
    if (doc.contains("seed")) config.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("n_samples")) config.n_samples = doc.at("n_samples").get<long>();
    if (doc.contains("n_adp")) config.n_adp = doc.at("n_adp").get<long>();
    if (doc.contains("n_max")) config.n_max = doc.at("n_max").get<long>();
    if (doc.contains("i_temp")) config.i_temp = doc.at("i_temp").get<int>();
    if (doc.contains("n_temp")) config.n_temp = doc.at("n_temp").get<long>();
    if (doc.contains("beta")) config.beta = doc.at("beta").get<double>();
    if (doc.contains("epsilon")) config.epsilon = doc.at("epsilon").get<double>();
    if (doc.contains("k")) config.k_override = doc.at("k").get<int>();
    if (doc.contains("j_range")) {
      config.j_range = doc.at("j_range").get<std::vector<int>>();
    }
    if (doc.contains("estimator")) {
      config.estimator =
          estimator_from_name(doc.at("estimator").get<std::string>());
    }
    if (doc.contains("grid_points")) {
      config.grid_points = doc.at("grid_points").get<int>();
    }
    if (doc.contains("domain_a")) config.domain_a = doc.at("domain_a").get<double>();
    if (doc.contains("domain_b")) config.domain_b = doc.at("domain_b").get<double>();
    if (doc.contains("kernel")) {
      config.kernel = kernel_kind_from_name(doc.at("kernel").get<std::string>());
    }
    if (doc.contains("kernel_scale")) {
      config.kernel_scale = doc.at("kernel_scale").get<double>();
    }
    if (doc.contains("ode_nsteps")) config.ode_nsteps = doc.at("ode_nsteps").get<int>();
    if (doc.contains("ode_x0")) config.ode_x0 = doc.at("ode_x0").get<double>();
    if (doc.contains("obs_noise_sd")) {
      config.obs_noise_sd = doc.at("obs_noise_sd").get<double>();
    }
    if (doc.contains("obs_count")) config.obs_count = doc.at("obs_count").get<int>();
    if (doc.contains("bimodal_amplitude")) {
      config.bimodal_amplitude = doc.at("bimodal_amplitude").get<double>();
    }
    if (doc.contains("heat_nx")) config.heat.nx = doc.at("heat_nx").get<int>();
    if (doc.contains("heat_nt")) config.heat.nt = doc.at("heat_nt").get<int>();
    if (doc.contains("heat_length")) {
      config.heat.length = doc.at("heat_length").get<double>();
    }
    if (doc.contains("heat_horizon")) {
      config.heat.horizon = doc.at("heat_horizon").get<double>();
    }
    if (doc.contains("heat_sensor_pos")) {
      config.heat.sensor_pos = doc.at("heat_sensor_pos").get<double>();
    }
    if (doc.contains("thin")) config.thin = doc.at("thin").get<int>();
    if (doc.contains("burn_in_frac")) {
      config.burn_in_frac = doc.at("burn_in_frac").get<double>();
    }
    if (doc.contains("output_dir")) {
      config.output_dir = doc.at("output_dir").get<std::string>();
    }
    if (doc.contains("checkpoint_dir")) {
      config.checkpoint_dir = doc.at("checkpoint_dir").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParamError(std::string("config: ") + e.what());
  }

  validate_config(config);
  return config;
}

nlohmann::json config_to_json(const ExperimentConfig& config) {
  nlohmann::json doc;
  doc["preset"] = preset_name(config.preset);
  doc["scheme"] = scheme_name(config.scheme);
  doc["seed"] = config.seed;
  doc["n_samples"] = config.n_samples;
  doc["n_adp"] = config.n_adp;
  doc["n_max"] = config.n_max;
  doc["i_temp"] = config.i_temp;
  doc["n_temp"] = config.n_temp;
  doc["beta"] = config.beta;
  doc["epsilon"] = config.epsilon;
  doc["k"] = config.k_override;
  doc["j_range"] = config.j_range;
  doc["estimator"] = estimator_name(config.estimator);
  doc["grid_points"] = config.grid_points;
  doc["domain_a"] = config.domain_a;
  doc["domain_b"] = config.domain_b;
  doc["kernel"] = kernel_kind_name(config.kernel);
  doc["kernel_scale"] = config.kernel_scale;
  doc["ode_nsteps"] = config.ode_nsteps;
  doc["ode_x0"] = config.ode_x0;
  doc["obs_noise_sd"] = config.obs_noise_sd;
  doc["obs_count"] = config.obs_count;
  doc["bimodal_amplitude"] = config.bimodal_amplitude;
  doc["heat_nx"] = config.heat.nx;
  doc["heat_nt"] = config.heat.nt;
  doc["heat_length"] = config.heat.length;
  doc["heat_horizon"] = config.heat.horizon;
  doc["heat_sensor_pos"] = config.heat.sensor_pos;
  doc["thin"] = config.thin;
  doc["burn_in_frac"] = config.burn_in_frac;
  doc["desk_scale"] = config.desk_scale;
  doc["output_dir"] = config.output_dir;
  doc["checkpoint_dir"] = config.checkpoint_dir;
  return doc;
}

namespace {

double acceptance_fraction(const std::vector<ChainRecord>& records, long from,
                           long to) {
  from = std::clamp<long>(from, 0, static_cast<long>(records.size()));
  to = std::clamp<long>(to, from, static_cast<long>(records.size()));
  if (to == from) return 0.0;
  long accepted = 0;
  for (long i = from; i < to; ++i) {
    if (records[static_cast<std::size_t>(i)].accepted) ++accepted;
  }
  return static_cast<double>(accepted) / static_cast<double>(to - from);
}

// Per-series ESS and lag-1 autocorrelation; NaN for constant series.
struct SeriesStats {
  double ess = std::numeric_limits<double>::quiet_NaN();
  double lag1 = std::numeric_limits<double>::quiet_NaN();
};

SeriesStats series_stats(const Eigen::VectorXd& trace) {
  SeriesStats stats;
  try {
    stats.ess = ess(trace);
    stats.lag1 = acf(trace, 1)(1);
  } catch (const Error&) {
    // constant or too-short series: leave NaN
  }
  return stats;
}

double median_of(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

nlohmann::json build_report(const ExperimentConfig& config,
                            const RunResult& result) {
  const auto& records = result.records;
  const long n = static_cast<long>(records.size());
  const long burn = static_cast<long>(std::floor(config.burn_in_frac * n));
  const long tail = n - burn;

  nlohmann::json report;
  report["preset"] = preset_name(config.preset);
  report["scheme"] = scheme_name(config.scheme);
  report["seed"] = config.seed;
  report["n_samples"] = n;
  report["burn_in"] = burn;
  report["truncation_dim"] = result.truncation;
  report["acceptance_rate"] = acceptance_fraction(records, 0, n);
  report["acceptance_first_window"] =
      acceptance_fraction(records, 0, std::min(config.n_adp, n));
  report["acceptance_final_segment"] =
      acceptance_fraction(records, std::min(config.n_max, n - 1), n);
  report["refits"] = result.refits;
  report["refit_failures"] = result.refit_failures;
  report["validity_violations"] = result.validity_violations;
  report["model_eval_failures"] = result.model_eval_failures;
  report["tempering_acceptance"] = result.tempering_acceptance;

  Eigen::VectorXd omf_trace(tail);
  for (long i = 0; i < tail; ++i) {
    omf_trace(i) = records[static_cast<std::size_t>(burn + i)].omf;
  }
  const SeriesStats omf_stats = series_stats(omf_trace);
  report["tau_omf"] =
      std::isnan(omf_stats.ess)
          ? 0.0
          : (static_cast<double>(tail) / omf_stats.ess - 1.0) / 2.0;
  report["ess_omf"] = omf_stats.ess;
  report["lag1_acf_omf"] = omf_stats.lag1;

  if (tail > 2) {
    const int max_lag = static_cast<int>(std::min<long>(100, tail - 1));
    try {
      const Eigen::VectorXd rho = acf(omf_trace, max_lag);
      report["acf_omf"] =
          std::vector<double>(rho.data(), rho.data() + rho.size());
    } catch (const Error&) {
      report["acf_omf"] = std::vector<double>{};
    }
  } else {
    report["acf_omf"] = std::vector<double>{};
  }

  // Per-mode ESS over the retained (positive-eigenvalue) modes.
  const int dim = result.basis->full_dim;
  std::vector<double> mode_ess;
  Eigen::VectorXd mode_trace(tail);
  for (int k = 0; k < dim; ++k) {
    if (result.basis->eigenvalues(k) <= 0.0) continue;
    for (long i = 0; i < tail; ++i) {
      mode_trace(i) = records[static_cast<std::size_t>(burn + i)].u(k);
    }
    const SeriesStats stats = series_stats(mode_trace);
    if (!std::isnan(stats.ess)) mode_ess.push_back(stats.ess);
  }
  nlohmann::json ess_summary;
  ess_summary["median"] = median_of(mode_ess);
  ess_summary["min"] = mode_ess.empty()
                           ? std::numeric_limits<double>::quiet_NaN()
                           : *std::min_element(mode_ess.begin(), mode_ess.end());
  ess_summary["max"] = mode_ess.empty()
                           ? std::numeric_limits<double>::quiet_NaN()
                           : *std::max_element(mode_ess.begin(), mode_ess.end());
  report["ess_per_mode"] = ess_summary;
  return report;
}

}  // namespace

RunResult execute(const ExperimentConfig& config) {
  validate_config(config);

  RunResult result;
  result.config = config;

  const Grid grid =
      make_uniform_grid(config.grid_points, config.domain_a, config.domain_b);
  const CovarianceKernel kernel{config.kernel, config.kernel_scale};
  auto basis = std::make_shared<const SpectralBasis>(build_basis(kernel, grid));
  result.basis = basis;

  Rng truth_rng(config.seed, rng_stream::kTruth);
  Rng noise_rng(config.seed, rng_stream::kNoise);
  Rng proposal_rng(config.seed, rng_stream::kProposalDraws);
  Rng coin_rng(config.seed, rng_stream::kAcceptCoins);
  Rng kmeans_rng(config.seed, rng_stream::kKmeans);

  // Truth, data and potential per preset.
  std::shared_ptr<Potential> potential;
  switch (config.preset) {
    case Preset::Ode: {
      result.truth_coeffs = sample_prior(*basis, truth_rng);
      result.has_truth = true;
      const Eigen::VectorXd truth_field = synthesize(*basis, result.truth_coeffs);
      const Eigen::VectorXd coords = Eigen::VectorXd::LinSpaced(
          config.obs_count, config.domain_a, config.domain_b);
      const ForwardFn forward = [&](const Eigen::VectorXd& field) {
        return ode_solve(grid, field, config.ode_x0, config.ode_nsteps, coords);
      };
      result.observations = simulate_data(forward, coords, truth_field,
                                          config.obs_noise_sd, noise_rng);
      result.has_observations = true;
      potential = std::make_shared<OdePotential>(grid, result.observations,
                                                 config.ode_x0,
                                                 config.ode_nsteps);
      break;
    }
    case Preset::Bimodal:
    case Preset::BimodalFar:
      potential =
          std::make_shared<BimodalPotential>(grid, config.bimodal_amplitude);
      break;
    case Preset::Heat: {
      result.truth_coeffs = sample_prior(*basis, truth_rng);
      result.has_truth = true;
      const Eigen::VectorXd truth_field = synthesize(*basis, result.truth_coeffs);
      const double dt_obs =
          (config.domain_b - config.domain_a) / config.obs_count;
      Eigen::VectorXd coords(config.obs_count);
      for (int i = 0; i < config.obs_count; ++i) {
        coords(i) = config.domain_a + dt_obs * (i + 1);
      }
      const ForwardFn forward = [&](const Eigen::VectorXd& field) {
        return heat_solve(grid, field, HeatBc::Robin, config.heat, coords);
      };
      result.observations = simulate_data(forward, coords, truth_field,
                                          config.obs_noise_sd, noise_rng);
      result.has_observations = true;
      potential = std::make_shared<HeatPotential>(grid, result.observations,
                                                  config.heat);
      break;
    }
    case Preset::LinearGaussian: {
      const int K = std::min(config.k_override > 0 ? config.k_override : 5,
                             basis->full_dim);
      const double coeffs[] = {0.8, -0.7, 0.6, 0.5, -0.4};
      Eigen::VectorXd data(K);
      for (int k = 0; k < K; ++k) {
        data(k) = coeffs[k % 5] * std::sqrt(basis->eigenvalues(k));
      }
      potential = std::make_shared<LinearGaussianPotential>(
          basis, data, config.obs_noise_sd);
      break;
    }
  }
  result.potential = potential;

  const PhiFn phi = [basis, potential](const Eigen::VectorXd& coeffs) {
    return (*potential)(synthesize(*basis, coeffs));
  };

  if (config.scheme == Scheme::Pcn) {
    result.truncation = config.k_override > 0
                            ? std::min(config.k_override, basis->full_dim)
                            : truncation_dim(*basis, config.epsilon);
    ChainState init;
    bool ready = false;
    for (int attempt = 0; attempt < 100 && !ready; ++attempt) {
      Eigen::VectorXd u = sample_prior(*basis, proposal_rng);
      const double p = phi(u);
      if (std::isfinite(p)) {
        init.u = std::move(u);
        init.phi = p;
        init.log_g = 0.0;
        ready = true;
      } else {
        ++result.model_eval_failures;
      }
    }
    if (!ready) throw NumericError("pcn: no finite starting state in 100 draws");

    const StepKernel kernel_fn = [&](const ChainState& state, Rng& prng,
                                     Rng& crng) {
      return pcn_step(state, config.beta, phi, *basis, prng, crng);
    };
    const OmfFn omf_fn = [&](const ChainState& state) {
      return state.phi + 0.5 * cameron_martin_norm_sq(*basis, state.u);
    };
    result.records = run_chain(kernel_fn, init, config.n_samples, proposal_rng,
                               coin_rng, omf_fn);
  } else {
    AdaptConfig adapt;
    adapt.n_tol = config.n_samples;
    adapt.n_adp = config.n_adp;
    adapt.epsilon = config.epsilon;
    adapt.k_override = config.k_override;
    adapt.j_range = config.j_range;
    adapt.checkpoint_dir = config.checkpoint_dir;
    switch (config.scheme) {
      case Scheme::PriorIs:
        adapt.n_max = 0;
        adapt.i_temp = 0;
        adapt.estimator = Estimator::SingleGaussian;
        break;
      case Scheme::AdaptiveIsGaussian:
        adapt.n_max = config.n_max;
        adapt.i_temp = config.i_temp;
        adapt.n_temp = config.n_temp;
        adapt.estimator = Estimator::SingleGaussian;
        break;
      case Scheme::AdaptiveIsMixture:
        adapt.n_max = config.n_max;
        adapt.i_temp = config.i_temp;
        adapt.n_temp = config.n_temp;
        adapt.estimator = config.estimator;
        break;
      default:
        break;
    }

    AdaptiveResult loop =
        adaptive_loop(adapt, phi, basis, proposal_rng, coin_rng, kmeans_rng);
    result.records = std::move(loop.records);
    result.proposal = std::move(loop.proposal);
    result.has_proposal = true;
    result.truncation = loop.truncation;
    result.refits = loop.refits;
    result.refit_failures = loop.refit_failures;
    result.validity_violations = loop.validity_violations;
    result.model_eval_failures += loop.model_eval_failures;
    result.tempering_acceptance = std::move(loop.tempering_acceptance);
  }

  result.report = build_report(config, result);
  return result;
}

namespace {

void write_manifest(const RunResult& result, const std::string& path) {
  nlohmann::json doc;
  doc["version"] = kVersion;
  doc["config"] = config_to_json(result.config);
  doc["rng"] = {
      {"family", "pcg32"},
      {"streams",
       {{"truth", rng_stream::kTruth},
        {"noise", rng_stream::kNoise},
        {"proposal_draws", rng_stream::kProposalDraws},
        {"accept_coins", rng_stream::kAcceptCoins},
        {"kmeans", rng_stream::kKmeans}}}};
  doc["derived"] = {{"truncation_dim", result.truncation},
                    {"full_dim", result.basis->full_dim}};
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

void write_trace_csv(const std::vector<ChainRecord>& records,
                     const std::string& path) {
  auto out = open_output(path);
  out << "iteration,accepted,phi,omf" << kCsvEol;
  for (std::size_t i = 0; i < records.size(); ++i) {
    out << i + 1 << ',' << (records[i].accepted ? 1 : 0) << ','
        << format_double(records[i].phi) << ',' << format_double(records[i].omf)
        << kCsvEol;
  }
}

void write_samples_csv(const std::vector<ChainRecord>& records, int thin,
                       const std::string& path) {
  auto out = open_output(path);
  const int dim = records.empty() ? 0 : static_cast<int>(records[0].u.size());
  out << "iteration";
  char label[24];
  for (int k = 1; k <= dim; ++k) {
    std::snprintf(label, sizeof(label), ",coeff_%03d", k);
    out << label;
  }
  out << kCsvEol;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::size_t iteration = i + 1;
    if (iteration % static_cast<std::size_t>(thin) != 0) continue;
    out << iteration;
    for (int k = 0; k < dim; ++k) {
      out << ',' << format_double(records[i].u(k));
    }
    out << kCsvEol;
  }
}

void write_diagnostic_curves(const RunResult& result, const std::string& dir) {
  const auto& records = result.records;
  const long n = static_cast<long>(records.size());
  const long burn =
      static_cast<long>(std::floor(result.config.burn_in_frac * n));
  const long tail = n - burn;

  {
    auto out = open_output(dir + "/acf_omf.csv");
    out << "lag,acf" << kCsvEol;
    if (result.report.contains("acf_omf")) {
      const auto& rho = result.report.at("acf_omf");
      for (std::size_t lag = 0; lag < rho.size(); ++lag) {
        out << lag << ',' << format_double(rho[lag].get<double>()) << kCsvEol;
      }
    }
  }

  {
    std::vector<char> flags;
    flags.reserve(records.size());
    for (const auto& record : records) flags.push_back(record.accepted ? 1 : 0);
    const int window = static_cast<int>(std::max<long>(1, n / 100));
    const std::vector<double> curve = acceptance_curve(flags, window);
    auto out = open_output(dir + "/acceptance_curve.csv");
    out << "iteration,rate" << kCsvEol;
    for (std::size_t i = 0; i < curve.size(); ++i) {
      out << i + static_cast<std::size_t>(window) << ','
          << format_double(curve[i]) << kCsvEol;
    }
  }

  // Per-mode and per-grid-point mixing diagnostics.
  {
    auto out = open_output(dir + "/per_mode.csv");
    out << "mode,ess,lag1_acf" << kCsvEol;
    Eigen::VectorXd trace(tail);
    for (int k = 0; k < result.basis->full_dim; ++k) {
      if (result.basis->eigenvalues(k) <= 0.0) continue;
      for (long i = 0; i < tail; ++i) {
        trace(i) = records[static_cast<std::size_t>(burn + i)].u(k);
      }
      const SeriesStats stats = series_stats(trace);
      out << k + 1 << ',' << format_double(stats.ess) << ','
          << format_double(stats.lag1) << kCsvEol;
    }
  }
  {
    Eigen::MatrixXd coeffs(tail, result.basis->full_dim);
    for (long i = 0; i < tail; ++i) {
      coeffs.row(i) = records[static_cast<std::size_t>(burn + i)].u.transpose();
    }
    const Eigen::MatrixXd fields = coeffs * result.basis->modes.transpose();
    auto out = open_output(dir + "/per_point.csv");
    out << "point,coordinate,ess,lag1_acf" << kCsvEol;
    for (int i = 0; i < result.basis->grid.size(); ++i) {
      const SeriesStats stats = series_stats(fields.col(i));
      out << i + 1 << ',' << format_double(result.basis->grid.points(i)) << ','
          << format_double(stats.ess) << ',' << format_double(stats.lag1)
          << kCsvEol;
    }
  }
}

}  // namespace

void write_artifacts(const RunResult& result, const std::string& dir) {
  fs::create_directories(dir);
  write_manifest(result, dir + "/manifest.json");
  write_trace_csv(result.records, dir + "/trace.csv");
  write_samples_csv(result.records, result.config.thin, dir + "/samples.csv");
  {
    auto out = open_output(dir + "/report.json");
    out << result.report.dump(2) << '\n';
  }
  if (result.has_proposal) {
    auto out = open_output(dir + "/proposal.json");
    out << proposal_to_json(result.proposal).dump(2) << '\n';
  }
  if (result.has_observations) {
    write_observations_csv(dir + "/observations.csv", result.observations);
    write_observations_sidecar(dir + "/observations.json", result.observations,
                               result.config.seed,
                               preset_name(result.config.preset));
  }
  write_diagnostic_curves(result, dir);
}

nlohmann::json run_experiment(const ExperimentConfig& config) {
  if (config.output_dir.empty()) {
    throw ParamError("config: output_dir is required for a run");
  }
  if (!config.checkpoint_dir.empty()) {
    fs::create_directories(config.checkpoint_dir);
  }
  RunResult result = execute(config);
  write_artifacts(result, config.output_dir);
  return result.report;
}

nlohmann::json compare_runs(const std::vector<std::string>& dirs) {
  if (dirs.size() < 2) {
    throw ParamError("compare: need at least 2 run directories");
  }

  struct Loaded {
    std::string dir;
    std::string preset;
    nlohmann::json report;
  };
  std::vector<Loaded> loaded;
  nlohmann::json errors = nlohmann::json::array();

  for (const auto& dir : dirs) {
    try {
      auto manifest_in = open_input(dir + "/manifest.json");
      const nlohmann::json manifest = nlohmann::json::parse(manifest_in);
      auto report_in = open_input(dir + "/report.json");
      nlohmann::json report = nlohmann::json::parse(report_in);
      loaded.push_back({dir,
                        manifest.at("config").at("preset").get<std::string>(),
                        std::move(report)});
    } catch (const std::exception& e) {
      errors.push_back({{"dir", dir}, {"error", e.what()}});
    }
  }

  if (loaded.size() < 2) {
    throw ParamError("compare: fewer than 2 readable run directories");
  }
  for (const auto& run : loaded) {
    if (run.preset != loaded.front().preset) {
      throw ParamError("compare: preset mismatch ('" + loaded.front().preset +
                       "' vs '" + run.preset + "' in " + run.dir + ")");
    }
  }

  nlohmann::json comparison;
  comparison["preset"] = loaded.front().preset;
  comparison["errors"] = std::move(errors);
  comparison["runs"] = nlohmann::json::array();
  for (const auto& run : loaded) {
    nlohmann::json entry;
    entry["dir"] = run.dir;
    entry["scheme"] = run.report.at("scheme");
    for (const char* key :
         {"acceptance_rate", "acceptance_final_segment", "tau_omf", "ess_omf",
          "lag1_acf_omf"}) {
      entry[key] = run.report.at(key);
    }
    entry["ess_per_mode_median"] = run.report.at("ess_per_mode").at("median");
    entry["acf_omf"] = run.report.at("acf_omf");
    comparison["runs"].push_back(std::move(entry));
  }
  return comparison;
}

std::string comparison_to_csv(const nlohmann::json& comparison) {
  const auto& runs = comparison.at("runs");
  std::string csv = "metric";
  for (const auto& run : runs) {
    csv += ',' + run.at("dir").get<std::string>();
  }
  csv += kCsvEol;

  auto add_row = [&](const std::string& name, auto getter) {
    csv += name;
    for (const auto& run : runs) {
      csv += ',';
      csv += getter(run);
    }
    csv += kCsvEol;
  };

  add_row("scheme",
          [](const nlohmann::json& run) { return run.at("scheme").get<std::string>(); });
  for (const char* key :
       {"acceptance_rate", "acceptance_final_segment", "tau_omf", "ess_omf",
        "lag1_acf_omf", "ess_per_mode_median"}) {
    add_row(key, [&](const nlohmann::json& run) {
      return format_double(run.at(key).get<double>());
    });
  }

  std::size_t max_lags = 0;
  for (const auto& run : runs) {
    max_lags = std::max(max_lags, run.at("acf_omf").size());
  }
  for (std::size_t lag = 0; lag < max_lags; ++lag) {
    add_row("acf_omf_lag_" + std::to_string(lag),
            [&](const nlohmann::json& run) -> std::string {
              const auto& rho = run.at("acf_omf");
              if (lag >= rho.size()) return "";
              return format_double(rho[lag].get<double>());
            });
  }
  return csv;
}

}  // namespace gmis
