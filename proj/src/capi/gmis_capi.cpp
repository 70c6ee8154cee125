#include "gmis/gmis.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "core/errors.hpp"
#include "core/experiment.hpp"
#include "core/proposal.hpp"
#include "core/spectral_basis.hpp"
#include "core/version.hpp"

#include "json.hpp"

struct gmis_basis {
  std::shared_ptr<const gmis::SpectralBasis> impl;
};

struct gmis_proposal {
  gmis::MixtureProposal impl;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Maps library exceptions onto status codes and records the message.
template <typename Fn>
gmis_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const gmis::ParamError& e) {
    set_error(e.what());
    return GMIS_ERR_CONFIG;
  } catch (const gmis::ShapeError& e) {
    set_error(e.what());
    return GMIS_ERR_CONFIG;
  } catch (const gmis::Error& e) {
    set_error(e.what());
    return GMIS_ERR_RUNTIME;
  } catch (const nlohmann::json::exception& e) {
    set_error(e.what());
    return GMIS_ERR_CONFIG;
  } catch (const std::bad_alloc&) {
    set_error("out of memory");
    return GMIS_ERR_RUNTIME;
  } catch (const std::exception& e) {
    set_error(e.what());
    return GMIS_ERR_RUNTIME;
  }
}

gmis_status require(bool ok, const char* message) {
  if (!ok) {
    set_error(message);
    return GMIS_ERR_INVALID;
  }
  return GMIS_OK;
}

}  // namespace

extern "C" {

const char* gmis_version(void) { return gmis::kVersion; }

const char* gmis_last_error(void) { return g_last_error.c_str(); }

void gmis_string_free(char* s) { delete[] s; }

gmis_status gmis_preset_config(const char* preset, int desk_scale,
                               char** config_json_out) {
  if (auto st = require(preset && config_json_out, "null argument")) return st;
  return guarded([&] {
    const gmis::ExperimentConfig config =
        gmis::preset_defaults(gmis::preset_from_name(preset), desk_scale != 0);
    *config_json_out = dup_string(gmis::config_to_json(config).dump(2));
    return GMIS_OK;
  });
}

gmis_status gmis_config_resolve(const char* config_json,
                                char** resolved_json_out) {
  if (auto st = require(config_json && resolved_json_out, "null argument")) {
    return st;
  }
  return guarded([&] {
    const nlohmann::json doc = nlohmann::json::parse(config_json);
    const gmis::ExperimentConfig config = gmis::config_from_json(doc);
    *resolved_json_out = dup_string(gmis::config_to_json(config).dump(2));
    return GMIS_OK;
  });
}

gmis_status gmis_run(const char* config_json, const char* output_dir,
                     char** report_json_out) {
  if (auto st = require(config_json && report_json_out, "null argument")) {
    return st;
  }
  return guarded([&] {
    const nlohmann::json doc = nlohmann::json::parse(config_json);
    gmis::ExperimentConfig config = gmis::config_from_json(doc);
    if (output_dir && *output_dir) config.output_dir = output_dir;
    const nlohmann::json report = gmis::run_experiment(config);
    *report_json_out = dup_string(report.dump(2));
    return GMIS_OK;
  });
}

gmis_status gmis_compare(const char* const* run_dirs, size_t n_dirs,
                         char** comparison_json_out) {
  if (auto st = require(run_dirs && comparison_json_out, "null argument")) {
    return st;
  }
  return guarded([&] {
    std::vector<std::string> dirs;
    dirs.reserve(n_dirs);
    for (size_t i = 0; i < n_dirs; ++i) {
      if (!run_dirs[i]) {
        set_error("null run directory");
        return GMIS_ERR_INVALID;
      }
      dirs.emplace_back(run_dirs[i]);
    }
    *comparison_json_out = dup_string(gmis::compare_runs(dirs).dump(2));
    return GMIS_OK;
  });
}

gmis_status gmis_comparison_csv(const char* comparison_json, char** csv_out) {
  if (auto st = require(comparison_json && csv_out, "null argument")) return st;
  return guarded([&] {
    const nlohmann::json doc = nlohmann::json::parse(comparison_json);
    *csv_out = dup_string(gmis::comparison_to_csv(doc));
    return GMIS_OK;
  });
}

gmis_status gmis_basis_create(const char* kernel_kind, double length_scale,
                              const double* points, size_t n_points,
                              gmis_basis** basis_out) {
  if (auto st = require(kernel_kind && points && basis_out && n_points >= 2,
                        "null argument or fewer than 2 points")) {
    return st;
  }
  return guarded([&] {
    gmis::Grid grid;
    grid.points = Eigen::Map<const Eigen::VectorXd>(
        points, static_cast<Eigen::Index>(n_points));
    const int n = static_cast<int>(n_points);
    grid.weights.resize(n);
    for (int i = 0; i < n; ++i) {
      const double left = i > 0 ? grid.points(i) - grid.points(i - 1) : 0.0;
      const double right =
          i + 1 < n ? grid.points(i + 1) - grid.points(i) : 0.0;
      grid.weights(i) = 0.5 * (left + right);
    }
    const gmis::CovarianceKernel kernel{
        gmis::kernel_kind_from_name(kernel_kind), length_scale};
    auto handle = std::make_unique<gmis_basis>();
    handle->impl = std::make_shared<const gmis::SpectralBasis>(
        gmis::build_basis(kernel, grid));
    *basis_out = handle.release();
    return GMIS_OK;
  });
}

void gmis_basis_free(gmis_basis* basis) { delete basis; }

gmis_status gmis_basis_dim(const gmis_basis* basis, size_t* dim_out) {
  if (auto st = require(basis && dim_out, "null argument")) return st;
  *dim_out = static_cast<size_t>(basis->impl->full_dim);
  return GMIS_OK;
}

gmis_status gmis_basis_eigenvalues(const gmis_basis* basis, double* alpha_out,
                                   size_t cap) {
  if (auto st = require(basis && alpha_out, "null argument")) return st;
  if (auto st = require(cap >= static_cast<size_t>(basis->impl->full_dim),
                        "eigenvalue buffer too small")) {
    return st;
  }
  std::memcpy(alpha_out, basis->impl->eigenvalues.data(),
              sizeof(double) * static_cast<size_t>(basis->impl->full_dim));
  return GMIS_OK;
}

gmis_status gmis_basis_truncation_dim(const gmis_basis* basis, double epsilon,
                                      size_t* k_out) {
  if (auto st = require(basis && k_out, "null argument")) return st;
  return guarded([&] {
    *k_out = static_cast<size_t>(gmis::truncation_dim(*basis->impl, epsilon));
    return GMIS_OK;
  });
}

gmis_status gmis_basis_project(const gmis_basis* basis, const double* field,
                               size_t n, double* coeffs_out) {
  if (auto st = require(basis && field && coeffs_out, "null argument")) {
    return st;
  }
  return guarded([&] {
    const Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(
        field, static_cast<Eigen::Index>(n));
    const Eigen::VectorXd coeffs = gmis::project(*basis->impl, f);
    std::memcpy(coeffs_out, coeffs.data(),
                sizeof(double) * static_cast<size_t>(coeffs.size()));
    return GMIS_OK;
  });
}

gmis_status gmis_basis_synthesize(const gmis_basis* basis,
                                  const double* coeffs, size_t n,
                                  double* field_out) {
  if (auto st = require(basis && coeffs && field_out, "null argument")) {
    return st;
  }
  return guarded([&] {
    const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(
        coeffs, static_cast<Eigen::Index>(n));
    const Eigen::VectorXd field = gmis::synthesize(*basis->impl, c);
    std::memcpy(field_out, field.data(),
                sizeof(double) * static_cast<size_t>(field.size()));
    return GMIS_OK;
  });
}

gmis_status gmis_proposal_parse(const gmis_basis* basis, const char* json,
                                gmis_proposal** proposal_out) {
  if (auto st = require(basis && json && proposal_out, "null argument")) {
    return st;
  }
  return guarded([&] {
    const nlohmann::json doc = nlohmann::json::parse(json);
    auto handle = std::make_unique<gmis_proposal>();
    handle->impl = gmis::proposal_from_json(doc, basis->impl);
    *proposal_out = handle.release();
    return GMIS_OK;
  });
}

void gmis_proposal_free(gmis_proposal* proposal) { delete proposal; }

gmis_status gmis_proposal_dump(const gmis_proposal* proposal,
                               char** json_out) {
  if (auto st = require(proposal && json_out, "null argument")) return st;
  return guarded([&] {
    *json_out = dup_string(gmis::proposal_to_json(proposal->impl).dump(2));
    return GMIS_OK;
  });
}

gmis_status gmis_proposal_validate(const gmis_proposal* proposal,
                                   char** violations_json_out) {
  if (auto st = require(proposal && violations_json_out, "null argument")) {
    return st;
  }
  return guarded([&] {
    const gmis::ValidityReport report = gmis::validate(proposal->impl);
    *violations_json_out = dup_string(nlohmann::json(report.violations).dump());
    return GMIS_OK;
  });
}

gmis_status gmis_proposal_log_density(const gmis_proposal* proposal,
                                      const double* coeffs, size_t n,
                                      double* log_density_out) {
  if (auto st =
          require(proposal && coeffs && log_density_out, "null argument")) {
    return st;
  }
  return guarded([&] {
    const Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(
        coeffs, static_cast<Eigen::Index>(n));
    *log_density_out = gmis::log_density_mixture(u, proposal->impl);
    return GMIS_OK;
  });
}

gmis_status gmis_proposal_sample(const gmis_proposal* proposal, uint64_t seed,
                                 uint64_t stream, size_t n_draws,
                                 double* coeffs_out) {
  if (auto st = require(proposal && coeffs_out, "null argument")) return st;
  return guarded([&] {
    gmis::Rng rng(seed, stream);
    const size_t dim =
        static_cast<size_t>(proposal->impl.basis->full_dim);
    for (size_t i = 0; i < n_draws; ++i) {
      const Eigen::VectorXd draw = gmis::sample_proposal(proposal->impl, rng);
      std::memcpy(coeffs_out + i * dim, draw.data(), sizeof(double) * dim);
    }
    return GMIS_OK;
  });
}

}  // extern "C"
