#include "core/samplers.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace gmis {

ChainState make_state(Eigen::VectorXd u, const PhiFn& phi,
                      const MixtureProposal& prop) {
  ChainState state;
  state.phi = phi(u);
  state.log_g = log_density_mixture(u, prop);
  state.u = std::move(u);
  return state;
}

double is_log_accept_ratio(double phi_current, double log_g_current,
                           double phi_proposed, double log_g_proposed,
                           double lambda) {
  return (-lambda * phi_proposed - log_g_proposed) -
         (-lambda * phi_current - log_g_current);
}

StepResult is_step(const ChainState& state, const MixtureProposal& prop,
                   const PhiFn& phi, double lambda, Rng& proposal_rng,
                   Rng& coin_rng) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ParamError("is_step: lambda must lie in [0, 1]");
  }

  Eigen::VectorXd proposed = sample_proposal(prop, proposal_rng);
  const double phi_proposed = phi(proposed);
  const double coin = coin_rng.uniform();

  StepResult result;
  if (!std::isfinite(phi_proposed)) {
    result.state = state;
    result.accepted = false;
    result.model_failure = true;
    return result;
  }

  const double log_g_proposed = log_density_mixture(proposed, prop);
  const double log_a = std::min(
      0.0, is_log_accept_ratio(state.phi, state.log_g, phi_proposed,
                               log_g_proposed, lambda));
  if (std::log(coin) < log_a) {
    result.state.u = std::move(proposed);
    result.state.phi = phi_proposed;
    result.state.log_g = log_g_proposed;
    result.accepted = true;
  } else {
    result.state = state;
    result.accepted = false;
  }
  return result;
}

StepResult pcn_step(const ChainState& state, double beta, const PhiFn& phi,
                    const SpectralBasis& basis, Rng& proposal_rng,
                    Rng& coin_rng) {
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw ParamError("pcn_step: beta must lie in (0, 1]");
  }
  const double keep = std::sqrt(1.0 - beta * beta);

  Eigen::VectorXd proposed(basis.full_dim);
  for (int k = 0; k < basis.full_dim; ++k) {
    proposed(k) = keep * state.u(k) +
                  beta * std::sqrt(basis.eigenvalues(k)) * proposal_rng.normal();
  }
  const double phi_proposed = phi(proposed);
  const double coin = coin_rng.uniform();

  StepResult result;
  if (!std::isfinite(phi_proposed)) {
    result.state = state;
    result.accepted = false;
    result.model_failure = true;
    return result;
  }

  const double log_a = std::min(0.0, state.phi - phi_proposed);
  if (std::log(coin) < log_a) {
    result.state.u = std::move(proposed);
    result.state.phi = phi_proposed;
    result.state.log_g = state.log_g;  // unused by pCN
    result.accepted = true;
  } else {
    result.state = state;
    result.accepted = false;
  }
  return result;
}

std::vector<ChainRecord> run_chain(const StepKernel& kernel,
                                   const ChainState& init, long n,
                                   Rng& proposal_rng, Rng& coin_rng,
                                   const OmfFn& omf) {
  if (n < 1) throw ParamError("run_chain: need n >= 1");
  std::vector<ChainRecord> records;
  records.reserve(static_cast<std::size_t>(n));
  ChainState state = init;
  for (long i = 0; i < n; ++i) {
    StepResult step = kernel(state, proposal_rng, coin_rng);
    state = std::move(step.state);
    ChainRecord record;
    record.u = state.u;
    record.accepted = step.accepted;
    record.phi = state.phi;
    record.omf = omf(state);
    records.push_back(std::move(record));
  }
  return records;
}

TemperingSchedule make_schedule(int i_temp) {
  if (i_temp < 1) throw ParamError("make_schedule: need i_temp >= 1");
  TemperingSchedule schedule;
  if (i_temp == 1) {
    schedule.lambdas = {1.0};
    return schedule;
  }
  schedule.lambdas.resize(i_temp);
  for (int i = 0; i < i_temp; ++i) {
    schedule.lambdas[i] =
        static_cast<double>(i) / static_cast<double>(i_temp - 1);
  }
  return schedule;
}

void validate_schedule(const TemperingSchedule& schedule) {
  const auto& l = schedule.lambdas;
  if (l.empty()) throw ParamError("tempering schedule: empty");
  if (l.front() < 0.0) throw ParamError("tempering schedule: lambda_1 < 0");
  for (std::size_t i = 0; i + 1 < l.size(); ++i) {
    if (!(l[i] < l[i + 1])) {
      throw ParamError("tempering schedule: lambdas must strictly increase");
    }
  }
  if (l.back() != 1.0) throw ParamError("tempering schedule: must end at 1");
}

}  // namespace gmis
