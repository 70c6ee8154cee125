#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "core/proposal.hpp"
#include "core/rng.hpp"
#include "core/spectral_basis.hpp"

namespace gmis {

// Data-misfit potential evaluated on coefficient vectors.
using PhiFn = std::function<double(const Eigen::VectorXd&)>;

struct ChainState {
  Eigen::VectorXd u;
  double phi = 0.0;    // cached potential value
  double log_g = 0.0;  // cached log proposal density vs the prior
};

struct ChainRecord {
  Eigen::VectorXd u;
  bool accepted = false;
  double phi = 0.0;
  double omf = 0.0;  // phi + 0.5 * Cameron-Martin norm squared
};

struct StepResult {
  ChainState state;
  bool accepted = false;
  bool model_failure = false;  // proposal's potential came back non-finite
};

struct TemperingSchedule {
  std::vector<double> lambdas;
};

// Evaluates phi and the proposal log-density for u and packs a consistent
// state.
ChainState make_state(Eigen::VectorXd u, const PhiFn& phi,
                      const MixtureProposal& prop);

// Tempered acceptance log-ratio of the independence sampler: linear in
// lambda for fixed states.
double is_log_accept_ratio(double phi_current, double log_g_current,
                           double phi_proposed, double log_g_proposed,
                           double lambda);

// One independence-sampler transition targeting the lambda-tempered
// posterior. Non-finite potentials at the proposal reject the move and set
// model_failure instead of aborting the chain.
StepResult is_step(const ChainState& state, const MixtureProposal& prop,
                   const PhiFn& phi, double lambda, Rng& proposal_rng,
                   Rng& coin_rng);

// One preconditioned Crank-Nicolson transition:
// u'_k = sqrt(1-beta^2) u_k + beta sqrt(alpha_k) xi_k, accepted with
// probability min{1, exp(phi(u) - phi(u'))}.
StepResult pcn_step(const ChainState& state, double beta, const PhiFn& phi,
                    const SpectralBasis& basis, Rng& proposal_rng,
                    Rng& coin_rng);

using StepKernel = std::function<StepResult(const ChainState&, Rng&, Rng&)>;
using OmfFn = std::function<double(const ChainState&)>;

// Applies the kernel n times, recording every state (repeats on rejection
// included).
std::vector<ChainRecord> run_chain(const StepKernel& kernel,
                                   const ChainState& init, long n,
                                   Rng& proposal_rng, Rng& coin_rng,
                                   const OmfFn& omf);

// lambda_i = (i-1)/(i_temp-1), ending at 1; a single 1.0 when i_temp == 1.
TemperingSchedule make_schedule(int i_temp);

void validate_schedule(const TemperingSchedule& schedule);

}  // namespace gmis
