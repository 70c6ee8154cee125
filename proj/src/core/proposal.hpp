#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/spectral_basis.hpp"

#include "json.hpp"

namespace gmis {

// One mixture component in spectral coordinates. Mode k <= K of the
// component is N(alpha_k x_k, beta_k) with beta_k = alpha_k/(1+alpha_k h_k);
// beyond K the component coincides with the prior. Validity requires
// 1 + alpha_k h_k > 0 for every retained mode.
struct GaussianComponent {
  Eigen::VectorXd x;  // mean multipliers, length K
  Eigen::VectorXd h;  // precision perturbations, length K
  double w = 1.0;     // mixing weight in [0, 1]
};

// Weighted set of components sharing a basis and truncation dimension K.
// Immutable value type; copy freely.
struct MixtureProposal {
  std::vector<GaussianComponent> components;
  int K = 0;
  std::shared_ptr<const SpectralBasis> basis;
};

// Single zero component (x = h = 0): the proposal equals the prior.
MixtureProposal prior_proposal(std::shared_ptr<const SpectralBasis> basis,
                               int K);

// beta_k = alpha_k / (1 + alpha_k h_k); throws NumericError when the
// validity condition fails for some mode.
Eigen::VectorXd component_variances(const GaussianComponent& comp,
                                    const SpectralBasis& basis);

// log of the component's density with respect to the prior,
//   sum_{k<=K} [ log(1+a h)/2 - (a(1+a h) x^2 + h u^2 - 2(1+a h) x u)/2 ],
// with a = alpha_k; modes beyond K contribute zero.
double log_density_component(const Eigen::VectorXd& u,
                             const GaussianComponent& comp,
                             const SpectralBasis& basis);

// log sum_j w_j exp(log_density_component(u, comp_j)), max-shifted.
double log_density_mixture(const Eigen::VectorXd& u,
                           const MixtureProposal& prop);

// Draw a full coefficient vector: component j with probability w_j, modes
// k <= K from N(alpha_k x_k, beta_k), prior tail beyond K.
Eigen::VectorXd sample_proposal(const MixtureProposal& prop, Rng& rng);

struct ValidityReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Checks weight normalization, finiteness and 1 + alpha_k h_k > 0 per
// component. Reports violations instead of throwing.
ValidityReport validate(const MixtureProposal& prop);

// JSON checkpoint format: {"K": k, "components": [{"w","x","h"}, ...]}.
// Round trip is bit-faithful for finite doubles.
nlohmann::json proposal_to_json(const MixtureProposal& prop);
MixtureProposal proposal_from_json(
    const nlohmann::json& doc, std::shared_ptr<const SpectralBasis> basis);

}  // namespace gmis
