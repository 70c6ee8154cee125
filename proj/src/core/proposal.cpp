#include "core/proposal.hpp"

#include <cmath>
#include <limits>

#include "core/errors.hpp"
#include "core/numerics.hpp"

namespace gmis {

namespace {

void check_component_shape(const GaussianComponent& comp, int K) {
  if (comp.x.size() != K || comp.h.size() != K) {
    throw ShapeError("proposal: component parameter length does not match K");
  }
}

}  // namespace

MixtureProposal prior_proposal(std::shared_ptr<const SpectralBasis> basis,
                               int K) {
  if (!basis) throw ParamError("prior_proposal: null basis");
  if (K < 0 || K > basis->full_dim) {
    throw ParamError("prior_proposal: K out of range");
  }
  GaussianComponent comp;
  comp.x = Eigen::VectorXd::Zero(K);
  comp.h = Eigen::VectorXd::Zero(K);
  comp.w = 1.0;
  return MixtureProposal{{comp}, K, std::move(basis)};
}

Eigen::VectorXd component_variances(const GaussianComponent& comp,
                                    const SpectralBasis& basis) {
  const int K = static_cast<int>(comp.x.size());
  check_component_shape(comp, K);
  if (K > basis.full_dim) {
    throw ShapeError("component_variances: K exceeds basis dimension");
  }
  Eigen::VectorXd beta(K);
  for (int k = 0; k < K; ++k) {
    const double alpha = basis.eigenvalues(k);
    const double g = 1.0 + alpha * comp.h(k);
    if (!(g > 0.0)) {
      throw NumericError("invalid component: 1 + alpha_k h_k <= 0 at mode " +
                         std::to_string(k + 1));
    }
    beta(k) = alpha / g;
  }
  return beta;
}

double log_density_component(const Eigen::VectorXd& u,
                             const GaussianComponent& comp,
                             const SpectralBasis& basis) {
  const int K = static_cast<int>(comp.x.size());
  check_component_shape(comp, K);
  if (u.size() < K) {
    throw ShapeError("log_density_component: coefficient vector shorter than K");
  }
  double logf = 0.0;
  for (int k = 0; k < K; ++k) {
    const double alpha = basis.eigenvalues(k);
    if (alpha <= 0.0) continue;  // clamped mode, component matches the prior
    const double g = 1.0 + alpha * comp.h(k);
    if (!(g > 0.0)) {
      throw NumericError("invalid component: 1 + alpha_k h_k <= 0 at mode " +
                         std::to_string(k + 1));
    }
    const double xk = comp.x(k);
    const double uk = u(k);
    // alpha/beta = g, alpha^2/beta = alpha*g, 2*alpha/beta = 2*g
    logf += 0.5 * std::log(g) -
            0.5 * (alpha * g * xk * xk + comp.h(k) * uk * uk -
                   2.0 * g * xk * uk);
  }
  return logf;
}

double log_density_mixture(const Eigen::VectorXd& u,
                           const MixtureProposal& prop) {
  if (prop.components.empty()) {
    throw ParamError("log_density_mixture: empty proposal");
  }
  if (!prop.basis) throw ParamError("log_density_mixture: null basis");

  double total_w = 0.0;
  std::vector<double> terms;
  terms.reserve(prop.components.size());
  for (const auto& comp : prop.components) {
    total_w += comp.w;
    if (comp.w > 0.0) {
      terms.push_back(std::log(comp.w) +
                      log_density_component(u, comp, *prop.basis));
    }
  }
  if (total_w <= 0.0 || terms.empty()) {
    throw ParamError("log_density_mixture: all component weights are zero");
  }
  return log_sum_exp(terms);
}

Eigen::VectorXd sample_proposal(const MixtureProposal& prop, Rng& rng) {
  if (prop.components.empty()) {
    throw ParamError("sample_proposal: empty proposal");
  }
  const SpectralBasis& basis = *prop.basis;

  // Component pick by CDF walk; weights are normalized to 1.
  const double coin = rng.uniform();
  std::size_t pick = prop.components.size() - 1;
  double cum = 0.0;
  for (std::size_t j = 0; j < prop.components.size(); ++j) {
    cum += prop.components[j].w;
    if (coin < cum) {
      pick = j;
      break;
    }
  }
  const GaussianComponent& comp = prop.components[pick];
  const Eigen::VectorXd beta = component_variances(comp, basis);

  Eigen::VectorXd coeffs(basis.full_dim);
  for (int k = 0; k < basis.full_dim; ++k) {
    const double xi = rng.normal();
    if (k < prop.K) {
      coeffs(k) = basis.eigenvalues(k) * comp.x(k) + std::sqrt(beta(k)) * xi;
    } else {
      coeffs(k) = std::sqrt(basis.eigenvalues(k)) * xi;
    }
  }
  return coeffs;
}

ValidityReport validate(const MixtureProposal& prop) {
  ValidityReport report;
  if (!prop.basis) {
    report.violations.push_back("proposal has no basis");
    return report;
  }
  if (prop.components.empty()) {
    report.violations.push_back("proposal has no components");
    return report;
  }
  if (prop.K < 0 || prop.K > prop.basis->full_dim) {
    report.violations.push_back("K out of range for the basis");
    return report;
  }

  double total_w = 0.0;
  for (std::size_t j = 0; j < prop.components.size(); ++j) {
    const auto& comp = prop.components[j];
    const std::string tag = "component " + std::to_string(j + 1);
    if (comp.x.size() != prop.K || comp.h.size() != prop.K) {
      report.violations.push_back(tag + ": parameter length != K");
      continue;
    }
    if (!std::isfinite(comp.w) || comp.w < 0.0 || comp.w > 1.0) {
      report.violations.push_back(tag + ": weight outside [0, 1]");
    }
    total_w += comp.w;
    if (!comp.x.allFinite() || !comp.h.allFinite()) {
      report.violations.push_back(tag + ": non-finite parameters");
      continue;
    }
    for (int k = 0; k < prop.K; ++k) {
      const double alpha = prop.basis->eigenvalues(k);
      if (!(1.0 + alpha * comp.h(k) > 0.0)) {
        report.violations.push_back(tag + ": 1 + alpha_k h_k <= 0 at mode " +
                                    std::to_string(k + 1));
      }
    }
  }
  if (std::abs(total_w - 1.0) > 1e-10) {
    report.violations.push_back("weights do not sum to 1");
  }
  return report;
}

nlohmann::json proposal_to_json(const MixtureProposal& prop) {
  nlohmann::json doc;
  doc["K"] = prop.K;
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& comp : prop.components) {
    nlohmann::json c;
    c["w"] = comp.w;
    c["x"] = std::vector<double>(comp.x.data(), comp.x.data() + comp.x.size());
    c["h"] = std::vector<double>(comp.h.data(), comp.h.data() + comp.h.size());
    comps.push_back(std::move(c));
  }
  doc["components"] = std::move(comps);
  return doc;
}

MixtureProposal proposal_from_json(
    const nlohmann::json& doc, std::shared_ptr<const SpectralBasis> basis) {
  if (!basis) throw ParamError("proposal_from_json: null basis");
  if (!doc.is_object() || !doc.contains("K") || !doc.contains("components")) {
    throw ParamError("proposal_from_json: expected {K, components}");
  }
  MixtureProposal prop;
  prop.K = doc.at("K").get<int>();
  prop.basis = std::move(basis);
  if (prop.K < 0 || prop.K > prop.basis->full_dim) {
    throw ParamError("proposal_from_json: K out of range for the basis");
  }
  for (const auto& c : doc.at("components")) {
    GaussianComponent comp;
    comp.w = c.at("w").get<double>();
    const auto xs = c.at("x").get<std::vector<double>>();
    const auto hs = c.at("h").get<std::vector<double>>();
    if (static_cast<int>(xs.size()) != prop.K ||
        static_cast<int>(hs.size()) != prop.K) {
      throw ParamError("proposal_from_json: component length != K");
    }
    comp.x = Eigen::Map<const Eigen::VectorXd>(xs.data(), prop.K);
    comp.h = Eigen::Map<const Eigen::VectorXd>(hs.data(), prop.K);
    prop.components.push_back(std::move(comp));
  }
  if (prop.components.empty()) {
    throw ParamError("proposal_from_json: no components");
  }
  return prop;
}

}  // namespace gmis
