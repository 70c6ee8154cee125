#pragma once

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core/proposal.hpp"
#include "core/rng.hpp"
#include "core/samplers.hpp"
#include "core/spectral_basis.hpp"

namespace gmis {

// Rows are chain samples projected onto the first K modes.
using SampleMatrix = Eigen::MatrixXd;

// N x J responsibilities; each row sums to 1.
using Membership = Eigen::MatrixXd;

enum class Estimator { Clustering, EM, SingleGaussian };

std::string estimator_name(Estimator estimator);
Estimator estimator_from_name(const std::string& name);

struct AdaptConfig {
  int i_temp = 0;      // tempered pre-run stages
  long n_temp = 0;     // draws per tempered stage
  long n_tol = 0;      // total main-loop draws
  long n_max = 0;      // adaptation frozen once n reaches this count
  long n_adp = 1;      // refit period
  double epsilon = 0.01;
  int k_override = 0;  // fixed K when positive, else the epsilon rule
  std::vector<int> j_range = {1, 2, 3};
  Estimator estimator = Estimator::Clustering;
  std::string checkpoint_dir;  // empty disables checkpoints
};

void validate_adapt_config(const AdaptConfig& config);

// Moment fit of one Gaussian (Eq.-style explicit solution):
// x_k = mean_k / alpha_k, h_k = 1/var_k - 1/alpha_k with the population
// variance about the fitted mean; h is clamped above -(1-1e-6)/alpha_k.
// Throws DegenerateClusterError when some mode has zero variance.
GaussianComponent fit_single_gaussian(const SampleMatrix& samples,
                                      const SpectralBasis& basis);

struct KmeansResult {
  std::vector<int> assignments;
  Eigen::MatrixXd centroids;  // J x K
  double objective = 0.0;     // total within-cluster squared distance
};

// Lloyd's algorithm with k-means++ seeding, 5 restarts keeping the best
// objective, at most 300 iterations or centroid movement below 1e-8.
// Empty clusters are re-seeded from the point farthest from its centroid.
// `objective_trace`, when given, records the assignment objective after
// every Lloyd iteration of the winning restart.
KmeansResult kmeans(const SampleMatrix& samples, int J, Rng& rng,
                    std::vector<double>* objective_trace = nullptr);

// BIC model selection over candidate cluster counts:
// BIC(J) = -2 loglik + p log N with p = J(2K+1) - 1; ties and degenerate
// scores resolve toward the smallest candidate.
int select_J(const SampleMatrix& samples, const std::vector<int>& j_range,
             Rng& rng);

// Clustering estimator: k-means partition (J selected by BIC when J == 0),
// small clusters merged into their nearest neighbour, then the explicit
// per-cluster moment fit with weights N_j/N. Falls back to the prior
// component when every cluster is degenerate.
MixtureProposal fit_mixture_clustering(
    const SampleMatrix& samples, std::shared_ptr<const SpectralBasis> basis,
    int J, const std::vector<int>& j_range, Rng& rng);

// E-step responsibilities q_j^n = w_j f_j(u^n) / sum_l w_l f_l(u^n),
// evaluated in log space.
Membership em_e_step(const SampleMatrix& samples, const MixtureProposal& prop);

// M-step parameter update; components whose responsibility mass drops below
// 1e-10 N are dropped and the weights renormalized.
MixtureProposal em_m_step(const SampleMatrix& samples, const Membership& q,
                          std::shared_ptr<const SpectralBasis> basis);

// Sample-average mixture objective sum_n log sum_j w_j f_j(u^n); the
// quantity EM maximizes.
double em_objective(const SampleMatrix& samples, const MixtureProposal& prop);

// Alternates E/M steps until the objective gains less than tol (relative)
// or max_iter is reached. The objective trace is non-decreasing.
MixtureProposal em_fit(const SampleMatrix& samples,
                       const MixtureProposal& init, int max_iter = 200,
                       double tol = 1e-8,
                       std::vector<double>* objective_trace = nullptr);

struct AdaptiveResult {
  std::vector<ChainRecord> records;  // main-loop records only
  MixtureProposal proposal;          // final (frozen) proposal
  int truncation = 0;                // K actually used
  long refits = 0;
  long refit_failures = 0;
  long validity_violations = 0;
  long model_eval_failures = 0;
  std::vector<double> tempering_acceptance;  // per stage
};

// The complete adaptive loop: proposal starts at the prior, optional
// tempered pre-run refitting from each stage's samples, then the main loop
// refitting from the full accumulated history every n_adp draws while
// n < n_max. A failed refit keeps the previous proposal; the chain never
// halts.
AdaptiveResult adaptive_loop(const AdaptConfig& config, const PhiFn& phi,
                             std::shared_ptr<const SpectralBasis> basis,
                             Rng& proposal_rng, Rng& coin_rng,
                             Rng& kmeans_rng);

}  // namespace gmis
