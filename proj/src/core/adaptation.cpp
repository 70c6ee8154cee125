#include "core/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "core/errors.hpp"
#include "core/io_util.hpp"
#include "core/numerics.hpp"

namespace gmis {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Safety margin against the equivalence boundary h_k > -1/alpha_k.
double clamp_h(double h, double alpha) {
  return std::max(h, -(1.0 - 1e-6) / alpha);
}

struct MomentFit {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;  // population variance about the fitted mean
  double mass = 0.0;    // sum of weights
};

// Weighted per-mode moments. Every estimator funnels through this one
// routine, with plain sequential accumulation so that unit-membership EM,
// indicator-weighted cluster fits and the explicit single-Gaussian solution
// agree bit for bit (zero-weight rows add exact zeros).
MomentFit weighted_moments(const SampleMatrix& samples,
                           const Eigen::VectorXd& weights) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index k = samples.cols();
  MomentFit fit;
  fit.mass = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) fit.mass += weights(i);
  if (!(fit.mass > 0.0)) {
    throw NumericError("weighted_moments: nonpositive total weight");
  }
  fit.mean = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      fit.mean(j) += weights(i) * samples(i, j);
    }
  }
  fit.mean /= fit.mass;
  fit.var = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double d = samples(i, j) - fit.mean(j);
      fit.var(j) += weights(i) * d * d;
    }
  }
  fit.var /= fit.mass;
  return fit;
}

GaussianComponent component_from_moments(const MomentFit& fit,
                                         const SpectralBasis& basis,
                                         double weight) {
  const int K = static_cast<int>(fit.mean.size());
  GaussianComponent comp;
  comp.x.resize(K);
  comp.h.resize(K);
  comp.w = weight;
  for (int k = 0; k < K; ++k) {
    const double alpha = basis.eigenvalues(k);
    if (alpha <= 0.0) {
      comp.x(k) = 0.0;
      comp.h(k) = 0.0;
      continue;
    }
    comp.x(k) = fit.mean(k) / alpha;
    comp.h(k) = clamp_h(1.0 / fit.var(k) - 1.0 / alpha, alpha);
  }
  return comp;
}

bool has_degenerate_mode(const MomentFit& fit) {
  return (fit.var.array() <= 0.0).any();
}

double squared_distance(const Eigen::RowVectorXd& a,
                        const Eigen::RowVectorXd& b) {
  return (a - b).squaredNorm();
}

Eigen::MatrixXd kmeanspp_seed(const SampleMatrix& samples, int J, Rng& rng) {
  const Eigen::Index n = samples.rows();
  Eigen::MatrixXd centroids(J, samples.cols());
  centroids.row(0) =
      samples.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd d2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d2(i) = squared_distance(samples.row(i), centroids.row(0));
  }
  for (int j = 1; j < J; ++j) {
    const double total = d2.sum();
    Eigen::Index pick;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cum = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += d2(i);
        if (target < cum) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centroids.row(j) = samples.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      d2(i) = std::min(d2(i), squared_distance(samples.row(i), centroids.row(j)));
    }
  }
  return centroids;
}

struct LloydOutcome {
  std::vector<int> assignments;
  Eigen::MatrixXd centroids;
  double objective = kInf;
  std::vector<double> trace;
};

LloydOutcome lloyd(const SampleMatrix& samples, Eigen::MatrixXd centroids) {
  const Eigen::Index n = samples.rows();
  const int J = static_cast<int>(centroids.rows());
  LloydOutcome out;
  out.assignments.assign(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd point_d2(n);
  const Eigen::VectorXd sample_norms = samples.rowwise().squaredNorm();
  Eigen::MatrixXd cross(n, J);

  // Assignment via |x|^2 - 2 x.c + |c|^2 so the inner products run as one
  // matrix product; chain histories reach several 1e5 rows at paper scale.
  auto assign = [&]() {
    const Eigen::VectorXd centroid_norms = centroids.rowwise().squaredNorm();
    cross.noalias() = samples * centroids.transpose();
    double obj = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = kInf;
      int best_j = 0;
      for (int j = 0; j < J; ++j) {
        const double d = sample_norms(i) - 2.0 * cross(i, j) + centroid_norms(j);
        if (d < best) {
          best = d;
          best_j = j;
        }
      }
      out.assignments[static_cast<std::size_t>(i)] = best_j;
      point_d2(i) = std::max(best, 0.0);
      obj += point_d2(i);
    }
    return obj;
  };

  for (int iter = 0; iter < 300; ++iter) {
    out.objective = assign();
    out.trace.push_back(out.objective);

    std::vector<long> counts(static_cast<std::size_t>(J), 0);
    for (int a : out.assignments) ++counts[static_cast<std::size_t>(a)];

    bool reseeded = false;
    for (int j = 0; j < J; ++j) {
      if (counts[static_cast<std::size_t>(j)] == 0) {
        Eigen::Index farthest;
        point_d2.maxCoeff(&farthest);
        centroids.row(j) = samples.row(farthest);
        point_d2(farthest) = 0.0;
        reseeded = true;
      }
    }
    if (reseeded) continue;

    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(J, samples.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      next.row(out.assignments[static_cast<std::size_t>(i)]) += samples.row(i);
    }
    double movement = 0.0;
    for (int j = 0; j < J; ++j) {
      next.row(j) /= static_cast<double>(counts[static_cast<std::size_t>(j)]);
      movement = std::max(movement, (next.row(j) - centroids.row(j)).norm());
    }
    centroids = std::move(next);
    if (movement < 1e-8) break;
  }

  out.objective = assign();
  out.centroids = std::move(centroids);
  return out;
}

// Index sets per cluster with cached moments.
struct Cluster {
  std::vector<Eigen::Index> members;
  MomentFit fit;
};

MomentFit subset_moments(const SampleMatrix& samples,
                         const std::vector<Eigen::Index>& members) {
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(samples.rows());
  for (Eigen::Index i : members) weights(i) = 1.0;
  return weighted_moments(samples, weights);
}

// Rejection repeats leave long runs of bitwise-identical rows in the chain
// history. A cluster dominated by copies of a handful of states cannot
// support a covariance estimate, so cluster viability is judged on the
// distinct rows (the duplicates still count toward weights and moments).
long count_unique_rows(const SampleMatrix& samples,
                       std::vector<Eigen::Index> members) {
  const auto less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index k = 0; k < samples.cols(); ++k) {
      if (samples(a, k) != samples(b, k)) return samples(a, k) < samples(b, k);
    }
    return false;
  };
  std::sort(members.begin(), members.end(), less);
  long unique = 0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (i == 0 || less(members[i - 1], members[i])) ++unique;
  }
  return unique;
}

double min_cluster_support(int K) { return std::max(2.0, (2.0 * K + 1.0) / 4.0); }

}  // namespace

std::string estimator_name(Estimator estimator) {
  switch (estimator) {
    case Estimator::Clustering:
      return "clustering";
    case Estimator::EM:
      return "em";
    case Estimator::SingleGaussian:
      return "single-gaussian";
  }
  throw ParamError("estimator: unknown value");
}

Estimator estimator_from_name(const std::string& name) {
  if (name == "clustering") return Estimator::Clustering;
  if (name == "em") return Estimator::EM;
  if (name == "single-gaussian") return Estimator::SingleGaussian;
  throw ParamError("estimator: unknown name '" + name + "'");
}

void validate_adapt_config(const AdaptConfig& config) {
  if (config.n_adp < 1) throw ParamError("adapt config: n_adp must be >= 1");
  if (config.n_tol < 1) throw ParamError("adapt config: n_tol must be >= 1");
  if (config.n_max < 0) throw ParamError("adapt config: n_max must be >= 0");
  if (config.n_max > config.n_tol) {
    throw ParamError("adapt config: n_max must not exceed n_tol");
  }
  if (config.i_temp < 0) throw ParamError("adapt config: i_temp must be >= 0");
  if (config.i_temp > 0 && config.n_temp < 1) {
    throw ParamError("adapt config: n_temp must be >= 1 when tempering");
  }
  if (config.k_override < 0) {
    throw ParamError("adapt config: k_override must be >= 0");
  }
  if (config.k_override == 0 &&
      !(config.epsilon > 0.0 && config.epsilon < 1.0)) {
    throw ParamError("adapt config: epsilon must lie in (0, 1)");
  }
  if (config.estimator != Estimator::SingleGaussian) {
    if (config.j_range.empty()) {
      throw ParamError("adapt config: j_range must not be empty");
    }
    for (int j : config.j_range) {
      if (j < 1) throw ParamError("adapt config: j_range entries must be >= 1");
    }
  }
}

GaussianComponent fit_single_gaussian(const SampleMatrix& samples,
                                      const SpectralBasis& basis) {
  if (samples.rows() < 2) {
    throw ParamError("fit_single_gaussian: need at least 2 samples");
  }
  const MomentFit fit =
      weighted_moments(samples, Eigen::VectorXd::Ones(samples.rows()));
  if (has_degenerate_mode(fit)) {
    throw DegenerateClusterError(
        "fit_single_gaussian: zero sample variance in some mode");
  }
  return component_from_moments(fit, basis, 1.0);
}

KmeansResult kmeans(const SampleMatrix& samples, int J, Rng& rng,
                    std::vector<double>* objective_trace) {
  if (J < 1) throw ParamError("kmeans: need J >= 1");
  if (samples.rows() < J) throw ParamError("kmeans: fewer samples than clusters");

  if (J == 1) {
    KmeansResult result;
    result.assignments.assign(static_cast<std::size_t>(samples.rows()), 0);
    result.centroids = samples.colwise().mean();
    result.objective =
        (samples.rowwise() - samples.colwise().mean()).squaredNorm();
    if (objective_trace) *objective_trace = {result.objective};
    return result;
  }

  constexpr int kRestarts = 5;
  LloydOutcome best;
  for (int restart = 0; restart < kRestarts; ++restart) {
    LloydOutcome attempt = lloyd(samples, kmeanspp_seed(samples, J, rng));
    if (attempt.objective < best.objective) best = std::move(attempt);
  }

  KmeansResult result;
  result.assignments = std::move(best.assignments);
  result.centroids = std::move(best.centroids);
  result.objective = best.objective;
  if (objective_trace) *objective_trace = std::move(best.trace);
  return result;
}

namespace {

// BIC of a hard-clustered diagonal Gaussian mixture; +inf when some cluster
// cannot support a variance estimate.
double bic_score(const SampleMatrix& samples, int J, Rng& rng) {
  const Eigen::Index n = samples.rows();
  const int K = static_cast<int>(samples.cols());

  std::vector<int> assignments;
  if (J == 1) {
    assignments.assign(static_cast<std::size_t>(n), 0);
  } else {
    assignments = kmeans(samples, J, rng).assignments;
  }

  Eigen::MatrixXd means(J, K), vars(J, K);
  Eigen::VectorXd weights(J);
  for (int j = 0; j < J; ++j) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (assignments[static_cast<std::size_t>(i)] == j) members.push_back(i);
    }
    if (members.size() < 2) return kInf;
    if (count_unique_rows(samples, members) < min_cluster_support(K)) {
      return kInf;
    }
    const MomentFit fit = subset_moments(samples, members);
    if (has_degenerate_mode(fit)) return kInf;
    means.row(j) = fit.mean.transpose();
    vars.row(j) = fit.var.transpose();
    weights(j) = fit.mass / static_cast<double>(n);
  }

  double loglik = 0.0;
  std::vector<double> terms(static_cast<std::size_t>(J));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < J; ++j) {
      double lp = std::log(weights(j));
      for (int k = 0; k < K; ++k) {
        lp += gaussian_log_pdf(samples(i, k), means(j, k), vars(j, k));
      }
      terms[static_cast<std::size_t>(j)] = lp;
    }
    loglik += log_sum_exp(terms);
  }

  const double p = static_cast<double>(J) * (2.0 * K + 1.0) - 1.0;
  return -2.0 * loglik + p * std::log(static_cast<double>(n));
}

}  // namespace

int select_J(const SampleMatrix& samples, const std::vector<int>& j_range,
             Rng& rng) {
  if (j_range.empty()) throw ParamError("select_J: empty candidate list");
  const Eigen::Index n = samples.rows();
  const int K = static_cast<int>(samples.cols());

  std::vector<int> candidates(j_range);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  std::erase_if(candidates,
                [&](int j) { return j < 1 || static_cast<Eigen::Index>(j) > n; });
  if (candidates.empty()) {
    throw ParamError("select_J: no candidate J fits the sample count");
  }

  // Too little data to score parameter counts against; take the tie-break.
  if (n < 2 * K + 1) return candidates.front();

  int best_j = candidates.front();
  double best_score = kInf;
  for (int j : candidates) {
    const double score = bic_score(samples, j, rng);
    if (score < best_score) {
      best_score = score;
      best_j = j;
    }
  }
  return best_j;
}

MixtureProposal fit_mixture_clustering(
    const SampleMatrix& samples, std::shared_ptr<const SpectralBasis> basis,
    int J, const std::vector<int>& j_range, Rng& rng) {
  if (!basis) throw ParamError("fit_mixture_clustering: null basis");
  const Eigen::Index n = samples.rows();
  const int K = static_cast<int>(samples.cols());
  if (n < 2) throw ParamError("fit_mixture_clustering: need at least 2 samples");
  if (J > 0 && n < 2 * static_cast<Eigen::Index>(J)) {
    throw ParamError("fit_mixture_clustering: need N >= 2J");
  }

  if (J == 0) J = select_J(samples, j_range, rng);

  MixtureProposal prop;
  prop.K = K;
  prop.basis = basis;

  auto prior_fallback = [&]() {
    GaussianComponent comp;
    comp.x = Eigen::VectorXd::Zero(K);
    comp.h = Eigen::VectorXd::Zero(K);
    comp.w = 1.0;
    prop.components = {comp};
    return prop;
  };

  if (J == 1) {
    try {
      prop.components = {fit_single_gaussian(samples, *basis)};
      return prop;
    } catch (const DegenerateClusterError&) {
      return prior_fallback();
    }
  }

  const KmeansResult km = kmeans(samples, J, rng);
  std::vector<Cluster> clusters(static_cast<std::size_t>(J));
  for (Eigen::Index i = 0; i < n; ++i) {
    clusters[static_cast<std::size_t>(km.assignments[static_cast<std::size_t>(i)])]
        .members.push_back(i);
  }
  std::erase_if(clusters, [](const Cluster& c) { return c.members.empty(); });
  for (auto& cluster : clusters) {
    cluster.fit = subset_moments(samples, cluster.members);
  }

  auto merge_into_nearest = [&](std::size_t victim) {
    double best = kInf;
    std::size_t target = victim;
    for (std::size_t j = 0; j < clusters.size(); ++j) {
      if (j == victim) continue;
      const double d =
          (clusters[j].fit.mean - clusters[victim].fit.mean).squaredNorm();
      if (d < best) {
        best = d;
        target = j;
      }
    }
    auto& to = clusters[target].members;
    auto& from = clusters[victim].members;
    to.insert(to.end(), from.begin(), from.end());
    std::sort(to.begin(), to.end());
    clusters[target].fit = subset_moments(samples, to);
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(victim));
  };

  // Merge clusters too small to support the parameter count (counting
  // distinct states, not rejection duplicates), then clusters with
  // collapsed variance.
  const double min_size = min_cluster_support(K);
  bool merged = true;
  while (merged && clusters.size() > 1) {
    merged = false;
    for (std::size_t j = 0; j < clusters.size(); ++j) {
      if (static_cast<double>(clusters[j].members.size()) < min_size ||
          count_unique_rows(samples, clusters[j].members) < min_size) {
        merge_into_nearest(j);
        merged = true;
        break;
      }
    }
  }
  merged = true;
  while (merged && clusters.size() > 1) {
    merged = false;
    for (std::size_t j = 0; j < clusters.size(); ++j) {
      if (has_degenerate_mode(clusters[j].fit)) {
        merge_into_nearest(j);
        merged = true;
        break;
      }
    }
  }

  if (clusters.size() == 1 && has_degenerate_mode(clusters[0].fit)) {
    return prior_fallback();
  }

  for (const auto& cluster : clusters) {
    const double w =
        static_cast<double>(cluster.members.size()) / static_cast<double>(n);
    prop.components.push_back(component_from_moments(cluster.fit, *basis, w));
  }
  return prop;
}

Membership em_e_step(const SampleMatrix& samples,
                     const MixtureProposal& prop) {
  const Eigen::Index n = samples.rows();
  const int J = static_cast<int>(prop.components.size());
  Membership q(n, J);
  std::vector<double> lw(static_cast<std::size_t>(J));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd u = samples.row(i).transpose();
    for (int j = 0; j < J; ++j) {
      const auto& comp = prop.components[static_cast<std::size_t>(j)];
      lw[static_cast<std::size_t>(j)] =
          comp.w > 0.0
              ? std::log(comp.w) + log_density_component(u, comp, *prop.basis)
              : kNegInf;
    }
    const double lse = log_sum_exp(lw);
    if (lse == kNegInf) {
      throw NumericError("em_e_step: zero mixture density at a sample");
    }
    for (int j = 0; j < J; ++j) {
      q(i, j) = std::exp(lw[static_cast<std::size_t>(j)] - lse);
    }
  }
  return q;
}

MixtureProposal em_m_step(const SampleMatrix& samples, const Membership& q,
                          std::shared_ptr<const SpectralBasis> basis) {
  if (!basis) throw ParamError("em_m_step: null basis");
  const Eigen::Index n = samples.rows();
  if (q.rows() != n) throw ShapeError("em_m_step: membership rows != samples");
  const int J = static_cast<int>(q.cols());
  const int K = static_cast<int>(samples.cols());

  MixtureProposal prop;
  prop.K = K;
  prop.basis = std::move(basis);

  const double drop_threshold = 1e-10 * static_cast<double>(n);
  for (int j = 0; j < J; ++j) {
    const Eigen::VectorXd weights = q.col(j);
    const double mass = weights.sum();
    if (mass < drop_threshold) continue;  // vanished component
    const MomentFit fit = weighted_moments(samples, weights);
    if (has_degenerate_mode(fit)) continue;
    prop.components.push_back(component_from_moments(
        fit, *prop.basis, mass / static_cast<double>(n)));
  }
  if (prop.components.empty()) {
    throw NumericError("em_m_step: all components vanished");
  }
  double total = 0.0;
  for (const auto& comp : prop.components) total += comp.w;
  for (auto& comp : prop.components) comp.w /= total;
  return prop;
}

double em_objective(const SampleMatrix& samples,
                    const MixtureProposal& prop) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    total += log_density_mixture(samples.row(i).transpose(), prop);
  }
  return total;
}

MixtureProposal em_fit(const SampleMatrix& samples,
                       const MixtureProposal& init, int max_iter, double tol,
                       std::vector<double>* objective_trace) {
  if (max_iter < 1) throw ParamError("em_fit: need max_iter >= 1");
  MixtureProposal prop = init;
  double objective = em_objective(samples, prop);
  if (objective_trace) objective_trace->push_back(objective);

  for (int iter = 0; iter < max_iter; ++iter) {
    const Membership q = em_e_step(samples, prop);
    prop = em_m_step(samples, q, prop.basis);
    const double next = em_objective(samples, prop);
    if (objective_trace) objective_trace->push_back(next);
    const double gain = next - objective;
    objective = next;
    if (gain < tol * std::max(1.0, std::abs(next))) break;
  }
  return prop;
}

AdaptiveResult adaptive_loop(const AdaptConfig& config, const PhiFn& phi,
                             std::shared_ptr<const SpectralBasis> basis,
                             Rng& proposal_rng, Rng& coin_rng,
                             Rng& kmeans_rng) {
  validate_adapt_config(config);
  if (!basis) throw ParamError("adaptive_loop: null basis");

  const int K = config.k_override > 0
                    ? std::min(config.k_override, basis->full_dim)
                    : truncation_dim(*basis, config.epsilon);

  AdaptiveResult result;
  result.truncation = K;
  MixtureProposal prop = prior_proposal(basis, K);

  long checkpoint_index = 0;
  auto checkpoint = [&](const MixtureProposal& p) {
    if (config.checkpoint_dir.empty()) return;
    char name[64];
    std::snprintf(name, sizeof(name), "proposal_%05ld.json",
                  ++checkpoint_index);
    auto out = open_output(config.checkpoint_dir + "/" + name);
    out << proposal_to_json(p).dump(2) << '\n';
  };

  auto refit = [&](const SampleMatrix& s) -> std::optional<MixtureProposal> {
    ++result.refits;
    try {
      MixtureProposal fitted;
      switch (config.estimator) {
        case Estimator::SingleGaussian:
          fitted = MixtureProposal{{fit_single_gaussian(s, *basis)}, K, basis};
          break;
        case Estimator::Clustering:
          fitted = fit_mixture_clustering(s, basis, 0, config.j_range,
                                          kmeans_rng);
          break;
        case Estimator::EM: {
          const MixtureProposal start =
              fit_mixture_clustering(s, basis, 0, config.j_range, kmeans_rng);
          fitted = em_fit(s, start);
          break;
        }
      }
      if (!validate(fitted).ok()) {
        ++result.validity_violations;
        ++result.refit_failures;
        return std::nullopt;
      }
      return fitted;
    } catch (const Error&) {
      ++result.refit_failures;
      return std::nullopt;
    }
  };

  auto draw_init = [&]() -> ChainState {
    for (int attempt = 0; attempt < 100; ++attempt) {
      Eigen::VectorXd u = sample_proposal(prop, proposal_rng);
      const double p = phi(u);
      if (std::isfinite(p)) {
        ChainState state;
        state.phi = p;
        state.log_g = log_density_mixture(u, prop);
        state.u = std::move(u);
        return state;
      }
      ++result.model_eval_failures;
    }
    throw NumericError("adaptive_loop: no finite starting state in 100 draws");
  };

  if (config.i_temp > 0) {
    const TemperingSchedule schedule = make_schedule(config.i_temp);
    for (int stage = 0; stage < config.i_temp; ++stage) {
      const double lambda = schedule.lambdas[static_cast<std::size_t>(stage)];
      ChainState state = draw_init();
      SampleMatrix stage_samples(config.n_temp + 1, K);
      stage_samples.row(0) = state.u.head(K).transpose();
      long accepted = 0;
      for (long n = 1; n <= config.n_temp; ++n) {
        StepResult step =
            is_step(state, prop, phi, lambda, proposal_rng, coin_rng);
        if (step.model_failure) ++result.model_eval_failures;
        state = std::move(step.state);
        if (step.accepted) ++accepted;
        stage_samples.row(n) = state.u.head(K).transpose();
      }
      result.tempering_acceptance.push_back(
          static_cast<double>(accepted) / static_cast<double>(config.n_temp));
      if (auto fitted = refit(stage_samples)) {
        prop = std::move(*fitted);
        checkpoint(prop);
      }
    }
  }

  ChainState state = draw_init();
  result.records.reserve(static_cast<std::size_t>(config.n_tol));

  SampleMatrix history;
  Eigen::Index history_rows = 0;
  if (config.n_max > 0) {
    history.resize(config.n_max + 1, K);
    history.row(history_rows++) = state.u.head(K).transpose();
  }

  for (long n = 1; n <= config.n_tol; ++n) {
    StepResult step = is_step(state, prop, phi, 1.0, proposal_rng, coin_rng);
    if (step.model_failure) ++result.model_eval_failures;
    state = std::move(step.state);

    ChainRecord record;
    record.u = state.u;
    record.accepted = step.accepted;
    record.phi = state.phi;
    record.omf = state.phi + 0.5 * cameron_martin_norm_sq(*basis, state.u);
    result.records.push_back(std::move(record));

    if (n <= config.n_max) {
      history.row(history_rows++) = state.u.head(K).transpose();
    }
    if (n < config.n_max && n % config.n_adp == 0) {
      if (auto fitted = refit(history.topRows(history_rows))) {
        prop = std::move(*fitted);
        state.log_g = log_density_mixture(state.u, prop);
        checkpoint(prop);
      }
    }
  }

  result.proposal = std::move(prop);
  return result;
}

}  // namespace gmis
