#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <fstream>

#include "core/adaptation.hpp"
#include "core/diagnostics.hpp"
#include "core/errors.hpp"
#include "core/numerics.hpp"
#include "core/rng.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace gmis;
using gmis_test::make_test_basis;

namespace {

Eigen::MatrixXd prior_samples(const SpectralBasis& basis, int n, int K,
                              std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd samples(n, K);
  for (int i = 0; i < n; ++i) {
    samples.row(i) = sample_prior(basis, rng).head(K).transpose();
  }
  return samples;
}

}  // namespace

// =============================================================================
// fit_single_gaussian
// =============================================================================

TEST_CASE("zero-variance samples raise the degenerate-cluster error") {
  const auto basis = make_test_basis({1.0, 0.5});
  Eigen::MatrixXd samples(10, 2);
  for (int i = 0; i < 10; ++i) samples.row(i) << 1.0, 0.5;  // u_k = alpha_k c
  CHECK_THROWS_AS(fit_single_gaussian(samples, *basis),
                  DegenerateClusterError);
  CHECK_THROWS_AS(fit_single_gaussian(samples.topRows(1), *basis), ParamError);
}

TEST_CASE("prior samples fit back to the prior parameters") {
  const auto basis = make_test_basis({1.2, 0.7, 0.3, 0.1});
  const int n = 100000;
  const Eigen::MatrixXd samples = prior_samples(*basis, n, 4, 21);
  const GaussianComponent comp = fit_single_gaussian(samples, *basis);
  CHECK(comp.w == 1.0);
  for (int k = 0; k < 3; ++k) {
    const double alpha = basis->eigenvalues(k);
    // x = mean/alpha: se(mean) = sqrt(alpha/n)
    const double se_x = std::sqrt(alpha / n) / alpha;
    CHECK(std::abs(comp.x(k)) <= 5.0 * se_x);
    CHECK(std::abs(comp.h(k) * alpha) <= 0.05);
  }
}

TEST_CASE("two-point sample gives the hand-computed moments") {
  const auto basis = make_test_basis({1.0});
  for (double a : {0.5, 2.0}) {
    Eigen::MatrixXd samples(2, 1);
    samples << a, -a;
    const GaussianComponent comp = fit_single_gaussian(samples, *basis);
    CHECK(comp.x(0) == 0.0);
    CHECK(comp.h(0) == doctest::Approx(1.0 / (a * a) - 1.0).epsilon(1e-12));
  }
}

// =============================================================================
// kmeans
// =============================================================================

TEST_CASE("one cluster holds every sample") {
  Eigen::MatrixXd samples(17, 2);
  Rng rng(5);
  for (int i = 0; i < 17; ++i) samples.row(i) << rng.normal(), rng.normal();
  Rng krng(6);
  const KmeansResult result = kmeans(samples, 1, krng);
  for (int a : result.assignments) CHECK(a == 0);
}

TEST_CASE("well-separated 1-D blobs split exactly at the optimum") {
  Rng rng(7);
  const int n = 200;
  Eigen::MatrixXd samples(n, 1);
  for (int i = 0; i < n; ++i) {
    const double center = i % 2 == 0 ? -10.0 : 10.0;
    samples(i, 0) = center + rng.normal();
  }
  // Brute-force optimal 2-clustering of sorted 1-D data: scan all split
  // points and minimize the within-cluster sum of squares.
  std::vector<double> sorted(samples.data(), samples.data() + n);
  std::sort(sorted.begin(), sorted.end());
  double best_sse = std::numeric_limits<double>::infinity();
  double best_split = 0.0;
  for (int s = 1; s < n; ++s) {
    double m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < s; ++i) m1 += sorted[i];
    for (int i = s; i < n; ++i) m2 += sorted[i];
    m1 /= s;
    m2 /= (n - s);
    double sse = 0.0;
    for (int i = 0; i < s; ++i) sse += (sorted[i] - m1) * (sorted[i] - m1);
    for (int i = s; i < n; ++i) sse += (sorted[i] - m2) * (sorted[i] - m2);
    if (sse < best_sse) {
      best_sse = sse;
      best_split = 0.5 * (sorted[s - 1] + sorted[s]);
    }
  }

  Rng krng(8);
  const KmeansResult result = kmeans(samples, 2, krng);
  CHECK(result.objective == doctest::Approx(best_sse).epsilon(1e-10));
  // Labels are arbitrary; membership must match the optimal split.
  const int left_label = result.assignments[static_cast<std::size_t>(
      std::min_element(samples.data(), samples.data() + n) - samples.data())];
  for (int i = 0; i < n; ++i) {
    const int expected = samples(i, 0) < best_split ? left_label : 1 - left_label;
    CHECK(result.assignments[static_cast<std::size_t>(i)] == expected);
  }
}

TEST_CASE("duplicate points share a cluster and Lloyd never backtracks") {
  Eigen::MatrixXd samples(12, 1);
  samples << 0, 0, 0, 0, 5, 5, 5, 5, 5, 10, 10, 10;
  Rng krng(9);
  std::vector<double> trace;
  const KmeansResult result = kmeans(samples, 3, krng, &trace);

  CHECK(result.assignments[0] == result.assignments[1]);
  CHECK(result.assignments[4] == result.assignments[8]);
  CHECK(result.assignments[9] == result.assignments[11]);
  CHECK(result.objective == doctest::Approx(0.0));

  for (std::size_t i = 1; i < trace.size(); ++i) {
    CHECK(trace[i] <= trace[i - 1] + 1e-12);
  }
}

// =============================================================================
// select_J
// =============================================================================

TEST_CASE("a single blob selects one component") {
  Rng rng(10);
  Eigen::MatrixXd samples(400, 2);
  for (int i = 0; i < 400; ++i) {
    samples.row(i) << 0.5 + rng.normal(), -0.2 + 0.5 * rng.normal();
  }
  Rng krng(11);
  CHECK(select_J(samples, {1, 2, 3}, krng) == 1);
}

TEST_CASE("two far blobs select two components, matching a direct BIC scan") {
  Rng rng(12);
  const int n = 500;
  Eigen::MatrixXd samples(n, 1);
  for (int i = 0; i < n; ++i) {
    const double center = i % 2 == 0 ? -10.0 : 10.0;
    samples(i, 0) = center + rng.normal();
  }
  Rng krng(13);
  const int selected = select_J(samples, {1, 2, 3}, krng);
  CHECK(selected == 2);

  // Direct oracle: recompute the three BIC scores from scratch with hard
  // moment fits on k-means partitions and check the argmin.
  auto direct_bic = [&](int J) {
    Rng local(13);
    std::vector<int> assign(n, 0);
    if (J > 1) assign = kmeans(samples, J, local).assignments;
    std::vector<long> counts(static_cast<std::size_t>(J), 0);
    std::vector<long double> mean(static_cast<std::size_t>(J), 0.0L);
    for (int i = 0; i < n; ++i) {
      ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
      mean[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])] +=
          samples(i, 0);
    }
    std::vector<long double> var(static_cast<std::size_t>(J), 0.0L);
    for (int j = 0; j < J; ++j) mean[static_cast<std::size_t>(j)] /= counts[static_cast<std::size_t>(j)];
    for (int i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(assign[static_cast<std::size_t>(i)]);
      const long double d = samples(i, 0) - mean[j];
      var[j] += d * d;
    }
    for (int j = 0; j < J; ++j) var[static_cast<std::size_t>(j)] /= counts[static_cast<std::size_t>(j)];
    long double loglik = 0.0L;
    for (int i = 0; i < n; ++i) {
      long double p = 0.0L;
      for (int j = 0; j < J; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const long double w =
            static_cast<long double>(counts[ju]) / n;
        const long double d = samples(i, 0) - mean[ju];
        p += w / std::sqrt(2.0L * 3.141592653589793238L * var[ju]) *
             std::exp(-0.5L * d * d / var[ju]);
      }
      loglik += std::log(p);
    }
    const double params = J * (2.0 * 1 + 1.0) - 1.0;
    return static_cast<double>(-2.0L * loglik) + params * std::log(1.0 * n);
  };
  const double bic1 = direct_bic(1);
  const double bic2 = direct_bic(2);
  CHECK(bic2 < bic1);
}

TEST_CASE("too little data falls back to the smallest candidate") {
  Eigen::MatrixXd samples(4, 3);  // n < 2K+1 = 7
  samples.setRandom();
  Rng krng(14);
  CHECK(select_J(samples, {2, 3}, krng) == 2);
}

// =============================================================================
// fit_mixture_clustering
// =============================================================================

TEST_CASE("J = 1 reproduces the single-Gaussian fit exactly") {
  const auto basis = make_test_basis({1.0, 0.4});
  const Eigen::MatrixXd samples = prior_samples(*basis, 500, 2, 15);
  Rng krng(16);
  const MixtureProposal prop =
      fit_mixture_clustering(samples, basis, 1, {1}, krng);
  const GaussianComponent direct = fit_single_gaussian(samples, *basis);
  REQUIRE(prop.components.size() == 1);
  CHECK(prop.components[0].w == direct.w);
  CHECK(prop.components[0].x == direct.x);
  CHECK(prop.components[0].h == direct.h);
}

TEST_CASE("a known two-component mixture is recovered within 5 sigma") {
  const auto basis = make_test_basis({1.0});
  Rng rng(17);
  const int n = 100000;
  Eigen::MatrixXd samples(n, 1);
  long n_plus = 0;
  for (int i = 0; i < n; ++i) {
    const bool plus = rng.uniform() < 0.5;
    n_plus += plus ? 1 : 0;
    samples(i, 0) = (plus ? 2.0 : -2.0) + 0.5 * rng.normal();
  }

  Rng krng(18);
  const MixtureProposal prop =
      fit_mixture_clustering(samples, basis, 2, {2}, krng);
  REQUIRE(prop.components.size() == 2);
  CHECK(validate(prop).ok());

  // True parameters: alpha x = +-2 -> x = +-2; h = 1/0.25 - 1 = 3; w = 0.5.
  const double half_n = n / 2.0;
  const double se_x = std::sqrt(0.25 / half_n);
  const double se_h = std::sqrt(2.0 / half_n) / 0.25;
  const double se_w = std::sqrt(0.25 / n);
  for (const auto& comp : prop.components) {
    const double sign = comp.x(0) > 0.0 ? 1.0 : -1.0;
    CHECK(std::abs(comp.x(0) - sign * 2.0) <= 5.0 * se_x);
    CHECK(std::abs(comp.h(0) - 3.0) <= 5.0 * se_h);
    CHECK(std::abs(comp.w - 0.5) <= 5.0 * se_w);
  }
  CHECK(prop.components[0].x(0) * prop.components[1].x(0) < 0.0);
}

TEST_CASE("fully degenerate data falls back to the prior component") {
  const auto basis = make_test_basis({1.0, 0.5});
  Eigen::MatrixXd samples = Eigen::MatrixXd::Zero(20, 2);
  Rng krng(19);
  const MixtureProposal prop =
      fit_mixture_clustering(samples, basis, 1, {1}, krng);
  REQUIRE(prop.components.size() == 1);
  CHECK(prop.components[0].x.cwiseAbs().maxCoeff() == 0.0);
  CHECK(prop.components[0].h.cwiseAbs().maxCoeff() == 0.0);
  CHECK(validate(prop).ok());
}

TEST_CASE("fits from a real chain always validate") {
  const auto basis = make_test_basis({1.0, 0.6, 0.3});
  Eigen::VectorXd data(3);
  data << 0.8, -0.2, 0.1;
  const PhiFn phi = [&](const Eigen::VectorXd& u) {
    return (u.head(3) - data).squaredNorm();
  };
  const MixtureProposal prior = prior_proposal(basis, 3);
  Rng prng(20, 1), crng(20, 2);
  ChainState state = make_state(sample_proposal(prior, prng), phi, prior);
  Eigen::MatrixXd samples(2000, 3);
  for (int i = 0; i < 2000; ++i) {
    state = is_step(state, prior, phi, 1.0, prng, crng).state;
    samples.row(i) = state.u.head(3).transpose();
  }
  Rng krng(21);
  for (int J : {0, 1, 2}) {  // 0 = BIC-selected
    const MixtureProposal prop =
        fit_mixture_clustering(samples, basis, J, {1, 2, 3}, krng);
    CHECK(validate(prop).ok());
  }
}

// =============================================================================
// EM
// =============================================================================

TEST_CASE("E-step with one component is identically one") {
  const auto basis = make_test_basis({1.0, 0.5});
  const Eigen::MatrixXd samples = prior_samples(*basis, 50, 2, 22);
  MixtureProposal prop;
  prop.K = 2;
  prop.basis = basis;
  GaussianComponent comp;
  comp.x = Eigen::Vector2d(0.3, -0.1);
  comp.h = Eigen::Vector2d(0.2, 0.4);
  comp.w = 1.0;
  prop.components = {comp};

  const Membership q = em_e_step(samples, prop);
  for (int i = 0; i < q.rows(); ++i) CHECK(q(i, 0) == 1.0);
}

TEST_CASE("E-step at the symmetry point splits evenly") {
  const auto basis = make_test_basis({1.0});
  MixtureProposal prop;
  prop.K = 1;
  prop.basis = basis;
  GaussianComponent a, b;
  a.x = Eigen::VectorXd::Constant(1, 1.5);
  a.h = Eigen::VectorXd::Constant(1, 0.7);
  a.w = 0.5;
  b.x = Eigen::VectorXd::Constant(1, -1.5);
  b.h = Eigen::VectorXd::Constant(1, 0.7);
  b.w = 0.5;
  prop.components = {a, b};

  Eigen::MatrixXd samples(1, 1);
  samples << 0.0;
  const Membership q = em_e_step(samples, prop);
  CHECK(q(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(q(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("E-step matches an extended-precision evaluation") {
  const auto basis = make_test_basis({1.0, 0.5});
  MixtureProposal prop;
  prop.K = 2;
  prop.basis = basis;
  GaussianComponent a, b;
  a.x = Eigen::Vector2d(0.5, -0.3);
  a.h = Eigen::Vector2d(1.0, 0.2);
  a.w = 0.3;
  b.x = Eigen::Vector2d(-1.0, 0.8);
  b.h = Eigen::Vector2d(0.0, 2.0);
  b.w = 0.7;
  prop.components = {a, b};

  const Eigen::MatrixXd samples = prior_samples(*basis, 100, 2, 23);
  const Membership q = em_e_step(samples, prop);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd u = samples.row(i).transpose();
    const long double fa =
        0.3L * std::exp(static_cast<long double>(
                   log_density_component(u, a, *basis)));
    const long double fb =
        0.7L * std::exp(static_cast<long double>(
                   log_density_component(u, b, *basis)));
    CHECK(q(i, 0) == doctest::Approx(static_cast<double>(fa / (fa + fb)))
                         .epsilon(1e-12));
    CHECK(q(i, 0) + q(i, 1) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("M-step with hard memberships equals the cluster formulas") {
  const auto basis = make_test_basis({1.0, 0.5});
  Rng rng(24);
  const int n = 60;
  Eigen::MatrixXd samples(n, 2);
  Membership q = Eigen::MatrixXd::Zero(n, 2);
  for (int i = 0; i < n; ++i) {
    const int cluster = i < 25 ? 0 : 1;
    samples.row(i) << (cluster == 0 ? -1.0 : 2.0) + rng.normal(),
        0.5 * rng.normal();
    q(i, cluster) = 1.0;
  }
  const MixtureProposal stepped = em_m_step(samples, q, basis);
  REQUIRE(stepped.components.size() == 2);

  const GaussianComponent first =
      fit_single_gaussian(samples.topRows(25), *basis);
  const GaussianComponent second =
      fit_single_gaussian(samples.bottomRows(n - 25), *basis);
  CHECK(stepped.components[0].x == first.x);
  CHECK(stepped.components[0].h == first.h);
  CHECK(stepped.components[0].w == doctest::Approx(25.0 / n).epsilon(1e-15));
  CHECK(stepped.components[1].x == second.x);
  CHECK(stepped.components[1].h == second.h);
}

TEST_CASE("M-step with unit memberships equals the single-Gaussian fit") {
  const auto basis = make_test_basis({1.0, 0.5, 0.2});
  const Eigen::MatrixXd samples = prior_samples(*basis, 200, 3, 25);
  const Membership q = Eigen::MatrixXd::Ones(200, 1);
  const MixtureProposal stepped = em_m_step(samples, q, basis);
  const GaussianComponent direct = fit_single_gaussian(samples, *basis);
  REQUIRE(stepped.components.size() == 1);
  CHECK(stepped.components[0].x == direct.x);
  CHECK(stepped.components[0].h == direct.h);
  CHECK(stepped.components[0].w == 1.0);
}

TEST_CASE("one EM iteration from a perturbed truth improves the objective") {
  const auto basis = make_test_basis({1.0});
  Rng rng(26);
  const int n = 5000;
  Eigen::MatrixXd samples(n, 1);
  for (int i = 0; i < n; ++i) {
    samples(i, 0) = (rng.uniform() < 0.4 ? -1.5 : 1.5) + 0.6 * rng.normal();
  }

  MixtureProposal truth;
  truth.K = 1;
  truth.basis = basis;
  GaussianComponent a, b;
  a.x = Eigen::VectorXd::Constant(1, -1.2);   // perturbed from -1.5
  a.h = Eigen::VectorXd::Constant(1, 1.0);
  a.w = 0.5;
  b.x = Eigen::VectorXd::Constant(1, 1.8);
  b.h = Eigen::VectorXd::Constant(1, 1.0);
  b.w = 0.5;
  truth.components = {a, b};

  const double before = em_objective(samples, truth);
  const Membership q = em_e_step(samples, truth);
  const MixtureProposal after_prop = em_m_step(samples, q, basis);
  const double after = em_objective(samples, after_prop);
  CHECK(after > before);
}

TEST_CASE("EM at a stationary point stops immediately") {
  const auto basis = make_test_basis({1.0, 0.5});
  const Eigen::MatrixXd samples = prior_samples(*basis, 300, 2, 27);
  MixtureProposal init;
  init.K = 2;
  init.basis = basis;
  init.components = {fit_single_gaussian(samples, *basis)};

  std::vector<double> trace;
  em_fit(samples, init, 200, 1e-8, &trace);
  CHECK(trace.size() <= 3);  // init value plus at most two iterations
}

TEST_CASE("EM improves on the clustering initialization and is monotone") {
  const auto basis = make_test_basis({1.0, 0.5});
  Rng rng(28);
  const int n = 4000;
  Eigen::MatrixXd samples(n, 2);
  for (int i = 0; i < n; ++i) {
    const double mode = rng.uniform() < 0.5 ? -1.0 : 1.0;
    samples.row(i) << mode + 0.4 * rng.normal(), 0.3 * rng.normal();
  }
  Rng krng(29);
  const MixtureProposal init =
      fit_mixture_clustering(samples, basis, 2, {2}, krng);

  std::vector<double> trace;
  const MixtureProposal refined = em_fit(samples, init, 200, 1e-10, &trace);
  CHECK(em_objective(samples, refined) >= em_objective(samples, init));
  for (std::size_t i = 1; i < trace.size(); ++i) {
    CHECK(trace[i] >= trace[i - 1] -
                          1e-10 * std::max(1.0, std::abs(trace[i - 1])));
  }
}

// =============================================================================
// adaptive_loop
// =============================================================================

TEST_CASE("adaptation disabled reduces to prior-IS") {
  const auto basis = make_test_basis({1.0, 0.5, 0.2});
  Eigen::VectorXd data(3);
  data << 0.5, -0.3, 0.2;
  const PhiFn phi = [&](const Eigen::VectorXd& u) {
    return (u.head(3) - data).squaredNorm();
  };

  AdaptConfig config;
  config.n_tol = 300;
  config.n_max = 0;
  config.n_adp = 50;
  config.i_temp = 0;
  config.k_override = 3;
  config.estimator = Estimator::SingleGaussian;

  Rng p1(31, 1), c1(31, 2), k1(31, 3);
  const AdaptiveResult result = adaptive_loop(config, phi, basis, p1, c1, k1);
  CHECK(result.refits == 0);
  REQUIRE(result.records.size() == 300);

  // Manual prior-IS with the same streams reproduces the loop bit for bit.
  const MixtureProposal prior = prior_proposal(basis, 3);
  Rng p2(31, 1), c2(31, 2);
  ChainState state = make_state(sample_proposal(prior, p2), phi, prior);
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    const StepResult step = is_step(state, prior, phi, 1.0, p2, c2);
    state = step.state;
    CHECK(result.records[i].accepted == step.accepted);
    CHECK(result.records[i].u == state.u);
  }
  CHECK(result.proposal.components.size() == 1);
  CHECK(result.proposal.components[0].x.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linear-Gaussian adaptation converges to the analytic posterior") {
  const auto basis = make_test_basis({1.0, 0.8, 0.6, 0.4, 0.2});
  Eigen::VectorXd data(5);
  data << 0.8, -0.7, 0.6, 0.5, -0.4;
  const double sigma = 1.0;
  const PhiFn phi = [&](const Eigen::VectorXd& u) {
    return (u.head(5) - data).squaredNorm() / (2.0 * sigma * sigma);
  };

  AdaptConfig config;
  config.n_tol = 20000;
  config.n_max = 15000;
  config.n_adp = 500;
  config.k_override = 5;
  config.estimator = Estimator::SingleGaussian;

  Rng prng(32, 1), crng(32, 2), krng(32, 3);
  const AdaptiveResult result =
      adaptive_loop(config, phi, basis, prng, crng, krng);
  CHECK(result.validity_violations == 0);
  REQUIRE(result.proposal.components.size() == 1);
  const GaussianComponent& comp = result.proposal.components[0];

  for (int k = 0; k < 5; ++k) {
    const double alpha = basis->eigenvalues(k);
    const double post_var = 1.0 / (1.0 / alpha + 1.0);
    const double post_mean = post_var * data(k);
    const double x_true = post_mean / alpha;
    const double h_true = 1.0;  // 1/post_var - 1/alpha = 1/sigma^2
    // Chain autocorrelation inflates the error of the moment estimates;
    // 1 + 2 tau <= 20 is generous for a proposal this close to the target.
    const double se_x = std::sqrt(post_var * 20.0 / config.n_max) / alpha;
    const double se_h =
        std::sqrt(2.0 * 20.0 / config.n_max) / post_var;
    CHECK(std::abs(comp.x(k) - x_true) <= 5.0 * se_x);
    CHECK(std::abs(comp.h(k) - h_true) <= 5.0 * se_h);
  }
}

TEST_CASE("refit failure keeps the previous proposal and the chain alive") {
  const auto basis = make_test_basis({1.0, 0.5});
  const PhiFn phi = [](const Eigen::VectorXd&) { return 0.0; };

  AdaptConfig config;
  config.n_tol = 2;
  config.n_max = 2;
  config.n_adp = 1;
  config.k_override = 2;
  config.estimator = Estimator::Clustering;
  config.j_range = {3};  // more clusters than samples: every refit fails

  Rng prng(33, 1), crng(33, 2), krng(33, 3);
  const AdaptiveResult result =
      adaptive_loop(config, phi, basis, prng, crng, krng);
  CHECK(result.records.size() == 2);
  CHECK(result.refit_failures == result.refits);
  CHECK(result.refits > 0);
  CHECK(result.proposal.components[0].x.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adaptation freezes after n_max") {
  namespace fs = std::filesystem;
  const auto basis = make_test_basis({1.0, 0.5});
  Eigen::VectorXd data(2);
  data << 0.5, -0.2;
  const PhiFn phi = [&](const Eigen::VectorXd& u) {
    return (u.head(2) - data).squaredNorm();
  };

  const std::string dir = "/tmp/gmis_test_checkpoints";
  fs::remove_all(dir);
  fs::create_directories(dir);

  AdaptConfig config;
  config.n_tol = 2000;
  config.n_max = 1000;
  config.n_adp = 100;
  config.k_override = 2;
  config.estimator = Estimator::SingleGaussian;
  config.checkpoint_dir = dir;

  Rng prng(34, 1), crng(34, 2), krng(34, 3);
  const AdaptiveResult result =
      adaptive_loop(config, phi, basis, prng, crng, krng);

  // Refits happen at n = 100, 200, ..., 900 (while n < n_max).
  CHECK(result.refits == 9);

  std::vector<std::string> checkpoints;
  for (const auto& entry : fs::directory_iterator(dir)) {
    checkpoints.push_back(entry.path().string());
  }
  std::sort(checkpoints.begin(), checkpoints.end());
  REQUIRE(!checkpoints.empty());

  std::ifstream last(checkpoints.back());
  nlohmann::json last_doc = nlohmann::json::parse(last);
  // The final proposal is bit-identical to the last checkpoint: nothing
  // was refit after the freeze.
  CHECK(proposal_to_json(result.proposal).dump() == last_doc.dump());
}

TEST_CASE("tempered stages run and record acceptance") {
  const auto basis = make_test_basis({1.0, 0.5});
  Eigen::VectorXd data(2);
  data << 1.0, -0.5;
  const PhiFn phi = [&](const Eigen::VectorXd& u) {
    return (u.head(2) - data).squaredNorm();
  };

  AdaptConfig config;
  config.n_tol = 500;
  config.n_max = 400;
  config.n_adp = 100;
  config.i_temp = 3;
  config.n_temp = 100;
  config.k_override = 2;
  config.estimator = Estimator::SingleGaussian;

  Rng prng(35, 1), crng(35, 2), krng(35, 3);
  const AdaptiveResult result =
      adaptive_loop(config, phi, basis, prng, crng, krng);
  REQUIRE(result.tempering_acceptance.size() == 3);
  // Stage 1 targets lambda = 0 with the prior proposal: every draw accepted.
  CHECK(result.tempering_acceptance[0] == 1.0);
  CHECK(result.records.size() == 500);
  CHECK(result.validity_violations == 0);
}

TEST_CASE("adapt config validation") {
  AdaptConfig config;
  config.n_tol = 100;
  config.n_max = 200;  // exceeds n_tol
  CHECK_THROWS_AS(validate_adapt_config(config), ParamError);

  config.n_max = 50;
  config.n_adp = 0;
  CHECK_THROWS_AS(validate_adapt_config(config), ParamError);

  config.n_adp = 10;
  config.i_temp = 2;
  config.n_temp = 0;
  CHECK_THROWS_AS(validate_adapt_config(config), ParamError);

  config.n_temp = 10;
  validate_adapt_config(config);  // now fine
}
