#include "core/diagnostics.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace gmis {

namespace {

struct CenteredTrace {
  Eigen::VectorXd centered;
  double denom = 0.0;
};

CenteredTrace center(const Eigen::VectorXd& trace) {
  CenteredTrace c;
  c.centered = trace.array() - trace.mean();
  c.denom = c.centered.squaredNorm();
  if (!(c.denom > 0.0)) {
    throw NumericError("acf: constant series has undefined autocorrelation");
  }
  return c;
}

double lag_correlation(const CenteredTrace& c, int lag) {
  const Eigen::Index n = c.centered.size();
  return c.centered.head(n - lag).dot(c.centered.tail(n - lag)) / c.denom;
}

}  // namespace

Eigen::VectorXd acf(const Eigen::VectorXd& trace, int max_lag) {
  if (max_lag < 0 || trace.size() <= max_lag) {
    throw ParamError("acf: need length > max_lag >= 0");
  }
  const CenteredTrace c = center(trace);
  Eigen::VectorXd rho(max_lag + 1);
  for (int lag = 0; lag <= max_lag; ++lag) {
    rho(lag) = lag_correlation(c, lag);
  }
  return rho;
}

double iact(const Eigen::VectorXd& trace) {
  if (trace.size() < 100) throw ParamError("iact: need length >= 100");
  const CenteredTrace c = center(trace);
  const int max_lag = static_cast<int>(trace.size()) - 1;

  double tau = 0.0;
  for (int lag = 1; lag + 1 <= max_lag; lag += 2) {
    const double a = lag_correlation(c, lag);
    const double b = lag_correlation(c, lag + 1);
    if (!(a + b > 0.0)) break;
    tau += a + b;
  }
  return std::max(tau, 0.0);
}

double ess(const Eigen::VectorXd& trace) {
  const double tau = iact(trace);
  return static_cast<double>(trace.size()) / (1.0 + 2.0 * tau);
}

std::vector<double> acceptance_curve(const std::vector<char>& flags,
                                     int window) {
  if (window < 1) throw ParamError("acceptance_curve: need window >= 1");
  std::vector<double> curve;
  if (static_cast<std::size_t>(window) > flags.size()) return curve;
  curve.reserve(flags.size() - window + 1);
  long running = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    running += flags[i] ? 1 : 0;
    if (i + 1 >= static_cast<std::size_t>(window)) {
      if (i + 1 > static_cast<std::size_t>(window)) {
        running -= flags[i - window] ? 1 : 0;
      }
      curve.push_back(static_cast<double>(running) / window);
    }
  }
  return curve;
}

double kld_objective(const Eigen::MatrixXd& samples,
                     const MixtureProposal& prop) {
  const Eigen::Index n = samples.rows();
  if (n < 1) throw ParamError("kld_objective: empty sample matrix");
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    total += log_density_mixture(samples.row(i).transpose(), prop);
  }
  return -total / static_cast<double>(n);
}

}  // namespace gmis
