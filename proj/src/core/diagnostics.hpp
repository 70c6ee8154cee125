#pragma once

#include <Eigen/Core>
#include <vector>

#include "core/proposal.hpp"

namespace gmis {

// Empirical autocorrelation rho(0..max_lag); rho(0) = 1. Throws
// NumericError for a constant series.
Eigen::VectorXd acf(const Eigen::VectorXd& trace, int max_lag);

// Integrated autocorrelation time tau = sum_{l>=1} rho(l), truncated by
// Geyer's initial-positive-sequence rule: lags are consumed in adjacent
// pairs (1,2), (3,4), ... and summation stops at the first non-positive
// pair sum. Clamped at 0.
double iact(const Eigen::VectorXd& trace);

// ESS = N / (1 + 2 tau).
double ess(const Eigen::VectorXd& trace);

// Trailing moving average over full windows; output length N - window + 1.
std::vector<double> acceptance_curve(const std::vector<char>& flags,
                                     int window);

// Monte Carlo KLD objective -(1/N) sum_n log sum_j w_j f(u^n); zero for the
// prior proposal, lower is better.
double kld_objective(const Eigen::MatrixXd& samples,
                     const MixtureProposal& prop);

}  // namespace gmis
