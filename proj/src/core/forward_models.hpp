#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>

#include "core/grid.hpp"
#include "core/rng.hpp"
#include "core/spectral_basis.hpp"

namespace gmis {

// Data-misfit functional on grid fields. Implementations return a
// non-negative, finite value for finite fields; a non-finite return signals
// a solver blow-up and is mapped to auto-reject by the samplers.
class Potential {
 public:
  virtual ~Potential() = default;
  virtual double operator()(const Eigen::VectorXd& field) const = 0;
  virtual std::string name() const = 0;
  virtual int observation_count() const { return 0; }
};

struct ObservationSet {
  Eigen::VectorXd coords;  // observation times/locations
  Eigen::VectorXd values;
  double noise_sd = 0.0;
};

void validate_observations(const ObservationSet& obs);

// CSV columns: index,coordinate,value. The sidecar JSON records noise_sd,
// the seed and the preset the data came from.
void write_observations_csv(const std::string& path,
                            const ObservationSet& obs);
void write_observations_sidecar(const std::string& path,
                                const ObservationSet& obs,
                                std::uint64_t seed,
                                const std::string& preset);
ObservationSet read_observations_csv(const std::string& csv_path,
                                     const std::string& sidecar_path);

// --- ODE benchmark: dx/dt = -u(t) x(t), x(0) = x0 ------------------------

// Classical RK4 with fixed step length()/nsteps; u(t) is interpolated
// linearly between grid points. Returns x at the requested times.
Eigen::VectorXd ode_solve(const Grid& ugrid, const Eigen::VectorXd& u,
                          double x0, int nsteps,
                          const Eigen::VectorXd& times);

class OdePotential : public Potential {
 public:
  OdePotential(Grid ugrid, ObservationSet obs, double x0, int nsteps);
  double operator()(const Eigen::VectorXd& field) const override;
  std::string name() const override { return "ode"; }
  int observation_count() const override {
    return static_cast<int>(obs_.values.size());
  }
  Eigen::VectorXd predict(const Eigen::VectorXd& field) const;
  const ObservationSet& observations() const { return obs_; }

 private:
  Grid ugrid_;
  ObservationSet obs_;
  double x0_;
  int nsteps_;
};

// --- Bimodal synthetic likelihood -----------------------------------------

// Phi(u) = -log[ (exp(-|u - a s|^2/2) + exp(-|u + a s|^2/2)) / 2 ] with
// s(t) = sin(2 pi t) and |.| the discrete l2 norm over the grid values;
// non-negative by construction.
class BimodalPotential : public Potential {
 public:
  BimodalPotential(Grid grid, double amplitude);
  double operator()(const Eigen::VectorXd& field) const override;
  std::string name() const override { return "bimodal"; }
  double amplitude() const { return amplitude_; }
  const Eigen::VectorXd& mode_shape() const { return shape_; }

 private:
  Grid grid_;
  double amplitude_;
  Eigen::VectorXd shape_;  // amplitude * sin(2 pi t) on the grid
};

// --- Inverse heat conduction ----------------------------------------------

enum class HeatBc { Insulated, Robin };

struct HeatConfig {
  double length = 1.0;      // medium length L
  double horizon = 2.0;     // time horizon T
  double sensor_pos = 0.9;  // x_s
  int nx = 50;              // spatial nodes
  int nt = 400;             // time steps
};

// Semi-implicit finite differences for u_t = (c(u) u_x)_x, c(u) = u^2 + 1:
// Crank-Nicolson diffusion (one tridiagonal solve per step) with the
// conductivity lagged to the half level from known states. The left
// boundary injects the prescribed heat flux q(t), -c(u) u_x(0,t) = q(t);
// the right boundary is insulated or Robin (u_x(L,t) = -u). Initial
// condition u(x,0) = 0. Returns the sensor temperature at the requested
// times; entries are NaN after a blow-up. field_history, when given,
// receives the full (nt+1) x nx solution.
Eigen::VectorXd heat_solve(const Grid& qgrid, const Eigen::VectorXd& q,
                           HeatBc bc, const HeatConfig& config,
                           const Eigen::VectorXd& times,
                           Eigen::MatrixXd* field_history = nullptr);

// Mixture misfit over the two boundary conditions:
// Phi = -log(0.8 exp(-Phi_1) + 0.2 exp(-Phi_2)), clamped at 0 from below.
class HeatPotential : public Potential {
 public:
  HeatPotential(Grid qgrid, ObservationSet obs, HeatConfig config);
  double operator()(const Eigen::VectorXd& field) const override;
  std::string name() const override { return "heat"; }
  int observation_count() const override {
    return static_cast<int>(obs_.values.size());
  }
  // Individual misfits, exposed for posterior-mode attribution.
  double misfit(const Eigen::VectorXd& field, HeatBc bc) const;
  const ObservationSet& observations() const { return obs_; }
  const HeatConfig& config() const { return config_; }

 private:
  Grid qgrid_;
  ObservationSet obs_;
  HeatConfig config_;
};

// Combine two branch misfits with prior weights (0.8, 0.2).
double mix_heat_misfits(double phi_insulated, double phi_robin);

// --- Linear-Gaussian test potential ----------------------------------------

// Phi(u) = sum_{k<=K} (u_k - d_k)^2 / (2 sigma^2) on spectral coefficients;
// the posterior is analytic: independent Gaussians with variance
// (1/alpha_k + 1/sigma^2)^{-1}.
class LinearGaussianPotential : public Potential {
 public:
  LinearGaussianPotential(std::shared_ptr<const SpectralBasis> basis,
                          Eigen::VectorXd data, double sigma);
  double operator()(const Eigen::VectorXd& field) const override;
  std::string name() const override { return "linear-gaussian"; }
  int observation_count() const override {
    return static_cast<int>(data_.size());
  }
  double posterior_mean(int k) const;
  double posterior_var(int k) const;
  const Eigen::VectorXd& data() const { return data_; }
  double sigma() const { return sigma_; }

 private:
  std::shared_ptr<const SpectralBasis> basis_;
  Eigen::VectorXd data_;
  double sigma_;
};

// --- Data simulation and the OMF -------------------------------------------

using ForwardFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// y_i = G(u_true)(t_i) + noise_sd * xi_i with iid standard normal xi.
ObservationSet simulate_data(const ForwardFn& forward,
                             const Eigen::VectorXd& coords,
                             const Eigen::VectorXd& u_true, double noise_sd,
                             Rng& rng);

// Onsager-Machlup functional: Phi(synthesize(u)) + |u|_E^2 / 2.
double omf(const Potential& potential, const SpectralBasis& basis,
           const Eigen::VectorXd& coeffs);

}  // namespace gmis
