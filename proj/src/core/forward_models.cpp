#include "core/forward_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "core/errors.hpp"
#include "core/io_util.hpp"
#include "core/numerics.hpp"
#include "core/spectral_basis.hpp"

#include "json.hpp"

namespace gmis {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Piecewise-linear interpolation of a grid field, clamped at the ends.
class LinearInterp {
 public:
  LinearInterp(const Grid& grid, const Eigen::VectorXd& values)
      : points_(grid.points), values_(values) {
    if (points_.size() != values_.size()) {
      throw ShapeError("interpolation: field length does not match grid");
    }
  }

  double operator()(double t) const {
    const int n = static_cast<int>(points_.size());
    if (t <= points_(0)) return values_(0);
    if (t >= points_(n - 1)) return values_(n - 1);
    const double* begin = points_.data();
    const double* it = std::upper_bound(begin, begin + n, t);
    const int hi = static_cast<int>(it - begin);
    const int lo = hi - 1;
    const double f = (t - points_(lo)) / (points_(hi) - points_(lo));
    return (1.0 - f) * values_(lo) + f * values_(hi);
  }

 private:
  const Eigen::VectorXd& points_;
  const Eigen::VectorXd& values_;
};

// Samples a uniformly stepped trajectory (t0 + i*dt) at arbitrary times.
double sample_trajectory(const std::vector<double>& traj, double t0,
                         double dt, double t) {
  const int n = static_cast<int>(traj.size());
  const double s = (t - t0) / dt;
  if (s <= 0.0) return traj.front();
  if (s >= n - 1) return traj.back();
  const int lo = static_cast<int>(s);
  const double f = s - lo;
  return (1.0 - f) * traj[lo] + f * traj[lo + 1];
}

}  // namespace

void validate_observations(const ObservationSet& obs) {
  if (obs.coords.size() != obs.values.size()) {
    throw ParamError("observations: coords/values length mismatch");
  }
  if (!(obs.noise_sd > 0.0)) {
    throw ParamError("observations: noise_sd must be positive");
  }
}

void write_observations_csv(const std::string& path,
                            const ObservationSet& obs) {
  auto out = open_output(path);
  out << "index,coordinate,value" << kCsvEol;
  for (int i = 0; i < obs.coords.size(); ++i) {
    out << i + 1 << ',' << format_double(obs.coords(i)) << ','
        << format_double(obs.values(i)) << kCsvEol;
  }
}

void write_observations_sidecar(const std::string& path,
                                const ObservationSet& obs,
                                std::uint64_t seed,
                                const std::string& preset) {
  nlohmann::json doc;
  doc["noise_sd"] = obs.noise_sd;
  doc["seed"] = seed;
  doc["model"] = preset;
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

ObservationSet read_observations_csv(const std::string& csv_path,
                                     const std::string& sidecar_path) {
  auto in = open_input(csv_path);
  std::string line;
  if (!std::getline(in, line)) {
    throw ParamError("observations csv: empty file " + csv_path);
  }
  std::vector<double> coords;
  std::vector<double> values;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) {
      line.pop_back();
    }
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');  // index, unused
    std::getline(row, cell, ',');
    coords.push_back(std::stod(cell));
    std::getline(row, cell, ',');
    values.push_back(std::stod(cell));
  }

  auto side = open_input(sidecar_path);
  nlohmann::json doc = nlohmann::json::parse(side);

  ObservationSet obs;
  obs.coords = Eigen::Map<const Eigen::VectorXd>(
      coords.data(), static_cast<Eigen::Index>(coords.size()));
  obs.values = Eigen::Map<const Eigen::VectorXd>(
      values.data(), static_cast<Eigen::Index>(values.size()));
  obs.noise_sd = doc.at("noise_sd").get<double>();
  validate_observations(obs);
  return obs;
}

// --- ODE --------------------------------------------------------------------

Eigen::VectorXd ode_solve(const Grid& ugrid, const Eigen::VectorXd& u,
                          double x0, int nsteps,
                          const Eigen::VectorXd& times) {
  if (nsteps < ugrid.size()) {
    throw ParamError("ode_solve: nsteps below grid resolution");
  }
  if (!std::isfinite(x0)) throw ParamError("ode_solve: non-finite x0");

  const LinearInterp coeff(ugrid, u);
  const double t0 = ugrid.points(0);
  const double dt = ugrid.length() / static_cast<double>(nsteps);

  std::vector<double> traj(static_cast<std::size_t>(nsteps) + 1);
  traj[0] = x0;
  double x = x0;
  for (int i = 0; i < nsteps; ++i) {
    const double t = t0 + i * dt;
    const double k1 = -coeff(t) * x;
    const double k2 = -coeff(t + 0.5 * dt) * (x + 0.5 * dt * k1);
    const double k3 = -coeff(t + 0.5 * dt) * (x + 0.5 * dt * k2);
    const double k4 = -coeff(t + dt) * (x + dt * k3);
    x += dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    traj[static_cast<std::size_t>(i) + 1] = x;
  }

  Eigen::VectorXd out(times.size());
  for (int i = 0; i < times.size(); ++i) {
    out(i) = sample_trajectory(traj, t0, dt, times(i));
  }
  return out;
}

OdePotential::OdePotential(Grid ugrid, ObservationSet obs, double x0,
                           int nsteps)
    : ugrid_(std::move(ugrid)),
      obs_(std::move(obs)),
      x0_(x0),
      nsteps_(nsteps) {
  validate_grid(ugrid_);
  validate_observations(obs_);
}

Eigen::VectorXd OdePotential::predict(const Eigen::VectorXd& field) const {
  return ode_solve(ugrid_, field, x0_, nsteps_, obs_.coords);
}

double OdePotential::operator()(const Eigen::VectorXd& field) const {
  const Eigen::VectorXd pred = predict(field);
  const double s2 = obs_.noise_sd * obs_.noise_sd;
  return (pred - obs_.values).squaredNorm() / (2.0 * s2);
}

// --- Bimodal ------------------------------------------------------------------

BimodalPotential::BimodalPotential(Grid grid, double amplitude)
    : grid_(std::move(grid)), amplitude_(amplitude) {
  validate_grid(grid_);
  if (!(amplitude_ > 0.0)) {
    throw ParamError("bimodal potential: amplitude must be positive");
  }
  shape_ = (2.0 * kPi * grid_.points.array()).sin() * amplitude_;
}

double BimodalPotential::operator()(const Eigen::VectorXd& field) const {
  // Discrete l2 norm over the grid values. The quadrature-weighted norm
  // would shrink the misfit by the mesh width and leave the posterior
  // nearly indistinguishable from the prior.
  const double a = 0.5 * (field - shape_).squaredNorm();
  const double b = 0.5 * (field + shape_).squaredNorm();
  const double lo = std::min(a, b);
  const double gap = std::abs(a - b);
  // -log((e^-a + e^-b)/2) = lo - log1p(e^-gap) + log 2
  const double phi = lo - std::log1p(std::exp(-gap)) + std::log(2.0);
  return std::max(phi, 0.0);
}

// --- Heat conduction ----------------------------------------------------------

Eigen::VectorXd heat_solve(const Grid& qgrid, const Eigen::VectorXd& q,
                           HeatBc bc, const HeatConfig& config,
                           const Eigen::VectorXd& times,
                           Eigen::MatrixXd* field_history) {
  if (config.nx < 3) throw ParamError("heat_solve: nx too small");
  if (config.nt < 1) throw ParamError("heat_solve: nt too small");
  if (!(config.sensor_pos >= 0.0 && config.sensor_pos <= config.length)) {
    throw ParamError("heat_solve: sensor outside the medium");
  }

  const int nx = config.nx;
  const double dx = config.length / static_cast<double>(nx - 1);
  const double dt = config.horizon / static_cast<double>(config.nt);
  const double r = dt / (dx * dx);

  const LinearInterp flux(qgrid, q);

  Eigen::VectorXd u = Eigen::VectorXd::Zero(nx);
  std::vector<double> sensor(static_cast<std::size_t>(config.nt) + 1);
  const double spos = config.sensor_pos / dx;
  const int slo = std::min(static_cast<int>(spos), nx - 2);
  const double sfrac = spos - slo;
  auto sensor_value = [&](const Eigen::VectorXd& v) {
    return (1.0 - sfrac) * v(slo) + sfrac * v(slo + 1);
  };
  sensor[0] = sensor_value(u);
  if (field_history) {
    field_history->resize(config.nt + 1, nx);
    field_history->row(0) = u.transpose();
  }

  Eigen::VectorXd cond(nx), lo_op(nx), di_op(nx), up_op(nx);
  Eigen::VectorXd lower(nx), diag(nx), upper(nx), rhs(nx);
  Eigen::VectorXd previous = u;
  bool blew_up = false;

  for (int step = 1; step <= config.nt && !blew_up; ++step) {
    const double t_mid = (step - 0.5) * dt;

    // Crank-Nicolson with the conductivity extrapolated to the half level
    // from known states only: c(1.5 u^n - 0.5 u^{n-1}).
    cond = (1.5 * u - 0.5 * previous).array().square() + 1.0;

    // Tridiagonal operator L ~ (c u_x)_x with vertex-centered volumes; the
    // boundary half-cells contribute the factor 2 on the boundary rows.
    for (int i = 1; i + 1 < nx; ++i) {
      const double cm = 0.5 * (cond(i - 1) + cond(i));
      const double cp = 0.5 * (cond(i) + cond(i + 1));
      lo_op(i) = cm / (dx * dx);
      up_op(i) = cp / (dx * dx);
      di_op(i) = -(cm + cp) / (dx * dx);
    }
    {
      const double cp = 0.5 * (cond(0) + cond(1));
      di_op(0) = -2.0 * cp / (dx * dx);
      up_op(0) = 2.0 * cp / (dx * dx);
    }
    {
      const double cm = 0.5 * (cond(nx - 2) + cond(nx - 1));
      lo_op(nx - 1) = 2.0 * cm / (dx * dx);
      di_op(nx - 1) = -2.0 * cm / (dx * dx);
      if (bc == HeatBc::Robin) di_op(nx - 1) -= (2.0 / dx) * cond(nx - 1);
    }

    // (I - dt/2 L) u^{n+1} = (I + dt/2 L) u^n + dt s(t_mid)
    const double half = 0.5 * dt;
    for (int i = 0; i < nx; ++i) {
      lower(i) = i > 0 ? -half * lo_op(i) : 0.0;
      upper(i) = i + 1 < nx ? -half * up_op(i) : 0.0;
      diag(i) = 1.0 - half * di_op(i);
      rhs(i) = u(i) + half * di_op(i) * u(i);
      if (i > 0) rhs(i) += half * lo_op(i) * u(i - 1);
      if (i + 1 < nx) rhs(i) += half * up_op(i) * u(i + 1);
    }
    // Prescribed injected flux, -c(u) u_x(0,t) = q(t). The gradient form
    // u_x(0) = -q would feed the influx through c = u^2 + 1 and blow up in
    // finite time for sustained positive flux.
    rhs(0) += (2.0 * dt / dx) * flux(t_mid);

    previous = u;

    // Thomas algorithm.
    for (int i = 1; i < nx; ++i) {
      const double m = lower(i) / diag(i - 1);
      diag(i) -= m * upper(i - 1);
      rhs(i) -= m * rhs(i - 1);
    }
    u(nx - 1) = rhs(nx - 1) / diag(nx - 1);
    for (int i = nx - 2; i >= 0; --i) {
      u(i) = (rhs(i) - upper(i) * u(i + 1)) / diag(i);
    }

    if (!u.allFinite()) {
      blew_up = true;
      break;
    }
    sensor[static_cast<std::size_t>(step)] = sensor_value(u);
    if (field_history) field_history->row(step) = u.transpose();
  }

  Eigen::VectorXd out(times.size());
  if (blew_up) {
    out.setConstant(std::numeric_limits<double>::quiet_NaN());
    return out;
  }
  for (int i = 0; i < times.size(); ++i) {
    out(i) = sample_trajectory(sensor, 0.0, dt, times(i));
  }
  return out;
}

double mix_heat_misfits(double phi_insulated, double phi_robin) {
  const double t1 =
      std::isfinite(phi_insulated) ? std::log(0.8) - phi_insulated : kNegInf;
  const double t2 =
      std::isfinite(phi_robin) ? std::log(0.2) - phi_robin : kNegInf;
  const double lse = log_sum_exp(t1, t2);
  if (lse == kNegInf) return std::numeric_limits<double>::quiet_NaN();
  return std::max(-lse, 0.0);
}

HeatPotential::HeatPotential(Grid qgrid, ObservationSet obs,
                             HeatConfig config)
    : qgrid_(std::move(qgrid)), obs_(std::move(obs)), config_(config) {
  validate_grid(qgrid_);
  validate_observations(obs_);
}

double HeatPotential::misfit(const Eigen::VectorXd& field, HeatBc bc) const {
  const Eigen::VectorXd pred =
      heat_solve(qgrid_, field, bc, config_, obs_.coords);
  if (!pred.allFinite()) return std::numeric_limits<double>::infinity();
  const double s2 = obs_.noise_sd * obs_.noise_sd;
  return (pred - obs_.values).squaredNorm() / (2.0 * s2);
}

double HeatPotential::operator()(const Eigen::VectorXd& field) const {
  return mix_heat_misfits(misfit(field, HeatBc::Insulated),
                          misfit(field, HeatBc::Robin));
}

// --- Linear-Gaussian ----------------------------------------------------------

LinearGaussianPotential::LinearGaussianPotential(
    std::shared_ptr<const SpectralBasis> basis, Eigen::VectorXd data,
    double sigma)
    : basis_(std::move(basis)), data_(std::move(data)), sigma_(sigma) {
  if (!basis_) throw ParamError("linear-gaussian potential: null basis");
  if (!(sigma_ > 0.0)) {
    throw ParamError("linear-gaussian potential: sigma must be positive");
  }
  if (data_.size() > basis_->full_dim) {
    throw ParamError("linear-gaussian potential: more data than modes");
  }
}

double LinearGaussianPotential::operator()(
    const Eigen::VectorXd& field) const {
  const Eigen::VectorXd coeffs = project(*basis_, field);
  const double s2 = sigma_ * sigma_;
  return (coeffs.head(data_.size()) - data_).squaredNorm() / (2.0 * s2);
}

double LinearGaussianPotential::posterior_var(int k) const {
  const double alpha = basis_->eigenvalues(k);
  return 1.0 / (1.0 / alpha + 1.0 / (sigma_ * sigma_));
}

double LinearGaussianPotential::posterior_mean(int k) const {
  return posterior_var(k) * data_(k) / (sigma_ * sigma_);
}

// --- Data simulation and OMF ----------------------------------------------------

ObservationSet simulate_data(const ForwardFn& forward,
                             const Eigen::VectorXd& coords,
                             const Eigen::VectorXd& u_true, double noise_sd,
                             Rng& rng) {
  if (noise_sd < 0.0) throw ParamError("simulate_data: negative noise_sd");
  ObservationSet obs;
  obs.coords = coords;
  obs.noise_sd = noise_sd;
  obs.values = forward(u_true);
  if (obs.values.size() != coords.size()) {
    throw ShapeError("simulate_data: forward output length != coords");
  }
  for (int i = 0; i < obs.values.size(); ++i) {
    obs.values(i) += noise_sd * rng.normal();
  }
  return obs;
}

double omf(const Potential& potential, const SpectralBasis& basis,
           const Eigen::VectorXd& coeffs) {
  return potential(synthesize(basis, coeffs)) +
         0.5 * cameron_martin_norm_sq(basis, coeffs);
}

}  // namespace gmis
