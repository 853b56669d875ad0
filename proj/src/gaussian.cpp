#include "cvsat/gaussian.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cvsat/errors.hpp"

namespace cvsat {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kPhysicalityTol = 1e-9;
constexpr double kLog2e = 1.4426950408889634074;

void check_mode_index(const CovarianceState& state, int mode) {
  if (mode < 0 || mode >= state.n_modes()) {
    throw std::out_of_range("mode index " + std::to_string(mode) +
                            " out of range for " +
                            std::to_string(state.n_modes()) + " modes");
  }
}

}  // namespace

CovarianceState::CovarianceState(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != cov_.cols()) {
    throw std::invalid_argument("covariance matrix must be square");
  }
  if (cov_.rows() % 2 != 0 || cov_.rows() == 0) {
    throw std::invalid_argument("covariance dimension must be a positive even number");
  }
  n_modes_ = static_cast<int>(cov_.rows()) / 2;
  if (mean_.size() != cov_.rows()) {
    throw std::invalid_argument("mean length does not match covariance dimension");
  }

  double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
  double asym = (cov_ - cov_.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol * scale) {
    throw std::invalid_argument("covariance matrix is not symmetric");
  }
  cov_ = ((cov_ + cov_.transpose()) / 2.0).eval();

  auto nus = symplectic_eigenvalues(cov_);
  if (nus.front() < 1.0 - kPhysicalityTol) {
    throw PhysicsError("unphysical covariance matrix: smallest symplectic eigenvalue " +
                       std::to_string(nus.front()) + " < 1");
  }
}

Eigen::Matrix2d CovarianceState::block(int i, int j) const {
  check_mode_index(*this, i);
  check_mode_index(*this, j);
  return cov_.block<2, 2>(2 * i, 2 * j);
}

Eigen::MatrixXd symplectic_form(int n_modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (int k = 0; k < n_modes; ++k) {
    omega(2 * k, 2 * k + 1) = 1.0;
    omega(2 * k + 1, 2 * k) = -1.0;
  }
  return omega;
}

Eigen::MatrixXd TwoModeStandardForm::reconstruct() const {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
  cov(0, 0) = cov(1, 1) = a;
  cov(2, 2) = cov(3, 3) = b;
  cov(0, 2) = cov(2, 0) = c_plus;
  cov(1, 3) = cov(3, 1) = c_minus;
  return cov;
}

CovarianceState vacuum_state(int n_modes) {
  if (n_modes < 1) {
    throw std::invalid_argument("n_modes must be positive");
  }
  return CovarianceState(Eigen::VectorXd::Zero(2 * n_modes),
                         Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes));
}

CovarianceState coherent_state(double mean_q, double mean_p) {
  if (!std::isfinite(mean_q) || !std::isfinite(mean_p)) {
    throw std::invalid_argument("coherent mean must be finite");
  }
  Eigen::VectorXd mean(2);
  mean << mean_q, mean_p;
  return CovarianceState(mean, Eigen::MatrixXd::Identity(2, 2));
}

CovarianceState thermal_state(double variance) {
  if (variance < 1.0) {
    throw std::domain_error("thermal variance must be >= 1 (got " +
                            std::to_string(variance) + ")");
  }
  return CovarianceState(Eigen::VectorXd::Zero(2),
                         variance * Eigen::MatrixXd::Identity(2, 2));
}

CovarianceState squeezed_state(double r_s) {
  if (r_s < 0.0) {
    throw std::domain_error("single-mode squeezing parameter must be >= 0");
  }
  Eigen::MatrixXd cov(2, 2);
  cov << std::exp(-2.0 * r_s), 0.0, 0.0, std::exp(2.0 * r_s);
  return CovarianceState(Eigen::VectorXd::Zero(2), cov);
}

CovarianceState tmsv_state(double r) {
  if (!std::isfinite(r)) {
    throw std::invalid_argument("two-mode squeezing parameter must be finite");
  }
  double v = std::cosh(2.0 * r);
  double c = std::sinh(2.0 * r);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
  cov(0, 0) = cov(1, 1) = cov(2, 2) = cov(3, 3) = v;
  cov(0, 2) = cov(2, 0) = c;
  cov(1, 3) = cov(3, 1) = -c;
  return CovarianceState(Eigen::VectorXd::Zero(4), cov);
}

CovarianceState tensor(const CovarianceState& a, const CovarianceState& b) {
  int na = 2 * a.n_modes();
  int nb = 2 * b.n_modes();
  Eigen::VectorXd mean(na + nb);
  mean << a.mean(), b.mean();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(na + nb, na + nb);
  cov.topLeftCorner(na, na) = a.cov();
  cov.bottomRightCorner(nb, nb) = b.cov();
  return CovarianceState(std::move(mean), std::move(cov));
}

CovarianceState apply_beam_splitter(const CovarianceState& state, int mode_i,
                                    int mode_j, double tau) {
  check_mode_index(state, mode_i);
  check_mode_index(state, mode_j);
  if (mode_i == mode_j) {
    throw std::invalid_argument("beam splitter needs two distinct modes");
  }
  if (tau < 0.0 || tau > 1.0) {
    throw std::domain_error("beam-splitter transmissivity must be in [0, 1]");
  }
  double t = std::sqrt(tau);
  double rfl = std::sqrt(1.0 - tau);
  int dim = 2 * state.n_modes();
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(dim, dim);
  for (int k = 0; k < 2; ++k) {
    int a = 2 * mode_i + k;
    int b = 2 * mode_j + k;
    s(a, a) = t;
    s(a, b) = rfl;
    s(b, a) = -rfl;
    s(b, b) = t;
  }
  return CovarianceState(s * state.mean(), s * state.cov() * s.transpose());
}

CovarianceState attenuate(const CovarianceState& state, int mode, double tau,
                          double noise_variance) {
  check_mode_index(state, mode);
  if (tau < 0.0 || tau > 1.0) {
    throw std::domain_error("channel transmissivity must be in [0, 1]");
  }
  if (noise_variance < 1.0) {
    throw std::domain_error("channel noise variance must be >= 1");
  }
  CovarianceState joint = tensor(state, thermal_state(noise_variance));
  int ancilla = state.n_modes();
  CovarianceState mixed = apply_beam_splitter(joint, mode, ancilla, tau);
  std::vector<int> keep(state.n_modes());
  for (int k = 0; k < state.n_modes(); ++k) {
    keep[k] = k;
  }
  return partial_trace(mixed, keep);
}

CovarianceState tmsv_single_mode_transfer(double v, double tau,
                                          double noise_variance) {
  if (v < 1.0) {
    throw std::domain_error("TMSV quadrature variance must be >= 1");
  }
  double r = 0.5 * std::acosh(v);
  return attenuate(tmsv_state(r), 1, tau, noise_variance);
}

CovarianceState tmsv_two_mode_transfer(double v, double tau1, double noise1,
                                       double tau2, double noise2) {
  if (v < 1.0) {
    throw std::domain_error("TMSV quadrature variance must be >= 1");
  }
  double r = 0.5 * std::acosh(v);
  return attenuate(attenuate(tmsv_state(r), 0, tau1, noise1), 1, tau2, noise2);
}

std::vector<double> symplectic_eigenvalues(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols() || cov.rows() % 2 != 0) {
    throw std::invalid_argument("covariance matrix must be square with even dimension");
  }
  double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw std::invalid_argument("covariance matrix must be symmetric");
  }
  int n = static_cast<int>(cov.rows()) / 2;
  Eigen::MatrixXd omega = symplectic_form(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> m_solver(cov);
  std::vector<double> nus(n);
  if (m_solver.eigenvalues().minCoeff() > 0.0) {
    // Spectrum of i*Omega*M through the similar Hermitian matrix
    // M^(1/2) (i Omega) M^(1/2); self-adjoint solvers handle the +-nu_k
    // degeneracies that defeat unsymmetric QR on i*Omega*M itself.
    Eigen::MatrixXd sqrt_m = m_solver.operatorSqrt();
    Eigen::MatrixXcd herm =
        std::complex<double>(0.0, 1.0) * sqrt_m * omega * sqrt_m;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
        herm, Eigen::EigenvaluesOnly);
    for (int k = 0; k < n; ++k) {
      nus[k] = solver.eigenvalues()(n + k);  // positive half, ascending
    }
    return nus;
  }
  // Indefinite input (already unphysical): fall back to the moduli of the
  // Omega*M spectrum.
  Eigen::EigenSolver<Eigen::MatrixXd> solver(omega * cov, false);
  if (solver.info() != Eigen::Success) {
    std::fill(nus.begin(), nus.end(), 0.0);
    return nus;
  }
  std::vector<double> moduli(2 * n);
  for (int k = 0; k < 2 * n; ++k) {
    moduli[k] = std::abs(solver.eigenvalues()(k));
  }
  std::sort(moduli.begin(), moduli.end());
  for (int k = 0; k < n; ++k) {
    nus[k] = 0.5 * (moduli[2 * k] + moduli[2 * k + 1]);
  }
  return nus;
}

double entropy_g(double x) {
  if (x < 1.0 - kPhysicalityTol) {
    throw PhysicsError("entropy argument below 1: unphysical symplectic eigenvalue");
  }
  double eps = x - 1.0;
  if (eps <= 0.0) {
    return 0.0;
  }
  if (eps < 1e-8) {
    // Leading terms of g(1 + eps); the direct form cancels catastrophically.
    double u = eps / 2.0;
    return u * kLog2e + u * u * kLog2e / 2.0 - u * std::log2(u);
  }
  double hi = (x + 1.0) / 2.0;
  double lo = (x - 1.0) / 2.0;
  return hi * std::log2(hi) - lo * std::log2(lo);
}

double von_neumann_entropy(const Eigen::MatrixXd& cov) {
  double total = 0.0;
  for (double nu : symplectic_eigenvalues(cov)) {
    total += entropy_g(nu);
  }
  return total;
}

double von_neumann_entropy(const CovarianceState& state) {
  return von_neumann_entropy(state.cov());
}

double log_negativity_gaussian(const Eigen::MatrixXd& cov) {
  if (cov.rows() != 4) {
    throw std::invalid_argument("logarithmic negativity needs a two-mode covariance matrix");
  }
  double det_a = cov.block<2, 2>(0, 0).determinant();
  double det_b = cov.block<2, 2>(2, 2).determinant();
  double det_c = cov.block<2, 2>(0, 2).determinant();
  double det_m = cov.determinant();
  double delta = det_a + det_b - 2.0 * det_c;
  double disc = std::max(0.0, delta * delta - 4.0 * det_m);
  double nu_sq = (delta - std::sqrt(disc)) / 2.0;
  if (nu_sq <= 0.0) {
    throw std::domain_error("partial transpose has no real symplectic spectrum");
  }
  return std::max(0.0, -0.5 * std::log2(nu_sq));
}

double log_negativity_gaussian(const CovarianceState& state) {
  if (state.n_modes() != 2) {
    throw std::invalid_argument("logarithmic negativity needs a two-mode state");
  }
  return log_negativity_gaussian(state.cov());
}

namespace {

struct MeasurementSplit {
  Eigen::MatrixXd a;       // remaining block
  Eigen::Matrix2d b;       // measured block
  Eigen::MatrixXd c;       // cross block (rest x measured)
  Eigen::VectorXd mean_a;
  Eigen::Vector2d mean_b;
  std::vector<int> keep;
};

MeasurementSplit split_for_measurement(const CovarianceState& state, int mode) {
  check_mode_index(state, mode);
  if (state.n_modes() < 2) {
    throw std::invalid_argument("measurement conditioning needs at least two modes");
  }
  MeasurementSplit out;
  for (int k = 0; k < state.n_modes(); ++k) {
    if (k != mode) {
      out.keep.push_back(k);
    }
  }
  int rest = 2 * (state.n_modes() - 1);
  out.a.resize(rest, rest);
  out.c.resize(rest, 2);
  out.mean_a.resize(rest);
  for (int i = 0; i < static_cast<int>(out.keep.size()); ++i) {
    out.mean_a.segment<2>(2 * i) = state.mean().segment<2>(2 * out.keep[i]);
    out.c.block<2, 2>(2 * i, 0) = state.block(out.keep[i], mode);
    for (int j = 0; j < static_cast<int>(out.keep.size()); ++j) {
      out.a.block<2, 2>(2 * i, 2 * j) = state.block(out.keep[i], out.keep[j]);
    }
  }
  out.b = state.block(mode, mode);
  out.mean_b = state.mean().segment<2>(2 * mode);
  return out;
}

// Inverse kernel of the Gaussian measurement update: (Pi B Pi)^+ for
// homodyne, (B + I)^-1 for heterodyne.
Eigen::Matrix2d measurement_kernel(const Eigen::Matrix2d& b, Measurement kind) {
  Eigen::Matrix2d kernel = Eigen::Matrix2d::Zero();
  switch (kind) {
    case Measurement::homodyne_q:
      if (b(0, 0) > 0.0) {
        kernel(0, 0) = 1.0 / b(0, 0);
      }
      break;
    case Measurement::homodyne_p:
      if (b(1, 1) > 0.0) {
        kernel(1, 1) = 1.0 / b(1, 1);
      }
      break;
    case Measurement::heterodyne:
      kernel = (b + Eigen::Matrix2d::Identity()).inverse();
      break;
  }
  return kernel;
}

}  // namespace

CovarianceState condition_on_measurement(const CovarianceState& state,
                                         int mode, Measurement kind) {
  MeasurementSplit s = split_for_measurement(state, mode);
  Eigen::Matrix2d kernel = measurement_kernel(s.b, kind);
  Eigen::MatrixXd cov = s.a - s.c * kernel * s.c.transpose();
  Eigen::VectorXd mean = s.mean_a - s.c * kernel * s.mean_b;
  return CovarianceState(std::move(mean), std::move(cov));
}

Eigen::MatrixXd measurement_mean_gain(const CovarianceState& state, int mode,
                                      Measurement kind) {
  MeasurementSplit s = split_for_measurement(state, mode);
  Eigen::MatrixXd full = s.c * measurement_kernel(s.b, kind);
  switch (kind) {
    case Measurement::homodyne_q:
      return full.col(0);
    case Measurement::homodyne_p:
      return full.col(1);
    case Measurement::heterodyne:
      return full;
  }
  return full;
}

double wigner_density(const CovarianceState& state,
                      const Eigen::VectorXd& point) {
  if (point.size() != 2 * state.n_modes()) {
    throw std::invalid_argument("phase-space point has wrong dimension");
  }
  double det = state.cov().determinant();
  if (det <= 0.0) {
    throw std::domain_error("singular covariance matrix in Wigner evaluation");
  }
  Eigen::VectorXd delta = point - state.mean();
  double quad = delta.dot(state.cov().ldlt().solve(delta));
  double norm = std::pow(2.0 * M_PI, state.n_modes()) * std::sqrt(det);
  return std::exp(-0.5 * quad) / norm;
}

CovarianceState partial_trace(const CovarianceState& state,
                              const std::vector<int>& keep) {
  if (keep.empty()) {
    throw std::invalid_argument("partial trace must keep at least one mode");
  }
  std::vector<int> sorted = keep;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("duplicate mode index in partial trace");
  }
  for (int m : sorted) {
    check_mode_index(state, m);
  }
  int n = static_cast<int>(sorted.size());
  Eigen::VectorXd mean(2 * n);
  Eigen::MatrixXd cov(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    mean.segment<2>(2 * i) = state.mean().segment<2>(2 * sorted[i]);
    for (int j = 0; j < n; ++j) {
      cov.block<2, 2>(2 * i, 2 * j) = state.block(sorted[i], sorted[j]);
    }
  }
  return CovarianceState(std::move(mean), std::move(cov));
}

TwoModeStandardForm standard_form(const Eigen::MatrixXd& cov) {
  if (cov.rows() != 4 || cov.cols() != 4) {
    throw std::invalid_argument("standard form needs a two-mode covariance matrix");
  }
  double det_a = cov.block<2, 2>(0, 0).determinant();
  double det_b = cov.block<2, 2>(2, 2).determinant();
  double det_c = cov.block<2, 2>(0, 2).determinant();
  double det_m = cov.determinant();

  TwoModeStandardForm f;
  f.a = std::sqrt(det_a);
  f.b = std::sqrt(det_b);
  double ab = f.a * f.b;
  if (ab <= 0.0) {
    throw std::domain_error("degenerate local blocks in standard-form reduction");
  }
  // c+^2 and c-^2 are the roots of t^2 - s*t + det_c^2 with
  // s = (a^2 b^2 + det_c^2 - det M)/(a b); det M = (ab - c+^2)(ab - c-^2).
  double s = (det_a * det_b + det_c * det_c - det_m) / ab;
  double disc = std::max(0.0, s * s - 4.0 * det_c * det_c);
  double t_hi = std::max(0.0, (s + std::sqrt(disc)) / 2.0);
  double t_lo = std::max(0.0, (s - std::sqrt(disc)) / 2.0);
  f.c_plus = std::sqrt(t_hi);
  f.c_minus = (det_c < 0.0 ? -1.0 : 1.0) * std::sqrt(t_lo);
  return f;
}

TwoModeStandardForm standard_form(const CovarianceState& state) {
  if (state.n_modes() != 2) {
    throw std::invalid_argument("standard form needs a two-mode state");
  }
  return standard_form(state.cov());
}

std::string cov_to_json(const CovarianceState& state) {
  std::ostringstream out;
  out.precision(17);
  out << "{\"n_modes\":" << state.n_modes() << ",\"mean\":[";
  for (int i = 0; i < state.mean().size(); ++i) {
    out << (i ? "," : "") << state.mean()(i);
  }
  out << "],\"cov\":[";
  for (int i = 0; i < state.cov().rows(); ++i) {
    for (int j = 0; j < state.cov().cols(); ++j) {
      out << ((i || j) ? "," : "") << state.cov()(i, j);
    }
  }
  out << "]}";
  return out.str();
}

}  // namespace cvsat
