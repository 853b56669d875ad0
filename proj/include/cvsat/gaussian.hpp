#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace cvsat {

/// Gaussian state of N bosonic modes in the hbar = 2 convention
/// (vacuum quadrature variance 1). Quadratures are ordered
/// (q1, p1, ..., qN, pN) so each mode occupies a contiguous 2x2 block.
///
/// Construction symmetrizes the covariance as (M + M^T)/2 after checking
/// the asymmetry is within rounding, and rejects matrices whose smallest
/// symplectic eigenvalue violates the uncertainty relation M + i*Omega >= 0.
class CovarianceState {
  public:
    CovarianceState(Eigen::VectorXd mean, Eigen::MatrixXd cov);

    int n_modes() const { return n_modes_; }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& cov() const { return cov_; }

    /// 2x2 covariance block coupling modes i and j (i == j gives the
    /// single-mode block).
    Eigen::Matrix2d block(int i, int j) const;

  private:
    int n_modes_;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
};

/// Symplectic form Omega = direct sum of [[0,1],[-1,0]] blocks.
Eigen::MatrixXd symplectic_form(int n_modes);

/// Standard form of a two-mode covariance matrix:
/// A = a*I, B = b*I, C = diag(c_plus, c_minus), with the same local
/// symplectic invariants (det A, det B, det C, det M) as the input.
struct TwoModeStandardForm {
  double a = 1.0;
  double b = 1.0;
  double c_plus = 0.0;
  double c_minus = 0.0;

  Eigen::MatrixXd reconstruct() const;
};

// State preparation.
CovarianceState vacuum_state(int n_modes = 1);
CovarianceState coherent_state(double mean_q, double mean_p);
CovarianceState thermal_state(double variance);                // variance >= 1
CovarianceState squeezed_state(double r_s);                    // r_s >= 0, q squeezed
CovarianceState tmsv_state(double r);                          // v = cosh(2r)

/// Tensor product: modes of b appended after modes of a.
CovarianceState tensor(const CovarianceState& a, const CovarianceState& b);

/// Beam splitter of transmissivity tau between modes i and j:
/// out_i = sqrt(tau) in_i + sqrt(1-tau) in_j,
/// out_j = -sqrt(1-tau) in_i + sqrt(tau) in_j.
CovarianceState apply_beam_splitter(const CovarianceState& state, int mode_i,
                                    int mode_j, double tau);

/// Lossy channel on one mode: mix with a thermal ancilla of variance
/// noise_variance through a beam splitter of transmissivity tau, then
/// trace the ancilla out. V' = tau*V + (1-tau)*noise_variance.
CovarianceState attenuate(const CovarianceState& state, int mode, double tau,
                          double noise_variance = 1.0);

/// Single-mode transfer of a TMSV through a fixed-attenuation channel
/// (mode 1 kept, mode 2 transmitted with transmissivity tau and noise
/// variance noise_variance).
CovarianceState tmsv_single_mode_transfer(double v, double tau,
                                          double noise_variance);

/// Two-mode transfer: each TMSV mode through its own channel.
CovarianceState tmsv_two_mode_transfer(double v, double tau1, double noise1,
                                       double tau2, double noise2);

/// Symplectic spectrum of a covariance matrix, ascending; one copy per
/// mode. Physical states satisfy nu_k >= 1.
std::vector<double> symplectic_eigenvalues(const Eigen::MatrixXd& cov);

/// Von Neumann entropy in bits: sum of g(nu_k) with
/// g(x) = ((x+1)/2) log2((x+1)/2) - ((x-1)/2) log2((x-1)/2).
double von_neumann_entropy(const CovarianceState& state);
double von_neumann_entropy(const Eigen::MatrixXd& cov);
double entropy_g(double x);

/// Logarithmic negativity of a two-mode Gaussian state (ebits):
/// max(0, -log2(nu_minus~)) from the partially transposed covariance.
double log_negativity_gaussian(const CovarianceState& state);
double log_negativity_gaussian(const Eigen::MatrixXd& cov);

enum class Measurement { homodyne_q, homodyne_p, heterodyne };

/// Conditional state of the unmeasured modes after a Gaussian measurement
/// of one mode. The covariance update is outcome independent; the mean is
/// returned for outcome 0.
CovarianceState condition_on_measurement(const CovarianceState& state,
                                         int mode, Measurement kind);

/// Linear response of the conditional mean to the measurement outcome:
/// mean' = mean_rest + G * (outcome - mean_measured), restricted to the
/// outcome components the measurement actually produces (1 column for
/// homodyne, 2 for heterodyne).
Eigen::MatrixXd measurement_mean_gain(const CovarianceState& state, int mode,
                                      Measurement kind);

/// Gaussian Wigner density at a phase-space point (length 2N).
double wigner_density(const CovarianceState& state,
                      const Eigen::VectorXd& point);

/// Restriction to a subset of modes (indices 0-based, in ascending output
/// order regardless of input order).
CovarianceState partial_trace(const CovarianceState& state,
                              const std::vector<int>& keep);

TwoModeStandardForm standard_form(const Eigen::MatrixXd& cov);
TwoModeStandardForm standard_form(const CovarianceState& state);

/// Row-major JSON-array serialization used by the CLI layer.
std::string cov_to_json(const CovarianceState& state);

}  // namespace cvsat
