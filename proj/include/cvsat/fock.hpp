#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

#include "cvsat/gaussian.hpp"

namespace cvsat {

/// Density operator on a truncated Fock space, one or two modes (three
/// transiently, while an ancilla is attached). The basis is |n1 n2 ...>
/// with the last index fastest; rho is stored normalized to unit trace and
/// trace_weight records the probability weight accumulated since
/// preparation (truncation loss, herald probabilities).
class FockDensity {
  public:
    FockDensity(int n_modes, int cutoff, Eigen::MatrixXcd rho,
                double trace_weight = 1.0);

    int n_modes() const { return n_modes_; }
    int cutoff() const { return cutoff_; }
    int mode_dim() const { return cutoff_ + 1; }
    int dim() const { return static_cast<int>(rho_.rows()); }
    const Eigen::MatrixXcd& rho() const { return rho_; }
    double trace_weight() const { return trace_weight_; }

    double purity() const;
    /// Smallest eigenvalue; positivity diagnostic for tests.
    double min_eigenvalue() const;
    /// Total population of the top Fock level of one mode.
    double top_level_population(int mode) const;
    /// Mean photon number summed over modes.
    double mean_photon_number() const;

  private:
    int n_modes_;
    int cutoff_;
    Eigen::MatrixXcd rho_;
    double trace_weight_;
};

/// Truncated two-mode squeezed vacuum, Schmidt coefficients
/// q_n = sqrt(1 - lambda^2) lambda^n with lambda = tanh r. Throws when the
/// retained trace falls below 0.999 unless allow_heavy_truncation is set.
FockDensity tmsv_fock(double r, int cutoff, bool allow_heavy_truncation = false);

/// Pure n-photon Fock state of a single mode.
FockDensity fock_state(int photons, int cutoff);

/// Two-mode product of Fock states |n1, n2>.
FockDensity fock_state_pair(int n1, int n2, int cutoff);

enum class Ladder { annihilate, create };

struct LadderResult {
  FockDensity state;
  /// Norm of the transformed operator, tr(L rho L+); zero means the ladder
  /// annihilated the state entirely.
  double weight;
};

/// Apply a bare ladder operator to one mode. Creation demands headroom:
/// top-level population <= 1e-6 unless allow_truncation overrides.
LadderResult apply_ladder(const FockDensity& state, int mode, Ladder which,
                          bool allow_truncation = false);

/// Beam splitter of transmissivity tau between the two modes of a two-mode
/// state; exactly unitary on every total-photon-number subspace that fits
/// the truncation.
FockDensity apply_two_mode_bs(const FockDensity& state, double tau);

/// Pure-loss channel on one mode in the operator-sum representation with
/// Kraus operators G_l = sqrt((1-tau)^l / l!) tau^(n/2) a^l.
FockDensity apply_loss_kraus(const FockDensity& state, int mode, double tau);

enum class NonGaussianKind { subtract, add, replace };
enum class NonGaussianSides { mode1, mode2, both };

struct NonGaussianOptions {
  double bs_tau = 0.9;
  int herald_photons = 1;     // subtract/replace herald count
  bool on_off_detector = false;  // subtract only: herald on >= 1 photon
  bool ideal_ladder = false;     // subtract only: bare a instead of the BS model
};

struct HeraldResult {
  FockDensity state;
  double success_probability;
};

/// Heralded non-Gaussian operation on a two-mode state: per side, attach
/// the prescribed ancilla (vacuum for subtraction, one photon for
/// addition/replacement), mix on a beam splitter, and project the ancilla
/// on the herald outcome (k photons / vacuum / one photon). The success
/// probability is the joint herald probability over the requested sides;
/// single-photon source efficiency is not folded in.
HeraldResult nongaussian_op(const FockDensity& state, NonGaussianKind kind,
                            NonGaussianSides sides,
                            const NonGaussianOptions& options = {});

/// Logarithmic negativity from the partial transpose on mode 2,
/// log2(1 + 2 * |sum of negative eigenvalues|).
double log_negativity_fock(const FockDensity& state);

/// Entropy of entanglement of a pure two-mode state (ebits); rejects mixed
/// inputs (purity below 1 - 1e-6) in favor of log_negativity_fock.
double entropy_of_entanglement_pure(const FockDensity& state);

/// Convex mixture of same-shape states with weights summing to one.
FockDensity ensemble_average(const std::vector<FockDensity>& states,
                             const std::vector<double>& weights);

/// First and symmetrized second quadrature moments of the truncated state,
/// in the same hbar = 2 convention as the Gaussian layer.
CovarianceState covariance_of_fock(const FockDensity& state);

// Ancilla plumbing, exposed for tests and oracles.
FockDensity attach_fock_ancilla(const FockDensity& state, int photons);
FockDensity swap_fock_modes(const FockDensity& state, int mode_a, int mode_b);
/// Beam splitter between an arbitrary mode pair of a multi-mode state.
FockDensity apply_bs_pair(const FockDensity& state, int mode_a, int mode_b,
                          double tau);

struct Herald {
  enum class Kind { exactly, at_least_one } kind = Kind::exactly;
  int photons = 0;
};

/// Project the last mode on a herald outcome; returns the conditioned
/// state and the outcome probability.
HeraldResult project_last_mode(const FockDensity& state, Herald herald);

}  // namespace cvsat
