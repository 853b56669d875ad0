#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cvsat/atmosphere.hpp"
#include "cvsat/fock.hpp"
#include "cvsat/gaussian.hpp"
#include "cvsat/parallel.hpp"

namespace cvsat {

enum class StateType { coherent, squeezed };
enum class Detection { homodyne, heterodyne };
enum class Reconciliation { direct, reverse };

/// One of the eight Gaussian protocol variants in its entanglement-based
/// representation. Alice's detection is fixed by the prepared state:
/// squeezed states pair with homodyne, coherent states with heterodyne.
struct ProtocolConfig {
  StateType state_type = StateType::coherent;
  Detection detection = Detection::homodyne;  // Bob's side
  Reconciliation reconciliation = Reconciliation::reverse;
  double efficiency = 1.0;

  void validate() const;
  Detection alice_detection() const {
    return state_type == StateType::squeezed ? Detection::homodyne
                                             : Detection::heterodyne;
  }
};

/// Modulation variances of the equivalent prepare-and-measure protocols,
/// for reporting: squeezed PM modulates with v - 1/v, coherent PM with v - 1.
double modulation_variance_squeezed(double v);
double modulation_variance_coherent(double v);

struct ChannelPoint {
  double tau = 1.0;
  double omega = 1.0;  // entangling-cloner TMSV variance

  void validate() const;
};

struct RateResult {
  double key_rate = 0.0;            // floored, weighted by selection probability
  double key_rate_unfloored = 0.0;  // signed rate before flooring
  double mutual_info = 0.0;         // I_AB (mean over selected bins for fading)
  double holevo = 0.0;              // I_E
  double selection_probability = 1.0;
  bool lower_bound = false;
  std::string scenario = "fixed";
  std::optional<std::vector<std::pair<double, double>>> per_eta_curve;

  std::string to_json() const;
};

/// Asymptotic key rate of a Gaussian protocol against optimal collective
/// (entangling-cloner) attacks, from the shared two-mode covariance matrix:
/// K = max(0, xi * I_AB - I_E) with I_E the Holevo bound obtained by
/// purification (S(E) = S(AB), S(E|ref) = S(other|ref)).
RateResult keyrate_collective(const CovarianceState& state,
                              const ProtocolConfig& protocol);

/// Key rate of a TMSV of quadrature variance v through a fixed-attenuation
/// channel on the transmitted mode.
RateResult keyrate_fixed(double v, const ChannelPoint& channel,
                         const ProtocolConfig& protocol);

enum class FadingScenario { per_eta, ensemble, postselected };

struct FadingOptions {
  int bins = 200;
  /// Keep negative per-bin rates in the integral instead of flooring them;
  /// reproduction studies only.
  bool signed_integration = false;
  /// Extra fixed transmissivity multiplied into every bin (reflect-scheme
  /// composition tau = eta^2 * factor).
  double fixed_tau_factor = 1.0;
  parallel::Policy policy = parallel::default_policy();
};

/// Key rate over a fading channel with tau(eta) = eta^2.
///  - per_eta: the transmission coefficient is measured; integrate
///    p(eta) K(eta) with hopeless bins contributing zero.
///  - ensemble: the coefficient is unknown; rate of the ensemble-averaged
///    covariance matrix (Gaussian component only, flagged lower bound).
///  - postselected: per_eta restricted to eta >= eta_threshold.
RateResult keyrate_fading(double v, const FadingDistribution& dist,
                          double omega, const ProtocolConfig& protocol,
                          FadingScenario scenario, double eta_threshold = 0.0,
                          const FadingOptions& options = {});

/// Post-selection threshold maximizing the signed selected rate
/// integral((eta >= th)) p(eta) K(eta) d eta; ties resolve toward smaller
/// thresholds, so a nonnegative K(eta) yields zero threshold.
std::pair<double, RateResult> optimize_threshold(
    double v, const FadingDistribution& dist, double omega,
    const ProtocolConfig& protocol, const FadingOptions& options = {});

enum class EntanglementMeasure { log_negativity, entropy_pure };

/// Entanglement delivered through one fading channel (single-mode
/// transfer of a TMSV with quadrature variance v).
double entanglement_fading(double v, const FadingDistribution& dist,
                           double noise_variance, EntanglementMeasure measure,
                           FadingScenario scenario,
                           const FadingOptions& options = {});

/// Two-mode transfer through independent fading downlinks.
double entanglement_fading_dual(double v, const FadingDistribution& dist1,
                                const FadingDistribution& dist2,
                                double noise_variance,
                                EntanglementMeasure measure,
                                FadingScenario scenario,
                                const FadingOptions& options = {});

/// Heralded non-Gaussian source: a TMSV optionally transformed by a
/// photon-level operation before transmission.
struct NonGaussSource {
  double r = 0.3;
  int cutoff = 12;
  std::optional<NonGaussianKind> op;
  NonGaussianSides sides = NonGaussianSides::both;
  NonGaussianOptions op_options;

  HeraldResult prepare() const;
};

/// Entanglement of a heralded non-Gaussian source through one fading
/// channel (Kraus loss on the transmitted mode); pure-loss only.
double entanglement_fading_fock(const NonGaussSource& source,
                                const FadingDistribution& dist,
                                EntanglementMeasure measure,
                                FadingScenario scenario,
                                const FadingOptions& options = {});

/// Lower-bound key rate of the non-Gaussian pipeline:
/// K = P_c * integral p(eta) K(eta) d eta with K(eta) computed from the
/// covariance matrix of the lossy non-Gaussian state. Requires omega = 1.
RateResult nongauss_keyrate(const NonGaussSource& source,
                            const FadingDistribution& dist, double omega,
                            const ProtocolConfig& protocol,
                            const FadingOptions& options = {});

/// Relay entanglement swapping: two TMSV sources, uplinks on the inner
/// modes, balanced beam splitter, conjugate homodyne Bell measurement and
/// ideal feed-forward displacement.
struct SwapConfig {
  double r_a = 0.5;
  double r_b = 0.5;
  double tau_a = 1.0;
  double tau_b = 1.0;
  double noise_variance = 1.0;

  void validate() const;
};

/// Linear response of the kept modes (Alice q1 p1, Bob q4 p4) to the Bell
/// outcomes (q~, p~): conditional mean = coefficients * outcomes. The
/// optimal feed-forward displaces by minus this matrix times the outcomes.
struct SwapGains {
  Eigen::Matrix<double, 4, 2> coefficients = Eigen::Matrix<double, 4, 2>::Zero();
};

/// Output state on the kept modes under optimal feed-forward; equals the
/// outcome-independent conditional covariance matrix.
CovarianceState entanglement_swap(const SwapConfig& config);

SwapGains optimize_swap_gain(const SwapConfig& config);

/// Ensemble output state when each party displaces by gains * outcomes
/// instead of the optimal cancellation; residual outcome variance is added
/// to the covariance.
CovarianceState entanglement_swap_with_gains(const SwapConfig& config,
                                             const SwapGains& gains);

}  // namespace cvsat
