#include "cvsat/qkd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cvsat {

namespace {

// Linear outcome model of a detection: outcome = T * quadratures + noise.
struct OutcomeModel {
  Eigen::MatrixXd transform;  // rows = outcome components
  Eigen::MatrixXd noise;
};

OutcomeModel outcome_model(Detection kind) {
  OutcomeModel m;
  if (kind == Detection::homodyne) {
    m.transform = Eigen::MatrixXd::Zero(1, 2);
    m.transform(0, 0) = 1.0;  // q quadrature by convention
    m.noise = Eigen::MatrixXd::Zero(1, 1);
  } else {
    double s = 1.0 / std::sqrt(2.0);
    m.transform = s * Eigen::MatrixXd::Identity(2, 2);
    m.noise = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  }
  return m;
}

Measurement conditioning_of(Detection kind) {
  return kind == Detection::homodyne ? Measurement::homodyne_q
                                     : Measurement::heterodyne;
}

double mutual_information(const CovarianceState& state,
                          Detection alice, Detection bob) {
  OutcomeModel a = outcome_model(alice);
  OutcomeModel b = outcome_model(bob);
  int na = static_cast<int>(a.transform.rows());
  int nb = static_cast<int>(b.transform.rows());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(na + nb, 4);
  t.block(0, 0, na, 2) = a.transform;
  t.block(na, 2, nb, 2) = b.transform;
  Eigen::MatrixXd sigma = t * state.cov() * t.transpose();
  sigma.block(0, 0, na, na) += a.noise;
  sigma.block(na, na, nb, nb) += b.noise;
  double det_a = sigma.block(0, 0, na, na).determinant();
  double det_b = sigma.block(na, na, nb, nb).determinant();
  double det_joint = sigma.determinant();
  if (!(det_joint > 0.0) || !(det_a > 0.0) || !(det_b > 0.0)) {
    throw std::domain_error("degenerate outcome statistics in mutual information");
  }
  return 0.5 * std::log2(det_a * det_b / det_joint);
}

double holevo_bound(const CovarianceState& state,
                    const ProtocolConfig& protocol) {
  // Purification: Eve holds the environment, so S(E) = S(AB) and after the
  // reference party's measurement S(E|ref) = S(other|ref).
  double s_ab = von_neumann_entropy(state);
  int ref_mode;
  Detection ref_detection;
  if (protocol.reconciliation == Reconciliation::reverse) {
    ref_mode = 1;
    ref_detection = protocol.detection;
  } else {
    ref_mode = 0;
    ref_detection = protocol.alice_detection();
  }
  CovarianceState conditioned = condition_on_measurement(
      state, ref_mode, conditioning_of(ref_detection));
  double s_cond = von_neumann_entropy(conditioned);
  return s_ab - s_cond;
}

struct BinRates {
  double mutual_info = 0.0;
  double holevo = 0.0;
  double unfloored = 0.0;
};

}  // namespace

void ProtocolConfig::validate() const {
  if (!(efficiency > 0.0) || efficiency > 1.0) {
    throw std::domain_error("reconciliation efficiency must lie in (0, 1]");
  }
}

double modulation_variance_squeezed(double v) {
  if (v < 1.0) {
    throw std::domain_error("quadrature variance must be >= 1");
  }
  return v - 1.0 / v;
}

double modulation_variance_coherent(double v) {
  if (v < 1.0) {
    throw std::domain_error("quadrature variance must be >= 1");
  }
  return v - 1.0;
}

void ChannelPoint::validate() const {
  if (tau < 0.0 || tau > 1.0) {
    throw std::domain_error("channel transmissivity must be in [0, 1]");
  }
  if (omega < 1.0) {
    throw std::domain_error("channel noise variance must be >= 1");
  }
}

void SwapConfig::validate() const {
  if (r_a < 0.0 || r_b < 0.0) {
    throw std::domain_error("swap source squeezing must be >= 0");
  }
  if (tau_a < 0.0 || tau_a > 1.0 || tau_b < 0.0 || tau_b > 1.0) {
    throw std::domain_error("swap uplink transmissivities must be in [0, 1]");
  }
  if (noise_variance < 1.0) {
    throw std::domain_error("swap channel noise variance must be >= 1");
  }
}

std::string RateResult::to_json() const {
  std::ostringstream out;
  out.precision(12);
  out << "{\"key_rate\":" << key_rate
      << ",\"key_rate_unfloored\":" << key_rate_unfloored
      << ",\"mutual_info\":" << mutual_info
      << ",\"holevo\":" << holevo
      << ",\"selection_probability\":" << selection_probability
      << ",\"lower_bound\":" << (lower_bound ? "true" : "false")
      << ",\"scenario\":\"" << scenario << "\"";
  if (per_eta_curve) {
    out << ",\"per_eta\":[";
    for (std::size_t i = 0; i < per_eta_curve->size(); ++i) {
      const auto& [eta, rate] = (*per_eta_curve)[i];
      out << (i ? "," : "") << "[" << eta << "," << rate << "]";
    }
    out << "]";
  }
  out << "}";
  return out.str();
}

RateResult keyrate_collective(const CovarianceState& state,
                              const ProtocolConfig& protocol) {
  protocol.validate();
  if (state.n_modes() != 2) {
    throw std::invalid_argument("key rate needs the two-mode Alice-Bob state");
  }
  RateResult out;
  out.mutual_info = mutual_information(state, protocol.alice_detection(),
                                       protocol.detection);
  out.holevo = holevo_bound(state, protocol);
  out.key_rate_unfloored = protocol.efficiency * out.mutual_info - out.holevo;
  out.key_rate = std::max(0.0, out.key_rate_unfloored);
  return out;
}

RateResult keyrate_fixed(double v, const ChannelPoint& channel,
                         const ProtocolConfig& protocol) {
  channel.validate();
  RateResult out = keyrate_collective(
      tmsv_single_mode_transfer(v, channel.tau, channel.omega), protocol);
  out.scenario = "fixed";
  return out;
}

namespace {

std::vector<BinRates> per_bin_rates(double v,
                                    const FadingDistribution::Grid& grid,
                                    double omega,
                                    const ProtocolConfig& protocol,
                                    const FadingOptions& options) {
  return parallel::map_index<BinRates>(grid.eta.size(), [&](std::size_t i) {
    double tau = grid.eta[i] * grid.eta[i] * options.fixed_tau_factor;
    RateResult r = keyrate_collective(
        tmsv_single_mode_transfer(v, tau, omega), protocol);
    return BinRates{r.mutual_info, r.holevo, r.key_rate_unfloored};
  }, options.policy);
}

RateResult reduce_selected(const FadingDistribution::Grid& grid,
                           const std::vector<BinRates>& rates,
                           double eta_threshold, bool signed_integration) {
  RateResult out;
  double weight = 0.0;
  double key = 0.0;
  double key_signed = 0.0;
  double info = 0.0;
  double holevo = 0.0;
  std::vector<std::pair<double, double>> curve;
  curve.reserve(grid.eta.size());
  for (std::size_t i = 0; i < grid.eta.size(); ++i) {
    curve.emplace_back(grid.eta[i], rates[i].unfloored);
    if (grid.eta[i] < eta_threshold) {
      continue;
    }
    double w = grid.pdf[i] * grid.width[i];
    weight += w;
    key += w * std::max(0.0, rates[i].unfloored);
    key_signed += w * rates[i].unfloored;
    info += w * rates[i].mutual_info;
    holevo += w * rates[i].holevo;
  }
  out.selection_probability = std::min(1.0, weight);
  out.key_rate = signed_integration ? std::max(0.0, key_signed) : key;
  out.key_rate_unfloored = key_signed;
  out.mutual_info = weight > 0.0 ? info / weight : 0.0;
  out.holevo = weight > 0.0 ? holevo / weight : 0.0;
  out.per_eta_curve = std::move(curve);
  return out;
}

}  // namespace

RateResult keyrate_fading(double v, const FadingDistribution& dist,
                          double omega, const ProtocolConfig& protocol,
                          FadingScenario scenario, double eta_threshold,
                          const FadingOptions& options) {
  protocol.validate();
  if (omega < 1.0) {
    throw std::domain_error("channel noise variance must be >= 1");
  }
  double norm = dist.normalization();
  if (std::abs(norm - 1.0) > 1e-6) {
    throw std::invalid_argument("fading distribution is not normalized");
  }

  if (scenario == FadingScenario::ensemble) {
    double root_factor = std::sqrt(options.fixed_tau_factor);
    double mean_eta = root_factor * dist.mean_eta();
    double mean_tau = options.fixed_tau_factor * dist.mean_eta_sq();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
    double c = mean_eta * std::sqrt(v * v - 1.0);
    double b = mean_tau * v + (1.0 - mean_tau) * omega;
    cov(0, 0) = cov(1, 1) = v;
    cov(2, 2) = cov(3, 3) = b;
    cov(0, 2) = cov(2, 0) = c;
    cov(1, 3) = cov(3, 1) = -c;
    RateResult out = keyrate_collective(
        CovarianceState(Eigen::VectorXd::Zero(4), cov), protocol);
    out.scenario = "ensemble";
    out.lower_bound = true;  // Gaussian component of the averaged state only
    return out;
  }

  FadingDistribution::Grid grid = dist.grid(options.bins);
  std::vector<BinRates> rates = per_bin_rates(v, grid, omega, protocol, options);
  double threshold = scenario == FadingScenario::postselected ? eta_threshold : 0.0;
  RateResult out = reduce_selected(grid, rates, threshold,
                                   options.signed_integration);
  out.scenario = scenario == FadingScenario::postselected ? "postselected"
                                                          : "per_eta";
  return out;
}

std::pair<double, RateResult> optimize_threshold(
    double v, const FadingDistribution& dist, double omega,
    const ProtocolConfig& protocol, const FadingOptions& options) {
  FadingDistribution::Grid grid = dist.grid(options.bins);
  std::vector<BinRates> rates = per_bin_rates(v, grid, omega, protocol, options);
  int n = static_cast<int>(grid.eta.size());

  // Signed tail sums F(j) = sum_{i >= j} w_i K_i; thresholds live on bin
  // left edges, index n means everything discarded.
  std::vector<double> tail(n + 1, 0.0);
  for (int i = n - 1; i >= 0; --i) {
    tail[i] = tail[i + 1] +
              grid.pdf[i] * grid.width[i] * rates[i].unfloored;
  }

  // Golden-section over the index range, then an exact local scan; the
  // envelope is unimodal whenever K(eta) crosses zero once.
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  int lo = 0;
  int hi = n;
  while (hi - lo > 3) {
    int m1 = hi - static_cast<int>(std::round(phi * (hi - lo)));
    int m2 = lo + static_cast<int>(std::round(phi * (hi - lo)));
    if (m1 >= m2) {
      break;
    }
    if (tail[m1] >= tail[m2]) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  int best = lo;
  for (int j = std::max(0, lo - 2); j <= std::min(n, hi + 2); ++j) {
    if (tail[j] > tail[best]) {
      best = j;
    }
  }
  // Ties toward the smaller threshold.
  while (best > 0 && tail[best - 1] >= tail[best]) {
    --best;
  }
  double eta_th = best == 0 ? 0.0
                            : grid.eta[best - 1] + grid.width[best - 1] / 2.0;
  RateResult rate = keyrate_fading(v, dist, omega, protocol,
                                   FadingScenario::postselected, eta_th,
                                   options);
  return {eta_th, rate};
}

namespace {

double measure_gaussian(const CovarianceState& state,
                        EntanglementMeasure measure) {
  if (measure == EntanglementMeasure::log_negativity) {
    return log_negativity_gaussian(state);
  }
  double det = state.cov().determinant();
  if (std::abs(det - 1.0) > 1e-6) {
    throw std::invalid_argument(
        "entropy of entanglement requires a pure state; use log negativity");
  }
  return von_neumann_entropy(partial_trace(state, {0}));
}

}  // namespace

double entanglement_fading(double v, const FadingDistribution& dist,
                           double noise_variance, EntanglementMeasure measure,
                           FadingScenario scenario,
                           const FadingOptions& options) {
  if (scenario == FadingScenario::postselected) {
    throw std::invalid_argument("post-selection applies to key rates; restrict the distribution instead");
  }
  if (scenario == FadingScenario::ensemble) {
    double mean_eta = dist.mean_eta();
    double mean_tau = dist.mean_eta_sq();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
    double c = mean_eta * std::sqrt(v * v - 1.0);
    double b = mean_tau * v + (1.0 - mean_tau) * noise_variance;
    cov(0, 0) = cov(1, 1) = v;
    cov(2, 2) = cov(3, 3) = b;
    cov(0, 2) = cov(2, 0) = c;
    cov(1, 3) = cov(3, 1) = -c;
    return measure_gaussian(CovarianceState(Eigen::VectorXd::Zero(4), cov),
                            measure);
  }
  FadingDistribution::Grid grid = dist.grid(options.bins);
  std::vector<double> values = parallel::map_index<double>(
      grid.eta.size(), [&](std::size_t i) {
        double tau = grid.eta[i] * grid.eta[i] * options.fixed_tau_factor;
        return measure_gaussian(
            tmsv_single_mode_transfer(v, tau, noise_variance), measure);
      }, options.policy);
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    total += grid.pdf[i] * grid.width[i] * values[i];
  }
  return total;
}

double entanglement_fading_dual(double v, const FadingDistribution& dist1,
                                const FadingDistribution& dist2,
                                double noise_variance,
                                EntanglementMeasure measure,
                                FadingScenario scenario,
                                const FadingOptions& options) {
  if (scenario == FadingScenario::postselected) {
    throw std::invalid_argument("post-selection applies to key rates; restrict the distribution instead");
  }
  if (scenario == FadingScenario::ensemble) {
    double m1 = dist1.mean_eta();
    double m2 = dist2.mean_eta();
    double t1 = dist1.mean_eta_sq();
    double t2 = dist2.mean_eta_sq();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
    double c = m1 * m2 * std::sqrt(v * v - 1.0);
    double a = t1 * v + (1.0 - t1) * noise_variance;
    double b = t2 * v + (1.0 - t2) * noise_variance;
    cov(0, 0) = cov(1, 1) = a;
    cov(2, 2) = cov(3, 3) = b;
    cov(0, 2) = cov(2, 0) = c;
    cov(1, 3) = cov(3, 1) = -c;
    return measure_gaussian(CovarianceState(Eigen::VectorXd::Zero(4), cov),
                            measure);
  }
  FadingDistribution::Grid g1 = dist1.grid(options.bins);
  FadingDistribution::Grid g2 = dist2.grid(options.bins);
  std::size_t n1 = g1.eta.size();
  std::size_t n2 = g2.eta.size();
  std::vector<double> values = parallel::map_index<double>(
      n1 * n2, [&](std::size_t k) {
        std::size_t i = k / n2;
        std::size_t j = k % n2;
        double tau1 = g1.eta[i] * g1.eta[i];
        double tau2 = g2.eta[j] * g2.eta[j];
        return measure_gaussian(
            tmsv_two_mode_transfer(v, tau1, noise_variance, tau2,
                                   noise_variance),
            measure);
      }, options.policy);
  double total = 0.0;
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      total += g1.pdf[i] * g1.width[i] * g2.pdf[j] * g2.width[j] *
               values[i * n2 + j];
    }
  }
  return total;
}

HeraldResult NonGaussSource::prepare() const {
  FockDensity tmsv = tmsv_fock(r, cutoff);
  if (!op) {
    return {tmsv, 1.0};
  }
  return nongaussian_op(tmsv, *op, sides, op_options);
}

namespace {

double measure_fock(const FockDensity& state, EntanglementMeasure measure) {
  return measure == EntanglementMeasure::log_negativity
             ? log_negativity_fock(state)
             : entropy_of_entanglement_pure(state);
}

}  // namespace

double entanglement_fading_fock(const NonGaussSource& source,
                                const FadingDistribution& dist,
                                EntanglementMeasure measure,
                                FadingScenario scenario,
                                const FadingOptions& options) {
  HeraldResult herald = source.prepare();
  FadingDistribution::Grid grid = dist.grid(options.bins);
  std::size_t n = grid.eta.size();
  if (scenario == FadingScenario::ensemble) {
    std::vector<FockDensity> states;
    std::vector<double> weights;
    states.reserve(n);
    weights.reserve(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += grid.pdf[i] * grid.width[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      double tau = grid.eta[i] * grid.eta[i] * options.fixed_tau_factor;
      states.push_back(apply_loss_kraus(herald.state, 1, tau));
      weights.push_back(grid.pdf[i] * grid.width[i] / total);
    }
    return measure_fock(ensemble_average(states, weights), measure);
  }
  if (scenario == FadingScenario::postselected) {
    throw std::invalid_argument("post-selection applies to key rates; restrict the distribution instead");
  }
  std::vector<double> values = parallel::map_index<double>(n, [&](std::size_t i) {
    double tau = grid.eta[i] * grid.eta[i] * options.fixed_tau_factor;
    return measure_fock(apply_loss_kraus(herald.state, 1, tau), measure);
  }, options.policy);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += grid.pdf[i] * grid.width[i] * values[i];
  }
  return total;
}

RateResult nongauss_keyrate(const NonGaussSource& source,
                            const FadingDistribution& dist, double omega,
                            const ProtocolConfig& protocol,
                            const FadingOptions& options) {
  protocol.validate();
  if (omega != 1.0) {
    throw std::invalid_argument(
        "the Fock loss channel models vacuum noise only (omega = 1)");
  }
  HeraldResult herald = source.prepare();
  FadingDistribution::Grid grid = dist.grid(options.bins);
  std::vector<BinRates> rates = parallel::map_index<BinRates>(
      grid.eta.size(), [&](std::size_t i) {
        double tau = grid.eta[i] * grid.eta[i] * options.fixed_tau_factor;
        FockDensity lossy = apply_loss_kraus(herald.state, 1, tau);
        RateResult r = keyrate_collective(covariance_of_fock(lossy), protocol);
        return BinRates{r.mutual_info, r.holevo, r.key_rate_unfloored};
      }, options.policy);
  RateResult out = reduce_selected(grid, rates, 0.0, options.signed_integration);
  out.key_rate *= herald.success_probability;
  out.key_rate_unfloored *= herald.success_probability;
  out.selection_probability = herald.success_probability;
  out.lower_bound = true;
  out.scenario = "nongauss_per_eta";
  return out;
}

namespace {

// Four-mode pre-measurement state of the swap: TMSV A on modes (0,1),
// TMSV B on modes (2,3), uplinks on 1 and 2, balanced beam splitter on
// (1,2). The Bell measurement reads q on mode 1 and p on mode 2.
CovarianceState swap_premeasurement(const SwapConfig& config) {
  config.validate();
  CovarianceState state = tensor(tmsv_state(config.r_a), tmsv_state(config.r_b));
  state = attenuate(state, 1, config.tau_a, config.noise_variance);
  state = attenuate(state, 2, config.tau_b, config.noise_variance);
  return apply_beam_splitter(state, 1, 2, 0.5);
}

}  // namespace

CovarianceState entanglement_swap(const SwapConfig& config) {
  CovarianceState state = swap_premeasurement(config);
  state = condition_on_measurement(state, 1, Measurement::homodyne_q);
  // After the first conditioning the former mode 2 sits at index 1.
  state = condition_on_measurement(state, 1, Measurement::homodyne_p);
  return state;
}

SwapGains optimize_swap_gain(const SwapConfig& config) {
  CovarianceState state = swap_premeasurement(config);
  // First outcome: coefficients of q~ over the remaining modes (0, 2, 3).
  Eigen::MatrixXd g1 = measurement_mean_gain(state, 1, Measurement::homodyne_q);
  CovarianceState after_q = condition_on_measurement(state, 1,
                                                     Measurement::homodyne_q);
  // Second outcome on the state already conditioned on q~.
  Eigen::MatrixXd g2 = measurement_mean_gain(after_q, 1,
                                             Measurement::homodyne_p);
  SwapGains gains;
  // Kept quadratures (q1, p1, q4, p4) sit at rows (0, 1) and (4, 5) of g1
  // and rows (0, 1) and (2, 3) of g2.
  Eigen::Vector4d coef_q;
  coef_q << g1(0, 0), g1(1, 0), g1(4, 0), g1(5, 0);
  Eigen::Vector4d coef_p;
  coef_p << g2(0, 0), g2(1, 0), g2(2, 0), g2(3, 0);
  // The second measured mode's p component also responds to q~; the
  // composed coefficient removes what the second conditioning re-explains.
  double cross = g1(3, 0);  // p of the mode measured second
  gains.coefficients.col(0) = coef_q - coef_p * cross;
  gains.coefficients.col(1) = coef_p;
  return gains;
}

CovarianceState entanglement_swap_with_gains(const SwapConfig& config,
                                             const SwapGains& gains) {
  CovarianceState pre = swap_premeasurement(config);
  CovarianceState conditional = entanglement_swap(config);
  SwapGains optimal = optimize_swap_gain(config);

  // Joint covariance of the commuting Bell outcomes (q~ of mode 1, p~ of
  // mode 2).
  Eigen::Matrix2d outcome_cov;
  outcome_cov(0, 0) = pre.block(1, 1)(0, 0);
  outcome_cov(1, 1) = pre.block(2, 2)(1, 1);
  outcome_cov(0, 1) = outcome_cov(1, 0) = pre.block(1, 2)(0, 1);

  // Residual mean after displacing by +gains*outcome instead of the exact
  // cancellation -optimal*outcome.
  Eigen::Matrix<double, 4, 2> residual =
      optimal.coefficients + gains.coefficients;
  Eigen::Matrix4d extra = residual * outcome_cov * residual.transpose();
  return CovarianceState(conditional.mean(),
                         conditional.cov() + extra);
}

}  // namespace cvsat
