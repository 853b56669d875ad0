#include "cvsat/atmosphere.hpp"

#include <gsl/gsl_sf_bessel.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cvsat/quad.hpp"
#include "cvsat/rng.hpp"

namespace cvsat {

namespace {

constexpr double kPlanck = 6.62607015e-34;
constexpr double kBoltzmann = 1.380649e-23;

// exp(-x) I0(x) and exp(-x) I1(x); stable for large x where the bare
// Bessel functions overflow.
double bessel_i0_scaled(double x) { return gsl_sf_bessel_I0_scaled(x); }
double bessel_i1_scaled(double x) { return gsl_sf_bessel_I1_scaled(x); }

}  // namespace

void BeamWanderParams::validate() const {
  if (!(sigma_b > 0.0)) {
    throw std::domain_error("sigma_b must be > 0");
  }
  if (!(aperture_radius > 0.0)) {
    throw std::domain_error("aperture radius must be > 0");
  }
  if (!(beam_spot > 0.0)) {
    throw std::domain_error("beam-spot radius must be > 0");
  }
  if (offset_d < 0.0) {
    throw std::domain_error("offset d must be >= 0");
  }
}

void WeibullFadingParams::validate() const {
  if (!(gamma > 0.0) || !(scale_s > 0.0)) {
    throw std::domain_error("Weibull shape and scale must be > 0");
  }
  if (!(eta0 > 0.0) || eta0 > 1.0) {
    throw std::domain_error("eta0 must lie in (0, 1]");
  }
}

void BeamSpreadParams::validate() const {
  if (!(sigma_theta > 0.0)) {
    throw std::domain_error("sigma_theta must be > 0");
  }
  if (!(w0 > 0.0)) {
    throw std::domain_error("initial beam-spot radius must be > 0");
  }
}

void DownlinkParams::validate() const {
  if (!(wavelength > 0.0) || !(telescope_diameter > 0.0) || !(range > 0.0) ||
      !(receiver_aperture > 0.0)) {
    throw std::domain_error("downlink parameters must all be > 0");
  }
}

WeibullFadingParams derive_fading_params(const BeamWanderParams& wander) {
  wander.validate();
  double h = wander.aperture_radius / wander.beam_spot;
  h *= h;
  double eta0_sq = -std::expm1(-2.0 * h);
  double denom = 1.0 - bessel_i0_scaled(4.0 * h);
  if (!(denom > 0.0)) {
    throw std::domain_error(
        "aperture-to-spot ratio too small: 1 - exp(-4h) I0(4h) underflows; "
        "increase beta/W");
  }
  double log_arg = std::log(2.0 * eta0_sq / denom);
  WeibullFadingParams out;
  out.gamma = 8.0 * h * bessel_i1_scaled(4.0 * h) / denom / log_arg;
  out.scale_s = wander.aperture_radius * std::pow(log_arg, -1.0 / out.gamma);
  out.eta0 = std::sqrt(eta0_sq);
  out.validate();
  return out;
}

double fading_pdf(double eta, const WeibullFadingParams& params,
                  double sigma_b, double offset_d) {
  params.validate();
  if (!(sigma_b > 0.0) || offset_d < 0.0) {
    throw std::domain_error("invalid wander statistics");
  }
  if (eta <= 0.0 || eta > params.eta0) {
    return 0.0;
  }
  double sig_sq = sigma_b * sigma_b;
  double u = 2.0 * std::log(params.eta0 / eta);
  double s = params.scale_s;
  double g = params.gamma;
  double u_pow = std::pow(u, 1.0 / g);  // l = S * u^(1/g)
  // Fold the Bessel growth into the exponent so d >> sigma_b stays finite.
  double bessel_arg = s * offset_d * u_pow / sig_sq;
  double log_tail = bessel_arg - (s * s * std::pow(u, 2.0 / g) + offset_d * offset_d) / (2.0 * sig_sq);
  return 2.0 * s * s / (sig_sq * g * eta) * std::pow(u, 2.0 / g - 1.0) *
         bessel_i0_scaled(bessel_arg) * std::exp(log_tail);
}

double fading_pdf(double eta, const BeamWanderParams& wander) {
  return fading_pdf(eta, derive_fading_params(wander), wander.sigma_b,
                    wander.offset_d);
}

double deflection_pdf(double l, double sigma_b, double offset_d) {
  if (!(sigma_b > 0.0) || offset_d < 0.0) {
    throw std::domain_error("invalid deflection statistics");
  }
  if (l < 0.0) {
    return 0.0;
  }
  double sig_sq = sigma_b * sigma_b;
  double bessel_arg = l * offset_d / sig_sq;
  double log_tail = bessel_arg - (l * l + offset_d * offset_d) / (2.0 * sig_sq);
  return l / sig_sq * bessel_i0_scaled(bessel_arg) * std::exp(log_tail);
}

double transmission_of_deflection(double l, const WeibullFadingParams& params) {
  params.validate();
  if (l < 0.0) {
    throw std::domain_error("deflection distance must be >= 0");
  }
  return params.eta0 * std::exp(-0.5 * std::pow(l / params.scale_s, params.gamma));
}

std::vector<double> sample_transmission(uint64_t seed, std::size_t n,
                                        const BeamWanderParams& wander,
                                        uint64_t stream,
                                        parallel::Policy policy) {
  if (n < 1) {
    throw std::invalid_argument("sample count must be >= 1");
  }
  WeibullFadingParams params = derive_fading_params(wander);
  CounterRng rng(seed, stream);
  std::vector<double> out(n);
  parallel::for_each_index(n, [&](std::size_t i) {
    double gx = 0.0;
    double gy = 0.0;
    rng.normal_pair(i, gx, gy);
    double xl = wander.offset_d + wander.sigma_b * gx;
    double yl = wander.sigma_b * gy;
    out[i] = transmission_of_deflection(std::hypot(xl, yl), params);
  }, policy);
  return out;
}

FadingDistribution FadingDistribution::parametric(const BeamWanderParams& wander) {
  FadingDistribution d;
  d.wander_ = wander;
  d.weibull_ = derive_fading_params(wander);
  d.eta_max_ = d.weibull_->eta0;
  return d;
}

FadingDistribution FadingDistribution::point_mass(double eta) {
  if (!(eta > 0.0) || eta > 1.0) {
    throw std::domain_error("point mass must lie in (0, 1]");
  }
  // Single midpoint bin of vanishing width carrying all the mass.
  double width = 1e-9 * eta;
  return tabulated({eta}, {1.0 / width}, {width});
}

FadingDistribution FadingDistribution::tabulated(std::vector<double> eta,
                                                 std::vector<double> pdf,
                                                 std::vector<double> width) {
  if (eta.empty() || eta.size() != pdf.size() || eta.size() != width.size()) {
    throw std::invalid_argument("tabulated distribution needs matching non-empty columns");
  }
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (!(eta[i] > 0.0) || eta[i] > 1.0) {
      throw std::invalid_argument("tabulated eta values must lie in (0, 1]");
    }
    if (pdf[i] < 0.0 || width[i] <= 0.0) {
      throw std::invalid_argument("tabulated pdf must be >= 0 with positive bin widths");
    }
    if (i > 0 && eta[i] <= eta[i - 1]) {
      throw std::invalid_argument("tabulated eta grid must be strictly increasing");
    }
  }
  FadingDistribution d;
  d.table_.eta = std::move(eta);
  d.table_.pdf = std::move(pdf);
  d.table_.width = std::move(width);
  d.eta_max_ = d.table_.eta.back() + d.table_.width.back() / 2.0;
  return d;
}

double FadingDistribution::pdf(double eta) const {
  if (wander_) {
    return fading_pdf(eta, *weibull_, wander_->sigma_b, wander_->offset_d);
  }
  for (std::size_t i = 0; i < table_.eta.size(); ++i) {
    if (std::abs(eta - table_.eta[i]) <= table_.width[i] / 2.0) {
      return table_.pdf[i];
    }
  }
  return 0.0;
}

double FadingDistribution::integrate(const std::function<double(double)>& f,
                                     double lo) const {
  if (wander_) {
    // Change of variables eta -> deflection distance l: p(eta) d eta and
    // p(l) dl agree, and the l-space integrand is smooth at both ends.
    const WeibullFadingParams& w = *weibull_;
    double l_hi = std::numeric_limits<double>::infinity();
    if (lo > 0.0) {
      if (lo >= w.eta0) {
        return 0.0;
      }
      l_hi = w.scale_s * std::pow(2.0 * std::log(w.eta0 / lo), 1.0 / w.gamma);
    }
    auto integrand = [&](double l) {
      return f(transmission_of_deflection(l, w)) *
             deflection_pdf(l, wander_->sigma_b, wander_->offset_d);
    };
    if (std::isinf(l_hi)) {
      return quad::integrate_upper(integrand, 0.0);
    }
    return quad::integrate(integrand, 0.0, l_hi) ;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < table_.eta.size(); ++i) {
    if (table_.eta[i] >= lo) {
      total += f(table_.eta[i]) * table_.pdf[i] * table_.width[i];
    }
  }
  return total;
}

double FadingDistribution::normalization() const {
  return integrate([](double) { return 1.0; });
}

double FadingDistribution::mean_eta() const {
  return integrate([](double eta) { return eta; });
}

double FadingDistribution::mean_eta_sq() const {
  return integrate([](double eta) { return eta * eta; });
}

double FadingDistribution::selection_probability(double eta_threshold) const {
  if (eta_threshold <= 0.0) {
    return 1.0;
  }
  return integrate([](double) { return 1.0; }, eta_threshold);
}

double FadingDistribution::cdf(double eta) const {
  if (eta <= 0.0) {
    return 0.0;
  }
  if (eta >= eta_max_) {
    return 1.0;
  }
  if (wander_) {
    // P(eta' <= eta) = P(l >= l(eta)); the deflection representation keeps
    // the heavy-fade mass (eta below double range) exactly accounted for.
    const WeibullFadingParams& w = *weibull_;
    double l = w.scale_s * std::pow(2.0 * std::log(w.eta0 / eta), 1.0 / w.gamma);
    double sig_sq = wander_->sigma_b * wander_->sigma_b;
    if (wander_->offset_d == 0.0) {
      return std::exp(-l * l / (2.0 * sig_sq));
    }
    return quad::integrate_upper(
        [&](double x) { return deflection_pdf(x, wander_->sigma_b, wander_->offset_d); },
        l);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < table_.eta.size(); ++i) {
    double left = table_.eta[i] - table_.width[i] / 2.0;
    double right = table_.eta[i] + table_.width[i] / 2.0;
    if (eta >= right) {
      total += table_.pdf[i] * table_.width[i];
    } else if (eta > left) {
      total += table_.pdf[i] * (eta - left);
    }
  }
  return total;
}

FadingDistribution::Grid FadingDistribution::grid(int bins) const {
  if (!wander_) {
    return table_;
  }
  if (bins < 1) {
    throw std::invalid_argument("bin count must be >= 1");
  }
  // Mass-exact midpoint bins: the tabulated density is the exact bin mass
  // over the bin width, so refinement converges even where the pdf has an
  // integrable endpoint singularity.
  Grid g;
  double width = eta_max_ / bins;
  g.eta.resize(bins);
  g.pdf.resize(bins);
  g.width.assign(bins, width);
  double below = 0.0;
  for (int i = 0; i < bins; ++i) {
    g.eta[i] = (i + 0.5) * width;
    double up = (i + 1 == bins) ? 1.0 : cdf((i + 1) * width);
    g.pdf[i] = std::max(0.0, up - below) / width;
    below = up;
  }
  return g;
}

void FadingDistribution::to_csv(std::ostream& out) const {
  Grid g = grid();
  out << "eta,pdf\n";
  out.precision(12);
  for (std::size_t i = 0; i < g.eta.size(); ++i) {
    out << g.eta[i] << "," << g.pdf[i] << "\n";
  }
}

FadingDistribution FadingDistribution::from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("eta,pdf", 0) != 0) {
    throw std::invalid_argument("fading CSV must start with header 'eta,pdf'");
  }
  std::vector<double> eta;
  std::vector<double> pdf;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') {
      continue;
    }
    std::istringstream row(line);
    std::string cell;
    if (!std::getline(row, cell, ',')) {
      throw std::invalid_argument("malformed fading CSV row: " + line);
    }
    eta.push_back(std::stod(cell));
    if (!std::getline(row, cell, ',')) {
      throw std::invalid_argument("malformed fading CSV row: " + line);
    }
    pdf.push_back(std::stod(cell));
  }
  if (eta.size() < 2) {
    throw std::invalid_argument("fading CSV needs at least two rows");
  }
  std::vector<double> width(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) {
    double left = (i == 0) ? eta[1] - eta[0] : eta[i] - eta[i - 1];
    double right = (i + 1 == eta.size()) ? left : eta[i + 1] - eta[i];
    width[i] = (left + right) / 2.0;
  }
  return tabulated(std::move(eta), std::move(pdf), std::move(width));
}

double mean_fading_loss_db(const FadingDistribution& dist) {
  double norm = dist.normalization();
  if (std::abs(norm - 1.0) > 1e-6) {
    throw std::invalid_argument("fading distribution is not normalized: integral = " +
                                std::to_string(norm));
  }
  double mean_tau = dist.mean_eta_sq();
  if (!(mean_tau > 0.0)) {
    throw std::domain_error("mean transmissivity vanished");
  }
  return -10.0 * std::log10(mean_tau);
}

double mean_loss_with_spread_db(const BeamWanderParams& wander,
                                const BeamSpreadParams& spread) {
  wander.validate();
  spread.validate();
  if (wander.offset_d != 0.0) {
    throw std::invalid_argument(
        "beam-spread loss model requires offset d = 0");
  }
  auto mean_tau_at = [&](double theta) {
    BeamWanderParams at_theta = wander;
    at_theta.beam_spot = spread.w0 * std::exp(theta / 2.0);
    return FadingDistribution::parametric(at_theta).mean_eta_sq();
  };
  double lo = spread.mean_theta - 6.0 * spread.sigma_theta;
  double hi = spread.mean_theta + 6.0 * spread.sigma_theta;
  double norm = 1.0 / (std::sqrt(2.0 * M_PI) * spread.sigma_theta);
  auto integrand = [&](double theta) {
    double z = (theta - spread.mean_theta) / spread.sigma_theta;
    return mean_tau_at(theta) * norm * std::exp(-0.5 * z * z);
  };
  double mean_tau = quad::integrate(integrand, lo, hi, 1e-10, 1e-6);
  return -10.0 * std::log10(mean_tau);
}

double downlink_transmissivity(const DownlinkParams& params) {
  params.validate();
  double spot = params.range * params.wavelength / params.telescope_diameter;
  double h = params.receiver_aperture / spot;
  h *= h;
  return std::sqrt(-std::expm1(-2.0 * h));
}

ThermalOccupation thermal_occupation(double frequency_hz, double temperature_k) {
  if (!(frequency_hz > 0.0) || !(temperature_k > 0.0)) {
    throw std::domain_error("frequency and temperature must be > 0");
  }
  double x = kPlanck * frequency_hz / (kBoltzmann * temperature_k);
  double n_bar = (x > 700.0) ? 0.0 : 1.0 / std::expm1(x);
  return {n_bar, 2.0 * n_bar + 1.0};
}

}  // namespace cvsat
