#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cvsat/parallel.hpp"

namespace cvsat {

/// Beam-wandering geometry at the receiver aperture plane. Lengths share
/// one unit (meters).
struct BeamWanderParams {
  double sigma_b;        // beam-wandering standard deviation
  double aperture_radius;  // beta
  double beam_spot;      // W, beam-spot radius at the aperture
  double offset_d = 0.0;  // distance between aperture center and wander center

  void validate() const;
};

/// Log-negative Weibull parameters derived from the beam-wandering
/// geometry: eta^2 = eta0^2 exp(-(l/S)^gamma).
struct WeibullFadingParams {
  double gamma;
  double scale_s;
  double eta0;

  void validate() const;
};

/// Turbulence-induced beam-spreading: Theta = 2 ln(W / w0) is normal with
/// the given mean and standard deviation.
struct BeamSpreadParams {
  double mean_theta;
  double sigma_theta;
  double w0;

  void validate() const;
};

/// Diffraction-limited downlink: far-field spot W_L = range * wavelength /
/// telescope_diameter.
struct DownlinkParams {
  double wavelength;
  double telescope_diameter;
  double range;
  double receiver_aperture;

  void validate() const;
};

WeibullFadingParams derive_fading_params(const BeamWanderParams& wander);

/// Log-negative Weibull density of the transmission coefficient; zero
/// outside [0, eta0].
double fading_pdf(double eta, const BeamWanderParams& wander);
double fading_pdf(double eta, const WeibullFadingParams& params,
                  double sigma_b, double offset_d);

/// Ricean density of the beam-deflection distance l (Rayleigh when d = 0).
double deflection_pdf(double l, double sigma_b, double offset_d);

/// eta(l) = eta0 exp(-(l/S)^gamma / 2), monotone decreasing in l.
double transmission_of_deflection(double l, const WeibullFadingParams& params);

/// i.i.d. transmission-coefficient samples; fully determined by
/// (seed, stream), reproducible under any parallel policy.
std::vector<double> sample_transmission(uint64_t seed, std::size_t n,
                                        const BeamWanderParams& wander,
                                        uint64_t stream = 0,
                                        parallel::Policy policy = parallel::default_policy());

/// Fading-channel law p(eta) on [0, eta0]: parametric (beam-wandering) or
/// tabulated on a strictly increasing midpoint grid.
class FadingDistribution {
  public:
    static FadingDistribution parametric(const BeamWanderParams& wander);
    static FadingDistribution point_mass(double eta);
    static FadingDistribution tabulated(std::vector<double> eta,
                                        std::vector<double> pdf,
                                        std::vector<double> width);

    bool is_parametric() const { return wander_.has_value(); }
    double eta_max() const { return eta_max_; }

    double pdf(double eta) const;
    /// P(eta' <= eta), exact for the heavy-fade mass below double range.
    double cdf(double eta) const;
    /// Integral of f(eta) p(eta) over [lo, eta_max].
    double integrate(const std::function<double(double)>& f, double lo = 0.0) const;
    double normalization() const;
    double mean_eta() const;
    double mean_eta_sq() const;
    /// P(eta >= threshold).
    double selection_probability(double eta_threshold) const;

    /// Midpoint-bin discretization (parametric sources; tabulated input is
    /// returned as stored).
    struct Grid {
      std::vector<double> eta;
      std::vector<double> pdf;
      std::vector<double> width;
    };
    Grid grid(int bins = 200) const;

    const std::optional<BeamWanderParams>& wander() const { return wander_; }
    const std::optional<WeibullFadingParams>& weibull() const { return weibull_; }

    /// CSV with header "eta,pdf"; bin widths are reconstructed from the
    /// grid spacing on import.
    void to_csv(std::ostream& out) const;
    static FadingDistribution from_csv(std::istream& in);

  private:
    FadingDistribution() = default;

    std::optional<BeamWanderParams> wander_;
    std::optional<WeibullFadingParams> weibull_;
    Grid table_;
    double eta_max_ = 1.0;
};

/// -10 log10(E[eta^2]); requires a normalized distribution.
double mean_fading_loss_db(const FadingDistribution& dist);

/// Mean fading loss with beam-spreading folded in: for each Theta the
/// beam-spot is W(Theta) = w0 exp(Theta/2) and the Weibull parameters are
/// re-derived. Only supported for offset_d = 0.
double mean_loss_with_spread_db(const BeamWanderParams& wander,
                                const BeamSpreadParams& spread);

/// Fixed (non-fading) downlink transmission coefficient from lambda/D
/// diffraction scaling.
double downlink_transmissivity(const DownlinkParams& params);

struct ThermalOccupation {
  double n_bar;
  double noise_variance;  // 2 n_bar + 1
};

/// Bose-Einstein occupation at the given frequency and temperature.
ThermalOccupation thermal_occupation(double frequency_hz, double temperature_k);

}  // namespace cvsat
