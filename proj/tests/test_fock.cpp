#include <doctest.h>

#include <cmath>
#include <complex>
#include <tuple>

#include "cvsat/errors.hpp"
#include "cvsat/fock.hpp"
#include "cvsat/gaussian.hpp"
#include "support.hpp"

using namespace cvsat;

namespace {

constexpr double kLog2e = 1.4426950408889634;

FockDensity bell_pair(int cutoff) {
  int d = cutoff + 1;
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(d * d);
  psi(0) = 1.0 / std::sqrt(2.0);
  psi(1 * d + 1) = 1.0 / std::sqrt(2.0);
  return FockDensity(2, cutoff, psi * psi.adjoint());
}

// Schmidt coefficients of the TMSV with one photon subtracted on each arm
// through beam splitters of transmissivity tau (PNR herald k = 1):
// c_(n-1) = q_n * n * tau^(n-1) * (1 - tau), independent pure-state route.
struct SubtractOracle {
  std::vector<double> schmidt;
  double probability = 0.0;
};

SubtractOracle subtract_both_series(double r, double tau, int cutoff) {
  double lambda = std::tanh(r);
  SubtractOracle out;
  double raw = 0.0;
  for (int n = 0; n <= cutoff; ++n) {
    raw += (1.0 - lambda * lambda) * std::pow(lambda, 2 * n);
  }
  for (int n = 1; n <= cutoff; ++n) {
    double q_n = std::sqrt((1.0 - lambda * lambda) / raw) * std::pow(lambda, n);
    double amp = q_n * n * std::pow(tau, n - 1) * (1.0 - tau);
    out.schmidt.push_back(amp);
    out.probability += amp * amp;
  }
  for (double& c : out.schmidt) {
    c /= std::sqrt(out.probability);
  }
  return out;
}

}  // namespace

TEST_CASE("TMSV construction in the truncated basis") {
  SUBCASE("r = 0 is the two-mode vacuum") {
    FockDensity vac = tmsv_fock(0.0, 6);
    CHECK(vac.rho()(0, 0).real() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(vac.trace_weight() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(vac.purity() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("ground population at r = 0.5") {
    FockDensity tmsv = tmsv_fock(0.5, 12);
    CHECK(tmsv.rho()(0, 0).real() ==
          doctest::Approx(1.0 - std::tanh(0.5) * std::tanh(0.5)).epsilon(1e-6));
  }
  SUBCASE("covariance matches the Gaussian closed form at r = 0.3") {
    CovarianceState cm = covariance_of_fock(tmsv_fock(0.3, 20));
    CHECK((cm.cov() - tmsv_state(0.3).cov()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(cm.mean().cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("heavy truncation is rejected unless overridden") {
    CHECK_THROWS_AS(tmsv_fock(2.0, 3), std::domain_error);
    FockDensity forced = tmsv_fock(2.0, 3, /*allow_heavy_truncation=*/true);
    CHECK(forced.trace_weight() < 0.999);
  }
  SUBCASE("raising the cutoff monotonically improves the retained trace") {
    double prev = 0.0;
    for (int cutoff : {2, 4, 6, 8, 10}) {
      double w = tmsv_fock(0.8, cutoff, true).trace_weight();
      CHECK(w > prev);
      prev = w;
    }
  }
}

TEST_CASE("ladder operators") {
  SUBCASE("annihilating the vacuum gives the zero operator") {
    LadderResult res = apply_ladder(fock_state(0, 5), 0, Ladder::annihilate);
    CHECK(res.weight == 0.0);
  }
  SUBCASE("annihilating |1> gives |0> with unit weight") {
    LadderResult res = apply_ladder(fock_state(1, 5), 0, Ladder::annihilate);
    CHECK(res.weight == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(res.state.rho()(0, 0).real() == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("creation on |n> carries weight n + 1") {
    for (int n : {0, 1, 3}) {
      LadderResult res = apply_ladder(fock_state(n, 8), 0, Ladder::create);
      CHECK(res.weight == doctest::Approx(double(n + 1)).epsilon(1e-14));
      CHECK(res.state.rho()(n + 1, n + 1).real() ==
            doctest::Approx(1.0).epsilon(1e-14));
    }
  }
  SUBCASE("creation on a populated top level is refused") {
    CHECK_THROWS_AS(apply_ladder(fock_state(5, 5), 0, Ladder::create),
                    std::domain_error);
    LadderResult forced =
        apply_ladder(fock_state(5, 5), 0, Ladder::create, /*allow=*/true);
    CHECK(forced.weight == 0.0);  // everything fell out of the box
  }
}

TEST_CASE("two-mode beam splitter") {
  SUBCASE("tau = 1 is the identity") {
    FockDensity tmsv = tmsv_fock(0.4, 8);
    FockDensity out = apply_two_mode_bs(tmsv, 1.0);
    CHECK((out.rho() - tmsv.rho()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("single-photon splitting amplitudes") {
    double tau = 0.37;
    FockDensity out = apply_two_mode_bs(fock_state_pair(1, 0, 4), tau);
    int d = 5;
    CHECK(out.rho()(1 * d + 0, 1 * d + 0).real() ==
          doctest::Approx(tau).epsilon(1e-12));
    CHECK(out.rho()(0 * d + 1, 0 * d + 1).real() ==
          doctest::Approx(1.0 - tau).epsilon(1e-12));
  }
  SUBCASE("passive: mean photon number invariant") {
    // Deep enough cutoff that every populated photon-number sector fits
    // the box; the photon-weighted truncation tail is then below 1e-10.
    FockDensity tmsv = tmsv_fock(0.3, 20);
    double before = tmsv.mean_photon_number();
    FockDensity out = apply_two_mode_bs(tmsv, 0.61);
    CHECK(std::abs(out.mean_photon_number() - before) < 1e-10);
  }
  SUBCASE("trace preserved within truncation error") {
    FockDensity in = tmsv_fock(0.3, 18);
    FockDensity out = apply_two_mode_bs(in, 0.5);
    CHECK(std::abs(out.trace_weight() - in.trace_weight()) < 1e-10);
  }
  SUBCASE("out-of-box spill is recorded in the trace weight") {
    // At a shallow cutoff the half-filled sectors lose real amplitude;
    // the bookkeeping must show it instead of silently renormalizing.
    FockDensity in = tmsv_fock(0.3, 12);
    FockDensity out = apply_two_mode_bs(in, 0.5);
    double spill = in.trace_weight() - out.trace_weight();
    CHECK(spill > 1e-9);
    CHECK(spill < 1e-7);
  }
}

TEST_CASE("mode plumbing helpers") {
  SUBCASE("swapping modes twice is the identity") {
    FockDensity state = apply_two_mode_bs(tmsv_fock(0.4, 6), 0.8);
    FockDensity twice = swap_fock_modes(swap_fock_modes(state, 0, 1), 0, 1);
    CHECK((twice.rho() - state.rho()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("beam splitter on a swapped pair matches swapping the convention") {
    FockDensity asym = fock_state_pair(2, 0, 5);
    FockDensity direct = apply_bs_pair(asym, 0, 1, 0.7);
    FockDensity via_swap = swap_fock_modes(
        apply_bs_pair(swap_fock_modes(asym, 0, 1), 1, 0, 0.7), 0, 1);
    CHECK((direct.rho() - via_swap.rho()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("ancilla attach and herald projection") {
    FockDensity with_anc = attach_fock_ancilla(fock_state_pair(1, 1, 4), 0);
    CHECK(with_anc.n_modes() == 3);
    HeraldResult res = project_last_mode(with_anc, {Herald::Kind::exactly, 0});
    CHECK(res.success_probability == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(res.state.n_modes() == 2);
    CHECK_THROWS_AS(project_last_mode(with_anc, {Herald::Kind::exactly, 2}),
                    PhysicsError);
  }
}

TEST_CASE("pure-loss Kraus channel") {
  SUBCASE("tau = 1 is the identity") {
    FockDensity tmsv = tmsv_fock(0.4, 10);
    CHECK((apply_loss_kraus(tmsv, 1, 1.0).rho() - tmsv.rho())
              .cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("tau = 0 resets the mode to vacuum") {
    FockDensity out = apply_loss_kraus(tmsv_fock(0.4, 8), 1, 0.0);
    CovarianceState cm = covariance_of_fock(out);
    CHECK(cm.block(1, 1).isApprox(Eigen::Matrix2d::Identity(), 1e-10));
    CHECK(cm.block(0, 1).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("trace preserved to 1e-10") {
    FockDensity state = tmsv_fock(0.3, 12);
    FockDensity out = apply_loss_kraus(state, 1, 0.43);
    CHECK(out.rho().trace().real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.trace_weight() ==
          doctest::Approx(state.trace_weight()).epsilon(1e-10));
  }
  SUBCASE("matches the Gaussian single-mode transfer at vacuum noise") {
    FockDensity lossy = apply_loss_kraus(tmsv_fock(0.3, 20), 1, 0.7);
    CovarianceState cm = covariance_of_fock(lossy);
    Eigen::MatrixXd expected =
        tmsv_single_mode_transfer(std::cosh(0.6), 0.7, 1.0).cov();
    CHECK((cm.cov() - expected).cwiseAbs().maxCoeff() < 1e-6);
  }
  SUBCASE("positivity spot check") {
    FockDensity out = apply_loss_kraus(tmsv_fock(0.5, 10), 0, 0.55);
    CHECK(out.min_eigenvalue() > -1e-9);
  }
}

TEST_CASE("logarithmic negativity in the Fock basis") {
  SUBCASE("separable states carry none") {
    CHECK(log_negativity_fock(fock_state_pair(0, 0, 4)) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("Bell pair carries exactly one ebit") {
    CHECK(log_negativity_fock(bell_pair(4)) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("TMSV matches the Gaussian closed form within 1e-4") {
    for (double r : {0.1, 0.3, 0.5}) {
      CHECK(std::abs(log_negativity_fock(tmsv_fock(r, 20)) -
                     2.0 * r * kLog2e) < 1e-4);
    }
  }
}

TEST_CASE("entropy of entanglement for pure states") {
  CHECK(entropy_of_entanglement_pure(bell_pair(4)) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(entropy_of_entanglement_pure(fock_state_pair(0, 0, 4)) ==
        doctest::Approx(0.0).epsilon(1e-12));

  // Geometric Schmidt spectrum of the TMSV.
  double c2 = std::cosh(0.5) * std::cosh(0.5);
  double s2 = std::sinh(0.5) * std::sinh(0.5);
  double expected = c2 * std::log2(c2) - s2 * std::log2(s2);
  CHECK(entropy_of_entanglement_pure(tmsv_fock(0.5, 20)) ==
        doctest::Approx(expected).epsilon(1e-6));

  // Mixed inputs are rejected toward log_negativity_fock.
  FockDensity mixed = apply_loss_kraus(tmsv_fock(0.5, 10), 1, 0.6);
  CHECK_THROWS_AS(entropy_of_entanglement_pure(mixed), std::invalid_argument);
}

TEST_CASE("ensemble averaging") {
  FockDensity zero = fock_state_pair(0, 0, 3);
  FockDensity one = fock_state_pair(1, 1, 3);

  SUBCASE("single state with unit weight is the identity") {
    FockDensity out = ensemble_average({zero}, {1.0});
    CHECK((out.rho() - zero.rho()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("diagonal mixtures are separable") {
    FockDensity mix = ensemble_average({zero, one}, {0.5, 0.5});
    CHECK(log_negativity_fock(mix) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("weight and shape validation") {
    CHECK_THROWS_AS(ensemble_average({zero, one}, {0.7, 0.7}),
                    std::invalid_argument);
    CHECK_THROWS_AS(ensemble_average({zero}, {}), std::invalid_argument);
    CHECK_THROWS_AS(
        ensemble_average({zero, fock_state_pair(0, 0, 4)}, {0.5, 0.5}),
        std::invalid_argument);
  }
}

TEST_CASE("covariance extraction from displaced states") {
  // Coherent state built by truncated displacement amplitudes.
  std::complex<double> alpha(0.7, -0.4);
  Eigen::VectorXcd psi = cvsat::testing::coherent_amplitudes(alpha, 20);
  FockDensity coherent(1, 20, psi * psi.adjoint());
  CovarianceState cm = covariance_of_fock(coherent);
  CHECK(cm.mean()(0) == doctest::Approx(2.0 * alpha.real()).epsilon(1e-5));
  CHECK(cm.mean()(1) == doctest::Approx(2.0 * alpha.imag()).epsilon(1e-5));
  CHECK((cm.cov() - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("heralded photon subtraction") {
  SUBCASE("subtracting from the two-mode vacuum is impossible") {
    CHECK_THROWS_AS(
        nongaussian_op(tmsv_fock(0.0, 8), NonGaussianKind::subtract,
                       NonGaussianSides::both, {0.9, 1}),
        PhysicsError);
  }
  SUBCASE("matches the independent pure-state series oracle") {
    double r = 0.3;
    double tau = 0.9;
    int cutoff = 12;
    HeraldResult res = nongaussian_op(tmsv_fock(r, cutoff),
                                      NonGaussianKind::subtract,
                                      NonGaussianSides::both, {tau, 1});
    SubtractOracle oracle = subtract_both_series(r, tau, cutoff);
    CHECK(res.success_probability ==
          doctest::Approx(oracle.probability).epsilon(1e-10));
    // Schmidt-form log negativity: E = 2 log2(sum of coefficients).
    double sum = 0.0;
    for (double c : oracle.schmidt) {
      sum += c;
    }
    CHECK(log_negativity_fock(res.state) ==
          doctest::Approx(2.0 * std::log2(sum)).epsilon(1e-8));
  }
  SUBCASE("beats the un-subtracted state through the same beam splitters") {
    double r = 0.3;
    double tau = 0.9;
    HeraldResult sub = nongaussian_op(tmsv_fock(r, 12),
                                      NonGaussianKind::subtract,
                                      NonGaussianSides::both, {tau, 1});
    FockDensity attenuated = apply_loss_kraus(
        apply_loss_kraus(tmsv_fock(r, 12), 0, tau), 1, tau);
    CHECK(log_negativity_fock(sub.state) >
          log_negativity_fock(attenuated));
    CHECK(sub.success_probability > 0.0);
    CHECK(sub.success_probability < 1.0);
  }
  SUBCASE("single-side subtraction keeps a two-mode state") {
    HeraldResult res = nongaussian_op(tmsv_fock(0.4, 10),
                                      NonGaussianKind::subtract,
                                      NonGaussianSides::mode2, {0.85, 1});
    CHECK(res.state.n_modes() == 2);
    CHECK(log_negativity_fock(res.state) > 0.0);
  }
  SUBCASE("on/off detector variant heralds on at least one photon") {
    NonGaussianOptions options;
    options.bs_tau = 0.9;
    options.on_off_detector = true;
    HeraldResult on_off = nongaussian_op(tmsv_fock(0.3, 10),
                                         NonGaussianKind::subtract,
                                         NonGaussianSides::both, options);
    HeraldResult pnr = nongaussian_op(tmsv_fock(0.3, 10),
                                      NonGaussianKind::subtract,
                                      NonGaussianSides::both, {0.9, 1});
    CHECK(on_off.success_probability > pnr.success_probability);
    CHECK(on_off.state.min_eigenvalue() > -1e-9);
  }
  SUBCASE("ideal-ladder benchmark is the bs_tau -> 1 limit") {
    NonGaussianOptions ideal;
    ideal.ideal_ladder = true;
    HeraldResult direct = nongaussian_op(tmsv_fock(0.3, 12),
                                         NonGaussianKind::subtract,
                                         NonGaussianSides::both, ideal);
    NonGaussianOptions nearly;
    nearly.bs_tau = 0.9995;
    HeraldResult bs = nongaussian_op(tmsv_fock(0.3, 12),
                                     NonGaussianKind::subtract,
                                     NonGaussianSides::both, nearly);
    CHECK(std::abs(log_negativity_fock(direct.state) -
                   log_negativity_fock(bs.state)) < 5e-3);
  }
  SUBCASE("fused herald agrees with the explicit attach-mix-project route") {
    double tau = 0.85;
    for (auto [kind, anc, herald_k] :
         {std::tuple{NonGaussianKind::subtract, 0, 1},
          std::tuple{NonGaussianKind::add, 1, 0},
          std::tuple{NonGaussianKind::replace, 1, 1}}) {
      FockDensity in = tmsv_fock(0.35, 8);
      NonGaussianOptions options;
      options.bs_tau = tau;
      HeraldResult fused = nongaussian_op(in, kind, NonGaussianSides::mode2,
                                          options);
      FockDensity joint = attach_fock_ancilla(in, anc);
      FockDensity mixed = apply_bs_pair(joint, 1, 2, tau);
      HeraldResult explicit_route =
          project_last_mode(mixed, {Herald::Kind::exactly, herald_k});
      // The explicit route renormalizes after the splitter, so its herald
      // probability is conditioned on in-box survival; the cumulative
      // trace weight is the exact common bookkeeping.
      double explicit_total =
          explicit_route.state.trace_weight() / in.trace_weight();
      CHECK(fused.success_probability ==
            doctest::Approx(explicit_total).epsilon(1e-12));
      CHECK((fused.state.rho() - explicit_route.state.rho())
                .cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("herald probabilities over one detector sum to unity") {
    FockDensity joint = attach_fock_ancilla(tmsv_fock(0.4, 8), 0);
    FockDensity mixed = apply_bs_pair(joint, 1, 2, 0.8);
    double total = 0.0;
    for (int k = 0; k <= 8; ++k) {
      try {
        total += project_last_mode(mixed, {Herald::Kind::exactly, k})
                     .success_probability;
      } catch (const PhysicsError&) {
        // zero-probability herald; contributes nothing
      }
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("heralded photon addition and replacement") {
  SUBCASE("addition on the vacuum yields the separable |1,1> product") {
    // Each side has exactly one photon to place, so the herald leaves the
    // deterministic product state; the success probability is the chance
    // (1 - tau) per side that the ancilla photon entered the signal port.
    HeraldResult res = nongaussian_op(tmsv_fock(0.0, 10),
                                      NonGaussianKind::add,
                                      NonGaussianSides::both, {0.9, 1});
    int d = 11;
    CHECK(res.state.rho()(1 * d + 1, 1 * d + 1).real() ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(log_negativity_fock(res.state) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(res.success_probability == doctest::Approx(0.01).epsilon(1e-10));
  }
  SUBCASE("addition on a weakly squeezed source beats the plain TMSV") {
    HeraldResult res = nongaussian_op(tmsv_fock(0.2, 10),
                                      NonGaussianKind::add,
                                      NonGaussianSides::both, {0.9, 1});
    CHECK(log_negativity_fock(res.state) >
          log_negativity_fock(tmsv_fock(0.2, 10)));
    CHECK(res.success_probability > 0.0);
    CHECK(res.success_probability < 1.0);
  }
  SUBCASE("addition increases the mean photon number") {
    FockDensity in = tmsv_fock(0.3, 10);
    HeraldResult res = nongaussian_op(in, NonGaussianKind::add,
                                      NonGaussianSides::both, {0.9, 1});
    CHECK(res.state.mean_photon_number() > in.mean_photon_number());
  }
  SUBCASE("replacement heralds a single photon per side") {
    HeraldResult res = nongaussian_op(tmsv_fock(0.3, 10),
                                      NonGaussianKind::replace,
                                      NonGaussianSides::both, {0.9, 1});
    CHECK(res.success_probability > 0.0);
    CHECK(res.success_probability < 1.0);
    CHECK(res.state.min_eigenvalue() > -1e-9);
  }
  SUBCASE("bs_tau outside (0, 1) is rejected for the beam-splitter model") {
    CHECK_THROWS_AS(nongaussian_op(tmsv_fock(0.3, 8), NonGaussianKind::add,
                                   NonGaussianSides::both, {1.0, 1}),
                    std::domain_error);
  }
}
