#include <doctest.h>

#include <cmath>

#include "cvsat/errors.hpp"
#include "cvsat/fock.hpp"
#include "cvsat/gaussian.hpp"
#include "support.hpp"

using namespace cvsat;

namespace {
constexpr double kLog2e = 1.4426950408889634;
}

TEST_CASE("state preparation canonical forms") {
  CovarianceState vac = vacuum_state();
  CHECK(vac.cov().isApprox(Eigen::MatrixXd::Identity(2, 2)));
  CHECK(vac.mean().norm() == 0.0);

  CovarianceState coh = coherent_state(3.0, 5.0);
  CHECK(coh.mean()(0) == 3.0);
  CHECK(coh.mean()(1) == 5.0);
  CHECK(coh.cov().isApprox(Eigen::MatrixXd::Identity(2, 2)));

  CovarianceState th = thermal_state(5.0);
  CHECK(th.cov()(0, 0) == doctest::Approx(5.0));
  CHECK(th.cov()(1, 1) == doctest::Approx(5.0));

  CovarianceState sq = squeezed_state(0.5);
  CHECK(sq.cov()(0, 0) == doctest::Approx(std::exp(-1.0)));
  CHECK(sq.cov()(1, 1) == doctest::Approx(std::exp(1.0)));

  // r = 0 gives two vacua.
  CHECK(tmsv_state(0.0).cov().isApprox(Eigen::MatrixXd::Identity(4, 4)));

  CovarianceState tmsv = tmsv_state(0.5);
  CHECK(tmsv.cov()(0, 0) == doctest::Approx(1.5430806348152437).epsilon(1e-12));
  CHECK(tmsv.cov()(0, 2) == doctest::Approx(1.1752011936438014).epsilon(1e-12));
  CHECK(tmsv.cov()(1, 3) == doctest::Approx(-1.1752011936438014).epsilon(1e-12));

  CHECK_THROWS_AS(thermal_state(0.5), std::domain_error);
  CHECK_THROWS_AS(squeezed_state(-0.1), std::domain_error);
  CHECK_THROWS_AS(coherent_state(std::nan(""), 0.0), std::invalid_argument);
}

TEST_CASE("construction rejects bad matrices") {
  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(2, 2);
  asym(0, 1) = 1e-6;
  CHECK_THROWS_AS(CovarianceState(Eigen::VectorXd::Zero(2), asym),
                  std::invalid_argument);

  Eigen::MatrixXd tight = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(CovarianceState(Eigen::VectorXd::Zero(2), tight),
                  PhysicsError);

  CHECK_THROWS_AS(CovarianceState(Eigen::VectorXd::Zero(3),
                                  Eigen::MatrixXd::Identity(2, 2)),
                  std::invalid_argument);
}

TEST_CASE("beam splitter basics") {
  CovarianceState joint = tensor(vacuum_state(), thermal_state(5.0));

  SUBCASE("tau = 1 is the identity") {
    CovarianceState out = apply_beam_splitter(joint, 0, 1, 1.0);
    CHECK(out.cov().isApprox(joint.cov(), 1e-14));
  }
  SUBCASE("balanced mixing averages variances") {
    CovarianceState out = apply_beam_splitter(joint, 0, 1, 0.5);
    CHECK(out.block(0, 0)(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(out.block(1, 1)(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("vacuum is invariant at any tau") {
    CovarianceState two_vac = vacuum_state(2);
    CovarianceState out = apply_beam_splitter(two_vac, 0, 1, 0.37);
    CHECK(out.cov().isApprox(Eigen::MatrixXd::Identity(4, 4), 1e-14));
  }
  SUBCASE("bad arguments") {
    CHECK_THROWS_AS(apply_beam_splitter(joint, 0, 0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(apply_beam_splitter(joint, 0, 1, 1.5), std::domain_error);
    CHECK_THROWS_AS(apply_beam_splitter(joint, 0, 2, 0.5), std::out_of_range);
  }
}

TEST_CASE("attenuation reproduces the single-mode transfer closed form") {
  double r = 0.45;
  double v = std::cosh(2.0 * r);
  double tau = 0.62;
  double noise = 1.8;
  CovarianceState out = attenuate(tmsv_state(r), 1, tau, noise);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(4, 4);
  double c = std::sqrt(tau) * std::sqrt(v * v - 1.0);
  expected(0, 0) = expected(1, 1) = v;
  expected(2, 2) = expected(3, 3) = tau * v + (1.0 - tau) * noise;
  expected(0, 2) = expected(2, 0) = c;
  expected(1, 3) = expected(3, 1) = -c;
  CHECK((out.cov() - expected).cwiseAbs().maxCoeff() < 1e-12);

  SUBCASE("tau = 1 leaves the state untouched") {
    CovarianceState same = attenuate(tmsv_state(r), 1, 1.0, 3.0);
    CHECK(same.cov().isApprox(tmsv_state(r).cov(), 1e-13));
  }
  SUBCASE("full loss destroys correlations") {
    CovarianceState dead = attenuate(tmsv_state(0.5), 1, 0.0, 1.0);
    CHECK(dead.block(0, 1).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(dead.block(1, 1).isApprox(Eigen::Matrix2d::Identity(), 1e-13));
    CHECK(log_negativity_gaussian(dead) == 0.0);
  }
}

TEST_CASE("pure-loss semigroup: two beam-splitter stages with refreshed vacuum") {
  double r = 0.6;
  double t1 = 0.8;
  double t2 = 0.55;
  CovarianceState stage = attenuate(attenuate(tmsv_state(r), 1, t1, 1.0), 1, t2, 1.0);
  CovarianceState direct = attenuate(tmsv_state(r), 1, t1 * t2, 1.0);
  CHECK((stage.cov() - direct.cov()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("symplectic eigenvalues") {
  CHECK(symplectic_eigenvalues(vacuum_state().cov())[0] ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(symplectic_eigenvalues(thermal_state(5.0).cov())[0] ==
        doctest::Approx(5.0).epsilon(1e-12));
  auto nus = symplectic_eigenvalues(tmsv_state(0.5).cov());
  CHECK(nus[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(nus[1] == doctest::Approx(1.0).epsilon(1e-10));

  CHECK_THROWS_AS(symplectic_eigenvalues(Eigen::MatrixXd::Random(4, 4)),
                  std::invalid_argument);
}

TEST_CASE("general-N spectrum matches the two-mode closed form") {
  CounterRng rng(314, 0);
  uint64_t counter = 0;
  for (int trial = 0; trial < 40; ++trial) {
    CovarianceState state = cvsat::testing::random_state(rng, counter, 2);
    const Eigen::MatrixXd& m = state.cov();
    double det_a = m.block<2, 2>(0, 0).determinant();
    double det_b = m.block<2, 2>(2, 2).determinant();
    double det_c = m.block<2, 2>(0, 2).determinant();
    double delta = det_a + det_b + 2.0 * det_c;
    double disc = std::sqrt(std::max(0.0, delta * delta - 4.0 * m.determinant()));
    double lo = std::sqrt((delta - disc) / 2.0);
    double hi = std::sqrt((delta + disc) / 2.0);
    auto nus = symplectic_eigenvalues(m);
    CHECK(nus[0] == doctest::Approx(lo).epsilon(1e-10));
    CHECK(nus[1] == doctest::Approx(hi).epsilon(1e-10));
  }
}

TEST_CASE("von Neumann entropy") {
  CHECK(von_neumann_entropy(vacuum_state()) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(von_neumann_entropy(thermal_state(5.0)) ==
        doctest::Approx(2.7548875021634682).epsilon(1e-12));
  // Global TMSV is pure at any squeezing.
  for (double r : {0.1, 0.7, 1.3}) {
    CHECK(von_neumann_entropy(tmsv_state(r)) < 1e-8);
  }
  // g stays finite and tiny just above 1.
  CHECK(entropy_g(1.0) == 0.0);
  CHECK(entropy_g(1.0 + 1e-9) > 0.0);
  CHECK(entropy_g(1.0 + 1e-9) < 1e-7);
  CHECK_THROWS_AS(entropy_g(0.9), PhysicsError);
}

TEST_CASE("logarithmic negativity closed forms") {
  for (double r : {0.1, 0.25, 0.5, 1.0, 1.5}) {
    CHECK(log_negativity_gaussian(tmsv_state(r)) ==
          doctest::Approx(2.0 * r * kLog2e).epsilon(1e-9));
  }
  CHECK(log_negativity_gaussian(tmsv_state(0.0)) == 0.0);
  CHECK_THROWS_AS(log_negativity_gaussian(vacuum_state(1)),
                  std::invalid_argument);
}

TEST_CASE("measurement conditioning") {
  SUBCASE("product states are unaffected") {
    CovarianceState two_vac = vacuum_state(2);
    for (Measurement kind : {Measurement::homodyne_q, Measurement::homodyne_p,
                             Measurement::heterodyne}) {
      CovarianceState rest = condition_on_measurement(two_vac, 1, kind);
      CHECK(rest.cov().isApprox(Eigen::Matrix2d::Identity(), 1e-13));
    }
  }
  SUBCASE("homodyne on a TMSV squeezes the partner mode") {
    double v = std::cosh(1.0);
    CovarianceState rest =
        condition_on_measurement(tmsv_state(0.5), 1, Measurement::homodyne_q);
    CHECK(rest.cov()(0, 0) == doctest::Approx(1.0 / v).epsilon(1e-12));
    CHECK(rest.cov()(1, 1) == doctest::Approx(v).epsilon(1e-12));
  }
  SUBCASE("heterodyne on a TMSV collapses the partner to a coherent state") {
    // The covariance update A - C (B + I)^-1 C^T gives exactly unit
    // variance; the Fock oracle below confirms the collapse.
    CovarianceState rest =
        condition_on_measurement(tmsv_state(0.3), 1, Measurement::heterodyne);
    CHECK(rest.cov().isApprox(Eigen::Matrix2d::Identity(), 1e-12));
  }
  SUBCASE("Fock oracle confirms the heterodyne collapse at r = 0.3") {
    FockDensity tmsv = tmsv_fock(0.3, 20);
    CovarianceState from_fock = covariance_of_fock(tmsv);
    CovarianceState rest =
        condition_on_measurement(from_fock, 1, Measurement::heterodyne);
    CHECK((rest.cov() - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() <
          1e-6);
    // Projecting mode 2 of the TMSV onto a coherent state (one heterodyne
    // outcome) leaves mode 1 with quadrature variance exactly 1.
    auto alpha = std::complex<double>(0.35, -0.2);
    Eigen::VectorXcd proj = cvsat::testing::coherent_amplitudes(alpha, 20);
    int d = 21;
    Eigen::VectorXcd collapsed = Eigen::VectorXcd::Zero(d);
    double lambda = std::tanh(0.3);
    for (int n = 0; n < d; ++n) {
      double q_n = std::sqrt(1.0 - lambda * lambda) * std::pow(lambda, n);
      collapsed(n) = q_n * std::conj(proj(n));
    }
    collapsed.normalize();
    Eigen::MatrixXcd rho = collapsed * collapsed.adjoint();
    double mean_q = 0.0;
    double mean_qq = 0.0;
    for (int n = 0; n < d; ++n) {
      for (int m = 0; m < d; ++m) {
        double q_elem = 0.0;
        double qq_elem = 0.0;
        if (m == n + 1) q_elem = std::sqrt(double(n + 1));
        if (m + 1 == n) q_elem = std::sqrt(double(m + 1));
        if (m == n) qq_elem = 2.0 * n + 1.0;
        if (m == n + 2) qq_elem = std::sqrt(double((n + 1) * (n + 2)));
        if (m + 2 == n) qq_elem = std::sqrt(double((m + 1) * (m + 2)));
        mean_q += (rho(m, n) * q_elem).real();
        mean_qq += (rho(m, n) * qq_elem).real();
      }
    }
    CHECK(mean_qq - mean_q * mean_q == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("measurement never increases remainder entropy for pure states") {
    CounterRng rng(2718, 0);
    uint64_t counter = 0;
    for (int trial = 0; trial < 20; ++trial) {
      CovarianceState state =
          cvsat::testing::random_state(rng, counter, 2, /*allow_mixing=*/false);
      double before = von_neumann_entropy(partial_trace(state, {0}));
      for (Measurement kind : {Measurement::homodyne_q, Measurement::homodyne_p,
                               Measurement::heterodyne}) {
        double after =
            von_neumann_entropy(condition_on_measurement(state, 1, kind));
        CHECK(after <= before + 1e-8);
      }
    }
  }
}

TEST_CASE("Wigner density") {
  Eigen::VectorXd origin = Eigen::VectorXd::Zero(2);
  CHECK(wigner_density(vacuum_state(), origin) ==
        doctest::Approx(0.15915494309189535).epsilon(1e-12));
  Eigen::VectorXd peak(2);
  peak << 3.0, 5.0;
  CHECK(wigner_density(coherent_state(3.0, 5.0), peak) ==
        doctest::Approx(0.15915494309189535).epsilon(1e-12));
  CHECK(wigner_density(thermal_state(5.0), origin) ==
        doctest::Approx(0.03183098861837907).epsilon(1e-12));

  // Grid normalization over phase space.
  CovarianceState sq = squeezed_state(0.4);
  double total = 0.0;
  double step = 0.05;
  for (double q = -12.0; q <= 12.0; q += step) {
    for (double p = -12.0; p <= 12.0; p += step) {
      Eigen::VectorXd point(2);
      point << q, p;
      total += wigner_density(sq, point) * step * step;
    }
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("partial trace") {
  CovarianceState tmsv = tmsv_state(0.7);
  CovarianceState kept = partial_trace(tmsv, {0});
  CHECK(kept.cov().isApprox(std::cosh(1.4) * Eigen::Matrix2d::Identity(), 1e-12));

  CovarianceState joint = tensor(vacuum_state(), thermal_state(3.0));
  CHECK(partial_trace(joint, {1}).cov().isApprox(
      3.0 * Eigen::Matrix2d::Identity(), 1e-13));
  CHECK(partial_trace(joint, {0, 1}).cov().isApprox(joint.cov(), 1e-13));
  CHECK_THROWS_AS(partial_trace(joint, {}), std::invalid_argument);
}

TEST_CASE("two-mode standard form") {
  SUBCASE("TMSV is already standard") {
    TwoModeStandardForm f = standard_form(tmsv_state(0.5));
    CHECK(f.a == doctest::Approx(std::cosh(1.0)).epsilon(1e-12));
    CHECK(f.b == doctest::Approx(std::cosh(1.0)).epsilon(1e-12));
    CHECK(f.c_plus == doctest::Approx(std::sinh(1.0)).epsilon(1e-12));
    CHECK(f.c_minus == doctest::Approx(-std::sinh(1.0)).epsilon(1e-12));
  }
  SUBCASE("single-mode transfer output") {
    double v = std::cosh(0.8);
    double tau = 0.6;
    double noise = 2.0;
    TwoModeStandardForm f =
        standard_form(tmsv_single_mode_transfer(v, tau, noise));
    CHECK(f.a == doctest::Approx(v).epsilon(1e-10));
    CHECK(f.b == doctest::Approx(tau * v + (1 - tau) * noise).epsilon(1e-10));
    CHECK(f.c_plus ==
          doctest::Approx(std::sqrt(tau) * std::sqrt(v * v - 1)).epsilon(1e-10));
    CHECK(f.c_minus ==
          doctest::Approx(-std::sqrt(tau) * std::sqrt(v * v - 1)).epsilon(1e-10));
  }
  SUBCASE("two vacua") {
    TwoModeStandardForm f = standard_form(vacuum_state(2));
    CHECK(f.a == doctest::Approx(1.0));
    CHECK(f.b == doctest::Approx(1.0));
    CHECK(f.c_plus == doctest::Approx(0.0));
    CHECK(f.c_minus == doctest::Approx(0.0));
  }
  SUBCASE("reconstruction preserves the symplectic invariants") {
    CounterRng rng(99, 0);
    uint64_t counter = 0;
    for (int trial = 0; trial < 30; ++trial) {
      CovarianceState state = cvsat::testing::random_state(rng, counter, 2);
      TwoModeStandardForm f = standard_form(state);
      Eigen::MatrixXd rec = f.reconstruct();
      const Eigen::MatrixXd& m = state.cov();
      CHECK(rec.block<2, 2>(0, 0).determinant() ==
            doctest::Approx(m.block<2, 2>(0, 0).determinant()).epsilon(1e-8));
      CHECK(rec.block<2, 2>(2, 2).determinant() ==
            doctest::Approx(m.block<2, 2>(2, 2).determinant()).epsilon(1e-8));
      CHECK(rec.block<2, 2>(0, 2).determinant() ==
            doctest::Approx(m.block<2, 2>(0, 2).determinant()).epsilon(1e-8));
      CHECK(rec.determinant() ==
            doctest::Approx(m.determinant()).epsilon(1e-7));
    }
  }
}

TEST_CASE("physicality and purity preserved across random pipelines") {
  CounterRng rng(777, 0);
  uint64_t counter = 0;
  for (int trial = 0; trial < 30; ++trial) {
    int n = 2 + static_cast<int>(rng.uniform(counter++) * 2);
    // Construction enforces physicality; reaching here means every
    // intermediate state passed the nu >= 1 check.
    CovarianceState state = cvsat::testing::random_state(rng, counter, n);
    auto nus = symplectic_eigenvalues(state.cov());
    CHECK(nus.front() >= 1.0 - 1e-9);
  }

  // Purity: symplectic-only pipelines keep det = 1; attenuation increases it.
  CovarianceState pure = apply_beam_splitter(tmsv_state(0.9), 0, 1, 0.3);
  CHECK(pure.cov().determinant() == doctest::Approx(1.0).epsilon(1e-9));
  CovarianceState mixed = attenuate(pure, 0, 0.7, 1.4);
  CHECK(mixed.cov().determinant() > 1.0 + 1e-6);
}

TEST_CASE("covariance JSON serialization is row major") {
  std::string json = cov_to_json(vacuum_state());
  CHECK(json == "{\"n_modes\":1,\"mean\":[0,0],\"cov\":[1,0,0,1]}");
}
