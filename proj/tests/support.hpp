#pragma once

// Shared helpers for the test suites: random physical-state generation and
// small Fock-space oracles kept independent of the library internals they
// check.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "cvsat/gaussian.hpp"
#include "cvsat/rng.hpp"

namespace cvsat::testing {

/// Random physical Gaussian state built from preparations and symplectic
/// transforms only (plus optional attenuation to mix it).
inline CovarianceState random_state(CounterRng& rng, uint64_t& counter,
                                    int n_modes, bool allow_mixing = true) {
  CovarianceState state = [&] {
    double r = 0.8 * rng.uniform(counter++);
    if (n_modes == 1) {
      return squeezed_state(r);
    }
    CovarianceState s = tmsv_state(0.1 + r);
    for (int m = 2; m < n_modes; ++m) {
      s = tensor(s, thermal_state(1.0 + 2.0 * rng.uniform(counter++)));
    }
    return s;
  }();
  for (int pass = 0; pass < 2 * n_modes; ++pass) {
    if (n_modes >= 2) {
      int i = static_cast<int>(rng.uniform(counter++) * n_modes) % n_modes;
      int j = (i + 1 + static_cast<int>(rng.uniform(counter++) * (n_modes - 1))) % n_modes;
      if (i != j) {
        state = apply_beam_splitter(state, i, j, 0.2 + 0.6 * rng.uniform(counter++));
      }
    }
    if (allow_mixing && rng.uniform(counter++) < 0.4) {
      int m = static_cast<int>(rng.uniform(counter++) * n_modes) % n_modes;
      state = attenuate(state, m, 0.5 + 0.5 * rng.uniform(counter++),
                        1.0 + rng.uniform(counter++));
    }
  }
  return state;
}

/// Truncated coherent-state amplitudes |alpha>, the displacement oracle.
inline Eigen::VectorXcd coherent_amplitudes(std::complex<double> alpha, int cutoff) {
  Eigen::VectorXcd psi(cutoff + 1);
  std::complex<double> term = std::exp(-0.5 * std::norm(alpha));
  psi(0) = term;
  for (int n = 1; n <= cutoff; ++n) {
    term *= alpha / std::sqrt(static_cast<double>(n));
    psi(n) = term;
  }
  return psi;
}

}  // namespace cvsat::testing
