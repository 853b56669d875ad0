#include "cvsat/fock.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

#include "cvsat/errors.hpp"
#include <string>

namespace cvsat {

namespace {

using Complex = std::complex<double>;

constexpr double kHermitianTol = 1e-10;
constexpr double kTruncationFloor = 0.999;
constexpr double kHeraldFloor = 1e-300;

int pow_int(int base, int exp) {
  int out = 1;
  for (int i = 0; i < exp; ++i) {
    out *= base;
  }
  return out;
}

void check_mode(const FockDensity& state, int mode) {
  if (mode < 0 || mode >= state.n_modes()) {
    throw std::out_of_range("Fock mode index out of range");
  }
}

// Column stride of a mode index in the flattened basis (last mode fastest).
int mode_stride(const FockDensity& state, int mode) {
  return pow_int(state.mode_dim(), state.n_modes() - 1 - mode);
}

// Sparse two-mode beam-splitter matrix: one triplet list, exactly unitary
// on every total-photon subspace contained in the box truncation.
struct Triplet {
  int row;
  int col;
  double value;
};

std::vector<Triplet> bs_pair_matrix(int d, double tau) {
  double t = std::sqrt(tau);
  double r = std::sqrt(1.0 - tau);
  // Exact binomials (Pascal) and cumulative powers: the alternating sums
  // below cancel heavily, so every term must carry full precision.
  std::vector<std::vector<double>> choose(2 * d);
  for (int n = 0; n < 2 * d; ++n) {
    choose[n].assign(n + 1, 1.0);
    for (int k = 1; k < n; ++k) {
      choose[n][k] = choose[n - 1][k - 1] + choose[n - 1][k];
    }
  }
  std::vector<double> t_pow(2 * d, 1.0);
  std::vector<double> r_pow(2 * d, 1.0);
  for (int k = 1; k < 2 * d; ++k) {
    t_pow[k] = t_pow[k - 1] * t;
    r_pow[k] = r_pow[k - 1] * r;
  }
  std::vector<double> fact(2 * d, 1.0);
  for (int n = 1; n < 2 * d; ++n) {
    fact[n] = fact[n - 1] * n;
  }
  std::vector<Triplet> out;
  Eigen::VectorXd amps(2 * d);
  for (int n1 = 0; n1 < d; ++n1) {
    for (int n2 = 0; n2 < d; ++n2) {
      int n = n1 + n2;
      amps.setZero();
      for (int i = 0; i <= n1; ++i) {
        for (int j = 0; j <= n2; ++j) {
          double amp = choose[n1][i] * choose[n2][j] * t_pow[i + n2 - j] *
                       ((n1 - i) % 2 ? -1.0 : 1.0) * r_pow[n1 - i + j];
          amps(i + j) += amp;
        }
      }
      for (int m1 = std::max(0, n - (d - 1)); m1 <= std::min(n, d - 1); ++m1) {
        int m2 = n - m1;
        double scale = std::sqrt(fact[m1] * fact[m2] / (fact[n1] * fact[n2]));
        double value = amps(m1) * scale;
        if (value != 0.0) {
          out.push_back({m1 * d + m2, n1 * d + n2, value});
        }
      }
    }
  }
  return out;
}

}  // namespace

FockDensity::FockDensity(int n_modes, int cutoff, Eigen::MatrixXcd rho,
                         double trace_weight)
    : n_modes_(n_modes), cutoff_(cutoff), rho_(std::move(rho)),
      trace_weight_(trace_weight) {
  if (n_modes_ < 1 || n_modes_ > 3) {
    throw std::invalid_argument("FockDensity supports 1 to 3 modes");
  }
  if (cutoff_ < 1) {
    throw std::invalid_argument("Fock cutoff must be >= 1");
  }
  int d = pow_int(cutoff_ + 1, n_modes_);
  if (rho_.rows() != d || rho_.cols() != d) {
    throw std::invalid_argument("density matrix dimension does not match cutoff");
  }
  if (!(trace_weight_ > 0.0) || trace_weight_ > 1.0 + 1e-9) {
    throw std::invalid_argument("trace weight must lie in (0, 1]");
  }
  double scale = std::max(1.0, rho_.cwiseAbs().maxCoeff());
  if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol * scale) {
    throw std::invalid_argument("density matrix is not Hermitian");
  }
  rho_ = ((rho_ + rho_.adjoint()) / 2.0).eval();
  double tr = rho_.trace().real();
  if (!(tr > 0.0)) {
    throw std::domain_error("density matrix has non-positive trace");
  }
  if (std::abs(tr - 1.0) > kHermitianTol) {
    rho_ /= tr;
  }
}

double FockDensity::purity() const {
  return (rho_ * rho_).trace().real();
}

double FockDensity::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho_,
                                                         Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double FockDensity::top_level_population(int mode) const {
  check_mode(*this, mode);
  int stride = mode_stride(*this, mode);
  int d = mode_dim();
  double pop = 0.0;
  for (int idx = 0; idx < dim(); ++idx) {
    if ((idx / stride) % d == cutoff_) {
      pop += rho_(idx, idx).real();
    }
  }
  return pop;
}

double FockDensity::mean_photon_number() const {
  int d = mode_dim();
  double total = 0.0;
  for (int idx = 0; idx < dim(); ++idx) {
    int rest = idx;
    int photons = 0;
    for (int m = 0; m < n_modes_; ++m) {
      photons += rest % d;
      rest /= d;
    }
    total += photons * rho_(idx, idx).real();
  }
  return total;
}

FockDensity tmsv_fock(double r, int cutoff, bool allow_heavy_truncation) {
  if (cutoff < 1) {
    throw std::invalid_argument("Fock cutoff must be >= 1");
  }
  double lambda = std::tanh(r);
  int d = cutoff + 1;
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(d * d);
  double raw_trace = 0.0;
  for (int n = 0; n <= cutoff; ++n) {
    double q = std::sqrt(1.0 - lambda * lambda) * std::pow(lambda, n);
    psi(n * d + n) = q;
    raw_trace += q * q;
  }
  if (raw_trace < kTruncationFloor && !allow_heavy_truncation) {
    throw std::domain_error(
        "TMSV truncation retains trace " + std::to_string(raw_trace) +
        " < 0.999; raise the cutoff or allow heavy truncation");
  }
  Eigen::MatrixXcd rho = psi * psi.adjoint() / raw_trace;
  return FockDensity(2, cutoff, std::move(rho), raw_trace);
}

FockDensity fock_state(int photons, int cutoff) {
  if (photons < 0 || photons > cutoff) {
    throw std::invalid_argument("photon number outside the truncated space");
  }
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(cutoff + 1, cutoff + 1);
  rho(photons, photons) = 1.0;
  return FockDensity(1, cutoff, std::move(rho));
}

FockDensity fock_state_pair(int n1, int n2, int cutoff) {
  if (n1 < 0 || n1 > cutoff || n2 < 0 || n2 > cutoff) {
    throw std::invalid_argument("photon number outside the truncated space");
  }
  int d = cutoff + 1;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d * d, d * d);
  rho(n1 * d + n2, n1 * d + n2) = 1.0;
  return FockDensity(2, cutoff, std::move(rho));
}

LadderResult apply_ladder(const FockDensity& state, int mode, Ladder which,
                          bool allow_truncation) {
  check_mode(state, mode);
  if (which == Ladder::create && !allow_truncation &&
      state.top_level_population(mode) > 1e-6) {
    throw std::domain_error(
        "creation would overflow a populated top Fock level; raise the cutoff");
  }
  int d = state.mode_dim();
  int stride = mode_stride(state, mode);
  int dim = state.dim();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  // One-band structure: annihilation shifts n -> n-1 with sqrt(n),
  // creation n -> n+1 with sqrt(n+1) (dropping the top level).
  auto shifted = [&](int idx, int delta) { return idx + delta * stride; };
  for (int row = 0; row < dim; ++row) {
    int n_row = (row / stride) % d;
    for (int col = 0; col < dim; ++col) {
      int n_col = (col / stride) % d;
      if (which == Ladder::annihilate) {
        if (n_row >= 1 && n_col >= 1) {
          out(shifted(row, -1), shifted(col, -1)) +=
              std::sqrt(double(n_row)) * std::sqrt(double(n_col)) *
              state.rho()(row, col);
        }
      } else {
        if (n_row < d - 1 && n_col < d - 1) {
          out(shifted(row, +1), shifted(col, +1)) +=
              std::sqrt(double(n_row + 1)) * std::sqrt(double(n_col + 1)) *
              state.rho()(row, col);
        }
      }
    }
  }
  double weight = out.trace().real();
  if (weight <= kHeraldFloor) {
    Eigen::MatrixXcd vac = Eigen::MatrixXcd::Zero(dim, dim);
    vac(0, 0) = 1.0;
    return {FockDensity(state.n_modes(), state.cutoff(), std::move(vac),
                        state.trace_weight()),
            0.0};
  }
  return {FockDensity(state.n_modes(), state.cutoff(), out / weight,
                      state.trace_weight()),
          weight};
}

FockDensity apply_bs_pair(const FockDensity& state, int mode_a, int mode_b,
                          double tau) {
  check_mode(state, mode_a);
  check_mode(state, mode_b);
  if (mode_a == mode_b) {
    throw std::invalid_argument("beam splitter needs two distinct modes");
  }
  if (tau < 0.0 || tau > 1.0) {
    throw std::domain_error("beam-splitter transmissivity must be in [0, 1]");
  }
  // Bring the pair to the trailing positions so the unitary factors as
  // I (x) B and applies blockwise.
  int last = state.n_modes() - 1;
  int second = state.n_modes() - 2;
  if (mode_a != second || mode_b != last) {
    std::vector<std::pair<int, int>> swaps;
    int a = mode_a;
    int b = mode_b;
    if (b != last) {
      swaps.emplace_back(b, last);
      if (a == last) {
        a = b;
      }
      b = last;
    }
    if (a != second) {
      swaps.emplace_back(a, second);
    }
    FockDensity arranged = state;
    for (auto [x, y] : swaps) {
      arranged = swap_fock_modes(arranged, x, y);
    }
    FockDensity mixed = apply_bs_pair(arranged, second, last, tau);
    for (auto it = swaps.rbegin(); it != swaps.rend(); ++it) {
      mixed = swap_fock_modes(mixed, it->first, it->second);
    }
    return mixed;
  }

  int d = state.mode_dim();
  int pair_dim = d * d;
  int rest = state.dim() / pair_dim;
  std::vector<Triplet> bs = bs_pair_matrix(d, tau);

  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(state.dim(), state.dim());
  Eigen::MatrixXcd tmp(pair_dim, pair_dim);
  for (int br = 0; br < rest; ++br) {
    for (int bc = 0; bc < rest; ++bc) {
      const auto block = state.rho().block(br * pair_dim, bc * pair_dim,
                                           pair_dim, pair_dim);
      tmp.setZero();
      for (const Triplet& t : bs) {
        tmp.row(t.row) += t.value * block.row(t.col);
      }
      auto out_block = out.block(br * pair_dim, bc * pair_dim, pair_dim, pair_dim);
      for (const Triplet& t : bs) {
        out_block.col(t.row) += t.value * tmp.col(t.col);
      }
    }
  }
  double retained = out.trace().real();
  if (!(retained > 0.0)) {
    throw std::domain_error("beam splitter lost the entire truncated state");
  }
  return FockDensity(state.n_modes(), state.cutoff(), out / retained,
                     state.trace_weight() * std::min(1.0, retained));
}

FockDensity apply_two_mode_bs(const FockDensity& state, double tau) {
  if (state.n_modes() != 2) {
    throw std::invalid_argument("apply_two_mode_bs expects a two-mode state");
  }
  return apply_bs_pair(state, 0, 1, tau);
}

FockDensity apply_loss_kraus(const FockDensity& state, int mode, double tau) {
  check_mode(state, mode);
  if (tau < 0.0 || tau > 1.0) {
    throw std::domain_error("channel transmissivity must be in [0, 1]");
  }
  int d = state.mode_dim();
  int stride = mode_stride(state, mode);
  int dim = state.dim();
  std::vector<double> log_fact(d + 1, 0.0);
  for (int n = 1; n <= d; ++n) {
    log_fact[n] = log_fact[n - 1] + std::log(static_cast<double>(n));
  }
  // g_l(n) = sqrt(binom(n, l) (1-tau)^l tau^(n-l)); exactly trace
  // preserving on the truncated space (binomial identity).
  auto g = [&](int n, int l) {
    if (n < l) {
      return 0.0;
    }
    double log_binom = log_fact[n] - log_fact[l] - log_fact[n - l];
    double value = std::exp(0.5 * log_binom) *
                   std::pow(1.0 - tau, 0.5 * l) * std::pow(tau, 0.5 * (n - l));
    return value;
  };
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  for (int l = 0; l < d; ++l) {
    for (int row = 0; row < dim; ++row) {
      int n_row = (row / stride) % d;
      if (n_row < l) {
        continue;
      }
      double g_row = g(n_row, l);
      if (g_row == 0.0) {
        continue;
      }
      for (int col = 0; col < dim; ++col) {
        int n_col = (col / stride) % d;
        if (n_col < l) {
          continue;
        }
        out(row - l * stride, col - l * stride) +=
            g_row * g(n_col, l) * state.rho()(row, col);
      }
    }
  }
  return FockDensity(state.n_modes(), state.cutoff(), std::move(out),
                     state.trace_weight());
}

FockDensity attach_fock_ancilla(const FockDensity& state, int photons) {
  if (photons < 0 || photons > state.cutoff()) {
    throw std::invalid_argument("ancilla photon number outside the truncated space");
  }
  if (state.n_modes() >= 3) {
    throw std::invalid_argument("ancilla would exceed the three-mode working budget");
  }
  int d = state.mode_dim();
  int dim = state.dim();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim * d, dim * d);
  for (int row = 0; row < dim; ++row) {
    for (int col = 0; col < dim; ++col) {
      out(row * d + photons, col * d + photons) = state.rho()(row, col);
    }
  }
  return FockDensity(state.n_modes() + 1, state.cutoff(), std::move(out),
                     state.trace_weight());
}

FockDensity swap_fock_modes(const FockDensity& state, int mode_a, int mode_b) {
  check_mode(state, mode_a);
  check_mode(state, mode_b);
  if (mode_a == mode_b) {
    return state;
  }
  int d = state.mode_dim();
  int dim = state.dim();
  int sa = mode_stride(state, mode_a);
  int sb = mode_stride(state, mode_b);
  std::vector<int> perm(dim);
  for (int idx = 0; idx < dim; ++idx) {
    int na = (idx / sa) % d;
    int nb = (idx / sb) % d;
    perm[idx] = idx + (nb - na) * sa + (na - nb) * sb;
  }
  Eigen::MatrixXcd out(dim, dim);
  for (int row = 0; row < dim; ++row) {
    for (int col = 0; col < dim; ++col) {
      out(perm[row], perm[col]) = state.rho()(row, col);
    }
  }
  return FockDensity(state.n_modes(), state.cutoff(), std::move(out),
                     state.trace_weight());
}

HeraldResult project_last_mode(const FockDensity& state, Herald herald) {
  if (state.n_modes() < 2) {
    throw std::invalid_argument("projection needs at least two modes");
  }
  int d = state.mode_dim();
  int rest = state.dim() / d;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rest, rest);
  int k_lo = 0;
  int k_hi = 0;
  if (herald.kind == Herald::Kind::exactly) {
    if (herald.photons < 0 || herald.photons > state.cutoff()) {
      throw std::invalid_argument("herald photon count outside the truncated space");
    }
    k_lo = k_hi = herald.photons;
  } else {
    k_lo = 1;
    k_hi = state.cutoff();
  }
  for (int k = k_lo; k <= k_hi; ++k) {
    for (int row = 0; row < rest; ++row) {
      for (int col = 0; col < rest; ++col) {
        out(row, col) += state.rho()(row * d + k, col * d + k);
      }
    }
  }
  double probability = out.trace().real();
  if (probability <= kHeraldFloor) {
    throw PhysicsError("herald impossible: outcome has zero probability");
  }
  return {FockDensity(state.n_modes() - 1, state.cutoff(), out / probability,
                      std::min(1.0, state.trace_weight() * probability)),
          probability};
}

namespace {

// Conditional beam-splitter operator <k|_anc B |m>_anc acting on the
// signal mode alone: since the ancilla enters pure and leaves projected,
// the attach-mix-project sandwich collapses to one d x d matrix per
// herald outcome.
Eigen::MatrixXd conditional_bs_operator(int d, double tau, int ancilla_in,
                                        int herald_out) {
  Eigen::MatrixXd op = Eigen::MatrixXd::Zero(d, d);
  for (const Triplet& t : bs_pair_matrix(d, tau)) {
    if (t.col % d == ancilla_in && t.row % d == herald_out) {
      op(t.row / d, t.col / d) = t.value;
    }
  }
  return op;
}

// rho' = sum_k (T_k on one mode) rho (T_k on one mode)+, with the summed
// outcome probability.
std::pair<Eigen::MatrixXcd, double> apply_conditional_ops(
    const FockDensity& state, int mode,
    const std::vector<Eigen::MatrixXd>& ops) {
  int d = state.mode_dim();
  int stride = mode_stride(state, mode);
  int dim = state.dim();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  Eigen::MatrixXcd half(dim, dim);
  for (const Eigen::MatrixXd& op : ops) {
    half.setZero();
    // half = (T on mode) rho: digit n_row maps to n with weight T[n, n_row].
    for (int row = 0; row < dim; ++row) {
      int n_row = (row / stride) % d;
      int base = row - n_row * stride;
      for (int n = 0; n < d; ++n) {
        double t = op(n, n_row);
        if (t != 0.0) {
          half.row(base + n * stride).noalias() += t * state.rho().row(row);
        }
      }
    }
    // out += half (T on mode)+ on the columns (T is real).
    for (int col = 0; col < dim; ++col) {
      int n_col = (col / stride) % d;
      int base = col - n_col * stride;
      for (int n = 0; n < d; ++n) {
        double t = op(n, n_col);
        if (t != 0.0) {
          out.col(base + n * stride).noalias() += t * half.col(col);
        }
      }
    }
  }
  double probability = out.trace().real();
  return {std::move(out), probability};
}

HeraldResult herald_one_side(const FockDensity& state, int side,
                             NonGaussianKind kind,
                             const NonGaussianOptions& options) {
  if (kind == NonGaussianKind::subtract && options.ideal_ladder) {
    LadderResult sub = apply_ladder(state, side, Ladder::annihilate);
    if (sub.weight <= kHeraldFloor) {
      throw PhysicsError("herald impossible: no photons to subtract");
    }
    // Bare-ladder benchmark: the tau -> 1 limit of the beam-splitter
    // model; the weight is a relative factor, not a probability.
    return {sub.state, std::min(1.0, sub.weight)};
  }
  int ancilla_photons = (kind == NonGaussianKind::subtract) ? 0 : 1;
  int d = state.mode_dim();
  std::vector<Eigen::MatrixXd> ops;
  switch (kind) {
    case NonGaussianKind::subtract:
      if (options.on_off_detector) {
        for (int k = 1; k < d; ++k) {
          ops.push_back(conditional_bs_operator(d, options.bs_tau,
                                                ancilla_photons, k));
        }
      } else {
        if (options.herald_photons > state.cutoff()) {
          throw std::invalid_argument("herald photon count outside the truncated space");
        }
        ops.push_back(conditional_bs_operator(d, options.bs_tau,
                                              ancilla_photons,
                                              options.herald_photons));
      }
      break;
    case NonGaussianKind::add:
      ops.push_back(conditional_bs_operator(d, options.bs_tau,
                                            ancilla_photons, 0));
      break;
    case NonGaussianKind::replace:
      if (options.herald_photons > state.cutoff()) {
        throw std::invalid_argument("herald photon count outside the truncated space");
      }
      ops.push_back(conditional_bs_operator(d, options.bs_tau, ancilla_photons,
                                            options.herald_photons));
      break;
  }
  auto [rho, probability] = apply_conditional_ops(state, side, ops);
  if (probability <= kHeraldFloor) {
    throw PhysicsError("herald impossible: outcome has zero probability");
  }
  return {FockDensity(state.n_modes(), state.cutoff(), rho / probability,
                      std::min(1.0, state.trace_weight() * probability)),
          probability};
}

}  // namespace

HeraldResult nongaussian_op(const FockDensity& state, NonGaussianKind kind,
                            NonGaussianSides sides,
                            const NonGaussianOptions& options) {
  if (state.n_modes() != 2) {
    throw std::invalid_argument("non-Gaussian operations expect a two-mode state");
  }
  if (!(options.bs_tau > 0.0) || options.bs_tau >= 1.0) {
    if (!(kind == NonGaussianKind::subtract && options.ideal_ladder)) {
      throw std::domain_error("non-Gaussian beam-splitter transmissivity must lie in (0, 1)");
    }
  }
  if (options.herald_photons < 1) {
    throw std::domain_error("herald photon count must be >= 1");
  }
  std::vector<int> targets;
  switch (sides) {
    case NonGaussianSides::mode1: targets = {0}; break;
    case NonGaussianSides::mode2: targets = {1}; break;
    case NonGaussianSides::both: targets = {0, 1}; break;
  }
  FockDensity current = state;
  double probability = 1.0;
  for (int side : targets) {
    HeraldResult step = herald_one_side(current, side, kind, options);
    current = step.state;
    probability *= step.success_probability;
  }
  return {current, probability};
}

double log_negativity_fock(const FockDensity& state) {
  if (state.n_modes() != 2) {
    throw std::invalid_argument("logarithmic negativity expects a two-mode state");
  }
  int d = state.mode_dim();
  int dim = state.dim();
  Eigen::MatrixXcd pt(dim, dim);
  for (int m1 = 0; m1 < d; ++m1) {
    for (int m2 = 0; m2 < d; ++m2) {
      for (int n1 = 0; n1 < d; ++n1) {
        for (int n2 = 0; n2 < d; ++n2) {
          pt(m1 * d + m2, n1 * d + n2) = state.rho()(m1 * d + n2, n1 * d + m2);
        }
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(pt,
                                                         Eigen::EigenvaluesOnly);
  double negativity = 0.0;
  for (int i = 0; i < dim; ++i) {
    double lambda = solver.eigenvalues()(i);
    if (lambda < 0.0) {
      negativity -= lambda;
    }
  }
  return std::log2(1.0 + 2.0 * negativity);
}

double entropy_of_entanglement_pure(const FockDensity& state) {
  if (state.n_modes() != 2) {
    throw std::invalid_argument("entropy of entanglement expects a two-mode state");
  }
  if (state.purity() < 1.0 - 1e-6) {
    throw std::invalid_argument(
        "entropy of entanglement requires a pure state; use log_negativity_fock "
        "for mixed states");
  }
  int d = state.mode_dim();
  Eigen::MatrixXcd reduced = Eigen::MatrixXcd::Zero(d, d);
  for (int n1 = 0; n1 < d; ++n1) {
    for (int m1 = 0; m1 < d; ++m1) {
      for (int k = 0; k < d; ++k) {
        reduced(n1, m1) += state.rho()(n1 * d + k, m1 * d + k);
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(reduced,
                                                         Eigen::EigenvaluesOnly);
  double entropy = 0.0;
  for (int i = 0; i < d; ++i) {
    double p = solver.eigenvalues()(i);
    if (p > 1e-15) {
      entropy -= p * std::log2(p);
    }
  }
  return std::max(0.0, entropy);
}

FockDensity ensemble_average(const std::vector<FockDensity>& states,
                             const std::vector<double>& weights) {
  if (states.empty() || states.size() != weights.size()) {
    throw std::invalid_argument("ensemble needs matching non-empty states and weights");
  }
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) {
      throw std::invalid_argument("ensemble weights must be >= 0");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw std::invalid_argument("ensemble weights must sum to 1 (got " +
                                std::to_string(total) + ")");
  }
  const FockDensity& first = states.front();
  Eigen::MatrixXcd mix = Eigen::MatrixXcd::Zero(first.dim(), first.dim());
  double weight = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].n_modes() != first.n_modes() ||
        states[i].cutoff() != first.cutoff()) {
      throw std::invalid_argument("ensemble states must share mode count and cutoff");
    }
    mix += weights[i] * states[i].rho();
    weight += weights[i] * states[i].trace_weight();
  }
  return FockDensity(first.n_modes(), first.cutoff(), std::move(mix),
                     std::min(1.0, weight / total));
}

namespace {

// Operators with at most one nonzero per column ("band maps"): enough for
// ladder monomials, and expectation values cost O(dim).
struct BandMap {
  std::vector<int> row;        // -1 marks an annihilated column
  std::vector<Complex> value;
};

BandMap ladder_map(const FockDensity& state, int mode, bool dagger) {
  int d = state.mode_dim();
  int stride = mode_stride(state, mode);
  BandMap map;
  map.row.assign(state.dim(), -1);
  map.value.assign(state.dim(), Complex(0.0, 0.0));
  for (int c = 0; c < state.dim(); ++c) {
    int n = (c / stride) % d;
    if (!dagger && n >= 1) {
      map.row[c] = c - stride;
      map.value[c] = std::sqrt(double(n));
    } else if (dagger && n < d - 1) {
      map.row[c] = c + stride;
      map.value[c] = std::sqrt(double(n + 1));
    }
  }
  return map;
}

BandMap compose(const BandMap& left, const BandMap& right) {
  BandMap out;
  out.row.assign(right.row.size(), -1);
  out.value.assign(right.row.size(), Complex(0.0, 0.0));
  for (std::size_t c = 0; c < right.row.size(); ++c) {
    int mid = right.row[c];
    if (mid >= 0 && left.row[mid] >= 0) {
      out.row[c] = left.row[mid];
      out.value[c] = left.value[mid] * right.value[c];
    }
  }
  return out;
}

// tr(rho * op): column c of the band map holds op[row(c), c], so the
// diagonal of (rho * op) picks rho(c, row(c)).
Complex expectation(const Eigen::MatrixXcd& rho, const BandMap& op) {
  Complex total(0.0, 0.0);
  for (std::size_t c = 0; c < op.row.size(); ++c) {
    if (op.row[c] >= 0) {
      total += rho(static_cast<int>(c), op.row[c]) * op.value[c];
    }
  }
  return total;
}

}  // namespace

CovarianceState covariance_of_fock(const FockDensity& state) {
  int n = state.n_modes();
  const Complex im(0.0, 1.0);

  // Quadrature operators as band-map pairs: q = a + a+, p = i(a+ - a).
  std::vector<BandMap> lower(n);
  std::vector<BandMap> raise(n);
  for (int m = 0; m < n; ++m) {
    lower[m] = ladder_map(state, m, false);
    raise[m] = ladder_map(state, m, true);
  }

  Eigen::VectorXd mean(2 * n);
  for (int m = 0; m < n; ++m) {
    Complex a = expectation(state.rho(), lower[m]);
    mean(2 * m) = 2.0 * a.real();
    mean(2 * m + 1) = 2.0 * a.imag();
  }

  // <R_i R_j> expands into four ordered ladder products; the symmetrized
  // moment is its real part.
  Eigen::MatrixXd cov(2 * n, 2 * n);
  for (int i = 0; i < 2 * n; ++i) {
    int mi = i / 2;
    bool pi = i % 2;
    for (int j = i; j < 2 * n; ++j) {
      int mj = j / 2;
      bool pj = j % 2;
      Complex aa = expectation(state.rho(), compose(lower[mi], lower[mj]));
      Complex ad = expectation(state.rho(), compose(lower[mi], raise[mj]));
      Complex da = expectation(state.rho(), compose(raise[mi], lower[mj]));
      Complex dd = expectation(state.rho(), compose(raise[mi], raise[mj]));
      Complex second;
      if (!pi && !pj) {
        second = aa + ad + da + dd;
      } else if (!pi && pj) {
        second = im * (ad - aa + dd - da);
      } else if (pi && !pj) {
        second = im * (da + dd - aa - ad);
      } else {
        second = -(aa - ad - da + dd);
      }
      double sym = second.real() - mean(i) * mean(j);
      cov(i, j) = sym;
      cov(j, i) = sym;
    }
  }
  return CovarianceState(mean, cov);
}

}  // namespace cvsat
