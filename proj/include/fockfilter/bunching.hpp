#pragma once

// Conditional bunching of Fock-state copies: balanced beamsplitter on two
// modes, second mode heralded on vacuum. Longer chains cascade pairwise.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "fockfilter/fock_core.hpp"

namespace fockfilter {

/// Two-mode density matrix, index (i, j) -> i * dim + j (mode 1, mode 2).
class TwoModeState {
 public:
  TwoModeState(FockSpace space, Matrix rho) : space_(space), rho_(std::move(rho)) {
    const int d2 = space.dim() * space.dim();
    if (rho_.rows() != d2 || rho_.cols() != d2) throw InvalidArgument("TwoModeState: shape mismatch");
    if (detail::hermiticity_defect(rho_) > 1e-9 * std::max(1.0, rho_.cwiseAbs().maxCoeff()))
      throw InvalidArgument("TwoModeState: rho is not Hermitian");
    rho_ = 0.5 * (rho_ + rho_.adjoint()).eval();
  }

  static TwoModeState product(const FieldState& a, const FieldState& b) {
    if (a.dim() != b.dim()) throw InvalidArgument("TwoModeState::product: spaces differ");
    return {a.space(), Eigen::kroneckerProduct(a.rho(), b.rho()).eval()};
  }

  const Matrix& rho() const noexcept { return rho_; }
  FockSpace space() const noexcept { return space_; }
  int dim() const noexcept { return space_.dim(); }
  double trace() const { return rho_.trace().real(); }

  /// P(N = n1 + n2).
  Distribution total_number_distribution() const {
    const int d = dim();
    Distribution p = Distribution::Zero(2 * d - 1);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) p[i + j] += rho_(i * d + j, i * d + j).real();
    return p;
  }

  FieldState reduced(int mode) const {
    const int d = dim();
    Matrix out = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k)
        for (int j = 0; j < d; ++j)
          out(i, k) += mode == 0 ? rho_(i * d + j, k * d + j) : rho_(j * d + i, j * d + k);
    return {space_, std::move(out)};
  }

  /// <n2 = 0| rho |n2 = 0> on mode 1 (unnormalized).
  FieldState project_second_on_vacuum() const {
    const int d = dim();
    Matrix out(d, d);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) out(i, k) = rho_(i * d, k * d);
    return {space_, std::move(out)};
  }

 private:
  FockSpace space_;
  Matrix rho_;
};

namespace detail {

// <p, N-p| U |m, N-m> for U a^dag U^dag = c a^dag + s b^dag,
// U b^dag U^dag = s a^dag - c b^dag. The symmetric choice makes the bunching
// amplitude independent of port order.
inline Eigen::MatrixXd beamsplitter_block(int total, double c, double s) {
  const int n_tot = total;
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n_tot + 1, n_tot + 1);
  for (int m = 0; m <= n_tot; ++m) {
    const int n = n_tot - m;
    for (int j = 0; j <= m; ++j)
      for (int k = 0; k <= n; ++k) {
        const int p = j + k;
        const double coeff = std::exp(log_binomial(m, j) + log_binomial(n, k));
        const double w = std::pow(c, j) * std::pow(s, m - j) * std::pow(s, k) * std::pow(-c, n - k);
        // sqrt(p! q! / (m! n!)) = sqrt(C(N, m) / C(N, p))
        const double norm = std::exp(0.5 * (log_binomial(n_tot, m) - log_binomial(n_tot, p)));
        u(p, m) += coeff * w * norm;
      }
  }
  return u;
}

}  // namespace detail

/// Two-mode beamsplitter with cos^2(theta) = transmissivity, applied block by
/// block in total photon number. Throws if population sits at totals the
/// truncation cannot hold (N >= dim).
inline TwoModeState beamsplitter(const TwoModeState& state, double transmissivity) {
  require_transmittance(transmissivity, "beamsplitter");
  const int d = state.dim();
  const Distribution pn = state.total_number_distribution();
  if (pn.tail(d - 1).sum() > kTailWarning)
    throw TruncationError("beamsplitter: population at total photon number >= dim");
  const double c = std::sqrt(transmissivity), s = std::sqrt(1.0 - transmissivity);
  Matrix u = Matrix::Zero(d * d, d * d);
  for (int total = 0; total < d; ++total) {
    const Eigen::MatrixXd blk = detail::beamsplitter_block(total, c, s);
    for (int m = 0; m <= total; ++m)
      for (int p = 0; p <= total; ++p) u(p * d + (total - p), m * d + (total - m)) = blk(p, m);
  }
  return {state.space(), u * state.rho() * u.adjoint()};
}

/// Amplitude of |m, n> -> |m + n, 0> through the 50:50 beamsplitter.
inline double bunching_amplitude(int m, int n) {
  return std::exp(0.5 * detail::log_binomial(m + n, m) - 0.5 * (m + n) * std::log(2.0));
}

struct BunchResult {
  FieldState state;
  double probability;
};

/// rho_out = <0_2| U (rho1 (x) rho2) U^dag |0_2>, renormalized. The output
/// lives on `out` (default: 2 dim - 1, exact); population that does not fit
/// raises TruncationError.
inline BunchResult bunch_and_project(const FieldState& state1, const FieldState& state2,
                                     std::optional<FockSpace> out = std::nullopt) {
  if (state1.dim() != state2.dim()) throw InvalidArgument("bunch_and_project: states on different spaces");
  const int d = state1.dim();
  const FockSpace space = out.value_or(FockSpace(2 * d - 1));
  const int dout = space.dim();
  const int full = 2 * d - 1;
  Eigen::MatrixXd amp(d, d);
  for (int m = 0; m < d; ++m)
    for (int n = 0; n < d; ++n) amp(m, n) = bunching_amplitude(m, n);
  Matrix rho = Matrix::Zero(full, full);
  const Matrix r1 = state1.normalized().rho();
  const Matrix r2 = state2.normalized().rho();
  for (int m = 0; m < d; ++m)
    for (int mp = 0; mp < d; ++mp) {
      const Complex a = r1(m, mp);
      if (a == Complex{}) continue;
      for (int n = 0; n < d; ++n)
        for (int np = 0; np < d; ++np) rho(m + n, mp + np) += a * r2(n, np) * amp(m, n) * amp(mp, np);
    }
  const double prob = rho.trace().real();
  if (!(prob >= 1e-12)) throw HeraldingError("bunch_and_project: vacuum herald probability below 1e-12");
  if (dout < full) {
    const double lost = rho.diagonal().real().tail(full - dout).sum();
    if (lost > kTailWarning * prob)
      throw TruncationError("bunch_and_project: output population beyond dim " + std::to_string(dout));
  }
  Matrix kept = Matrix::Zero(dout, dout);
  const int k = std::min(dout, full);
  kept.topLeftCorner(k, k) = rho.topLeftCorner(k, k);
  return {FieldState(space, kept / prob), prob};
}

/// Pairwise cascade: ((s0 . s1) . s2) ... with cumulative herald probability.
/// Inputs are embedded into the running output space; `out` fixes the final
/// truncation (default: exact).
inline BunchResult bunch_chain(const std::vector<FieldState>& states, std::optional<FockSpace> out = std::nullopt) {
  if (states.size() < 2) throw InvalidArgument("bunch_chain: need at least two states");
  BunchResult acc = bunch_and_project(states[0], states[1], states.size() == 2 ? out : std::nullopt);
  for (std::size_t i = 2; i < states.size(); ++i) {
    const FockSpace running = acc.state.space();
    const FieldState next = states[i].dim() <= running.dim() ? states[i].resized(running) : states[i];
    const FieldState cur = acc.state.dim() < next.dim() ? acc.state.resized(next.space()) : acc.state;
    BunchResult step = bunch_and_project(cur, next, i + 1 == states.size() ? out : std::nullopt);
    acc = {std::move(step.state), acc.probability * step.probability};
  }
  return acc;
}

}  // namespace fockfilter
