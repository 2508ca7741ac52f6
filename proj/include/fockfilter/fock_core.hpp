#pragma once

// Truncated single-mode Fock-space algebra: states, standard operators and
// the two bosonic channels (pure loss, number dephasing) used throughout.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "fockfilter/errors.hpp"

namespace fockfilter {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
/// Photon-number distribution p_n, n = 0..dim-1.
using Distribution = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTailWarning = 1e-6;

class FockSpace {
 public:
  explicit FockSpace(int dim) : dim_(dim) {
    if (dim < 2) throw InvalidArgument("FockSpace: dim must be >= 2, got " + std::to_string(dim));
  }

  int dim() const noexcept { return dim_; }

  Matrix annihilation() const {
    Matrix a = Matrix::Zero(dim_, dim_);
    for (int n = 1; n < dim_; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
  }
  Matrix creation() const { return annihilation().adjoint(); }
  Matrix number() const {
    Matrix n = Matrix::Zero(dim_, dim_);
    for (int k = 0; k < dim_; ++k) n(k, k) = static_cast<double>(k);
    return n;
  }
  Matrix identity() const { return Matrix::Identity(dim_, dim_); }

  friend bool operator==(const FockSpace&, const FockSpace&) = default;

 private:
  int dim_;
};

namespace detail {

inline double hermiticity_defect(const Matrix& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

// ln C(m, k)
inline double log_binomial(int m, int k) {
  return std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0);
}

// sqrt(C(m,k) T^(m-k) (1-T)^k): amplitude of losing k of m photons.
inline double loss_amplitude(int m, int k, double transmittance) {
  if (k == 0) return std::pow(transmittance, 0.5 * m);
  if (transmittance >= 1.0) return 0.0;
  if (m == k) return std::pow(1.0 - transmittance, 0.5 * k);
  if (transmittance <= 0.0) return 0.0;
  return std::exp(0.5 * (log_binomial(m, k) + (m - k) * std::log(transmittance) +
                         k * std::log1p(-transmittance)));
}

}  // namespace detail

/// Truncated single-mode density matrix. Hermiticity is enforced on
/// construction; positivity and normalization are checked on demand, since
/// post-selected intermediate states legitimately carry a non-unit trace.
class FieldState {
 public:
  FieldState(FockSpace space, Matrix rho) : space_(space), rho_(std::move(rho)) {
    if (rho_.rows() != space_.dim() || rho_.cols() != space_.dim())
      throw InvalidArgument("FieldState: matrix shape does not match Fock space dimension");
    const double scale = std::max(1.0, rho_.cwiseAbs().maxCoeff());
    if (detail::hermiticity_defect(rho_) > 1e-9 * scale)
      throw InvalidArgument("FieldState: density matrix is not Hermitian");
    rho_ = 0.5 * (rho_ + rho_.adjoint()).eval();
  }

  static FieldState fock(FockSpace space, int n) {
    if (n < 0 || n >= space.dim()) throw InvalidArgument("FieldState::fock: n out of range");
    Matrix rho = Matrix::Zero(space.dim(), space.dim());
    rho(n, n) = 1.0;
    return {space, std::move(rho)};
  }

  static FieldState vacuum(FockSpace space) { return fock(space, 0); }

  /// |psi><psi| / <psi|psi>.
  static FieldState pure(FockSpace space, const Vector& psi) {
    if (psi.size() != space.dim()) throw InvalidArgument("FieldState::pure: vector size mismatch");
    const double norm2 = psi.squaredNorm();
    if (norm2 <= 0.0) throw InvalidArgument("FieldState::pure: zero vector");
    return {space, psi * psi.adjoint() / norm2};
  }

  /// Diagonal state with the given populations (not renormalized).
  static FieldState diagonal(FockSpace space, const Distribution& p) {
    if (p.size() != space.dim()) throw InvalidArgument("FieldState::diagonal: size mismatch");
    Matrix rho = Matrix::Zero(space.dim(), space.dim());
    rho.diagonal() = p.cast<Complex>();
    return {space, std::move(rho)};
  }

  const Matrix& rho() const noexcept { return rho_; }
  FockSpace space() const noexcept { return space_; }
  int dim() const noexcept { return space_.dim(); }

  double trace() const { return rho_.trace().real(); }
  double population(int n) const {
    if (n < 0 || n >= dim()) throw InvalidArgument("FieldState::population: n out of range");
    return rho_(n, n).real();
  }
  Distribution distribution() const { return rho_.diagonal().real(); }

  /// Sum of populations strictly above n.
  double population_above(int n) const {
    double s = 0.0;
    for (int k = std::max(0, n + 1); k < dim(); ++k) s += rho_(k, k).real();
    return s;
  }

  /// Population in the two highest retained levels.
  double tail_mass() const {
    double s = 0.0;
    for (int k = std::max(0, dim() - 2); k < dim(); ++k) s += rho_(k, k).real();
    return s;
  }
  bool truncation_flagged() const { return tail_mass() > kTailWarning; }

  double purity() const { return (rho_ * rho_).trace().real() / (trace() * trace()); }
  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  bool is_diagonal(double tol = 1e-14) const {
    Matrix off = rho_;
    off.diagonal().setZero();
    return off.cwiseAbs().maxCoeff() <= tol;
  }

  FieldState normalized() const {
    const double t = trace();
    if (!(t > 0.0)) throw NumericalError("FieldState::normalized: non-positive trace");
    return {space_, rho_ / t};
  }

  double fidelity_with_pure(const Vector& psi) const {
    return (psi.adjoint() * rho_ * psi)(0, 0).real() / psi.squaredNorm();
  }

  /// Same state expressed in a different truncation (zero-padded or cut).
  FieldState resized(FockSpace target) const {
    const int d = std::min(dim(), target.dim());
    Matrix rho = Matrix::Zero(target.dim(), target.dim());
    rho.topLeftCorner(d, d) = rho_.topLeftCorner(d, d);
    return {target, std::move(rho)};
  }

 private:
  FockSpace space_;
  Matrix rho_;
};

/// Atom (two-level, basis {|g>, |s>}) tensor field. Index a*dim + n.
class JointState {
 public:
  JointState(FockSpace space, Matrix rho) : space_(space), rho_(std::move(rho)) {
    if (rho_.rows() != 2 * space_.dim() || rho_.cols() != 2 * space_.dim())
      throw InvalidArgument("JointState: matrix shape must be 2*dim");
    const double scale = std::max(1.0, rho_.cwiseAbs().maxCoeff());
    if (detail::hermiticity_defect(rho_) > 1e-9 * scale)
      throw InvalidArgument("JointState: density matrix is not Hermitian");
  }

  static JointState product(const Eigen::Matrix2cd& atom, const FieldState& field) {
    const int d = field.dim();
    Matrix rho(2 * d, 2 * d);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) rho.block(a * d, b * d, d, d) = atom(a, b) * field.rho();
    return {field.space(), std::move(rho)};
  }

  const Matrix& rho() const noexcept { return rho_; }
  FockSpace space() const noexcept { return space_; }
  double trace() const { return rho_.trace().real(); }

  /// Field operator <a| rho |b> for atom levels a, b.
  Matrix block(int a, int b) const {
    const int d = space_.dim();
    return rho_.block(a * d, b * d, d, d);
  }

  /// Unnormalized field state conditioned on projecting the atom onto level a.
  FieldState project_atom(int a) const { return {space_, block(a, a)}; }

  FieldState field_marginal() const { return {space_, block(0, 0) + block(1, 1)}; }

  JointState rotate_atom(const Eigen::Matrix2cd& u) const {
    const int d = space_.dim();
    Matrix out = Matrix::Zero(2 * d, 2 * d);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c)
          for (int e = 0; e < 2; ++e) {
            const Complex w = u(a, c) * std::conj(u(b, e));
            if (w != Complex{}) out.block(a * d, b * d, d, d) += w * block(c, e);
          }
    return {space_, std::move(out)};
  }

 private:
  FockSpace space_;
  Matrix rho_;
};

// --- operators -------------------------------------------------------------

inline Matrix number_basis_projector(int n, FockSpace space) {
  if (n < 0 || n >= space.dim())
    throw InvalidArgument("number_basis_projector: n=" + std::to_string(n) + " out of range");
  Matrix p = Matrix::Zero(space.dim(), space.dim());
  p(n, n) = 1.0;
  return p;
}

/// Columns 0..cols-1 of D(alpha) S(xi) without forming the exponentials.
/// Column 0 is the displaced squeezed vacuum, from the annihilation
/// condition B psi = 0 with B = D S a S^dag D^dag; column k follows as
/// B^dag psi_{k-1} / sqrt(k). Column 0 is carried cols rows past the
/// cutoff so every returned row is exact (the truncated operator is not
/// involved; population beyond dim is simply absent).
inline Matrix gaussian_columns(Complex alpha, Complex xi, int cols, FockSpace space) {
  const int d = space.dim();
  if (cols < 1 || cols > d) throw InvalidArgument("gaussian_columns: cols out of range");
  const int ext = d + cols;
  const double r = std::abs(xi);
  const Complex e = r > 0.0 ? xi / r : Complex(1.0, 0.0);
  const double ch = std::cosh(r), sh = std::sinh(r);
  const Complex es = e * sh;
  Matrix out = Matrix::Zero(ext, cols);
  const Complex g = alpha * ch + std::conj(alpha) * es;
  out(0, 0) = std::exp(-0.5 * std::norm(alpha) - 0.5 * std::conj(alpha) * std::conj(alpha) * e * std::tanh(r)) /
              std::sqrt(ch);
  for (int m = 0; m + 1 < ext; ++m) {
    Complex next = g * out(m, 0);
    if (m > 0) next -= es * std::sqrt(static_cast<double>(m)) * out(m - 1, 0);
    out(m + 1, 0) = next / (ch * std::sqrt(m + 1.0));
  }
  // B^dag = (a^dag - alpha^*) cosh r + (a - alpha) e^{-i theta} sinh r
  const Complex esc = std::conj(es);
  const Complex shift = std::conj(alpha) * ch + alpha * esc;
  for (int k = 1; k < cols; ++k) {
    const int rows = ext - k;  // column k is exact on rows < ext - k
    for (int m = 0; m < rows; ++m) {
      Complex v = -shift * out(m, k - 1) + esc * std::sqrt(m + 1.0) * out(m + 1, k - 1);
      if (m > 0) v += ch * std::sqrt(static_cast<double>(m)) * out(m - 1, k - 1);
      out(m, k) = v / std::sqrt(static_cast<double>(k));
    }
  }
  return out.topRows(d);
}

/// D(alpha) = exp(alpha a^dag - alpha^* a) on the truncated space.
inline Matrix displacement_operator(Complex alpha, FockSpace space) {
  if (alpha == Complex{}) return space.identity();
  const Matrix a = space.annihilation();
  const Matrix gen = alpha * a.adjoint() - std::conj(alpha) * a;
  return gen.exp();
}

/// S(xi) = exp[(xi^* a^2 - xi a^dag^2) / 2] on the truncated space.
inline Matrix squeezing_operator(Complex xi, FockSpace space) {
  if (xi == Complex{}) return space.identity();
  const Matrix a = space.annihilation();
  const Matrix a2 = a * a;
  const Matrix gen = 0.5 * (std::conj(xi) * a2 - xi * a2.adjoint());
  return gen.exp();
}

/// exp(i phase n).
inline Matrix phase_rotation(double phase, FockSpace space) {
  Matrix u = Matrix::Zero(space.dim(), space.dim());
  for (int n = 0; n < space.dim(); ++n) u(n, n) = std::polar(1.0, phase * n);
  return u;
}

/// max |(U^dag U - I)_{jk}| over the leading `fraction` of the basis.
inline double unitarity_defect(const Matrix& u, double fraction = 1.0) {
  const int k = std::max(1, static_cast<int>(std::floor(fraction * static_cast<double>(u.rows()))));
  const Matrix prod = (u.adjoint() * u).topLeftCorner(k, k);
  return (prod - Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
}

// --- channels --------------------------------------------------------------

inline void require_transmittance(double t, const char* who) {
  if (!(t >= 0.0 && t <= 1.0))
    throw InvalidArgument(std::string(who) + ": transmittance must lie in [0,1], got " + std::to_string(t));
}

/// Kraus operators A_k = sum_m sqrt(C(m,k) T^(m-k) (1-T)^k) |m-k><m|.
inline std::vector<Matrix> loss_kraus_operators(double transmittance, FockSpace space) {
  require_transmittance(transmittance, "loss_kraus_operators");
  const int d = space.dim();
  std::vector<Matrix> ops;
  ops.reserve(d);
  for (int k = 0; k < d; ++k) {
    Matrix a = Matrix::Zero(d, d);
    for (int m = k; m < d; ++m) a(m - k, m) = detail::loss_amplitude(m, k, transmittance);
    ops.push_back(std::move(a));
  }
  return ops;
}

/// Applies sum_k A_k(eta1) X A_k(eta2)^dag to an arbitrary (not necessarily
/// Hermitian) operator X. With eta1 == eta2 this is the pure-loss channel;
/// unequal values give the cross terms of branch-dependent loss.
inline Matrix apply_loss_pair(const Matrix& x, double eta1, double eta2) {
  const int d = static_cast<int>(x.rows());
  // amp(a)(m, k) = A_k amplitude for m photons
  Eigen::MatrixXd amp1 = Eigen::MatrixXd::Zero(d, d), amp2 = Eigen::MatrixXd::Zero(d, d);
  for (int m = 0; m < d; ++m)
    for (int k = 0; k <= m; ++k) {
      amp1(m, k) = detail::loss_amplitude(m, k, eta1);
      amp2(m, k) = eta1 == eta2 ? amp1(m, k) : detail::loss_amplitude(m, k, eta2);
    }
  Matrix out = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      Complex acc{};
      for (int k = 0; i + k < d && j + k < d; ++k) {
        const double w = amp1(i + k, k) * amp2(j + k, k);
        if (w != 0.0) acc += w * x(i + k, j + k);
      }
      out(i, j) = acc;
    }
  return out;
}

/// Bosonic pure-loss channel with transmittance T (full Kraus action).
inline FieldState loss_channel(const FieldState& state, double transmittance) {
  require_transmittance(transmittance, "loss_channel");
  if (transmittance == 1.0) return state;
  return {state.space(), apply_loss_pair(state.rho(), transmittance, transmittance)};
}

/// Diagonal action of pure loss on a photon-number distribution:
/// p'_n = sum_{m>=n} C(m,n) T^n (1-T)^(m-n) p_m.
inline Distribution attenuate_distribution(const Distribution& p, double transmittance) {
  require_transmittance(transmittance, "attenuate_distribution");
  const int d = static_cast<int>(p.size());
  Distribution out = Distribution::Zero(d);
  for (int n = 0; n < d; ++n) {
    double acc = 0.0;
    for (int m = n; m < d; ++m) {
      if (p[m] == 0.0) continue;
      const double a = detail::loss_amplitude(m, m - n, transmittance);
      acc += a * a * p[m];
    }
    out[n] = acc;
  }
  return out;
}

/// Integrated number dephasing: rho_mn -> rho_mn exp(-strength (m-n)^2 / 2).
inline FieldState dephasing_channel(const FieldState& state, double strength) {
  if (!(strength >= 0.0))
    throw InvalidArgument("dephasing_channel: strength must be >= 0, got " + std::to_string(strength));
  Matrix rho = state.rho();
  const int d = state.dim();
  for (int m = 0; m < d; ++m)
    for (int n = 0; n < d; ++n)
      if (m != n) {
        const double diff = static_cast<double>(m - n);
        rho(m, n) *= std::isinf(strength) ? 0.0 : std::exp(-0.5 * strength * diff * diff);
      }
  return {state.space(), std::move(rho)};
}

// --- phase space -----------------------------------------------------------

namespace detail {

// Generalized Laguerre L_n^{(k)}(x) by upward recurrence.
inline double laguerre(int n, int k, double x) {
  if (n == 0) return 1.0;
  double l0 = 1.0, l1 = 1.0 + k - x;
  for (int j = 1; j < n; ++j) {
    const double l2 = ((2.0 * j + 1.0 + k - x) * l1 - (j + k) * l0) / (j + 1.0);
    l0 = l1;
    l1 = l2;
  }
  return l1;
}

}  // namespace detail

/// Wigner function W(x, p) with x = (a + a^dag)/sqrt2, normalized so the
/// vacuum gives exp(-x^2 - p^2)/pi. Rows follow `ps`, columns follow `xs`.
inline Eigen::MatrixXd wigner_grid(const FieldState& state, std::span<const double> xs,
                                   std::span<const double> ps) {
  const int d = state.dim();
  const Matrix& rho = state.rho();
  Eigen::MatrixXd w(ps.size(), xs.size());
  // W = (1/pi) sum_{mn} rho_nm (-1)^n <m|D(2 beta)|n>, beta = (x + i p)/sqrt2
  std::vector<double> lfact(2 * d);
  for (int k = 0; k < 2 * d; ++k) lfact[k] = std::lgamma(k + 1.0);
  for (std::size_t ip = 0; ip < ps.size(); ++ip)
    for (std::size_t ix = 0; ix < xs.size(); ++ix) {
      const Complex gamma = std::sqrt(2.0) * Complex(xs[ix], ps[ip]);
      const double g2 = std::norm(gamma);
      const double gauss = std::exp(-0.5 * g2);
      Complex acc{};
      for (int m = 0; m < d; ++m)
        for (int n = 0; n <= m; ++n) {
          const Complex r_nm = rho(n, m);
          const Complex r_mn = rho(m, n);
          if (r_nm == Complex{} && r_mn == Complex{}) continue;
          // <m|D(g)|n> for m >= n
          const double mag = std::exp(0.5 * (lfact[n] - lfact[m])) * gauss * detail::laguerre(n, m - n, g2);
          const Complex el = mag * std::pow(gamma, m - n);
          const double sign_n = (n % 2 == 0) ? 1.0 : -1.0;
          acc += r_nm * sign_n * el;
          if (m != n) {
            // <n|D(g)|m> = conj(<m|D(-g)|n>) = (-1)^(m-n) conj(el); weight (-1)^m
            const double sign_m = (m % 2 == 0) ? 1.0 : -1.0;
            const double sign_diff = ((m - n) % 2 == 0) ? 1.0 : -1.0;
            acc += r_mn * sign_m * sign_diff * std::conj(el);
          }
        }
      w(ip, ix) = acc.real() / kPi;
    }
  return w;
}

}  // namespace fockfilter
