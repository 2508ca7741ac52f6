#pragma once

// Displaced squeezed thermal inputs rho(alpha, r, nbar) and the closed-form
// photon statistics of displaced squeezed vacuum.

#include <cmath>
#include <complex>
#include <string>

#include "fockfilter/fock_core.hpp"

namespace fockfilter {

/// rho(alpha, r, nbar) = D(alpha) S(r) rho_th(nbar) S(r)^dag D(alpha)^dag.
struct GaussianSpec {
  Complex alpha{};
  Complex r{};
  double nbar = 0.0;

  void validate() const {
    if (!(nbar >= 0.0)) throw InvalidArgument("GaussianSpec: nbar must be >= 0");
    if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag()) || !std::isfinite(r.real()) ||
        !std::isfinite(r.imag()))
      throw InvalidArgument("GaussianSpec: non-finite parameter");
  }

  /// |alpha|^2 + sinh^2|r| + nbar cosh 2|r|
  double mean_photon_number() const {
    const double s = std::abs(r);
    return std::norm(alpha) + std::sinh(s) * std::sinh(s) + nbar * std::cosh(2.0 * s);
  }
};

inline Distribution thermal_distribution(double nbar, int dim) {
  if (!(nbar >= 0.0)) throw InvalidArgument("thermal_distribution: nbar must be >= 0");
  Distribution p = Distribution::Zero(dim);
  if (nbar == 0.0) {
    p[0] = 1.0;
    return p;
  }
  const double q = nbar / (1.0 + nbar);
  for (int n = 0; n < dim; ++n) p[n] = std::pow(q, n) / (1.0 + nbar);
  return p;
}

inline FieldState thermal_state(double nbar, FockSpace space) {
  return FieldState::diagonal(space, thermal_distribution(nbar, space.dim()));
}

/// Mixes exact columns of D(alpha) S(r) over the thermal weights, so matrix
/// elements inside `space` carry no truncation error and the trace is
/// 1 - (population above the cut). Throws TruncationError when that
/// population or the retained two-level tail exceeds 1e-6.
inline FieldState displaced_squeezed_thermal(const GaussianSpec& spec, FockSpace space) {
  spec.validate();
  const FockSpace work(space.dim() + std::max(16, space.dim() / 2));
  const Distribution th = thermal_distribution(spec.nbar, work.dim());
  int cols = 1;
  while (cols < work.dim() && th[cols] > 1e-16 * th[0]) ++cols;
  const Matrix c = gaussian_columns(spec.alpha, spec.r, cols, work).topRows(space.dim());
  const Matrix rho = c * th.head(cols).cast<Complex>().asDiagonal() * c.adjoint();
  FieldState out(space, rho);
  if (1.0 - out.trace() > kTailWarning)
    throw TruncationError("displaced_squeezed_thermal: dim=" + std::to_string(space.dim()) +
                          " discards population " + std::to_string(1.0 - out.trace()));
  if (out.tail_mass() > kTailWarning)
    throw TruncationError("displaced_squeezed_thermal: tail mass " + std::to_string(out.tail_mass()) +
                          " exceeds bound at dim=" + std::to_string(space.dim()));
  return out;
}

namespace detail {

// h_n(z) = H_n(z) / sqrt(2^n n!), physicists' Hermite, complex argument.
inline Complex normalized_hermite(int n, Complex z) {
  Complex h0 = 1.0;
  if (n == 0) return h0;
  Complex h1 = std::sqrt(2.0) * z;
  for (int k = 1; k < n; ++k) {
    const Complex h2 = std::sqrt(2.0 / (k + 1.0)) * z * h1 - std::sqrt(k / (k + 1.0)) * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

}  // namespace detail

/// Photon-number probability of the amplitude-squeezed displaced vacuum
/// D(alpha) S(r)|0> with real alpha >= 0 and real r:
///   p_n = p_0 (tanh r)^n / (n! 2^n) |H_n(alpha e^r / sqrt(sinh 2r))|^2,
///   p_0 = exp(-alpha^2 (1 + tanh r)) / cosh r.
/// r = 0 falls back to the Poisson law.
inline double dsv_photon_probability(int n, double alpha, double r) {
  if (n < 0) throw InvalidArgument("dsv_photon_probability: n must be >= 0");
  if (!(alpha >= 0.0)) throw InvalidArgument("dsv_photon_probability: alpha must be >= 0");
  const double a2 = alpha * alpha;
  if (r == 0.0) {
    if (a2 == 0.0) return n == 0 ? 1.0 : 0.0;
    return std::exp(-a2 + n * std::log(a2) - std::lgamma(n + 1.0));
  }
  const double t = std::tanh(r);
  const double p0 = std::exp(-a2 * (1.0 + t)) / std::cosh(r);
  const Complex z = alpha * std::exp(r) / std::sqrt(Complex(std::sinh(2.0 * r), 0.0));
  // (tanh r)^n/(n! 2^n) |H_n|^2 = |tanh r|^n |h_n|^2
  const Complex h = detail::normalized_hermite(n, z);
  return p0 * std::pow(std::abs(t), n) * std::norm(h);
}

inline Distribution dsv_distribution(double alpha, double r, int count) {
  Distribution p(count);
  for (int n = 0; n < count; ++n) p[n] = dsv_photon_probability(n, alpha, r);
  return p;
}

/// Mixing angle of the |0>, |2> superposition heralded from D(alpha)S(r)|0>:
/// theta = atan( tanh r / (2 sqrt2) * H_2(alpha e^r / sqrt(sinh 2r)) ).
inline double superposition_theta(double alpha, double r) {
  if (!(r > 0.0)) throw InvalidArgument("superposition_theta: r must be > 0");
  const double x = alpha * std::exp(r) / std::sqrt(std::sinh(2.0 * r));
  const double h2 = 4.0 * x * x - 2.0;
  return std::atan(std::tanh(r) / (2.0 * std::sqrt(2.0)) * h2);
}

}  // namespace fockfilter
