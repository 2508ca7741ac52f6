#pragma once

// Atom-conditioned cavity reflection. Each atomic branch a in {g, s} sees
// the field reflected with coefficient r_a: pure loss with transmissivity
// |r_a|^2 followed by the phase rotation exp(i arg(r_a) n). The coupled
// level |g> saturates to r = +1 as C grows; the uncoupled level |s> sees the
// empty-cavity reflection whose lossless phase is the controlled phase phi.

#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "fockfilter/fock_core.hpp"

namespace fockfilter {

enum AtomLevel : int { kLevelG = 0, kLevelS = 1 };

struct CavityParams {
  double cooperativity = 250.0;
  double beta = 0.99;
  double detuning_ratio = 0.0;     // Delta / kappa
  double loop_transmission = 1.0;  // tau, delay-line loss per round

  /// beta = 1, C -> infinity: the unitary controlled-phase limit.
  static CavityParams ideal(double detuning_ratio = 0.0) {
    return {std::numeric_limits<double>::infinity(), 1.0, detuning_ratio, 1.0};
  }

  CavityParams with_detuning(double d) const {
    CavityParams p = *this;
    p.detuning_ratio = d;
    return p;
  }

  void validate() const {
    if (!(cooperativity > 0.0)) throw InvalidArgument("CavityParams: cooperativity must be > 0");
    if (!(beta > 0.0 && beta <= 1.0)) throw InvalidArgument("CavityParams: beta must lie in (0,1]");
    if (!(loop_transmission > 0.0 && loop_transmission <= 1.0))
      throw InvalidArgument("CavityParams: loop transmission must lie in (0,1]");
    if (!std::isfinite(detuning_ratio)) throw InvalidArgument("CavityParams: detuning must be finite");
  }
};

struct ReflectionPair {
  Complex r_coupled;    // atom in |g>
  Complex r_uncoupled;  // atom in |s>

  Complex operator[](int level) const { return level == kLevelG ? r_coupled : r_uncoupled; }
};

/// r_uncoupled = 1 - 2 beta / (1 - 2i Delta/kappa),
/// r_coupled   = 1 - 2 beta / (1 - 2i Delta/kappa + 4C).
inline ReflectionPair reflection_coefficients(const CavityParams& params) {
  params.validate();
  const Complex denom(1.0, -2.0 * params.detuning_ratio);
  ReflectionPair pair;
  pair.r_uncoupled = 1.0 - 2.0 * params.beta / denom;
  pair.r_coupled = std::isinf(params.cooperativity)
                       ? Complex(1.0, 0.0)
                       : 1.0 - 2.0 * params.beta / (denom + 4.0 * params.cooperativity);
  return pair;
}

inline double wrap_phase(double phi) {
  double w = std::remainder(phi, 2.0 * kPi);  // [-pi, pi]
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

/// phi = arg(1 - 2/(1 - 2i Delta/kappa)) in (-pi, pi].
inline double phase_for_detuning(double detuning_ratio) {
  const Complex r = 1.0 - 2.0 / Complex(1.0, -2.0 * detuning_ratio);
  return wrap_phase(std::arg(r));
}

/// Inverse of phase_for_detuning for phi != 0 (mod 2 pi).
inline double detuning_for_phase(double phi) {
  const double w = wrap_phase(phi);
  if (w == 0.0) throw InvalidArgument("detuning_for_phase: phi = 0 needs infinite detuning");
  return 0.5 * std::tan(0.5 * (w - kPi));
}

/// Noisy controlled reflection on the joint atom-field state. Block
/// rho_ab = <a|rho|b> maps to sum_k K_{a,k} rho_ab K_{b,k}^dag with
/// K_{a,k} = exp(i arg(r_a) n) A_k(|r_a|^2).
inline JointState controlled_reflection(const JointState& joint, const CavityParams& params) {
  const ReflectionPair refl = reflection_coefficients(params);
  const FockSpace space = joint.space();
  const int d = space.dim();
  Matrix out(2 * d, 2 * d);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const double eta_a = std::min(1.0, std::norm(refl[a]));
      const double eta_b = std::min(1.0, std::norm(refl[b]));
      Matrix blk = apply_loss_pair(joint.block(a, b), eta_a, eta_b);
      const Matrix ua = phase_rotation(std::arg(refl[a]), space);
      const Matrix ub = phase_rotation(std::arg(refl[b]), space);
      out.block(a * d, b * d, d, d) = ua.diagonal().asDiagonal() * blk * ub.diagonal().conjugate().asDiagonal();
    }
  return {space, std::move(out)};
}

/// The ideal unitary |g><g| (x) I + |s><s| (x) exp(i phi n).
inline Matrix ideal_controlled_phase(double phi, FockSpace space) {
  const int d = space.dim();
  Matrix u = Matrix::Zero(2 * d, 2 * d);
  u.topLeftCorner(d, d) = space.identity();
  u.bottomRightCorner(d, d) = phase_rotation(phi, space);
  return u;
}

}  // namespace fockfilter
