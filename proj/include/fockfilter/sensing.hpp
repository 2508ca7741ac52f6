#pragma once

// Sensing figures of merit: phase-randomized displacement / squeezing read
// out by photon counting, and phase estimation with a binary projection on
// cos(phi)|0> + sin(phi)|2>.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "fockfilter/fock_core.hpp"

namespace fockfilter {

enum class SensingKind { displacement, squeezing, phase };

inline std::string_view to_string(SensingKind k) {
  switch (k) {
    case SensingKind::displacement: return "displacement";
    case SensingKind::squeezing: return "squeezing";
    case SensingKind::phase: return "phase";
  }
  return "?";
}

inline SensingKind parse_sensing_kind(std::string_view s) {
  if (s == "displacement") return SensingKind::displacement;
  if (s == "squeezing") return SensingKind::squeezing;
  if (s == "phase") return SensingKind::phase;
  throw InvalidArgument("unknown sensing kind '" + std::string(s) + "'");
}

struct SensingTask {
  SensingKind kind = SensingKind::displacement;
  double magnitude = 0.0;  // N_d, N_s, or Theta

  void validate() const {
    if (!std::isfinite(magnitude)) throw InvalidArgument("SensingTask: magnitude must be finite");
    if (kind != SensingKind::phase && magnitude < 0.0)
      throw InvalidArgument("SensingTask: magnitude must be >= 0");
  }
};

inline constexpr int kPhaseQuadraturePoints = 64;

namespace detail {

// Output support for inputs up to level dim - 1: D moves sqrt(n) by
// sqrt(magnitude), S stretches it by e^r; 8 standard widths of margin.
inline int sensing_work_dim(int dim, const SensingTask& task) {
  const double m = task.magnitude, top = std::sqrt(dim - 1.0);
  const double reach = task.kind == SensingKind::displacement ? top + std::sqrt(m)
                                                              : (top + 1.0) * std::exp(std::sqrt(m));
  return std::max(dim + 16, static_cast<int>(std::ceil(reach * reach + 8.0 * reach)) + 16);
}

// Columns 0..dim-1 of G(sqrt(magnitude)) at zero phase, on the padded space.
inline Matrix sensing_columns(const SensingTask& task, int dim, FockSpace work) {
  const double g = std::sqrt(task.magnitude);
  return task.kind == SensingKind::displacement ? gaussian_columns(g, 0.0, dim, work)
                                                : gaussian_columns(0.0, g, dim, work);
}

}  // namespace detail

/// Phase-averaged photon distribution of G(sqrt(m) e^{i phi}) rho G^dag,
/// G = D or S. Diagonal inputs take the exact shortcut; others use a
/// 64-point trapezoid over the phase. Returned on a padded space; throws
/// TruncationError if it does not hold the output to 1e-8.
inline Distribution phase_randomized_output(const FieldState& state, const SensingTask& task,
                                            bool force_quadrature = false) {
  task.validate();
  if (task.kind == SensingKind::phase)
    throw InvalidArgument("phase_randomized_output: phase tasks are not phase-randomized");
  const FieldState s = state.normalized();
  const int d = s.dim();
  const FockSpace work(detail::sensing_work_dim(d, task));
  const Matrix g = detail::sensing_columns(task, d, work);
  Distribution p = Distribution::Zero(work.dim());
  if (s.is_diagonal() && !force_quadrature) {
    p = g.cwiseAbs2() * s.distribution();
  } else {
    // G(sqrt(m) e^{i phi}) = R(psi) G R(psi)^dag with psi = phi (D) or phi/2 (S).
    const double scale = task.kind == SensingKind::displacement ? 1.0 : 0.5;
    for (int q = 0; q < kPhaseQuadraturePoints; ++q) {
      const double psi = scale * 2.0 * kPi * q / kPhaseQuadraturePoints;
      Matrix rho = s.rho();
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) rho(j, k) *= std::polar(1.0, -psi * (j - k));
      const Matrix gr = g * rho;
      p += (gr.cwiseProduct(g.conjugate())).rowwise().sum().real();
    }
    p /= kPhaseQuadraturePoints;
  }
  if (std::abs(p.sum() - 1.0) > 1e-8)
    throw TruncationError("phase_randomized_output: magnitude too large for the truncation");
  return p;
}

struct CfiResult {
  double value = 0.0;
  double richardson_correction = 0.0;  // |R - D(h)| in units of the value
  int dropped_terms = 0;               // outcomes with p < 1e-14
};

/// F(theta) = sum_m (dp/dtheta)^2 / p for theta = N_d or N_s. Central
/// differences with relative step 1e-4, one Richardson step.
inline CfiResult cfi_photon_counting_detail(const FieldState& state, const SensingTask& task) {
  task.validate();
  if (task.kind == SensingKind::phase) throw InvalidArgument("cfi_photon_counting: use phase_cfi_binary for phase");
  if (!(task.magnitude > 0.0)) throw InvalidArgument("cfi_photon_counting: magnitude must be > 0");
  const double theta = task.magnitude;
  const double h = 1e-4 * theta;
  auto at = [&](double m) { return phase_randomized_output(state, {task.kind, m}); };
  // all evaluations must share one padded space
  const Distribution p0 = at(theta);
  auto sized = [&](Distribution v) {
    Distribution out = Distribution::Zero(p0.size());
    const Eigen::Index k = std::min(v.size(), p0.size());
    out.head(k) = v.head(k);
    return out;
  };
  const Distribution d1 = (sized(at(theta + h)) - sized(at(theta - h))) / (2.0 * h);
  const Distribution d2 = (sized(at(theta + 0.5 * h)) - sized(at(theta - 0.5 * h))) / h;
  const Distribution deriv = (4.0 * d2 - d1) / 3.0;
  CfiResult res;
  double plain = 0.0;
  for (Eigen::Index m = 0; m < p0.size(); ++m) {
    if (p0[m] < 1e-14) {
      ++res.dropped_terms;
      continue;
    }
    res.value += deriv[m] * deriv[m] / p0[m];
    plain += d1[m] * d1[m] / p0[m];
  }
  if (!(res.value >= 0.0) || !std::isfinite(res.value))
    throw NumericalError("cfi_photon_counting: non-finite Fisher information");
  res.richardson_correction = res.value > 0.0 ? std::abs(res.value - plain) / res.value : 0.0;
  return res;
}

inline double cfi_photon_counting(const FieldState& state, const SensingTask& task) {
  return cfi_photon_counting_detail(state, task).value;
}

/// Ideal-Fock references: (2m+1)/N_d and (m^2+m+1)/(2 N_s).
inline double fock_cfi_displacement(int m, double nd) { return (2.0 * m + 1.0) / nd; }
inline double fock_cfi_squeezing(int m, double ns) { return (static_cast<double>(m) * m + m + 1.0) / (2.0 * ns); }

// --- phase sensing ---------------------------------------------------------

/// cos(phi)|0> + sin(phi)|2> on `space`.
inline Vector binary_superposition(double phi, FockSpace space) {
  if (space.dim() < 3) throw InvalidArgument("binary_superposition: dim must be >= 3");
  Vector v = Vector::Zero(space.dim());
  v[0] = std::cos(phi);
  v[2] = std::sin(phi);
  return v;
}

enum class Derivative { analytic, finite_difference };

struct PhaseCfi {
  double value = 0.0;
  double p1 = 0.0;
  bool degenerate = false;  // p1 in {0, 1}: information set to 0
};

/// p_1(Theta) for the POVM eta |phi><phi| + (1 - eta) I / 2 after
/// rho -> e^{i Theta n} rho e^{-i Theta n}.
inline double phase_outcome_probability(const FieldState& state, double phi, double theta_op, double efficiency = 1.0) {
  const Vector v = binary_superposition(phi, state.space());
  const Matrix u = phase_rotation(theta_op, state.space());
  const FieldState s = state.normalized();
  const double p = (v.adjoint() * u * s.rho() * u.adjoint() * v)(0, 0).real();
  return efficiency * p + 0.5 * (1.0 - efficiency);
}

/// CFI of the binary measurement {Pi_1, I - Pi_1} with respect to Theta.
/// Analytic: dp/dTheta = <phi| i[n, rho_Theta] |phi>; the finite-difference
/// variant (step 1e-4, Richardson) is kept for cross-checks.
inline PhaseCfi phase_cfi_binary(const FieldState& state, double phi, double theta_op, double efficiency = 1.0,
                                 Derivative derivative = Derivative::analytic) {
  if (!(efficiency > 0.0 && efficiency <= 1.0)) throw InvalidArgument("phase_cfi_binary: efficiency must lie in (0,1]");
  PhaseCfi out;
  out.p1 = phase_outcome_probability(state, phi, theta_op, efficiency);
  double dp = 0.0;
  if (derivative == Derivative::analytic) {
    const FockSpace space = state.space();
    const Vector v = binary_superposition(phi, space);
    const Matrix u = phase_rotation(theta_op, space);
    const Matrix rho = u * state.normalized().rho() * u.adjoint();
    const Matrix n = space.number();
    const Matrix comm = Complex(0.0, 1.0) * (n * rho - rho * n);
    dp = efficiency * (v.adjoint() * comm * v)(0, 0).real();
  } else {
    const double h = 1e-4;
    auto p = [&](double t) { return phase_outcome_probability(state, phi, t, efficiency); };
    const double d1 = (p(theta_op + h) - p(theta_op - h)) / (2.0 * h);
    const double d2 = (p(theta_op + 0.5 * h) - p(theta_op - 0.5 * h)) / h;
    dp = (4.0 * d2 - d1) / 3.0;
  }
  const double var = out.p1 * (1.0 - out.p1);
  if (var <= 1e-15) {
    out.degenerate = true;
    return out;
  }
  out.value = dp * dp / var;
  return out;
}

/// sin^2 2theta sin^2 2phi sin^2 2Theta / (p (1 - p)) for the pure |theta>.
inline double phase_cfi_pure_closed_form(double theta, double phi, double theta_op) {
  const double p = std::pow(std::cos(theta) * std::cos(phi), 2) + std::pow(std::sin(theta) * std::sin(phi), 2) +
                   0.5 * std::sin(2 * theta) * std::sin(2 * phi) * std::cos(2 * theta_op);
  const double num = std::pow(std::sin(2 * theta) * std::sin(2 * phi) * std::sin(2 * theta_op), 2);
  const double var = p * (1.0 - p);
  return var <= 1e-15 ? 0.0 : num / var;
}

/// 4 Var(n); pure states only.
inline double qfi_pure_phase(const FieldState& state) {
  const FieldState s = state.normalized();
  if (1.0 - s.purity() >= 1e-6) throw InvalidArgument("qfi_pure_phase: state is not pure (1 - Tr rho^2 >= 1e-6)");
  const Distribution p = s.distribution();
  const Eigen::VectorXd n = Eigen::VectorXd::LinSpaced(p.size(), 0.0, static_cast<double>(p.size() - 1));
  const double mean = p.dot(n);
  const double second = p.dot(n.cwiseProduct(n));
  return 4.0 * (second - mean * mean);
}

}  // namespace fockfilter
