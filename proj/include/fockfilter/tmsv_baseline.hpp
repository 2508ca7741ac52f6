#pragma once

// Heralded Fock states from a two-mode squeezed vacuum and a
// photon-number-resolving detector, both modes attenuated by beta. The
// detector efficiency adds loss on the heralding mode only.

#include <cmath>
#include <string>
#include <vector>

#include "fockfilter/filtration.hpp"

namespace fockfilter {

struct TmsvSpec {
  double lambda = 0.0;  // tanh r
  double beta = 1.0;    // per-mode transmittance
  int n = 0;            // heralded photon number
  double detector_efficiency = 1.0;

  void validate() const {
    if (!(lambda >= 0.0 && lambda < 1.0)) throw InvalidArgument("TmsvSpec: lambda must lie in [0,1)");
    if (!(beta > 0.0 && beta <= 1.0)) throw InvalidArgument("TmsvSpec: beta must lie in (0,1]");
    if (!(detector_efficiency > 0.0 && detector_efficiency <= 1.0))
      throw InvalidArgument("TmsvSpec: detector efficiency must lie in (0,1]");
    if (n < 0) throw InvalidArgument("TmsvSpec: n must be >= 0");
  }
  double heralding_transmittance() const { return beta * detector_efficiency; }
};

/// Legendre P_n(x) by the three-term recurrence (valid for |x| > 1 too).
inline double legendre(int n, double x) {
  if (n == 0) return 1.0;
  double p0 = 1.0, p1 = x;
  for (int k = 1; k < n; ++k) {
    const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

/// P = (1 - l^2) / (1 - l^2 (1 - eta)) * (l^2 eta / (1 - l^2 (1 - eta)))^n,
/// eta the heralding-path transmittance.
inline double tmsv_herald_probability(const TmsvSpec& spec) {
  spec.validate();
  const double l2 = spec.lambda * spec.lambda;
  const double eta = spec.heralding_transmittance();
  const double den = 1.0 - l2 * (1.0 - eta);
  return (1.0 - l2) / den * std::pow(l2 * eta / den, spec.n);
}

/// <n| rho_A |n> of the heralded mode:
/// F = (1 - l^2)/(P D) (l^2 eta_A eta_B / D)^n P_n((1 + x)/D),
/// x = l^2 (1 - eta_A)(1 - eta_B), D = 1 - x.
inline double tmsv_herald_fidelity(const TmsvSpec& spec) {
  const double p = tmsv_herald_probability(spec);
  const double l2 = spec.lambda * spec.lambda;
  const double ea = spec.beta, eb = spec.heralding_transmittance();
  const double x = l2 * (1.0 - ea) * (1.0 - eb);
  const double d = 1.0 - x;
  if (p <= 0.0) throw HeraldingError("tmsv_herald_fidelity: zero herald probability");
  if (ea == 1.0 && eb == 1.0) return 1.0;  // photon numbers perfectly correlated
  return (1.0 - l2) / (p * d) * std::pow(l2 * ea * eb / d, spec.n) * legendre(spec.n, (1.0 + x) / d);
}

struct ComparisonRow {
  std::string method;
  double success_probability;
  double fidelity;  // p_n of the heralded state
};

struct Comparison {
  int n = 0;
  std::vector<ComparisonRow> rows;
};

/// Pairs the filtration result with the TMSV baseline for the same target.
inline Comparison compare_with_filtration(const FiltrationRecord& filtration, int target_n, const TmsvSpec& spec) {
  spec.validate();
  if (spec.n != target_n)
    throw InvalidArgument("compare_with_filtration: TMSV heralds n=" + std::to_string(spec.n) +
                          " but filtration targets n=" + std::to_string(target_n));
  const FieldState out = filtration.final_state.normalized();
  if (target_n >= out.dim()) throw InvalidArgument("compare_with_filtration: target beyond truncation");
  Comparison c;
  c.n = target_n;
  c.rows.push_back({"filtration", filtration.total_probability, out.population(target_n)});
  c.rows.push_back({"tmsv", tmsv_herald_probability(spec), tmsv_herald_fidelity(spec)});
  return c;
}

}  // namespace fockfilter
