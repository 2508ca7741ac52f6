#pragma once

// Conditional Fock-state filtration: one round is controlled reflection,
// atomic rotation and atomic measurement; rounds are chained through a
// (possibly lossy) delay loop.

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fockfilter/cavity_gate.hpp"
#include "fockfilter/gaussian_states.hpp"

namespace fockfilter {

enum class Outcome { g, s };

inline int level_of(Outcome o) { return o == Outcome::g ? kLevelG : kLevelS; }
inline std::string_view to_string(Outcome o) { return o == Outcome::g ? "g" : "s"; }
inline Outcome parse_outcome(std::string_view s) {
  if (s == "g") return Outcome::g;
  if (s == "s") return Outcome::s;
  throw InvalidArgument("unknown atomic outcome '" + std::string(s) + "'");
}

/// (sigma_z - sigma_x)/sqrt2 in the ordered basis {|g>, |s>}, with
/// sigma_z = diag(-1, +1). Outcome g then keeps cos^2(n phi / 2).
inline Eigen::Matrix2cd standard_rotation() {
  Eigen::Matrix2cd r;
  r << -1.0, -1.0, -1.0, 1.0;
  return r / std::sqrt(2.0);
}

/// (|g> + |s>)/sqrt2, the atom preparation of every round.
inline Eigen::Vector2cd atom_preparation() { return Eigen::Vector2cd::Constant(1.0 / std::sqrt(2.0)); }

struct RoundSpec {
  double detuning_ratio = 0.0;
  Eigen::Matrix2cd rotation = standard_rotation();
  Outcome outcome = Outcome::g;

  static RoundSpec with_phase(double phi, Outcome outcome) {
    return {detuning_for_phase(phi), standard_rotation(), outcome};
  }

  double ideal_phase() const { return phase_for_detuning(detuning_ratio); }

  void validate() const {
    const double defect = (rotation.adjoint() * rotation - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff();
    if (defect > 1e-10) throw InvalidArgument("RoundSpec: rotation is not unitary");
    if (!std::isfinite(detuning_ratio)) throw InvalidArgument("RoundSpec: detuning must be finite");
  }

  friend bool operator==(const RoundSpec& a, const RoundSpec& b) {
    return a.detuning_ratio == b.detuning_ratio && a.rotation == b.rotation && a.outcome == b.outcome;
  }
};

struct RoundResult {
  FieldState state;
  double probability;
};

struct DistributionResult {
  Distribution distribution;
  double probability;
};

inline void require_heralding(double p, const char* who) {
  if (!(p >= 1e-12))
    throw HeraldingError(std::string(who) + ": outcome probability " + std::to_string(p) + " below 1e-12");
}

/// One filtration round on an arbitrary field state. Loop loss tau is
/// applied to the heralded output.
inline RoundResult filtration_round(const FieldState& field, const RoundSpec& round, const CavityParams& params) {
  round.validate();
  const CavityParams p = params.with_detuning(round.detuning_ratio);
  const Eigen::Vector2cd atom = atom_preparation();
  const JointState joint = JointState::product(atom * atom.adjoint(), field);
  const JointState reflected = controlled_reflection(joint, p).rotate_atom(round.rotation);
  const FieldState heralded = reflected.project_atom(level_of(round.outcome));
  const double prob = heralded.trace();
  require_heralding(prob, "filtration_round");
  return {loss_channel(heralded.normalized(), p.loop_transmission), prob};
}

namespace detail {

// Table of loss amplitudes amp(m, j) = amplitude of keeping j of m photons.
inline Eigen::MatrixXd keep_amplitudes(double eta, int dim) {
  Eigen::MatrixXd amp = Eigen::MatrixXd::Zero(dim, dim);
  for (int m = 0; m < dim; ++m)
    for (int j = 0; j <= m; ++j) amp(m, j) = loss_amplitude(m, m - j, eta);
  return amp;
}

// Output populations of one round for a diagonal input, both outcomes.
inline std::array<Distribution, 2> round_populations(const Distribution& p, const ReflectionPair& refl,
                                                     const Eigen::Matrix2cd& rotation) {
  const int d = static_cast<int>(p.size());
  const std::array<double, 2> eta = {std::min(1.0, std::norm(refl[0])), std::min(1.0, std::norm(refl[1]))};
  const std::array<double, 2> phase = {std::arg(refl[0]), std::arg(refl[1])};
  const std::array<Eigen::MatrixXd, 2> amp = {keep_amplitudes(eta[0], d),
                                              eta[1] == eta[0] ? keep_amplitudes(eta[0], d)
                                                               : keep_amplitudes(eta[1], d)};
  const Eigen::Vector2cd atom = atom_preparation();
  std::array<Distribution, 2> out = {Distribution::Zero(d), Distribution::Zero(d)};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      Distribution w = Distribution::Zero(d);
      for (int j = 0; j < d; ++j) {
        double acc = 0.0;
        for (int m = j; m < d; ++m) acc += amp[a](m, j) * amp[b](m, j) * p[m];
        w[j] = acc;
      }
      for (int o = 0; o < 2; ++o) {
        const Complex c = rotation(o, a) * std::conj(rotation(o, b)) * atom[a] * std::conj(atom[b]);
        for (int j = 0; j < d; ++j) out[o][j] += (c * std::polar(1.0, (phase[a] - phase[b]) * j)).real() * w[j];
      }
    }
  return out;
}

}  // namespace detail

/// Population-only round: exact for the diagonal of the output, which
/// depends on the input diagonal alone.
inline DistributionResult filtration_round_distribution(const Distribution& p, const RoundSpec& round,
                                                        const CavityParams& params) {
  round.validate();
  const CavityParams cp = params.with_detuning(round.detuning_ratio);
  const auto both = detail::round_populations(p, reflection_coefficients(cp), round.rotation);
  const Distribution& q = both[level_of(round.outcome)];
  const double prob = q.sum();
  require_heralding(prob, "filtration_round_distribution");
  return {attenuate_distribution(q / prob, cp.loop_transmission), prob};
}

/// Ideal-gate closed form: p_n cos^2(n phi/2) (g) or p_n sin^2(n phi/2) (s),
/// renormalized; the normalization is the success probability.
inline DistributionResult thermal_filtration_closed_form(const Distribution& p, double phi, Outcome outcome) {
  Distribution q(p.size());
  for (Eigen::Index n = 0; n < p.size(); ++n) {
    const double c = std::cos(0.5 * phi * static_cast<double>(n));
    q[n] = p[n] * (outcome == Outcome::g ? c * c : 1.0 - c * c);
  }
  const double prob = q.sum();
  require_heralding(prob, "thermal_filtration_closed_form");
  return {q / prob, prob};
}

struct RoundRecord {
  RoundSpec spec;
  double success_probability;
  FieldState state_after;
};

struct FiltrationRecord {
  std::vector<RoundRecord> rounds;
  FieldState final_state;
  double total_probability = 1.0;
};

/// Optional field map applied between consecutive rounds (e.g. dephasing in
/// the delay line).
using FieldMap = std::function<FieldState(const FieldState&)>;

inline FiltrationRecord run_protocol(const FieldState& input, const std::vector<RoundSpec>& schedule,
                                     const CavityParams& params, const FieldMap& between_rounds = {}) {
  if (schedule.empty()) throw InvalidArgument("run_protocol: schedule must not be empty");
  FiltrationRecord record{{}, input, 1.0};
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    FieldState in = (i > 0 && between_rounds) ? between_rounds(record.final_state) : record.final_state;
    RoundResult r = filtration_round(in, schedule[i], params);
    record.total_probability *= r.probability;
    record.rounds.push_back({schedule[i], r.probability, r.state});
    record.final_state = std::move(r.state);
  }
  return record;
}

struct ScheduleOptions {
  double p_min = 0.05;           // smallest acceptable per-round success probability
  double stop_population = 0.8;  // stop once p_target exceeds this
  int grid_points = 720;         // phi scan over (0, pi]
};

struct ScheduleResult {
  std::vector<RoundSpec> rounds;
  bool stalled = false;  // a round was needed but none improved p_target
  double final_population = 0.0;
  double total_probability = 1.0;
};

/// Greedy per-round search: scan phi over (0, pi] and both outcomes with the
/// standard rotation, keep the choice maximizing p_target after the round
/// among those with success probability >= p_min.
inline ScheduleResult optimize_schedule(const FieldState& input, int target_n, int max_rounds,
                                        const CavityParams& params, const ScheduleOptions& options = {}) {
  params.validate();
  if (target_n < 0 || target_n >= input.dim() - 5)
    throw InvalidArgument("optimize_schedule: target_n must be < dim - 5");
  if (max_rounds < 0) throw InvalidArgument("optimize_schedule: max_rounds must be >= 0");
  if (options.grid_points < 1) throw InvalidArgument("optimize_schedule: grid_points must be >= 1");

  ScheduleResult result;
  Distribution p = input.distribution() / input.trace();
  const Eigen::Matrix2cd rot = standard_rotation();
  for (int round = 0; round < max_rounds; ++round) {
    if (p[target_n] > options.stop_population) break;
    struct Best {
      double population = -1.0;
      int k = 0;
      Outcome outcome = Outcome::g;
      double probability = 0.0;
      Distribution next;
    } best;
    for (int k = 1; k <= options.grid_points; ++k) {
      const double phi = kPi * k / options.grid_points;
      const CavityParams cp = params.with_detuning(detuning_for_phase(phi));
      const auto both = detail::round_populations(p, reflection_coefficients(cp), rot);
      for (Outcome o : {Outcome::g, Outcome::s}) {
        const Distribution& q = both[level_of(o)];
        const double prob = q.sum();
        if (prob < options.p_min || prob < 1e-12) continue;
        const double pop = q[target_n] / prob;
        if (pop > best.population) best = {pop, k, o, prob, q / prob};
      }
    }
    if (best.population < 0.0 || best.population <= p[target_n]) {
      result.stalled = true;
      break;
    }
    const RoundSpec spec = RoundSpec::with_phase(kPi * best.k / options.grid_points, best.outcome);
    p = attenuate_distribution(best.next, params.loop_transmission);
    result.rounds.push_back(spec);
    result.total_probability *= best.probability;
  }
  result.final_population = p[target_n];
  return result;
}

/// Single round (phi = pi, standard rotation, outcome g) on the displaced
/// squeezed vacuum rho(alpha, r, 0): heralds approximately
/// cos(theta)|0> + sin(theta)|2>.
inline RoundResult filter_superposition_02(double alpha, double r, const CavityParams& params,
                                           FockSpace space = FockSpace(32)) {
  if (!(r > 0.0)) throw InvalidArgument("filter_superposition_02: r must be > 0");
  const FieldState input = displaced_squeezed_thermal({alpha, r, 0.0}, space);
  return filtration_round(input, RoundSpec::with_phase(kPi, Outcome::g), params);
}

}  // namespace fockfilter
