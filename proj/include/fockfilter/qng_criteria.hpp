#pragma once

// Genuine n-photon quantum non-Gaussianity: the absolute threshold T_n,
// the loss-augmented relative threshold T_n(eps), loss depths, and the
// coherence measure C_{n1,n2} with its depth.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fockfilter/fock_core.hpp"
#include "fockfilter/optimize.hpp"

namespace fockfilter {

/// Normalized core superposition sum_{k<n} c_k |k>.
class CoreState {
 public:
  explicit CoreState(Vector coefficients) : c_(std::move(coefficients)) {
    if (c_.size() < 1) throw InvalidArgument("CoreState: need at least one coefficient");
    const double norm = c_.norm();
    if (!(norm > 0.0)) throw InvalidArgument("CoreState: zero vector");
    c_ /= norm;
  }
  static CoreState basis(int n, int k) {
    Vector c = Vector::Zero(n);
    c[k] = 1.0;
    return CoreState(std::move(c));
  }
  const Vector& coefficients() const noexcept { return c_; }
  int photons() const noexcept { return static_cast<int>(c_.size()); }  // the core spans |0>..|n-1>

 private:
  Vector c_;
};

/// |<n| D(alpha) S(xi) psi_core>|^2.
inline double core_overlap(int n, Complex alpha, Complex xi, const CoreState& core, FockSpace space) {
  if (n < 1) throw InvalidArgument("core_overlap: n must be >= 1");
  if (core.photons() > n) throw InvalidArgument("core_overlap: core must contain at most n-1 photons");
  if (space.dim() < 4 * n) throw TruncationError("core_overlap: truncation dim must be >= 4n");
  const Matrix cols = gaussian_columns(alpha, xi, core.photons(), space);
  return std::norm((cols.row(n) * core.coefficients())(0, 0));
}

// --- thresholds ------------------------------------------------------------

struct ThresholdOptions {
  int starts = 64;
  std::uint64_t seed = 20240611;
  int dim = 0;  // 0: max(64, 4n + 24)
  NelderMeadOptions local{};

  int resolved_dim(int n) const { return dim > 0 ? dim : std::max(64, 4 * n + 24); }
};

struct ThresholdResult {
  int n = 0;
  int dim = 0;
  double value = 0.0;
  double spread = 0.0;  // max - median over starts
  std::uint64_t seed = 0;
  int starts = 0;
  bool converged = false;
  double alpha = 0.0, r = 0.0, squeeze_phase = 0.0, transmittance = 1.0;
};

namespace detail {

// Signed squeezing: r < 0 is the phase-shifted squeeze.
inline Complex signed_squeeze(double r, double phase) { return r * std::exp(Complex(0.0, phase)); }

inline Box gaussian_box(int n, bool with_transmittance) {
  const int k = with_transmittance ? 4 : 3;
  Box box{Eigen::VectorXd(k), Eigen::VectorXd(k)};
  box.lower.head<3>() << 0.0, -1.5, 0.0;
  box.upper.head<3>() << std::max(3.0, std::sqrt(static_cast<double>(n)) + 1.5), 1.5, kPi;
  if (with_transmittance) {
    box.lower[3] = 0.0;
    box.upper[3] = 1.0;
  }
  return box;
}

// max psi^H A psi  s.t.  psi^H B psi <= eps, |psi| = 1.
// Lagrangian: top eigenvector of A - mu B, bisection on mu >= 0.
inline double constrained_max(const Matrix& a, const Matrix& b, double eps) {
  auto top = [](const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    return Vector(es.eigenvectors().col(m.rows() - 1));
  };
  auto form = [](const Matrix& m, const Vector& v) { return (v.adjoint() * m * v)(0, 0).real(); };
  Vector v = top(a);
  if (form(b, v) <= eps) return form(a, v);
  Eigen::SelfAdjointEigenSolver<Matrix> bes(b, Eigen::EigenvaluesOnly);
  if (bes.eigenvalues().minCoeff() > eps) return 0.0;  // infeasible
  double lo = 0.0, hi = 1.0;
  while (form(b, top(a - hi * b)) > eps && hi < 1e12) hi *= 4.0;
  double best = form(b, top(a - hi * b)) <= eps ? form(a, top(a - hi * b)) : 0.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    const Vector w = top(a - mid * b);
    if (form(b, w) <= eps) {
      hi = mid;
      best = std::max(best, form(a, w));
    } else {
      lo = mid;
    }
  }
  return best;
}

}  // namespace detail

/// T_n = max over alpha, xi and the core of |<n|D(alpha)S(xi)psi_{n-1}>|^2.
/// The core maximization is exact: sum_{k<n} |<n|D S|k>|^2.
inline ThresholdResult qng_threshold(int n, const ThresholdOptions& options = {}) {
  if (n < 1) throw InvalidArgument("qng_threshold: n must be >= 1");
  const FockSpace space(options.resolved_dim(n));
  auto objective = [&](const Eigen::VectorXd& x) {
    const Matrix cols = gaussian_columns(x[0], detail::signed_squeeze(x[1], x[2]), n, space);
    return cols.row(n).squaredNorm();
  };
  const auto ms = multistart_maximize(objective, detail::gaussian_box(n, false), options.starts, options.seed,
                                      options.local);
  ThresholdResult res;
  res.n = n;
  res.dim = space.dim();
  res.value = ms.best.value;
  res.spread = ms.spread;
  res.seed = options.seed;
  res.starts = options.starts;
  res.converged = ms.best.converged;
  res.alpha = ms.best.x[0];
  res.r = ms.best.x[1];
  res.squeeze_phase = ms.best.x[2];
  return res;
}

/// Core-optimized value at fixed (alpha, xi, T): max p_n of
/// loss(T)(D S psi) subject to p_{>n} <= eps. Population beyond the
/// truncation is counted as multi-photon error (conservative).
inline double rqng_objective(int n, double eps, Complex alpha, Complex xi, double transmittance, FockSpace space) {
  const int d = space.dim();
  const Matrix cols = gaussian_columns(alpha, xi, n, space);
  Distribution w_n = Distribution::Zero(d);
  Distribution w_above = Distribution::Zero(d);
  for (int m = n; m < d; ++m) {
    const double a = detail::loss_amplitude(m, m - n, transmittance);
    w_n[m] = a * a;
    double kept_low = 0.0;
    for (int j = 0; j <= n; ++j) {
      const double b = detail::loss_amplitude(m, m - j, transmittance);
      kept_low += b * b;
    }
    w_above[m] = std::max(0.0, 1.0 - kept_low);
  }
  const Matrix gram = cols.adjoint() * cols;
  const Matrix a = cols.adjoint() * w_n.cast<Complex>().asDiagonal() * cols;
  const Matrix b = cols.adjoint() * w_above.cast<Complex>().asDiagonal() * cols + (Matrix::Identity(n, n) - gram);
  return detail::constrained_max(0.5 * (a + a.adjoint()), 0.5 * (b + b.adjoint()), eps);
}

/// Relative threshold T_n(eps): max p_n over lossy Gaussian-transformed
/// cores with p_{>n} <= eps. The admitted noise family (pure loss) is an
/// assumption of this library.
inline ThresholdResult rqng_threshold(int n, double eps, const ThresholdOptions& options = {}) {
  if (n < 1) throw InvalidArgument("rqng_threshold: n must be >= 1");
  if (!(eps >= 0.0 && eps <= 1.0)) throw InvalidArgument("rqng_threshold: eps must lie in [0,1]");
  const FockSpace space(options.resolved_dim(n));
  auto objective = [&](const Eigen::VectorXd& x) {
    return rqng_objective(n, eps, x[0], detail::signed_squeeze(x[1], x[2]), x[3], space);
  };
  const auto ms = multistart_maximize(objective, detail::gaussian_box(n, true), options.starts, options.seed,
                                      options.local);
  ThresholdResult res;
  res.n = n;
  res.dim = space.dim();
  res.value = ms.best.value;
  res.spread = ms.spread;
  res.seed = options.seed;
  res.starts = options.starts;
  res.converged = ms.best.converged;
  res.alpha = ms.best.x[0];
  res.r = ms.best.x[1];
  res.squeeze_phase = ms.best.x[2];
  res.transmittance = ms.best.x[3];
  return res;
}

/// Error-mass grid used when tabulating T_n(eps).
inline std::vector<double> default_eps_grid() { return {0.0, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0}; }

/// Tabulated T_n(eps), linearly interpolated and made non-decreasing.
class RelativeThresholdCurve {
 public:
  RelativeThresholdCurve(std::vector<double> eps, std::vector<double> values)
      : eps_(std::move(eps)), values_(std::move(values)) {
    if (eps_.size() != values_.size() || eps_.size() < 2)
      throw InvalidArgument("RelativeThresholdCurve: need >= 2 matching points");
    for (std::size_t i = 1; i < eps_.size(); ++i) {
      if (!(eps_[i] > eps_[i - 1])) throw InvalidArgument("RelativeThresholdCurve: eps must increase");
      values_[i] = std::max(values_[i], values_[i - 1]);
    }
  }

  static RelativeThresholdCurve tabulate(int n, const std::vector<double>& eps, const ThresholdOptions& options = {}) {
    std::vector<double> v;
    for (double e : eps) v.push_back(rqng_threshold(n, e, options).value);
    return {eps, v};
  }

  double operator()(double eps) const {
    if (eps <= eps_.front()) return values_.front();
    if (eps >= eps_.back()) return values_.back();
    const auto it = std::upper_bound(eps_.begin(), eps_.end(), eps);
    const std::size_t i = static_cast<std::size_t>(it - eps_.begin());
    const double t = (eps - eps_[i - 1]) / (eps_[i] - eps_[i - 1]);
    return values_[i - 1] + t * (values_[i] - values_[i - 1]);
  }

  const std::vector<double>& eps() const noexcept { return eps_; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> eps_;
  std::vector<double> values_;
};

// --- threshold cache -------------------------------------------------------

/// JSON file of computed thresholds keyed by (n, dim, seed).
class ThresholdCache {
 public:
  explicit ThresholdCache(std::filesystem::path path) : path_(std::move(path)) { load(); }

  std::optional<ThresholdResult> find(int n, int dim, std::uint64_t seed) const {
    std::lock_guard lock(mu_);
    for (const auto& e : entries_)
      if (e.n == n && e.dim == dim && e.seed == seed) return e;
    return std::nullopt;
  }

  void store(const ThresholdResult& r) {
    std::lock_guard lock(mu_);
    std::erase_if(entries_, [&](const ThresholdResult& e) { return e.n == r.n && e.dim == r.dim && e.seed == r.seed; });
    entries_.push_back(r);
    save();
  }

  /// Cached T_n, computed (and stored) on a miss or when `recompute` is set.
  ThresholdResult qng_threshold(int n, const ThresholdOptions& options = {}, bool recompute = false) {
    if (!recompute)
      if (auto hit = find(n, options.resolved_dim(n), options.seed)) return *hit;
    ThresholdResult r = fockfilter::qng_threshold(n, options);
    if (!r.converged) throw NumericalError("qng_threshold: optimizer did not converge for n=" + std::to_string(n));
    store(r);
    return r;
  }

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  void load() {
    entries_.clear();
    std::ifstream in(path_);
    if (!in) return;
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument("threshold cache " + path_.string() + " is not valid JSON: " + e.what());
    }
    for (const auto& e : j.at("entries")) {
      ThresholdResult r;
      r.n = e.at("n");
      r.dim = e.at("dim");
      r.value = e.at("value");
      r.spread = e.at("spread");
      r.seed = e.at("seed");
      r.starts = e.value("starts", 0);
      r.converged = true;
      r.alpha = e.value("alpha", 0.0);
      r.r = e.value("r", 0.0);
      r.squeeze_phase = e.value("squeeze_phase", 0.0);
      entries_.push_back(r);
    }
  }

  void save() const {
    nlohmann::json j;
    j["entries"] = nlohmann::json::array();
    for (const auto& r : entries_)
      j["entries"].push_back({{"n", r.n},
                              {"dim", r.dim},
                              {"value", r.value},
                              {"spread", r.spread},
                              {"seed", r.seed},
                              {"starts", r.starts},
                              {"alpha", r.alpha},
                              {"r", r.r},
                              {"squeeze_phase", r.squeeze_phase}});
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_);
    out << j.dump(2) << '\n';
  }

  std::filesystem::path path_;
  std::vector<ThresholdResult> entries_;
  mutable std::mutex mu_;
};

// --- depths ----------------------------------------------------------------

/// Smallest T such that `passes` holds on all of [T, 1] (scanned at 1e-3,
/// refined by bisection to 1e-6). nullopt if the state fails at T = 1.
inline std::optional<double> loss_depth(const std::function<bool(double)>& passes) {
  if (!passes(1.0)) return std::nullopt;
  constexpr double step = 1e-3;
  double good = 1.0;
  double bad = -1.0;
  for (int k = 1; k <= 1000; ++k) {
    const double t = 1.0 - k * step;
    if (!passes(std::max(t, 0.0))) {
      bad = std::max(t, 0.0);
      break;
    }
    good = std::max(t, 0.0);
  }
  if (bad < 0.0) return 0.0;
  while (good - bad > 1e-6) {
    const double mid = 0.5 * (good + bad);
    (passes(mid) ? good : bad) = mid;
  }
  return good;
}

/// Absolute QNG depth with the diagonal attenuation rule.
inline std::optional<double> qng_depth(const FieldState& state, int n, double threshold) {
  if (n < 0 || n >= state.dim()) throw InvalidArgument("qng_depth: n out of range");
  const Distribution p = state.distribution() / state.trace();
  return loss_depth([&](double t) { return attenuate_distribution(p, t)[n] > threshold; });
}

/// Relative (r-QNG) depth: p'_n must stay above T_n(p'_{>n}).
inline std::optional<double> qng_depth(const FieldState& state, int n, const RelativeThresholdCurve& curve) {
  if (n < 0 || n >= state.dim()) throw InvalidArgument("qng_depth: n out of range");
  const Distribution p = state.distribution() / state.trace();
  return loss_depth([&](double t) {
    const Distribution q = attenuate_distribution(p, t);
    return q[n] > curve(q.tail(q.size() - n - 1).sum());
  });
}

/// C_{n1,n2} = (max_phi - min_phi) Tr[O(phi) rho] / 2 = 2 |rho_{n1 n2}|.
inline double coherence_measure(const FieldState& state, int n1, int n2) {
  if (n1 == n2) throw InvalidArgument("coherence_measure: n1 and n2 must differ");
  if (n1 < 0 || n2 < 0 || n1 >= state.dim() || n2 >= state.dim())
    throw InvalidArgument("coherence_measure: index out of range");
  return 2.0 * std::abs(state.rho()(n1, n2)) / state.trace();
}

inline constexpr double kCoherenceThreshold02 = 0.86;

/// Depth of the C_02 certification under the full pure-loss channel.
inline std::optional<double> coherence_depth(const FieldState& state, double threshold = kCoherenceThreshold02) {
  return loss_depth([&](double t) { return coherence_measure(loss_channel(state, t), 0, 2) > threshold; });
}

// --- report ----------------------------------------------------------------

struct QngReport {
  int n = 0;
  double p_n = 0.0;
  double p_gt_n = 0.0;
  double threshold = 0.0;
  std::optional<double> relative_threshold;  // T_n(p_{>n}) when a curve is supplied
  bool absolute_pass = false;
  bool relative_pass = false;
  std::optional<double> depth;           // absolute
  std::optional<double> relative_depth;  // r-QNG
  std::optional<double> coherence;       // C_02
};

inline QngReport make_qng_report(const FieldState& state, int n, double threshold,
                                 const RelativeThresholdCurve* curve = nullptr) {
  const FieldState s = state.normalized();
  QngReport r;
  r.n = n;
  r.p_n = s.population(n);
  r.p_gt_n = s.population_above(n);
  r.threshold = threshold;
  r.absolute_pass = r.p_n > threshold;
  r.depth = qng_depth(s, n, threshold);
  if (curve) {
    r.relative_threshold = (*curve)(r.p_gt_n);
    r.relative_pass = r.p_n > *r.relative_threshold;
    r.relative_depth = qng_depth(s, n, *curve);
  }
  if (s.dim() > 2) r.coherence = coherence_measure(s, 0, 2);
  return r;
}

}  // namespace fockfilter
