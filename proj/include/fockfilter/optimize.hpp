#pragma once

// Derivative-free multistart maximization: Nelder-Mead simplex from random
// starting points inside a box, with results collected per start so the
// caller can inspect the spread.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <future>
#include <random>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace fockfilter {

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index size() const { return lower.size(); }
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
};

struct NelderMeadOptions {
  int max_evaluations = 4000;
  double f_tolerance = 1e-12;
  double x_tolerance = 1e-9;
  double initial_step = 0.1;  // fraction of the box width
};

struct LocalResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Maximizes f inside `box` (points are clamped before evaluation).
inline LocalResult nelder_mead_maximize(const std::function<double(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& start, const Box& box,
                                        const NelderMeadOptions& opt = {}) {
  const auto n = start.size();
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    return -f(box.clamp(x));
  };

  std::vector<Eigen::VectorXd> pts(n + 1, box.clamp(start));
  std::vector<double> vals(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double width = box.upper[i] - box.lower[i];
    double step = opt.initial_step * width;
    if (pts[i + 1][i] + step > box.upper[i]) step = -step;
    pts[i + 1][i] += step;
  }
  for (Eigen::Index i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

  std::vector<Eigen::Index> order(n + 1);
  bool converged = false;
  while (evals < opt.max_evaluations) {
    for (Eigen::Index i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const auto best = order.front(), worst = order.back(), second = order[n - 1];

    double xspread = 0.0;
    for (Eigen::Index i = 0; i <= n; ++i) xspread = std::max(xspread, (pts[i] - pts[best]).cwiseAbs().maxCoeff());
    if (std::abs(vals[worst] - vals[best]) <= opt.f_tolerance && xspread <= opt.x_tolerance) {
      converged = true;
      break;
    }
    if (xspread <= opt.x_tolerance * 1e-3) {
      converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i <= n; ++i)
      if (i != worst) centroid += pts[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = box.clamp(centroid + (centroid - pts[worst]));
    const double fr = eval(reflected);
    if (fr < vals[best]) {
      const Eigen::VectorXd expanded = box.clamp(centroid + 2.0 * (centroid - pts[worst]));
      const double fe = eval(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        vals[worst] = fe;
      } else {
        pts[worst] = reflected;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Eigen::VectorXd contracted =
        outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(contracted);
    if (fc < std::min(fr, vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = fc;
      continue;
    }
    // shrink toward the best vertex
    for (Eigen::Index i = 0; i <= n; ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      vals[i] = eval(pts[i]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  const auto idx = std::distance(vals.begin(), it);
  return {box.clamp(pts[idx]), -*it, evals, converged};
}

struct MultistartResult {
  LocalResult best;
  std::vector<double> start_values;  // best value reached from each start, in start order
  double spread = 0.0;               // max - median over starts
};

/// Runs `starts` independent local searches from uniformly drawn points.
/// Start i uses its own generator seeded with (seed, i), so results do not
/// depend on the worker count (0: hardware concurrency).
inline MultistartResult multistart_maximize(const std::function<double(const Eigen::VectorXd&)>& f,
                                            const Box& box, int starts, std::uint64_t seed,
                                            const NelderMeadOptions& opt = {}, unsigned workers = 0) {
  if (starts < 1) starts = 1;
  auto run_start = [&](int i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    Eigen::VectorXd x0(box.size());
    for (Eigen::Index k = 0; k < box.size(); ++k)
      x0[k] = std::uniform_real_distribution<double>(box.lower[k], box.upper[k])(rng);
    return nelder_mead_maximize(f, x0, box, opt);
  };

  if (workers == 0) workers = std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, starts));
  std::vector<LocalResult> results(starts);
  if (workers == 1) {
    for (int i = 0; i < starts; ++i) results[i] = run_start(i);
  } else {
    std::vector<std::future<void>> jobs;
    for (unsigned w = 0; w < workers; ++w)
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (int i = static_cast<int>(w); i < starts; i += static_cast<int>(workers)) results[i] = run_start(i);
      }));
    for (auto& j : jobs) j.get();
  }

  MultistartResult out;
  out.best = results.front();
  for (const auto& r : results) {
    out.start_values.push_back(r.value);
    if (r.value > out.best.value) out.best = r;
  }
  std::vector<double> sorted = out.start_values;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  out.spread = sorted.back() - median;
  return out;
}

}  // namespace fockfilter
