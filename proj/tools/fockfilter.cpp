// fockfilter command-line driver: runs one module per subcommand from a flat
// key = value config and writes CSV/JSON artifacts into --out.

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "fockfilter/fockfilter.hpp"

namespace fs = std::filesystem;
using namespace fockfilter;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

const char* const kColumns = R"(Artifacts (columns are stable):
  filter     record.json            rounds[{detuning_ratio, phase, rotation, outcome,
                                    success_probability, distribution}], total_probability,
                                    dim, final_distribution
             distribution.csv       n,p_n
             qng_report.json        n, p_n, p_gt_n, threshold, absolute_pass, depth, coherence
                                    (+ relative_* with relative = true)
  qng        thresholds.csv         n,threshold,spread,alpha,r,squeeze_phase,dim,seed,starts
             relative.csv           n,eps,threshold               (only when eps is set)
  depth      depth.csv              transmittance,p_n,p_gt_n,threshold,pass
             depth.json             n, threshold, depth, relative_depth (relative = true)
  superpose  record.json, distribution.csv as for filter
             coherence.json         theta, probability, fidelity, c02, coherence_depth
             wigner.csv             x,p,w
  bunch      bunch.json             copies, copy_probability, bunch_probability, total_probability
             distribution.csv       n,p_n
             qng_report.json        as for filter, for n = copies * target_n
  sense      cfi.csv                kind,magnitude,cfi,fock_reference,richardson_correction
             phase.csv              theta_op,probability,cfi,cfi_lossy,qfi
  tmsv       tmsv.csv               lambda,probability,fidelity,fidelity_pnrd
             comparison.json        only with compare = true
  sweep      sweep.csv              n_d,n_s,rounds,probability,p_n,p_gt_n,status

Config grammar: one 'key = value' per line, '#' comments, lists comma
separated; numbers accept pi, k*pi, pi/k, sqrt(x). --set key=value wins.
Exit codes: 0 success, 2 config error, 3 numerical failure.)";

const std::set<std::string> kKnownKeys = {
    // input state
    "alpha", "alpha_phase", "r", "squeeze_phase", "nbar", "fock", "dim",
    // cavity
    "cooperativity", "beta", "loop_transmission",
    // filtration
    "target_n", "max_rounds", "p_min", "stop_population", "grid_points", "phases", "outcomes",
    // thresholds
    "seed", "starts", "relative", "n_max", "eps",
    // superpose
    "wigner_extent", "wigner_points",
    // bunch
    "copies",
    // sense
    "kinds", "magnitudes", "phase_theta", "phase_phi", "efficiency", "phase_points",
    // tmsv
    "tmsv_beta", "detector_efficiency", "lambda", "lambda_points", "compare",
    // sweep / depth
    "nd_values", "ns_values", "workers", "depth_points"};

struct Context {
  Config config;
  fs::path out;
  std::optional<ThresholdCache> cache;

  ThresholdOptions threshold_options() const {
    ThresholdOptions o;
    o.seed = static_cast<std::uint64_t>(config.get_int("seed", static_cast<int>(o.seed)));
    o.starts = config.get_int("starts", o.starts);
    if (o.starts < 1) throw InvalidArgument("starts must be >= 1");
    return o;
  }

  ThresholdResult threshold(int n) {
    const ThresholdOptions o = threshold_options();
    if (cache) return cache->qng_threshold(n, o);
    ThresholdResult r = qng_threshold(n, o);
    if (!r.converged) throw NumericalError("qng_threshold: optimizer did not converge for n=" + std::to_string(n));
    return r;
  }

  std::optional<RelativeThresholdCurve> relative_curve(int n) const {
    if (!config.get_bool("relative", false)) return std::nullopt;
    return RelativeThresholdCurve::tabulate(n, default_eps_grid(), threshold_options());
  }

  fs::path file(const std::string& name) const { return out / name; }
};

int positive_int(const Config& c, const std::string& key, int fallback, int lo = 1) {
  const int v = c.get_int(key, fallback);
  if (v < lo) throw InvalidArgument("config key '" + key + "' must be >= " + std::to_string(lo));
  return v;
}

CavityParams cavity(const Config& c, double default_cooperativity = 250.0) {
  CavityParams p;
  const std::string coop = c.get_string("cooperativity", "");
  p.cooperativity = coop == "inf" ? std::numeric_limits<double>::infinity()
                                  : c.get_double("cooperativity", default_cooperativity);
  p.beta = c.get_double("beta", p.beta);
  p.loop_transmission = c.get_double("loop_transmission", p.loop_transmission);
  p.validate();
  return p;
}

GaussianSpec gaussian(const Config& c) {
  GaussianSpec g;
  g.alpha = std::polar(c.get_double("alpha", 0.0), c.get_double("alpha_phase", 0.0));
  g.r = std::polar(1.0, c.get_double("squeeze_phase", 0.0)) * c.get_double("r", 0.0);
  g.nbar = c.get_double("nbar", 0.0);
  g.validate();
  return g;
}

FockSpace space(const Config& c) { return FockSpace(positive_int(c, "dim", 64, 4)); }

FieldState input_state(const Config& c) {
  const FockSpace s = space(c);
  if (c.has("fock")) {
    const int m = c.get_int("fock", 0);
    if (m < 0 || m >= s.dim()) throw InvalidArgument("config key 'fock' must lie in [0, dim)");
    return FieldState::fock(s, m);
  }
  return displaced_squeezed_thermal(gaussian(c), s);
}

int target_n(const Config& c) { return positive_int(c, "target_n", 10, 0); }

ScheduleOptions schedule_options(const Config& c) {
  ScheduleOptions o;
  o.p_min = c.get_double("p_min", o.p_min);
  o.stop_population = c.get_double("stop_population", o.stop_population);
  o.grid_points = positive_int(c, "grid_points", o.grid_points);
  return o;
}

/// Explicit schedule from phases/outcomes, else the greedy optimizer.
std::vector<RoundSpec> schedule(const Config& c, const FieldState& in, const CavityParams& p) {
  if (c.has("phases")) {
    const std::vector<double> phases = c.get_doubles("phases", {});
    const std::vector<std::string> outcomes = c.get_strings("outcomes", std::vector<std::string>(phases.size(), "g"));
    if (outcomes.size() != phases.size()) throw InvalidArgument("phases and outcomes must have equal length");
    std::vector<RoundSpec> out;
    for (std::size_t i = 0; i < phases.size(); ++i) out.push_back(RoundSpec::with_phase(phases[i], parse_outcome(outcomes[i])));
    return out;
  }
  return optimize_schedule(in, target_n(c), positive_int(c, "max_rounds", 4, 0), p, schedule_options(c)).rounds;
}

FiltrationRecord filter_state(const Config& c, const FieldState& in, const CavityParams& p) {
  const std::vector<RoundSpec> s = schedule(c, in, p);
  if (s.empty()) return {{}, in.normalized(), 1.0};
  return run_protocol(in, s, p);
}

nlohmann::json full_record_json(const FiltrationRecord& rec, const CavityParams& p) {
  nlohmann::json j = record_json(rec);
  j["cavity"] = cavity_json(p);
  return j;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return v;
}

// --- subcommands -----------------------------------------------------------

void cmd_filter(Context& ctx) {
  const Config& c = ctx.config;
  const CavityParams p = cavity(c);
  const int n = target_n(c);
  const FiltrationRecord rec = filter_state(c, input_state(c), p);
  write_json(ctx.file("record.json"), full_record_json(rec, p));
  write_distribution_csv(ctx.file("distribution.csv"), rec.final_state.distribution());
  const auto curve = ctx.relative_curve(n);
  const QngReport report = make_qng_report(rec.final_state, n, ctx.threshold(n).value, curve ? &*curve : nullptr);
  write_json(ctx.file("qng_report.json"), report_json(report));
  std::cout << "rounds=" << rec.rounds.size() << " probability=" << format_double(rec.total_probability)
            << " p_" << n << "=" << format_double(report.p_n) << '\n';
}

void cmd_qng(Context& ctx) {
  const Config& c = ctx.config;
  const int n_max = positive_int(c, "n_max", 10);
  CsvWriter w(ctx.file("thresholds.csv"), {"n", "threshold", "spread", "alpha", "r", "squeeze_phase", "dim", "seed", "starts"});
  for (int n = 1; n <= n_max; ++n) {
    const ThresholdResult t = ctx.threshold(n);
    w.row(n, t.value, t.spread, t.alpha, t.r, t.squeeze_phase, t.dim, std::to_string(t.seed), t.starts);
  }
  if (c.has("eps")) {
    const int n = target_n(c);
    CsvWriter r(ctx.file("relative.csv"), {"n", "eps", "threshold"});
    for (double e : c.get_doubles("eps", {})) r.row(n, e, rqng_threshold(n, e, ctx.threshold_options()).value);
  }
}

void cmd_depth(Context& ctx) {
  const Config& c = ctx.config;
  const CavityParams p = cavity(c);
  const int n = target_n(c);
  const FieldState state = c.has("fock") ? input_state(c) : filter_state(c, input_state(c), p).final_state.normalized();
  const double t_n = ctx.threshold(n).value;
  const Distribution dist = state.distribution() / state.trace();
  CsvWriter w(ctx.file("depth.csv"), {"transmittance", "p_n", "p_gt_n", "threshold", "pass"});
  for (double t : linspace(1.0, 0.9, positive_int(c, "depth_points", 101, 2))) {
    const Distribution q = attenuate_distribution(dist, t);
    w.row(t, q[n], q.tail(q.size() - n - 1).sum(), t_n, q[n] > t_n ? 1 : 0);
  }
  nlohmann::json j = {{"n", n}, {"threshold", t_n}, {"depth", optional_json(qng_depth(state, n, t_n))}};
  if (const auto curve = ctx.relative_curve(n)) j["relative_depth"] = optional_json(qng_depth(state, n, *curve));
  write_json(ctx.file("depth.json"), j);
}

void cmd_superpose(Context& ctx) {
  const Config& c = ctx.config;
  const CavityParams p = cavity(c, 205.0);
  const double alpha = c.get_double("alpha", 1.035), r = c.get_double("r", 0.247);
  const FockSpace s(positive_int(c, "dim", 32, 4));
  const RoundResult res = filter_superposition_02(alpha, r, p, s);
  const FiltrationRecord rec{{{RoundSpec::with_phase(kPi, Outcome::g), res.probability, res.state}}, res.state,
                             res.probability};
  write_json(ctx.file("record.json"), full_record_json(rec, p));
  write_distribution_csv(ctx.file("distribution.csv"), res.state.distribution());
  const double theta = superposition_theta(alpha, r);
  Vector ideal = Vector::Zero(s.dim());
  ideal[0] = std::cos(theta);
  ideal[2] = std::sin(theta);
  const double fidelity = (ideal.adjoint() * res.state.rho() * ideal)(0, 0).real();
  write_json(ctx.file("coherence.json"), {{"theta", theta},
                                          {"probability", res.probability},
                                          {"fidelity", fidelity},
                                          {"c02", coherence_measure(res.state, 0, 2)},
                                          {"coherence_depth", optional_json(coherence_depth(res.state))}});
  const double ext = c.get_double("wigner_extent", 3.0);
  const std::vector<double> xs = linspace(-ext, ext, positive_int(c, "wigner_points", 61, 2));
  const Eigen::MatrixXd w = wigner_grid(res.state, xs, xs);
  CsvWriter out(ctx.file("wigner.csv"), {"x", "p", "w"});
  for (std::size_t ip = 0; ip < xs.size(); ++ip)
    for (std::size_t ix = 0; ix < xs.size(); ++ix) out.row(xs[ix], xs[ip], w(ip, ix));
}

void cmd_bunch(Context& ctx) {
  const Config& c = ctx.config;
  const CavityParams p = cavity(c);
  const int copies = positive_int(c, "copies", 2, 2);
  const int n = target_n(c);
  const FiltrationRecord rec = filter_state(c, input_state(c), p);
  const FieldState copy = rec.final_state.normalized();
  const BunchResult b = bunch_chain(std::vector<FieldState>(copies, copy));
  const int total = copies * n;
  if (total >= b.state.dim()) throw InvalidArgument("copies * target_n exceeds the output truncation");
  write_json(ctx.file("bunch.json"), {{"copies", copies},
                                      {"copy_probability", rec.total_probability},
                                      {"bunch_probability", b.probability},
                                      {"total_probability", std::pow(rec.total_probability, copies) * b.probability}});
  write_distribution_csv(ctx.file("distribution.csv"), b.state.distribution());
  write_json(ctx.file("qng_report.json"), report_json(make_qng_report(b.state, total, ctx.threshold(total).value)));
}

void cmd_sense(Context& ctx) {
  const Config& c = ctx.config;
  const FieldState state = c.has("fock") ? input_state(c) : filter_state(c, input_state(c), cavity(c)).final_state.normalized();
  const int m = c.get_int("fock", target_n(c));
  CsvWriter w(ctx.file("cfi.csv"), {"kind", "magnitude", "cfi", "fock_reference", "richardson_correction"});
  for (const std::string& k : c.get_strings("kinds", {"displacement", "squeezing"})) {
    const SensingKind kind = parse_sensing_kind(k);
    if (kind == SensingKind::phase) throw InvalidArgument("kinds: phase sensing is reported in phase.csv");
    for (double x : c.get_doubles("magnitudes", {1e-3, 1e-2, 1e-1})) {
      const CfiResult r = cfi_photon_counting_detail(state, {kind, x});
      const double ref = kind == SensingKind::displacement ? fock_cfi_displacement(m, x) : fock_cfi_squeezing(m, x);
      w.row(k, x, r.value, ref, r.richardson_correction);
    }
  }
  const double theta = c.get_double("phase_theta", kPi / 4), phi = c.get_double("phase_phi", kPi / 4);
  const double eff = c.get_double("efficiency", 1.0);
  const FockSpace s(6);
  const FieldState probe = FieldState::pure(s, binary_superposition(theta, s));
  const double qfi = qfi_pure_phase(probe);
  const int points = positive_int(c, "phase_points", 91, 2);
  CsvWriter ph(ctx.file("phase.csv"), {"theta_op", "probability", "cfi", "cfi_lossy", "qfi"});
  for (int i = 1; i < points; ++i) {
    const double t = kPi * i / points;
    ph.row(t, phase_outcome_probability(probe, phi, t), phase_cfi_binary(probe, phi, t).value,
           phase_cfi_binary(probe, phi, t, eff).value, qfi);
  }
}

void cmd_tmsv(Context& ctx) {
  const Config& c = ctx.config;
  const int n = target_n(c);
  const double beta = c.get_double("tmsv_beta", 0.99), eff = c.get_double("detector_efficiency", 0.995);
  const int points = positive_int(c, "lambda_points", 199, 2);
  CsvWriter w(ctx.file("tmsv.csv"), {"lambda", "probability", "fidelity", "fidelity_pnrd"});
  for (int i = 1; i <= points; ++i) {
    const double l = static_cast<double>(i) / (points + 1);
    const TmsvSpec lossy{l, beta, n}, pnrd{l, beta, n, eff};
    w.row(l, tmsv_herald_probability(lossy), tmsv_herald_fidelity(lossy), tmsv_herald_fidelity(pnrd));
  }
  if (c.get_bool("compare", false)) {
    const FiltrationRecord rec = filter_state(c, input_state(c), cavity(c));
    const double l = c.get_double("lambda", std::tanh(1.85));
    write_json(ctx.file("comparison.json"), comparison_json(compare_with_filtration(rec, n, {l, beta, n, eff})));
  }
}

void cmd_sweep(Context& ctx) {
  const Config& c = ctx.config;
  const CavityParams p = cavity(c);
  const int n = target_n(c);
  const std::vector<double> nds = c.get_doubles("nd_values", linspace(0.0, 16.0, 17));
  const std::vector<double> nss = c.get_doubles("ns_values", linspace(0.0, 2.0, 11));
  const double nbar = c.get_double("nbar", 0.0);
  const FockSpace s = space(c);
  const int max_rounds = positive_int(c, "max_rounds", 4, 0);
  const ScheduleOptions opt = schedule_options(c);
  for (double v : nds)
    if (v < 0.0) throw InvalidArgument("nd_values must be >= 0");
  for (double v : nss)
    if (v < 0.0) throw InvalidArgument("ns_values must be >= 0");

  struct Row {
    int rounds = 0;
    double probability = 0.0, p_n = 0.0, p_gt_n = 0.0;
    std::string status = "ok";
  };
  const std::size_t total = nds.size() * nss.size();
  std::vector<Row> rows(total);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      const double nd = nds[i / nss.size()], ns = nss[i % nss.size()];
      Row& row = rows[i];
      try {
        const FieldState in = displaced_squeezed_thermal({std::sqrt(nd), std::asinh(std::sqrt(ns)), nbar}, s);
        const ScheduleResult sched = optimize_schedule(in, n, max_rounds, p, opt);
        Distribution d = in.distribution() / in.trace();
        for (const RoundSpec& spec : sched.rounds) d = filtration_round_distribution(d, spec, p).distribution;
        row.rounds = static_cast<int>(sched.rounds.size());
        row.probability = sched.total_probability;
        row.p_n = d[n];
        row.p_gt_n = d.tail(d.size() - n - 1).sum();
      } catch (const NumericalError&) {
        row.status = "numerical_error";
      }
    }
  };
  const int requested = c.get_int("workers", 0);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = std::min<std::size_t>(requested > 0 ? requested : hw, std::max<std::size_t>(total, 1));
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < workers; ++k) pool.emplace_back(work);
  for (auto& t : pool) t.join();

  CsvWriter w(ctx.file("sweep.csv"), {"n_d", "n_s", "rounds", "probability", "p_n", "p_gt_n", "status"});
  for (std::size_t i = 0; i < total; ++i) {
    const Row& r = rows[i];
    w.row(nds[i / nss.size()], nss[i % nss.size()], r.rounds, r.probability, r.p_n, r.p_gt_n, r.status);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fock-state filtration toolkit: heralded photon-number filtering by a cavity-coupled atom,\n"
               "non-Gaussianity certification, bunching, sensing and TMSV baselines."};
  app.footer(kColumns);
  app.require_subcommand(1);

  fs::path config_path, out_dir, cache_path;
  std::vector<std::string> overrides;
  const std::vector<std::pair<std::string, void (*)(Context&)>> commands = {
      {"filter", cmd_filter}, {"qng", cmd_qng},     {"depth", cmd_depth}, {"superpose", cmd_superpose},
      {"bunch", cmd_bunch},   {"sense", cmd_sense}, {"tmsv", cmd_tmsv},   {"sweep", cmd_sweep}};
  const std::map<std::string, std::string> blurbs = {
      {"filter", "filter a Gaussian input towards |target_n>, report QNG"},
      {"qng", "tabulate QNG thresholds T_1..T_n_max (and r-QNG at eps)"},
      {"depth", "QNG depth of the filtered (or Fock) state under pure loss"},
      {"superpose", "one-round filtering of displaced squeezed vacuum to cos|0> + sin|2>"},
      {"bunch", "bunch copies of the filtered state on balanced beamsplitters"},
      {"sense", "Fisher information for displacement, squeezing and phase sensing"},
      {"tmsv", "heralded TMSV baseline curves"},
      {"sweep", "filtration success and purity over a (n_d, n_s) grid"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, blurbs.at(name));
    sub->add_option("--config", config_path, "config file (key = value)")->required();
    sub->add_option("--set", overrides, "override, key=value (repeatable)");
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--cache", cache_path, "threshold cache file (default: $FOCKFILTER_CACHE)");
    sub->footer(kColumns);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    Context ctx;
    ctx.config = Config::load(config_path);
    for (const auto& o : overrides) ctx.config.set(o);
    ctx.config.require_known(kKnownKeys);
    if (cache_path.empty())
      if (const char* env = std::getenv("FOCKFILTER_CACHE"); env && *env) cache_path = env;
    if (!cache_path.empty()) ctx.cache.emplace(cache_path);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) throw InvalidArgument("cannot create output directory " + out_dir.string());
    ctx.out = out_dir;
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) commands[i].second(ctx);
  } catch (const InvalidArgument& e) {
    std::cerr << "fockfilter: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "fockfilter: numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "fockfilter: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
