#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kCli = FOCKFILTER_CLI_PATH;
const fs::path kSamples = fs::path(FOCKFILTER_SOURCE_DIR) / "samples";

fs::path scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("fockfilter_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

struct CliRun {
  int code;
  std::string output;
};

CliRun run(const std::string& args, const std::string& env = "") {
  const fs::path log = scratch() / "last.log";
  const std::string cmd = env + (env.empty() ? "" : " ") + kCli.string() + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

CliRun run_sample(const std::string& sub, const std::string& sample, const fs::path& out, const std::string& extra = "") {
  return run(sub + " --config " + (kSamples / sample).string() + " --out " + out.string() + " " + extra);
}

}  // namespace

TEST(Cli, HelpDocumentsColumns) {
  const CliRun r = run("--help");
  EXPECT_EQ(r.code, 0);
  for (const char* cols : {"n,p_n", "n,threshold,spread,alpha,r,squeeze_phase,dim,seed,starts",
                           "transmittance,p_n,p_gt_n,threshold,pass", "x,p,w",
                           "kind,magnitude,cfi,fock_reference,richardson_correction",
                           "theta_op,probability,cfi,cfi_lossy,qfi", "lambda,probability,fidelity,fidelity_pnrd",
                           "n_d,n_s,rounds,probability,p_n,p_gt_n,status"})
    EXPECT_NE(r.output.find(cols), std::string::npos) << cols;
  for (const char* sub : {"filter", "qng", "depth", "superpose", "bunch", "sense", "tmsv", "sweep"})
    EXPECT_NE(r.output.find(sub), std::string::npos) << sub;
}

TEST(Cli, ConfigErrorsExitTwo) {
  const fs::path out = scratch() / "err";
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate --config x --out y").code, 2);
  EXPECT_EQ(run("filter --out " + out.string()).code, 2);
  EXPECT_EQ(run("filter --config /nonexistent.conf --out " + out.string()).code, 2);
  const fs::path typo = write_config("typo.conf", "alpah = 3\n");
  const CliRun t = run("filter --config " + typo.string() + " --out " + out.string());
  EXPECT_EQ(t.code, 2);
  EXPECT_NE(t.output.find("alpah"), std::string::npos);
  const fs::path bad = write_config("bad.conf", "alpha = three\n");
  EXPECT_EQ(run("filter --config " + bad.string() + " --out " + out.string()).code, 2);
  const fs::path ok = write_config("ok.conf", "alpha = 1\ndim = 24\ntarget_n = 2\n");
  EXPECT_EQ(run("filter --config " + ok.string() + " --out " + out.string() + " --set beta=1.5").code, 2);
  EXPECT_EQ(run("filter --config " + ok.string() + " --out " + out.string() + " --set nonsense").code, 2);
}

TEST(Cli, NumericalFailuresExitThree) {
  const fs::path out = scratch() / "num";
  // population far beyond the truncation
  const fs::path big = write_config("big.conf", "alpha = sqrt(30)\ndim = 16\ntarget_n = 4\n");
  const CliRun r = run("filter --config " + big.string() + " --out " + out.string());
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.output.find("numerical"), std::string::npos);
  // the vacuum never heralds |s> through an ideal gate
  const fs::path never = write_config("never.conf", "dim = 8\ntarget_n = 1\nphases = pi\noutcomes = s\ncooperativity = inf\nbeta = 1\n");
  EXPECT_EQ(run("filter --config " + never.string() + " --out " + out.string()).code, 3);
}

TEST(Cli, FilterReproducesThermalColumn) {
  const fs::path out = scratch() / "thermal";
  ASSERT_EQ(run_sample("filter", "thermal_3.conf", out).code, 0);
  const auto rec = nlohmann::json::parse(slurp(out / "record.json"));
  EXPECT_EQ(rec.at("rounds").size(), 4u);
  EXPECT_NEAR(rec.at("total_probability").get<double>(), 0.01, 0.005);
  EXPECT_EQ(first_line(out / "distribution.csv"), "n,p_n");
  const auto rep = nlohmann::json::parse(slurp(out / "qng_report.json"));
  EXPECT_EQ(rep.at("n"), 10);
  EXPECT_NEAR(rep.at("threshold").get<double>(), 0.65, 0.01);
}

TEST(Cli, FilterReproducesSqueezedThermalColumn) {
  const fs::path out = scratch() / "sq";
  ASSERT_EQ(run_sample("filter", "squeezed_thermal.conf", out).code, 0);
  const auto rec = nlohmann::json::parse(slurp(out / "record.json"));
  EXPECT_EQ(rec.at("rounds").size(), 3u);
  EXPECT_NEAR(rec.at("total_probability").get<double>(), 0.17, 0.03);
}

TEST(Cli, RerunsAreByteIdentical) {
  const fs::path a = scratch() / "rerun_a", b = scratch() / "rerun_b";
  ASSERT_EQ(run_sample("filter", "coherent_6.conf", a).code, 0);
  ASSERT_EQ(run_sample("filter", "coherent_6.conf", b).code, 0);
  for (const char* f : {"record.json", "distribution.csv", "qng_report.json"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Cli, SweepIndependentOfWorkerCount) {
  const fs::path cfg = write_config("sweep.conf", "target_n = 4\ndim = 40\nmax_rounds = 3\ngrid_points = 90\n"
                                                   "nd_values = 2, 4, 6\nns_values = 0, 0.3\n");
  const fs::path a = scratch() / "sweep1", b = scratch() / "sweep3";
  ASSERT_EQ(run("sweep --config " + cfg.string() + " --out " + a.string() + " --set workers=1").code, 0);
  ASSERT_EQ(run("sweep --config " + cfg.string() + " --out " + b.string() + " --set workers=3").code, 0);
  const std::string csv = slurp(a / "sweep.csv");
  EXPECT_EQ(csv, slurp(b / "sweep.csv"));
  EXPECT_EQ(first_line(a / "sweep.csv"), "n_d,n_s,rounds,probability,p_n,p_gt_n,status");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
}

TEST(Cli, GoldenColumnsOfEverySubcommand) {
  const fs::path root = scratch() / "golden";
  const fs::path qng = write_config("qng.conf", "n_max = 2\nstarts = 16\neps = 0.1\ntarget_n = 1\n");
  ASSERT_EQ(run("qng --config " + qng.string() + " --out " + (root / "qng").string()).code, 0);
  EXPECT_EQ(first_line(root / "qng" / "thresholds.csv"), "n,threshold,spread,alpha,r,squeeze_phase,dim,seed,starts");
  EXPECT_EQ(first_line(root / "qng" / "relative.csv"), "n,eps,threshold");

  const fs::path depth = write_config("depth.conf", "fock = 10\ndim = 16\nstarts = 16\n");
  ASSERT_EQ(run("depth --config " + depth.string() + " --out " + (root / "depth").string()).code, 0);
  EXPECT_EQ(first_line(root / "depth" / "depth.csv"), "transmittance,p_n,p_gt_n,threshold,pass");
  const auto dj = nlohmann::json::parse(slurp(root / "depth" / "depth.json"));
  EXPECT_NEAR(dj.at("depth").get<double>(), 0.96, 0.005);

  ASSERT_EQ(run_sample("superpose", "superposition.conf", root / "sup", "--set wigner_points=11").code, 0);
  EXPECT_EQ(first_line(root / "sup" / "wigner.csv"), "x,p,w");
  const auto cj = nlohmann::json::parse(slurp(root / "sup" / "coherence.json"));
  EXPECT_NEAR(cj.at("probability").get<double>(), 0.515, 0.02);
  EXPECT_GE(cj.at("c02").get<double>(), 0.86);

  ASSERT_EQ(run_sample("sense", "sense.conf", root / "sense").code, 0);
  EXPECT_EQ(first_line(root / "sense" / "cfi.csv"), "kind,magnitude,cfi,fock_reference,richardson_correction");
  EXPECT_EQ(first_line(root / "sense" / "phase.csv"), "theta_op,probability,cfi,cfi_lossy,qfi");

  ASSERT_EQ(run_sample("tmsv", "tmsv.conf", root / "tmsv", "--set compare=false").code, 0);
  EXPECT_EQ(first_line(root / "tmsv" / "tmsv.csv"), "lambda,probability,fidelity,fidelity_pnrd");
  EXPECT_FALSE(fs::exists(root / "tmsv" / "comparison.json"));

  ASSERT_EQ(run_sample("bunch", "bunch.conf", root / "bunch", "--set starts=16").code, 0);
  const auto bj = nlohmann::json::parse(slurp(root / "bunch" / "bunch.json"));
  for (const char* k : {"copies", "copy_probability", "bunch_probability", "total_probability"}) EXPECT_TRUE(bj.contains(k)) << k;
}

TEST(Cli, ThresholdCacheFromEnvironment) {
  const fs::path cache = scratch() / "env_cache.json", out = scratch() / "cached";
  const fs::path cfg = write_config("fock.conf", "fock = 3\ndim = 12\ntarget_n = 3\nstarts = 16\n");
  ASSERT_EQ(run("depth --config " + cfg.string() + " --out " + out.string(), "FOCKFILTER_CACHE=" + cache.string()).code, 0);
  ASSERT_TRUE(fs::exists(cache));
  const auto j = nlohmann::json::parse(slurp(cache));
  ASSERT_EQ(j.at("entries").size(), 1u);
  EXPECT_EQ(j.at("entries")[0].at("n"), 3);
  // a flag wins over the environment
  const fs::path flag = scratch() / "flag_cache.json";
  ASSERT_EQ(run("depth --config " + cfg.string() + " --out " + out.string() + " --cache " + flag.string(),
                "FOCKFILTER_CACHE=" + cache.string())
                .code,
            0);
  EXPECT_TRUE(fs::exists(flag));
  std::ofstream(scratch() / "broken.json") << "{not json";
  EXPECT_EQ(run("depth --config " + cfg.string() + " --out " + out.string() + " --cache " + (scratch() / "broken.json").string()).code, 2);
}
