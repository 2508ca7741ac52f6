#pragma once

// Persistence: flat key = value configs, JSON records and reports, CSV.
//
// Config grammar, one entry per line:
//   key = value        # trailing comments allowed
//   # full-line comment, blank lines ignored
// Keys are [A-Za-z0-9_.]+; values are trimmed; lists are comma separated.
// A key may appear once per file; --set key=value overrides win.

#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fockfilter/filtration.hpp"
#include "fockfilter/qng_criteria.hpp"
#include "fockfilter/tmsv_baseline.hpp"

namespace fockfilter {

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  return true;
}

}  // namespace detail

class Config {
 public:
  static Config parse(std::string_view text, const std::string& origin = "<config>") {
    Config c;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string t = detail::trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw InvalidArgument(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
      const std::string key = detail::trim(std::string_view(t).substr(0, eq));
      if (!detail::valid_key(key)) throw InvalidArgument(origin + ":" + std::to_string(lineno) + ": bad key '" + key + "'");
      if (c.values_.count(key)) throw InvalidArgument(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
      c.values_[key] = detail::trim(std::string_view(t).substr(eq + 1));
    }
    return c;
  }

  static Config load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
  }

  /// "key=value" override.
  void set(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw InvalidArgument("--set expects key=value, got '" + std::string(assignment) + "'");
    const std::string key = detail::trim(assignment.substr(0, eq));
    if (!detail::valid_key(key)) throw InvalidArgument("--set: bad key '" + key + "'");
    values_[key] = detail::trim(assignment.substr(eq + 1));
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  /// Rejects keys outside `known` (typos would otherwise be silently ignored).
  void require_known(const std::set<std::string>& known) const {
    for (const auto& [k, v] : values_)
      if (!known.count(k)) throw InvalidArgument("unknown config key '" + k + "'");
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : to_double(key, it->second);
  }

  int get_int(const std::string& key, int fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    int v = 0;
    const auto& s = it->second;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw InvalidArgument("config key '" + key + "': not an integer: '" + s + "'");
    return v;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw InvalidArgument("config key '" + key + "': expected true/false");
  }

  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    for (const auto& item : split(it->second)) out.push_back(to_double(key, item));
    return out;
  }

  std::vector<std::string> get_strings(const std::string& key, std::vector<std::string> fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : split(it->second);
  }

  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  static std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
      const auto comma = s.find(',', start);
      const auto end = comma == std::string::npos ? s.size() : comma;
      const std::string item = detail::trim(std::string_view(s).substr(start, end - start));
      if (!item.empty()) out.push_back(item);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  }

  // Accepts plain reals plus "pi", "k*pi", "pi/k" and "sqrt(x)".
  static double to_double(const std::string& key, const std::string& s) {
    auto fail = [&] { return InvalidArgument("config key '" + key + "': not a number: '" + s + "'"); };
    auto plain = [&](std::string_view t) {
      double v = 0.0;
      const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc{} || p != t.data() + t.size()) throw fail();
      return v;
    };
    if (s == "pi") return kPi;
    if (s.size() > 6 && s.starts_with("sqrt(") && s.ends_with(")")) return std::sqrt(plain(std::string_view(s).substr(5, s.size() - 6)));
    if (s.size() > 3 && s.ends_with("*pi")) return plain(std::string_view(s).substr(0, s.size() - 3)) * kPi;
    if (s.size() > 3 && s.starts_with("pi/")) return kPi / plain(std::string_view(s).substr(3));
    return plain(s);
  }

  std::map<std::string, std::string> values_;
};

// --- JSON ------------------------------------------------------------------

inline nlohmann::json distribution_json(const Distribution& p) {
  return std::vector<double>(p.data(), p.data() + p.size());
}

/// Rotation as [Re u00, Im u00, Re u01, Im u01, Re u10, Im u10, Re u11, Im u11].
inline nlohmann::json rotation_json(const Eigen::Matrix2cd& u) {
  nlohmann::json j = nlohmann::json::array();
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      j.push_back(u(r, c).real());
      j.push_back(u(r, c).imag());
    }
  return j;
}

inline Eigen::Matrix2cd rotation_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 8) throw InvalidArgument("rotation must be an array of 8 reals");
  Eigen::Matrix2cd u;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) u(r, c) = Complex(j[4 * r + 2 * c].get<double>(), j[4 * r + 2 * c + 1].get<double>());
  return u;
}

inline nlohmann::json round_spec_json(const RoundSpec& s) {
  return {{"detuning_ratio", s.detuning_ratio},
          {"phase", s.ideal_phase()},
          {"rotation", rotation_json(s.rotation)},
          {"outcome", std::string(to_string(s.outcome))}};
}

inline RoundSpec round_spec_from_json(const nlohmann::json& j) {
  RoundSpec s;
  s.detuning_ratio = j.at("detuning_ratio").get<double>();
  if (j.contains("rotation")) s.rotation = rotation_from_json(j.at("rotation"));
  s.outcome = parse_outcome(j.at("outcome").get<std::string>());
  s.validate();
  return s;
}

inline nlohmann::json cavity_json(const CavityParams& p) {
  nlohmann::json j = {{"beta", p.beta}, {"loop_transmission", p.loop_transmission}};
  if (std::isinf(p.cooperativity))
    j["cooperativity"] = "inf";
  else
    j["cooperativity"] = p.cooperativity;
  return j;
}

inline nlohmann::json record_json(const FiltrationRecord& r) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& rr : r.rounds) {
    nlohmann::json j = round_spec_json(rr.spec);
    j["success_probability"] = rr.success_probability;
    j["distribution"] = distribution_json(rr.state_after.distribution());
    rounds.push_back(std::move(j));
  }
  return {{"rounds", std::move(rounds)},
          {"total_probability", r.total_probability},
          {"dim", r.final_state.dim()},
          {"final_distribution", distribution_json(r.final_state.distribution())}};
}

inline nlohmann::json schedule_json(const std::vector<RoundSpec>& rounds) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : rounds) j.push_back(round_spec_json(s));
  return j;
}

inline std::vector<RoundSpec> schedule_from_json(const nlohmann::json& j) {
  std::vector<RoundSpec> out;
  for (const auto& e : j) out.push_back(round_spec_from_json(e));
  return out;
}

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline constexpr const char* kRelativeFamilyNote =
    "relative threshold uses the loss-augmented Gaussian-core family (assumed noise set)";

inline nlohmann::json report_json(const QngReport& r) {
  nlohmann::json j = {{"n", r.n},
                      {"p_n", r.p_n},
                      {"p_gt_n", r.p_gt_n},
                      {"threshold", r.threshold},
                      {"absolute_pass", r.absolute_pass},
                      {"depth", optional_json(r.depth)},
                      {"coherence", optional_json(r.coherence)}};
  if (r.relative_threshold) {
    j["relative_threshold"] = *r.relative_threshold;
    j["relative_pass"] = r.relative_pass;
    j["relative_depth"] = optional_json(r.relative_depth);
    j["relative_note"] = kRelativeFamilyNote;
  }
  return j;
}

inline nlohmann::json comparison_json(const Comparison& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : c.rows)
    rows.push_back({{"method", r.method}, {"success_probability", r.success_probability}, {"fidelity", r.fidelity}});
  return {{"n", c.n}, {"rows", std::move(rows)}};
}

// --- files -----------------------------------------------------------------

/// Shortest round-trip representation, locale independent.
inline std::string format_double(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
      : out_(path), columns_(columns.size()) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    row_strings(columns);
  }

  template <typename... Ts>
  void row(const Ts&... values) {
    static_assert(sizeof...(Ts) > 0);
    std::vector<std::string> cells;
    (cells.push_back(cell(values)), ...);
    row_strings(cells);
  }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }

  void row_strings(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw std::logic_error("CsvWriter: column count mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

  std::ofstream out_;
  std::size_t columns_;
};

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline void write_distribution_csv(const std::filesystem::path& path, const Distribution& p) {
  CsvWriter w(path, {"n", "p_n"});
  for (Eigen::Index n = 0; n < p.size(); ++n) w.row(static_cast<int>(n), p[n]);
}

}  // namespace fockfilter
