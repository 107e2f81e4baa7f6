#pragma once

// Flat key=value experiment configs, e.g.
//
//   K=2
//   map1.left=lsv(0.5)
//   map1.right=affine(2,-1)
//   map2.left=lsv(0.25)
//   map2.right=affine(1.5,-0.75)
//   prob1=example4
//   prob2=complement
//
// or simply `preset=example4` with optional `alpha=` / `beta=`.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "acimlab/error.hpp"
#include "acimlab/maps.hpp"
#include "acimlab/probability.hpp"
#include "acimlab/random_system.hpp"

namespace acimlab::config {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError(what + ": expected a number, got '" + s + "'");
  }
  if (pos != s.size() || !std::isfinite(v)) {
    throw ConfigError(what + ": expected a number, got '" + s + "'");
  }
  return v;
}

class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& is) {
    KeyValueConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string t = trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
      }
      const std::string key = trim(std::string_view(t).substr(0, eq));
      const std::string value = trim(std::string_view(t).substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
      if (!cfg.entries_.emplace(key, value).second) {
        throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
      }
    }
    return cfg;
  }

  static KeyValueConfig parse_string(const std::string& text) {
    std::istringstream is(text);
    return parse(is);
  }

  static KeyValueConfig from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file '" + path + "'");
    return parse(is);
  }

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::optional<std::string> get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  std::string require(const std::string& key) const {
    auto v = get(key);
    if (!v) throw ConfigError("missing required key '" + key + "'");
    return *v;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
  }

  double get_double(const std::string& key, double fallback,
                    double lo = -INFINITY, double hi = INFINITY) const {
    const auto v = get(key);
    const double x = v ? to_double(*v, key) : fallback;
    if (!(x >= lo && x <= hi)) {
      throw ConfigError(key + "=" + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
    }
    return x;
  }

  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback, std::uint64_t lo = 0,
                         std::uint64_t hi = UINT64_MAX) const {
    const auto v = get(key);
    std::uint64_t x = fallback;
    if (v) {
      if (v->empty() || !std::all_of(v->begin(), v->end(), [](unsigned char c) { return std::isdigit(c); })) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + *v + "'");
      }
      try {
        x = std::stoull(*v);
      } catch (const std::exception&) {
        throw ConfigError(key + ": integer out of range");
      }
    }
    if (x < lo || x > hi) {
      throw ConfigError(key + "=" + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
    }
    return x;
  }

  std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    std::vector<double> out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item), key));
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
  }

  /// Canonical sorted `key=value` lines.
  std::string echo() const {
    std::string s;
    for (const auto& [k, v] : entries_) s += k + "=" + v + "\n";
    return s;
  }

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

/// `name(arg, ...)` call or bare atom; arguments may nest.
struct Expr {
  std::string head;
  std::vector<Expr> args;
  bool call = false;

  static Expr parse(const std::string& text) {
    std::size_t pos = 0;
    Expr e = parse_at(text, pos);
    skip_ws(text, pos);
    if (pos != text.size()) throw ConfigError("trailing characters in '" + text + "'");
    return e;
  }

  double number(std::size_t i, const std::string& what) const {
    if (i >= args.size() || args[i].call) throw ConfigError(what + ": bad argument list");
    return to_double(args[i].head, what);
  }

 private:
  static void skip_ws(const std::string& s, std::size_t& p) {
    while (p < s.size() && std::isspace(static_cast<unsigned char>(s[p]))) ++p;
  }

  static Expr parse_at(const std::string& s, std::size_t& p) {
    skip_ws(s, p);
    Expr e;
    const std::size_t start = p;
    while (p < s.size() && s[p] != '(' && s[p] != ')' && s[p] != ',') ++p;
    e.head = trim(std::string_view(s).substr(start, p - start));
    if (e.head.empty()) throw ConfigError("empty expression in '" + s + "'");
    if (p < s.size() && s[p] == '(') {
      e.call = true;
      ++p;
      skip_ws(s, p);
      if (p < s.size() && s[p] == ')') {
        ++p;
        return e;
      }
      for (;;) {
        e.args.push_back(parse_at(s, p));
        skip_ws(s, p);
        if (p >= s.size()) throw ConfigError("unbalanced parentheses in '" + s + "'");
        if (s[p] == ',') {
          ++p;
          continue;
        }
        if (s[p] == ')') {
          ++p;
          break;
        }
        throw ConfigError("unexpected character in '" + s + "'");
      }
    }
    return e;
  }
};

inline std::pair<std::vector<double>, std::vector<double>> parse_table(const Expr& e,
                                                                      const std::string& what) {
  std::vector<double> xs, ys;
  for (const auto& a : e.args) {
    const auto colon = a.head.find(':');
    if (a.call || colon == std::string::npos) throw ConfigError(what + ": table entries are x:y");
    xs.push_back(to_double(trim(a.head.substr(0, colon)), what));
    ys.push_back(to_double(trim(a.head.substr(colon + 1)), what));
  }
  return {xs, ys};
}

/// `lsv(a)` (left only), `affine(slope,intercept)` (right only) or
/// `table(x:y,...)`.
inline Branch parse_branch(const std::string& text, Side side, const std::string& what) {
  const Expr e = Expr::parse(text);
  if (e.head == "lsv" && e.call && e.args.size() == 1) {
    if (side != Side::left) throw ConfigError(what + ": lsv() is a left branch");
    return Branch::lsv_left(e.number(0, what));
  }
  if (e.head == "affine" && e.call && e.args.size() == 2) {
    if (side != Side::right) throw ConfigError(what + ": affine() is a right branch");
    return Branch::affine(e.number(0, what), e.number(1, what));
  }
  if (e.head == "table" && e.call) {
    auto [xs, ys] = parse_table(e, what);
    return Branch::tabulated(std::move(xs), std::move(ys));
  }
  throw ConfigError(what + ": unknown branch '" + text + "'");
}

/// The worked-example probabilities: p_1 = (1 + x^a)/3, p_2 = (2 - x^a)/3 on
/// [0,1/2), and 1/3, 2/3 on [1/2,1].
inline ProbabilityComponent example4_probability(std::size_t k, double alpha) {
  if (k == 0) {
    return ProbabilityComponent::split(kPartitionPoint,
                                       ProbabilityComponent::power_affine(1.0 / 3.0, 1.0 / 3.0, alpha),
                                       ProbabilityComponent::constant(1.0 / 3.0));
  }
  if (k == 1) {
    return ProbabilityComponent::split(kPartitionPoint,
                                       ProbabilityComponent::power_affine(2.0 / 3.0, -1.0 / 3.0, alpha),
                                       ProbabilityComponent::constant(2.0 / 3.0));
  }
  throw ConfigError("example4 probabilities exist for two maps only");
}

inline ProbabilityComponent parse_probability_expr(const Expr& e, std::size_t k, double alpha1,
                                                   const std::string& what) {
  if (e.head == "const" && e.call && e.args.size() == 1) {
    return ProbabilityComponent::constant(e.number(0, what));
  }
  if (e.head == "powaffine" && e.call && e.args.size() == 3) {
    return ProbabilityComponent::power_affine(e.number(0, what), e.number(1, what), e.number(2, what));
  }
  if (e.head == "example4" && !e.call) return example4_probability(k, alpha1);
  if (e.head == "table" && e.call) {
    auto [xs, ys] = parse_table(e, what);
    return ProbabilityComponent::table(std::move(xs), std::move(ys));
  }
  if (e.head == "split" && e.call && e.args.size() == 3) {
    const double at = e.number(0, what);
    if (!(at > 0.0 && at < 1.0)) throw ConfigError(what + ": split point must lie in (0,1)");
    return ProbabilityComponent::split(at, parse_probability_expr(e.args[1], k, alpha1, what),
                                       parse_probability_expr(e.args[2], k, alpha1, what));
  }
  throw ConfigError(what + ": unknown probability '" + e.head + "'");
}

inline RandomMapSystem build_system(const KeyValueConfig& cfg) {
  if (const auto preset = cfg.get("preset")) {
    if (*preset == "example4") {
      return presets::example4(cfg.get_double("alpha", 0.5), cfg.get_double("beta", 0.25));
    }
    if (*preset == "pure_t1") return presets::pure_t1(cfg.get_double("alpha", 0.5));
    throw ConfigError("unknown preset '" + *preset + "'");
  }

  const std::size_t K = cfg.get_uint("K", 2, 2, 256);
  std::vector<MapSpec> maps;
  for (std::size_t k = 1; k <= K; ++k) {
    const std::string p = "map" + std::to_string(k);
    Branch left = parse_branch(cfg.require(p + ".left"), Side::left, p + ".left");
    Branch right = parse_branch(cfg.require(p + ".right"), Side::right, p + ".right");
    std::optional<double> exponent;
    if (cfg.has(p + ".exponent")) exponent = cfg.get_double(p + ".exponent", 0.0);
    maps.emplace_back(std::move(left), std::move(right), exponent);
  }

  const double alpha1 = maps[0].exponent();
  std::vector<std::optional<ProbabilityComponent>> probs(K);
  std::optional<std::size_t> complement_slot;
  for (std::size_t k = 0; k < K; ++k) {
    const std::string key = "prob" + std::to_string(k + 1);
    const auto v = cfg.get(key);
    if (!v || *v == "complement") {
      if (complement_slot) throw ConfigError("at most one probability may be left implicit");
      complement_slot = k;
      continue;
    }
    probs[k] = parse_probability_expr(Expr::parse(*v), k, alpha1, key);
  }
  if (complement_slot) {
    std::vector<ProbabilityComponent> others;
    for (const auto& p : probs) {
      if (p) others.push_back(*p);
    }
    probs[*complement_slot] = ProbabilityComponent::complement(others);
  }
  std::vector<ProbabilityComponent> comps;
  for (auto& p : probs) comps.push_back(std::move(*p));
  return RandomMapSystem(std::move(maps), ProbabilityField(std::move(comps)));
}

/// FNV-1a, used to fingerprint configurations in output metadata.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace acimlab::config
