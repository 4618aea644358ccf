#pragma once

// Run configuration: a flat "section.key = value" text format, validation,
// and the bundled presets.
//
//   # comment
//   name            = my_run
//   seed            = 1
//   grid.dim        = 1            # 1 or 2
//   grid.n          = 128
//   grid.length     = 2*pi
//   model.epsilon   = 0.2          # required
//   model.alpha     = 0.05
//   model.beta      = 6e-4
//   model.mobility  = 1
//   model.eta       = 1e-4
//   model.dealias   = false
//   model.willmore_pointwise = false
//   scheme.kind     = UL           # UL | UW | VL | VW
//   scheme.theta    = 0.75
//   scheme.s1 / s2 / s3            # uniform stabilizers
//   sav.c0 / lambda1 / lambda2 / lambda3
//   variable.newton_tol / newton_max_iters / gamma_cap
//   steps.T         = 1
//   steps.kind      = uniform      # uniform | random
//   steps.tau       = 1e-3         # uniform
//   steps.tau_max   = 1e-3         # random: largest step
//   steps.delta     = 0.1          # random: ratios stay <= gamma*(theta) - delta
//   steps.gamma_cap = 10
//   steps.seed      = <seed>
//   initial.kind    = abs_sin | random_minus03 | random_minus05 | two_circles | expression | mms
//   initial.expression = 0.1*cos(x)
//   output.dir      = <name>
//   output.snapshots = 0, 0.065, 2
//   output.log_every = 1
//   mms.taus        = 1e-2, 5e-3   # convergence table in report.txt (initial.kind = mms)
//
// Values accept arithmetic in pi ("2*pi", "pi/2").

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "anich/diagnostics.hpp"
#include "anich/errors.hpp"
#include "anich/expression.hpp"
#include "anich/step_sequence.hpp"

namespace anich {

enum class InitialKind { AbsSin, RandomAroundMinus03, RandomAroundMinus05, TwoCircles, Expression, Mms };

inline std::string to_string(InitialKind k) {
  switch (k) {
    case InitialKind::AbsSin: return "abs_sin";
    case InitialKind::RandomAroundMinus03: return "random_minus03";
    case InitialKind::RandomAroundMinus05: return "random_minus05";
    case InitialKind::TwoCircles: return "two_circles";
    case InitialKind::Expression: return "expression";
    case InitialKind::Mms: return "mms";
  }
  return "?";
}

struct GridConfig {
  int dim = 1;
  int n = 128;
  double length = kTwoPi;
};

struct StepsConfig {
  double horizon = 1.0;
  StepKind kind = StepKind::Uniform;
  double tau = 1e-3;
  double tau_max = 1e-3;
  double delta = 0.1;
  double gamma_cap = 10.0;
  std::uint64_t seed = 1;
};

struct InitialConfig {
  InitialKind kind = InitialKind::AbsSin;
  std::string expression;
};

struct OutputConfig {
  std::string dir;
  std::vector<double> snapshots;
  int log_every = 1;
};

struct RunConfig {
  std::string name = "run";
  std::uint64_t seed = 1;
  GridConfig grid;
  ModelParams model;
  SchemeConfig scheme;
  StepsConfig steps;
  InitialConfig initial;
  OutputConfig output;
  std::vector<double> mms_taus;
  /// key/value pairs as read, for the manifest
  std::vector<std::pair<std::string, std::string>> entries;

  bool is_mms() const { return initial.kind == InitialKind::Mms; }

  StepSequence step_sequence() const {
    const double th = scheme.theta();
    if (steps.kind == StepKind::Uniform) {
      const double ratio = steps.horizon / steps.tau;
      const int n = static_cast<int>(std::lround(ratio));
      return make_steps(StepKind::Uniform, steps.horizon, n, th, steps.delta, 0, steps.gamma_cap);
    }
    return make_steps_with_max(steps.horizon, steps.tau_max, th, steps.delta, steps.seed, steps.gamma_cap);
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct ConfigReader {
  std::map<std::string, std::pair<std::string, int>> values;  // key -> (value, line)
  std::map<std::string, bool> used;

  bool has(const std::string& key) const { return values.count(key) > 0; }
  const std::pair<std::string, int>& raw(const std::string& key) {
    used[key] = true;
    return values.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const auto& [text, line] = raw(key);
    try {
      const double v = evaluate_constant(text);
      if (!std::isfinite(v)) throw InvalidArgument("not finite");
      return v;
    } catch (const InvalidArgument& e) {
      throw ConfigError(key + ": " + e.what(), line);
    }
  }
  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const int line = values.at(key).second;
    const double v = number(key, fallback);
    if (v != std::floor(v) || std::abs(v) > 2e9) throw ConfigError(key + ": expected an integer", line);
    return static_cast<int>(v);
  }
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const auto& [text, line] = raw(key);
    try {
      if (text.empty() || !std::isdigit(static_cast<unsigned char>(text[0])))
        throw std::invalid_argument("not a digit");
      std::size_t used_chars = 0;
      const unsigned long long v = std::stoull(text, &used_chars);
      if (used_chars != text.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(key + ": expected a non-negative integer", line);
    }
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& [text, line] = raw(key);
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(key + ": expected true or false", line);
  }
  std::string text(const std::string& key, const std::string& fallback) {
    return has(key) ? raw(key).first : fallback;
  }
  std::vector<double> list(const std::string& key) {
    std::vector<double> out;
    if (!has(key)) return out;
    const auto [text, line] = raw(key);
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      try {
        out.push_back(evaluate_constant(item));
      } catch (const InvalidArgument& e) {
        throw ConfigError(key + ": " + e.what(), line);
      }
    }
    return out;
  }
  int line(const std::string& key) const { return has(key) ? values.at(key).second : 0; }
};

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "name", "seed", "grid.dim", "grid.n", "grid.length", "model.epsilon", "model.alpha", "model.beta",
      "model.mobility", "model.eta", "model.dealias", "model.willmore_pointwise", "scheme.kind", "scheme.theta",
      "scheme.s1", "scheme.s2", "scheme.s3", "sav.c0", "sav.lambda1", "sav.lambda2", "sav.lambda3",
      "variable.newton_tol", "variable.newton_max_iters", "variable.gamma_cap", "steps.T", "steps.kind",
      "steps.tau", "steps.tau_max", "steps.delta", "steps.gamma_cap", "steps.seed", "initial.kind",
      "initial.expression", "output.dir", "output.snapshots", "output.log_every", "mms.taus"};
  return keys;
}

}  // namespace detail

/// Parses and validates configuration text. Errors carry the line number.
inline RunConfig parse_config(const std::string& text) {
  detail::ConfigReader in;
  RunConfig cfg;
  std::istringstream stream(text);
  std::string line;
  int lineno = 0;
  while (std::getline(stream, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", lineno);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto& keys = detail::known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError("unknown key '" + key + "'", lineno);
    if (in.has(key)) throw ConfigError("duplicate key '" + key + "'", lineno);
    if (value.empty()) throw ConfigError("empty value for '" + key + "'", lineno);
    in.values[key] = {value, lineno};
    cfg.entries.emplace_back(key, value);
  }

  auto check = [&](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key + ": " + what, in.line(key));
  };

  cfg.name = in.text("name", "run");
  cfg.seed = in.unsigned_integer("seed", 1);

  cfg.grid.dim = in.integer("grid.dim", 1);
  cfg.grid.n = in.integer("grid.n", 128);
  cfg.grid.length = in.number("grid.length", kTwoPi);
  check(cfg.grid.dim == 1 || cfg.grid.dim == 2, "grid.dim", "must be 1 or 2");
  check(cfg.grid.n >= 8 && cfg.grid.n % 2 == 0, "grid.n", "must be even and >= 8");
  check(cfg.grid.length > 0.0, "grid.length", "must be positive");

  if (!in.has("model.epsilon")) throw ConfigError("model.epsilon is required");
  cfg.model.epsilon = in.number("model.epsilon", 0.0);
  cfg.model.alpha = in.number("model.alpha", cfg.model.alpha);
  cfg.model.beta = in.number("model.beta", cfg.model.beta);
  cfg.model.mobility = in.number("model.mobility", cfg.model.mobility);
  cfg.model.eta = in.number("model.eta", cfg.model.eta);
  cfg.model.dealias = in.boolean("model.dealias", false);
  cfg.model.willmore_pointwise = in.boolean("model.willmore_pointwise", false);
  check(cfg.model.epsilon > 0.0, "model.epsilon", "must be positive");
  check(cfg.model.alpha >= 0.0, "model.alpha", "must be non-negative");
  check(cfg.model.beta >= 0.0, "model.beta", "must be non-negative");
  check(cfg.model.mobility > 0.0, "model.mobility", "must be positive");
  check(cfg.model.eta > 0.0, "model.eta", "must be positive");

  const std::string kind = in.text("scheme.kind", "UL");
  const auto scheme = parse_scheme(kind);
  check(scheme.has_value(), "scheme.kind", "must be one of UL, UW, VL, VW");
  cfg.scheme.kind = *scheme;
  const double theta = in.number("scheme.theta", 1.0);
  check(theta >= 0.5 && theta <= 1.0, "scheme.theta", "must lie in [1/2, 1]");
  cfg.scheme.uniform.theta = cfg.scheme.variable.theta = theta;
  cfg.scheme.uniform.s1 = in.number("scheme.s1", 4.0);
  cfg.scheme.uniform.s2 = in.number("scheme.s2", 4.0);
  cfg.scheme.uniform.s3 = in.number("scheme.s3", 0.0);
  for (const char* k : {"scheme.s1", "scheme.s2", "scheme.s3"}) check(in.number(k, 0.0) >= 0.0, k, "must be non-negative");
  SavParams sav;
  sav.c0 = in.number("sav.c0", sav.c0);
  sav.lambda1 = in.number("sav.lambda1", sav.lambda1);
  sav.lambda2 = in.number("sav.lambda2", sav.lambda2);
  sav.lambda3 = in.number("sav.lambda3", sav.lambda3);
  check(sav.c0 > 0.0, "sav.c0", "must be positive");
  for (const char* k : {"sav.lambda1", "sav.lambda2", "sav.lambda3"})
    check(in.number(k, 0.0) >= 0.0, k, "must be non-negative");
  cfg.scheme.uniform.sav = cfg.scheme.variable.sav = sav;
  cfg.scheme.variable.newton_tol = in.number("variable.newton_tol", cfg.scheme.variable.newton_tol);
  cfg.scheme.variable.newton_max_iters = in.integer("variable.newton_max_iters", cfg.scheme.variable.newton_max_iters);
  cfg.scheme.variable.gamma_cap = in.number("variable.gamma_cap", cfg.scheme.variable.gamma_cap);
  check(cfg.scheme.variable.newton_tol > 0.0, "variable.newton_tol", "must be positive");
  check(cfg.scheme.variable.newton_max_iters >= 1, "variable.newton_max_iters", "must be at least 1");

  cfg.steps.horizon = in.number("steps.T", 1.0);
  check(cfg.steps.horizon > 0.0, "steps.T", "must be positive");
  const std::string sk = in.text("steps.kind", "uniform");
  check(sk == "uniform" || sk == "random", "steps.kind", "must be uniform or random");
  cfg.steps.kind = sk == "uniform" ? StepKind::Uniform : StepKind::RandomAdmissible;
  check(cfg.steps.kind == StepKind::Uniform || is_variable(cfg.scheme.kind), "steps.kind",
        "random steps need a variable-step scheme (VL or VW)");
  cfg.steps.tau = in.number("steps.tau", 1e-3);
  cfg.steps.tau_max = in.number("steps.tau_max", cfg.steps.tau);
  cfg.steps.delta = in.number("steps.delta", 0.1);
  cfg.steps.gamma_cap = in.number("steps.gamma_cap", 10.0);
  cfg.steps.seed = in.unsigned_integer("steps.seed", cfg.seed);
  check(cfg.steps.tau > 0.0 && cfg.steps.tau <= cfg.steps.horizon, "steps.tau", "must lie in (0, T]");
  check(cfg.steps.tau_max > 0.0 && cfg.steps.tau_max <= cfg.steps.horizon, "steps.tau_max", "must lie in (0, T]");
  if (cfg.steps.kind == StepKind::Uniform) {
    const double ratio = cfg.steps.horizon / cfg.steps.tau;
    check(std::abs(ratio - std::round(ratio)) <= 1e-6 * ratio && std::round(ratio) >= 2, "steps.tau",
          "T / tau must be an integer >= 2");
  } else {
    check(cfg.steps.delta > 0.0 && cfg.steps.delta < gamma_star(theta), "steps.delta", "must lie in (0, gamma*)");
    check(cfg.steps.gamma_cap >= 1.0, "steps.gamma_cap", "must be >= 1");
  }

  const std::string ic = in.text("initial.kind", "abs_sin");
  const std::map<std::string, InitialKind> ics{{"abs_sin", InitialKind::AbsSin},
                                               {"random_minus03", InitialKind::RandomAroundMinus03},
                                               {"random_minus05", InitialKind::RandomAroundMinus05},
                                               {"two_circles", InitialKind::TwoCircles},
                                               {"expression", InitialKind::Expression},
                                               {"mms", InitialKind::Mms}};
  check(ics.count(ic) > 0, "initial.kind", "unknown initial condition '" + ic + "'");
  cfg.initial.kind = ics.at(ic);
  cfg.initial.expression = in.text("initial.expression", "");
  if (cfg.initial.kind == InitialKind::Expression) {
    check(!cfg.initial.expression.empty(), "initial.kind", "initial.expression is required");
    try {
      const Expression e(cfg.initial.expression);
      check(cfg.grid.dim == 2 || !e.uses_y(), "initial.expression", "uses y on a 1D grid");
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what(), in.line("initial.expression"));
    }
  } else {
    check(!in.has("initial.expression"), "initial.expression", "only used with initial.kind = expression");
  }
  const bool one_d = cfg.initial.kind == InitialKind::AbsSin || cfg.initial.kind == InitialKind::RandomAroundMinus03 ||
                     cfg.initial.kind == InitialKind::Mms;
  const bool two_d = cfg.initial.kind == InitialKind::TwoCircles || cfg.initial.kind == InitialKind::RandomAroundMinus05;
  check(!(one_d && cfg.grid.dim != 1), "initial.kind", ic + " needs grid.dim = 1");
  check(!(two_d && cfg.grid.dim != 2), "initial.kind", ic + " needs grid.dim = 2");
  check(!cfg.is_mms() || std::abs(cfg.grid.length - kTwoPi) < 1e-12, "grid.length",
        "the manufactured solution needs grid.length = 2*pi");

  cfg.output.dir = in.text("output.dir", cfg.name);
  cfg.output.snapshots = in.list("output.snapshots");
  cfg.output.log_every = in.integer("output.log_every", 1);
  check(cfg.output.log_every >= 1, "output.log_every", "must be at least 1");
  for (double t : cfg.output.snapshots)
    check(t >= 0.0 && t <= cfg.steps.horizon * (1 + 1e-12), "output.snapshots", "times must lie in [0, T]");
  std::sort(cfg.output.snapshots.begin(), cfg.output.snapshots.end());

  cfg.mms_taus = in.list("mms.taus");
  check(cfg.mms_taus.empty() || cfg.is_mms(), "mms.taus", "only used with initial.kind = mms");
  for (double t : cfg.mms_taus) check(t > 0.0 && t <= cfg.steps.horizon, "mms.taus", "must lie in (0, T]");

  for (const auto& [key, value] : in.values)
    if (!in.used[key]) throw ConfigError("key '" + key + "' is not used by this configuration", value.second);
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

struct Preset {
  std::string name;
  std::string description;
  std::string text;
};

/// Bundled configurations for the four numerical examples.
inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> list = [] {
    const std::string common =
        "model.epsilon = 0.2\nmodel.beta = 6e-4\nmodel.mobility = 1\nscheme.s1 = 4\nscheme.s2 = 4\n"
        "sav.lambda1 = 0\nsav.lambda2 = 4\n";
    auto mms = [&](const std::string& scheme, const std::string& theta, const std::string& tag) {
      std::string t = "name = example1_" + scheme + "_theta" + tag + "\n" + common +
                      "grid.dim = 1\ngrid.n = 128\nmodel.alpha = 0.05\nscheme.kind = " + scheme +
                      "\nscheme.theta = " + theta + "\nsteps.T = 0.2\ninitial.kind = mms\n"
                      "mms.taus = 1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4\n";
      if (scheme == "UL") return t + "scheme.s1 = 0\nsteps.tau = 1e-3\n";
      return t + "steps.kind = random\nsteps.tau_max = 1e-3\n";
    };
    auto fix_s1 = [](std::string t) {
      // example 1 stabilizes only the gradient term
      const auto p = t.find("scheme.s1 = 4\n");
      if (p != std::string::npos) t.erase(p, 14);
      return t;
    };
    std::vector<Preset> v;
    for (const auto& [theta, tag] : std::vector<std::pair<std::string, std::string>>{
             {"0.5", "050"}, {"0.75", "075"}, {"1", "100"}}) {
      v.push_back({"example1_UL_theta" + tag, "manufactured solution, U_L, alpha 0.05, S1=0, S2=4",
                   fix_s1(mms("UL", theta, tag))});
      v.push_back({"example1_VL_theta" + tag, "manufactured solution, V_L, random steps, tau_max 1e-3",
                   mms("VL", theta, tag)});
    }
    for (const std::string ic : {"abs_sin", "random_minus03"}) {
      const std::string short_ic = ic == "abs_sin" ? "abssin" : "random";
      for (const std::string alpha : {"0", "0.05", "0.3"}) {
        const std::string atag = alpha == "0" ? "0" : alpha == "0.05" ? "005" : "03";
        const std::string base = common + "grid.dim = 1\ngrid.n = 128\nmodel.alpha = " + alpha +
                                 "\nscheme.theta = 0.75\nsteps.T = 1\ninitial.kind = " + ic +
                                 "\noutput.log_every = 10\noutput.snapshots = 0, 1\n";
        const std::string ul = "example2_UL_" + short_ic + "_alpha" + atag;
        v.push_back({ul, "1D mass/energy, U_L, tau 1e-3", "name = " + ul + "\n" + base + "scheme.kind = UL\nsteps.tau = 1e-3\n"});
        const std::string vl = "example2_VL_" + short_ic + "_alpha" + atag;
        v.push_back({vl, "1D mass/energy, V_L, random steps, tau_max 1.0165e-4",
                     "name = " + vl + "\n" + base +
                         "scheme.kind = VL\nsteps.kind = random\nsteps.tau_max = 1.0165e-4\n"});
      }
    }
    for (const std::string alpha : {"0", "0.05", "0.1"}) {
      const std::string atag = alpha == "0" ? "0" : alpha == "0.05" ? "005" : "01";
      const std::string base = common + "grid.dim = 2\ngrid.n = 128\nmodel.alpha = " + alpha +
                               "\nscheme.theta = 0.75\nsteps.T = 2\ninitial.kind = two_circles\n"
                               "output.snapshots = 0, 0.065, 0.199, 2\noutput.log_every = 10\n";
      const std::string ul = "example3_UL_alpha" + atag;
      v.push_back({ul, "2D two circles, U_L, tau 1e-3", "name = " + ul + "\n" + base + "scheme.kind = UL\nsteps.tau = 1e-3\n"});
      const std::string vl = "example3_VL_alpha" + atag;
      v.push_back({vl, "2D two circles, V_L, random steps, tau_max 1e-3",
                   "name = " + vl + "\n" + base + "scheme.kind = VL\nsteps.kind = random\nsteps.tau_max = 1e-3\n"});
    }
    v.push_back({"example4_UL_alpha0", "2D random seed -0.5, isotropic, U_L, tau 5e-2",
                 "name = example4_UL_alpha0\n" + common +
                     "grid.dim = 2\ngrid.n = 128\nmodel.alpha = 0\nscheme.kind = UL\nscheme.theta = 0.75\n"
                     "steps.T = 10\nsteps.tau = 5e-2\ninitial.kind = random_minus05\n"
                     "output.snapshots = 0, 1.115, 3.12, 3.52, 10\n"});
    v.push_back({"example4_UL_alpha02", "2D random seed -0.5, alpha 0.2, U_L, tau 5e-2",
                 "name = example4_UL_alpha02\n" + common +
                     "grid.dim = 2\ngrid.n = 128\nmodel.alpha = 0.2\nscheme.kind = UL\nscheme.theta = 0.75\n"
                     "steps.T = 10\nsteps.tau = 5e-2\ninitial.kind = random_minus05\n"
                     "output.snapshots = 0, 0.965, 2.31, 2.74, 10\n"});
    return v;
  }();
  return list;
}

inline const Preset* find_preset(const std::string& name) {
  for (const auto& p : presets())
    if (p.name == name) return &p;
  return nullptr;
}

}  // namespace anich
