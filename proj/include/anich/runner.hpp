#pragma once

// Turns a RunConfig into a run directory:
//   log.csv        one DiagRecord per logged step
//   snapshots/     t_<time>.f64grid fields
//   meta.json      manifest (status, resolved config, achieved steps)
//   config.txt     resolved config, re-runnable as is
//   report.txt     convergence table (manufactured-solution runs with mms.taus)
//
// .f64grid layout: five ASCII lines
//   magic f64grid/1
//   dim <d>
//   n <n_x> [<n_y>]
//   length <L_x> [<L_y>]
//   time <t>
// then n_x*n_y little-endian doubles, row-major with x fastest.

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anich/config.hpp"
#include "anich/diagnostics.hpp"

namespace anich {

namespace fs = std::filesystem;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Centers and radii of the two-circle initial condition.
struct Circle {
  double x, y, r;
};
inline const std::vector<Circle>& two_circles() {
  static const std::vector<Circle> c{{kPi - 0.7, kPi - 0.6, 1.5}, {kPi + 1.65, kPi + 1.6, 0.7}};
  return c;
}

/// Uniform [0, 1) samples, one per grid point in storage order.
inline std::vector<double> uniform_samples(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> out(count);
  for (double& v : out) v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return out;
}

inline Field build_initial(const RunConfig& cfg) {
  const GridPtr grid = build_grid(cfg.grid.dim, cfg.grid.n, cfg.grid.length);
  const int dim = cfg.grid.dim;
  auto need = [&](int d, const char* what) {
    if (dim != d) throw InvalidArgument(std::string(what) + " needs a " + std::to_string(d) + "D grid");
  };
  switch (cfg.initial.kind) {
    case InitialKind::AbsSin:
      need(1, "abs_sin");
      return Field::sample(grid, [](double x) { return std::abs(std::sin(x)); });
    case InitialKind::Mms:
      need(1, "mms");
      return mms_exact(grid, 0.0);
    case InitialKind::RandomAroundMinus03:
    case InitialKind::RandomAroundMinus05: {
      const bool m03 = cfg.initial.kind == InitialKind::RandomAroundMinus03;
      need(m03 ? 1 : 2, m03 ? "random_minus03" : "random_minus05");
      const double base = m03 ? -0.3 : -0.5;
      const auto r = uniform_samples(grid->size(), cfg.seed);
      Field phi(grid);
      for (std::size_t p = 0; p < phi.size(); ++p) phi[p] = base + 0.001 * r[p];
      return phi;
    }
    case InitialKind::TwoCircles: {
      need(2, "two_circles");
      const double w = 1.2 * cfg.model.epsilon;
      return Field::sample(grid, [w](double x, double y) {
        double s = 1.0;
        for (const Circle& c : two_circles()) s -= std::tanh((std::hypot(x - c.x, y - c.y) - c.r) / w);
        return s;
      });
    }
    case InitialKind::Expression: {
      const Expression e(cfg.initial.expression);
      if (dim == 1 && e.uses_y()) throw InvalidArgument("expression uses y on a 1D grid");
      Field phi(grid);
      for (std::size_t p = 0; p < phi.size(); ++p) phi[p] = e(grid->x(p), grid->y(p));
      return phi;
    }
  }
  throw InvalidArgument("unknown initial condition");
}

/// Canonical config text: parse_config(config_text(c)) reproduces c.
inline std::string config_text(const RunConfig& c) {
  std::ostringstream o;
  auto kv = [&](const std::string& k, const std::string& v) { o << k << " = " << v << "\n"; };
  auto num = [&](const std::string& k, double v) { kv(k, format_double(v)); };
  auto list = [&](const std::string& k, const std::vector<double>& v) {
    if (v.empty()) return;
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
    kv(k, s);
  };
  const bool var = is_variable(c.scheme.kind);
  kv("name", c.name);
  kv("seed", std::to_string(c.seed));
  kv("grid.dim", std::to_string(c.grid.dim));
  kv("grid.n", std::to_string(c.grid.n));
  num("grid.length", c.grid.length);
  num("model.epsilon", c.model.epsilon);
  num("model.alpha", c.model.alpha);
  num("model.beta", c.model.beta);
  num("model.mobility", c.model.mobility);
  num("model.eta", c.model.eta);
  kv("model.dealias", c.model.dealias ? "true" : "false");
  kv("model.willmore_pointwise", c.model.willmore_pointwise ? "true" : "false");
  kv("scheme.kind", to_string(c.scheme.kind));
  num("scheme.theta", c.scheme.theta());
  num("scheme.s1", c.scheme.uniform.s1);
  num("scheme.s2", c.scheme.uniform.s2);
  num("scheme.s3", c.scheme.uniform.s3);
  const SavParams& sav = var ? c.scheme.variable.sav : c.scheme.uniform.sav;
  num("sav.c0", sav.c0);
  num("sav.lambda1", sav.lambda1);
  num("sav.lambda2", sav.lambda2);
  num("sav.lambda3", sav.lambda3);
  num("variable.newton_tol", c.scheme.variable.newton_tol);
  kv("variable.newton_max_iters", std::to_string(c.scheme.variable.newton_max_iters));
  if (!std::isnan(c.scheme.variable.gamma_cap)) num("variable.gamma_cap", c.scheme.variable.gamma_cap);
  num("steps.T", c.steps.horizon);
  kv("steps.kind", c.steps.kind == StepKind::Uniform ? "uniform" : "random");
  num("steps.tau", c.steps.tau);
  num("steps.tau_max", c.steps.tau_max);
  num("steps.delta", c.steps.delta);
  num("steps.gamma_cap", c.steps.gamma_cap);
  kv("steps.seed", std::to_string(c.steps.seed));
  kv("initial.kind", to_string(c.initial.kind));
  if (c.initial.kind == InitialKind::Expression) kv("initial.expression", c.initial.expression);
  kv("output.dir", c.output.dir);
  list("output.snapshots", c.output.snapshots);
  kv("output.log_every", std::to_string(c.output.log_every));
  list("mms.taus", c.mms_taus);
  return o.str();
}

// ---- .f64grid ----

struct GridSnapshot {
  int dim = 1;
  std::vector<int> n;
  std::vector<double> length;
  double time = 0.0;
  std::vector<double> values;
};

inline void write_f64grid(const fs::path& path, const Field& phi, double time) {
  const Grid& g = phi.grid();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << "magic f64grid/1\n";
  f << "dim " << g.dim() << "\n";
  f << "n";
  for (int d = 0; d < g.dim(); ++d) f << " " << g.n(d);
  f << "\nlength";
  for (int d = 0; d < g.dim(); ++d) f << " " << format_double(g.length(d));
  f << "\ntime " << format_double(time) << "\n";
  for (std::size_t p = 0; p < phi.size(); ++p) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(phi[p]);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    f.write(bytes, 8);
  }
  if (!f) throw Error("failed writing " + path.string());
}

inline GridSnapshot read_f64grid(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  auto header = [&](const std::string& key) {
    std::string line;
    if (!std::getline(f, line)) throw Error(path.string() + ": truncated header");
    std::istringstream ss(line);
    std::string k;
    ss >> k;
    if (k != key) throw Error(path.string() + ": expected '" + key + "' header line, got '" + line + "'");
    return ss;
  };
  GridSnapshot s;
  {
    auto ss = header("magic");
    std::string v;
    ss >> v;
    if (v != "f64grid/1") throw Error(path.string() + ": unsupported magic '" + v + "'");
  }
  header("dim") >> s.dim;
  if (s.dim != 1 && s.dim != 2) throw Error(path.string() + ": bad dim");
  {
    auto ss = header("n");
    s.n.resize(static_cast<std::size_t>(s.dim));
    for (int& v : s.n) ss >> v;
    if (!ss) throw Error(path.string() + ": bad n line");
  }
  {
    auto ss = header("length");
    s.length.resize(static_cast<std::size_t>(s.dim));
    for (double& v : s.length) ss >> v;
    if (!ss) throw Error(path.string() + ": bad length line");
  }
  header("time") >> s.time;
  std::size_t count = 1;
  for (int v : s.n) {
    if (v <= 0) throw Error(path.string() + ": bad n");
    count *= static_cast<std::size_t>(v);
  }
  s.values.resize(count);
  for (double& v : s.values) {
    char bytes[8];
    if (!f.read(bytes, 8)) throw Error(path.string() + ": truncated data");
    std::uint64_t bits;
    std::memcpy(&bits, bytes, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    v = std::bit_cast<double>(bits);
  }
  if (f.peek() != std::char_traits<char>::eof()) throw Error(path.string() + ": trailing bytes");
  return s;
}

// ---- log.csv ----

inline constexpr const char* kLogHeader = "t,mass,rel_mass_err,energy_original,energy_modified,xi,newton_iters,dt";

inline std::string csv_row(const DiagRecord& r) {
  std::string s = format_double(r.t) + "," + format_double(r.mass) + "," + format_double(r.rel_mass_err) + "," +
                  format_double(r.energy_original) + "," + format_double(r.energy_modified) + ",";
  if (r.xi) s += format_double(*r.xi);
  s += ",";
  if (r.newton_iters) s += std::to_string(*r.newton_iters);
  s += "," + format_double(r.dt);
  return s;
}

/// Parses a log.csv written by run().
inline std::vector<DiagRecord> read_log(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != kLogHeader) throw Error(path.string() + ": unexpected header");
  std::vector<DiagRecord> out;
  int row = 1;
  while (std::getline(f, line)) {
    ++row;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 8) throw Error(path.string() + ": row " + std::to_string(row) + " has the wrong cell count");
    try {
      DiagRecord r;
      r.t = std::stod(cells[0]);
      r.mass = std::stod(cells[1]);
      r.rel_mass_err = std::stod(cells[2]);
      r.energy_original = std::stod(cells[3]);
      r.energy_modified = std::stod(cells[4]);
      if (!cells[5].empty()) r.xi = std::stod(cells[5]);
      if (!cells[6].empty()) r.newton_iters = std::stoi(cells[6]);
      r.dt = std::stod(cells[7]);
      out.push_back(r);
    } catch (const std::exception&) {
      throw Error(path.string() + ": row " + std::to_string(row) + " is malformed");
    }
  }
  return out;
}

// ---- run ----

/// Output root: $ANICH_OUTPUT_ROOT if set, otherwise `fallback`.
inline fs::path output_root(const fs::path& fallback = "runs") {
  if (const char* env = std::getenv("ANICH_OUTPUT_ROOT"); env && *env) return env;
  return fallback;
}

inline std::string snapshot_name(double t) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "t_%.10g.f64grid", t);
  return buf;
}

struct RunResult {
  bool complete = false;
  std::string failure;
  fs::path dir;
  std::size_t steps_taken = 0;
  std::size_t steps_total = 0;
  double t_final = 0.0;
  double achieved_tau_max = 0.0;
  double max_abs_rel_mass_err = 0.0;
  /// Largest per-step increase of the modified energy (<= 0 means monotone).
  double max_energy_increase = -std::numeric_limits<double>::infinity();
  std::vector<std::string> snapshots;
  std::optional<ConvergenceReport> convergence;
};

inline ConvergenceSetup convergence_setup(const RunConfig& c) {
  ConvergenceSetup s;
  s.scheme = c.scheme.kind;
  s.theta = c.scheme.theta();
  s.alpha = c.model.alpha;
  s.s1 = c.scheme.uniform.s1;
  s.s2 = c.scheme.uniform.s2;
  s.taus = c.mms_taus;
  s.horizon = c.steps.horizon;
  s.n = c.grid.n;
  s.model = c.model;
  s.sav = is_variable(c.scheme.kind) ? c.scheme.variable.sav : c.scheme.uniform.sav;
  s.step_kind = c.steps.kind;
  s.seed = c.steps.seed;
  s.delta = c.steps.delta;
  return s;
}

inline std::string convergence_table(const ConvergenceReport& rep, const RunConfig& c) {
  std::ostringstream o;
  o << "scheme " << to_string(c.scheme.kind) << "  theta " << format_double(c.scheme.theta()) << "  alpha "
    << format_double(c.model.alpha) << "  T " << format_double(c.steps.horizon) << "\n";
  o << (c.steps.kind == StepKind::Uniform ? "tau" : "tau_max") << ",error,order\n";
  for (std::size_t i = 0; i < rep.taus.size(); ++i) {
    o << format_double(rep.taus[i]) << "," << (std::isfinite(rep.errors[i]) ? format_double(rep.errors[i]) : "incomplete")
      << ",";
    if (i > 0 && std::isfinite(rep.orders[i - 1])) o << format_double(rep.orders[i - 1]);
    o << "\n";
  }
  o << "status " << (rep.complete() ? "complete" : "incomplete") << "\n";
  return o.str();
}

/// Runs one configuration into output_root(root) / cfg.output.dir.
/// Numerical failures end the run early; the partial log is kept and the
/// manifest says "incomplete".
inline RunResult run(const RunConfig& cfg, const fs::path& root = output_root()) {
  RunResult res;
  res.dir = root / cfg.output.dir;
  fs::create_directories(res.dir / "snapshots");
  {
    std::ofstream ct(res.dir / "config.txt");
    ct << config_text(cfg);
  }

  const StepSequence steps = cfg.step_sequence();
  res.steps_total = steps.size();
  res.achieved_tau_max = steps.max_tau();
  const Field phi0 = build_initial(cfg);
  Source source;
  if (cfg.is_mms()) {
    const GridPtr grid = phi0.grid_ptr();
    ModelParams m = cfg.model;
    m.regularization = is_willmore(cfg.scheme.kind) ? Regularization::Willmore : Regularization::Linear;
    source = [grid, m](double t) { return mms_source(grid, t, m); };
  }

  std::ofstream log(res.dir / "log.csv");
  log << kLogHeader << "\n";
  std::size_t next_snap = 0;
  const double snap_tol = 1e-9 * cfg.steps.horizon;
  double last_modified = 0.0;
  double max_abs_mass = 0.0;
  std::optional<double> mms_error;

  auto snapshots_up_to = [&](const Field& phi, double t) {
    while (next_snap < cfg.output.snapshots.size() && cfg.output.snapshots[next_snap] <= t + snap_tol) {
      const std::string name = snapshot_name(cfg.output.snapshots[next_snap]);
      write_f64grid(res.dir / "snapshots" / name, phi, t);
      res.snapshots.push_back(name);
      ++next_snap;
    }
  };

  try {
    Simulation sim(phi0, cfg.model, cfg.scheme, steps, source);
    DiagRecord r = sim.observe();
    log << csv_row(r) << "\n";
    last_modified = r.energy_modified;
    snapshots_up_to(sim.phi(), sim.t());
    while (!sim.done()) {
      sim.step();
      r = sim.observe();
      const std::size_t k = sim.steps_taken();
      if (k % static_cast<std::size_t>(cfg.output.log_every) == 0 || sim.done()) log << csv_row(r) << "\n";
      max_abs_mass = std::max(max_abs_mass, std::abs(r.rel_mass_err));
      res.max_energy_increase = std::max(res.max_energy_increase, r.energy_modified - last_modified);
      last_modified = r.energy_modified;
      snapshots_up_to(sim.phi(), sim.t());
      res.steps_taken = k;
      res.t_final = sim.t();
    }
    if (cfg.is_mms()) mms_error = l2_norm(sim.phi() - mms_exact(sim.phi().grid_ptr(), sim.t()));
    res.complete = true;
  } catch (const NumericalError& e) {
    res.failure = e.what();
  }
  log.flush();
  res.max_abs_rel_mass_err = max_abs_mass;

  if (cfg.is_mms() && !cfg.mms_taus.empty()) {
    res.convergence = run_convergence(convergence_setup(cfg));
    std::ofstream rep(res.dir / "report.txt");
    rep << convergence_table(*res.convergence, cfg);
  }

  nlohmann::ordered_json meta;
  meta["format"] = "anich-run/1";
  meta["name"] = cfg.name;
  meta["status"] = res.complete ? "complete" : "incomplete";
  if (!res.complete) meta["failure"] = res.failure;
  meta["scheme"] = to_string(cfg.scheme.kind);
  meta["theta"] = cfg.scheme.theta();
  meta["seed"] = cfg.seed;
  meta["steps_seed"] = cfg.steps.seed;
  meta["initial"] = to_string(cfg.initial.kind);
  meta["grid"] = {{"dim", cfg.grid.dim}, {"n", cfg.grid.n}, {"length", cfg.grid.length}};
  meta["steps"] = {{"kind", cfg.steps.kind == StepKind::Uniform ? "uniform" : "random"},
                   {"T", cfg.steps.horizon},
                   {"count", res.steps_total},
                   {"taken", res.steps_taken},
                   {"achieved_tau_max", res.achieved_tau_max},
                   {"achieved_max_ratio", steps.max_ratio()}};
  meta["t_final"] = res.t_final;
  meta["max_abs_rel_mass_err"] = res.max_abs_rel_mass_err;
  meta["max_modified_energy_increase"] =
      std::isfinite(res.max_energy_increase) ? nlohmann::ordered_json(res.max_energy_increase) : nlohmann::ordered_json(nullptr);
  meta["snapshots"] = res.snapshots;
  if (mms_error) meta["mms_error"] = *mms_error;
  if (res.convergence) {
    meta["convergence"] = {{"taus", res.convergence->taus},
                           {"complete", res.convergence->complete()}};
    nlohmann::ordered_json errs = nlohmann::ordered_json::array();
    for (double e : res.convergence->errors) errs.push_back(std::isfinite(e) ? nlohmann::ordered_json(e) : nlohmann::ordered_json(nullptr));
    meta["convergence"]["errors"] = errs;
  }
  meta["config"] = config_text(cfg);
  std::ofstream mf(res.dir / "meta.json");
  mf << meta.dump(2) << "\n";
  return res;
}

}  // namespace anich
