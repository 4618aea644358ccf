// anich: command-line front end.
//   anich run <config> | anich run --preset <name>
//   anich sweep <glob> [--jobs N]
//   anich presets list | anich presets show <name> | anich presets export <dir>
//   anich verify
// Exit codes: 0 ok, 2 config error, 3 numerical failure.
// ANICH_OUTPUT_ROOT overrides the output root (default ./runs).

#include <glob.h>

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <thread>

#include "anich/config.hpp"
#include "anich/runner.hpp"
#include "anich/verify.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalFailure = 3;

int report(const anich::RunConfig& cfg, const anich::RunResult& r) {
  std::printf("%s: %s, %zu/%zu steps, t = %.6g, max |rel mass err| = %.3e -> %s\n", cfg.name.c_str(),
              r.complete ? "complete" : "incomplete", r.steps_taken, r.steps_total, r.t_final, r.max_abs_rel_mass_err,
              r.dir.string().c_str());
  if (!r.complete) std::fprintf(stderr, "%s: %s\n", cfg.name.c_str(), r.failure.c_str());
  if (r.convergence && !r.convergence->complete())
    std::fprintf(stderr, "%s: convergence table has incomplete runs\n", cfg.name.c_str());
  return r.complete ? kOk : kNumericalFailure;
}

// Config errors and numerical errors map to their exit codes; a run that
// ends early returns kNumericalFailure through report().
template <class F>
int guarded(const std::string& label, F&& body) {
  try {
    return body();
  } catch (const anich::ConfigError& e) {
    std::fprintf(stderr, "%s: config error: %s\n", label.c_str(), e.what());
    return kConfigError;
  } catch (const anich::InvalidArgument& e) {
    std::fprintf(stderr, "%s: invalid configuration: %s\n", label.c_str(), e.what());
    return kConfigError;
  } catch (const anich::NumericalError& e) {
    std::fprintf(stderr, "%s: numerical failure: %s\n", label.c_str(), e.what());
    return kNumericalFailure;
  }
}

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> out;
  if (glob(pattern.c_str(), 0, nullptr, &g) == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  globfree(&g);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anisotropic Cahn-Hilliard simulator (WSBDF2 + SAV)"};
  app.require_subcommand(1);

  std::string config_path, preset_name, root;
  auto* run_cmd = app.add_subcommand("run", "run one configuration");
  auto* path_opt = run_cmd->add_option("config", config_path, "config file");
  auto* preset_opt = run_cmd->add_option("--preset", preset_name, "bundled preset instead of a file");
  path_opt->excludes(preset_opt);
  run_cmd->add_option("--root", root, "output root (ANICH_OUTPUT_ROOT wins when set)");

  std::string pattern;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep_cmd = app.add_subcommand("sweep", "run every config matching a glob, in parallel");
  sweep_cmd->add_option("glob", pattern, "config glob, e.g. 'configs/*.cfg'")->required();
  sweep_cmd->add_option("-j,--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--root", root, "output root (ANICH_OUTPUT_ROOT wins when set)");

  auto* presets_cmd = app.add_subcommand("presets", "bundled presets");
  presets_cmd->require_subcommand(1);
  auto* list_cmd = presets_cmd->add_subcommand("list", "list preset names");
  std::string show_name;
  auto* show_cmd = presets_cmd->add_subcommand("show", "print a preset's config text");
  show_cmd->add_option("name", show_name)->required();

  std::string export_dir;
  auto* export_cmd = presets_cmd->add_subcommand("export", "write every preset to <dir>/<name>.cfg");
  export_cmd->add_option("dir", export_dir)->required();

  auto* verify_cmd = app.add_subcommand("verify", "quick invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  const std::filesystem::path out_root = anich::output_root(root.empty() ? "runs" : root);

  if (*run_cmd) {
    if (config_path.empty() && preset_name.empty()) {
      std::fprintf(stderr, "run: give a config file or --preset\n");
      return kConfigError;
    }
    const std::string label = preset_name.empty() ? config_path : preset_name;
    return guarded(label, [&] {
      anich::RunConfig cfg;
      if (!preset_name.empty()) {
        const anich::Preset* p = anich::find_preset(preset_name);
        if (!p) throw anich::ConfigError("unknown preset '" + preset_name + "'");
        cfg = anich::parse_config(p->text);
      } else {
        cfg = anich::load_config(config_path);
      }
      return report(cfg, anich::run(cfg, out_root));
    });
  }

  if (*sweep_cmd) {
    const auto files = expand_glob(pattern);
    if (files.empty()) {
      std::fprintf(stderr, "sweep: no files match '%s'\n", pattern.c_str());
      return kConfigError;
    }
    // Validate everything before starting any run.
    std::vector<anich::RunConfig> configs;
    for (const auto& f : files) {
      const int code = guarded(f, [&] {
        configs.push_back(anich::load_config(f));
        return kOk;
      });
      if (code != kOk) return code;
    }
    std::atomic<std::size_t> next{0};
    std::vector<int> codes(configs.size(), kOk);
    std::vector<std::future<void>> workers;
    for (unsigned w = 0; w < std::min<std::size_t>(jobs, configs.size()); ++w)
      workers.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i; (i = next++) < configs.size();)
          codes[i] = guarded(files[i], [&] { return report(configs[i], anich::run(configs[i], out_root)); });
      }));
    for (auto& w : workers) w.get();
    return *std::max_element(codes.begin(), codes.end());
  }

  if (*list_cmd) {
    for (const auto& p : anich::presets()) std::printf("%-28s %s\n", p.name.c_str(), p.description.c_str());
    return kOk;
  }
  if (*show_cmd) {
    const anich::Preset* p = anich::find_preset(show_name);
    if (!p) {
      std::fprintf(stderr, "unknown preset '%s'\n", show_name.c_str());
      return kConfigError;
    }
    std::printf("%s", p->text.c_str());
    return kOk;
  }
  if (*export_cmd) {
    std::filesystem::create_directories(export_dir);
    for (const auto& p : anich::presets()) {
      std::ofstream f(std::filesystem::path(export_dir) / (p.name + ".cfg"));
      f << "# " << p.description << "\n" << p.text;
    }
    return kOk;
  }
  if (*verify_cmd) {
    bool all = true;
    for (const auto& c : anich::verify_invariants()) {
      std::printf("%s  %-32s %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
      all = all && c.pass;
    }
    return all ? kOk : kNumericalFailure;
  }
  return kOk;
}
