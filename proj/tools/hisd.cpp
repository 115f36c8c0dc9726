// Command-line front end: run a config, a named preset, a convergence study or a landscape sweep.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hisd/config.hpp"
#include "hisd/convergence.hpp"
#include "hisd/experiment.hpp"
#include "hisd/landscape.hpp"

namespace {

using namespace hisd;
namespace fs = std::filesystem;

void report_run(const RunConfig& config, const std::string& dir) {
  std::cerr << config.name << ": " << config.tau << " x " << static_cast<long>(config.T / config.tau + 0.5)
            << " steps, k = " << config.scheme.k << '\n';
  const int total = static_cast<int>(config.T / config.tau + 0.5);
  const int every = std::max(1, total / 10);
  RunOutcome out = execute_run(config, [&](const SaddleState& s, const StepDiagnostics& d) {
    if (s.n % every == 0 || s.n == total)
      std::fprintf(stderr, "  step %d  t=%.4g  residual=%.3e  gram_drift=%.2e\n", s.n, s.t, d.residual_inf,
                   d.gram_drift);
  });
  emit_outputs(out, dir);
  std::printf("%s: final residual %.6e (%s), morse index %s, max gram drift %.3e -> %s\n", config.name.c_str(),
              out.report.final_residual_inf, to_string(config.output.residual_form),
              out.morse ? std::to_string(out.morse->index).c_str() : "n/a", out.max_gram_drift, dir.c_str());
  for (const auto& w : out.report.warnings) std::cerr << "warning: " << w << '\n';
}

void report_convergence(const RunConfig& config, const std::string& dir) {
  int last = -1;
  ConvergenceReport r = convergence_study(config, [&](int n, int total) {
    const int pct = static_cast<int>(100.0 * n / total);
    if (pct / 10 != last) {
      last = pct / 10;
      std::cerr << "  reference step " << n << " / " << total << '\n';
    }
  });
  write_convergence(r, config, dir);
  std::printf("%s: %s-convergence\n", config.name.c_str(), r.variable.c_str());
  for (const auto& row : r.rows) {
    std::printf("  tau=%-9.3g h=%-10.4g Err(u)=%.3e", row.tau, row.h, row.err_u);
    for (std::size_t i = 0; i < row.err_v.size(); ++i) std::printf("  Err(v%zu)=%.3e", i + 1, row.err_v[i]);
    if (row.rate_u) std::printf("  rate(u)=%.2f", *row.rate_u);
    std::printf("\n");
  }
  std::printf("  fitted slope u %.3f", r.slope_u);
  for (std::size_t i = 0; i < r.slope_v.size(); ++i) std::printf(", v%zu %.3f", i + 1, r.slope_v[i]);
  std::printf(" -> %s\n", dir.c_str());
}

void report_landscape(const RunConfig& config, const std::string& dir) {
  config.validate();
  const FemSpace space(build_config_mesh(config));
  const Problem problem = build_problem(config);
  const LandscapeSearch search(space, problem, landscape_params(config));
  const SolutionRecord root = landscape_root(search, config);
  std::cerr << "root: index " << root.index << ", residual " << root.residual << '\n';
  LandscapeGraph g = search.build(root, [](const ChildRun& r, const LandscapeGraph& g) {
    std::fprintf(stderr, "  run %zu: node %d %s k=%d dir %c%d -> %s%s%s (classes %zu)\n", g.runs.size(), r.parent,
                 to_string(r.search), r.target, r.sign > 0 ? '+' : '-', r.direction + 1, r.outcome.c_str(),
                 r.node >= 0 ? (" " + std::to_string(r.node)).c_str() : "",
                 r.detail.empty() ? "" : (": " + r.detail).c_str(), g.nodes.size());
  });
  write_landscape(g, config, space, dir);
  std::printf("%s: %zu solution classes from %zu runs%s; by index:", config.name.c_str(), g.nodes.size(),
              g.runs.size(), g.truncated ? " (run budget exhausted)" : "");
  const auto counts = g.count_by_index();
  for (std::size_t i = 0; i < counts.size(); ++i) std::printf(" %zu:%d", i, counts[i]);
  std::printf(" -> %s\n", dir.c_str());
}

std::string directory_for(const RunConfig& c, const std::string& out, bool several) {
  if (out.empty()) return c.output.directory;
  return several ? (fs::path(out) / c.name).string() : out;
}

void dispatch(const RunConfig& c, const std::string& dir) {
  if (c.convergence)
    report_convergence(c, dir);
  else if (c.landscape)
    report_landscape(c, dir);
  else
    report_run(c, dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Index-k saddle points of semilinear elliptic problems by spatiotemporal HiSD"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string preset_name;

  auto* run_cmd = app.add_subcommand("run", "Run one configuration to T and write fields, diagnostics and spectrum");
  run_cmd->add_option("config", config_path, "JSON config file")->required();
  run_cmd->add_option("--out", out_dir, "Output directory (default: output.directory of the config)");

  std::string names;
  for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
  auto* preset_cmd = app.add_subcommand("preset", "Run a built-in experiment: " + names);
  preset_cmd->add_option("name", preset_name, "Preset name")->required();
  preset_cmd->add_option("--out", out_dir, "Output directory (one subdirectory per config when a preset has several)");
  bool print_only = false;
  preset_cmd->add_flag("--print", print_only, "Print the preset's config(s) as JSON instead of running");

  auto* converge_cmd = app.add_subcommand("converge", "Convergence study of a config with a 'convergence' block");
  converge_cmd->add_option("config", config_path, "JSON config file")->required();
  converge_cmd->add_option("--out", out_dir, "Output directory");

  auto* landscape_cmd = app.add_subcommand("landscape", "Solution-landscape sweep of a config with a 'landscape' block");
  landscape_cmd->add_option("config", config_path, "JSON config file")->required();
  landscape_cmd->add_option("--out", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const RunConfig c = load_config(config_path);
      report_run(c, directory_for(c, out_dir, false));
    } else if (preset_cmd->parsed()) {
      const std::vector<RunConfig> configs = preset(preset_name);
      if (print_only) {
        for (const auto& c : configs) std::cout << emit_config(c) << '\n';
        return 0;
      }
      for (const auto& c : configs) dispatch(c, directory_for(c, out_dir, configs.size() > 1));
    } else if (converge_cmd->parsed()) {
      const RunConfig c = load_config(config_path);
      if (!c.convergence) throw Error("config '" + config_path + "' has no 'convergence' block");
      report_convergence(c, directory_for(c, out_dir, false));
    } else if (landscape_cmd->parsed()) {
      const RunConfig c = load_config(config_path);
      if (!c.landscape) throw Error("config '" + config_path + "' has no 'landscape' block");
      report_landscape(c, directory_for(c, out_dir, false));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
