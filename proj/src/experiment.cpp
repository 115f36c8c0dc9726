#include "hisd/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace hisd {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

RunOutcome execute_run(const RunConfig& config, const StepObserver& observer) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const FemSpace space(build_config_mesh(config));
  const Problem problem = build_problem(config);
  check_ellipticity(space, problem);
  const SchemeParams params = build_scheme(config);

  RunOutcome out;
  out.config = config;
  RunResult result = run(space, problem, params, build_initial_state(space, problem, config),
                         config.output.residual_form, observer);
  out.state = std::move(result.state);
  out.report = std::move(result.report);
  for (const auto& d : out.report.steps) {
    out.max_gram_drift = std::max(out.max_gram_drift, d.gram_drift);
    out.max_cross_ortho = std::max(out.max_cross_ortho, d.cross_ortho);
    out.max_half_step_defect = std::max(out.max_half_step_defect, d.half_step_defect);
    out.max_grad_sum = std::max(out.max_grad_sum, d.grad_sum);
  }
  if (config.output.spectrum_count > 0) {
    const HessianOperator h = assemble_hessian(space, problem, out.state.u);
    out.spectrum = spectrum_window(h, std::min(config.output.spectrum_count, space.num_dofs()));
    out.morse = morse_index(out.spectrum);
  }
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

void write_field(const std::string& path, const FemSpace& space, const Vector& u, const std::string& name) {
  space.check_conforming(u, "write_field");
  std::ofstream f(path);
  if (!f) throw Error("cannot write '" + path + "'");
  const Mesh& mesh = space.mesh();
  f << "# field " << name << "\n# dim " << mesh.dim << "\n# extents";
  for (int d = 0; d < mesh.dim; ++d) f << ' ' << format_double(mesh.extents[d]);
  f << "\n# cells";
  for (int d = 0; d < mesh.dim; ++d) f << ' ' << mesh.cells[d];
  f << "\n# nodes " << mesh.num_nodes() << "\n";
  for (int node = 0; node < mesh.num_nodes(); ++node) {
    const Point& x = mesh.nodes[node];
    const int dof = mesh.dof_of_node[node];
    f << format_double(x.x());
    if (mesh.dim == 2) f << ' ' << format_double(x.y());
    f << ' ' << format_double(dof >= 0 ? u[dof] : 0.0) << '\n';
  }
  if (!f) throw Error("write failed for '" + path + "'");
}

void emit_outputs(const RunOutcome& out, const std::string& directory) {
  fs::create_directories(directory);
  const RunConfig& c = out.config;
  if (c.output.fields) {
    const FemSpace space(build_config_mesh(c));
    write_field((fs::path(directory) / "u.txt").string(), space, out.state.u, "u");
    for (std::size_t i = 0; i < out.state.v.size(); ++i)
      write_field((fs::path(directory) / ("v" + std::to_string(i + 1) + ".txt")).string(), space, out.state.v[i],
                  "v" + std::to_string(i + 1));
  }

  {
    std::ofstream f(fs::path(directory) / "diagnostics.csv");
    if (!f) throw Error("cannot write diagnostics.csv in '" + directory + "'");
    f << "step,time,gram_drift,cross_ortho,guard_min,picard_iters,grad_norm_sum,residual_inf\n";
    for (const auto& d : out.report.steps) {
      if (d.step % c.output.diagnostics_every != 0) continue;
      int iters = 0;
      for (int it : d.picard_iterations) iters += it;
      f << d.step << ',' << format_double(d.time) << ',' << format_double(d.gram_drift) << ','
        << format_double(d.cross_ortho) << ',' << format_double(d.guard_min) << ',' << iters << ','
        << format_double(d.grad_sum) << ',' << format_double(d.residual_inf) << '\n';
    }
  }

  {
    std::ofstream f(fs::path(directory) / "spectrum.csv");
    if (!f) throw Error("cannot write spectrum.csv in '" + directory + "'");
    f << "rank,eigenvalue\n";
    for (int i = 0; i < out.spectrum.size(); ++i) f << i + 1 << ',' << format_double(out.spectrum.values[i]) << '\n';
  }

  json summary;
  summary["config"] = json::parse(emit_config(c));
  summary["steps"] = out.report.steps.size();
  summary["residual_form"] = to_string(c.output.residual_form);
  summary["final_residual_inf"] = out.report.final_residual_inf;
  if (out.morse) {
    summary["morse_index"] = out.morse->index;
    summary["near_zero_eigenvalues"] = out.morse->near_zero;
  } else {
    summary["morse_index"] = nullptr;
  }
  summary["max_gram_drift"] = out.max_gram_drift;
  summary["max_cross_ortho"] = out.max_cross_ortho;
  summary["max_half_step_defect"] = out.max_half_step_defect;
  summary["max_grad_norm_sum"] = out.max_grad_sum;
  summary["warnings"] = out.report.warnings;
  {
    std::ofstream f(fs::path(directory) / "summary.json");
    if (!f) throw Error("cannot write summary.json in '" + directory + "'");
    f << summary.dump(2) << '\n';
  }
  {
    std::ofstream f(fs::path(directory) / "timing.json");
    if (!f) throw Error("cannot write timing.json in '" + directory + "'");
    f << json{{"wall_time_seconds", out.wall_time}}.dump(2) << '\n';
  }
}

}  // namespace hisd
