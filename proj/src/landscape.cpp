#include "hisd/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "json.hpp"
#include "hisd/experiment.hpp"

namespace hisd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr double kRefineTol = 1e-10;
}

const char* to_string(SearchDirection d) {
  switch (d) {
    case SearchDirection::root: return "root";
    case SearchDirection::down: return "down";
    case SearchDirection::up: return "up";
  }
  return "?";
}

std::vector<int> LandscapeGraph::count_by_index() const {
  std::vector<int> counts;
  for (const auto& n : nodes) {
    if (n.index >= static_cast<int>(counts.size())) counts.resize(n.index + 1, 0);
    ++counts[n.index];
  }
  return counts;
}

std::vector<std::vector<int>> symmetry_permutations(const FemSpace& space) {
  const Mesh& mesh = space.mesh();
  const int n = mesh.num_dofs();
  std::vector<int> identity(n);
  for (int i = 0; i < n; ++i) identity[i] = i;
  std::vector<std::vector<int>> group{identity};
  if (mesh.dim != 2 || mesh.cells[0] != mesh.cells[1] || mesh.extents[0] != mesh.extents[1]) return group;

  const int N = mesh.cells[0];
  using Map = std::pair<int, int> (*)(int, int, int);
  const Map maps[] = {
      [](int i, int j, int N) { return std::pair{N - i, j}; },
      [](int i, int j, int N) { return std::pair{i, N - j}; },
      [](int i, int j, int N) { return std::pair{N - i, N - j}; },
      [](int i, int j, int) { return std::pair{j, i}; },
      [](int i, int j, int N) { return std::pair{N - j, i}; },
      [](int i, int j, int N) { return std::pair{j, N - i}; },
      [](int i, int j, int N) { return std::pair{N - j, N - i}; },
  };
  for (Map g : maps) {
    std::vector<int> perm(n);
    for (int dof = 0; dof < n; ++dof) {
      const int node = mesh.node_of_dof[dof];
      const int i = node % (N + 1);
      const int j = node / (N + 1);
      const auto [gi, gj] = g(i, j, N);
      perm[dof] = mesh.dof_of_node[mesh.node_index(gi, gj)];
    }
    group.push_back(std::move(perm));
  }
  return group;
}

bool dedup(const FemSpace& space, const std::vector<std::vector<int>>& group, const Vector& a, const Vector& b,
           double tol) {
  space.check_conforming(a, "dedup");
  space.check_conforming(b, "dedup");
  const double bound = tol * std::max(l2_norm(space, a), 1.0);
  Vector gb(b.size());
  for (const auto& perm : group) {
    for (Eigen::Index i = 0; i < b.size(); ++i) gb[i] = b[perm[i]];
    if (l2_norm(space, a - gb) <= bound || l2_norm(space, a + gb) <= bound) return true;
  }
  return false;
}

bool dedup(const FemSpace& space, const Vector& a, const Vector& b, double tol) {
  return dedup(space, symmetry_permutations(space), a, b, tol);
}

Refinement refine_stationary(const FemSpace& space, const Problem& problem, const SparseMatrix& stiffness,
                             const SparseMatrix* advection_reaction, Vector u, double tol, int max_iterations) {
  Refinement out;
  Residual r = residual_Finf(space, problem, stiffness, advection_reaction, u, ResidualForm::weak_lumped);
  const double start = r.inf_norm;
  for (int it = 1; it <= max_iterations && r.inf_norm > tol; ++it) {
    const HessianOperator h = assemble_hessian(space, problem, u);
    Vector delta;
    try {
      delta = factor_general(h.matrix).solve(Vector(space.lumped_mass().cwiseProduct(r.values)));
    } catch (const FactorizationError&) {
      break;
    }
    u += delta;
    out.iterations = it;
    r = residual_Finf(space, problem, stiffness, advection_reaction, u, ResidualForm::weak_lumped);
    if (!std::isfinite(r.inf_norm) || r.inf_norm > 1e3 * std::max(start, 1.0)) break;
  }
  out.residual = r.inf_norm;
  out.converged = r.inf_norm <= tol;
  out.u = std::move(u);
  return out;
}

LandscapeSearch::LandscapeSearch(const FemSpace& space, const Problem& problem, LandscapeParams params)
    : space_(space), problem_(problem), params_(std::move(params)), group_(symmetry_permutations(space)) {
  stiffness_ = assemble_stiffness(space, problem.a);
  has_advection_reaction_ = problem.has_advection_reaction();
  if (has_advection_reaction_) advection_reaction_ = assemble_advection_reaction(space, problem.b, problem.c);
}

SolutionRecord LandscapeSearch::evaluate(Vector u) const {
  SolutionRecord r;
  r.residual = residual_Finf(space_, problem_, stiffness_, has_advection_reaction_ ? &advection_reaction_ : nullptr,
                             u, params_.residual_form)
                   .inf_norm;
  const HessianOperator h = assemble_hessian(space_, problem_, u);
  r.spectrum = spectrum_window(h, std::min(params_.spectrum_count, space_.num_dofs()));
  const MorseIndex mi = morse_index(r.spectrum);
  r.index = mi.index;
  r.near_zero = mi.near_zero;
  r.norm = l2_norm(space_, u);
  r.max_abs = u.size() ? u.cwiseAbs().maxCoeff() : 0.0;
  r.u = std::move(u);
  return r;
}

SolutionRecord LandscapeSearch::child_run(const SolutionRecord& parent, SearchDirection search, int target,
                                          int direction, int sign, const Vector& perturbation,
                                          std::vector<Vector> directors, ChildRun& log) const {
  log.parent = parent.id;
  log.search = search;
  log.target = target;
  log.direction = direction;
  log.sign = sign;

  const double eps = params_.epsilon * (parent.norm > 1e-12 ? parent.norm : 1.0);
  Vector u0 = parent.u + (sign * eps) * perturbation;
  if (params_.noise > 0.0) {
    std::seed_seq seq{params_.seed, static_cast<unsigned>(parent.id), static_cast<unsigned>(direction),
                      static_cast<unsigned>(sign + 1), static_cast<unsigned>(search)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < u0.size(); ++i) u0[i] += params_.noise * eps * normal(rng);
  }

  SchemeParams p = params_.scheme;
  p.k = target;
  Stepper stepper(space_, problem_, p, initialize_from_fields(space_, std::move(u0), std::move(directors)),
                  params_.residual_form);
  double residual = 0.0;
  while (!stepper.done()) {
    residual = stepper.step().residual_inf;
    if (params_.stop_residual > 0.0 && residual < params_.stop_residual) break;
  }
  log.steps = stepper.state().n;
  Vector u = stepper.state().u;
  if (params_.newton_refine) {
    Refinement rf = refine_stationary(space_, problem_, stiffness_,
                                      has_advection_reaction_ ? &advection_reaction_ : nullptr, u, kRefineTol);
    log.newton_iterations = rf.iterations;
    if (rf.converged) {
      log.refine_shift = l2_norm(space_, rf.u - u);
      u = std::move(rf.u);
    }
  }
  SolutionRecord r = evaluate(std::move(u));
  r.parent = parent.id;
  r.direction = direction;
  r.sign = sign;
  r.search = search;
  log.residual = r.residual;
  log.index = r.index;
  return r;
}

std::vector<SolutionRecord> LandscapeSearch::distinct(std::vector<SolutionRecord> records) const {
  std::vector<SolutionRecord> out;
  for (auto& r : records) {
    bool seen = false;
    for (const auto& o : out) seen = seen || dedup(space_, group_, o.u, r.u, params_.dedup_tol);
    if (!seen) out.push_back(std::move(r));
  }
  return out;
}

namespace {

// Runs one child, turning failures into discarded log entries.
template <class F>
void attempt(F&& f, ChildRun& log, double residual_tol, std::vector<SolutionRecord>& found) {
  try {
    SolutionRecord r = f();
    if (!(r.residual <= residual_tol)) {
      log.outcome = "discarded";
      log.detail = "residual " + format_double(r.residual) + " above " + format_double(residual_tol);
      return;
    }
    log.outcome = "converged";
    found.push_back(std::move(r));
  } catch (const Error& e) {
    log.outcome = "discarded";
    log.detail = e.what();
  }
}

}  // namespace

std::vector<SolutionRecord> LandscapeSearch::downward_search(const SolutionRecord& parent, int target_index,
                                                             std::vector<ChildRun>* log) const {
  if (!(target_index >= 0 && target_index < parent.index))
    throw Error("downward_search: target index " + std::to_string(target_index) + " must lie in [0, " +
                std::to_string(parent.index) + ")");
  std::vector<SolutionRecord> found;
  for (int j = 0; j < parent.index; ++j) {
    std::vector<Vector> directors;
    for (int l = 0; l < parent.index && static_cast<int>(directors.size()) < target_index; ++l)
      if (l != j) directors.push_back(parent.spectrum.vectors[l]);
    for (int sign : {1, -1}) {
      ChildRun entry;
      attempt([&] { return child_run(parent, SearchDirection::down, target_index, j, sign,
                                     parent.spectrum.vectors[j], directors, entry); },
              entry, params_.residual_tol, found);
      if (entry.parent < 0) entry.parent = parent.id;
      if (log) log->push_back(entry);
    }
  }
  return distinct(std::move(found));
}

std::vector<SolutionRecord> LandscapeSearch::upward_search(const SolutionRecord& parent, int target_index,
                                                           std::vector<ChildRun>* log) const {
  if (!(target_index > parent.index))
    throw Error("upward_search: target index " + std::to_string(target_index) + " must exceed the parent index " +
                std::to_string(parent.index));
  if (target_index > parent.spectrum.size())
    throw Error("upward_search: target index " + std::to_string(target_index) + " needs " +
                std::to_string(target_index) + " eigenvectors but the window holds " +
                std::to_string(parent.spectrum.size()) + "; increase spectrum_count");
  std::vector<Vector> directors(parent.spectrum.vectors.begin(), parent.spectrum.vectors.begin() + target_index);
  std::vector<SolutionRecord> found;
  for (int j = parent.index; j < target_index; ++j) {
    for (int sign : {1, -1}) {
      ChildRun entry;
      attempt([&] { return child_run(parent, SearchDirection::up, target_index, j, sign,
                                     parent.spectrum.vectors[j], directors, entry); },
              entry, params_.residual_tol, found);
      if (entry.parent < 0) entry.parent = parent.id;
      if (log) log->push_back(entry);
    }
  }
  return distinct(std::move(found));
}

LandscapeGraph LandscapeSearch::build(const SolutionRecord& root, const LandscapeProgress& progress) const {
  LandscapeGraph g;
  SolutionRecord r0 = root;
  r0.id = 0;
  r0.parent = -1;
  r0.search = SearchDirection::root;
  g.nodes.push_back(std::move(r0));
  const int top = params_.max_index >= 0 ? params_.max_index : g.nodes[0].index;

  int runs = 0;
  // Searches a batch of child directions one run at a time so the budget is exact.
  auto absorb = [&](const SolutionRecord& parent, SearchDirection search, int target) {
    std::vector<std::pair<int, int>> jobs;
    if (search == SearchDirection::down) {
      for (int j = 0; j < parent.index; ++j) jobs.push_back({j, 1}), jobs.push_back({j, -1});
    } else {
      for (int j = parent.index; j < target; ++j) jobs.push_back({j, 1}), jobs.push_back({j, -1});
    }
    std::vector<Vector> up_directors;
    if (search == SearchDirection::up) {
      if (target > parent.spectrum.size())
        throw Error("upward search from node " + std::to_string(parent.id) + ": window of " +
                    std::to_string(parent.spectrum.size()) + " eigenpairs is too small; increase spectrum_count");
      up_directors.assign(parent.spectrum.vectors.begin(), parent.spectrum.vectors.begin() + target);
    }
    for (const auto& [j, sign] : jobs) {
      if (runs >= params_.max_runs) {
        g.truncated = true;
        return;
      }
      ++runs;
      std::vector<Vector> directors = up_directors;
      if (search == SearchDirection::down)
        for (int l = 0; l < parent.index && static_cast<int>(directors.size()) < target; ++l)
          if (l != j) directors.push_back(parent.spectrum.vectors[l]);
      ChildRun entry;
      std::vector<SolutionRecord> found;
      attempt([&] { return child_run(parent, search, target, j, sign, parent.spectrum.vectors[j], directors, entry); },
              entry, params_.residual_tol, found);
      entry.parent = parent.id;
      if (!found.empty()) {
        SolutionRecord& r = found.front();
        int match = -1;
        for (const auto& n : g.nodes)
          if (dedup(space_, group_, n.u, r.u, params_.dedup_tol)) {
            match = n.id;
            break;
          }
        if (match < 0) {
          r.id = static_cast<int>(g.nodes.size());
          entry.outcome = "new";
          entry.node = r.id;
          if (r.index != parent.index) g.edges.push_back({parent.id, r.id, j, sign, search});
          g.nodes.push_back(std::move(r));
        } else {
          entry.node = match;
          entry.outcome = match == parent.id ? "parent" : "duplicate";
          const bool exists = std::any_of(g.edges.begin(), g.edges.end(), [&](const LandscapeEdge& e) {
            return e.parent == parent.id && e.child == match;
          });
          if (!exists && g.nodes[match].index != parent.index) g.edges.push_back({parent.id, match, j, sign, search});
        }
      }
      g.runs.push_back(entry);
      if (progress) progress(g.runs.back(), g);
    }
  };

  std::size_t next_down = 0;
  std::set<int> up_done;
  while (true) {
    // Indexing (not iterators): absorb appends to g.nodes.
    for (; next_down < g.nodes.size() && !g.truncated; ++next_down) {
      const SolutionRecord parent = g.nodes[next_down];
      if (parent.index > 0) absorb(parent, SearchDirection::down, parent.index - 1);
    }
    if (g.truncated || !params_.upward) break;
    const std::size_t before = g.nodes.size();
    for (std::size_t id = 0; id < g.nodes.size() && !g.truncated; ++id) {
      const SolutionRecord parent = g.nodes[id];
      if (parent.index != 0 || parent.index + 1 > top || up_done.count(parent.id)) continue;
      up_done.insert(parent.id);
      absorb(parent, SearchDirection::up, parent.index + 1);
    }
    if (g.truncated || g.nodes.size() == before) break;
  }
  return g;
}

LandscapeParams landscape_params(const RunConfig& config) {
  if (!config.landscape) throw Error("config has no 'landscape' block");
  const LandscapeConfig& l = *config.landscape;
  LandscapeParams p;
  p.scheme = build_scheme(config);
  p.scheme.v_solver = l.v_solver;
  p.residual_form = config.output.residual_form;
  p.epsilon = l.epsilon;
  p.dedup_tol = l.dedup_tol;
  p.residual_tol = l.residual_tol;
  p.stop_residual = l.stop_residual;
  p.newton_refine = l.newton_refine;
  p.spectrum_count = l.spectrum_count;
  p.max_runs = l.max_runs;
  p.upward = l.upward;
  p.max_index = l.max_index;
  p.seed = l.seed;
  p.noise = l.noise;
  return p;
}

SolutionRecord landscape_root(const LandscapeSearch& search, const RunConfig& config) {
  const LandscapeConfig& l = *config.landscape;
  const FemSpace& space = search.space();
  const Problem& problem = search.problem();
  Vector u = initialize(space, problem, build_initial(config, l.root), {}).u;
  SolutionRecord r = search.evaluate(u);
  if (r.residual <= l.residual_tol) return r;
  if (l.root_index < 0)
    throw Error("landscape root is not stationary (residual " + format_double(r.residual) +
                ") and no root_index is given to relax it");
  if (l.root_index > r.spectrum.size())
    throw Error("landscape root_index exceeds the spectrum window; increase spectrum_count");
  SchemeParams p = search.params().scheme;
  p.k = l.root_index;
  std::vector<Vector> directors(r.spectrum.vectors.begin(), r.spectrum.vectors.begin() + l.root_index);
  RunResult run_result =
      run(space, problem, p, initialize_from_fields(space, u, std::move(directors)), search.params().residual_form);
  Vector relaxed = std::move(run_result.state.u);
  if (search.params().newton_refine) {
    const SparseMatrix a = assemble_stiffness(space, problem.a);
    SparseMatrix g;
    if (problem.has_advection_reaction()) g = assemble_advection_reaction(space, problem.b, problem.c);
    Refinement rf = refine_stationary(space, problem, a, problem.has_advection_reaction() ? &g : nullptr, relaxed,
                                      kRefineTol);
    if (rf.converged) relaxed = std::move(rf.u);
  }
  r = search.evaluate(std::move(relaxed));
  if (!(r.residual <= l.residual_tol))
    throw Error("landscape root relaxation ended with residual " + format_double(r.residual) + " above " +
                format_double(l.residual_tol));
  return r;
}

void write_landscape(const LandscapeGraph& graph, const RunConfig& config, const FemSpace& space,
                     const std::string& directory) {
  fs::create_directories(fs::path(directory) / "solutions");
  json nodes = json::array();
  for (const auto& n : graph.nodes) {
    const std::string file = "solutions/node_" + std::to_string(n.id) + ".txt";
    write_field((fs::path(directory) / file).string(), space, n.u, "node " + std::to_string(n.id));
    nodes.push_back({{"id", n.id},
                     {"index", n.index},
                     {"near_zero", n.near_zero},
                     {"residual_inf", n.residual},
                     {"l2_norm", n.norm},
                     {"max_abs", n.max_abs},
                     {"eigenvalues", n.spectrum.values},
                     {"parent", n.parent},
                     {"direction", n.direction},
                     {"sign", n.sign},
                     {"search", to_string(n.search)},
                     {"field", file}});
  }
  json edges = json::array();
  for (const auto& e : graph.edges)
    edges.push_back({{"parent", e.parent}, {"child", e.child}, {"direction", e.direction}, {"sign", e.sign},
                     {"search", to_string(e.search)}});
  json runs = json::array();
  for (const auto& r : graph.runs)
    runs.push_back({{"parent", r.parent},
                    {"search", to_string(r.search)},
                    {"target", r.target},
                    {"direction", r.direction},
                    {"sign", r.sign},
                    {"steps", r.steps},
                    {"newton_iterations", r.newton_iterations},
                    {"refine_shift", r.refine_shift},
                    {"outcome", r.outcome},
                    {"detail", r.detail},
                    {"node", r.node},
                    {"residual_inf", r.residual},
                    {"index", r.index}});
  json j;
  j["config"] = json::parse(emit_config(config));
  j["classes"] = graph.nodes.size();
  j["count_by_index"] = graph.count_by_index();
  j["truncated"] = graph.truncated;
  j["nodes"] = nodes;
  j["edges"] = edges;
  j["runs"] = runs;
  {
    std::ofstream f(fs::path(directory) / "landscape.json");
    if (!f) throw Error("cannot write landscape.json in '" + directory + "'");
    f << j.dump(2) << '\n';
  }
  std::ofstream f(fs::path(directory) / "landscape.dot");
  if (!f) throw Error("cannot write landscape.dot in '" + directory + "'");
  f << "digraph landscape {\n  rankdir=TB;\n";
  const auto counts = graph.count_by_index();
  for (int idx = static_cast<int>(counts.size()) - 1; idx >= 0; --idx) {
    f << "  { rank=same;";
    for (const auto& n : graph.nodes)
      if (n.index == idx) f << " n" << n.id << ';';
    f << " }\n";
  }
  for (const auto& n : graph.nodes)
    f << "  n" << n.id << " [label=\"" << n.id << " (index " << n.index << ")\"];\n";
  for (const auto& e : graph.edges)
    f << "  n" << e.parent << " -> n" << e.child << " [label=\"" << (e.sign > 0 ? "+" : "-") << e.direction + 1
      << "\"];\n";
  f << "}\n";
}

}  // namespace hisd
