#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hisd/config.hpp"
#include "hisd/dynamics.hpp"
#include "hisd/spectral.hpp"

namespace hisd {

enum class SearchDirection { root, down, up };

const char* to_string(SearchDirection d);

struct SolutionRecord {
  int id = -1;
  Vector u;
  int index = 0;
  int near_zero = 0;
  double residual = 0.0;
  double norm = 0.0;
  /// Group invariants used as a cheap signature: L2 norm and max |u|.
  double max_abs = 0.0;
  Spectrum spectrum;
  /// Provenance: parent id (-1 for the root), eigendirection rank (0-based) and sign.
  int parent = -1;
  int direction = -1;
  int sign = 0;
  SearchDirection search = SearchDirection::root;
};

struct LandscapeEdge {
  int parent = -1;
  int child = -1;
  int direction = -1;
  int sign = 0;
  SearchDirection search = SearchDirection::down;
};

/// One child HiSD run and what became of it.
struct ChildRun {
  int parent = -1;
  SearchDirection search = SearchDirection::down;
  int target = 0;
  int direction = -1;
  int sign = 0;
  int steps = 0;
  /// Newton iterations and L2 displacement of the refinement (0 when off).
  int newton_iterations = 0;
  double refine_shift = 0.0;
  /// "new", "duplicate", "parent" or "discarded".
  std::string outcome;
  std::string detail;
  /// Node the run ended at (new or existing), -1 when discarded.
  int node = -1;
  double residual = 0.0;
  int index = -1;
};

struct LandscapeGraph {
  std::vector<SolutionRecord> nodes;
  std::vector<LandscapeEdge> edges;
  std::vector<ChildRun> runs;
  /// The run budget ran out before the schedule finished.
  bool truncated = false;

  std::vector<int> count_by_index() const;
};

struct LandscapeParams {
  /// Child runs use k = target index; tau, T and the solver settings come from here.
  SchemeParams scheme;
  ResidualForm residual_form = ResidualForm::weak_lumped;
  double epsilon = 0.1;
  double dedup_tol = 1e-2;
  double residual_tol = 1e-3;
  double stop_residual = 0.0;
  bool newton_refine = false;
  int spectrum_count = 12;
  int max_runs = 400;
  bool upward = true;
  int max_index = -1;
  unsigned seed = 1;
  double noise = 0.0;
};

/// DOF permutations of the symmetry group used by dedup, identity first. On a
/// square domain with equal cell counts these are the 8 dihedral transforms;
/// otherwise only the identity.
std::vector<std::vector<int>> symmetry_permutations(const FemSpace& space);

/// min over g in G and s = +-1 of |a - s g b|_L2 <= tol max(|a|_L2, 1).
bool dedup(const FemSpace& space, const Vector& a, const Vector& b, double tol);
bool dedup(const FemSpace& space, const std::vector<std::vector<int>>& group, const Vector& a, const Vector& b,
           double tol);

struct Refinement {
  Vector u;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Newton iteration on the weak stationarity equation -A u + G u + (f(u_h), phi) = 0,
/// whose Jacobian is minus the Hessian. Stops once the lumped residual is below
/// tol; reports non-convergence instead of throwing.
Refinement refine_stationary(const FemSpace& space, const Problem& problem, const SparseMatrix& stiffness,
                             const SparseMatrix* advection_reaction, Vector u, double tol, int max_iterations = 25);

using LandscapeProgress = std::function<void(const ChildRun&, const LandscapeGraph&)>;

class LandscapeSearch {
 public:
  /// The space and problem must outlive the search.
  LandscapeSearch(const FemSpace& space, const Problem& problem, LandscapeParams params);

  /// Residual, spectrum window and Morse index of a field.
  SolutionRecord evaluate(Vector u) const;

  /// Children of index target_index < parent.index: one run per unstable
  /// eigendirection and sign from parent.u +- eps w, with the remaining unstable
  /// eigenvectors as directors. Diverged or unconverged runs are logged and
  /// dropped; returned records are pairwise distinct under dedup.
  std::vector<SolutionRecord> downward_search(const SolutionRecord& parent, int target_index,
                                              std::vector<ChildRun>* log = nullptr) const;

  /// Children of index target_index > parent.index: directors are the parent's
  /// unstable eigenvectors padded with the next stable ones, and u0 is perturbed
  /// along each added direction with both signs.
  std::vector<SolutionRecord> upward_search(const SolutionRecord& parent, int target_index,
                                            std::vector<ChildRun>* log = nullptr) const;

  /// Breadth-first downward sweep from the root, then upward passes from minima,
  /// repeated until nothing new is found or max_runs child runs have been spent.
  LandscapeGraph build(const SolutionRecord& root, const LandscapeProgress& progress = {}) const;

  const LandscapeParams& params() const { return params_; }
  const std::vector<std::vector<int>>& group() const { return group_; }
  const FemSpace& space() const { return space_; }
  const Problem& problem() const { return problem_; }

 private:
  SolutionRecord child_run(const SolutionRecord& parent, SearchDirection search, int target, int direction, int sign,
                           const Vector& perturbation, std::vector<Vector> directors, ChildRun& log) const;
  std::vector<SolutionRecord> distinct(std::vector<SolutionRecord> records) const;

  const FemSpace& space_;
  const Problem& problem_;
  LandscapeParams params_;
  std::vector<std::vector<int>> group_;
  SparseMatrix stiffness_;
  SparseMatrix advection_reaction_;
  bool has_advection_reaction_ = false;
};

LandscapeParams landscape_params(const RunConfig& config);

/// Root record of a config's landscape block: the projected root field, relaxed
/// with an index-root_index run first if it is not already stationary.
SolutionRecord landscape_root(const LandscapeSearch& search, const RunConfig& config);

/// Writes landscape.json, landscape.dot and solutions/node_<id>.txt.
void write_landscape(const LandscapeGraph& graph, const RunConfig& config, const FemSpace& space,
                     const std::string& directory);

}  // namespace hisd
