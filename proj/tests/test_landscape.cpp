#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "hisd/landscape.hpp"

using namespace hisd;

namespace {

constexpr double kPi = std::numbers::pi;

// -0.02 u'' + u - u^3 = 0 on (0, 1): the zero state has index 2, and below it
// sit the one-node saddle (index 1) and the one-signed minimum pair (index 0).
RunConfig allen_cahn_1d() {
  RunConfig c;
  c.name = "allen-cahn";
  c.dim = 1;
  c.extents = {1.0};
  c.cells = {64};
  c.tau = 1e-2;
  c.T = 5.0;
  c.diffusion = make_selector("constant", {{"value", {0.02}}});
  c.nonlinearity = make_selector("polynomial", {{"coefficients", {0.0, 1.0, 0.0, -1.0}}});
  c.scheme.tau = c.tau;
  c.scheme.T = c.T;
  c.scheme.k = 0;
  c.scheme.picard_tol = 1e-10;
  c.scheme.polish = false;
  c.scheme.v_solver = VSolver::automatic;
  LandscapeConfig l;
  l.newton_refine = true;
  l.spectrum_count = 6;
  c.landscape = l;
  return c;
}

struct Fixture {
  RunConfig config;
  FemSpace space;
  Problem problem;
  LandscapeSearch search;
  explicit Fixture(RunConfig c)
      : config(std::move(c)), space(build_config_mesh(config)), problem(build_problem(config)),
        search(space, problem, landscape_params(config)) {}
};

Vector field_2d(const FemSpace& space, double (*f)(double, double)) {
  return interpolate(space, [f](const Point& x) { return f(x.x(), x.y()); });
}

}  // namespace

TEST(Landscape, SymmetryGroupSize) {
  EXPECT_EQ(symmetry_permutations(FemSpace(build_mesh(2, {1.0, 1.0}, {6, 6}))).size(), 8u);
  EXPECT_EQ(symmetry_permutations(FemSpace(build_mesh(2, {1.0, 2.0}, {6, 6}))).size(), 1u);
  EXPECT_EQ(symmetry_permutations(FemSpace(build_mesh(2, {1.0, 1.0}, {6, 8}))).size(), 1u);
  EXPECT_EQ(symmetry_permutations(FemSpace(build_mesh(1, {1.0}, {6}))).size(), 1u);
}

TEST(Landscape, GroupElementsArePermutationsPreservingNorm) {
  const FemSpace space(build_mesh(2, {1.0, 1.0}, {7, 7}));
  const Vector u = field_2d(space, [](double x, double y) { return x * x * y + 0.3 * std::sin(5 * x) * y; });
  const auto group = symmetry_permutations(space);
  for (std::size_t g = 0; g < group.size(); ++g) {
    ASSERT_EQ(static_cast<int>(group[g].size()), space.num_dofs());
    std::vector<int> seen(space.num_dofs(), 0);
    Vector gu(space.num_dofs());
    for (int d = 0; d < space.num_dofs(); ++d) {
      ++seen[group[g][d]];
      gu[d] = u[group[g][d]];
    }
    for (int s : seen) EXPECT_EQ(s, 1);
    EXPECT_NEAR(l2_norm(space, gu), l2_norm(space, u), 1e-13);
  }
  for (int d = 0; d < space.num_dofs(); ++d) EXPECT_EQ(group[0][d], d);
}

TEST(Landscape, DedupIdentifiesSignAndSymmetryImages) {
  const FemSpace space(build_mesh(2, {1.0, 1.0}, {16, 16}));
  const Vector a = field_2d(space, [](double x, double y) { return std::sin(kPi * x) * std::sin(2 * kPi * y) * (1 + x); });
  const Vector rotated = field_2d(space, [](double x, double y) {
    // a evaluated at the quarter-turn image (x, y) -> (y, 1 - x).
    return std::sin(kPi * y) * std::sin(2 * kPi * (1 - x)) * (1 + y);
  });
  EXPECT_TRUE(dedup(space, a, a, 1e-12));
  EXPECT_TRUE(dedup(space, a, Vector(-a), 1e-12));
  EXPECT_TRUE(dedup(space, a, rotated, 1e-12));
  EXPECT_TRUE(dedup(space, rotated, a, 1e-12));
  EXPECT_TRUE(dedup(space, a, Vector(-rotated), 1e-12));

  const Vector s12 = field_2d(space, [](double x, double y) { return std::sin(kPi * x) * std::sin(2 * kPi * y); });
  const Vector s22 = field_2d(space, [](double x, double y) { return std::sin(2 * kPi * x) * std::sin(2 * kPi * y); });
  EXPECT_FALSE(dedup(space, s12, s22, 1e-3));
  EXPECT_FALSE(dedup(space, s22, s12, 1e-3));

  // Only the identity without the square symmetry.
  const std::vector<std::vector<int>> identity = {symmetry_permutations(space).front()};
  EXPECT_FALSE(dedup(space, identity, a, rotated, 1e-3));
  EXPECT_TRUE(dedup(space, identity, a, Vector(-a), 1e-12));
}

TEST(Landscape, ZeroRootOfAllenCahnHasIndexTwo) {
  Fixture f(allen_cahn_1d());
  const SolutionRecord root = landscape_root(f.search, f.config);
  EXPECT_EQ(root.index, 2);
  EXPECT_EQ(root.residual, 0.0);
  EXPECT_EQ(root.norm, 0.0);
}

TEST(Landscape, SearchPreconditions) {
  Fixture f(allen_cahn_1d());
  const SolutionRecord root = landscape_root(f.search, f.config);
  EXPECT_THROW(f.search.downward_search(root, 2), Error);
  EXPECT_THROW(f.search.downward_search(root, -1), Error);
  EXPECT_THROW(f.search.upward_search(root, 2), Error);
  EXPECT_THROW(f.search.upward_search(root, 40), Error);
}

TEST(Landscape, DownwardSearchFromZeroFindsOneNodeSaddle) {
  Fixture f(allen_cahn_1d());
  const SolutionRecord root = landscape_root(f.search, f.config);
  std::vector<ChildRun> log;
  const auto found = f.search.downward_search(root, 1, &log);
  EXPECT_EQ(log.size(), 4u);
  ASSERT_FALSE(found.empty());
  bool saddle = false;
  for (const auto& r : found) {
    EXPECT_LE(r.residual, 1e-8);
    saddle = saddle || (r.index == 1 && r.norm > 0.1);
  }
  EXPECT_TRUE(saddle);
}

TEST(Landscape, ZeroPerturbationReturnsParent) {
  RunConfig c = allen_cahn_1d();
  c.landscape->epsilon = 0.0;
  Fixture f(c);
  const SolutionRecord root = landscape_root(f.search, f.config);
  const auto found = f.search.downward_search(root, 1);
  ASSERT_EQ(found.size(), 1u);
  EXPECT_TRUE(dedup(f.space, found.front().u, root.u, 1e-10));
}

TEST(Landscape, FullGraphOfAllenCahn) {
  Fixture f(allen_cahn_1d());
  const SolutionRecord root = landscape_root(f.search, f.config);
  const LandscapeGraph g = f.search.build(root);
  EXPECT_FALSE(g.truncated);
  const auto counts = g.count_by_index();
  ASSERT_GE(counts.size(), 3u);
  EXPECT_EQ(counts[0], 1);  // the one-signed minimum, both signs identified
  EXPECT_EQ(counts[1], 1);  // the one-node saddle
  EXPECT_EQ(counts[2], 1);  // zero

  for (const auto& n : g.nodes) {
    EXPECT_LE(n.residual, f.search.params().residual_tol);
    // The recorded index matches a fresh spectrum of the stored field.
    const SolutionRecord again = f.search.evaluate(n.u);
    EXPECT_EQ(again.index, n.index) << "node " << n.id;
  }
  for (const auto& e : g.edges) {
    ASSERT_LT(e.parent, static_cast<int>(g.nodes.size()));
    ASSERT_LT(e.child, static_cast<int>(g.nodes.size()));
    EXPECT_NE(g.nodes[e.parent].index, g.nodes[e.child].index);
  }
  // Pairwise distinct.
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    for (std::size_t j = i + 1; j < g.nodes.size(); ++j)
      EXPECT_FALSE(dedup(f.space, f.search.group(), g.nodes[i].u, g.nodes[j].u, f.search.params().dedup_tol));
}

TEST(Landscape, UpwardSearchFromMinimumClimbs) {
  Fixture f(allen_cahn_1d());
  const Vector bump = interpolate(f.space, [](const Point& x) { return std::sin(kPi * x.x()); });
  const Refinement m = refine_stationary(f.space, f.problem, assemble_stiffness(f.space, f.problem.a), nullptr, bump,
                                         1e-10);
  ASSERT_TRUE(m.converged);
  SolutionRecord min = f.search.evaluate(m.u);
  ASSERT_EQ(min.index, 0);
  min.id = 0;
  std::vector<ChildRun> log;
  const auto found = f.search.upward_search(min, 1, &log);
  EXPECT_EQ(log.size(), 2u);
  bool climbed = false;
  for (const auto& r : found) {
    EXPECT_LE(r.residual, f.search.params().residual_tol);
    climbed = climbed || r.index > min.index;
  }
  EXPECT_TRUE(climbed);
}

TEST(Landscape, BuildIsDeterministic) {
  RunConfig c = allen_cahn_1d();
  c.landscape->max_runs = 6;
  Fixture f(c);
  const SolutionRecord root = landscape_root(f.search, f.config);
  const LandscapeGraph a = f.search.build(root);
  const LandscapeGraph b = f.search.build(root);
  EXPECT_TRUE(a.truncated);
  EXPECT_EQ(a.runs.size(), 6u);
  ASSERT_EQ(a.nodes.size(), b.nodes.size());
  for (std::size_t i = 0; i < a.nodes.size(); ++i) EXPECT_EQ(a.nodes[i].u, b.nodes[i].u);
}

TEST(Landscape, NewtonRefinementConvergesQuadratically) {
  Fixture f(allen_cahn_1d());
  const Vector guess = interpolate(f.space, [](const Point& x) { return 0.9 * std::sin(2 * kPi * x.x()); });
  const Refinement r = refine_stationary(f.space, f.problem, assemble_stiffness(f.space, f.problem.a), nullptr, guess,
                                         1e-12);
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 12);
  EXPECT_EQ(f.search.evaluate(r.u).index, 1);
}
