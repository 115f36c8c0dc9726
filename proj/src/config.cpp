#include "hisd/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hisd {

using nlohmann::json;

namespace {

struct ParamSpec {
  std::string name;
  bool list = false;
};

using Registry = std::map<std::string, std::vector<ParamSpec>>;

const Registry& diffusion_registry() {
  static const Registry r = {{"constant", {{"value"}}}, {"diagonal", {{"x"}, {"y"}}}};
  return r;
}
const Registry& advection_registry() {
  static const Registry r = {{"zero", {}}, {"sin", {{"amplitude"}, {"frequency"}}}, {"constant", {{"x"}, {"y"}}}};
  return r;
}
const Registry& reaction_registry() {
  static const Registry r = {{"zero", {}}, {"constant", {{"value"}}}};
  return r;
}
const Registry& nonlinearity_registry() {
  static const Registry r = {{"polynomial", {{"coefficients", true}}}};
  return r;
}
const Registry& initial_registry() {
  static const Registry r = {{"zero", {}},
                             {"sine", {{"amplitude"}, {"modes", true}}},
                             {"normalized_sine", {{"modes", true}}},
                             {"x_sine", {{"amplitude"}, {"mode"}}}};
  return r;
}

void check_selector(const Selector& s, const Registry& registry, const std::string& what) {
  auto it = registry.find(s.type);
  if (it == registry.end()) {
    std::string known;
    for (const auto& [name, _] : registry) known += (known.empty() ? "" : ", ") + name;
    throw Error(what + ": unknown type '" + s.type + "' (known: " + known + ")");
  }
  for (const auto& p : it->second) {
    auto found = s.params.find(p.name);
    if (found == s.params.end()) throw Error(what + " '" + s.type + "': missing parameter '" + p.name + "'");
    if (!p.list && found->second.size() != 1)
      throw Error(what + " '" + s.type + "': parameter '" + p.name + "' must be a number");
    for (double v : found->second)
      if (!std::isfinite(v)) throw Error(what + " '" + s.type + "': parameter '" + p.name + "' is not finite");
  }
  for (const auto& [name, _] : s.params) {
    bool known = false;
    for (const auto& p : it->second) known = known || p.name == name;
    if (!known) throw Error(what + " '" + s.type + "': unknown parameter '" + name + "'");
  }
}

double parse_number(const json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    // "pi", "pi/2", "2*pi" for domain extents.
    const std::string s = j.get<std::string>();
    const double pi = std::numbers::pi;
    if (s == "pi") return pi;
    if (s.rfind("pi/", 0) == 0) return pi / std::stod(s.substr(3));
    const auto star = s.find("*pi");
    if (star != std::string::npos && star + 3 == s.size()) return std::stod(s.substr(0, star)) * pi;
  }
  throw Error(what + ": expected a number");
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& what) {
  if (!j.is_object()) throw Error(what + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) throw Error(what + ": unknown key '" + it.key() + "'");
  }
}

Selector selector_from_json(const json& j, const Registry& registry, const std::string& what) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw Error(what + ": expected an object with a string 'type'");
  Selector s;
  s.type = j["type"].get<std::string>();
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "type") continue;
    std::vector<double> values;
    if (it->is_array()) {
      for (const auto& v : *it) values.push_back(parse_number(v, what + "." + it.key()));
    } else {
      values.push_back(parse_number(*it, what + "." + it.key()));
    }
    s.params[it.key()] = std::move(values);
  }
  check_selector(s, registry, what);
  return s;
}

json selector_to_json(const Selector& s, const Registry& registry) {
  json j;
  j["type"] = s.type;
  const auto& specs = registry.at(s.type);
  for (const auto& p : specs) {
    const auto& values = s.params.at(p.name);
    if (p.list) j[p.name] = values;
    else j[p.name] = values.front();
  }
  return j;
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j[key].get<T>();
}

std::vector<int> read_cells(const json& j, const std::string& what) {
  if (!j.is_array()) throw Error(what + ": expected a list of cell counts");
  std::vector<int> cells;
  for (const auto& c : j) {
    if (!c.is_number_integer()) throw Error(what + ": cell counts must be integers");
    cells.push_back(c.get<int>());
  }
  return cells;
}

bool same_scheme(const SchemeParams& a, const SchemeParams& b) {
  return a.k == b.k && a.beta == b.beta && a.gamma == b.gamma && a.tau == b.tau && a.T == b.T &&
         a.picard_tol == b.picard_tol && a.picard_max == b.picard_max && a.guard_eps == b.guard_eps &&
         a.orthonormal_terms == b.orthonormal_terms && a.scale_form == b.scale_form && a.v_solver == b.v_solver &&
         a.newton_fallback == b.newton_fallback && a.polish == b.polish;
}

}  // namespace

double Selector::scalar(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end() || it->second.size() != 1) throw Error("selector '" + type + "': no scalar '" + name + "'");
  return it->second.front();
}

const std::vector<double>& Selector::list(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) throw Error("selector '" + type + "': no parameter '" + name + "'");
  return it->second;
}

Selector make_selector(std::string type, std::map<std::string, std::vector<double>> params) {
  return Selector{std::move(type), std::move(params)};
}

void RunConfig::validate() const {
  if (dim != 1 && dim != 2) throw Error("config: dim must be 1 or 2");
  if (static_cast<int>(extents.size()) != dim) throw Error("config: extents must have dim entries");
  if (static_cast<int>(cells.size()) != dim) throw Error("config: cells must have dim entries");
  check_selector(diffusion, diffusion_registry(), "problem.diffusion");
  check_selector(advection, advection_registry(), "problem.advection");
  check_selector(reaction, reaction_registry(), "problem.reaction");
  check_selector(nonlinearity, nonlinearity_registry(), "problem.nonlinearity");
  check_selector(u0, initial_registry(), "initial.u");
  for (std::size_t i = 0; i < v0.size(); ++i) check_selector(v0[i], initial_registry(), "initial.v");
  if (nonlinearity.list("coefficients").empty()) throw Error("problem.nonlinearity: empty coefficient list");
  if (diffusion.type == "constant" && !(diffusion.scalar("value") > 0.0))
    throw Error("problem.diffusion: value must be positive");
  if (diffusion.type == "diagonal" && !(diffusion.scalar("x") > 0.0 && diffusion.scalar("y") > 0.0))
    throw Error("problem.diffusion: entries must be positive");
  std::vector<Selector> initial = v0;
  initial.push_back(u0);
  if (landscape) initial.push_back(landscape->root);
  for (const auto& s : initial) {
    if ((s.type == "sine" || s.type == "normalized_sine") && static_cast<int>(s.list("modes").size()) != dim)
      throw Error("initial: modes must have dim entries");
    if (s.type == "x_sine" && dim != 1) throw Error("initial: x_sine is one-dimensional");
  }
  SchemeParams sp = build_scheme(*this);
  if (!landscape && !convergence) sp.validate();
  if (!landscape && static_cast<int>(v0.size()) != scheme.k)
    throw Error("config: scheme.k = " + std::to_string(scheme.k) + " but " + std::to_string(v0.size()) +
                " initial directors are given");
  if (output.diagnostics_every < 1) throw Error("output.diagnostics_every must be at least 1");
  if (output.spectrum_count < 0) throw Error("output.spectrum_count must be non-negative");
  if (landscape) {
    check_selector(landscape->root, initial_registry(), "landscape.root");
    if (!(landscape->epsilon > 0.0) || !(landscape->dedup_tol > 0.0) || !(landscape->residual_tol > 0.0))
      throw Error("landscape: epsilon, dedup_tol and residual_tol must be positive");
    if (landscape->max_runs < 1 || landscape->spectrum_count < 1)
      throw Error("landscape: max_runs and spectrum_count must be positive");
  }
  if (convergence) {
    if (convergence->variable != "tau" && convergence->variable != "h")
      throw Error("convergence.variable must be 'tau' or 'h'");
    if (convergence->levels.size() < 2) throw Error("convergence: at least two levels are needed");
    for (const auto& l : convergence->levels)
      if (!(l.tau > 0.0) || static_cast<int>(l.cells.size()) != dim) throw Error("convergence: malformed level");
    if (!(convergence->reference.tau > 0.0) || static_cast<int>(convergence->reference.cells.size()) != dim)
      throw Error("convergence: malformed reference");
  }
}

bool RunConfig::operator==(const RunConfig& o) const {
  return name == o.name && dim == o.dim && extents == o.extents && cells == o.cells && tau == o.tau && T == o.T &&
         diffusion == o.diffusion && advection == o.advection && reaction == o.reaction &&
         nonlinearity == o.nonlinearity && same_scheme(scheme, o.scheme) && u0 == o.u0 && v0 == o.v0 &&
         output == o.output && landscape == o.landscape && convergence == o.convergence;
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("config: ") + e.what());
  }
  try {
    reject_unknown(j, {"name", "problem", "discretization", "scheme", "initial", "output", "landscape", "convergence"},
                   "config");
    RunConfig c;
    read(j, "name", c.name);

    if (!j.contains("problem")) throw Error("config: missing 'problem'");
    const json& p = j["problem"];
    reject_unknown(p, {"dim", "extents", "diffusion", "advection", "reaction", "nonlinearity"}, "problem");
    read(p, "dim", c.dim);
    if (!p.contains("extents") || !p["extents"].is_array()) throw Error("problem: missing 'extents' list");
    for (const auto& e : p["extents"]) c.extents.push_back(parse_number(e, "problem.extents"));
    if (p.contains("diffusion")) c.diffusion = selector_from_json(p["diffusion"], diffusion_registry(), "problem.diffusion");
    if (p.contains("advection")) c.advection = selector_from_json(p["advection"], advection_registry(), "problem.advection");
    if (p.contains("reaction")) c.reaction = selector_from_json(p["reaction"], reaction_registry(), "problem.reaction");
    if (!p.contains("nonlinearity")) throw Error("problem: missing 'nonlinearity'");
    c.nonlinearity = selector_from_json(p["nonlinearity"], nonlinearity_registry(), "problem.nonlinearity");

    if (!j.contains("discretization")) throw Error("config: missing 'discretization'");
    const json& d = j["discretization"];
    reject_unknown(d, {"cells", "tau", "T"}, "discretization");
    if (!d.contains("cells")) throw Error("discretization: missing 'cells'");
    c.cells = read_cells(d["cells"], "discretization.cells");
    read(d, "tau", c.tau);
    read(d, "T", c.T);

    if (j.contains("scheme")) {
      const json& s = j["scheme"];
      reject_unknown(s, {"k", "beta", "gamma", "picard_tol", "picard_max", "guard_eps", "orthonormal_terms",
                         "scale_form", "v_solver", "newton_fallback", "polish"},
                     "scheme");
      read(s, "k", c.scheme.k);
      read(s, "beta", c.scheme.beta);
      read(s, "gamma", c.scheme.gamma);
      read(s, "picard_tol", c.scheme.picard_tol);
      read(s, "picard_max", c.scheme.picard_max);
      read(s, "guard_eps", c.scheme.guard_eps);
      read(s, "orthonormal_terms", c.scheme.orthonormal_terms);
      read(s, "newton_fallback", c.scheme.newton_fallback);
      read(s, "polish", c.scheme.polish);
      if (s.contains("scale_form")) c.scheme.scale_form = scale_form_from_string(s["scale_form"].get<std::string>());
      if (s.contains("v_solver")) c.scheme.v_solver = vsolver_from_string(s["v_solver"].get<std::string>());
    }

    if (j.contains("initial")) {
      const json& in = j["initial"];
      reject_unknown(in, {"u", "v"}, "initial");
      if (in.contains("u")) c.u0 = selector_from_json(in["u"], initial_registry(), "initial.u");
      if (in.contains("v")) {
        if (!in["v"].is_array()) throw Error("initial.v: expected a list");
        for (const auto& v : in["v"]) c.v0.push_back(selector_from_json(v, initial_registry(), "initial.v"));
      }
    }

    if (j.contains("output")) {
      const json& o = j["output"];
      reject_unknown(o, {"directory", "fields", "diagnostics_every", "spectrum_count", "residual_form"}, "output");
      read(o, "directory", c.output.directory);
      read(o, "fields", c.output.fields);
      read(o, "diagnostics_every", c.output.diagnostics_every);
      read(o, "spectrum_count", c.output.spectrum_count);
      if (o.contains("residual_form"))
        c.output.residual_form = residual_form_from_string(o["residual_form"].get<std::string>());
    }

    if (j.contains("landscape")) {
      const json& l = j["landscape"];
      reject_unknown(l, {"root", "root_index", "epsilon", "dedup_tol", "residual_tol", "stop_residual",
                         "newton_refine", "spectrum_count", "max_runs", "upward", "max_index", "seed", "noise", "v_solver"},
                     "landscape");
      LandscapeConfig lc;
      if (l.contains("root")) lc.root = selector_from_json(l["root"], initial_registry(), "landscape.root");
      read(l, "root_index", lc.root_index);
      read(l, "epsilon", lc.epsilon);
      read(l, "dedup_tol", lc.dedup_tol);
      read(l, "residual_tol", lc.residual_tol);
      read(l, "stop_residual", lc.stop_residual);
      read(l, "newton_refine", lc.newton_refine);
      read(l, "spectrum_count", lc.spectrum_count);
      read(l, "max_runs", lc.max_runs);
      read(l, "upward", lc.upward);
      read(l, "max_index", lc.max_index);
      read(l, "seed", lc.seed);
      read(l, "noise", lc.noise);
      if (l.contains("v_solver")) lc.v_solver = vsolver_from_string(l["v_solver"].get<std::string>());
      c.landscape = lc;
    }

    if (j.contains("convergence")) {
      const json& cv = j["convergence"];
      reject_unknown(cv, {"variable", "levels", "reference"}, "convergence");
      ConvergenceConfig cc;
      read(cv, "variable", cc.variable);
      auto level = [&](const json& e, const std::string& what) {
        reject_unknown(e, {"tau", "cells"}, what);
        ConvergenceLevel lv;
        read(e, "tau", lv.tau);
        if (!e.contains("cells")) throw Error(what + ": missing 'cells'");
        lv.cells = read_cells(e["cells"], what + ".cells");
        return lv;
      };
      if (!cv.contains("levels") || !cv["levels"].is_array()) throw Error("convergence: missing 'levels' list");
      for (const auto& e : cv["levels"]) cc.levels.push_back(level(e, "convergence.levels"));
      if (!cv.contains("reference")) throw Error("convergence: missing 'reference'");
      cc.reference = level(cv["reference"], "convergence.reference");
      c.convergence = cc;
    }

    c.scheme.tau = c.tau;
    c.scheme.T = c.T;
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string emit_config(const RunConfig& c) {
  json j;
  j["name"] = c.name;
  j["problem"] = {{"dim", c.dim},
                  {"extents", c.extents},
                  {"diffusion", selector_to_json(c.diffusion, diffusion_registry())},
                  {"advection", selector_to_json(c.advection, advection_registry())},
                  {"reaction", selector_to_json(c.reaction, reaction_registry())},
                  {"nonlinearity", selector_to_json(c.nonlinearity, nonlinearity_registry())}};
  j["discretization"] = {{"cells", c.cells}, {"tau", c.tau}, {"T", c.T}};
  j["scheme"] = {{"k", c.scheme.k},
                 {"beta", c.scheme.beta},
                 {"gamma", c.scheme.gamma},
                 {"picard_tol", c.scheme.picard_tol},
                 {"picard_max", c.scheme.picard_max},
                 {"guard_eps", c.scheme.guard_eps},
                 {"orthonormal_terms", c.scheme.orthonormal_terms},
                 {"scale_form", to_string(c.scheme.scale_form)},
                 {"v_solver", to_string(c.scheme.v_solver)},
                 {"newton_fallback", c.scheme.newton_fallback},
                 {"polish", c.scheme.polish}};
  json v = json::array();
  for (const auto& s : c.v0) v.push_back(selector_to_json(s, initial_registry()));
  j["initial"] = {{"u", selector_to_json(c.u0, initial_registry())}, {"v", v}};
  j["output"] = {{"directory", c.output.directory},
                 {"fields", c.output.fields},
                 {"diagnostics_every", c.output.diagnostics_every},
                 {"spectrum_count", c.output.spectrum_count},
                 {"residual_form", to_string(c.output.residual_form)}};
  if (c.landscape) {
    const auto& l = *c.landscape;
    j["landscape"] = {{"root", selector_to_json(l.root, initial_registry())},
                      {"root_index", l.root_index},
                      {"epsilon", l.epsilon},
                      {"dedup_tol", l.dedup_tol},
                      {"residual_tol", l.residual_tol},
                      {"stop_residual", l.stop_residual},
                      {"newton_refine", l.newton_refine},
                      {"spectrum_count", l.spectrum_count},
                      {"max_runs", l.max_runs},
                      {"upward", l.upward},
                      {"max_index", l.max_index},
                      {"seed", l.seed},
                      {"noise", l.noise},
                      {"v_solver", to_string(l.v_solver)}};
  }
  if (c.convergence) {
    const auto& cv = *c.convergence;
    json levels = json::array();
    for (const auto& l : cv.levels) levels.push_back({{"tau", l.tau}, {"cells", l.cells}});
    j["convergence"] = {{"variable", cv.variable},
                        {"levels", levels},
                        {"reference", {{"tau", cv.reference.tau}, {"cells", cv.reference.cells}}}};
  }
  return j.dump(2) + "\n";
}

Mesh build_config_mesh(const RunConfig& c) { return build_config_mesh(c, c.cells); }

Mesh build_config_mesh(const RunConfig& c, const std::vector<int>& cells) { return build_mesh(c.dim, c.extents, cells); }

Problem build_problem(const RunConfig& c) {
  Problem p;
  p.dim = c.dim;
  if (c.diffusion.type == "constant") {
    const double a = c.diffusion.scalar("value");
    p.a = constant_diffusion(a);
    p.a0 = a;
  } else {
    const double ax = c.diffusion.scalar("x");
    const double ay = c.dim == 2 ? c.diffusion.scalar("y") : ax;
    p.a = diagonal_diffusion(ax, ay);
    p.a0 = std::min(ax, ay);
  }
  if (c.advection.type == "sin") {
    const double amp = c.advection.scalar("amplitude");
    const double freq = c.advection.scalar("frequency");
    p.b = [amp, freq](const Point& x) { return Eigen::Vector2d(amp * std::sin(freq * x.x()), 0.0); };
  } else if (c.advection.type == "constant") {
    const Eigen::Vector2d b(c.advection.scalar("x"), c.dim == 2 ? c.advection.scalar("y") : 0.0);
    p.b = [b](const Point&) { return b; };
  }
  if (c.reaction.type == "constant") {
    const double value = c.reaction.scalar("value");
    p.c = [value](const Point&) { return value; };
  }
  const std::vector<double> coef = c.nonlinearity.list("coefficients");
  p.f = [coef](double u) {
    double acc = 0.0;
    for (auto it = coef.rbegin(); it != coef.rend(); ++it) acc = acc * u + *it;
    return acc;
  };
  p.fprime = [coef](double u) {
    double acc = 0.0;
    for (std::size_t j = coef.size(); j-- > 1;) acc = acc * u + static_cast<double>(j) * coef[j];
    return acc;
  };
  return p;
}

AnalyticFunction build_initial(const RunConfig& c, const Selector& s) {
  check_selector(s, initial_registry(), "initial");
  const int dim = c.dim;
  const std::vector<double> ext = c.extents;
  if (s.type == "zero") {
    return {[](const Point&) { return 0.0; }, [](const Point&) { return Eigen::Vector2d::Zero().eval(); }};
  }
  if (s.type == "x_sine") {
    const double amp = s.scalar("amplitude");
    const double k = s.scalar("mode") * std::numbers::pi / ext[0];
    return {[amp, k](const Point& x) { return amp * x.x() * std::sin(k * x.x()); },
            [amp, k](const Point& x) {
              return Eigen::Vector2d(amp * (std::sin(k * x.x()) + k * x.x() * std::cos(k * x.x())), 0.0);
            }};
  }
  // Products of sin(m_d pi x_d / L_d); normalized_sine has unit L2 norm on the box.
  const std::vector<double> modes = s.list("modes");
  double amp = 1.0;
  if (s.type == "sine") amp = s.scalar("amplitude");
  else
    for (int d = 0; d < dim; ++d) amp *= std::sqrt(2.0 / ext[d]);
  std::array<double, 2> k{0.0, 0.0};
  for (int d = 0; d < dim; ++d) k[d] = modes[d] * std::numbers::pi / ext[d];
  auto value = [amp, k, dim](const Point& x) {
    double v = amp * std::sin(k[0] * x.x());
    if (dim == 2) v *= std::sin(k[1] * x.y());
    return v;
  };
  auto gradient = [amp, k, dim](const Point& x) {
    const double sx = std::sin(k[0] * x.x()), cx = std::cos(k[0] * x.x());
    if (dim == 1) return Eigen::Vector2d(amp * k[0] * cx, 0.0);
    const double sy = std::sin(k[1] * x.y()), cy = std::cos(k[1] * x.y());
    return Eigen::Vector2d(amp * k[0] * cx * sy, amp * k[1] * sx * cy);
  };
  return {value, gradient};
}

SchemeParams build_scheme(const RunConfig& c) {
  SchemeParams sp = c.scheme;
  sp.tau = c.tau;
  sp.T = c.T;
  return sp;
}

SaddleState build_initial_state(const FemSpace& space, const Problem& problem, const RunConfig& c) {
  std::vector<AnalyticFunction> v0;
  for (const auto& s : c.v0) v0.push_back(build_initial(c, s));
  return initialize(space, problem, build_initial(c, c.u0), v0);
}

std::vector<std::string> preset_names() {
  return {"example1a", "example1b", "example2", "npo-comparison", "convergence-time", "convergence-space"};
}

namespace {

RunConfig example1a() {
  RunConfig c;
  c.name = "example1a";
  c.dim = 1;
  c.extents = {std::numbers::pi};
  c.cells = {100};
  c.tau = 1e-3;
  c.T = 5.0;
  c.diffusion = make_selector("constant", {{"value", {1.0}}});
  c.nonlinearity = make_selector("polynomial", {{"coefficients", {0.0, 0.0, -10.0, 0.0, 1.0}}});
  c.scheme.k = 3;
  c.scheme.tau = c.tau;
  c.scheme.T = c.T;
  c.u0 = make_selector("sine", {{"amplitude", {1.0}}, {"modes", {4.0}}});
  for (int i = 1; i <= 3; ++i) c.v0.push_back(make_selector("normalized_sine", {{"modes", {double(i)}}}));
  c.output.directory = "out/example1a";
  return c;
}

RunConfig example1b() {
  RunConfig c = example1a();
  c.name = "example1b";
  c.diffusion = make_selector("constant", {{"value", {0.02}}});
  c.advection = make_selector("sin", {{"amplitude", {0.02}}, {"frequency", {2.0}}});
  c.reaction = make_selector("constant", {{"value", {0.5}}});
  c.nonlinearity = make_selector("polynomial", {{"coefficients", {0.0, 0.0, -1.0}}});
  c.u0 = make_selector("x_sine", {{"amplitude", {0.1}}, {"mode", {1.0}}});
  c.output.directory = "out/example1b";
  return c;
}

RunConfig example2() {
  RunConfig c;
  c.name = "example2";
  c.dim = 2;
  c.extents = {1.0, 1.0};
  c.cells = {64, 64};
  c.tau = 1e-3;
  c.T = 5.0;
  c.diffusion = make_selector("diagonal", {{"x", {0.006}}, {"y", {0.006}}});
  c.nonlinearity = make_selector("polynomial", {{"coefficients", {0.0, 1.0, 0.0, -1.0}}});
  c.scheme.k = 0;
  c.scheme.tau = c.tau;
  c.scheme.T = c.T;
  c.scheme.v_solver = VSolver::automatic;
  c.output.directory = "out/example2";
  c.scheme.picard_tol = 1e-10;
  c.scheme.polish = false;
  LandscapeConfig l;
  l.newton_refine = true;
  c.landscape = l;
  return c;
}

RunConfig convergence_base(const std::string& name) {
  RunConfig c = example1a();
  c.name = name;
  c.cells = {1024};
  c.tau = 1e-4;
  c.scheme.tau = c.tau;
  c.scheme.v_solver = VSolver::automatic;
  c.output.directory = "out/" + name;
  c.output.fields = false;
  ConvergenceConfig cv;
  cv.reference = {1e-4, {1024}};
  c.convergence = cv;
  return c;
}

}  // namespace

std::vector<RunConfig> preset(const std::string& name) {
  if (name == "example1a") return {example1a()};
  if (name == "example1b") return {example1b()};
  if (name == "example2") return {example2()};
  if (name == "npo-comparison") {
    RunConfig a = example1a();
    a.u0 = make_selector("sine", {{"amplitude", {1.0}}, {"modes", {1.0}}});
    a.name = "npo-orthonormal";
    a.output.directory = "out/npo-comparison/orthonormal";
    RunConfig b = a;
    b.name = "npo-variant";
    b.scheme.orthonormal_terms = false;
    b.output.directory = "out/npo-comparison/variant";
    return {a, b};
  }
  if (name == "convergence-time") {
    RunConfig c = convergence_base(name);
    c.convergence->variable = "tau";
    for (double tau : {1.6e-2, 8e-3, 4e-3, 2e-3}) c.convergence->levels.push_back({tau, {1024}});
    return {c};
  }
  if (name == "convergence-space") {
    RunConfig c = convergence_base(name);
    c.convergence->variable = "h";
    for (int m : {64, 128, 256, 512}) c.convergence->levels.push_back({1e-4, {m}});
    return {c};
  }
  std::string known;
  for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  throw Error("unknown preset '" + name + "' (known: " + known + ")");
}

}  // namespace hisd
