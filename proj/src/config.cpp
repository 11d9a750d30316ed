#include "sfb/config.hpp"

#include <tomlplusplus/toml.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace sfb {

namespace {

void check_keys(const toml::table& t, const std::string& prefix, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : t) {
    const std::string key(k.str());
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + prefix + key + "'");
  }
}

template <class T>
void read(const toml::table& t, const std::string& prefix, const char* key, T& out) {
  const toml::node* n = t.get(key);
  if (!n) return;
  if constexpr (std::is_same_v<T, double>) {
    if (auto v = n->value<double>()) {
      out = *v;
      return;
    }
  } else if constexpr (std::is_same_v<T, bool>) {
    if (auto v = n->value<bool>()) {
      out = *v;
      return;
    }
  } else if constexpr (std::is_integral_v<T>) {
    if (auto v = n->value<int64_t>()) {
      out = static_cast<T>(*v);
      return;
    }
  } else {
    if (auto v = n->value<std::string>()) {
      out = *v;
      return;
    }
  }
  throw ConfigError("config key '" + prefix + key + "' has the wrong type");
}

void read_vec3(const toml::table& t, const std::string& prefix, const char* key, std::array<double, 3>& out) {
  const toml::node* n = t.get(key);
  if (!n) return;
  const toml::array* a = n->as_array();
  if (!a || a->size() != 3) throw ConfigError("config key '" + prefix + key + "' must be an array of 3 numbers");
  for (std::size_t i = 0; i < 3; ++i) {
    auto v = (*a)[i].value<double>();
    if (!v) throw ConfigError("config key '" + prefix + key + "' must be an array of 3 numbers");
    out[i] = *v;
  }
}

const toml::table* sub(const toml::table& t, const char* key) {
  const toml::node* n = t.get(key);
  if (!n) return nullptr;
  if (!n->is_table()) throw ConfigError(std::string("config key '") + key + "' must be a table");
  return n->as_table();
}

}  // namespace

QuadOptions RunConfig::quadrature() const {
  QuadOptions q;
  q.singular_order = singular_order;
  q.regular_points = regular_points;
  q.near_depth = near_depth;
  return q;
}

QuadOptions RunConfig::check_quadrature() const {
  QuadOptions q = quadrature();
  q.singular_order = check_singular_order;
  return q;
}

std::string RunConfig::resolved_g_D() const {
  if (g_D != "auto") return g_D;
  return kind() == FormulationKind::CH_Dirichlet ? "stokeslet" : "none";
}

std::string RunConfig::resolved_g_N() const {
  if (g_N != "auto") return g_N;
  return kind() == FormulationKind::CH_Neumann ? "stokeslet" : "none";
}

MeshPolicy RunConfig::policy() const { return {trace_coarsening, lambda_coarsening, coarse_fallback}; }

StokesletSolution RunConfig::stokeslet() const {
  return stokeslet_manufactured(Vec3(stokeslet_source[0], stokeslet_source[1], stokeslet_source[2]),
                                Vec3(stokeslet_strength[0], stokeslet_strength[1], stokeslet_strength[2]),
                                inner_half_width, viscosity);
}

Vec3 smooth_force(const Vec3& x) { return Vec3(std::sin(x[1]), x[0] * x[2], 1.0); }

ProblemData RunConfig::data() const {
  ProblemData d;
  d.viscosity = viscosity;
  if (f == "smooth") d.f = smooth_force;
  if (manufactured()) {
    const StokesletSolution s = stokeslet();
    const ProblemData m = stokeslet_data(kind(), s);
    d.g_D = m.g_D;
    d.g_N = m.g_N;
  }
  return d;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  toml::table t;
  try {
    t = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << e;
    throw ConfigError("config parse error: " + os.str());
  }
  RunConfig c;
  check_keys(t, "", {"formulation", "level", "levels", "seed", "threads", "geometry", "mesh_ratio", "quadrature", "data",
                     "output"});
  read(t, "", "formulation", c.formulation);
  read(t, "", "level", c.level);
  read(t, "", "seed", c.seed);
  read(t, "", "threads", c.threads);
  if (const toml::node* n = t.get("levels")) {
    const toml::array* a = n->as_array();
    if (!a) throw ConfigError("config key 'levels' must be an array of integers");
    c.levels.clear();
    for (const auto& e : *a) {
      auto v = e.value<int64_t>();
      if (!v) throw ConfigError("config key 'levels' must be an array of integers");
      c.levels.push_back(static_cast<int>(*v));
    }
  }
  if (const toml::table* g = sub(t, "geometry")) {
    check_keys(*g, "geometry.", {"inner_half_width", "outer_half_width", "mesh"});
    read(*g, "geometry.", "inner_half_width", c.inner_half_width);
    read(*g, "geometry.", "outer_half_width", c.outer_half_width);
    read(*g, "geometry.", "mesh", c.mesh_path);
  }
  if (const toml::table* m = sub(t, "mesh_ratio")) {
    check_keys(*m, "mesh_ratio.", {"trace_coarsening", "lambda_coarsening", "coarse_fallback"});
    read(*m, "mesh_ratio.", "trace_coarsening", c.trace_coarsening);
    read(*m, "mesh_ratio.", "lambda_coarsening", c.lambda_coarsening);
    read(*m, "mesh_ratio.", "coarse_fallback", c.coarse_fallback);
  }
  if (const toml::table* q = sub(t, "quadrature")) {
    check_keys(*q, "quadrature.",
               {"singular_order", "regular_points", "near_depth", "check_singular_order", "error_degree"});
    read(*q, "quadrature.", "singular_order", c.singular_order);
    read(*q, "quadrature.", "regular_points", c.regular_points);
    read(*q, "quadrature.", "near_depth", c.near_depth);
    read(*q, "quadrature.", "check_singular_order", c.check_singular_order);
    read(*q, "quadrature.", "error_degree", c.error_degree);
  }
  if (const toml::table* d = sub(t, "data")) {
    check_keys(*d, "data.", {"f", "g_D", "g_N", "viscosity", "stokeslet"});
    read(*d, "data.", "f", c.f);
    read(*d, "data.", "g_D", c.g_D);
    read(*d, "data.", "g_N", c.g_N);
    read(*d, "data.", "viscosity", c.viscosity);
    if (const toml::table* s = sub(*d, "stokeslet")) {
      check_keys(*s, "data.stokeslet.", {"source", "strength"});
      read_vec3(*s, "data.stokeslet.", "source", c.stokeslet_source);
      read_vec3(*s, "data.stokeslet.", "strength", c.stokeslet_strength);
    }
  }
  if (const toml::table* o = sub(t, "output")) {
    check_keys(*o, "output.", {"dir", "points_file", "timings"});
    read(*o, "output.", "dir", c.output_dir);
    read(*o, "output.", "points_file", c.points_file);
    read(*o, "output.", "timings", c.timings);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

void validate(const RunConfig& c) {
  FormulationKind k;
  try {
    k = c.kind();
  } catch (const FormError& e) {
    throw ConfigError(std::string("formulation: ") + e.what());
  }
  auto one_of = [](const std::string& field, const std::string& v, std::initializer_list<const char*> ok) {
    for (const char* o : ok)
      if (v == o) return;
    throw ConfigError(field + ": unknown selector '" + v + "'");
  };
  one_of("data.f", c.f, {"none", "smooth"});
  one_of("data.g_D", c.g_D, {"auto", "none", "stokeslet"});
  one_of("data.g_N", c.g_N, {"auto", "none", "stokeslet"});
  const std::string gD = c.resolved_g_D(), gN = c.resolved_g_N();
  if (k == FormulationKind::CH_Dirichlet && gD == "none") throw ConfigError("data.g_D: ch-dirichlet requires g_D");
  if (k == FormulationKind::CH_Neumann && gN == "none") throw ConfigError("data.g_N: ch-neumann requires g_N");
  if (k != FormulationKind::CH_Dirichlet && gD != "none")
    throw ConfigError("data.g_D: " + kind_name(k) + " takes no Dirichlet datum");
  if (k != FormulationKind::CH_Neumann && gN != "none")
    throw ConfigError("data.g_N: " + kind_name(k) + " takes no Neumann datum");
  if (!(c.viscosity > 0.0)) throw ConfigError("data.viscosity: must be positive");
  if (c.mesh_path.empty() && !(0.0 < c.inner_half_width && c.inner_half_width < c.outer_half_width))
    throw ConfigError("geometry: need 0 < inner_half_width < outer_half_width");
  if (c.level < 0) throw ConfigError("level: must be non-negative");
  if (c.levels.empty()) throw ConfigError("levels: must not be empty");
  for (std::size_t i = 0; i < c.levels.size(); ++i)
    if (c.levels[i] < 0 || (i && c.levels[i] <= c.levels[i - 1]))
      throw ConfigError("levels: must be non-negative and increasing");
  if (c.trace_coarsening < -1) throw ConfigError("mesh_ratio.trace_coarsening: must be -1 or non-negative");
  if (c.lambda_coarsening < 0) throw ConfigError("mesh_ratio.lambda_coarsening: must be non-negative");
  if (c.singular_order < 1 || c.singular_order > 20) throw ConfigError("quadrature.singular_order: 1..20");
  if (c.check_singular_order < 1 || c.check_singular_order > 20)
    throw ConfigError("quadrature.check_singular_order: 1..20");
  if (c.regular_points < 1 || c.regular_points > 11) throw ConfigError("quadrature.regular_points: 1..11");
  if (c.near_depth < 0 || c.near_depth > 8) throw ConfigError("quadrature.near_depth: 0..8");
  if (c.error_degree < 1 || c.error_degree > 20) throw ConfigError("quadrature.error_degree: 1..20");
  if (c.threads < 0) throw ConfigError("threads: must be non-negative");
  if (c.manufactured()) {
    try {
      (void)c.stokeslet();
    } catch (const VerifyError& e) {
      throw ConfigError(std::string("data.stokeslet.source: ") + e.what());
    }
  }
}

std::string default_config_toml() {
  return R"(formulation = "ch-dirichlet"   # jn | ch-dirichlet | ch-neumann | ch-neumann-homog
level = 1                       # solve, eval-exterior
levels = [0, 1, 2]              # converge, check
seed = 1
threads = 0                     # 0: OpenMP default

[geometry]
inner_half_width = 0.5
outer_half_width = 1.0
mesh = ""                       # Gmsh 2.2/4.1 file; tags 1 = inner, 2 = outer boundary

[mesh_ratio]
trace_coarsening = -1           # phi partition coarsening; -1: 1 for jn, 0 otherwise
lambda_coarsening = 1           # ch-neumann multiplier partition coarsening
coarse_fallback = true          # use the finest available partition at level 0

[quadrature]
singular_order = 6              # Sauter-Schwab points per direction (solves)
regular_points = 4              # n x n points per triangle for separated pairs
near_depth = 4                  # subdivision depth for close pairs
check_singular_order = 12       # operator checks
error_degree = 4                # volume error integrals

[data]
f = "none"                      # none | smooth
g_D = "auto"                    # auto | none | stokeslet (ch-dirichlet only)
g_N = "auto"                    # auto | none | stokeslet (ch-neumann only)
viscosity = 0.5

[data.stokeslet]
source = [0.1, -0.05, 0.08]
strength = [1.0, 0.5, -0.3]

[output]
dir = "out"
points_file = ""                # eval-exterior: CSV with columns x,y,z
timings = false
)";
}

}  // namespace sfb
