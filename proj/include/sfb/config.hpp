#pragma once

#include "sfb/verify.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sfb {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One CLI run. Every key has a default; see default_config_toml().
struct RunConfig {
  // [geometry]
  double inner_half_width = 0.5;
  double outer_half_width = 1.0;
  std::string mesh_path;  // Gmsh file replacing the structured shell when set

  std::string formulation = "ch-dirichlet";
  int level = 1;                    // solve / eval-exterior
  std::vector<int> levels{0, 1, 2};  // converge / check

  // [mesh_ratio]
  int trace_coarsening = -1;  // -1: formulation default (1 for jn)
  int lambda_coarsening = 1;
  bool coarse_fallback = true;

  // [quadrature]
  int singular_order = 6;
  int regular_points = 4;
  int near_depth = 4;
  int check_singular_order = 12;  // operator checks
  int error_degree = 4;           // volume error integrals

  // [data]
  std::string f = "none";    // none | smooth
  // auto: Stokeslet data where the formulation takes it, none otherwise.
  std::string g_D = "auto";  // auto | none | stokeslet
  std::string g_N = "auto";  // auto | none | stokeslet
  std::array<double, 3> stokeslet_source{0.1, -0.05, 0.08};
  std::array<double, 3> stokeslet_strength{1.0, 0.5, -0.3};
  double viscosity = 0.5;

  // [output]
  std::string output_dir = "out";
  std::string points_file;  // eval-exterior: CSV x,y,z
  bool timings = false;     // wall times in report.json (breaks byte-identical output)

  unsigned seed = 1;
  int threads = 0;  // 0: OpenMP default

  FormulationKind kind() const { return parse_kind(formulation); }
  QuadOptions quadrature() const;
  QuadOptions check_quadrature() const;
  MeshPolicy policy() const;
  std::string resolved_g_D() const;
  std::string resolved_g_N() const;
  bool manufactured() const { return resolved_g_D() == "stokeslet" || resolved_g_N() == "stokeslet"; }
  StokesletSolution stokeslet() const;
  ProblemData data() const;
};

// Keys of `text` override the defaults; unknown keys are errors.
RunConfig parse_config(const std::string& text, const std::string& origin = "<string>");
RunConfig load_config(const std::string& path);
// Field-named errors for kind/data mismatches and out-of-range values.
void validate(const RunConfig& c);
std::string default_config_toml();

// The smooth body force used by the "smooth" selector.
Vec3 smooth_force(const Vec3& x);

}  // namespace sfb
