// sfb: batch driver for the coupled FEM/BEM Stokes solvers.

#include "sfb/config.hpp"
#include "sfb/output.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace sfb;
namespace fs = std::filesystem;

namespace {

// Thrown for a failed asserted check; the message names the check.
struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json config_json(const RunConfig& c) {
  return {{"formulation", c.formulation},
          {"level", c.level},
          {"levels", c.levels},
          {"seed", c.seed},
          {"geometry", {{"inner_half_width", c.inner_half_width}, {"outer_half_width", c.outer_half_width}, {"mesh", c.mesh_path}}},
          {"mesh_ratio",
           {{"trace_coarsening", c.trace_coarsening},
            {"lambda_coarsening", c.lambda_coarsening},
            {"coarse_fallback", c.coarse_fallback}}},
          {"quadrature",
           {{"singular_order", c.singular_order},
            {"regular_points", c.regular_points},
            {"near_depth", c.near_depth},
            {"check_singular_order", c.check_singular_order},
            {"error_degree", c.error_degree}}},
          {"data",
           {{"f", c.f},
            {"g_D", c.resolved_g_D()},
            {"g_N", c.resolved_g_N()},
            {"viscosity", c.viscosity},
            {"stokeslet", {{"source", c.stokeslet_source}, {"strength", c.stokeslet_strength}}}}}};
}

std::string out_path(const RunConfig& c, const std::string& name) { return (fs::path(c.output_dir) / name).string(); }

MeshHierarchy hierarchy(const RunConfig& c, int max_level) {
  if (c.mesh_path.empty()) return build_annulus_hierarchy(c.inner_half_width, c.outer_half_width, max_level);
  MeshHierarchy H = hierarchy_from_mesh(load_msh(c.mesh_path), max_level);
  H.a = c.inner_half_width;
  H.b = c.outer_half_width;
  return H;
}

// Named pass/fail record collected into report.json.
class CheckLog {
 public:
  bool add(const std::string& name, bool pass, Json values) {
    checks_.push_back({{"name", name}, {"status", pass ? "pass" : "fail"}, {"values", std::move(values)}});
    std::printf("%-44s %s\n", name.c_str(), pass ? "pass" : "FAIL");
    if (!pass) failed_.push_back(name);
    return pass;
  }
  const Json& json() const { return checks_; }
  const std::vector<std::string>& failed() const { return failed_; }

 private:
  Json checks_ = Json::array();
  std::vector<std::string> failed_;
};

Eigen::MatrixXd trace_W(Workspace& w, const Discretization& d) {
  return w.cache.get(d.level - d.trace_coarsening, d.trace_mesh, kOpW).W;
}

// ---------------------------------------------------------------------------

int cmd_mesh_info(const RunConfig& c) {
  const int max_level = *std::max_element(c.levels.begin(), c.levels.end());
  const MeshHierarchy H = hierarchy(c, max_level);
  Json levels = Json::array();
  for (int l : c.levels) {
    const TetMesh& m = H.level(l);
    levels.push_back(mesh_summary(m, l));
    std::printf("level %d: %d vertices, %d tets, h = %.4g\n", l, m.num_vertices(), m.num_tets(), mesh_diameter(m));
  }
  Json report = {{"command", "mesh-info"}, {"config", config_json(c)}, {"levels", levels}};
  write_json(report, out_path(c, "report.json"));
  return 0;
}

int cmd_check(const RunConfig& c) {
  CheckLog log;
  const KernelAlgebraReport ka = kernel_algebra_check(100, c.seed);
  log.add("kernel_algebra", ka.max() <= 1e-13, to_json(ka));

  const StokesletSolution st = c.stokeslet();
  const FdReport fd = stokeslet_fd_check(st, c.inner_half_width, c.outer_half_width, 20, c.seed);
  log.add("stokeslet_fd", std::max({fd.momentum, fd.divergence, fd.gradient}) <= 1e-6 && fd.self_gradient <= 1e-8 &&
                              fd.force <= 1e-10,
          to_json(fd));

  const int max_level = *std::max_element(c.levels.begin(), c.levels.end());
  Workspace w(hierarchy(c, max_level), c.check_quadrature());
  std::vector<double> h, bie1, bie2, js, jd, jts, jtd;
  for (int l : c.levels) {
    const std::string tag = "level" + std::to_string(l) + ".";
    const SurfaceMesh g = extract_surface(w.H.level(l), kGammaOuter);
    const BoundaryOperators& ops = w.cache.get(l, g, kOpAll);
    const OperatorStructure os = operator_structure(g, ops);
    log.add(tag + "operator_structure",
            os.V_symmetry <= 1e-10 && os.W_symmetry <= 1e-10 && os.V_nu < 1e-6 && os.W_rm < 1e-6 && os.W_small == 6 &&
                os.V_definite,
            to_json(os));
    const CalderonReport cr = calderon_residual(g, ops, st);
    log.add(tag + "calderon", std::isfinite(cr.bie1) && std::isfinite(cr.bie2), to_json(cr));
    if (l >= 1) {
      const JumpReport jr = jump_relations(g, 24, c.seed);
      log.add(tag + "jumps", std::isfinite(jr.single_velocity) && std::isfinite(jr.double_traction), to_json(jr));
      h.push_back(cr.h);
      bie1.push_back(cr.bie1);
      bie2.push_back(cr.bie2);
      js.push_back(jr.single_velocity);
      jd.push_back(jr.double_velocity);
      jts.push_back(jr.single_traction);
      jtd.push_back(jr.double_traction);
    }
    const KernelCertificate kc = kernel_certificate(w, c.kind(), l, c.policy());
    log.add(tag + "kernel_certificate." + c.formulation,
            kc.kernel_residual <= 1e-8 && kc.factored && kc.zero_solution <= 1e-10, to_json(kc));
  }
  if (h.size() >= 2) {
    auto rate = [&](const std::vector<double>& e) { return observed_rate(e.front(), e.back(), h.front(), h.back()); };
    const Json rates = {{"bie1", rate(bie1)},         {"bie2", rate(bie2)},           {"single_velocity", rate(js)},
                        {"double_velocity", rate(jd)}, {"single_traction", rate(jts)}, {"double_traction", rate(jtd)}};
    bool ok = true;
    for (const auto& [k, v] : rates.items()) ok = ok && v.get<double>() >= 0.7;
    log.add("boundary_rates", ok, rates);
  }
  Json report = {{"command", "check"}, {"config", config_json(c)}, {"checks", log.json()},
                 {"status", log.failed().empty() ? "pass" : "fail"}};
  write_json(report, out_path(c, "report.json"));
  if (!log.failed().empty()) throw CheckFailure("failed checks: " + log.failed().front());
  return 0;
}

struct SolvedLevel {
  std::unique_ptr<Workspace> w;
  LevelSetup setup;
  BlockSystem sys;
  SolveResult res;
};

SolvedLevel solve_level(const RunConfig& c, const ProblemData& data) {
  SolvedLevel s;
  s.w = std::make_unique<Workspace>(hierarchy(c, c.level), c.quadrature());
  s.setup = setup_level(*s.w, c.kind(), c.level, c.policy());
  s.sys = build_system(s.setup.d, s.w->cache, data, s.setup.build);
  s.res = solve_direct(s.sys, s.setup.d, data);
  return s;
}

int cmd_solve(const RunConfig& c) {
  const ProblemData data = c.data();
  const SolvedLevel s = solve_level(c, data);
  const Discretization& d = s.setup.d;
  Json report = {{"command", "solve"},
                 {"config", config_json(c)},
                 {"formulation", kind_name(c.kind())},
                 {"level", c.level},
                 {"h", d.h},
                 {"h_trace", d.h_trace},
                 {"partition_fallback", s.setup.relaxed},
                 {"solve", to_json(s.res.report, c.timings)}};
  if (c.manufactured()) {
    const Eigen::MatrixXd W = trace_W(*s.w, d);
    const ErrorRecord e = energy_errors(d, s.res.solution, c.stokeslet().fields(), &W, c.error_degree);
    report["errors"] = to_json(e);
    CsvTable t;
    t.header = {"level", "h", "sigma", "div_sigma", "u", "chi", "p", "phi_w", "phi_l2", "lambda"};
    t.rows.push_back({double(c.level), d.h, e.sigma.error, e.div_sigma.error, e.u.error, e.chi.error, e.p.error,
                      e.phi_w.error, e.phi_l2.error, e.has_lambda ? e.lambda.error : 0.0});
    write_csv(t, out_path(c, "errors.csv"));
  }
  const bool ok = s.res.report.residual <= 1e-9;
  report["status"] = ok ? "pass" : "fail";
  write_json(report, out_path(c, "report.json"));
  write_json(system_manifest(s.sys, d), out_path(c, "system_manifest.json"));
  write_vtk(out_path(c, "solution.vtk"), d, s.res.solution);
  write_csv(trace_table(d, s.res.solution), out_path(c, "traces.csv"));
  std::printf("%s level %d: %ld unknowns, residual %.3g\n", kind_name(c.kind()).c_str(), c.level,
              s.res.report.unknowns, s.res.report.residual);
  if (!ok) throw CheckFailure("solve.residual");
  return 0;
}

int cmd_converge(const RunConfig& c) {
  if (!c.manufactured()) throw ConfigError("data: converge needs Stokeslet data (ch-dirichlet or ch-neumann)");
  const int max_level = *std::max_element(c.levels.begin(), c.levels.end());
  Workspace w(hierarchy(c, max_level), c.quadrature());
  const ConvergenceTable t = run_convergence(w, c.kind(), c.levels, c.data(), c.stokeslet().fields(), c.policy());
  write_csv(to_csv(t), out_path(c, "errors.csv"));
  Json report = {{"command", "converge"}, {"config", config_json(c)}, {"table", to_json(t)}};
  write_json(report, out_path(c, "report.json"));
  for (const ConvergenceRow& r : t.rows)
    std::printf("level %d  h %.4f  sigma %.4e  u %.4e  p %.4e\n", r.level, r.h, r.errors.sigma.relative(),
                r.errors.u.relative(), r.errors.p.relative());
  for (const char* f : {"sigma", "u", "p"}) std::printf("rate %-6s %.3f\n", f, t.overall_rate(f));
  return 0;
}

std::vector<Vec3> read_points(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("output.points_file: cannot read " + path);
  std::vector<Vec3> pts;
  std::string line;
  int n = 0;
  while (std::getline(f, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream is(line);
    Vec3 x;
    if (!(is >> x[0] >> x[1] >> x[2])) {
      if (n == 1) continue;  // header
      throw ConfigError("output.points_file: bad line " + std::to_string(n));
    }
    pts.push_back(x);
  }
  return pts;
}

int cmd_eval_exterior(const RunConfig& c) {
  const ProblemData data = c.data();
  const SolvedLevel s = solve_level(c, data);
  const std::vector<Vec3> pts = c.points_file.empty() ? sphere_points(64, 3.0) : read_points(c.points_file);
  for (const Vec3& x : pts)
    if (x.cwiseAbs().maxCoeff() <= c.outer_half_width)
      throw ConfigError("output.points_file: points must lie outside the outer cube");
  const ExteriorEvaluator ev(s.setup.d, s.res.solution);
  const std::vector<ExteriorSample> samples = ev.eval(pts);
  CsvTable t;
  t.header = {"x", "y", "z", "u_x", "u_y", "u_z", "p"};
  const bool exact = c.manufactured();
  const StokesletSolution st = c.stokeslet();
  if (exact) t.header.insert(t.header.end(), {"u_exact_x", "u_exact_y", "u_exact_z", "p_exact"});
  for (const ExteriorSample& e : samples) {
    std::vector<double> row{e.x[0], e.x[1], e.x[2], e.u[0], e.u[1], e.u[2], e.p};
    if (exact) {
      const Vec3 u = st.u(e.x);
      row.insert(row.end(), {u[0], u[1], u[2], st.p(e.x)});
    }
    t.rows.push_back(row);
  }
  write_csv(t, out_path(c, "exterior_samples.csv"));
  Json report = {{"command", "eval-exterior"},
                 {"config", config_json(c)},
                 {"points", pts.size()},
                 {"solve", to_json(s.res.report, c.timings)}};
  if (exact) report["errors"] = to_json(exterior_errors(ev, st, pts));
  write_json(report, out_path(c, "report.json"));
  std::printf("%zu exterior samples written\n", pts.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  ensure_blas_runtime(argv);
  RunConfig flags;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;

  CLI::App app{"Coupled mixed FEM / BEM solvers for exterior Stokes flow around a cube shell.\n"
               "Settings come from --config (TOML) and are overridden by the flags below."};
  app.footer("\nDefault config (every key optional):\n\n" + default_config_toml());
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("-c,--config", config_path, "TOML config file")->check(CLI::ExistingFile);
  bool print_config = false;
  app.add_flag("--print-default-config", print_config, "Print the default config with comments and exit");

  auto flag = [&](const std::string& name, auto RunConfig::*member, const std::string& help) {
    CLI::Option* o = app.add_option(name, flags.*member, help)->capture_default_str();
    using T = std::remove_reference_t<decltype(flags.*member)>;
    if constexpr (!std::is_same_v<T, std::string> && !std::is_arithmetic_v<T>) o->delimiter(',');
    overrides.emplace_back(o, [member, &flags](RunConfig& c) { c.*member = flags.*member; });
  };
  flag("--formulation", &RunConfig::formulation, "jn | ch-dirichlet | ch-neumann | ch-neumann-homog");
  flag("--level", &RunConfig::level, "Refinement level for solve and eval-exterior");
  flag("--levels", &RunConfig::levels, "Levels for converge, check and mesh-info");
  flag("--inner-half-width", &RunConfig::inner_half_width, "Half width of the inner cube");
  flag("--outer-half-width", &RunConfig::outer_half_width, "Half width of the outer cube");
  flag("--mesh", &RunConfig::mesh_path, "Gmsh mesh replacing the structured shell");
  flag("--trace-coarsening", &RunConfig::trace_coarsening, "Coarsening of the phi partition (-1: default)");
  flag("--lambda-coarsening", &RunConfig::lambda_coarsening, "Coarsening of the lambda partition");
  flag("--coarse-fallback", &RunConfig::coarse_fallback, "Use a finer partition when no coarser level exists");
  flag("--singular-order", &RunConfig::singular_order, "Sauter-Schwab Gauss points per direction");
  flag("--regular-points", &RunConfig::regular_points, "Gauss points per direction on separated pairs");
  flag("--near-depth", &RunConfig::near_depth, "Subdivision depth for close pairs");
  flag("--check-singular-order", &RunConfig::check_singular_order, "Singular order for operator checks");
  flag("--error-degree", &RunConfig::error_degree, "Quadrature degree of the volume error integrals");
  flag("--f", &RunConfig::f, "Body force: none | smooth");
  flag("--g-D", &RunConfig::g_D, "Dirichlet datum: auto | none | stokeslet");
  flag("--g-N", &RunConfig::g_N, "Neumann datum: auto | none | stokeslet");
  flag("--viscosity", &RunConfig::viscosity, "Viscosity mu");
  flag("--stokeslet-source", &RunConfig::stokeslet_source, "Stokeslet source x0 (inside the inner cube)");
  flag("--stokeslet-strength", &RunConfig::stokeslet_strength, "Stokeslet strength a");
  flag("-o,--output-dir", &RunConfig::output_dir, "Output directory");
  flag("--points", &RunConfig::points_file, "eval-exterior: CSV file of x,y,z points");
  flag("--timings", &RunConfig::timings, "Include wall times in report.json");
  flag("--seed", &RunConfig::seed, "Seed of the sampled checks");
  flag("--threads", &RunConfig::threads, "OpenMP threads (0: default)");

  std::map<std::string, std::function<int(const RunConfig&)>> commands = {
      {"mesh-info", cmd_mesh_info},
      {"check", cmd_check},
      {"solve", cmd_solve},
      {"converge", cmd_converge},
      {"eval-exterior", cmd_eval_exterior}};
  const std::map<std::string, std::string> help = {
      {"mesh-info", "Mesh hierarchy summary"},
      {"check", "Kernel, operator and Calderon checks; kernel certificates"},
      {"solve", "Solve one level; write report, manifest, VTK and traces"},
      {"converge", "Convergence table against the Stokeslet"},
      {"eval-exterior", "Solve and evaluate the exterior representation formula"}};
  for (const auto& [name, fn] : commands) app.add_subcommand(name, help.at(name));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (print_config) {
      std::cout << default_config_toml();
      return 0;
    }
    return app.exit(e);
  }
  if (print_config) {
    std::cout << default_config_toml();
    return 0;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
    for (auto& [opt, apply] : overrides)
      if (opt->count() > 0) apply(c);
    validate(c);
    if (c.threads > 0) omp_set_num_threads(c.threads);
    fs::create_directories(c.output_dir);
    return commands.at(name)(c);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const CheckFailure& e) {
    std::fprintf(stderr, "%s: %s\n", name.c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s failed: %s\n", name.c_str(), e.what());
    return 3;
  }
}
