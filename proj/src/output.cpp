#include "sfb/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace sfb {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  return f;
}

// JSON has no inf/nan; those become null.
Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json field(const FieldError& f) { return {{"error", num(f.error)}, {"norm", num(f.norm)}, {"relative", num(f.relative())}}; }

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const CsvTable& t, const std::string& path) {
  std::ofstream f = open_out(path);
  for (std::size_t i = 0; i < t.header.size(); ++i) f << (i ? "," : "") << t.header[i];
  f << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << format_double(row[i]);
    f << "\n";
  }
}

void write_json(const Json& j, const std::string& path) {
  std::ofstream f = open_out(path);
  f << j.dump(2) << "\n";
}

void write_vtk(const std::string& path, const Discretization& d, const SolutionBundle& s) {
  const TetMesh& m = *d.mesh;
  const StressSpace& S = *d.stress;
  std::ofstream f = open_out(path);
  auto w = [&](double v) { f << format_double(v); };
  f << "# vtk DataFile Version 3.0\n" << kind_name(s.kind) << " level " << d.level << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  f << "POINTS " << m.num_vertices() << " double\n";
  for (const Vec3& v : m.vertices) {
    w(v[0]);
    f << " ";
    w(v[1]);
    f << " ";
    w(v[2]);
    f << "\n";
  }
  f << "CELLS " << m.num_tets() << " " << 5 * m.num_tets() << "\n";
  for (const auto& t : m.tets) f << "4 " << t[0] << " " << t[1] << " " << t[2] << " " << t[3] << "\n";
  f << "CELL_TYPES " << m.num_tets() << "\n";
  for (int t = 0; t < m.num_tets(); ++t) f << "10\n";
  f << "CELL_DATA " << m.num_tets() << "\n";
  auto vec = [&](const std::string& name, auto&& get) {
    f << "VECTORS " << name << " double\n";
    for (int t = 0; t < m.num_tets(); ++t) {
      const Vec3 v = get(t);
      w(v[0]);
      f << " ";
      w(v[1]);
      f << " ";
      w(v[2]);
      f << "\n";
    }
  };
  vec("u", [&](int t) { return Vec3(s.u.segment<3>(3 * t)); });
  // Axial vector w of the skew matrix, chi x = w x x.
  vec("chi", [&](int t) { return Vec3(-s.chi[3 * t + 2], s.chi[3 * t + 1], -s.chi[3 * t]); });
  const std::array<double, 4> mid{0.25, 0.25, 0.25, 0.25};
  for (int r = 0; r < 3; ++r)
    vec("sigma_row" + std::to_string(r),
        [&](int t) { return Vec3(s.stress_scale * S.eval(s.sigma, t, mid).row(r).transpose()); });
  const Eigen::VectorXd p = recover_pressure(S, s.sigma, s.stress_scale);
  f << "SCALARS p double 1\nLOOKUP_TABLE default\n";
  for (int t = 0; t < m.num_tets(); ++t) {
    w(p[t]);
    f << "\n";
  }
}

CsvTable trace_table(const Discretization& d, const SolutionBundle& s) {
  CsvTable t;
  t.header = {"x", "y", "z", "phi_x", "phi_y", "phi_z"};
  for (int v = 0; v < d.trace_mesh.num_vertices(); ++v) {
    const Vec3& x = d.trace_mesh.vertices[v];
    t.rows.push_back({x[0], x[1], x[2], s.phi[3 * v], s.phi[3 * v + 1], s.phi[3 * v + 2]});
  }
  return t;
}

Json to_json(const SolveReport& r, bool with_timing) {
  Json j = {{"residual", num(r.residual)},
            {"pivot_ratio", num(r.pivot_ratio)},
            {"condition", num(r.condition)},
            {"refinement_steps", r.refinement_steps},
            {"unknowns", r.unknowns}};
  if (with_timing) {
    j["factor_seconds"] = r.factor_seconds;
    j["solve_seconds"] = r.solve_seconds;
  }
  return j;
}

Json to_json(const ErrorRecord& e) {
  Json j = {{"sigma", field(e.sigma)}, {"div_sigma", field(e.div_sigma)}, {"u", field(e.u)}, {"chi", field(e.chi)},
            {"p", field(e.p)},         {"phi_w", field(e.phi_w)},         {"phi_l2", field(e.phi_l2)}};
  if (e.has_lambda) j["lambda"] = field(e.lambda);
  return j;
}

Json to_json(const ConvergenceTable& t) {
  Json j;
  j["formulation"] = kind_name(t.kind);
  Json rows = Json::array();
  for (const ConvergenceRow& r : t.rows)
    rows.push_back({{"level", r.level},
                    {"h", r.h},
                    {"h_trace", r.h_trace},
                    {"unknowns", r.unknowns},
                    {"solve", to_json(r.report)},
                    {"errors", to_json(r.errors)}});
  j["levels"] = rows;
  Json rates;
  for (const char* f : {"sigma", "div_sigma", "u", "chi", "p", "phi_l2", "lambda"}) {
    if (std::string(f) == "lambda" && (t.rows.empty() || !t.rows.front().errors.has_lambda)) continue;
    Json steps = Json::array();
    for (double r : t.step_rates(f)) steps.push_back(num(r));
    rates[f] = {{"steps", steps}, {"overall", num(t.overall_rate(f))}};
  }
  j["rates"] = rates;
  return j;
}

CsvTable to_csv(const ConvergenceTable& t) {
  CsvTable c;
  c.header = {"level", "h", "h_trace", "unknowns", "residual", "sigma", "div_sigma", "u",
              "chi",   "p", "phi_w",   "phi_l2",   "lambda"};
  for (const ConvergenceRow& r : t.rows) {
    const ErrorRecord& e = r.errors;
    c.rows.push_back({double(r.level), r.h, r.h_trace, double(r.unknowns), r.report.residual, e.sigma.error,
                      e.div_sigma.error, e.u.error, e.chi.error, e.p.error, e.phi_w.error, e.phi_l2.error,
                      e.has_lambda ? e.lambda.error : 0.0});
  }
  return c;
}

Json system_manifest(const BlockSystem& sys, const Discretization& d) {
  const BlockLayout& L = sys.layout;
  Json blocks = Json::array();
  for (const BlockInfo& b : sys.blocks)
    blocks.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}, {"nnz", b.nnz}, {"symmetric", b.symmetric}});
  return {{"formulation", kind_name(sys.kind)},
          {"level", d.level},
          {"trace_coarsening", d.trace_coarsening},
          {"lambda_coarsening", d.lambda_coarsening},
          {"h", d.h},
          {"h_trace", d.h_trace},
          {"mesh_ratio", d.h / d.h_trace},
          {"unknowns",
           {{"sigma", L.n_sigma},
            {"phi", L.n_phi},
            {"u", L.n_u},
            {"chi", L.n_chi},
            {"lambda", L.n_lambda},
            {"rm", L.n_rm},
            {"total", L.size()}}},
          {"offsets",
           {{"sigma", L.sigma()}, {"phi", L.phi()}, {"u", L.u()}, {"chi", L.chi()}, {"lambda", L.lambda()}, {"rm", L.rm()}}},
          {"nnz", static_cast<long>(sys.matrix.nonZeros())},
          {"blocks", blocks}};
}

Json mesh_summary(const TetMesh& m, int level) {
  const SurfaceMesh g = extract_surface(m, kGammaOuter), g0 = extract_surface(m, kGammaInner);
  return {{"level", level},
          {"vertices", m.num_vertices()},
          {"tets", m.num_tets()},
          {"facets", m.num_facets()},
          {"outer_triangles", g.num_tris()},
          {"inner_triangles", g0.num_tris()},
          {"h", mesh_diameter(m)},
          {"volume", m.volume()}};
}

Json to_json(const FdReport& r) {
  return {{"points", r.points},           {"seed", r.seed},
          {"momentum", num(r.momentum)},  {"divergence", num(r.divergence)},
          {"gradient", num(r.gradient)},  {"self_gradient", num(r.self_gradient)},
          {"self_laplacian", num(r.self_laplacian)}, {"force_balance", num(r.force)}};
}

Json to_json(const KernelAlgebraReport& r) {
  return {{"pairs", r.pairs},
          {"seed", r.seed},
          {"stokeslet_symmetry", num(r.symmetry)},
          {"stokeslet_evenness", num(r.evenness)},
          {"stokeslet_homogeneity", num(r.homogeneity)},
          {"pressure_oddness", num(r.q_oddness)},
          {"pressure_homogeneity", num(r.q_homogeneity)},
          {"traction_vs_gradient", num(r.traction_grad)}};
}

Json to_json(const OperatorStructure& r) {
  return {{"triangles", r.tris},
          {"V_symmetry", num(r.V_symmetry)},
          {"W_symmetry", num(r.W_symmetry)},
          {"V_nu", num(r.V_nu)},
          {"W_rigid", num(r.W_rm)},
          {"W_small_eigenvalues", r.W_small},
          {"W_lambda_max", num(r.W_max)},
          {"W_gap", num(r.W_gap)},
          {"V_definite_on_complement", r.V_definite},
          {"V_min_complement", num(r.V_min_complement)}};
}

Json to_json(const JumpReport& r) {
  return {{"points", r.points},
          {"h", r.h},
          {"single_velocity", num(r.single_velocity)},
          {"double_velocity", num(r.double_velocity)},
          {"single_traction", num(r.single_traction)},
          {"double_traction", num(r.double_traction)}};
}

Json to_json(const CalderonReport& r) { return {{"h", r.h}, {"bie1", num(r.bie1)}, {"bie2", num(r.bie2)}}; }

Json to_json(const KernelCertificate& r) {
  return {{"formulation", kind_name(r.kind)},
          {"level", r.level},
          {"kernel_residual", num(r.kernel_residual)},
          {"factored", r.factored},
          {"zero_solution", num(r.zero_solution)},
          {"pivot_ratio", num(r.pivot_ratio)},
          {"pivot_ratio_without_rm", num(r.pivot_ratio_without_rm)}};
}

Json to_json(const CoercivityReport& r) {
  return {{"delta", r.delta},
          {"min_eig", num(r.min_eig)},
          {"max_eig", num(r.max_eig)},
          {"iterations", r.iterations},
          {"converged", r.converged}};
}

Json to_json(const InfSupReport& r) {
  return {{"beta", num(r.beta)}, {"iterations", r.iterations}, {"converged", r.converged}};
}

Json to_json(const CrossRow& r) {
  return {{"level", r.level},
          {"h", r.h},
          {"jn_mesh_ratio", r.jn_ratio},
          {"sigma_distance", num(r.sigma_distance)},
          {"sigma_norm", num(r.sigma_norm)},
          {"u_distance", num(r.u_distance)},
          {"u_norm", num(r.u_norm)}};
}

Json to_json(const ExteriorReport& r) {
  return {{"points", r.points}, {"radius", r.radius}, {"u_error", num(r.u_error)}, {"p_error", num(r.p_error)}};
}

Json to_json(const DecayReport& r) {
  return {{"r1", r.r1},
          {"r2", r.r2},
          {"u_ratio", num(r.u_ratio)},
          {"u_expected", r.u_expected},
          {"p_ratio", num(r.p_ratio)},
          {"p_expected", r.p_expected}};
}

}  // namespace sfb
