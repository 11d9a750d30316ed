#include "common.hpp"

#include "sfb/config.hpp"
#include "sfb/output.hpp"

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace sfb;

namespace {

std::string read_file(const std::string& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string error_of(const std::string& toml) {
  try {
    validate(parse_config(toml));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("the documented default config parses to the defaults") {
  const RunConfig c = parse_config(default_config_toml());
  const RunConfig d;
  CHECK(c.formulation == d.formulation);
  CHECK(c.levels == d.levels);
  CHECK(c.stokeslet_source == d.stokeslet_source);
  CHECK(c.singular_order == d.singular_order);
  CHECK(c.check_singular_order == d.check_singular_order);
  CHECK(c.g_D == d.g_D);
  CHECK(c.output_dir == d.output_dir);
  CHECK_NOTHROW(validate(c));
  CHECK(c.manufactured());
  CHECK(c.resolved_g_D() == "stokeslet");
}

TEST_CASE("config keys override") {
  const RunConfig c = parse_config(
      "formulation = \"ch-neumann\"\nlevels = [1, 2]\n[quadrature]\nsingular_order = 9\n[data.stokeslet]\nsource = [0, 0, "
      "0.1]\n");
  CHECK(c.kind() == FormulationKind::CH_Neumann);
  CHECK(c.levels == std::vector<int>{1, 2});
  CHECK(c.quadrature().singular_order == 9);
  CHECK(c.check_quadrature().singular_order == 12);
  CHECK(c.stokeslet_source[2] == 0.1);
  CHECK(c.resolved_g_N() == "stokeslet");
  CHECK(c.resolved_g_D() == "none");
}

TEST_CASE("config validation names the field") {
  CHECK(error_of("formulation = \"jn\"\n[data]\ng_D = \"stokeslet\"\n").find("data.g_D") == 0);
  CHECK(error_of("formulation = \"ch-dirichlet\"\n[data]\ng_D = \"none\"\n").find("data.g_D") == 0);
  CHECK(error_of("formulation = \"ch-neumann-homog\"\n[data]\ng_N = \"stokeslet\"\n").find("data.g_N") == 0);
  CHECK(error_of("formulation = \"bem\"\n").find("formulation") == 0);
  CHECK(error_of("[data]\nviscosity = -1.0\n").find("data.viscosity") == 0);
  CHECK(error_of("levels = [2, 1]\n").find("levels") == 0);
  CHECK(error_of("[data.stokeslet]\nsource = [0.49, 0, 0]\n").find("data.stokeslet.source") == 0);
  CHECK(error_of("[data]\nf = \"gravity\"\n").find("data.f") == 0);
  CHECK(error_of("formulation = \"jn\"\n") == "");
}

TEST_CASE("unknown keys and wrong types are errors") {
  CHECK_THROWS_WITH_AS(parse_config("[geometry]\ninner = 0.5\n"), doctest::Contains("geometry.inner"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("level = \"two\"\n"), doctest::Contains("level"), ConfigError);
  CHECK_THROWS_AS(parse_config("level = \n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[data.stokeslet]\nsource = [1, 2]\n"), ConfigError);
}

TEST_CASE("smooth force selector") {
  RunConfig c = parse_config("formulation = \"jn\"\n[data]\nf = \"smooth\"\n");
  const ProblemData d = c.data();
  REQUIRE(d.f);
  CHECK_FALSE(d.g_D);
  CHECK((d.f(Vec3(1, 2, 3)) - Vec3(std::sin(2.0), 3.0, 1.0)).norm() < 1e-15);
}

TEST_CASE("csv and json output is deterministic") {
  const auto dir = std::filesystem::temp_directory_path();
  CsvTable t;
  t.header = {"a", "b"};
  t.rows = {{0.1, 1.0 / 3.0}, {1e-300, -2.5}};
  write_csv(t, (dir / "sfb_t1.csv").string());
  write_csv(t, (dir / "sfb_t2.csv").string());
  const std::string c1 = read_file((dir / "sfb_t1.csv").string());
  CHECK(c1 == read_file((dir / "sfb_t2.csv").string()));
  CHECK(c1 == "a,b\n0.10000000000000001,0.33333333333333331\n1e-300,-2.5\n");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);

  CalderonReport r;
  r.h = 0.5;
  r.bie1 = std::numeric_limits<double>::quiet_NaN();
  r.bie2 = 1e-3;
  const Json j = to_json(r);
  CHECK(j["bie1"].is_null());
  write_json(j, (dir / "sfb_t1.json").string());
  write_json(to_json(r), (dir / "sfb_t2.json").string());
  CHECK(read_file((dir / "sfb_t1.json").string()) == read_file((dir / "sfb_t2.json").string()));
  SolveReport s;
  s.factor_seconds = 1.5;
  CHECK_FALSE(to_json(s).contains("factor_seconds"));
  CHECK(to_json(s, true).contains("factor_seconds"));
  for (const char* f : {"sfb_t1.csv", "sfb_t2.csv", "sfb_t1.json", "sfb_t2.json"}) std::filesystem::remove(dir / f);
}
