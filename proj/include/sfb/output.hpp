#pragma once

#include "sfb/verify.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace sfb {

using Json = nlohmann::ordered_json;

// Plain numeric table written with 17 significant digits.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
void write_csv(const CsvTable& t, const std::string& path);
std::string format_double(double v);  // %.17g

void write_json(const Json& j, const std::string& path);

// Legacy ASCII VTK of the shell mesh with per-tet cell data: u, p, chi (as
// the axial vector), and the three stress rows at the centroid.
void write_vtk(const std::string& path, const Discretization& d, const SolutionBundle& s);

// phi at the trace partition vertices.
CsvTable trace_table(const Discretization& d, const SolutionBundle& s);

Json to_json(const SolveReport& r, bool with_timing = false);
Json to_json(const ErrorRecord& e);
Json to_json(const ConvergenceTable& t);
CsvTable to_csv(const ConvergenceTable& t);
Json system_manifest(const BlockSystem& sys, const Discretization& d);
Json mesh_summary(const TetMesh& m, int level);

Json to_json(const FdReport& r);
Json to_json(const KernelAlgebraReport& r);
Json to_json(const OperatorStructure& r);
Json to_json(const JumpReport& r);
Json to_json(const CalderonReport& r);
Json to_json(const KernelCertificate& r);
Json to_json(const CoercivityReport& r);
Json to_json(const InfSupReport& r);
Json to_json(const CrossRow& r);
Json to_json(const ExteriorReport& r);
Json to_json(const DecayReport& r);

}  // namespace sfb
