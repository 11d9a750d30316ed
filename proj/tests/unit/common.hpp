#pragma once

#include "sfb/verify.hpp"

#include <doctest.h>

namespace test {

// Shell a = 0.5, b = 1 refined up to level 2, shared by the tests.
inline const sfb::MeshHierarchy& annulus() {
  static const sfb::MeshHierarchy H = sfb::build_annulus_hierarchy(0.5, 1.0, 2);
  return H;
}

inline const sfb::SurfaceMesh& outer(int level) {
  static std::map<int, sfb::SurfaceMesh> cache;
  auto it = cache.find(level);
  if (it == cache.end()) it = cache.emplace(level, sfb::extract_surface(annulus().level(level), sfb::kGammaOuter)).first;
  return it->second;
}

// Homogeneous data of the right shape for `kind`.
inline sfb::ProblemData zero_data(sfb::FormulationKind kind) {
  sfb::ProblemData data;
  if (kind == sfb::FormulationKind::CH_Dirichlet) data.g_D = [](const sfb::Vec3&) { return sfb::Vec3::Zero(); };
  if (kind == sfb::FormulationKind::CH_Neumann) data.g_N = [](const sfb::Vec3&) { return sfb::Vec3::Zero(); };
  return data;
}

inline double max_abs(const Eigen::MatrixXd& A) { return A.cwiseAbs().maxCoeff(); }

}  // namespace test
