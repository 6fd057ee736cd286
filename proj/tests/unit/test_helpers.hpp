#pragma once

#include <cmath>
#include <functional>
#include <memory>

#include "levelflow/fem/field.hpp"
#include "levelflow/fem/transfer.hpp"
#include "levelflow/mesh.hpp"

namespace levelflow::test_support {

/// Adapts a uniform mesh around the zero set of f until the refinement stops changing.
inline std::shared_ptr<const QuadMesh> adapted_mesh(const Extents& domain, double h0, int r_max,
                                                    const std::function<double(const Vec2&)>& f,
                                                    double beta) {
  auto mesh = std::make_shared<const QuadMesh>(QuadMesh::build_uniform(domain, h0));
  for (int it = 0; it < 50; ++it) {
    std::vector<double> phi(mesh->size());
    for (std::size_t k = 0; k < mesh->size(); ++k) phi[k] = f(mesh->cell(k).barycenter());
    auto [next, report] = adapt(*mesh, phi, beta, 2.0, 2.0, r_max);
    mesh = std::make_shared<const QuadMesh>(std::move(next));
    if (report.unchanged()) break;
  }
  return mesh;
}

inline double circle_distance(const Vec2& p, const Vec2& c, double r) { return r - norm(p - c); }

}  // namespace levelflow::test_support
