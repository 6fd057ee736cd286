#include "levelflow/fem/transfer.hpp"

#include "levelflow/error.hpp"

namespace levelflow::fem {

Field transfer_field(const Field& field, std::shared_ptr<const FESpace> new_space) {
  const FESpace& old_space = field.space();
  if (!old_space.mesh().same_roots(new_space->mesh()))
    throw MeshError("field transfer between meshes with different root grids");
  if (old_space.degree() != new_space->degree() || old_space.components() != new_space->components())
    throw MeshError("field transfer between different element types");
  const int nc = old_space.components();
  Field out(new_space);
  for (int n = 0; n < new_space->n_nodes(); ++n) {
    const int old = old_space.find_node(new_space->node_key(n));
    if (old >= 0) {
      for (int c = 0; c < nc; ++c) out[n * nc + c] = field[old * nc + c];
    } else {
      const Vec2 p = new_space->node_point(n);
      for (int c = 0; c < nc; ++c) out[n * nc + c] = evaluate(field, p, c);
    }
  }
  out.distribute();
  return out;
}

std::pair<QuadMesh, AdaptReport> adapt(const QuadMesh& mesh, const Field& phi, double beta, double c_r,
                                       double c_c, int r_max) {
  if (&phi.space().mesh() != &mesh) throw MeshError("level-set field is not defined on this mesh");
  const auto values = barycenter_values(phi);
  return levelflow::adapt(mesh, values, beta, c_r, c_c, r_max);
}

}  // namespace levelflow::fem
