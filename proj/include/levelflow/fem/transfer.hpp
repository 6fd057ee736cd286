#pragma once

#include <memory>
#include <utility>

#include "levelflow/fem/field.hpp"
#include "levelflow/mesh.hpp"

namespace levelflow::fem {

/// Nodal transfer of `field` onto `new_space`, whose mesh was produced from
/// the field's mesh by adapt. Surviving nodes keep their values; new nodes get
/// the old cell polynomial evaluated at the node. Throws MeshError when the
/// two meshes do not share the same root grid.
Field transfer_field(const Field& field, std::shared_ptr<const FESpace> new_space);

/// adapt driven by a scalar level-set field defined on `mesh`.
std::pair<QuadMesh, AdaptReport> adapt(const QuadMesh& mesh, const Field& phi, double beta, double c_r,
                                       double c_c, int r_max);

}  // namespace levelflow::fem
