#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "levelflow/mesh.hpp"

namespace levelflow::fem {

/// Bit set of domain sides a node lies on (bit s for Side s).
using SideBits = unsigned;

/// Returns, per component, whether the node's value is prescribed.
using DirichletMask = std::function<std::array<bool, 2>(const Vec2& point, SideBits sides)>;

enum class DofKind : std::uint8_t { free, dirichlet, hanging };

/// Continuous Lagrange space of degree 1 or 2 with 1 or 2 components on a
/// quadtree mesh. Global dof = node * components + component; the local dof
/// of cell node a and component c is c * nodes_per_cell + a, with
/// a = ix + (degree + 1) * iy.
class FESpace {
 public:
  FESpace(std::shared_ptr<const QuadMesh> mesh, int degree, int components, DirichletMask mask = {});

  const QuadMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const QuadMesh>& mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  int components() const { return components_; }
  int nodes_per_cell() const { return (degree_ + 1) * (degree_ + 1); }
  int dofs_per_cell() const { return nodes_per_cell() * components_; }
  int n_nodes() const { return static_cast<int>(node_keys_.size()); }
  int n_dofs() const { return n_nodes() * components_; }
  int n_free() const { return n_free_; }

  std::span<const int> cell_nodes(int cell) const {
    return {cell_nodes_.data() + static_cast<std::size_t>(cell) * nodes_per_cell(),
            static_cast<std::size_t>(nodes_per_cell())};
  }
  /// Global dof of a local dof.
  int cell_dof(int cell, int local) const {
    const int npc = nodes_per_cell();
    return cell_nodes_[static_cast<std::size_t>(cell) * npc + local % npc] * components_ + local / npc;
  }
  Vec2 node_point(int node) const { return node_points_[node]; }
  NodeKey node_key(int node) const { return node_keys_[node]; }
  SideBits node_sides(int node) const { return node_sides_[node]; }
  int find_node(NodeKey key) const;

  DofKind kind(int dof) const { return kinds_[dof]; }
  /// Reduced index of a free dof, -1 otherwise.
  int free_index(int dof) const { return free_index_[dof]; }
  int free_dof(int reduced) const { return free_dofs_[reduced]; }
  const std::vector<int>& dirichlet_dofs() const { return dirichlet_dofs_; }
  const std::vector<int>& hanging_dofs() const { return hanging_dofs_; }

  struct Term {
    /// >= 0: reduced free index; < 0: Dirichlet dof encoded as -(dof + 1).
    int target;
    double weight;
  };
  /// Representation of a dof as a combination of free and Dirichlet dofs.
  std::span<const Term> expansion(int dof) const {
    return {terms_.data() + term_ptr_[dof], static_cast<std::size_t>(term_ptr_[dof + 1] - term_ptr_[dof])};
  }
  /// Direct (unresolved) masters of a hanging dof.
  std::span<const Term> hanging_masters(int dof) const {
    return {raw_terms_.data() + raw_ptr_[dof], static_cast<std::size_t>(raw_ptr_[dof + 1] - raw_ptr_[dof])};
  }

  /// CSR sparsity pattern of the reduced (free-dof) system.
  const std::vector<int>& pattern_row_ptr() const { return row_ptr_; }
  const std::vector<int>& pattern_cols() const { return cols_; }

 private:
  void build_nodes();
  void build_constraints(const DirichletMask& mask);
  void build_pattern();

  std::shared_ptr<const QuadMesh> mesh_;
  int degree_;
  int components_;
  std::vector<int> cell_nodes_;
  std::vector<NodeKey> node_keys_;
  std::vector<Vec2> node_points_;
  std::vector<SideBits> node_sides_;
  std::vector<std::pair<NodeKey, int>> sorted_keys_;
  std::vector<DofKind> kinds_;
  std::vector<int> free_index_;
  std::vector<int> free_dofs_;
  std::vector<int> dirichlet_dofs_;
  std::vector<int> hanging_dofs_;
  int n_free_ = 0;
  std::vector<int> raw_ptr_;
  std::vector<Term> raw_terms_;
  std::vector<int> term_ptr_;
  std::vector<Term> terms_;
  std::vector<int> row_ptr_;
  std::vector<int> cols_;
};

/// Velocity-style mask: all components fixed on every boundary node.
DirichletMask all_boundary_mask();

}  // namespace levelflow::fem
