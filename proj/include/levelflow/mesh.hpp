#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "levelflow/geometry.hpp"

namespace levelflow {

/// Packed (level, i, j) address of a quadtree cell; i and j index the cell
/// among all cells of that level across the whole root grid.
using CellKey = std::uint64_t;

constexpr CellKey make_cell_key(int level, std::int64_t i, std::int64_t j) {
  return (static_cast<std::uint64_t>(level) << 58) | (static_cast<std::uint64_t>(i) << 29) |
         static_cast<std::uint64_t>(j);
}
constexpr int key_level(CellKey k) { return static_cast<int>(k >> 58); }
constexpr std::int64_t key_i(CellKey k) { return static_cast<std::int64_t>((k >> 29) & ((1ULL << 29) - 1)); }
constexpr std::int64_t key_j(CellKey k) { return static_cast<std::int64_t>(k & ((1ULL << 29) - 1)); }
constexpr CellKey parent_key(CellKey k) {
  return make_cell_key(key_level(k) - 1, key_i(k) >> 1, key_j(k) >> 1);
}
/// Children in the order (0,0), (1,0), (0,1), (1,1).
constexpr CellKey child_key(CellKey k, int c) {
  return make_cell_key(key_level(k) + 1, 2 * key_i(k) + (c & 1), 2 * key_j(k) + (c >> 1));
}

/// Key of a node on the integer lattice shared by all levels.
using NodeKey = std::uint64_t;
constexpr NodeKey make_node_key(std::int64_t I, std::int64_t J) {
  return (static_cast<std::uint64_t>(I) << 32) | static_cast<std::uint64_t>(J);
}
constexpr std::int64_t node_I(NodeKey k) { return static_cast<std::int64_t>(k >> 32); }
constexpr std::int64_t node_J(NodeKey k) { return static_cast<std::int64_t>(k & 0xffffffffULL); }

struct Cell {
  CellKey key = 0;
  int level = 0;
  std::int64_t i = 0;
  std::int64_t j = 0;
  Extents box{};

  double hx() const { return box.width(); }
  double hy() const { return box.height(); }
  Vec2 barycenter() const { return box.center(); }
  /// h_K: length of the cell diagonal.
  double diameter() const { return std::hypot(hx(), hy()); }
  double area() const { return box.area(); }
};

struct AdaptReport {
  int n_refined = 0;
  int n_coarsened = 0;
  int n_balance_refinements = 0;

  bool unchanged() const { return n_refined == 0 && n_coarsened == 0 && n_balance_refinements == 0; }
  friend bool operator==(const AdaptReport&, const AdaptReport&) = default;
};

/// Leaves of a forest of quadtrees over a uniform root grid, stored in a
/// canonical order (root cells row-major, children depth-first).
class QuadMesh {
 public:
  /// Lattice subdivisions per root cell side: 2^kLatticeBits.
  static constexpr int kLatticeBits = 14;
  /// Deepest level whose quadratic nodes still land on the lattice.
  static constexpr int kMaxLevel = kLatticeBits - 1;

  /// Uniform generation-0 grid of square-ish cells of side h0.
  static QuadMesh build_uniform(const Extents& domain, double h0);

  /// Mesh with the given leaf keys over the given root grid. Keys must tile the domain.
  QuadMesh(const Extents& domain, int roots_x, int roots_y, std::vector<CellKey> leaves);

  const Extents& domain() const { return domain_; }
  int roots_x() const { return nx_; }
  int roots_y() const { return ny_; }
  double root_hx() const { return domain_.width() / nx_; }
  double root_hy() const { return domain_.height() / ny_; }

  const std::vector<Cell>& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }
  const Cell& cell(std::size_t k) const { return cells_[k]; }

  /// Index of the leaf with this key, if it is a leaf.
  std::optional<int> find(CellKey key) const;
  /// Leaf equal to or containing the cell `key`, if any (none when `key` is subdivided).
  std::optional<int> covering_leaf(CellKey key) const;
  /// Leaf containing p. Points on shared edges resolve to the upper/right cell,
  /// except on the domain's upper/right boundary.
  int locate(const Vec2& p) const;

  int max_level() const;
  double min_diameter() const;
  /// Smallest cell side length.
  double min_side() const;

  /// Lattice extent of a cell of the given level.
  static constexpr std::int64_t lattice_span(int level) { return std::int64_t{1} << (kLatticeBits - level); }
  std::int64_t lattice_nx() const { return static_cast<std::int64_t>(nx_) << kLatticeBits; }
  std::int64_t lattice_ny() const { return static_cast<std::int64_t>(ny_) << kLatticeBits; }
  Vec2 lattice_point(std::int64_t I, std::int64_t J) const;
  Cell make_cell(CellKey key) const;
  bool same_roots(const QuadMesh& other) const {
    return domain_ == other.domain_ && nx_ == other.nx_ && ny_ == other.ny_;
  }

 private:
  Extents domain_;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<Cell> cells_;
  std::unordered_map<CellKey, int> index_;
};

/// One refine sweep, one coarsen sweep and a face-balance loop driven by the
/// level-set values at the cell barycenters (`phi_at_barycenter[k]` for leaf k).
std::pair<QuadMesh, AdaptReport> adapt(const QuadMesh& mesh, std::span<const double> phi_at_barycenter,
                                       double beta, double c_r, double c_c, int r_max);

/// True when every pair of face neighbors differs by at most one level.
bool is_balanced(const QuadMesh& mesh);

}  // namespace levelflow
