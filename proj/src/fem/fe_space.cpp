#include "levelflow/fem/fe_space.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include "levelflow/error.hpp"
#include "levelflow/fem/quadrature.hpp"

namespace levelflow::fem {

DirichletMask all_boundary_mask() {
  return [](const Vec2&, SideBits sides) { return std::array<bool, 2>{sides != 0, sides != 0}; };
}

FESpace::FESpace(std::shared_ptr<const QuadMesh> mesh, int degree, int components, DirichletMask mask)
    : mesh_(std::move(mesh)), degree_(degree), components_(components) {
  if (degree_ < 1 || degree_ > 2) throw std::invalid_argument("degree must be 1 or 2");
  if (components_ < 1 || components_ > 2) throw std::invalid_argument("components must be 1 or 2");
  build_nodes();
  build_constraints(mask);
  build_pattern();
}

int FESpace::find_node(NodeKey key) const {
  const auto it = std::lower_bound(sorted_keys_.begin(), sorted_keys_.end(), std::pair<NodeKey, int>{key, -1});
  if (it == sorted_keys_.end() || it->first != key) return -1;
  return it->second;
}

void FESpace::build_nodes() {
  const auto& m = *mesh_;
  const int d = degree_;
  const int npc = nodes_per_cell();
  std::unordered_map<NodeKey, int> index;
  index.reserve(m.size() * (d == 1 ? 2 : 5));
  cell_nodes_.resize(m.size() * npc);
  for (std::size_t k = 0; k < m.size(); ++k) {
    const Cell& c = m.cell(k);
    const std::int64_t span = QuadMesh::lattice_span(c.level);
    for (int iy = 0; iy <= d; ++iy)
      for (int ix = 0; ix <= d; ++ix) {
        const std::int64_t I = c.i * span + ix * span / d;
        const std::int64_t J = c.j * span + iy * span / d;
        const NodeKey key = make_node_key(I, J);
        auto [it, inserted] = index.try_emplace(key, static_cast<int>(node_keys_.size()));
        if (inserted) {
          node_keys_.push_back(key);
          node_points_.push_back(m.lattice_point(I, J));
          SideBits s = 0;
          if (I == 0) s |= 1u << static_cast<int>(Side::left);
          if (I == m.lattice_nx()) s |= 1u << static_cast<int>(Side::right);
          if (J == 0) s |= 1u << static_cast<int>(Side::bottom);
          if (J == m.lattice_ny()) s |= 1u << static_cast<int>(Side::top);
          node_sides_.push_back(s);
        }
        cell_nodes_[k * npc + ix + (d + 1) * iy] = it->second;
      }
  }
  sorted_keys_.reserve(node_keys_.size());
  for (std::size_t n = 0; n < node_keys_.size(); ++n) sorted_keys_.emplace_back(node_keys_[n], static_cast<int>(n));
  std::sort(sorted_keys_.begin(), sorted_keys_.end());
}

void FESpace::build_constraints(const DirichletMask& mask) {
  const auto& m = *mesh_;
  const int d = degree_;
  const int nc = components_;
  const int ndofs = n_dofs();
  kinds_.assign(ndofs, DofKind::free);

  // Direct hanging-node relations, one list of (master node, weight) per hanging node.
  std::vector<std::vector<std::pair<int, double>>> masters(n_nodes());
  constexpr int di[4] = {-1, 1, 0, 0};
  constexpr int dj[4] = {0, 0, -1, 1};
  for (std::size_t k = 0; k < m.size(); ++k) {
    const Cell& c = m.cell(k);
    const std::int64_t span = QuadMesh::lattice_span(c.level);
    for (int s = 0; s < 4; ++s) {
      const std::int64_t ni = c.i + di[s];
      const std::int64_t nj = c.j + dj[s];
      if (ni < 0 || nj < 0 || ni >= (std::int64_t{m.roots_x()} << c.level) ||
          nj >= (std::int64_t{m.roots_y()} << c.level))
        continue;
      if (m.covering_leaf(make_cell_key(c.level, ni, nj))) continue;
      // Neighbor is subdivided: the finer side's extra edge nodes hang on this edge.
      const bool vertical = s < 2;
      const std::int64_t fixed = vertical ? (c.i + (s == 1 ? 1 : 0)) * span : (c.j + (s == 3 ? 1 : 0)) * span;
      const std::int64_t start = vertical ? c.j * span : c.i * span;
      auto key_at = [&](std::int64_t along) {
        return vertical ? make_node_key(fixed, along) : make_node_key(along, fixed);
      };
      std::vector<int> edge_nodes(d + 1);
      for (int a = 0; a <= d; ++a) edge_nodes[a] = find_node(key_at(start + a * span / d));
      for (int h = 0; h < d; ++h) {
        const double t = (2.0 * h + 1.0) / (2.0 * d);
        const int node = find_node(key_at(start + (2 * h + 1) * span / (2 * d)));
        if (node < 0) throw MeshError("hanging node missing: mesh is not face balanced");
        if (!masters[node].empty()) continue;
        for (int a = 0; a <= d; ++a) {
          const double w = lagrange_1d(d, a, t);
          if (w != 0.0) masters[node].emplace_back(edge_nodes[a], w);
        }
      }
    }
  }

  raw_ptr_.assign(ndofs + 1, 0);
  for (int n = 0; n < n_nodes(); ++n) {
    for (int c = 0; c < nc; ++c) {
      const int dof = n * nc + c;
      if (!masters[n].empty()) {
        kinds_[dof] = DofKind::hanging;
        hanging_dofs_.push_back(dof);
        for (const auto& [mn, w] : masters[n]) raw_terms_.push_back({mn * nc + c, w});
      }
      raw_ptr_[dof + 1] = static_cast<int>(raw_terms_.size());
    }
    if (masters[n].empty() && node_sides_[n] != 0 && mask) {
      const auto fixed = mask(node_points_[n], node_sides_[n]);
      for (int c = 0; c < nc; ++c)
        if (fixed[c]) kinds_[n * nc + c] = DofKind::dirichlet;
    }
  }

  free_index_.assign(ndofs, -1);
  for (int dof = 0; dof < ndofs; ++dof) {
    if (kinds_[dof] == DofKind::free) {
      free_index_[dof] = static_cast<int>(free_dofs_.size());
      free_dofs_.push_back(dof);
    } else if (kinds_[dof] == DofKind::dirichlet) {
      dirichlet_dofs_.push_back(dof);
    }
  }
  n_free_ = static_cast<int>(free_dofs_.size());

  // Resolve chains of hanging nodes into free and Dirichlet terms.
  std::vector<std::vector<Term>> resolved(ndofs);
  std::vector<char> done(ndofs, 0);
  std::function<const std::vector<Term>&(int)> resolve = [&](int dof) -> const std::vector<Term>& {
    if (done[dof]) return resolved[dof];
    auto& out = resolved[dof];
    switch (kinds_[dof]) {
      case DofKind::free: out.push_back({free_index_[dof], 1.0}); break;
      case DofKind::dirichlet: out.push_back({-(dof + 1), 1.0}); break;
      case DofKind::hanging: {
        std::vector<Term> acc;
        for (int p = raw_ptr_[dof]; p < raw_ptr_[dof + 1]; ++p) {
          const Term raw = raw_terms_[p];
          for (const Term& t : resolve(raw.target)) acc.push_back({t.target, raw.weight * t.weight});
        }
        std::sort(acc.begin(), acc.end(), [](const Term& a, const Term& b) { return a.target < b.target; });
        for (const Term& t : acc) {
          if (!out.empty() && out.back().target == t.target)
            out.back().weight += t.weight;
          else
            out.push_back(t);
        }
        break;
      }
    }
    done[dof] = 1;
    return out;
  };
  term_ptr_.assign(ndofs + 1, 0);
  for (int dof = 0; dof < ndofs; ++dof) {
    const auto& r = resolve(dof);
    terms_.insert(terms_.end(), r.begin(), r.end());
    term_ptr_[dof + 1] = static_cast<int>(terms_.size());
  }
}

void FESpace::build_pattern() {
  const auto& m = *mesh_;
  const int ndpc = dofs_per_cell();
  std::vector<std::vector<int>> rows(n_free_);
  std::vector<int> targets;
  for (std::size_t k = 0; k < m.size(); ++k) {
    targets.clear();
    for (int l = 0; l < ndpc; ++l)
      for (const Term& t : expansion(cell_dof(static_cast<int>(k), l)))
        if (t.target >= 0) targets.push_back(t.target);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    for (int r : targets) rows[r].insert(rows[r].end(), targets.begin(), targets.end());
  }
  row_ptr_.assign(n_free_ + 1, 0);
  for (int r = 0; r < n_free_; ++r) {
    auto& row = rows[r];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    row_ptr_[r + 1] = row_ptr_[r] + static_cast<int>(row.size());
  }
  cols_.reserve(row_ptr_.back());
  for (auto& row : rows) {
    cols_.insert(cols_.end(), row.begin(), row.end());
    std::vector<int>().swap(row);
  }
}

}  // namespace levelflow::fem
