#include "levelflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

#include "levelflow/error.hpp"

namespace levelflow {

namespace {

int root_count(double length, double h0) {
  const double n = std::round(length / h0);
  if (n < 1.0 || std::abs(n * h0 - length) > 1e-12 * length)
    throw MeshError("cell size " + std::to_string(h0) + " does not divide side length " +
                    std::to_string(length));
  return static_cast<int>(n);
}

std::uint64_t spread_bits(std::uint64_t v) {
  std::uint64_t out = 0;
  for (int b = 0; b < 32; ++b) out |= ((v >> b) & 1ULL) << (2 * b);
  return out;
}

/// Sort key realizing the canonical leaf order.
std::pair<std::uint64_t, std::uint64_t> order_key(CellKey k, int nx) {
  const int l = key_level(k);
  const std::int64_t i = key_i(k);
  const std::int64_t j = key_j(k);
  const auto root = static_cast<std::uint64_t>((j >> l) * nx + (i >> l));
  const std::int64_t mask = (std::int64_t{1} << l) - 1;
  const int shift = QuadMesh::kMaxLevel - l;
  const std::uint64_t li = static_cast<std::uint64_t>(i & mask) << shift;
  const std::uint64_t lj = static_cast<std::uint64_t>(j & mask) << shift;
  return {root, spread_bits(li) | (spread_bits(lj) << 1)};
}

struct LeafSet {
  std::unordered_set<CellKey> leaves;
  std::int64_t nx, ny;

  bool inside(int level, std::int64_t i, std::int64_t j) const {
    return i >= 0 && j >= 0 && i < (nx << level) && j < (ny << level);
  }
  /// Leaf equal to or containing `key`; nullopt if `key` is subdivided.
  std::optional<CellKey> cover(CellKey key) const {
    for (CellKey k = key;; k = parent_key(k)) {
      if (leaves.count(k)) return k;
      if (key_level(k) == 0) return std::nullopt;
    }
  }
  void refine(CellKey k) {
    leaves.erase(k);
    for (int c = 0; c < 4; ++c) leaves.insert(child_key(k, c));
  }
};

constexpr int kDi[4] = {-1, 1, 0, 0};
constexpr int kDj[4] = {0, 0, -1, 1};

}  // namespace

QuadMesh QuadMesh::build_uniform(const Extents& domain, double h0) {
  if (!(h0 > 0)) throw MeshError("cell size must be positive");
  const int nx = root_count(domain.width(), h0);
  const int ny = root_count(domain.height(), h0);
  if (static_cast<std::int64_t>(nx) << kLatticeBits >= (std::int64_t{1} << 31) ||
      static_cast<std::int64_t>(ny) << kLatticeBits >= (std::int64_t{1} << 31))
    throw MeshError("root grid too large");
  std::vector<CellKey> keys;
  keys.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) keys.push_back(make_cell_key(0, i, j));
  return QuadMesh(domain, nx, ny, std::move(keys));
}

QuadMesh::QuadMesh(const Extents& domain, int roots_x, int roots_y, std::vector<CellKey> leaves)
    : domain_(domain), nx_(roots_x), ny_(roots_y) {
  std::sort(leaves.begin(), leaves.end(),
            [this](CellKey a, CellKey b) { return order_key(a, nx_) < order_key(b, nx_); });
  cells_.reserve(leaves.size());
  index_.reserve(leaves.size());
  for (CellKey k : leaves) {
    if (key_level(k) > kMaxLevel) throw MeshError("cell level exceeds lattice depth");
    index_.emplace(k, static_cast<int>(cells_.size()));
    cells_.push_back(make_cell(k));
  }
}

Cell QuadMesh::make_cell(CellKey key) const {
  Cell c;
  c.key = key;
  c.level = key_level(key);
  c.i = key_i(key);
  c.j = key_j(key);
  const std::int64_t span = lattice_span(c.level);
  const Vec2 lo = lattice_point(c.i * span, c.j * span);
  const Vec2 hi = lattice_point((c.i + 1) * span, (c.j + 1) * span);
  c.box = {lo.x, hi.x, lo.y, hi.y};
  return c;
}

Vec2 QuadMesh::lattice_point(std::int64_t I, std::int64_t J) const {
  const double sx = root_hx() / static_cast<double>(std::int64_t{1} << kLatticeBits);
  const double sy = root_hy() / static_cast<double>(std::int64_t{1} << kLatticeBits);
  const double x = I == lattice_nx() ? domain_.x1 : domain_.x0 + static_cast<double>(I) * sx;
  const double y = J == lattice_ny() ? domain_.y1 : domain_.y0 + static_cast<double>(J) * sy;
  return {x, y};
}

std::optional<int> QuadMesh::find(CellKey key) const {
  const auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> QuadMesh::covering_leaf(CellKey key) const {
  for (CellKey k = key;; k = parent_key(k)) {
    if (auto f = find(k)) return f;
    if (key_level(k) == 0) return std::nullopt;
  }
}

int QuadMesh::locate(const Vec2& p) const {
  const double tol = 1e-12 * std::max(domain_.width(), domain_.height());
  if (!domain_.contains(p, tol)) throw MeshError("point outside the domain");
  const double scale = static_cast<double>(std::int64_t{1} << kLatticeBits);
  auto lattice = [&](double v, double v0, double h, std::int64_t n) {
    auto L = static_cast<std::int64_t>(std::floor((v - v0) / h * scale));
    return std::clamp<std::int64_t>(L, 0, n - 1);
  };
  const std::int64_t I = lattice(p.x, domain_.x0, root_hx(), lattice_nx());
  const std::int64_t J = lattice(p.y, domain_.y0, root_hy(), lattice_ny());
  for (int l = 0; l <= kMaxLevel; ++l) {
    const int shift = kLatticeBits - l;
    if (auto f = find(make_cell_key(l, I >> shift, J >> shift))) return *f;
  }
  throw MeshError("no leaf contains the point");
}

int QuadMesh::max_level() const {
  int m = 0;
  for (const auto& c : cells_) m = std::max(m, c.level);
  return m;
}

double QuadMesh::min_diameter() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& c : cells_) m = std::min(m, c.diameter());
  return m;
}

double QuadMesh::min_side() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& c : cells_) m = std::min({m, c.hx(), c.hy()});
  return m;
}

bool is_balanced(const QuadMesh& mesh) {
  for (const auto& c : mesh.cells()) {
    for (int s = 0; s < 4; ++s) {
      const std::int64_t ni = c.i + kDi[s];
      const std::int64_t nj = c.j + kDj[s];
      if (ni < 0 || nj < 0 || ni >= (std::int64_t{mesh.roots_x()} << c.level) ||
          nj >= (std::int64_t{mesh.roots_y()} << c.level))
        continue;
      const auto cover = mesh.covering_leaf(make_cell_key(c.level, ni, nj));
      if (cover && mesh.cell(*cover).level < c.level - 1) return false;
    }
  }
  return true;
}

std::pair<QuadMesh, AdaptReport> adapt(const QuadMesh& mesh, std::span<const double> phi_at_barycenter,
                                       double beta, double c_r, double c_c, int r_max) {
  if (phi_at_barycenter.size() != mesh.size())
    throw MeshError("level-set sample count does not match the mesh");
  const double refine_threshold = beta * std::tanh(c_r);
  const double coarsen_threshold = beta * std::tanh(c_c);
  AdaptReport report;
  LeafSet set{{}, mesh.roots_x(), mesh.roots_y()};
  set.leaves.reserve(mesh.size() * 2);
  for (const auto& c : mesh.cells()) set.leaves.insert(c.key);

  // Refinement sweep.
  std::vector<CellKey> to_refine;
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    const Cell& c = mesh.cell(k);
    if (c.level < r_max && std::abs(phi_at_barycenter[k]) <= refine_threshold) to_refine.push_back(c.key);
  }
  for (CellKey k : to_refine) set.refine(k);
  report.n_refined = static_cast<int>(to_refine.size());

  // Balance loop: refine any leaf more than one level coarser than a face neighbor.
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<CellKey> coarse;
    for (CellKey k : set.leaves) {
      const int l = key_level(k);
      if (l < 2) continue;
      for (int s = 0; s < 4; ++s) {
        const std::int64_t ni = key_i(k) + kDi[s];
        const std::int64_t nj = key_j(k) + kDj[s];
        if (!set.inside(l, ni, nj)) continue;
        const auto cover = set.cover(make_cell_key(l, ni, nj));
        if (cover && key_level(*cover) < l - 1) coarse.push_back(*cover);
      }
    }
    std::sort(coarse.begin(), coarse.end());
    coarse.erase(std::unique(coarse.begin(), coarse.end()), coarse.end());
    for (CellKey k : coarse) {
      if (!set.leaves.count(k)) continue;
      set.refine(k);
      ++report.n_balance_refinements;
      changed = true;
    }
  }

  // Coarsening sweep over sibling groups that are untouched leaves of the input mesh.
  std::vector<CellKey> parents;
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    const Cell& c = mesh.cell(k);
    if (c.level == 0 || (c.i & 1) || (c.j & 1)) continue;
    const CellKey parent = parent_key(c.key);
    bool ok = true;
    for (int ch = 0; ch < 4 && ok; ++ch) {
      const CellKey sib = child_key(parent, ch);
      const auto idx = mesh.find(sib);
      ok = idx && set.leaves.count(sib) && std::abs(phi_at_barycenter[*idx]) >= coarsen_threshold;
    }
    if (!ok) continue;
    // The merged parent at level l-1 may only touch leaves of level <= l.
    const int l = c.level;
    const std::int64_t bi = key_i(parent) * 2;
    const std::int64_t bj = key_j(parent) * 2;
    const std::int64_t probes[8][2] = {{bi - 1, bj}, {bi - 1, bj + 1}, {bi + 2, bj}, {bi + 2, bj + 1},
                                       {bi, bj - 1}, {bi + 1, bj - 1}, {bi, bj + 2}, {bi + 1, bj + 2}};
    for (const auto& pr : probes) {
      if (!set.inside(l, pr[0], pr[1])) continue;
      if (!set.cover(make_cell_key(l, pr[0], pr[1]))) {
        ok = false;
        break;
      }
    }
    if (ok) parents.push_back(parent);
  }
  for (CellKey p : parents) {
    for (int ch = 0; ch < 4; ++ch) set.leaves.erase(child_key(p, ch));
    set.leaves.insert(p);
  }
  report.n_coarsened = static_cast<int>(parents.size());

  std::vector<CellKey> keys(set.leaves.begin(), set.leaves.end());
  return {QuadMesh(mesh.domain(), mesh.roots_x(), mesh.roots_y(), std::move(keys)), report};
}

}  // namespace levelflow
