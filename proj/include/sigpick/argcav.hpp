#pragma once

// Concave closure of a piecewise-linear function on the simplex, returned as a
// triangulation plus vertex values: lift candidate vertices to the graph, take
// the upper convex hull, and triangulate its faces by pulling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "sigpick/common.hpp"
#include "sigpick/geometry.hpp"
#include "sigpick/linalg.hpp"

namespace sigpick {

// ---------------------------------------------------------------------------
// Tie-broken argmax objectives

/// `tied` is the tie-tolerant argmax of the selection scores, `chosen` the
/// member of `tied` with the highest value (smallest index on ties).
struct Selection {
  std::vector<std::size_t> tied;
  double best_score = 0.0;
  double value = 0.0;
  std::size_t chosen = 0;
};

inline Selection select_best(const Vec& score, const Vec& value, double tie) {
  Selection s;
  s.best_score = *std::max_element(score.begin(), score.end());
  for (std::size_t j = 0; j < score.size(); ++j)
    if (score[j] >= s.best_score - tie) s.tied.push_back(j);
  // Exact comparison so that the chosen action attains the reported value.
  s.chosen = s.tied.front();
  for (std::size_t j : s.tied)
    if (value[j] > value[s.chosen]) s.chosen = j;
  s.value = value[s.chosen];
  return s;
}

/// Psi(x) = max { value_j(x) : select_j(x) >= max_k select_k(x) - tie }.
struct ArgmaxObjective {
  std::vector<PiecewiseLinear> select;
  std::vector<PiecewiseLinear> value;
  double tie = Tolerances{}.tie;

  std::size_t n_states() const { return select.front().affine_part().weights.size(); }

  Selection evaluate(const SimplexPoint& x) const {
    Vec s(select.size()), v(value.size());
    for (std::size_t j = 0; j < select.size(); ++j) {
      s[j] = select[j](x);
      v[j] = value[j](x);
    }
    return select_best(s, v, tie);
  }

  double operator()(const SimplexPoint& x) const { return evaluate(x).value; }

  /// Cells on which every select/value function is affine, each carrying the
  /// pairwise selection differences as local hyperplanes. `extra` are added
  /// globally.
  CellArrangement arrangement(std::vector<AffineFunctional> extra = {}) const {
    CellArrangement arr;
    arr.n_states = n_states();
    arr.functionals = dedupe_functionals(extra);
    std::vector<const PiecewiseLinear*> fns;
    for (const auto& f : select) fns.push_back(&f);
    for (const auto& f : value) fns.push_back(&f);
    arr.cells = common_refinement(arr.n_states, fns);
    for (auto& cell : arr.cells) {
      std::vector<AffineFunctional> pieces;
      for (std::size_t j = 0; j < select.size(); ++j) pieces.push_back(select[j].piece(cell.pieces[j]));
      for (std::size_t a = 0; a < pieces.size(); ++a)
        for (std::size_t b = a + 1; b < pieces.size(); ++b) cell.local.push_back(pieces[a] - pieces[b]);
      cell.local = dedupe_functionals(cell.local);
    }
    return arr;
  }
};

// ---------------------------------------------------------------------------
// Upper hull

struct ConcaveEnvelope {
  std::shared_ptr<const Triangulation> triangulation;
  VertexInterpolant values;
  std::size_t candidate_count = 0;

  double operator()(const SimplexPoint& x) const { return values(x); }
};

namespace detail {

struct HullFacet {
  std::vector<std::size_t> v;  // sorted
  Vec normal;
  double offset = 0.0;
  bool alive = true;
};

// Beneath-beyond convex hull in R^D. Points within `tol` of a facet plane
// count as beneath it.
class IncrementalHull {
 public:
  IncrementalHull(const std::vector<Vec>& pts, const std::vector<std::size_t>& initial, double tol)
      : pts_(pts), tol_(tol) {
    const std::size_t dim = pts_[0].size();
    interior_.assign(dim, 0.0);
    for (std::size_t i : initial)
      for (std::size_t k = 0; k < dim; ++k) interior_[k] += pts_[i][k] / static_cast<double>(initial.size());
    for (std::size_t skip = 0; skip < initial.size(); ++skip) {
      std::vector<std::size_t> f;
      for (std::size_t k = 0; k < initial.size(); ++k)
        if (k != skip) f.push_back(initial[k]);
      add_facet(std::move(f));
    }
  }

  void insert(std::size_t p) {
    std::vector<std::size_t> visible;
    for (std::size_t f = 0; f < facets_.size(); ++f)
      if (facets_[f].alive && distance(facets_[f], pts_[p]) > tol_) visible.push_back(f);
    if (visible.empty()) return;
    std::map<std::vector<std::size_t>, int> ridges;
    for (std::size_t f : visible) {
      const auto& v = facets_[f].v;
      for (std::size_t skip = 0; skip < v.size(); ++skip) {
        std::vector<std::size_t> r;
        for (std::size_t k = 0; k < v.size(); ++k)
          if (k != skip) r.push_back(v[k]);
        ++ridges[r];
      }
      facets_[f].alive = false;
    }
    for (const auto& [r, count] : ridges) {
      if (count != 1) continue;
      std::vector<std::size_t> f = r;
      f.push_back(p);
      add_facet(std::move(f));
    }
  }

  const std::vector<HullFacet>& facets() const { return facets_; }

 private:
  double distance(const HullFacet& f, const Vec& x) const { return dot(f.normal, x) - f.offset; }

  void add_facet(std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    std::vector<Vec> pts;
    for (std::size_t i : v) pts.push_back(pts_[i]);
    auto n = hyperplane_normal(pts, 0.0);
    if (!n) throw std::logic_error("convex hull produced a degenerate facet");
    HullFacet f{std::move(v), std::move(*n), 0.0, true};
    f.offset = dot(f.normal, pts[0]);
    if (distance(f, interior_) > 0.0) {
      for (double& c : f.normal) c = -c;
      f.offset = -f.offset;
    }
    facets_.push_back(std::move(f));
  }

  const std::vector<Vec>& pts_;
  double tol_;
  Vec interior_;
  std::vector<HullFacet> facets_;
};

inline std::vector<std::vector<std::size_t>> ridges_of(const std::vector<std::size_t>& v) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t skip = 0; skip < v.size(); ++skip) {
    std::vector<std::size_t> r;
    for (std::size_t k = 0; k < v.size(); ++k)
      if (k != skip) r.push_back(v[k]);
    out.push_back(std::move(r));
  }
  return out;
}

inline double simplex_volume(const std::vector<Vec>& x, const std::vector<std::size_t>& s) {
  const std::size_t d = x[0].size();
  Matrix m(d, d);
  for (std::size_t k = 1; k <= d; ++k)
    for (std::size_t r = 0; r < d; ++r) m(k - 1, r) = x[s[k]][r] - x[s[0]][r];
  return std::abs(determinant(m));
}

inline int affdim_of(const std::vector<Vec>& x, const std::vector<std::size_t>& idx) {
  std::vector<Vec> pts;
  for (std::size_t i : idx) pts.push_back(x[i]);
  return affine_dimension(pts, 1e-9);
}

// Pulling triangulation of the polytope with vertex set `vs` (sorted, in the
// global order) of dimension `k`, whose faces are cut out by `walls`.
inline void pull(const std::vector<Vec>& x, const std::vector<std::size_t>& vs, int k,
                 const std::vector<std::vector<std::size_t>>& walls, std::vector<std::vector<std::size_t>>& out) {
  if (k == 0) {
    out.push_back({vs.front()});
    return;
  }
  const std::size_t apex = vs.front();
  std::vector<std::vector<std::size_t>> facets;
  for (const auto& w : walls) {
    std::vector<std::size_t> g;
    std::set_intersection(vs.begin(), vs.end(), w.begin(), w.end(), std::back_inserter(g));
    if (g.empty() || std::binary_search(g.begin(), g.end(), apex)) continue;
    if (affdim_of(x, g) != k - 1) continue;
    if (std::find(facets.begin(), facets.end(), g) != facets.end()) continue;
    facets.push_back(std::move(g));
  }
  for (const auto& g : facets) {
    std::vector<std::vector<std::size_t>> sub;
    pull(x, g, k - 1, walls, sub);
    for (auto& s : sub) {
      s.insert(s.begin(), apex);
      out.push_back(std::move(s));
    }
  }
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) { return parent[i] == i ? i : parent[i] = find(parent[i]); }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Triangulates one merged upper face by pulling; falls back to the hull's own
// facets if the face is not numerically convex.
inline std::vector<std::vector<std::size_t>> triangulate_face(const std::vector<Vec>& x,
                                                              const std::vector<std::vector<std::size_t>>& facets) {
  if (facets.size() == 1) return facets;
  const std::size_t d = x[0].size();
  std::map<std::vector<std::size_t>, int> count;
  for (const auto& f : facets)
    for (auto& r : ridges_of(f)) ++count[r];

  struct Wall {
    Vec normal;
    double offset;
    std::vector<std::size_t> v;
  };
  std::vector<Wall> walls;
  for (const auto& [r, c] : count) {
    if (c != 1) continue;
    std::vector<Vec> pts;
    for (std::size_t i : r) pts.push_back(x[i]);
    std::optional<Vec> n;
    if (d == 1) {
      n = Vec{1.0};
    } else {
      n = hyperplane_normal(pts, 0.0);
    }
    if (!n) continue;
    double off = dot(*n, pts[0]);
    std::size_t lead = 0;
    for (std::size_t k = 0; k < d; ++k)
      if (std::abs((*n)[k]) > std::abs((*n)[lead]) + 1e-12) lead = k;
    if ((*n)[lead] < 0) {
      for (double& c2 : *n) c2 = -c2;
      off = -off;
    }
    bool merged = false;
    for (auto& w : walls)
      if (max_abs_diff(w.normal, *n) <= 1e-9 && std::abs(w.offset - off) <= 1e-9) {
        std::vector<std::size_t> u;
        std::set_union(w.v.begin(), w.v.end(), r.begin(), r.end(), std::back_inserter(u));
        w.v = std::move(u);
        merged = true;
        break;
      }
    if (!merged) walls.push_back({*n, off, r});
  }

  std::vector<std::size_t> all;
  for (const auto& f : facets) all.insert(all.end(), f.begin(), f.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<std::size_t> verts;
  for (std::size_t c : all) {
    std::vector<Vec> normals;
    for (const auto& w : walls)
      if (std::binary_search(w.v.begin(), w.v.end(), c)) normals.push_back(w.normal);
    if (normals.size() < d) continue;
    Matrix m(normals.size(), d);
    for (std::size_t i = 0; i < normals.size(); ++i)
      for (std::size_t k = 0; k < d; ++k) m(i, k) = normals[i][k];
    if (rank(m, 1e-9) == d) verts.push_back(c);
  }
  std::vector<std::vector<std::size_t>> wall_sets;
  for (auto& w : walls) {
    std::vector<std::size_t> g;
    std::set_intersection(w.v.begin(), w.v.end(), verts.begin(), verts.end(), std::back_inserter(g));
    wall_sets.push_back(std::move(g));
  }

  std::vector<std::vector<std::size_t>> out;
  if (verts.size() >= d + 1) pull(x, verts, static_cast<int>(d), wall_sets, out);

  double want = 0.0, got = 0.0;
  for (const auto& f : facets) want += simplex_volume(x, f);
  for (const auto& s : out) got += simplex_volume(x, s);
  if (out.empty() || std::abs(want - got) > 1e-9 * std::max(1.0, want)) return facets;
  return out;
}

}  // namespace detail

/// Upper concave envelope of the points (x_i, h_i) over the simplex. The
/// corners of the simplex must be among the points. Returned vertices are in
/// lexicographic order.
inline ConcaveEnvelope upper_envelope(std::vector<SimplexPoint> points, Vec heights,
                                      const Tolerances& tol = {}) {
  if (points.empty() || points.size() != heights.size()) throw std::invalid_argument("upper_envelope: bad input");
  const std::size_t n = points[0].size();
  const std::size_t d = n - 1;

  // Sort lexicographically, merging near-duplicates (keep the higher value).
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lex_less(points[a], points[b]); });
  std::vector<SimplexPoint> pts;
  Vec h;
  for (std::size_t i : order) {
    bool dup = false;
    for (std::size_t k = pts.size(); k-- > 0;) {
      if (points[i][0] - pts[k][0] > tol.geom) break;
      if (near(pts[k], points[i], tol.geom)) {
        h[k] = std::max(h[k], heights[i]);
        dup = true;
        break;
      }
    }
    if (!dup) {
      pts.push_back(points[i]);
      h.push_back(heights[i]);
    }
  }

  const auto [lo, hi] = std::minmax_element(h.begin(), h.end());
  const double range = *hi - *lo;
  const double scale = std::max(1.0, std::max(std::abs(*hi), std::abs(*lo)));
  const double flat = 1e-11 * scale;

  std::vector<std::size_t> corners(n, pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t k = 0; k < n; ++k)
      if (pts[i][k] == 1.0) corners[k] = i;
  for (std::size_t k = 0; k < n; ++k)
    if (corners[k] == pts.size()) throw std::logic_error("upper_envelope: simplex corner missing from candidates");

  std::vector<std::vector<std::size_t>> simplices;

  if (d == 0) {
    simplices.push_back({0});
  } else if (d == 1) {
    // Monotone chain over the first coordinate.
    std::vector<std::size_t> chain;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      while (chain.size() >= 2) {
        const std::size_t a = chain[chain.size() - 2], b = chain.back();
        const double xa = pts[a][0], xb = pts[b][0], xc = pts[i][0];
        const double chord = h[a] + (h[i] - h[a]) * (xb - xa) / (xc - xa);
        if (h[b] <= chord + flat)
          chain.pop_back();
        else
          break;
      }
      chain.push_back(i);
    }
    for (std::size_t k = 0; k + 1 < chain.size(); ++k) simplices.push_back({chain[k], chain[k + 1]});
  } else {
    // Lifted points in R^{d+1}: first d coordinates plus height, and a
    // virtual point far below the centroid to seed a full-dimensional hull.
    std::vector<Vec> lifted;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      Vec v(pts[i].coords().begin(), pts[i].coords().end() - 1);
      v.push_back(h[i]);
      lifted.push_back(std::move(v));
    }
    const std::size_t virt = lifted.size();
    Vec bottom(d, 1.0 / static_cast<double>(n));
    bottom.push_back(*lo - (2.0 + 2.0 * range));
    lifted.push_back(bottom);

    std::vector<std::size_t> init = corners;
    init.push_back(virt);
    detail::IncrementalHull hull(lifted, init, flat);
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (std::find(corners.begin(), corners.end(), i) == corners.end()) hull.insert(i);

    std::vector<const detail::HullFacet*> upper;
    for (const auto& f : hull.facets())
      if (f.alive && f.normal[d] > 1e-9 && !std::binary_search(f.v.begin(), f.v.end(), virt)) upper.push_back(&f);

    std::vector<Vec> proj;
    for (const auto& p : pts) proj.emplace_back(p.coords().begin(), p.coords().end() - 1);

    // Merge adjacent coplanar upper facets into faces.
    detail::UnionFind uf(upper.size());
    std::map<std::vector<std::size_t>, std::vector<std::size_t>> by_ridge;
    for (std::size_t f = 0; f < upper.size(); ++f)
      for (auto& r : detail::ridges_of(upper[f]->v)) by_ridge[r].push_back(f);
    const double merge = 1e-10 * scale;
    auto height_on = [&](const detail::HullFacet& f, std::size_t i) {
      double s = f.offset;
      for (std::size_t k = 0; k < d; ++k) s -= f.normal[k] * proj[i][k];
      return s / f.normal[d];
    };
    for (const auto& [r, fs] : by_ridge) {
      if (fs.size() != 2) continue;
      const auto& a = *upper[fs[0]];
      const auto& b = *upper[fs[1]];
      bool coplanar = true;
      for (std::size_t i : b.v)
        if (!std::binary_search(a.v.begin(), a.v.end(), i)) coplanar = coplanar && std::abs(height_on(a, i) - h[i]) <= merge;
      for (std::size_t i : a.v)
        if (!std::binary_search(b.v.begin(), b.v.end(), i)) coplanar = coplanar && std::abs(height_on(b, i) - h[i]) <= merge;
      if (coplanar) uf.unite(fs[0], fs[1]);
    }
    std::map<std::size_t, std::vector<std::vector<std::size_t>>> faces;
    for (std::size_t f = 0; f < upper.size(); ++f) faces[uf.find(f)].push_back(upper[f]->v);
    for (const auto& [root, fs] : faces)
      for (auto& s : detail::triangulate_face(proj, fs)) simplices.push_back(std::move(s));

    double volume = 0.0;
    for (const auto& s : simplices) volume += detail::simplex_volume(proj, s);
    if (std::abs(volume - 1.0) > 1e-8)
      throw std::logic_error("upper_envelope: hull faces do not cover the simplex (volume " + std::to_string(volume) + ")");
  }

  // Keep only used points, preserving lexicographic order.
  std::vector<std::size_t> remap(pts.size(), pts.size());
  for (const auto& s : simplices)
    for (std::size_t i : s) remap[i] = 0;
  std::vector<SimplexPoint> verts;
  Vec vals;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (remap[i] == 0) {
      remap[i] = verts.size();
      verts.push_back(pts[i]);
      vals.push_back(h[i]);
    }
  for (auto& s : simplices) {
    for (std::size_t& i : s) i = remap[i];
    std::sort(s.begin(), s.end());
  }
  std::sort(simplices.begin(), simplices.end());
  auto tri = std::make_shared<const Triangulation>(std::move(verts), std::move(simplices));
  return ConcaveEnvelope{tri, VertexInterpolant(tri, std::move(vals)), points.size()};
}

/// A triangulation in arg cav(psi) together with the envelope values at its
/// vertices. `arr` must contain every non-linearity of psi.
inline ConcaveEnvelope argcav(const std::function<double(const SimplexPoint&)>& psi, const CellArrangement& arr,
                              const Tolerances& tol = {}) {
  std::vector<SimplexPoint> cand = candidate_vertices(arr, tol.geom);
  std::vector<Vec> proj;
  for (const auto& c : cand) proj.emplace_back(c.coords().begin(), c.coords().end() - 1);
  if (affine_dimension(proj, 1e-12) < static_cast<int>(arr.dimension()))
    throw std::logic_error("argcav: candidate vertices are not full-dimensional");
  Vec h(cand.size());
  for (std::size_t i = 0; i < cand.size(); ++i) h[i] = psi(cand[i]);
  auto env = upper_envelope(std::move(cand), std::move(h), tol);
  return env;
}

}  // namespace sigpick
