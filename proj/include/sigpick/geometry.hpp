#pragma once

// Piecewise-linear functions on the probability simplex: points, affine
// functionals and maps, triangulations with barycentric location, vertex
// interpolants, their pullbacks through affine maps, and cell arrangements
// from which concavification candidates are generated.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sigpick/common.hpp"
#include "sigpick/linalg.hpp"
#include "sigpick/lp.hpp"

namespace sigpick {

// ---------------------------------------------------------------------------
// SimplexPoint

class SimplexPoint {
 public:
  SimplexPoint() = default;

  /// Validates that `coords` is a probability vector within `eps`; tiny
  /// negative entries are clamped and the vector renormalised.
  explicit SimplexPoint(Vec coords, double eps = Tolerances{}.geom) : coords_(std::move(coords)) {
    if (coords_.empty()) throw DomainError("empty probability vector");
    double sum = 0.0;
    for (double v : coords_) {
      if (!std::isfinite(v) || v < -eps) throw DomainError("probability vector has a negative or non-finite entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > eps * static_cast<double>(coords_.size()))
      throw DomainError("probability vector does not sum to one (sum = " + std::to_string(sum) + ")");
    normalise();
  }

  /// Projects a numerically computed point back onto the simplex. Only use for
  /// quantities known to lie on the simplex up to round-off.
  static SimplexPoint clamped(Vec coords) {
    SimplexPoint p;
    p.coords_ = std::move(coords);
    p.normalise();
    return p;
  }

  static SimplexPoint corner(std::size_t n, std::size_t k) {
    Vec c(n, 0.0);
    c[k] = 1.0;
    return clamped(std::move(c));
  }

  static SimplexPoint uniform(std::size_t n) {
    return clamped(Vec(n, 1.0 / static_cast<double>(n)));
  }

  std::size_t size() const { return coords_.size(); }
  std::size_t dimension() const { return coords_.size() - 1; }
  double operator[](std::size_t i) const { return coords_[i]; }
  const Vec& coords() const { return coords_; }

  bool operator==(const SimplexPoint&) const = default;

 private:
  void normalise() {
    double sum = 0.0;
    for (double& v : coords_) {
      if (v < 0.0) v = 0.0;
      sum += v;
    }
    if (!(sum > 0.0)) throw DomainError("probability vector has zero mass");
    if (sum != 1.0)
      for (double& v : coords_) v /= sum;
  }

  Vec coords_;
};

inline bool lex_less(const SimplexPoint& a, const SimplexPoint& b) {
  return std::lexicographical_compare(a.coords().begin(), a.coords().end(), b.coords().begin(),
                                      b.coords().end());
}

inline bool near(const SimplexPoint& a, const SimplexPoint& b, double eps) {
  return a.size() == b.size() && max_abs_diff(a.coords(), b.coords()) <= eps;
}

/// Sorts lexicographically and merges points closer than `eps` (max-norm),
/// keeping the lexicographically smallest representative of each cluster.
inline std::vector<SimplexPoint> dedupe_points(std::vector<SimplexPoint> pts, double eps) {
  std::sort(pts.begin(), pts.end(), lex_less);
  std::vector<SimplexPoint> kept;
  kept.reserve(pts.size());
  for (auto& p : pts) {
    bool dup = false;
    // `kept` is sorted by first coordinate, so only a trailing window can match.
    for (std::size_t i = kept.size(); i-- > 0;) {
      if (p[0] - kept[i][0] > eps) break;
      if (near(p, kept[i], eps)) {
        dup = true;
        break;
      }
    }
    if (!dup) kept.push_back(std::move(p));
  }
  return kept;
}

// ---------------------------------------------------------------------------
// Affine functionals and maps

/// x -> weights . x + offset, with one weight per state.
struct AffineFunctional {
  Vec weights;
  double offset = 0.0;

  double operator()(const Vec& x) const { return dot(weights, x) + offset; }
  double operator()(const SimplexPoint& x) const { return (*this)(x.coords()); }

  /// Constant on the simplex iff all weights coincide.
  bool is_constant(double tol = 1e-12) const {
    const auto [lo, hi] = std::minmax_element(weights.begin(), weights.end());
    double scale = 1.0;
    for (double w : weights) scale = std::max(scale, std::abs(w + offset));
    return *hi - *lo <= tol * scale;
  }

  /// Canonical representative of the zero set on the simplex: offset folded
  /// into the weights, max-norm one, first non-zero weight positive.
  AffineFunctional canonical() const {
    AffineFunctional c{weights, 0.0};
    for (double& w : c.weights) w += offset;
    double m = 0.0;
    for (double w : c.weights) m = std::max(m, std::abs(w));
    if (m == 0.0) return c;
    double sign = 1.0;
    for (double w : c.weights)
      if (std::abs(w) > 1e-12 * m) {
        sign = w > 0 ? 1.0 : -1.0;
        break;
      }
    for (double& w : c.weights) w *= sign / m;
    return c;
  }

  AffineFunctional operator-(const AffineFunctional& o) const {
    AffineFunctional r{weights, offset - o.offset};
    for (std::size_t i = 0; i < r.weights.size(); ++i) r.weights[i] -= o.weights[i];
    return r;
  }
  AffineFunctional operator+(const AffineFunctional& o) const {
    AffineFunctional r{weights, offset + o.offset};
    for (std::size_t i = 0; i < r.weights.size(); ++i) r.weights[i] += o.weights[i];
    return r;
  }
  AffineFunctional scaled(double s) const {
    AffineFunctional r{weights, offset * s};
    for (double& w : r.weights) w *= s;
    return r;
  }
};

/// Removes constant functionals and duplicates of the same zero set.
inline std::vector<AffineFunctional> dedupe_functionals(const std::vector<AffineFunctional>& fs,
                                                        double tol = 1e-12) {
  std::vector<AffineFunctional> out;
  std::vector<Vec> seen;
  for (const auto& f : fs) {
    if (f.is_constant(tol)) continue;
    AffineFunctional c = f.canonical();
    bool dup = false;
    for (const auto& s : seen)
      if (max_abs_diff(s, c.weights) <= 1e-11) {
        dup = true;
        break;
      }
    if (dup) continue;
    seen.push_back(c.weights);
    out.push_back(f);
  }
  return out;
}

/// x -> linear * x + offset from the source simplex into the target simplex.
struct AffineMap {
  Matrix linear;  // target x source
  Vec offset;     // target

  static AffineMap identity(std::size_t n) { return {Matrix::identity(n), Vec(n, 0.0)}; }

  /// Map sending the whole source simplex to `p`.
  static AffineMap constant(const SimplexPoint& p, std::size_t source_states) {
    Matrix m(p.size(), source_states);
    for (std::size_t r = 0; r < p.size(); ++r)
      for (std::size_t c = 0; c < source_states; ++c) m(r, c) = p[r];
    return {m, Vec(p.size(), 0.0)};
  }

  std::size_t source_size() const { return linear.cols(); }
  std::size_t target_size() const { return linear.rows(); }

  Vec apply(const Vec& x) const {
    Vec y = linear * x;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += offset[i];
    return y;
  }
  SimplexPoint operator()(const SimplexPoint& x) const { return SimplexPoint::clamped(apply(x.coords())); }

  /// g o this, as a functional on the source.
  AffineFunctional pull(const AffineFunctional& g) const {
    AffineFunctional r{Vec(source_size(), 0.0), g.offset + dot(g.weights, offset)};
    for (std::size_t c = 0; c < source_size(); ++c)
      for (std::size_t t = 0; t < target_size(); ++t) r.weights[c] += g.weights[t] * linear(t, c);
    return r;
  }

  bool operator==(const AffineMap&) const = default;
};

// ---------------------------------------------------------------------------
// Triangulation

class Triangulation {
 public:
  struct Location {
    std::size_t simplex = 0;
    Vec weights;  // aligned with simplices()[simplex]
  };

  Triangulation() = default;

  Triangulation(std::vector<SimplexPoint> vertices, std::vector<std::vector<std::size_t>> simplices)
      : vertices_(std::move(vertices)), simplices_(std::move(simplices)) {
    const std::size_t n = vertices_.empty() ? 0 : vertices_[0].size();
    inverse_.resize(simplices_.size());
    for (std::size_t s = 0; s < simplices_.size(); ++s) {
      const auto& idx = simplices_[s];
      if (n == 0 || idx.size() != n) continue;
      bool ok = true;
      for (std::size_t i : idx) ok = ok && i < vertices_.size() && vertices_[i].size() == n;
      if (!ok) continue;
      Matrix v(n, n);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t r = 0; r < n; ++r) v(r, k) = vertices_[idx[k]][r];
      inverse_[s] = inverse(v, 1e-13);
    }
  }

  /// The simplex itself as a single cell.
  static Triangulation standard(std::size_t n) {
    std::vector<SimplexPoint> v;
    std::vector<std::size_t> cell;
    for (std::size_t k = 0; k < n; ++k) {
      v.push_back(SimplexPoint::corner(n, k));
      cell.push_back(k);
    }
    return Triangulation(std::move(v), {cell});
  }

  const std::vector<SimplexPoint>& vertices() const { return vertices_; }
  const std::vector<std::vector<std::size_t>>& simplices() const { return simplices_; }
  std::size_t n_states() const { return vertices_.empty() ? 0 : vertices_[0].size(); }
  std::size_t dimension() const { return n_states() - 1; }

  bool is_full(std::size_t s) const { return inverse_[s].has_value(); }

  /// Rows are the barycentric-coordinate functionals of simplex `s` (one row
  /// per vertex, in simplex order). Only available for non-degenerate
  /// full-dimensional simplices.
  const std::optional<Matrix>& barycentric_rows(std::size_t s) const { return inverse_[s]; }

  std::size_t full_count() const {
    return static_cast<std::size_t>(std::count_if(inverse_.begin(), inverse_.end(),
                                                  [](const auto& m) { return m.has_value(); }));
  }

  /// Finds the cell containing `x`, preferring the one where `x` is deepest.
  Location locate(const SimplexPoint& x) const {
    if (x.size() != n_states()) throw DomainError("point dimension does not match triangulation");
    Location best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < simplices_.size(); ++s) {
      if (!inverse_[s]) continue;
      Vec w = (*inverse_[s]) * x.coords();
      const double score = *std::min_element(w.begin(), w.end());
      if (score > best_score) {
        best_score = score;
        best = {s, std::move(w)};
        if (score >= 0.0) break;
      }
    }
    if (best_score == -std::numeric_limits<double>::infinity())
      throw DomainError("triangulation has no full-dimensional cell");
    return best;
  }

  std::optional<std::size_t> find_vertex(const SimplexPoint& x, double eps) const {
    for (std::size_t i = 0; i < vertices_.size(); ++i)
      if (near(vertices_[i], x, eps)) return i;
    return std::nullopt;
  }

 private:
  std::vector<SimplexPoint> vertices_;
  std::vector<std::vector<std::size_t>> simplices_;
  std::vector<std::optional<Matrix>> inverse_;
};

struct TriangulationReport {
  bool valid = false;
  std::string reason;
  std::optional<std::pair<std::size_t, std::size_t>> pair;

  explicit operator bool() const { return valid; }
};

namespace detail {

inline Vec projected(const SimplexPoint& p) {
  return Vec(p.coords().begin(), p.coords().end() - 1);
}

// Largest barycentric mass a common point of the two cells puts on the
// vertices of `a` outside the shared face; zero iff they meet in a common face.
inline double improper_overlap(const Triangulation& t, std::size_t sa, std::size_t sb) {
  const auto& a = t.simplices()[sa];
  const auto& b = t.simplices()[sb];
  const std::size_t n = t.n_states();
  const std::size_t na = a.size(), nb = b.size();
  Matrix m(n + 1, na + nb);
  Vec rhs(n + 1, 0.0);
  for (std::size_t r = 0; r + 1 < n; ++r) {
    for (std::size_t k = 0; k < na; ++k) m(r, k) = t.vertices()[a[k]][r];
    for (std::size_t k = 0; k < nb; ++k) m(r, na + k) = -t.vertices()[b[k]][r];
  }
  for (std::size_t k = 0; k < na; ++k) m(n - 1, k) = 1.0;
  for (std::size_t k = 0; k < nb; ++k) m(n, na + k) = 1.0;
  rhs[n - 1] = 1.0;
  rhs[n] = 1.0;
  Vec c(na + nb, 0.0);
  for (std::size_t k = 0; k < na; ++k)
    if (std::find(b.begin(), b.end(), a[k]) == b.end()) c[k] = 1.0;
  const auto res = lp::maximize(c, m, rhs);
  if (res.status != lp::Status::optimal) return 0.0;  // disjoint
  return res.value;
}

}  // namespace detail

/// Checks the three triangulation conditions: faces are simplices, pairwise
/// intersections are common faces, and the cells cover the simplex.
inline TriangulationReport validate_triangulation(const Triangulation& t, double eps = Tolerances{}.geom) {
  TriangulationReport rep;
  if (t.simplices().empty() || t.vertices().empty()) {
    rep.reason = "no cover";
    return rep;
  }
  const std::size_t n = t.n_states();
  const std::size_t d = n - 1;
  for (const auto& v : t.vertices())
    if (v.size() != n) {
      rep.reason = "vertices of mixed dimension";
      return rep;
    }

  std::vector<std::size_t> full;
  for (std::size_t s = 0; s < t.simplices().size(); ++s) {
    const auto& idx = t.simplices()[s];
    std::vector<std::size_t> sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    if (idx.empty() || idx.size() > n || std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end() ||
        sorted.back() >= t.vertices().size()) {
      rep.reason = "simplex " + std::to_string(s) + " has invalid vertex indices";
      rep.pair = {s, s};
      return rep;
    }
    std::vector<Vec> pts;
    for (std::size_t i : idx) pts.push_back(detail::projected(t.vertices()[i]));
    if (affine_dimension(pts, 1e-12) != static_cast<int>(idx.size()) - 1) {
      rep.reason = "simplex " + std::to_string(s) + " is degenerate";
      rep.pair = {s, s};
      return rep;
    }
    if (idx.size() == n) full.push_back(s);
  }
  if (full.empty()) {
    rep.reason = "no cover";
    return rep;
  }
  // Lower-dimensional entries must be faces of a listed cell.
  for (std::size_t s = 0; s < t.simplices().size(); ++s) {
    const auto& idx = t.simplices()[s];
    if (idx.size() == n) continue;
    bool face = false;
    for (std::size_t f : full) {
      const auto& cell = t.simplices()[f];
      face = face || std::all_of(idx.begin(), idx.end(), [&](std::size_t i) {
               return std::find(cell.begin(), cell.end(), i) != cell.end();
             });
    }
    if (!face) {
      rep.reason = "simplex " + std::to_string(s) + " is not a face of any cell";
      rep.pair = {s, s};
      return rep;
    }
  }

  if (d == 0) {
    rep.valid = true;
    return rep;
  }

  // Bounding boxes for a cheap disjointness filter.
  std::vector<std::pair<Vec, Vec>> box(full.size());
  for (std::size_t i = 0; i < full.size(); ++i) {
    Vec lo(n, 2.0), hi(n, -1.0);
    for (std::size_t v : t.simplices()[full[i]])
      for (std::size_t r = 0; r < n; ++r) {
        lo[r] = std::min(lo[r], t.vertices()[v][r]);
        hi[r] = std::max(hi[r], t.vertices()[v][r]);
      }
    box[i] = {lo, hi};
  }
  constexpr double kOverlapTol = 1e-9;
  for (std::size_t i = 0; i < full.size(); ++i)
    for (std::size_t j = i + 1; j < full.size(); ++j) {
      bool apart = false;
      for (std::size_t r = 0; r < n && !apart; ++r)
        apart = box[i].second[r] < box[j].first[r] - eps || box[j].second[r] < box[i].first[r] - eps;
      if (apart) continue;
      const double o1 = detail::improper_overlap(t, full[i], full[j]);
      const double o2 = o1 > kOverlapTol ? o1 : detail::improper_overlap(t, full[j], full[i]);
      if (std::max(o1, o2) > kOverlapTol) {
        rep.reason = "simplices " + std::to_string(full[i]) + " and " + std::to_string(full[j]) +
                     " do not meet in a common face";
        rep.pair = {full[i], full[j]};
        return rep;
      }
    }

  // With proper intersections, cover <=> total volume equals the simplex's.
  double volume = 0.0;
  for (std::size_t s : full) {
    const auto& idx = t.simplices()[s];
    Matrix m(d, d);
    for (std::size_t k = 1; k <= d; ++k)
      for (std::size_t r = 0; r < d; ++r) m(k - 1, r) = t.vertices()[idx[k]][r] - t.vertices()[idx[0]][r];
    volume += std::abs(determinant(m));
  }
  if (std::abs(volume - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "no cover: cells fill " << volume << " of the simplex";
    rep.reason = os.str();
    return rep;
  }
  rep.valid = true;
  return rep;
}

// ---------------------------------------------------------------------------
// Support measures and barycentric decomposition

struct Atom {
  SimplexPoint point;
  double weight = 0.0;
};

/// Finite-support distribution over beliefs.
struct SupportMeasure {
  std::vector<Atom> atoms;

  Vec mean() const {
    if (atoms.empty()) return {};
    Vec m(atoms[0].point.size(), 0.0);
    for (const auto& a : atoms)
      for (std::size_t i = 0; i < m.size(); ++i) m[i] += a.weight * a.point[i];
    return m;
  }

  double total_weight() const {
    double s = 0.0;
    for (const auto& a : atoms) s += a.weight;
    return s;
  }

  /// Atoms merged within `eps` and sorted lexicographically.
  SupportMeasure canonical(double eps) const {
    std::vector<Atom> sorted = atoms;
    std::sort(sorted.begin(), sorted.end(), [](const Atom& a, const Atom& b) { return lex_less(a.point, b.point); });
    SupportMeasure out;
    for (auto& a : sorted) {
      if (!out.atoms.empty() && near(out.atoms.back().point, a.point, eps))
        out.atoms.back().weight += a.weight;
      else
        out.atoms.push_back(std::move(a));
    }
    return out;
  }
};

/// Barycentric weights of `x` in its cell, as (vertex index, weight) pairs with
/// zero weights dropped.
inline std::vector<std::pair<std::size_t, double>> barycentric_weights(const Triangulation& t,
                                                                       const SimplexPoint& x,
                                                                       double eps = Tolerances{}.geom) {
  const auto loc = t.locate(x);
  const auto& idx = t.simplices()[loc.simplex];
  std::vector<std::pair<std::size_t, double>> out;
  double sum = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double w = loc.weights[k];
    if (w > eps) {
      out.emplace_back(idx[k], w);
      sum += w;
    }
  }
  for (auto& [i, w] : out) w /= sum;
  return out;
}

/// The barycentric measure of `x` with respect to `t`.
inline SupportMeasure barycentric(const Triangulation& t, const SimplexPoint& x, double eps = Tolerances{}.geom) {
  SupportMeasure m;
  for (const auto& [i, w] : barycentric_weights(t, x, eps)) m.atoms.push_back({t.vertices()[i], w});
  return m;
}

// ---------------------------------------------------------------------------
// Vertex interpolants and pullbacks

struct VertexInterpolant {
  std::shared_ptr<const Triangulation> triangulation;
  Vec values;

  VertexInterpolant(std::shared_ptr<const Triangulation> t, Vec v)
      : triangulation(std::move(t)), values(std::move(v)) {
    if (!triangulation || values.size() != triangulation->vertices().size())
      throw std::invalid_argument("interpolant needs one value per vertex");
  }

  double operator()(const SimplexPoint& x) const {
    const auto loc = triangulation->locate(x);
    const auto& idx = triangulation->simplices()[loc.simplex];
    double s = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) s += loc.weights[k] * values[idx[k]];
    return s;
  }

  /// The affine function agreeing with this interpolant on cell `s`.
  AffineFunctional piece(std::size_t s) const {
    const auto& rows = *triangulation->barycentric_rows(s);
    const auto& idx = triangulation->simplices()[s];
    AffineFunctional f{Vec(triangulation->n_states(), 0.0), 0.0};
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (std::size_t c = 0; c < f.weights.size(); ++c) f.weights[c] += values[idx[k]] * rows(k, c);
    return f;
  }
};

inline double interpolate(const VertexInterpolant& f, const SimplexPoint& x) { return f(x); }

/// affine(x) + f(map(x)); the interpolant part is optional.
class PiecewiseLinear {
 public:
  PiecewiseLinear() = default;
  explicit PiecewiseLinear(AffineFunctional affine) : affine_(std::move(affine)) {}
  PiecewiseLinear(AffineFunctional affine, std::shared_ptr<const VertexInterpolant> f, AffineMap map)
      : affine_(std::move(affine)), f_(std::move(f)), map_(std::move(map)) {}

  double operator()(const SimplexPoint& x) const {
    double v = affine_(x);
    if (f_) v += (*f_)(map_(x));
    return v;
  }

  const AffineFunctional& affine_part() const { return affine_; }
  const VertexInterpolant* interpolant() const { return f_.get(); }
  const std::shared_ptr<const VertexInterpolant>& interpolant_ptr() const { return f_; }
  const AffineMap& map() const { return map_; }

  /// Number of linearity pieces (preimages of cells); 1 when affine.
  std::size_t piece_count() const { return f_ ? f_->triangulation->simplices().size() : 1; }

  /// Affine restriction to the preimage of cell `s`.
  AffineFunctional piece(std::size_t s) const {
    if (!f_) return affine_;
    return affine_ + map_.pull(f_->piece(s));
  }

  /// Inequalities (>= 0) cutting out the preimage of cell `s`.
  std::vector<AffineFunctional> piece_constraints(std::size_t s) const {
    std::vector<AffineFunctional> out;
    if (!f_) return out;
    const auto& rows = *f_->triangulation->barycentric_rows(s);
    for (std::size_t k = 0; k < rows.rows(); ++k) out.push_back(map_.pull(AffineFunctional{rows.row(k), 0.0}));
    return out;
  }

  std::optional<AffineFunctional> as_affine() const {
    if (!f_) return affine_;
    if (f_->triangulation->full_count() == 1) {
      for (std::size_t s = 0; s < f_->triangulation->simplices().size(); ++s)
        if (f_->triangulation->is_full(s)) return piece(s);
    }
    return std::nullopt;
  }

  /// Pullbacks of the interior cell walls of the interpolant's triangulation.
  std::vector<AffineFunctional> boundary_functionals() const {
    std::vector<AffineFunctional> out;
    if (!f_) return out;
    const auto& t = *f_->triangulation;
    const std::size_t n = t.n_states();
    for (std::size_t s = 0; s < t.simplices().size(); ++s) {
      if (!t.is_full(s)) continue;
      const auto& idx = t.simplices()[s];
      const auto& rows = *t.barycentric_rows(s);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        // Skip walls lying on the boundary of the target simplex.
        bool on_boundary = false;
        for (std::size_t coord = 0; coord < n && !on_boundary; ++coord) {
          bool all_zero = true;
          for (std::size_t j = 0; j < idx.size(); ++j)
            if (j != k && t.vertices()[idx[j]][coord] > 1e-12) all_zero = false;
          on_boundary = all_zero;
        }
        if (!on_boundary) out.push_back(map_.pull(AffineFunctional{rows.row(k), 0.0}));
      }
    }
    return dedupe_functionals(out);
  }

 private:
  AffineFunctional affine_;
  std::shared_ptr<const VertexInterpolant> f_;
  AffineMap map_;
};

/// f o map, checked to map the source simplex into f's domain.
inline PiecewiseLinear pullback_affine(std::shared_ptr<const VertexInterpolant> f, const AffineMap& map,
                                       double eps = Tolerances{}.geom) {
  const std::size_t n_src = map.source_size();
  if (map.target_size() != f->triangulation->n_states())
    throw DomainError("affine map target dimension does not match the interpolant");
  for (std::size_t k = 0; k < n_src; ++k) {
    const Vec img = map.apply(SimplexPoint::corner(n_src, k).coords());
    double sum = 0.0;
    for (double v : img) {
      if (v < -eps) throw DomainError("affine map leaves the target simplex");
      sum += v;
    }
    if (std::abs(sum - 1.0) > eps * static_cast<double>(img.size()))
      throw DomainError("affine map leaves the target simplex");
  }
  return PiecewiseLinear(AffineFunctional{Vec(n_src, 0.0), 0.0}, std::move(f), map);
}

// ---------------------------------------------------------------------------
// Cell arrangements

/// Convex polytope in the simplex: constraints g(x) >= 0 plus its vertices.
/// `pieces[i]` records which linearity piece of the i-th refined function
/// contains it; `local` holds functionals whose zero sets only matter inside.
struct Cell {
  std::vector<AffineFunctional> constraints;
  std::vector<SimplexPoint> vertices;
  std::vector<std::size_t> pieces;
  std::vector<AffineFunctional> local;
};

/// Hyperplanes whose zero sets contain every non-linearity of an objective.
/// `functionals` apply on the whole simplex; when `cells` is non-empty the
/// simplex is partitioned and each cell may carry additional local ones.
struct CellArrangement {
  std::size_t n_states = 0;
  std::vector<AffineFunctional> functionals;
  std::vector<Cell> cells;

  std::size_t dimension() const { return n_states - 1; }
};

namespace detail {

constexpr double kFeasTol = 1e-10;

inline std::vector<AffineFunctional> simplex_facets(std::size_t n) {
  std::vector<AffineFunctional> out;
  for (std::size_t k = 0; k < n; ++k) {
    Vec w(n, 0.0);
    w[k] = 1.0;
    out.push_back({w, 0.0});
  }
  return out;
}

// Calls fn on every size-k subset of {0..n-1} (indices ascending).
inline void for_each_subset(std::size_t n, std::size_t k, const std::function<void(const std::vector<std::size_t>&)>& fn) {
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    fn(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// Point where the given hyperplanes meet on the simplex's affine hull.
inline std::optional<Vec> intersect(const std::vector<const AffineFunctional*>& hs, std::size_t n) {
  Matrix a(n, n);
  Vec b(n);
  for (std::size_t r = 0; r < hs.size(); ++r) {
    for (std::size_t c = 0; c < n; ++c) a(r, c) = hs[r]->weights[c];
    b[r] = -hs[r]->offset;
  }
  for (std::size_t c = 0; c < n; ++c) a(n - 1, c) = 1.0;
  b[n - 1] = 1.0;
  return solve(a, b, 1e-12);
}

inline bool in_simplex(const Vec& x, double tol) {
  double s = 0.0;
  for (double v : x) {
    if (v < -tol) return false;
    s += v;
  }
  return std::abs(s - 1.0) <= tol * static_cast<double>(x.size());
}

inline bool satisfies(const std::vector<AffineFunctional>& cons, const Vec& x, double tol) {
  for (const auto& g : cons) {
    double scale = 1.0;
    for (double w : g.weights) scale = std::max(scale, std::abs(w));
    if (g(x) < -tol * scale) return false;
  }
  return true;
}

// Vertices of {x in simplex : cons(x) >= 0}.
inline std::vector<SimplexPoint> polytope_vertices(const std::vector<AffineFunctional>& cons, std::size_t n) {
  std::vector<SimplexPoint> out;
  const std::size_t d = n - 1;
  if (d == 0) return {SimplexPoint::corner(1, 0)};
  for_each_subset(cons.size(), d, [&](const std::vector<std::size_t>& sub) {
    std::vector<const AffineFunctional*> hs;
    for (std::size_t i : sub) hs.push_back(&cons[i]);
    auto x = intersect(hs, n);
    if (!x || !in_simplex(*x, kFeasTol) || !satisfies(cons, *x, kFeasTol)) return;
    out.push_back(SimplexPoint::clamped(std::move(*x)));
  });
  return dedupe_points(std::move(out), 1e-12);
}

inline std::vector<Vec> projected_all(const std::vector<SimplexPoint>& pts) {
  std::vector<Vec> out;
  for (const auto& p : pts) out.push_back(projected(p));
  return out;
}

// Drops constraints that do not define a facet of the polytope.
inline std::vector<AffineFunctional> facet_constraints(const std::vector<AffineFunctional>& cons,
                                                       const std::vector<SimplexPoint>& verts, std::size_t n) {
  std::vector<AffineFunctional> out;
  const int d = static_cast<int>(n) - 1;
  for (const auto& g : dedupe_functionals(cons)) {
    std::vector<Vec> tight;
    double scale = 1.0;
    for (double w : g.weights) scale = std::max(scale, std::abs(w));
    for (const auto& v : verts)
      if (std::abs(g(v)) <= 1e-9 * scale) tight.push_back(projected(v));
    if (affine_dimension(tight, 1e-9) == d - 1) out.push_back(g);
  }
  return out;
}

}  // namespace detail

/// Cell of the whole simplex.
inline Cell whole_simplex_cell(std::size_t n) {
  Cell c;
  c.constraints = detail::simplex_facets(n);
  for (std::size_t k = 0; k < n; ++k) c.vertices.push_back(SimplexPoint::corner(n, k));
  return c;
}

/// Intersects `cell` with {cons >= 0}; nullopt unless the result is
/// full-dimensional.
inline std::optional<Cell> clip_cell(const Cell& cell, const std::vector<AffineFunctional>& cons, std::size_t n) {
  for (const auto& g : cons) {
    double scale = 1.0;
    for (double w : g.weights) scale = std::max(scale, std::abs(w));
    bool all_out = true;
    for (const auto& v : cell.vertices)
      if (g(v) > -1e-12 * scale) {
        all_out = false;
        break;
      }
    if (all_out) return std::nullopt;
  }
  std::vector<AffineFunctional> all = cell.constraints;
  all.insert(all.end(), cons.begin(), cons.end());
  auto verts = detail::polytope_vertices(all, n);
  if (affine_dimension(detail::projected_all(verts), 1e-9) != static_cast<int>(n) - 1) return std::nullopt;
  Cell out;
  out.constraints = detail::facet_constraints(all, verts, n);
  out.vertices = std::move(verts);
  out.pieces = cell.pieces;
  return out;
}

/// Common refinement of the linearity pieces of `fns`. Functions that share an
/// interpolant triangulation and map are refined only once.
inline std::vector<Cell> common_refinement(std::size_t n, const std::vector<const PiecewiseLinear*>& fns) {
  std::vector<Cell> cells{whole_simplex_cell(n)};
  // Group functions by (triangulation, map) so identical partitions are reused.
  std::vector<std::size_t> group_of(fns.size(), fns.size());
  for (std::size_t i = 0; i < fns.size(); ++i) {
    if (!fns[i]->interpolant()) continue;
    for (std::size_t j = 0; j < i; ++j)
      if (fns[j]->interpolant() && fns[j]->interpolant()->triangulation == fns[i]->interpolant()->triangulation &&
          fns[j]->map() == fns[i]->map()) {
        group_of[i] = group_of[j];
        break;
      }
    if (group_of[i] == fns.size()) group_of[i] = i;
  }
  for (std::size_t i = 0; i < fns.size(); ++i) {
    const auto* f = fns[i];
    if (!f->interpolant() || group_of[i] != i) continue;
    if (f->as_affine()) continue;
    std::vector<Cell> next;
    const auto& tri = *f->interpolant()->triangulation;
    for (const auto& cell : cells)
      for (std::size_t s = 0; s < tri.simplices().size(); ++s) {
        if (!tri.is_full(s)) continue;
        auto clipped = clip_cell(cell, f->piece_constraints(s), n);
        if (!clipped) continue;
        clipped->pieces.resize(fns.size(), 0);
        clipped->pieces[i] = s;
        next.push_back(std::move(*clipped));
      }
    cells = std::move(next);
  }
  for (auto& c : cells) {
    c.pieces.resize(fns.size(), 0);
    for (std::size_t i = 0; i < fns.size(); ++i) {
      if (!fns[i]->interpolant()) continue;
      if (fns[i]->as_affine()) {
        const auto& tri = *fns[i]->interpolant()->triangulation;
        for (std::size_t s = 0; s < tri.simplices().size(); ++s)
          if (tri.is_full(s)) c.pieces[i] = s;
      } else {
        c.pieces[i] = c.pieces[group_of[i]];
      }
    }
  }
  return cells;
}

/// Every point where `d` of the arrangement's hyperplanes (together with the
/// simplex facets and cell walls) meet inside the simplex, deduplicated.
inline std::vector<SimplexPoint> candidate_vertices(const CellArrangement& arr, double eps = Tolerances{}.geom) {
  const std::size_t n = arr.n_states;
  if (n == 0) throw DomainError("arrangement has no states");
  const std::size_t d = n - 1;
  std::vector<SimplexPoint> pts;
  for (std::size_t k = 0; k < n; ++k) pts.push_back(SimplexPoint::corner(n, k));
  if (d == 0) return pts;

  std::vector<Cell> cells = arr.cells;
  if (cells.empty()) cells.push_back(whole_simplex_cell(n));

  for (const auto& cell : cells) {
    pts.insert(pts.end(), cell.vertices.begin(), cell.vertices.end());
    std::vector<AffineFunctional> extra = cell.local;
    extra.insert(extra.end(), arr.functionals.begin(), arr.functionals.end());
    extra = dedupe_functionals(extra);
    if (extra.empty()) continue;

    if (d == 1) {
      // Closed form on the segment: x = (p, 1-p), root of w0 p + w1 (1-p) + c.
      for (const auto& g : extra) {
        const double slope = g.weights[0] - g.weights[1];
        if (slope == 0.0) continue;
        const double p = -(g.weights[1] + g.offset) / slope;
        const Vec x{p, 1.0 - p};
        if (detail::in_simplex(x, detail::kFeasTol) && detail::satisfies(cell.constraints, x, detail::kFeasTol))
          pts.push_back(SimplexPoint::clamped(x));
      }
      continue;
    }

    // Subsets using at least one extra hyperplane; the rest are cell vertices.
    std::vector<AffineFunctional> hs = extra;
    hs.insert(hs.end(), cell.constraints.begin(), cell.constraints.end());
    detail::for_each_subset(hs.size(), d, [&](const std::vector<std::size_t>& sub) {
      if (sub[0] >= extra.size()) return;
      std::vector<const AffineFunctional*> sel;
      for (std::size_t i : sub) sel.push_back(&hs[i]);
      auto x = detail::intersect(sel, n);
      if (!x || !detail::in_simplex(*x, detail::kFeasTol) || !detail::satisfies(cell.constraints, *x, detail::kFeasTol))
        return;
      pts.push_back(SimplexPoint::clamped(std::move(*x)));
    });
  }
  return dedupe_points(std::move(pts), eps);
}

}  // namespace sigpick
