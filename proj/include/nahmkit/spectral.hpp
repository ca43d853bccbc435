#pragma once

// Spectral sets of the deformed fields theta_xi = theta - (xi/2) dz: the
// zeros of det(theta_xi) on the finite plane, their tracking along paths
// in the xi-plane, and fits of their asymptotics at the punctures of the
// transform and at infinity.
//
// With the residues factored as C_j = U_j V_j^H, det theta_xi(z) = 0 exactly
// when z is an eigenvalue of the r_hat x r_hat matrix
//     T(xi) = P - 2 V^H (A - xi)^{-1} U,        P = diag(p_j repeated),
// and det(zI - T(xi)) = Q(z) / det((A - xi)/2) for the deflated determinant
// Q of char_poly_at.  The eigenvalue route is the working one; the
// determinant polynomial is kept as an independent route.

#include "nahmkit/fields.hpp"
#include "nahmkit/moduli.hpp"
#include "nahmkit/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace nahmkit {

struct SpectralOptions {
  /// Relative singular-value cutoff for residue ranks and cokernels.
  double rank_tol = 1e-8;
  /// Two points closer than cluster_tol * (1 + max modulus) are one
  /// multiple point.
  double cluster_tol = 1e-6;
  /// Backward error below which a puncture counts as a root of the
  /// deflated determinant (a non-generic xi).
  double deflation_tol = 1e-10;
  /// Relative distance from the transform's punctures below which xi is
  /// rejected.
  double avoid_tol = 1e-12;
  bool cokernels = true;
};

struct SpectralSample {
  Complex xi{};
  std::vector<Complex> points;
  /// dim coker theta_xi(q), aligned with points.  Within a multiple point
  /// the dimension is reported on its first member and 0 on the others.
  std::vector<std::size_t> coker_dims;
  /// Size of the cluster each point belongs to.
  std::vector<std::size_t> multiplicity;
  /// False when a spectral point sits on a puncture p_j.
  bool generic = true;
  bool collision = false;
};

/// A field prepared for repeated spectral evaluation.
class SpectralCurve {
 public:
  explicit SpectralCurve(ExplicitHiggsField f, SpectralOptions opt = {}) : field_(std::move(f)), opt_(opt) {
    validate_field(field_);
    const auto r = static_cast<Eigen::Index>(field_.rank());
    a_ = field_.leading_diagonal();
    for (std::size_t j = 0; j < field_.residues.size(); ++j) {
      const CMatrix& c = field_.residues[j];
      Eigen::JacobiSVD<CMatrix> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      std::size_t rank = 0;
      if (sv(0) > 0.0)
        for (Eigen::Index k = 0; k < sv.size(); ++k)
          if (sv(k) > opt_.rank_tol * sv(0)) ++rank;
      regular_.push_back(static_cast<std::size_t>(r) - rank);
      for (std::size_t k = 0; k < rank; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        u_cols_.push_back(svd.matrixU().col(kk) * sv(kk));
        v_cols_.push_back(svd.matrixV().col(kk));
        diag_p_.push_back(field_.punctures[j]);
        owner_.push_back(j);
      }
    }
    r_hat_ = diag_p_.size();
    u_ = CMatrix(r, static_cast<Eigen::Index>(r_hat_));
    v_ = CMatrix(r, static_cast<Eigen::Index>(r_hat_));
    for (std::size_t k = 0; k < r_hat_; ++k) {
      u_.col(static_cast<Eigen::Index>(k)) = u_cols_[k];
      v_.col(static_cast<Eigen::Index>(k)) = v_cols_[k];
    }
    for (const auto& g : leading_groups(field_, opt_.rank_tol)) groups_.push_back(g);
    scale_ = 1.0;
    for (const auto& p : field_.punctures) scale_ = std::max(scale_, 1.0 + std::abs(p));
  }

  [[nodiscard]] const ExplicitHiggsField& field() const { return field_; }
  [[nodiscard]] const SpectralOptions& options() const { return opt_; }
  [[nodiscard]] std::size_t transformed_rank() const { return r_hat_; }
  /// Nullity r_j of each residue.
  [[nodiscard]] const std::vector<std::size_t>& regular_ranks() const { return regular_; }
  [[nodiscard]] const std::vector<LeadingGroup>& groups() const { return groups_; }
  /// Typical size of the bounded part of the spectral set.
  [[nodiscard]] double scale() const { return scale_; }

  /// Puncture of the transform nearest to xi, with its distance.
  [[nodiscard]] std::pair<std::size_t, double> nearest_group(Complex xi) const {
    std::size_t best = 0;
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < groups_.size(); ++l)
      if (std::abs(xi - groups_[l].xi) < d) {
        d = std::abs(xi - groups_[l].xi);
        best = l;
      }
    return {best, d};
  }

  void require_regular(Complex xi) const {
    for (const auto& a : a_)
      if (std::abs(xi - a) <= opt_.avoid_tol * (1.0 + std::abs(a)))
        throw Error("xi = " + to_string(xi) + " is a puncture of the transform");
  }

  /// T(xi); its eigenvalues are the spectral points.
  [[nodiscard]] CMatrix transformed_matrix(Complex xi) const {
    require_regular(xi);
    Eigen::VectorXcd inv(static_cast<Eigen::Index>(a_.size()));
    for (std::size_t k = 0; k < a_.size(); ++k) inv(static_cast<Eigen::Index>(k)) = 1.0 / (a_[k] - xi);
    CMatrix t = -2.0 * v_.adjoint() * inv.asDiagonal() * u_;
    for (std::size_t k = 0; k < r_hat_; ++k) t(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) += diag_p_[k];
    return t;
  }

  /// Spectral points with multiplicity, sorted lexicographically.
  [[nodiscard]] std::vector<Complex> points(Complex xi) const {
    auto pts = eigenvalues(transformed_matrix(xi));
    std::sort(pts.begin(), pts.end(), [](Complex a, Complex b) {
      return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
    });
    return pts;
  }

  /// Full sample at xi for the given (already computed) points.
  [[nodiscard]] SpectralSample describe(Complex xi, std::vector<Complex> pts, bool cokernels) const {
    SpectralSample s;
    s.xi = xi;
    s.points = std::move(pts);
    const std::size_t n = s.points.size();
    std::vector<std::size_t> root(n);
    for (std::size_t i = 0; i < n; ++i) root[i] = i;
    auto find = [&](std::size_t i) {
      while (root[i] != i) i = root[i] = root[root[i]];
      return i;
    };
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double tol = opt_.cluster_tol * (1.0 + std::max(std::abs(s.points[i]), std::abs(s.points[j])));
        if (std::abs(s.points[i] - s.points[j]) <= tol) root[find(i)] = find(j);
      }
    s.multiplicity.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) ++s.multiplicity[find(i)];
    for (std::size_t i = 0; i < n; ++i) s.multiplicity[i] = s.multiplicity[find(i)];
    s.collision = std::any_of(s.multiplicity.begin(), s.multiplicity.end(), [](std::size_t m) { return m > 1; });
    for (const auto& q : s.points)
      for (std::size_t j = 0; j < field_.punctures.size(); ++j)
        if (std::abs(q - field_.punctures[j]) <= opt_.cluster_tol * (1.0 + std::abs(q))) s.generic = false;
    s.coker_dims.assign(n, 0);
    if (cokernels) {
      std::vector<char> done(n, 0);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = find(i);
        if (done[c]) continue;
        done[c] = 1;
        s.coker_dims[i] = coker_dim(xi, s.points[i]);
      }
    }
    return s;
  }

  [[nodiscard]] SpectralSample sample(Complex xi) const { return describe(xi, points(xi), opt_.cokernels); }

  /// dim coker theta_xi(q).  Singular values count as zero below rank_tol
  /// times the size of the terms summed into theta_xi(q), so that the
  /// cutoff survives cancellation (a 1 x 1 field vanishing at q has no
  /// nonzero singular value to compare against).
  [[nodiscard]] std::size_t coker_dim(Complex xi, Complex q) const {
    const CMatrix m = deformed_at(xi, q);
    double scale = 0.0;
    for (const auto& a : a_) scale = std::max(scale, std::abs(a - xi) / 2.0);
    for (std::size_t j = 0; j < field_.residues.size(); ++j)
      scale += field_.residues[j].norm() / std::abs(q - field_.punctures[j]);
    const auto sv = singular_values(m);
    scale = std::max(scale, sv.size() > 0 ? sv(0) : 0.0);
    std::size_t dim = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
      if (sv(k) <= opt_.rank_tol * scale) ++dim;
    return dim;
  }

  /// dz-coefficient of theta_xi at z.
  [[nodiscard]] CMatrix deformed_at(Complex xi, Complex z) const {
    CMatrix m = field_.evaluate(z);
    for (Eigen::Index k = 0; k < m.rows(); ++k) m(k, k) -= xi / 2.0;
    return m;
  }

 private:
  ExplicitHiggsField field_;
  SpectralOptions opt_;
  std::vector<Complex> a_;
  std::vector<std::size_t> regular_;
  std::vector<CVector> u_cols_, v_cols_;
  std::vector<Complex> diag_p_;
  std::vector<std::size_t> owner_;
  std::size_t r_hat_ = 0;
  CMatrix u_, v_;
  std::vector<LeadingGroup> groups_;
  double scale_ = 1.0;
};

// ---------------------------------------------------------------------------
// Determinant route
// ---------------------------------------------------------------------------

struct CharPoly {
  /// Deflated determinant Q, degree r_hat.
  Poly poly;
  std::vector<std::size_t> regular_ranks;
  bool generic = true;
  std::string diagnostic;
};

/// Q(z) = det[((A - xi)/2) prod_i (z - p_i) + sum_j C_j prod_{i != j} (z - p_i)]
///        / prod_j (z - p_j)^{r_j}
///      = det theta_xi(z) * prod_j (z - p_j)^{r - r_j},
/// interpolated from values on a circle of roots of unity.
inline CharPoly char_poly_at(const ExplicitHiggsField& f, Complex xi, const SpectralOptions& opt = {}) {
  validate_field(f);
  for (const auto& a : f.leading_diagonal())
    if (std::abs(xi - a) <= opt.avoid_tol * (1.0 + std::abs(a)))
      throw Error("char_poly_at: xi = " + to_string(xi) + " is a puncture of the transform");
  const std::size_t r = f.rank();
  CharPoly out;
  std::size_t r_hat = 0;
  for (const auto& c : f.residues) {
    out.regular_ranks.push_back(nullity(c, opt.rank_tol));
    r_hat += r - out.regular_ranks.back();
  }
  double scale = 1.0;
  for (const auto& p : f.punctures) scale = std::max(scale, 1.0 + std::abs(p));
  const ExplicitHiggsField g = deform_field(f, xi);
  auto q_value = [&](Complex z) {
    Complex v = determinant(g.evaluate(z));
    for (std::size_t j = 0; j < f.punctures.size(); ++j)
      v *= std::pow(z - f.punctures[j], static_cast<double>(r - out.regular_ranks[j]));
    return v;
  };
  const std::size_t nodes = r_hat + 1;
  double phase = 0.3;
  auto collides = [&](double ph) {
    for (const auto& z : circle_nodes(nodes, scale, ph))
      for (const auto& p : f.punctures)
        if (std::abs(z - p) <= 1e-6 * scale) return true;
    return false;
  };
  while (collides(phase)) phase += 0.1 / static_cast<double>(nodes);
  std::vector<Complex> vals;
  for (const auto& z : circle_nodes(nodes, scale, phase)) vals.push_back(q_value(z));
  out.poly = interpolate_on_circle(vals, scale, phase);
  for (std::size_t j = 0; j < f.punctures.size(); ++j) {
    if (root_backward_error(out.poly, f.punctures[j]) <= opt.deflation_tol) {
      out.generic = false;
      out.diagnostic += "root count at puncture " + std::to_string(j) + " exceeds r_j = " +
                        std::to_string(out.regular_ranks[j]) + "; ";
    }
  }
  return out;
}

/// The undeflated determinant det[theta_xi(z) prod_i (z - p_i)] as a
/// polynomial matrix determinant.
inline Poly undeflated_char_poly(const ExplicitHiggsField& f, Complex xi) {
  validate_field(f);
  const std::size_t r = f.rank();
  const std::size_t n = f.punctures.size();
  PolyMatrix m(r, r);
  Poly all = Poly::constant(1.0);
  for (const auto& p : f.punctures) all = all * Poly::linear(p);
  for (std::size_t a = 0; a < r; ++a)
    for (std::size_t b = 0; b < r; ++b) {
      const auto ia = static_cast<Eigen::Index>(a);
      const auto ib = static_cast<Eigen::Index>(b);
      Poly e = a == b ? ((f.leading(ia, ib) - xi) / 2.0) * all : Poly{};
      for (std::size_t j = 0; j < n; ++j) {
        if (f.residues[j](ia, ib) == Complex{}) continue;
        Poly others = Poly::constant(f.residues[j](ia, ib));
        for (std::size_t i = 0; i < n; ++i)
          if (i != j) others = others * Poly::linear(f.punctures[i]);
        e = e + others;
      }
      m(a, b) = e;
    }
  return det_polymatrix(m);
}

/// Order of vanishing of p at z0: the index of the first Taylor coefficient
/// at z0 exceeding rel_tol times the largest one.
inline std::size_t root_multiplicity(const Poly& p, Complex z0, double rel_tol = 1e-8) {
  const Poly t = p.taylor_shift(z0);
  const double big = t.max_abs_coeff();
  std::size_t k = 0;
  while (static_cast<int>(k) <= t.degree() && std::abs(t.coeff(static_cast<int>(k))) <= rel_tol * big) ++k;
  return k;
}

// ---------------------------------------------------------------------------
// Pointwise operations
// ---------------------------------------------------------------------------

inline SpectralSample spectral_points(const ExplicitHiggsField& f, Complex xi, const SpectralOptions& opt = {}) {
  return SpectralCurve(f, opt).sample(xi);
}

/// Eigenvalues of the transformed Higgs field at xi: -q/2 for q in the
/// spectral set, with multiplicity.
inline std::vector<Complex> transformed_eigenvalue_samples(const SpectralCurve& curve, Complex xi) {
  auto pts = curve.points(xi);
  for (auto& q : pts) q = -q / 2.0;
  return pts;
}

inline std::vector<Complex> transformed_eigenvalue_samples(const ExplicitHiggsField& f, Complex xi) {
  return transformed_eigenvalue_samples(SpectralCurve(f), xi);
}

// ---------------------------------------------------------------------------
// Branch tracking
// ---------------------------------------------------------------------------

struct BranchLabel {
  enum class Kind { index, puncture, group };
  Kind kind = Kind::index;
  /// branch index, log point j, or infinity group l
  std::size_t point = 0;
  /// entry within the log point or group
  std::size_t entry = 0;

  [[nodiscard]] std::string str() const {
    switch (kind) {
      case Kind::puncture:
        return "p" + std::to_string(point) + "." + std::to_string(entry);
      case Kind::group:
        return "g" + std::to_string(point) + "." + std::to_string(entry);
      case Kind::index:
        break;
    }
    return std::to_string(point);
  }
};

struct BranchSample {
  Complex xi{};
  Complex q{};
  std::size_t coker_dim = 0;
};

struct BranchPath {
  BranchLabel label;
  std::vector<BranchSample> samples;
};

struct TrackOptions {
  /// Maximum number of successive step halvings on one segment.
  std::size_t max_halvings = 40;
  /// Record cokernel dimensions at the path nodes.
  bool cokernels = false;
};

inline double min_separation(const std::vector<Complex>& pts) {
  double s = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) s = std::min(s, std::abs(pts[i] - pts[j]));
  return s;
}

/// Distance from each point to its nearest neighbour.
inline std::vector<double> nearest_distances(const std::vector<Complex>& pts) {
  std::vector<double> d(pts.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (i != j) d[i] = std::min(d[i], std::abs(pts[i] - pts[j]));
  return d;
}

/// Continues every spectral point along the polygonal path through the
/// given xi nodes.  Steps are matched by bottleneck assignment and halved
/// whenever some point moves further than half the distance to its
/// nearest neighbour, so that every continuation stays inside its own
/// disk.
inline std::vector<BranchPath> track_branches(const SpectralCurve& curve, std::span<const Complex> path,
                                              const TrackOptions& opt = {}) {
  if (path.empty()) return {};
  const std::size_t n = curve.transformed_rank();
  std::vector<BranchPath> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k].label = {BranchLabel::Kind::index, k, 0};

  auto record = [&](Complex xi, const std::vector<Complex>& pts) {
    std::vector<std::size_t> dims(n, 0);
    if (opt.cokernels) dims = curve.describe(xi, pts, true).coker_dims;
    for (std::size_t k = 0; k < n; ++k) out[k].samples.push_back({xi, pts[k], dims[k]});
  };

  std::vector<Complex> cur = curve.points(path[0]);
  auto nearest = nearest_distances(cur);
  record(path[0], cur);
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Complex a = path[i - 1];
    const Complex b = path[i];
    double t = 0.0;
    double h = 1.0;
    std::size_t depth = 0;
    while (t < 1.0) {
      const double tn = std::min(1.0, t + h);
      const Complex x = tn == 1.0 ? b : a + tn * (b - a);
      const auto pts = curve.points(x);
      const auto m = multiset_match(cur, pts, std::numeric_limits<double>::infinity());
      bool safe = true;
      for (std::size_t k = 0; k < n && safe; ++k)
        safe = std::abs(pts[m.assignment[k]] - cur[k]) <= 0.5 * nearest[k];
      if (n <= 1 || safe) {
        std::vector<Complex> next(n);
        for (std::size_t k = 0; k < n; ++k) next[k] = pts[m.assignment[k]];
        cur = std::move(next);
        nearest = nearest_distances(cur);
        t = tn;
        if (depth > 0) {
          --depth;
          h *= 2.0;
        }
      } else {
        h /= 2.0;
        if (++depth > opt.max_halvings)
          throw Error("track_branches: unresolved collision near xi = " + to_string(a + t * (b - a)));
      }
    }
    record(b, cur);
  }
  return out;
}

inline std::vector<BranchPath> track_branches(const ExplicitHiggsField& f, std::span<const Complex> path,
                                              const TrackOptions& opt = {}) {
  return track_branches(SpectralCurve(f), path, opt);
}

/// Labels branches by asymptotic proximity at the last path node.  Far out
/// (|xi| >= far_radius) the predictions are p_j + 2 lambda^j_k / xi; within
/// near_radius of a puncture xi_l of the transform the m_l largest points
/// are matched to 2 lambda^inf_k / (xi - xi_l).  Elsewhere labels stay
/// positional.
inline void label_branches(std::vector<BranchPath>& branches, const SpectralCurve& curve, const HiggsData& data,
                           double far_radius, double near_radius) {
  if (branches.empty() || branches.front().samples.empty()) return;
  const Complex xi = branches.front().samples.back().xi;
  std::vector<Complex> q;
  for (const auto& b : branches) q.push_back(b.samples.back().q);

  if (std::abs(xi) >= far_radius) {
    std::vector<Complex> pred;
    std::vector<BranchLabel> labels;
    for (std::size_t j = 0; j < data.log_points.size(); ++j)
      for (std::size_t k = 0; k < data.log_points[j].entries.size(); ++k) {
        const auto& e = data.log_points[j].entries[k];
        if (e.value == Complex{}) continue;
        pred.push_back(data.log_points[j].position + 2.0 * e.value / xi);
        labels.push_back({BranchLabel::Kind::puncture, j, k});
      }
    if (pred.size() != q.size()) return;
    const auto m = multiset_match(q, pred, std::numeric_limits<double>::infinity());
    for (std::size_t b = 0; b < q.size(); ++b) branches[b].label = labels[m.assignment[b]];
    return;
  }
  const auto [l, dist] = curve.nearest_group(xi);
  if (dist > near_radius || l >= data.inf_groups.size()) return;
  const auto& g = data.inf_groups[l];
  const std::size_t m_l = g.entries.size();
  if (m_l > q.size()) return;
  std::vector<std::size_t> order(q.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(q[a]) > std::abs(q[b]); });
  std::vector<Complex> big, pred;
  for (std::size_t k = 0; k < m_l; ++k) {
    big.push_back(q[order[k]]);
    pred.push_back(2.0 * g.entries[k].value / (xi - g.xi));
  }
  const auto m = multiset_match(big, pred, std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < m_l; ++k) branches[order[k]].label = {BranchLabel::Kind::group, l, m.assignment[k]};
}

/// Sheet permutation after one counter-clockwise loop around center:
/// branch k, started at the k-th point, ends at the perm[k]-th point.
inline std::vector<std::size_t> monodromy(const SpectralCurve& curve, Complex center, double radius,
                                          std::size_t nodes = 64, const TrackOptions& opt = {}) {
  std::vector<Complex> path;
  for (std::size_t s = 0; s <= nodes; ++s)
    path.push_back(center + std::polar(radius, 2.0 * std::numbers::pi * static_cast<double>(s % nodes) /
                                                   static_cast<double>(nodes)));
  const auto br = track_branches(curve, path, opt);
  std::vector<Complex> start, end;
  for (const auto& b : br) {
    start.push_back(b.samples.front().q);
    end.push_back(b.samples.back().q);
  }
  return multiset_match(end, start, std::numeric_limits<double>::infinity()).assignment;
}

// ---------------------------------------------------------------------------
// Circle scans and asymptotic fits
// ---------------------------------------------------------------------------

struct ScanOptions {
  /// Angle of the ray along which radii are traversed.
  double direction = 0.7;
  /// Equally spaced sample nodes per circle.
  std::size_t circle_nodes = 2;
  /// Tracking nodes per full circle (rounded up to a multiple of circle_nodes).
  std::size_t arc_steps = 16;
  std::size_t steps_per_decade = 6;
  TrackOptions track;
};

/// Spectral points tracked along a ray through the given radii around a
/// center, with a full loop at each radius.
struct CircleScan {
  Complex center{};
  std::vector<double> radii;
  /// [radius][node] xi - center at the sample nodes
  std::vector<std::vector<Complex>> offsets;
  /// [radius][node][branch]
  std::vector<std::vector<std::vector<Complex>>> points;
};

inline CircleScan scan_circles(const SpectralCurve& curve, Complex center, std::vector<double> radii,
                               const ScanOptions& opt = {}) {
  if (radii.empty()) throw Error("scan_circles: no radii");
  const std::size_t nodes = std::max<std::size_t>(opt.circle_nodes, 1);
  const std::size_t arc = ((std::max(opt.arc_steps, nodes) + nodes - 1) / nodes) * nodes;
  const std::size_t stride = arc / nodes;
  const double two_pi = 2.0 * std::numbers::pi;

  std::vector<Complex> path;
  std::vector<std::vector<std::size_t>> node_index(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw Error("scan_circles: radii must be positive");
    if (i > 0) {
      const double lo = std::log10(radii[i - 1]), hi = std::log10(radii[i]);
      const auto steps = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(std::abs(hi - lo) * static_cast<double>(opt.steps_per_decade))));
      for (std::size_t s = 1; s < steps; ++s) {
        const double e = lo + (hi - lo) * static_cast<double>(s) / static_cast<double>(steps);
        path.push_back(center + std::polar(std::pow(10.0, e), opt.direction));
      }
    }
    for (std::size_t s = 0; s <= arc; ++s) {
      if (s % stride == 0 && s < arc) node_index[i].push_back(path.size());
      path.push_back(center + std::polar(radii[i], opt.direction + two_pi * static_cast<double>(s % arc) /
                                                                     static_cast<double>(arc)));
    }
  }
  const auto br = track_branches(curve, path, opt.track);
  CircleScan scan;
  scan.center = center;
  scan.radii = radii;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    std::vector<Complex> offs;
    std::vector<std::vector<Complex>> pts;
    for (const auto idx : node_index[i]) {
      offs.push_back(path[idx] - center);
      std::vector<Complex> at;
      for (const auto& b : br) at.push_back(b.samples[idx].q);
      pts.push_back(std::move(at));
    }
    scan.offsets.push_back(std::move(offs));
    scan.points.push_back(std::move(pts));
  }
  return scan;
}

/// Branches of a scan around a puncture of the transform that grow like
/// 1/|xi - xi_l| between the two innermost radii.
inline std::vector<std::size_t> escaping_branches(const CircleScan& scan) {
  if (scan.radii.size() < 2) throw Error("escaping_branches: two radii required");
  const std::size_t last = scan.radii.size() - 1, first = last - 1;
  const double ratio = scan.radii[first] / scan.radii[last];
  std::vector<std::size_t> out;
  if (scan.points.empty() || scan.points[first].empty()) return out;
  const auto& q0 = scan.points[first][0];
  const auto& q1 = scan.points[last][0];
  for (std::size_t b = 0; b < q0.size(); ++b) {
    const double growth = std::abs(q1[b]) / std::max(std::abs(q0[b]), std::numeric_limits<double>::min());
    if (growth >= 0.5 * ratio && growth <= 2.0 * ratio) out.push_back(b);
  }
  return out;
}

struct PunctureFitOptions {
  std::vector<double> radii{1e-2, 1e-3, 1e-4};
  ScanOptions scan{0.7, 4, 16, 6, {}};
  /// Restrict the fit to this branch; it must be escaping.
  std::optional<std::size_t> branch;
};

struct EscapingBranch {
  std::size_t branch = 0;
  /// Fitted q(xi) (xi - xi_l) at each radius.
  std::vector<Complex> estimates;
  /// Estimate at the smallest radius.
  Complex rho_hat{};
  /// |difference| between the two smallest radii.
  double drift = 0.0;
};

struct PunctureFit {
  std::size_t group = 0;
  Complex xi{};
  std::vector<double> radii;
  std::size_t escaping_count = 0;
  std::vector<EscapingBranch> branches;
};

/// Residues of the escaping branches at the puncture xi_l of the transform.
/// At each radius the value of q(xi)(xi - xi_l) is averaged over equally
/// spaced nodes on the circle, which removes every Taylor term below the
/// node count (four nodes by default: error O(radius^4)).
inline PunctureFit fit_puncture_asymptotics(const SpectralCurve& curve, std::size_t group,
                                            const PunctureFitOptions& opt = {}) {
  if (group >= curve.groups().size()) throw Error("fit_puncture_asymptotics: no infinity group " + std::to_string(group));
  std::vector<double> radii = opt.radii;
  std::sort(radii.begin(), radii.end(), std::greater<>());
  const bool extra = radii.size() < 2;
  if (extra) radii.push_back(radii.front() / 10.0);
  PunctureFit fit;
  fit.group = group;
  fit.xi = curve.groups()[group].xi;
  const auto scan = scan_circles(curve, fit.xi, radii, opt.scan);
  const auto esc = escaping_branches(scan);
  fit.escaping_count = esc.size();
  if (extra) radii.pop_back();
  fit.radii = radii;
  if (opt.branch && std::find(esc.begin(), esc.end(), *opt.branch) == esc.end())
    throw Error("fit_puncture_asymptotics: branch " + std::to_string(*opt.branch) + " does not escape at xi_l");
  for (const auto b : esc) {
    if (opt.branch && b != *opt.branch) continue;
    EscapingBranch e;
    e.branch = b;
    for (std::size_t i = 0; i < radii.size(); ++i) {
      Complex acc{};
      for (std::size_t m = 0; m < scan.offsets[i].size(); ++m) acc += scan.points[i][m][b] * scan.offsets[i][m];
      e.estimates.push_back(acc / static_cast<double>(scan.offsets[i].size()));
    }
    e.rho_hat = e.estimates.back();
    e.drift = e.estimates.size() > 1 ? std::abs(e.estimates.back() - e.estimates[e.estimates.size() - 2]) : 0.0;
    fit.branches.push_back(std::move(e));
  }
  return fit;
}

struct InfinityFitOptions {
  std::vector<double> radii{1e2, 1e3, 1e4};
  ScanOptions scan{0.7, 8, 32, 6, {}};
  /// A branch belongs to p_j when |p_hat - p_j| <= assign_tol * (1 + max|p|).
  double assign_tol = 1e-2;
};

struct InfinityBranchFit {
  std::size_t branch = 0;
  /// Per radius: constant term and half the 1/xi coefficient.
  std::vector<Complex> p_hat;
  std::vector<Complex> lambda_hat;
  std::size_t puncture = 0;
};

struct InfinityFit {
  std::vector<double> radii;
  std::vector<InfinityBranchFit> branches;
  /// Branch count converging to each puncture.
  std::vector<std::size_t> group_sizes;
};

/// Fits q(xi) ~ p + 2 lambda / xi on circles |xi| = R.  With zeta = 1/xi
/// each branch is analytic in zeta, and the trapezoidal sums over N nodes
/// return its zeta^0 and zeta^1 coefficients up to O(R^-N).
inline InfinityFit fit_infinity_asymptotics(const SpectralCurve& curve, const InfinityFitOptions& opt = {}) {
  std::vector<double> radii = opt.radii;
  std::sort(radii.begin(), radii.end());
  const auto scan = scan_circles(curve, Complex{}, radii, opt.scan);
  const auto& pj = curve.field().punctures;
  double pscale = 1.0;
  for (const auto& p : pj) pscale = std::max(pscale, 1.0 + std::abs(p));
  InfinityFit fit;
  fit.radii = radii;
  fit.group_sizes.assign(pj.size(), 0);
  for (std::size_t b = 0; b < curve.transformed_rank(); ++b) {
    InfinityBranchFit e;
    e.branch = b;
    for (std::size_t i = 0; i < radii.size(); ++i) {
      Complex c0{}, c1{};
      const auto nn = static_cast<double>(scan.offsets[i].size());
      for (std::size_t m = 0; m < scan.offsets[i].size(); ++m) {
        const Complex q = scan.points[i][m][b];
        c0 += q;
        c1 += q * scan.offsets[i][m];
      }
      e.p_hat.push_back(c0 / nn);
      e.lambda_hat.push_back(c1 / nn / 2.0);
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pj.size(); ++j)
      if (std::abs(e.p_hat.back() - pj[j]) < best) {
        best = std::abs(e.p_hat.back() - pj[j]);
        e.puncture = j;
      }
    if (!(best <= opt.assign_tol * pscale))
      throw Error("fit_infinity_asymptotics: branch " + std::to_string(b) + " converges to " +
                  to_string(e.p_hat.back()) + ", which is no puncture");
    ++fit.group_sizes[e.puncture];
    fit.branches.push_back(std::move(e));
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Transformed field from spectral data
// ---------------------------------------------------------------------------

struct TransformedPunctureEstimate {
  Complex position{};
  /// Residues of the eigenvalues -q/2 of the transformed field.
  std::vector<Complex> residues;
};

struct TransformedInfinityEstimate {
  /// Leading coefficient of -q/2 doubled, so that it compares with a
  /// stored xi of the transformed data.
  Complex xi{};
  std::vector<Complex> residues;
};

struct TransformedEstimate {
  std::vector<TransformedPunctureEstimate> punctures;
  std::vector<TransformedInfinityEstimate> infinity;
};

struct TransformedEstimateOptions {
  double puncture_radius = 1e-3;
  double infinity_radius = 1e3;
  ScanOptions puncture_scan{0.7, 4, 16, 6, {}};
  ScanOptions infinity_scan{0.7, 8, 32, 6, {}};
};

/// Singularity data of the transformed Higgs field read off its
/// eigenvalues -Sigma_xi / 2 near each xi_l and near infinity.
inline TransformedEstimate estimate_transformed_singularities(const SpectralCurve& curve,
                                                              const TransformedEstimateOptions& opt = {}) {
  TransformedEstimate est;
  for (std::size_t l = 0; l < curve.groups().size(); ++l) {
    const Complex xl = curve.groups()[l].xi;
    // Escape is judged over the decade inside the fitting radius.
    const auto scan = scan_circles(curve, xl, {opt.puncture_radius, opt.puncture_radius / 10.0}, opt.puncture_scan);
    TransformedPunctureEstimate pe{xl, {}};
    for (const auto b : escaping_branches(scan)) {
      Complex acc{};
      for (std::size_t m = 0; m < scan.offsets[0].size(); ++m) acc += (-scan.points[0][m][b] / 2.0) * scan.offsets[0][m];
      pe.residues.push_back(acc / static_cast<double>(scan.offsets[0].size()));
    }
    est.punctures.push_back(std::move(pe));
  }
  const auto scan = scan_circles(curve, Complex{}, {opt.infinity_radius}, opt.infinity_scan);
  const auto& pj = curve.field().punctures;
  est.infinity.resize(pj.size());
  for (std::size_t j = 0; j < pj.size(); ++j) est.infinity[j].xi = -pj[j];
  std::vector<std::vector<Complex>> leads(pj.size());
  for (std::size_t b = 0; b < curve.transformed_rank(); ++b) {
    Complex c0{}, c1{};
    const auto nn = static_cast<double>(scan.offsets[0].size());
    for (std::size_t m = 0; m < scan.offsets[0].size(); ++m) {
      const Complex s = -scan.points[0][m][b] / 2.0;
      c0 += s;
      c1 += s * scan.offsets[0][m];
    }
    c0 /= nn;
    c1 /= nn;
    std::size_t j = 0;
    for (std::size_t i = 1; i < pj.size(); ++i)
      if (std::abs(2.0 * c0 + pj[i]) < std::abs(2.0 * c0 + pj[j])) j = i;
    leads[j].push_back(2.0 * c0);
    est.infinity[j].residues.push_back(c1);
  }
  for (std::size_t j = 0; j < pj.size(); ++j)
    if (!leads[j].empty()) {
      Complex mean{};
      for (const auto& x : leads[j]) mean += x;
      est.infinity[j].xi = mean / static_cast<double>(leads[j].size());
    }
  return est;
}

// ---------------------------------------------------------------------------
// Reducedness
// ---------------------------------------------------------------------------

struct ReducednessReport {
  /// Fraction of sampled xi at which every spectral point is simple.
  double fraction = 1.0;
  std::size_t samples = 0;
  std::size_t with_multiple_points = 0;
  /// Smallest relative separation seen over all samples.
  double min_relative_separation = std::numeric_limits<double>::infinity();
};

/// Samples xi uniformly in a disk covering the transform's punctures,
/// keeping a margin from them, and checks that the spectral points are
/// pairwise separated by more than sep_tol * (1 + max modulus).
inline ReducednessReport reducedness_probe(const SpectralCurve& curve, std::size_t n_samples, std::uint64_t seed,
                                           double sep_tol = 1e-6) {
  std::mt19937_64 rng(seed);
  double radius = 1.0;
  for (const auto& g : curve.groups()) radius = std::max(radius, 1.0 + std::abs(g.xi));
  radius *= 2.0;
  std::uniform_real_distribution<double> u(-radius, radius);
  ReducednessReport rep;
  while (rep.samples < n_samples) {
    const double re = u(rng);
    const Complex xi{re, u(rng)};
    if (std::abs(xi) > radius) continue;
    if (curve.nearest_group(xi).second < 1e-3 * radius) continue;
    const auto pts = curve.points(xi);
    ++rep.samples;
    double big = 0.0;
    for (const auto& q : pts) big = std::max(big, std::abs(q));
    const double rel = min_separation(pts) / (1.0 + big);
    rep.min_relative_separation = std::min(rep.min_relative_separation, rel);
    if (rel <= sep_tol) ++rep.with_multiple_points;
  }
  rep.fraction = rep.samples == 0
                     ? 1.0
                     : static_cast<double>(rep.samples - rep.with_multiple_points) / static_cast<double>(rep.samples);
  return rep;
}

}  // namespace nahmkit
