#pragma once

// Complex-arithmetic substrate: polynomials, dense complex matrices, roots,
// eigenvalues, numerical null spaces and tolerant multiset matching.
//
// Dense eigenvalue and singular-value work is delegated to Eigen; the
// polynomial machinery and the assignment solver are local.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nahmkit {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool is_finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

inline bool is_finite(const CMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i)
    if (!is_finite(m.data()[i])) return false;
  return true;
}

inline std::string to_string(Complex z) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(%.6g%+.6gi)", z.real(), z.imag());
  return buf;
}

// ---------------------------------------------------------------------------
// Polynomials
// ---------------------------------------------------------------------------

/// Univariate complex polynomial, coefficients in ascending degree.
/// Exactly-zero top coefficients are stripped, so degree() is len-1 and
/// the zero polynomial has degree -1.
class Poly {
 public:
  Poly() = default;
  explicit Poly(std::vector<Complex> coeffs) : c_(std::move(coeffs)) { strip(); }
  Poly(std::initializer_list<Complex> coeffs) : c_(coeffs) { strip(); }

  /// (z - root)
  static Poly linear(Complex root) { return Poly{-root, Complex{1.0}}; }
  static Poly constant(Complex c) { return Poly{c}; }

  [[nodiscard]] int degree() const { return static_cast<int>(c_.size()) - 1; }
  [[nodiscard]] bool is_zero() const { return c_.empty(); }
  [[nodiscard]] std::span<const Complex> coeffs() const { return c_; }
  [[nodiscard]] Complex coeff(int k) const {
    return (k >= 0 && k < static_cast<int>(c_.size())) ? c_[static_cast<std::size_t>(k)] : Complex{};
  }
  [[nodiscard]] Complex lead() const { return c_.empty() ? Complex{} : c_.back(); }

  Complex operator()(Complex z) const {
    Complex acc{};
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * z + *it;
    return acc;
  }

  /// Sum of |c_k| |z|^k, the scale used for normwise backward errors.
  [[nodiscard]] double abs_eval(double r) const {
    double acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * r + std::abs(*it);
    return acc;
  }

  [[nodiscard]] double max_abs_coeff() const {
    double m = 0.0;
    for (const auto& c : c_) m = std::max(m, std::abs(c));
    return m;
  }

  [[nodiscard]] Poly derivative() const {
    if (c_.size() <= 1) return {};
    std::vector<Complex> d(c_.size() - 1);
    for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = c_[k] * static_cast<double>(k);
    return Poly(std::move(d));
  }

  /// Coefficients of the same polynomial written in powers of (z - c).
  [[nodiscard]] Poly taylor_shift(Complex c) const {
    std::vector<Complex> a = c_;
    const std::size_t n = a.size();
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t k = n - 1; k > i; --k) a[k - 1] += c * a[k];
    return Poly(std::move(a));
  }

  /// Drops top coefficients below rel * max|c_k|.
  [[nodiscard]] Poly trimmed(double rel) const {
    std::vector<Complex> a = c_;
    const double cut = rel * max_abs_coeff();
    while (!a.empty() && std::abs(a.back()) <= cut) a.pop_back();
    return Poly(std::move(a));
  }

  friend Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<Complex> out(a.c_.size() + b.c_.size() - 1);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
    return Poly(std::move(out));
  }

  friend Poly operator+(const Poly& a, const Poly& b) {
    std::vector<Complex> out(std::max(a.c_.size(), b.c_.size()));
    for (std::size_t i = 0; i < a.c_.size(); ++i) out[i] += a.c_[i];
    for (std::size_t i = 0; i < b.c_.size(); ++i) out[i] += b.c_[i];
    return Poly(std::move(out));
  }

  friend Poly operator-(const Poly& a, const Poly& b) { return a + (-1.0) * b; }

  friend Poly operator*(Complex s, const Poly& p) {
    std::vector<Complex> out = p.c_;
    for (auto& c : out) c *= s;
    return Poly(std::move(out));
  }

 private:
  void strip() {
    while (!c_.empty() && c_.back() == Complex{}) c_.pop_back();
  }
  std::vector<Complex> c_;
};

/// Product of (z - r) over the given roots.
inline Poly poly_from_roots(std::span<const Complex> roots) {
  Poly p = Poly::constant(1.0);
  for (const auto& r : roots) p = p * Poly::linear(r);
  return p;
}

/// Normwise backward error of z as a root of p.
inline double root_backward_error(const Poly& p, Complex z) {
  const double scale = p.abs_eval(std::abs(z));
  return scale > 0.0 ? std::abs(p(z)) / scale : 0.0;
}

/// All deg(p) roots with multiplicity.  Companion-matrix eigenvalues on a
/// rescaled variable, then Newton polishing on p itself.  Every returned
/// root satisfies root_backward_error(p, root) <= tol.
inline std::vector<Complex> poly_roots(const Poly& p, double tol = 1e-8) {
  if (p.is_zero()) throw Error("poly_roots: polynomial is identically zero");
  if (p.degree() > 64) throw Error("poly_roots: degree " + std::to_string(p.degree()) + " exceeds 64");
  for (const auto& c : p.coeffs())
    if (!is_finite(c)) throw Error("poly_roots: non-finite coefficient");

  std::vector<Complex> roots;
  auto cs = p.coeffs();
  std::size_t lo = 0;
  while (cs[lo] == Complex{}) {
    roots.push_back({});
    ++lo;
  }
  const Poly q(std::vector<Complex>(cs.begin() + static_cast<std::ptrdiff_t>(lo), cs.end()));
  const int m = q.degree();
  if (m <= 0) return roots;

  std::vector<Complex> found;
  if (m == 1) {
    found.push_back(-q.coeff(0) / q.coeff(1));
  } else {
    const double s = std::pow(std::abs(q.coeff(0)) / std::abs(q.lead()), 1.0 / m);
    // monic polynomial in w = z / s
    std::vector<Complex> b(static_cast<std::size_t>(m));
    double sk = 1.0;
    const double sm = std::pow(s, m);
    for (int k = 0; k < m; ++k) {
      b[static_cast<std::size_t>(k)] = q.coeff(k) * sk / (q.lead() * sm);
      sk *= s;
    }
    CMatrix comp = CMatrix::Zero(m, m);
    for (int k = 0; k < m; ++k) comp(0, k) = -b[static_cast<std::size_t>(m - 1 - k)];
    for (int k = 1; k < m; ++k) comp(k, k - 1) = 1.0;
    Eigen::ComplexEigenSolver<CMatrix> es(comp, false);
    if (es.info() != Eigen::Success) throw Error("poly_roots: eigenvalue iteration did not converge");
    for (int k = 0; k < m; ++k) found.push_back(s * es.eigenvalues()(k));
  }

  const Poly dq = q.derivative();
  const std::vector<Complex> raw = found;
  for (std::size_t i = 0; i < found.size(); ++i) {
    auto& z = found[i];
    // members of a numerical cluster are left alone: Newton would drag
    // them onto a single root
    bool clustered = false;
    for (std::size_t j = 0; j < raw.size(); ++j)
      if (j != i && std::abs(raw[j] - raw[i]) <= 1e-7 * (1.0 + std::abs(raw[i]))) clustered = true;
    double fz = std::abs(q(z));
    for (int it = 0; it < 8 && fz > 0.0 && !clustered; ++it) {
      const Complex d = dq(z);
      if (d == Complex{}) break;
      const Complex zn = z - q(z) / d;
      const double fn = std::abs(q(zn));
      if (!(fn < fz)) break;
      z = zn;
      fz = fn;
    }
    const double be = root_backward_error(q, z);
    if (!(be <= tol))
      throw Error("poly_roots: no convergence, backward error " + std::to_string(be) + " at " + to_string(z));
    roots.push_back(z);
  }
  return roots;
}

// ---------------------------------------------------------------------------
// Dense matrices
// ---------------------------------------------------------------------------

inline void require_square(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols())
    throw Error(std::string(what) + ": matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                ", expected square");
}

/// Eigenvalues with algebraic multiplicity (complex Schur form).
inline std::vector<Complex> eigenvalues(const CMatrix& m) {
  require_square(m, "eigenvalues");
  if (!is_finite(m)) throw Error("eigenvalues: non-finite entry");
  if (m.rows() == 0) return {};
  Eigen::ComplexEigenSolver<CMatrix> es(m, false);
  if (es.info() != Eigen::Success) throw Error("eigenvalues: Schur iteration did not converge");
  std::vector<Complex> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index k = 0; k < m.rows(); ++k) out[static_cast<std::size_t>(k)] = es.eigenvalues()(k);
  return out;
}

/// Singular values, largest first.
inline Eigen::VectorXd singular_values(const CMatrix& m) {
  if (m.size() == 0) return {};
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues();
}

/// Number of singular values above rel_tol * (largest singular value).
inline std::size_t numerical_rank(const CMatrix& m, double rel_tol = 1e-8) {
  const Eigen::VectorXd sv = singular_values(m);
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cut = rel_tol * sv(0);
  std::size_t r = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > cut) ++r;
  return r;
}

inline std::size_t nullity(const CMatrix& m, double rel_tol = 1e-8) {
  return static_cast<std::size_t>(m.cols()) - numerical_rank(m, rel_tol);
}

/// Orthonormal basis of ker(M^H), i.e. of the cokernel of M, with the rank
/// decided by the relative singular-value threshold.
inline std::vector<CVector> cokernel_basis(const CMatrix& m, double rel_tol = 1e-8) {
  require_square(m, "cokernel_basis");
  if (m.rows() == 0) return {};
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  std::size_t rank = 0;
  if (sv(0) > 0.0)
    for (Eigen::Index k = 0; k < sv.size(); ++k)
      if (sv(k) > rel_tol * sv(0)) ++rank;
  std::vector<CVector> basis;
  for (Eigen::Index k = static_cast<Eigen::Index>(rank); k < m.rows(); ++k) basis.emplace_back(svd.matrixU().col(k));
  return basis;
}

inline Complex determinant(const CMatrix& m) {
  require_square(m, "determinant");
  if (m.rows() == 0) return 1.0;
  return m.partialPivLu().determinant();
}

// ---------------------------------------------------------------------------
// Polynomial matrices
// ---------------------------------------------------------------------------

/// Square or rectangular matrix with polynomial entries, row-major.
struct PolyMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Poly> entries;

  PolyMatrix() = default;
  PolyMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), entries(r * c) {}

  Poly& operator()(std::size_t i, std::size_t j) { return entries[i * cols + j]; }
  const Poly& operator()(std::size_t i, std::size_t j) const { return entries[i * cols + j]; }

  [[nodiscard]] int max_degree() const {
    int d = -1;
    for (const auto& p : entries) d = std::max(d, p.degree());
    return d;
  }

  [[nodiscard]] CMatrix evaluate(Complex z) const {
    CMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(i, j)(z);
    return m;
  }
};

/// Recovers the coefficients of a polynomial of degree < values.size() from
/// its values at scale * omega^m * e^{i phase}, omega = e^{2 pi i / N}.
inline Poly interpolate_on_circle(std::span<const Complex> values, double scale, double phase = 0.0) {
  const std::size_t n = values.size();
  std::vector<Complex> c(n);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{};
    for (std::size_t m = 0; m < n; ++m) {
      const double ang = -two_pi * static_cast<double>(k * m % n) / static_cast<double>(n);
      acc += values[m] * std::polar(1.0, ang);
    }
    // undo the radius and the phase rotation: z = scale e^{i phase} w
    c[k] = acc / static_cast<double>(n) * std::polar(std::pow(scale, -static_cast<double>(k)), -phase * static_cast<double>(k));
  }
  return Poly(std::move(c));
}

inline std::vector<Complex> circle_nodes(std::size_t n, double scale, double phase = 0.0) {
  std::vector<Complex> z(n);
  for (std::size_t m = 0; m < n; ++m)
    z[m] = std::polar(scale, phase + 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n));
  return z;
}

/// Determinant of a square polynomial matrix by evaluation at scaled roots
/// of unity followed by interpolation.  scale <= 0 picks a scale from the
/// entries' root magnitudes.
inline Poly det_polymatrix(const PolyMatrix& m, double scale = 0.0) {
  if (m.rows != m.cols || m.entries.size() != m.rows * m.cols)
    throw Error("det_polymatrix: inconsistent shapes (" + std::to_string(m.rows) + "x" + std::to_string(m.cols) + ")");
  if (m.rows == 0) return Poly::constant(1.0);
  const int d = std::max(m.max_degree(), 0);
  const std::size_t nodes = m.rows * static_cast<std::size_t>(d) + 1;
  if (scale <= 0.0) {
    scale = 1.0;
    for (const auto& p : m.entries) {
      const int pd = p.degree();
      for (int k = 0; k < pd; ++k) {
        const double ratio = std::abs(p.coeff(k)) / std::abs(p.lead());
        if (ratio > 0.0) scale = std::max(scale, std::pow(ratio, 1.0 / (pd - k)));
      }
    }
  }
  const auto zs = circle_nodes(nodes, scale);
  std::vector<Complex> vals(nodes);
  for (std::size_t k = 0; k < nodes; ++k) vals[k] = determinant(m.evaluate(zs[k]));
  Poly p = interpolate_on_circle(vals, scale);
  // Interpolation noise sits at roughly eps relative to the largest value on
  // the circle; anything at that level in the top coefficients is dropped.
  double vmax = 0.0;
  for (const auto& v : vals) vmax = std::max(vmax, std::abs(v));
  std::vector<Complex> c(p.coeffs().begin(), p.coeffs().end());
  const double eps = 64.0 * std::numeric_limits<double>::epsilon();
  while (!c.empty() && std::abs(c.back()) * std::pow(scale, static_cast<double>(c.size() - 1)) <= eps * vmax)
    c.pop_back();
  return Poly(std::move(c));
}

// ---------------------------------------------------------------------------
// Multiset matching
// ---------------------------------------------------------------------------

struct Matching {
  bool matched = false;
  /// s[i] is paired with t[assignment[i]].
  std::vector<std::size_t> assignment;
  /// Largest paired distance; the best achievable bound when !matched.
  double max_distance = 0.0;
};

namespace detail {

inline bool has_perfect_matching(const std::vector<std::vector<double>>& d, double thr,
                                 std::vector<std::ptrdiff_t>& match_t) {
  const std::size_t n = d.size();
  match_t.assign(n, -1);
  std::vector<char> seen;
  auto augment = [&](auto&& self, std::size_t i) -> bool {
    for (std::size_t j = 0; j < n; ++j) {
      if (d[i][j] > thr || seen[j]) continue;
      seen[j] = 1;
      if (match_t[j] < 0 || self(self, static_cast<std::size_t>(match_t[j]))) {
        match_t[j] = static_cast<std::ptrdiff_t>(i);
        return true;
      }
    }
    return false;
  };
  for (std::size_t i = 0; i < n; ++i) {
    seen.assign(n, 0);
    if (!augment(augment, i)) return false;
  }
  return true;
}

/// Minimum-sum assignment (Hungarian method with potentials), O(n^3).
inline std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assign(n);
  for (std::size_t j = 1; j <= n; ++j) assign[p[j] - 1] = j - 1;
  return assign;
}

}  // namespace detail

/// Pairs two equal-size multisets so that the largest pair distance is
/// minimal (bottleneck), breaking ties by minimal total distance.
template <class T, class Dist>
Matching multiset_match(std::span<const T> s, std::span<const T> t, double tol, Dist dist) {
  if (s.size() != t.size())
    throw Error("multiset_match: size mismatch " + std::to_string(s.size()) + " vs " + std::to_string(t.size()));
  const std::size_t n = s.size();
  Matching out;
  if (n == 0) {
    out.matched = true;
    return out;
  }
  std::vector<std::vector<double>> d(n, std::vector<double>(n));
  std::vector<double> levels;
  levels.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      d[i][j] = static_cast<double>(dist(s[i], t[j]));
      levels.push_back(d[i][j]);
    }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  std::vector<std::ptrdiff_t> match_t;
  std::size_t lo = 0, hi = levels.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (detail::has_perfect_matching(d, levels[mid], match_t))
      hi = mid;
    else
      lo = mid + 1;
  }
  const double bottleneck = levels[lo];
  const double big = 1.0 + 2.0 * static_cast<double>(n) * std::max(bottleneck, 1.0);
  std::vector<std::vector<double>> cost = d;
  for (auto& row : cost)
    for (auto& c : row)
      if (c > bottleneck) c = big;
  out.assignment = detail::hungarian(cost);
  out.max_distance = 0.0;
  for (std::size_t i = 0; i < n; ++i) out.max_distance = std::max(out.max_distance, d[i][out.assignment[i]]);
  out.matched = out.max_distance <= tol;
  return out;
}

inline Matching multiset_match(std::span<const Complex> s, std::span<const Complex> t, double tol) {
  return multiset_match(s, t, tol, [](Complex a, Complex b) { return std::abs(a - b); });
}

inline Matching multiset_match(const std::vector<Complex>& s, const std::vector<Complex>& t, double tol) {
  return multiset_match(std::span<const Complex>(s), std::span<const Complex>(t), tol);
}

}  // namespace nahmkit
