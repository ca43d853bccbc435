#pragma once

// Explicit rational Higgs fields
//     theta(z) = (A/2 + sum_j C_j / (z - p_j)) dz
// on the sphere, with A diagonal, simple poles at the p_j and a double pole
// at infinity; their xi-deformations; and the polar local models of the
// connection and Higgs pictures.

#include "nahmkit/moduli.hpp"
#include "nahmkit/numkernel.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace nahmkit {

/// Weights are metric data and cannot be read off a field, so they ride
/// along as an annotation.  Each entry pairs a nominal eigenvalue with its
/// weight; for non-diagonal residues the nominal value decides which
/// computed eigenvalue receives the weight.
struct WeightAnnotation {
  std::vector<std::vector<WeightedEigen>> punctures;
  std::vector<std::vector<WeightedEigen>> infinity;
};

struct ExplicitHiggsField {
  CMatrix leading;  // A, diagonal; the Higgs leading term is A/2
  std::vector<Complex> punctures;
  std::vector<CMatrix> residues;
  WeightAnnotation weights;

  [[nodiscard]] std::size_t rank() const { return static_cast<std::size_t>(leading.rows()); }

  [[nodiscard]] std::vector<Complex> leading_diagonal() const {
    std::vector<Complex> d(rank());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = leading(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    return d;
  }

  /// dz-coefficient of theta at z.
  [[nodiscard]] CMatrix evaluate(Complex z) const {
    CMatrix m = leading / 2.0;
    for (std::size_t j = 0; j < punctures.size(); ++j) m += residues[j] / (z - punctures[j]);
    return m;
  }

  /// z-derivative of evaluate().
  [[nodiscard]] CMatrix derivative(Complex z) const {
    CMatrix m = CMatrix::Zero(leading.rows(), leading.cols());
    for (std::size_t j = 0; j < punctures.size(); ++j) {
      const Complex w = z - punctures[j];
      m -= residues[j] / (w * w);
    }
    return m;
  }

  /// Sum of the residues: the 1/z coefficient at infinity.
  [[nodiscard]] CMatrix residue_sum() const {
    CMatrix s = CMatrix::Zero(leading.rows(), leading.cols());
    for (const auto& c : residues) s += c;
    return s;
  }
};

inline bool is_diagonal(const CMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (i != j && m(i, j) != Complex{}) return false;
  return true;
}

inline void validate_field(const ExplicitHiggsField& f) {
  const auto r = f.leading.rows();
  if (r < 1 || f.leading.cols() != r) throw Error("field: leading matrix must be square and nonempty");
  if (!is_diagonal(f.leading)) throw Error("field: leading matrix is not diagonal");
  if (f.residues.size() != f.punctures.size())
    throw Error("field: " + std::to_string(f.punctures.size()) + " punctures but " +
                std::to_string(f.residues.size()) + " residues");
  for (std::size_t j = 0; j < f.residues.size(); ++j) {
    if (f.residues[j].rows() != r || f.residues[j].cols() != r)
      throw Error("field: residue " + std::to_string(j) + " has wrong shape");
    if (!is_finite(f.residues[j]) || !is_finite(f.punctures[j]))
      throw Error("field: non-finite data at puncture " + std::to_string(j));
    for (std::size_t i = 0; i < j; ++i)
      if (f.punctures[i] == f.punctures[j])
        throw Error("field: punctures " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
  }
  if (!is_finite(f.leading)) throw Error("field: non-finite leading matrix");
}

/// Contiguous run of equal diagonal entries of A.
struct LeadingGroup {
  Complex xi{};
  std::size_t begin = 0;
  std::size_t size = 0;
};

/// Groups the diagonal of A into runs of equal values.  Entries within
/// tol * scale are equal; entries further than sqrt(tol) * scale are
/// distinct; anything in between, or a value that reappears after a
/// different one, is an ambiguous grouping and throws.
inline std::vector<LeadingGroup> leading_groups(const ExplicitHiggsField& f, double tol = 1e-8) {
  const auto diag = f.leading_diagonal();
  double scale = 1.0;
  for (const auto& a : diag) scale = std::max(scale, std::abs(a));
  const double same = tol * scale;
  const double apart = std::sqrt(tol) * scale;
  std::vector<LeadingGroup> groups;
  for (std::size_t k = 0; k < diag.size(); ++k) {
    if (!groups.empty()) {
      const double d = std::abs(diag[k] - groups.back().xi);
      if (d <= same) {
        ++groups.back().size;
        continue;
      }
      if (d <= apart)
        throw Error("leading matrix: entries " + std::to_string(k - 1) + " and " + std::to_string(k) +
                    " are neither equal nor separated within tolerance");
    }
    for (const auto& g : groups) {
      const double d = std::abs(diag[k] - g.xi);
      if (d <= apart)
        throw Error("leading matrix: eigenvalue " + to_string(diag[k]) + " at position " + std::to_string(k) +
                    " is not contiguous with its group");
    }
    groups.push_back({diag[k], k, 1});
  }
  return groups;
}

namespace detail {

/// Eigen-data of a residue block, aligned with a nominal annotation when
/// one is given.  Diagonal blocks keep their diagonal order; otherwise the
/// computed eigenvalues are paired with the nominal values by bottleneck
/// matching.  The `regular` smallest eigenvalues are set to exactly zero.
inline std::vector<WeightedEigen> block_eigendata(const CMatrix& block, std::size_t regular,
                                                  const std::vector<WeightedEigen>* nominal) {
  const auto n = static_cast<std::size_t>(block.rows());
  std::vector<Complex> vals;
  if (is_diagonal(block)) {
    for (std::size_t k = 0; k < n; ++k) vals.push_back(block(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)));
  } else {
    vals = eigenvalues(block);
  }
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(vals[a]) < std::abs(vals[b]); });
  for (std::size_t k = 0; k < regular && k < n; ++k) vals[order[k]] = Complex{};

  std::vector<WeightedEigen> out(n);
  const bool aligned = nominal != nullptr && nominal->size() == n;
  if (!aligned || is_diagonal(block)) {
    for (std::size_t k = 0; k < n; ++k) out[k] = {vals[k], aligned ? (*nominal)[k].weight : 0.0};
    return out;
  }
  std::vector<Complex> nom(n);
  for (std::size_t k = 0; k < n; ++k) nom[k] = (*nominal)[k].value;
  const auto m = multiset_match(nom, vals, std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < n; ++k) out[k] = {vals[m.assignment[k]], (*nominal)[k].weight};
  return out;
}

}  // namespace detail

/// Reads singularity data off a field: residue eigenvalues and their
/// nullity at each puncture, infinity groups from the runs of A, and the
/// infinity residues as eigenvalues of the diagonal blocks of sum_j C_j.
/// Off-diagonal blocks are formally removable and ignored.
inline HiggsData extract_data(const ExplicitHiggsField& f, const WeightAnnotation& weights, double tol = 1e-8,
                              int degree = 0) {
  validate_field(f);
  HiggsData hd;
  hd.rank = static_cast<int>(f.rank());
  hd.degree = degree;
  for (std::size_t j = 0; j < f.punctures.size(); ++j) {
    const std::size_t regular = nullity(f.residues[j], tol);
    const auto* nominal = j < weights.punctures.size() ? &weights.punctures[j] : nullptr;
    hd.log_points.push_back({f.punctures[j], detail::block_eigendata(f.residues[j], regular, nominal)});
  }
  const CMatrix sum = f.residue_sum();
  const auto groups = leading_groups(f, tol);
  for (std::size_t l = 0; l < groups.size(); ++l) {
    const auto b = static_cast<Eigen::Index>(groups[l].begin);
    const auto s = static_cast<Eigen::Index>(groups[l].size);
    const CMatrix block = sum.block(b, b, s, s);
    const auto* nominal = l < weights.infinity.size() ? &weights.infinity[l] : nullptr;
    hd.inf_groups.push_back({groups[l].xi, detail::block_eigendata(block, 0, nominal)});
  }
  return hd;
}

struct ModelField {
  ExplicitHiggsField field;
  /// Data re-extracted from the field.  Infinity residues of a diagonal
  /// model are coordinatewise sums of the puncture residues and need not
  /// agree with the input's stated values.
  HiggsData data;
};

/// Diagonal realization: A = diag of the xi values with multiplicity and
/// C_j = diag of the log-point eigenvalues, both in stored entry order.
inline ModelField model_field(const HiggsData& hd) {
  validate_structure(hd);
  const auto r = static_cast<Eigen::Index>(hd.rank);
  ModelField out;
  auto& f = out.field;
  f.leading = CMatrix::Zero(r, r);
  Eigen::Index k = 0;
  for (const auto& g : hd.inf_groups) {
    std::vector<WeightedEigen> w;
    for (const auto& e : g.entries) {
      f.leading(k, k) = g.xi;
      ++k;
      w.push_back(e);
    }
    f.weights.infinity.push_back(std::move(w));
  }
  for (const auto& lp : hd.log_points) {
    CMatrix c = CMatrix::Zero(r, r);
    for (Eigen::Index i = 0; i < r; ++i) c(i, i) = lp.entries[static_cast<std::size_t>(i)].value;
    f.punctures.push_back(lp.position);
    f.residues.push_back(std::move(c));
    f.weights.punctures.push_back(lp.entries);
  }
  // Infinity weights follow coordinates; the nominal values become the
  // coordinate sums so that annotation and extraction agree.
  const CMatrix sum = f.residue_sum();
  k = 0;
  for (auto& w : f.weights.infinity)
    for (auto& e : w) {
      e.value = sum(k, k);
      ++k;
    }
  out.data = extract_data(f, f.weights, 1e-8, hd.degree);
  return out;
}

struct RandomFieldOptions {
  std::size_t rank = 2;
  std::vector<Complex> punctures;
  /// Nullity r_j of each residue; must be below rank.
  std::vector<std::size_t> regular_ranks;
  /// Multiplicities of the eigenvalues of A; empty means all distinct.
  std::vector<std::size_t> group_sizes;
  std::uint64_t seed = 1;
};

namespace detail {

inline CMatrix random_unitary(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double re = g(rng);
      m(i, j) = Complex{re, g(rng)};
    }
  Eigen::HouseholderQR<CMatrix> qr(m);
  return qr.householderQ() * CMatrix::Identity(n, n);
}

/// U diag(s) V^H with singular values in [1, 10].
inline CMatrix random_conditioned(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXcd s(n);
  for (Eigen::Index k = 0; k < n; ++k) s(k) = std::pow(10.0, u(rng));
  const CMatrix left = random_unitary(rng, n);
  const CMatrix right = random_unitary(rng, n);
  return left * s.asDiagonal() * right.adjoint();
}

}  // namespace detail

/// Conjugated random field: C_j = G_j diag(0,...,0, lambda) G_j^{-1} with
/// cond(G_j) <= 10 and nonzero distinct lambda.  Deterministic in the seed.
inline ExplicitHiggsField random_field(const RandomFieldOptions& opt) {
  const std::size_t r = opt.rank;
  if (r < 1 || r > 8) throw Error("random_field: rank must lie in [1, 8]");
  if (opt.regular_ranks.size() != opt.punctures.size())
    throw Error("random_field: one regular rank per puncture required");
  for (std::size_t j = 0; j < opt.punctures.size(); ++j) {
    if (opt.regular_ranks[j] >= r)
      throw Error("random_field: regular rank " + std::to_string(opt.regular_ranks[j]) + " at puncture " +
                  std::to_string(j) + " leaves a zero residue");
    for (std::size_t i = 0; i < j; ++i)
      if (opt.punctures[i] == opt.punctures[j]) throw Error("random_field: punctures must be distinct");
  }
  std::vector<std::size_t> sizes = opt.group_sizes;
  if (sizes.empty()) sizes.assign(r, 1);
  std::size_t total = 0;
  for (auto s : sizes) {
    if (s == 0) throw Error("random_field: empty group requested");
    total += s;
  }
  if (total != r) throw Error("random_field: group sizes must sum to the rank");

  std::mt19937_64 rng(opt.seed);
  const auto n = static_cast<Eigen::Index>(r);
  ExplicitHiggsField f;
  f.leading = CMatrix::Zero(n, n);
  const auto xis = detail::separated_points(rng, sizes.size(), 3.0, 0.5);
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < sizes.size(); ++l)
    for (std::size_t i = 0; i < sizes[l]; ++i, ++k) f.leading(k, k) = xis[l];

  for (std::size_t j = 0; j < opt.punctures.size(); ++j) {
    const std::size_t reg = opt.regular_ranks[j];
    const auto lambdas = detail::residue_values(rng, r - reg);
    Eigen::VectorXcd diag = Eigen::VectorXcd::Zero(n);
    std::vector<WeightedEigen> nominal(reg);
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      diag(static_cast<Eigen::Index>(reg + i)) = lambdas[i];
      nominal.push_back({lambdas[i], detail::nonzero_weight(rng)});
    }
    const CMatrix g = detail::random_conditioned(rng, n);
    f.punctures.push_back(opt.punctures[j]);
    f.residues.push_back(g * diag.asDiagonal() * g.inverse());
    f.weights.punctures.push_back(std::move(nominal));
  }

  const CMatrix sum = f.residue_sum();
  k = 0;
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    const auto s = static_cast<Eigen::Index>(sizes[l]);
    const auto vals = eigenvalues(sum.block(k, k, s, s));
    std::vector<WeightedEigen> nominal;
    for (const auto& v : vals) nominal.push_back({v, detail::nonzero_weight(rng)});
    f.weights.infinity.push_back(std::move(nominal));
    k += s;
  }
  return f;
}

/// Conjugated realization of given data: A as in model_field and
/// C_j = G_j diag(lambda^j) G_j^{-1} with random G_j of condition <= 10.
/// The infinity residues are whatever the diagonal blocks of sum_j C_j
/// give; the returned data carries them with the input's infinity weights.
inline ModelField conjugated_field(const HiggsData& hd, std::uint64_t seed) {
  ModelField out = model_field(hd);
  auto& f = out.field;
  std::mt19937_64 rng(seed);
  const auto n = static_cast<Eigen::Index>(hd.rank);
  for (auto& c : f.residues) {
    const CMatrix g = detail::random_conditioned(rng, n);
    c = g * c * g.inverse();
  }
  const CMatrix sum = f.residue_sum();
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < hd.inf_groups.size(); ++l) {
    const auto s = static_cast<Eigen::Index>(hd.inf_groups[l].entries.size());
    const auto vals = eigenvalues(sum.block(k, k, s, s));
    auto& w = f.weights.infinity[l];
    for (std::size_t i = 0; i < w.size(); ++i) w[i].value = vals[i];
    k += s;
  }
  out.data = extract_data(f, f.weights, 1e-8, hd.degree);
  return out;
}

/// theta_xi = theta - (xi/2) dz, i.e. A -> A - xi.
inline ExplicitHiggsField deform_field(ExplicitHiggsField f, Complex xi) {
  for (Eigen::Index k = 0; k < f.leading.rows(); ++k) f.leading(k, k) -= xi;
  return f;
}

// ---------------------------------------------------------------------------
// Local models
// ---------------------------------------------------------------------------

/// Coefficient matrices of a matrix-valued 1-form in the frame
/// {dr/r, dtheta, dz, dzbar} around a point.
struct LocalForm {
  CMatrix dr_over_r;
  CMatrix dtheta;
  CMatrix dz;
  CMatrix dzbar;

  static LocalForm zero(Eigen::Index n) {
    const CMatrix z = CMatrix::Zero(n, n);
    return {z, z, z, z};
  }

  friend LocalForm operator+(const LocalForm& a, const LocalForm& b) {
    return {a.dr_over_r + b.dr_over_r, a.dtheta + b.dtheta, a.dz + b.dz, a.dzbar + b.dzbar};
  }
  friend LocalForm operator-(const LocalForm& a, const LocalForm& b) {
    return {a.dr_over_r - b.dr_over_r, a.dtheta - b.dtheta, a.dz - b.dz, a.dzbar - b.dzbar};
  }

  /// Largest coefficient modulus over all four slots.
  [[nodiscard]] double max_abs() const {
    double m = 0.0;
    for (const CMatrix* c : {&dr_over_r, &dtheta, &dz, &dzbar})
      if (c->size() > 0) m = std::max(m, c->cwiseAbs().maxCoeff());
    return m;
  }
};

/// Rewrites the polar slots in terms of dz, dzbar at offset w = z - p:
///   dr/r = (dz/w + dzbar/conj(w)) / 2,  dtheta = (dz/w - dzbar/conj(w)) / (2i).
inline LocalForm to_complex_frame(const LocalForm& f, Complex w) {
  const Complex i{0.0, 1.0};
  LocalForm out = f;
  out.dz += f.dr_over_r / (2.0 * w) + f.dtheta / (2.0 * i * w);
  out.dzbar += f.dr_over_r / (2.0 * std::conj(w)) - f.dtheta / (2.0 * i * std::conj(w));
  out.dr_over_r.setZero();
  out.dtheta.setZero();
  return out;
}

/// Rewrites the dz, dzbar slots in polar terms at offset w = z - p:
///   dz = w (dr/r + i dtheta),  dzbar = conj(w) (dr/r - i dtheta).
inline LocalForm to_polar_frame(const LocalForm& f, Complex w) {
  const Complex i{0.0, 1.0};
  LocalForm out = f;
  out.dr_over_r += f.dz * w + f.dzbar * std::conj(w);
  out.dtheta += f.dz * (i * w) - f.dzbar * (i * std::conj(w));
  out.dz.setZero();
  out.dzbar.setZero();
  return out;
}

enum class Picture { connection, higgs };

struct PolarPoint {
  double radius = 1.0;
  double angle = 0.0;
};

/// Local models near a logarithmic point in the unitary frame.  The exterior
/// derivative d is implicit in unitary and full.
struct LocalModels {
  LocalForm unitary;       // D+ - d
  LocalForm selfadjoint;   // Phi
  LocalForm full;          // D - d
  CMatrix higgs_dz;        // dz-coefficient of the Higgs field
};

/// Connection picture, entries (mu, beta):
///   D+ = d + i Re(mu) dtheta,  Phi = (Re mu - beta) dr/r - Im(mu) dtheta,
///   D  = d + i mu dtheta + (Re mu - beta) dr/r.
/// Higgs picture, entries (lambda, alpha): theta = lambda dz/(z - p),
/// Phi = theta + theta^*, with D+ taken from the dictionary image (mu, beta).
inline LocalModels local_models_at(std::span<const WeightedEigen> entries, Picture picture, PolarPoint pt) {
  if (!(pt.radius > 0.0)) throw Error("local_models_at: evaluation at the puncture itself");
  const auto n = static_cast<Eigen::Index>(entries.size());
  const Complex i{0.0, 1.0};
  const Complex w = std::polar(pt.radius, pt.angle);
  LocalModels m{LocalForm::zero(n), LocalForm::zero(n), LocalForm::zero(n), CMatrix::Zero(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& e = entries[static_cast<std::size_t>(k)];
    const WeightedEigen conn = picture == Picture::connection ? e : higgs_to_connection(e);
    const WeightedEigen higgs = picture == Picture::connection ? connection_to_higgs(e) : e;
    const Complex mu = conn.value;
    m.unitary.dtheta(k, k) = i * mu.real();
    m.full.dtheta(k, k) = i * mu;
    m.full.dr_over_r(k, k) = mu.real() - conn.weight;
    m.higgs_dz(k, k) = higgs.value / w;
    if (picture == Picture::connection) {
      m.selfadjoint.dr_over_r(k, k) = mu.real() - conn.weight;
      m.selfadjoint.dtheta(k, k) = -mu.imag();
    }
  }
  if (picture == Picture::higgs) {
    LocalForm phi = LocalForm::zero(n);
    phi.dz = m.higgs_dz;
    phi.dzbar = m.higgs_dz.adjoint();
    m.selfadjoint = to_polar_frame(phi, w);
  }
  return m;
}

inline LocalModels local_models_at(std::span<const WeightedEigen> entries, Picture picture, Complex z, Complex p) {
  const Complex w = z - p;
  if (w == Complex{}) throw Error("local_models_at: evaluation at the puncture itself");
  return local_models_at(entries, picture, PolarPoint{std::abs(w), std::arg(w)});
}

/// Compares the two deformation pictures under the unitary gauge
/// g = exp[(conj(xi) conj(z) - xi z)/2]:
///   (omega - xi dz) - dlog g   versus   omega - (xi/2) dz - (conj(xi)/2) dzbar.
/// Returns the largest coefficient difference; zero in exact arithmetic.
inline double gauge_relation_check(const LocalForm& omega, Complex xi, Complex z) {
  const Complex exponent = (std::conj(xi) * std::conj(z) - xi * z) / 2.0;
  const Complex g = std::exp(exponent);
  // Wirtinger derivatives of g; g is unitary so dlog g = dg / g exactly
  const Complex dg_dz = g * (-xi / 2.0);
  const Complex dg_dzbar = g * (std::conj(xi) / 2.0);
  const Complex dlog_dz = dg_dz / g;
  const Complex dlog_dzbar = dg_dzbar / g;

  const auto n = omega.dz.rows();
  const CMatrix id = CMatrix::Identity(n, n);
  LocalForm lhs = omega;
  lhs.dz = omega.dz - xi * id - dlog_dz * id;
  lhs.dzbar = omega.dzbar - dlog_dzbar * id;
  LocalForm rhs = omega;
  rhs.dz = omega.dz - (xi / 2.0) * id;
  rhs.dzbar = omega.dzbar - (std::conj(xi) / 2.0) * id;
  return (lhs - rhs).max_abs() + std::abs(std::abs(g) - 1.0);
}

}  // namespace nahmkit
