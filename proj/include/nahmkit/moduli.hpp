#pragma once

// Singularity data of parabolic Higgs bundles and parabolic integrable
// connections on the sphere: logarithmic points with residue eigenvalues
// and weights, plus a second-order pole at infinity split into eigenspace
// groups of the leading matrix.

#include "nahmkit/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

namespace nahmkit {

/// An eigenvalue of a residue together with the parabolic weight on its
/// eigenspace.  Higgs side: (lambda, alpha).  Connection side: (mu, beta).
struct WeightedEigen {
  Complex value{};
  double weight = 0.0;

  friend bool operator==(const WeightedEigen&, const WeightedEigen&) = default;
};

struct LogPoint {
  Complex position{};
  std::vector<WeightedEigen> entries;

  /// Number of regular entries (residue eigenvalue exactly zero).
  [[nodiscard]] std::size_t reg_count() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const WeightedEigen& e) { return e.value == Complex{}; }));
  }
  [[nodiscard]] std::size_t singular_count() const { return entries.size() - reg_count(); }

  friend bool operator==(const LogPoint&, const LogPoint&) = default;
};

/// One eigenvalue xi of the leading matrix at infinity and the residue data
/// restricted to its eigenspace.  On the Higgs side the leading term is xi/2.
struct InfinityGroup {
  Complex xi{};
  std::vector<WeightedEigen> entries;

  [[nodiscard]] std::size_t multiplicity() const { return entries.size(); }

  friend bool operator==(const InfinityGroup&, const InfinityGroup&) = default;
};

struct HiggsSide {
  static constexpr const char* name = "higgs";
};
struct ConnectionSide {
  static constexpr const char* name = "connection";
};

/// Complete singularity datum.  The two instantiations share a shape but not
/// a meaning, so they are distinct types.
template <class Side>
struct SingularityData {
  using side_type = Side;

  int rank = 0;
  int degree = 0;
  std::vector<LogPoint> log_points;
  std::vector<InfinityGroup> inf_groups;

  friend bool operator==(const SingularityData&, const SingularityData&) = default;
};

using HiggsData = SingularityData<HiggsSide>;
using ConnectionData = SingularityData<ConnectionSide>;

template <class T>
inline constexpr bool is_singularity_data_v = false;
template <class Side>
inline constexpr bool is_singularity_data_v<SingularityData<Side>> = true;

// ---------------------------------------------------------------------------
// Structure
// ---------------------------------------------------------------------------

/// Throws Error naming the first structural defect: rank, entry counts,
/// weights outside [0,1), non-finite values, repeated xi, multiplicities
/// not summing to the rank.
template <class Side>
void validate_structure(const SingularityData<Side>& d) {
  if (d.rank < 1) throw Error("rank must be positive, got " + std::to_string(d.rank));
  const auto r = static_cast<std::size_t>(d.rank);
  auto check_entry = [](const WeightedEigen& e, const std::string& where) {
    if (!is_finite(e.value)) throw Error(where + ": non-finite value");
    if (!std::isfinite(e.weight) || e.weight < 0.0 || e.weight >= 1.0)
      throw Error(where + ": weight " + std::to_string(e.weight) + " outside [0,1)");
  };
  for (std::size_t j = 0; j < d.log_points.size(); ++j) {
    const auto& lp = d.log_points[j];
    const std::string where = "log_points[" + std::to_string(j) + "]";
    if (!is_finite(lp.position)) throw Error(where + ": non-finite position");
    if (lp.entries.size() != r)
      throw Error(where + ": has " + std::to_string(lp.entries.size()) + " entries, rank is " + std::to_string(r));
    for (std::size_t k = 0; k < lp.entries.size(); ++k)
      check_entry(lp.entries[k], where + ".entries[" + std::to_string(k) + "]");
  }
  std::size_t total = 0;
  for (std::size_t l = 0; l < d.inf_groups.size(); ++l) {
    const auto& g = d.inf_groups[l];
    const std::string where = "inf_groups[" + std::to_string(l) + "]";
    if (!is_finite(g.xi)) throw Error(where + ": non-finite xi");
    if (g.entries.empty()) throw Error(where + ": empty group");
    for (std::size_t k = 0; k < g.entries.size(); ++k)
      check_entry(g.entries[k], where + ".entries[" + std::to_string(k) + "]");
    for (std::size_t m = 0; m < l; ++m)
      if (d.inf_groups[m].xi == g.xi) throw Error(where + ": xi repeats inf_groups[" + std::to_string(m) + "]");
    total += g.entries.size();
  }
  if (total != r)
    throw Error("infinity multiplicities sum to " + std::to_string(total) + ", rank is " + std::to_string(r));
}

/// Rank of the transformed bundle: sum over log points of the residue ranks.
template <class Side>
int transformed_rank(const SingularityData<Side>& d) {
  std::size_t r_hat = 0;
  for (const auto& lp : d.log_points) r_hat += lp.singular_count();
  return static_cast<int>(r_hat);
}

// ---------------------------------------------------------------------------
// Nonabelian Hodge dictionary
// ---------------------------------------------------------------------------

/// x - floor(x) in [0,1).  Values within a few ulps of an integer are read
/// as that integer so that representatives never land on 1 - ulp.
inline double unit_fraction(double x) {
  const double n = std::round(x);
  if (std::abs(x - n) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) return 0.0;
  const double f = x - std::floor(x);
  return f >= 1.0 ? 0.0 : f;
}

/// (mu, beta) -> (lambda, alpha) = ((mu - beta)/2, frac(Re mu)).
inline WeightedEigen connection_to_higgs(const WeightedEigen& e) {
  return {(e.value - e.weight) / 2.0, unit_fraction(e.value.real())};
}

/// Inverse of connection_to_higgs with beta the representative of
/// alpha - 2 Re(lambda) in [0,1).
inline WeightedEigen higgs_to_connection(const WeightedEigen& e) {
  const double x = e.weight - 2.0 * e.value.real();
  const double beta = unit_fraction(x);
  // Re(mu) = alpha + shift with shift an integer, written so that its
  // fractional part comes back as alpha
  const double shift = std::round(beta - x);
  return {Complex{e.weight + shift, 2.0 * e.value.imag()}, beta};
}

namespace detail {

template <class To, class From, class F>
SingularityData<To> map_entries(const SingularityData<From>& d, F f) {
  SingularityData<To> out;
  out.rank = d.rank;
  out.degree = d.degree;
  for (const auto& lp : d.log_points) {
    LogPoint q{lp.position, {}};
    for (const auto& e : lp.entries) q.entries.push_back(f(e));
    out.log_points.push_back(std::move(q));
  }
  for (const auto& g : d.inf_groups) {
    InfinityGroup q{g.xi, {}};
    for (const auto& e : g.entries) q.entries.push_back(f(e));
    out.inf_groups.push_back(std::move(q));
  }
  return out;
}

}  // namespace detail

inline HiggsData connection_to_higgs(const ConnectionData& cd) {
  return detail::map_entries<HiggsSide>(cd, [](const WeightedEigen& e) { return connection_to_higgs(e); });
}

inline ConnectionData higgs_to_connection(const HiggsData& hd) {
  return detail::map_entries<ConnectionSide>(hd, [](const WeightedEigen& e) { return higgs_to_connection(e); });
}

// ---------------------------------------------------------------------------
// Hypotheses
// ---------------------------------------------------------------------------

struct CheckReport {
  bool pass = true;
  std::vector<std::string> violations;

  void fail(std::string why) {
    pass = false;
    violations.push_back(std::move(why));
  }
};

struct HypothesisOptions {
  /// Values closer than this count as equal.
  double distinct_tol = 1e-12;
  /// |value| <= zero_tol counts as a vanishing eigenvalue.
  double zero_tol = 0.0;
};

/// Genericity hypothesis on Higgs data.  At each log point the nonzero
/// residue eigenvalues are distinct and the weights vanish exactly on the
/// zero eigenvalues; in each infinity group the eigenvalues are nonzero and
/// distinct and every weight is nonzero.  Log-point positions are distinct.
inline CheckReport check_hypothesis(const HiggsData& hd, const HypothesisOptions& opt = {}) {
  CheckReport rep;
  auto is_zero = [&](Complex v) { return std::abs(v) <= opt.zero_tol; };
  for (std::size_t j = 0; j < hd.log_points.size(); ++j) {
    const auto& lp = hd.log_points[j];
    const std::string where = "log point " + std::to_string(j) + " at " + to_string(lp.position);
    for (std::size_t i = 0; i < j; ++i)
      if (std::abs(hd.log_points[i].position - lp.position) <= opt.distinct_tol)
        rep.fail(where + ": position coincides with log point " + std::to_string(i));
    for (std::size_t k = 0; k < lp.entries.size(); ++k) {
      const auto& e = lp.entries[k];
      const bool zero = is_zero(e.value);
      if (zero && e.weight != 0.0)
        rep.fail(where + ": entry " + std::to_string(k) + " has zero eigenvalue but weight " + std::to_string(e.weight));
      if (!zero && e.weight == 0.0)
        rep.fail(where + ": entry " + std::to_string(k) + " has eigenvalue " + to_string(e.value) + " but weight 0");
      if (zero) continue;
      for (std::size_t m = 0; m < k; ++m)
        if (!is_zero(lp.entries[m].value) && std::abs(lp.entries[m].value - e.value) <= opt.distinct_tol)
          rep.fail(where + ": eigenvalues of entries " + std::to_string(m) + " and " + std::to_string(k) +
                   " are not distinct");
    }
  }
  for (std::size_t l = 0; l < hd.inf_groups.size(); ++l) {
    const auto& g = hd.inf_groups[l];
    const std::string where = "infinity group " + std::to_string(l) + " (xi " + to_string(g.xi) + ")";
    for (std::size_t k = 0; k < g.entries.size(); ++k) {
      const auto& e = g.entries[k];
      if (is_zero(e.value)) rep.fail(where + ": entry " + std::to_string(k) + " has zero eigenvalue");
      if (e.weight == 0.0) rep.fail(where + ": entry " + std::to_string(k) + " has weight 0");
      for (std::size_t m = 0; m < k; ++m)
        if (std::abs(g.entries[m].value - e.value) <= opt.distinct_tol)
          rep.fail(where + ": eigenvalues of entries " + std::to_string(m) + " and " + std::to_string(k) +
                   " are not distinct");
    }
  }
  return rep;
}

/// Connection-side counterpart: mu - beta distinct and nonzero on singular
/// entries with Re(mu) not an integer; regular entries (mu = 0) carry
/// beta = 0; at infinity mu - beta distinct and nonzero, Re(mu) not an
/// integer.
inline CheckReport check_connection_hypothesis(const ConnectionData& cd, const HypothesisOptions& opt = {}) {
  CheckReport rep;
  auto integral = [](double x) { return x == std::round(x); };
  for (std::size_t j = 0; j < cd.log_points.size(); ++j) {
    const auto& lp = cd.log_points[j];
    const std::string where = "log point " + std::to_string(j) + " at " + to_string(lp.position);
    for (std::size_t i = 0; i < j; ++i)
      if (std::abs(cd.log_points[i].position - lp.position) <= opt.distinct_tol)
        rep.fail(where + ": position coincides with log point " + std::to_string(i));
    for (std::size_t k = 0; k < lp.entries.size(); ++k) {
      const auto& e = lp.entries[k];
      if (std::abs(e.value) <= opt.zero_tol) {
        if (e.weight != 0.0) rep.fail(where + ": regular entry " + std::to_string(k) + " has nonzero weight");
        continue;
      }
      const Complex shifted = e.value - e.weight;
      if (std::abs(shifted) <= opt.distinct_tol) rep.fail(where + ": entry " + std::to_string(k) + " has mu = beta");
      if (integral(e.value.real())) rep.fail(where + ": entry " + std::to_string(k) + " has integral Re(mu)");
      for (std::size_t m = 0; m < k; ++m) {
        const auto& o = lp.entries[m];
        if (std::abs(o.value) > opt.zero_tol && std::abs((o.value - o.weight) - shifted) <= opt.distinct_tol)
          rep.fail(where + ": mu - beta of entries " + std::to_string(m) + " and " + std::to_string(k) +
                   " are not distinct");
      }
    }
  }
  for (std::size_t l = 0; l < cd.inf_groups.size(); ++l) {
    const auto& g = cd.inf_groups[l];
    const std::string where = "infinity group " + std::to_string(l) + " (xi " + to_string(g.xi) + ")";
    for (std::size_t k = 0; k < g.entries.size(); ++k) {
      const auto& e = g.entries[k];
      const Complex shifted = e.value - e.weight;
      if (std::abs(shifted) <= opt.distinct_tol) rep.fail(where + ": entry " + std::to_string(k) + " has mu = beta");
      if (integral(e.value.real())) rep.fail(where + ": entry " + std::to_string(k) + " has integral Re(mu)");
      for (std::size_t m = 0; m < k; ++m)
        if (std::abs((g.entries[m].value - g.entries[m].weight) - shifted) <= opt.distinct_tol)
          rep.fail(where + ": mu - beta of entries " + std::to_string(m) + " and " + std::to_string(k) +
                   " are not distinct");
    }
  }
  return rep;
}

/// The transformed residue at xi_l has rank m_l inside a bundle of rank
/// r_hat, so every group must satisfy m_l <= r_hat.
template <class Side>
CheckReport transformability_check(const SingularityData<Side>& d) {
  CheckReport rep;
  const auto r_hat = static_cast<std::size_t>(transformed_rank(d));
  for (std::size_t l = 0; l < d.inf_groups.size(); ++l)
    if (d.inf_groups[l].multiplicity() > r_hat)
      rep.fail("infinity group " + std::to_string(l) + " (xi " + to_string(d.inf_groups[l].xi) + ") has multiplicity " +
               std::to_string(d.inf_groups[l].multiplicity()) + " > transformed rank " + std::to_string(r_hat));
  return rep;
}

// ---------------------------------------------------------------------------
// Degrees
// ---------------------------------------------------------------------------

template <class Side>
double weight_sum(const SingularityData<Side>& d) {
  double s = 0.0;
  for (const auto& lp : d.log_points)
    for (const auto& e : lp.entries) s += e.weight;
  for (const auto& g : d.inf_groups)
    for (const auto& e : g.entries) s += e.weight;
  return s;
}

/// deg + sum of all weights over every puncture, infinity included.
template <class Side>
double parabolic_degree(const SingularityData<Side>& d) {
  return static_cast<double>(d.degree) + weight_sum(d);
}

template <class Side>
double slope(const SingularityData<Side>& d) {
  return parabolic_degree(d) / static_cast<double>(d.rank);
}

struct RealizabilityReport {
  /// deg - (sum Re mu_inf - sum_j sum_k Re mu_j)
  double residue_residual = 0.0;
  bool residue_ok = true;
  /// the parabolic degree itself; zero for genuine harmonic data
  double pardeg_residual = 0.0;
  bool pardeg_ok = true;
  std::vector<std::string> warnings;
};

/// Residue-theorem and Gauss-Chern checks.  Never rejects: failures are
/// returned as warnings.
inline RealizabilityReport realizability_checks(const ConnectionData& cd, double tol = 1e-12) {
  RealizabilityReport rep;
  double inf_sum = 0.0, fin_sum = 0.0;
  for (const auto& g : cd.inf_groups)
    for (const auto& e : g.entries) inf_sum += e.value.real();
  for (const auto& lp : cd.log_points)
    for (const auto& e : lp.entries) fin_sum += e.value.real();
  rep.residue_residual = static_cast<double>(cd.degree) - (inf_sum - fin_sum);
  rep.residue_ok = std::abs(rep.residue_residual) <= tol;
  if (!rep.residue_ok)
    rep.warnings.push_back("degree differs from the residue sum by " + std::to_string(rep.residue_residual));
  rep.pardeg_residual = parabolic_degree(cd);
  rep.pardeg_ok = std::abs(rep.pardeg_residual) <= tol;
  if (!rep.pardeg_ok) rep.warnings.push_back("parabolic degree is " + std::to_string(rep.pardeg_residual) + ", not 0");
  return rep;
}

// ---------------------------------------------------------------------------
// Critical weights
// ---------------------------------------------------------------------------

/// Whether weight 0 is critical for the model operator at an entry (mu,
/// beta): some n in Z and imaginary nu solve
///   nu^2 - (Re mu - beta)^2 - |n + mu|^2 = 0.
/// The left side is <= 0 with equality only if Re mu = beta and mu = -n,
/// which for beta in [0,1) leaves mu = beta = 0.
inline bool critical_weight_zero(Complex mu, double beta) {
  if (mu.imag() != 0.0) return false;
  if (mu.real() != beta) return false;
  return mu.real() == std::round(mu.real());
}

// ---------------------------------------------------------------------------
// Random generic data
// ---------------------------------------------------------------------------

struct RandomDataOptions {
  int max_rank = 5;
  int max_points = 4;
  double position_box = 3.0;
  int max_abs_degree = 5;
};

namespace detail {

inline Complex random_point(std::mt19937_64& rng, double box) {
  std::uniform_real_distribution<double> u(-box, box);
  const double re = u(rng);
  return {re, u(rng)};
}

/// n points in the box, pairwise at least min_sep apart.
inline std::vector<Complex> separated_points(std::mt19937_64& rng, std::size_t n, double box, double min_sep) {
  std::vector<Complex> pts;
  while (pts.size() < n) {
    const Complex z = random_point(rng, box);
    if (std::all_of(pts.begin(), pts.end(), [&](Complex w) { return std::abs(w - z) >= min_sep; })) pts.push_back(z);
  }
  return pts;
}

/// Nonzero distinct eigenvalues with modulus in [0.3, 1.5].
inline std::vector<Complex> residue_values(std::mt19937_64& rng, std::size_t n) {
  std::vector<Complex> out;
  std::uniform_real_distribution<double> rad(0.3, 1.5), ang(0.0, 2.0 * std::numbers::pi);
  while (out.size() < n) {
    const double rr = rad(rng);
    const Complex z = std::polar(rr, ang(rng));
    if (std::all_of(out.begin(), out.end(), [&](Complex w) { return std::abs(w - z) >= 0.2; })) out.push_back(z);
  }
  return out;
}

inline double nonzero_weight(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.05, 0.95)(rng); }

/// Random composition of r into parts of size at most cap.
inline std::vector<std::size_t> random_composition(std::mt19937_64& rng, std::size_t r, std::size_t cap) {
  std::vector<std::size_t> parts;
  std::size_t left = r;
  while (left > 0) {
    const std::size_t hi = std::min(left, cap);
    const std::size_t s = std::uniform_int_distribution<std::size_t>(1, hi)(rng);
    parts.push_back(s);
    left -= s;
  }
  return parts;
}

}  // namespace detail

/// Generic, transformable Higgs data drawn from rng.
inline HiggsData random_higgs_data(std::mt19937_64& rng, const RandomDataOptions& opt = {}) {
  HiggsData hd;
  hd.rank = std::uniform_int_distribution<int>(1, opt.max_rank)(rng);
  hd.degree = std::uniform_int_distribution<int>(-opt.max_abs_degree, opt.max_abs_degree)(rng);
  const auto r = static_cast<std::size_t>(hd.rank);
  const auto n = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, opt.max_points)(rng));
  const auto positions = detail::separated_points(rng, n, opt.position_box, 0.25);
  std::size_t r_hat = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto singular = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, hd.rank)(rng));
    r_hat += singular;
    LogPoint lp{positions[j], {}};
    for (const auto& v : detail::residue_values(rng, singular)) lp.entries.push_back({v, detail::nonzero_weight(rng)});
    lp.entries.resize(r, WeightedEigen{});
    std::shuffle(lp.entries.begin(), lp.entries.end(), rng);
    hd.log_points.push_back(std::move(lp));
  }
  const auto sizes = detail::random_composition(rng, r, r_hat);
  const auto xis = detail::separated_points(rng, sizes.size(), opt.position_box, 0.25);
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    InfinityGroup g{xis[l], {}};
    for (const auto& v : detail::residue_values(rng, sizes[l])) g.entries.push_back({v, detail::nonzero_weight(rng)});
    hd.inf_groups.push_back(std::move(g));
  }
  return hd;
}

/// Generic, transformable connection data: singular entries have Re(mu)
/// off the integers, distinct nonzero mu - beta; regular entries are (0, 0).
inline ConnectionData random_connection_data(std::mt19937_64& rng, const RandomDataOptions& opt = {}) {
  for (;;) {
    ConnectionData cd = higgs_to_connection(random_higgs_data(rng, opt));
    if (check_connection_hypothesis(cd).pass) return cd;
  }
}

}  // namespace nahmkit
