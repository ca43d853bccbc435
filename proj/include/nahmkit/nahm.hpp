#pragma once

// Nahm transform on singularity data, the (-1)* pullback, involutivity
// and degree bookkeeping.

#include "nahmkit/moduli.hpp"
#include "nahmkit/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

namespace nahmkit {

struct TransformOptions {
  /// Check the side's hypothesis and transformability first.
  bool check = true;
  HypothesisOptions hypothesis;
};

namespace detail {

/// Negation that maps zero to +0.
inline Complex negate(Complex v) { return {0.0 - v.real(), 0.0 - v.imag()}; }

template <class Side>
CheckReport side_hypothesis(const SingularityData<Side>& d, const HypothesisOptions& opt) {
  if constexpr (std::is_same_v<Side, HiggsSide>)
    return check_hypothesis(d, opt);
  else
    return check_connection_hypothesis(d, opt);
}

template <class Side>
CheckReport transform_preconditions(const SingularityData<Side>& d, const HypothesisOptions& opt) {
  CheckReport rep = side_hypothesis(d, opt);
  for (auto& v : transformability_check(d).violations) rep.fail(std::move(v));
  for (std::size_t j = 0; j < d.log_points.size(); ++j)
    if (d.log_points[j].singular_count() == 0) rep.fail("log point " + std::to_string(j) + " has no singular entry");
  return rep;
}

inline std::string join(const std::vector<std::string>& parts) {
  std::string s;
  for (const auto& p : parts) s += (s.empty() ? "" : "; ") + p;
  return s;
}

/// Infinity group xi_l becomes a log point at xi_l carrying the negated
/// entries, padded with regular (0,0) entries up to the new rank; log point
/// p_j becomes an infinity group at -p_j carrying its negated singular
/// entries.  Weights ride along unchanged.
template <class Side>
SingularityData<Side> transform_entries(const SingularityData<Side>& d) {
  SingularityData<Side> out;
  out.rank = transformed_rank(d);
  out.degree = d.degree;
  const auto r_hat = static_cast<std::size_t>(out.rank);
  for (const auto& g : d.inf_groups) {
    LogPoint lp{g.xi, {}};
    for (const auto& e : g.entries) lp.entries.push_back({negate(e.value), e.weight});
    while (lp.entries.size() < r_hat) lp.entries.push_back({});
    out.log_points.push_back(std::move(lp));
  }
  for (const auto& lp : d.log_points) {
    InfinityGroup g{negate(lp.position), {}};
    for (const auto& e : lp.entries)
      if (e.value != Complex{}) g.entries.push_back({negate(e.value), e.weight});
    if (!g.entries.empty()) out.inf_groups.push_back(std::move(g));
  }
  return out;
}

template <class Side>
SingularityData<Side> checked_transform(const SingularityData<Side>& d, const TransformOptions& opt,
                                        const char* what) {
  validate_structure(d);
  if (opt.check) {
    const auto rep = transform_preconditions(d, opt.hypothesis);
    if (!rep.pass) throw Error(std::string(what) + ": precondition failed: " + join(rep.violations));
  }
  return transform_entries(d);
}

}  // namespace detail

/// Higgs-side transform: rank r_hat, degree kept, log points at the xi_l
/// with residues -lambda^inf and weights alpha^inf, infinity groups at
/// -p_j with residues -lambda^j and weights alpha^j.
inline HiggsData higgs_transform(const HiggsData& hd, const TransformOptions& opt = {}) {
  return detail::checked_transform(hd, opt, "higgs_transform");
}

/// Connection-side transform: the same rule on (mu, beta).
inline ConnectionData connection_transform(const ConnectionData& cd, const TransformOptions& opt = {}) {
  return detail::checked_transform(cd, opt, "connection_transform");
}

template <class Side>
SingularityData<Side> forward_transform(const SingularityData<Side>& d, const TransformOptions& opt = {}) {
  if constexpr (std::is_same_v<Side, HiggsSide>)
    return higgs_transform(d, opt);
  else
    return connection_transform(d, opt);
}

/// Pullback under z -> -z: positions and leading eigenvalues change sign,
/// residues and weights are fixed.
template <class Side>
SingularityData<Side> pullback_minus(SingularityData<Side> d) {
  for (auto& lp : d.log_points) lp.position = detail::negate(lp.position);
  for (auto& g : d.inf_groups) g.xi = detail::negate(g.xi);
  return d;
}

template <class Side>
SingularityData<Side> inverse_transform(const SingularityData<Side>& d, const TransformOptions& opt = {}) {
  return pullback_minus(forward_transform(d, opt));
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

struct DataMatch {
  bool match = true;
  double max_distance = 0.0;
  std::vector<std::string> mismatches;
};

namespace detail {

inline double entry_distance(const WeightedEigen& a, const WeightedEigen& b) {
  return std::max(std::abs(a.value - b.value), std::abs(a.weight - b.weight));
}

template <class Point, class Pos>
void match_points(const std::vector<Point>& a, const std::vector<Point>& b, double tol, Pos pos, const char* what,
                  DataMatch& out) {
  if (a.size() != b.size()) {
    out.match = false;
    out.mismatches.push_back(std::string(what) + " counts differ: " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    return;
  }
  std::vector<Complex> pa, pb;
  for (const auto& p : a) pa.push_back(pos(p));
  for (const auto& p : b) pb.push_back(pos(p));
  const auto m = multiset_match(pa, pb, tol);
  out.max_distance = std::max(out.max_distance, m.max_distance);
  if (!m.matched) {
    out.match = false;
    out.mismatches.push_back(std::string(what) + " positions differ by " + std::to_string(m.max_distance));
    return;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& ea = a[i].entries;
    const auto& eb = b[m.assignment[i]].entries;
    if (ea.size() != eb.size()) {
      out.match = false;
      out.mismatches.push_back(std::string(what) + " at " + to_string(pa[i]) + ": entry counts differ");
      continue;
    }
    const auto em = multiset_match(std::span<const WeightedEigen>(ea), std::span<const WeightedEigen>(eb), tol,
                                   entry_distance);
    out.max_distance = std::max(out.max_distance, em.max_distance);
    if (!em.matched) {
      out.match = false;
      out.mismatches.push_back(std::string(what) + " at " + to_string(pa[i]) + ": entries differ by " +
                               std::to_string(em.max_distance));
    }
  }
}

}  // namespace detail

/// Equality of singularity data up to the order of points and of entries
/// within a point.
template <class Side>
DataMatch data_match(const SingularityData<Side>& a, const SingularityData<Side>& b, double tol = 1e-12) {
  DataMatch out;
  if (a.rank != b.rank) {
    out.match = false;
    out.mismatches.push_back("ranks differ: " + std::to_string(a.rank) + " vs " + std::to_string(b.rank));
  }
  if (a.degree != b.degree) {
    out.match = false;
    out.mismatches.push_back("degrees differ: " + std::to_string(a.degree) + " vs " + std::to_string(b.degree));
  }
  detail::match_points(a.log_points, b.log_points, tol, [](const LogPoint& p) { return p.position; }, "log point",
                       out);
  detail::match_points(a.inf_groups, b.inf_groups, tol, [](const InfinityGroup& g) { return g.xi; },
                       "infinity group", out);
  return out;
}

// ---------------------------------------------------------------------------
// Involution
// ---------------------------------------------------------------------------

struct InvolutionReport {
  bool precondition_ok = true;
  std::vector<std::string> precondition_violations;
  bool pass = false;
  int rank = 0;
  int transformed_rank = 0;
  int rank_recovered = 0;
  DataMatch comparison;
};

/// Checks transform(transform(d)) = pullback_minus(d).  Hypothesis
/// failures of d or of its transform are reported as unmet preconditions.
template <class Side>
InvolutionReport involution_check(const SingularityData<Side>& d, double tol = 1e-12,
                                  const HypothesisOptions& hyp = {}) {
  InvolutionReport rep;
  rep.rank = d.rank;
  validate_structure(d);
  auto pre = detail::transform_preconditions(d, hyp);
  if (!pre.pass) {
    rep.precondition_ok = false;
    rep.precondition_violations = std::move(pre.violations);
    return rep;
  }
  const TransformOptions opt{true, hyp};
  const auto once = forward_transform(d, opt);
  rep.transformed_rank = once.rank;
  auto pre2 = detail::transform_preconditions(once, hyp);
  if (!pre2.pass) {
    rep.precondition_ok = false;
    for (auto& v : pre2.violations) rep.precondition_violations.push_back("transform: " + v);
    return rep;
  }
  const auto twice = forward_transform(once, opt);
  rep.rank_recovered = twice.rank;
  rep.comparison = data_match(twice, pullback_minus(d), tol);
  rep.pass = rep.comparison.match && rep.rank_recovered == rep.rank;
  return rep;
}

// ---------------------------------------------------------------------------
// Bookkeeping
// ---------------------------------------------------------------------------

struct Bookkeeping {
  int induced_rank = 0;
  /// Degree of the induced extension: r_hat + r + deg.
  int induced_degree = 0;
  /// Degree of the transformed extension: deg.
  int transformed_degree = 0;
  /// Nonzero weights of the transformed data and their induced shifts.
  std::vector<double> transformed_weights;
  std::vector<double> induced_weights;
  double induced_pardeg = 0.0;
  double transformed_pardeg = 0.0;
  /// induced_pardeg - transformed_pardeg
  double identity_residual = 0.0;
};

template <class Side>
Bookkeeping extension_bookkeeping(const SingularityData<Side>& d, const TransformOptions& opt = {}) {
  const auto t = forward_transform(d, opt);
  Bookkeeping b;
  b.induced_rank = t.rank;
  b.induced_degree = t.rank + d.rank + d.degree;
  b.transformed_degree = t.degree;
  auto collect = [&](const std::vector<WeightedEigen>& es) {
    for (const auto& e : es)
      if (e.weight != 0.0) {
        b.transformed_weights.push_back(e.weight);
        b.induced_weights.push_back(-1.0 + e.weight);
      }
  };
  for (const auto& lp : t.log_points) collect(lp.entries);
  for (const auto& g : t.inf_groups) collect(g.entries);
  b.induced_pardeg = static_cast<double>(b.induced_degree);
  for (const auto w : b.induced_weights) b.induced_pardeg += w;
  b.transformed_pardeg = static_cast<double>(b.transformed_degree);
  for (const auto w : b.transformed_weights) b.transformed_pardeg += w;
  b.identity_residual = b.induced_pardeg - b.transformed_pardeg;
  return b;
}

// ---------------------------------------------------------------------------
// Transform report
// ---------------------------------------------------------------------------

template <class Side>
struct TransformReport {
  SingularityData<Side> input;
  SingularityData<Side> output;
  /// pullback_minus of the output: the inverse transform of the input
  SingularityData<Side> inverse;
  int r_hat = 0;
  int induced_degree = 0;
  int transformed_degree = 0;
  std::vector<double> induced_weights;
  bool hypothesis_preserved = false;
  InvolutionReport involution;
};

template <class Side>
TransformReport<Side> make_transform_report(const SingularityData<Side>& d, const TransformOptions& opt = {}) {
  TransformReport<Side> rep;
  rep.input = d;
  rep.output = forward_transform(d, opt);
  rep.inverse = pullback_minus(rep.output);
  const auto b = extension_bookkeeping(d, opt);
  rep.r_hat = b.induced_rank;
  rep.induced_degree = b.induced_degree;
  rep.transformed_degree = b.transformed_degree;
  rep.induced_weights = b.induced_weights;
  rep.hypothesis_preserved = detail::side_hypothesis(rep.output, opt.hypothesis).pass;
  rep.involution = involution_check(d, 1e-12, opt.hypothesis);
  return rep;
}

// ---------------------------------------------------------------------------
// Dictionary consistency
// ---------------------------------------------------------------------------

struct DictionaryDelta {
  std::string where;
  /// Higgs entry obtained by transforming on the connection side
  WeightedEigen via_connection;
  /// Higgs entry obtained by transforming on the Higgs side
  WeightedEigen via_higgs;
  Complex value_delta{};
  double weight_delta = 0.0;
};

struct DictionaryReport {
  std::vector<DictionaryDelta> entries;
  double max_value_delta = 0.0;
  double max_weight_delta = 0.0;
  /// Whether both routes agree to tol.  Informational only.
  bool agree = true;
};

/// Compares connection_to_higgs(connection_transform(cd)) against
/// higgs_transform(connection_to_higgs(cd)) entry by entry.  Both routes
/// keep point and entry order, so the comparison is positional.
inline DictionaryReport dictionary_consistency_report(const ConnectionData& cd, double tol = 1e-12) {
  const HiggsData a = connection_to_higgs(connection_transform(cd));
  const HiggsData b = higgs_transform(connection_to_higgs(cd));
  DictionaryReport rep;
  auto compare = [&](const std::vector<WeightedEigen>& ea, const std::vector<WeightedEigen>& eb,
                     const std::string& where) {
    for (std::size_t k = 0; k < ea.size() && k < eb.size(); ++k) {
      DictionaryDelta d{where + " entry " + std::to_string(k), ea[k], eb[k], ea[k].value - eb[k].value,
                        ea[k].weight - eb[k].weight};
      rep.max_value_delta = std::max(rep.max_value_delta, std::abs(d.value_delta));
      rep.max_weight_delta = std::max(rep.max_weight_delta, std::abs(d.weight_delta));
      rep.entries.push_back(std::move(d));
    }
  };
  for (std::size_t j = 0; j < a.log_points.size(); ++j)
    compare(a.log_points[j].entries, b.log_points[j].entries, "log point at " + to_string(a.log_points[j].position));
  for (std::size_t l = 0; l < a.inf_groups.size(); ++l)
    compare(a.inf_groups[l].entries, b.inf_groups[l].entries, "infinity group at " + to_string(a.inf_groups[l].xi));
  rep.agree = rep.max_value_delta <= tol && rep.max_weight_delta <= tol;
  return rep;
}

}  // namespace nahmkit
