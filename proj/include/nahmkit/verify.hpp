#pragma once

// Invariant suites behind `nahmkit verify`.

#include "nahmkit/fields.hpp"
#include "nahmkit/io.hpp"
#include "nahmkit/moduli.hpp"
#include "nahmkit/nahm.hpp"
#include "nahmkit/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace nahmkit {

struct CheckRecord {
  std::string name;
  bool pass = true;
  double residual = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerificationReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::vector<CheckRecord> checks;

  [[nodiscard]] bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.pass; });
  }
  [[nodiscard]] std::size_t passed() const {
    return static_cast<std::size_t>(
        std::count_if(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.pass; }));
  }
  void add(std::string name, double residual, double tol, std::string detail = {}) {
    checks.push_back({std::move(name), residual <= tol, residual, tol, std::move(detail)});
  }
  void add_bool(std::string name, bool ok, std::string detail = {}) {
    checks.push_back({std::move(name), ok, ok ? 0.0 : 1.0, 0.0, std::move(detail)});
  }
};

inline Json to_json(const VerificationReport& r) {
  Json j;
  j["suite"] = r.suite;
  j["seed"] = r.seed;
  j["count"] = r.count;
  j["passed"] = r.passed();
  j["total"] = r.checks.size();
  j["checks"] = Json::array();
  for (const auto& c : r.checks)
    j["checks"].push_back({{"name", c.name},
                           {"pass", c.pass},
                           {"residual", c.residual},
                           {"tolerance", c.tolerance},
                           {"detail", c.detail}});
  return j;
}

/// |a - b| / |b|, or |a - b| when b vanishes.
inline double relative_error(Complex a, Complex b) {
  const double d = std::abs(a - b);
  return std::abs(b) > 0.0 ? d / std::abs(b) : d;
}

/// |a - b| / (1 + |b|), for positions that may sit at the origin.
inline double position_error(Complex a, Complex b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

// ---------------------------------------------------------------------------
// Data-level laws
// ---------------------------------------------------------------------------

struct DataLaws {
  bool involution = false;
  bool rank_recovered = false;
  bool degree_preserved = false;
  double bookkeeping_residual = 0.0;
  double pardeg_residual = 0.0;
  bool hypothesis_preserved = false;
  std::string detail;

  [[nodiscard]] bool pass(double tol = 1e-12) const {
    return involution && rank_recovered && degree_preserved && std::abs(bookkeeping_residual) <= tol &&
           std::abs(pardeg_residual) <= tol && hypothesis_preserved;
  }
};

template <class Side>
DataLaws data_laws(const SingularityData<Side>& d, double tol = 1e-12) {
  DataLaws out;
  const auto inv = involution_check(d, tol);
  if (!inv.precondition_ok) {
    out.detail = "precondition failed: " + detail::join(inv.precondition_violations);
    return out;
  }
  out.involution = inv.pass;
  out.rank_recovered = inv.rank_recovered == d.rank;
  if (!inv.comparison.match) out.detail = detail::join(inv.comparison.mismatches);
  const auto t = forward_transform(d);
  out.degree_preserved = t.degree == d.degree;
  const auto b = extension_bookkeeping(d);
  out.bookkeeping_residual = b.identity_residual;
  out.pardeg_residual = parabolic_degree(t) - parabolic_degree(d);
  out.hypothesis_preserved = detail::side_hypothesis(t, {}).pass;
  return out;
}

/// Data-level laws on a random generic corpus of both pictures.
inline VerificationReport verify_corpus(std::size_t count, std::uint64_t seed) {
  VerificationReport rep;
  rep.suite = "corpus";
  rep.seed = seed;
  rep.count = count;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const auto hd = random_higgs_data(rng);
    const auto laws = data_laws(hd);
    rep.add_bool("higgs[" + std::to_string(i) + "]", laws.pass(), laws.detail);
  }
  for (std::size_t i = 0; i < count; ++i) {
    const auto cd = random_connection_data(rng);
    const auto laws = data_laws(cd);
    bool ok = laws.pass();
    const auto back = higgs_to_connection(connection_to_higgs(cd));
    ok = ok && data_match(back, cd, 1e-12).match;
    rep.add_bool("connection[" + std::to_string(i) + "]", ok, laws.detail);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Spectral checks on a realized field
// ---------------------------------------------------------------------------

struct SpectralCheckOptions {
  std::size_t generic_samples = 20;
  double relative_tol = 1e-3;
  std::uint64_t seed = 1;
};

/// Fiber counts, cokernel dimensions, and the asymptotic fits at the
/// punctures of the transform and at infinity, against the data read off
/// the field.
inline void spectral_checks(const ExplicitHiggsField& f, const HiggsData& data, VerificationReport& rep,
                            const SpectralCheckOptions& opt = {}) {
  const SpectralCurve curve(f);
  const auto r_hat = curve.transformed_rank();
  rep.add_bool("spectral.r_hat", static_cast<int>(r_hat) == transformed_rank(data));

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  std::size_t bad_count = 0, bad_coker = 0;
  for (std::size_t s = 0; s < opt.generic_samples; ++s) {
    const double re = u(rng);
    const Complex xi{re, u(rng)};
    if (curve.nearest_group(xi).second < 1e-2) continue;
    const auto sample = curve.sample(xi);
    if (sample.points.size() != r_hat) ++bad_count;
    std::size_t sum = 0;
    for (auto c : sample.coker_dims) sum += c;
    if (sum != r_hat) ++bad_coker;
  }
  rep.add_bool("spectral.fiber_count", bad_count == 0, std::to_string(bad_count) + " bad samples");
  rep.add_bool("spectral.coker_sum", bad_coker == 0, std::to_string(bad_coker) + " bad samples");

  const auto inf = fit_infinity_asymptotics(curve);
  bool sizes_ok = true;
  for (std::size_t j = 0; j < data.log_points.size(); ++j)
    sizes_ok = sizes_ok && inf.group_sizes[j] == data.log_points[j].singular_count();
  rep.add_bool("spectral.infinity_partition", sizes_ok);
  double p_err = 0.0, l_err = 0.0;
  const std::size_t at = 1;  // |xi| = 1e3
  for (std::size_t j = 0; j < data.log_points.size(); ++j) {
    std::vector<Complex> fitted, truth;
    for (const auto& b : inf.branches)
      if (b.puncture == j) {
        fitted.push_back(b.lambda_hat[at]);
        p_err = std::max(p_err, position_error(b.p_hat[at], data.log_points[j].position));
      }
    for (const auto& e : data.log_points[j].entries)
      if (e.value != Complex{}) truth.push_back(e.value);
    if (fitted.size() != truth.size()) continue;
    const auto m = multiset_match(fitted, truth, std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < fitted.size(); ++k)
      l_err = std::max(l_err, relative_error(fitted[k], truth[m.assignment[k]]));
  }
  rep.add("spectral.infinity_position", p_err, opt.relative_tol);
  rep.add("spectral.infinity_residue", l_err, opt.relative_tol);

  double rho_err = 0.0;
  bool count_ok = true;
  for (std::size_t l = 0; l < curve.groups().size(); ++l) {
    const auto fit = fit_puncture_asymptotics(curve, l);
    std::vector<Complex> truth;
    for (const auto& e : data.inf_groups[l].entries)
      if (e.value != Complex{}) truth.push_back(2.0 * e.value);
    if (fit.escaping_count != truth.size()) {
      count_ok = false;
      continue;
    }
    std::vector<Complex> at_1e3;
    for (const auto& b : fit.branches) at_1e3.push_back(b.estimates[1]);
    const auto m = multiset_match(at_1e3, truth, std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < at_1e3.size(); ++k)
      rho_err = std::max(rho_err, relative_error(at_1e3[k], truth[m.assignment[k]]));
  }
  rep.add_bool("spectral.escaping_count", count_ok);
  rep.add("spectral.puncture_residue", rho_err, opt.relative_tol);
}

/// Realization of spec data as an explicit field.
inline ModelField realize(const HiggsData& hd, const std::optional<FieldSpec>& spec) {
  if (spec && spec->mode == "random") return conjugated_field(hd, spec->seed);
  return model_field(hd);
}

/// Full suite for one spec file.
inline VerificationReport verify_spec(const SpecFile& s, std::uint64_t seed) {
  VerificationReport rep;
  rep.suite = "spec";
  rep.seed = seed;
  rep.count = 1;
  const HiggsData hd = s.kind == DataKind::higgs ? s.higgs : connection_to_higgs(s.connection);
  DataLaws laws;
  if (s.kind == DataKind::higgs) {
    laws = data_laws(s.higgs);
  } else {
    laws = data_laws(s.connection);
    const auto real = realizability_checks(s.connection);
    // Warnings only: recorded, never failing.
    rep.checks.push_back({"realizability.residue (warning)", true, real.residue_residual, 1e-12,
                          real.residue_ok ? "" : "residue identity violated"});
    rep.checks.push_back({"realizability.pardeg (warning)", true, real.pardeg_residual, 1e-12,
                          real.pardeg_ok ? "" : "parabolic degree nonzero"});
  }
  rep.add_bool("involution", laws.involution && laws.rank_recovered, laws.detail);
  rep.add_bool("degree_preserved", laws.degree_preserved);
  rep.add("bookkeeping_identity", std::abs(laws.bookkeeping_residual), 1e-12);
  rep.add("pardeg_preserved", std::abs(laws.pardeg_residual), 1e-12);
  rep.add_bool("hypothesis_preserved", laws.hypothesis_preserved);
  const auto model = realize(hd, s.field);
  SpectralCheckOptions sopt;
  sopt.seed = seed;
  spectral_checks(model.field, model.data, rep, sopt);
  return rep;
}

}  // namespace nahmkit
