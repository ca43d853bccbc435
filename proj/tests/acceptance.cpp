// Acceptance suite: one PASS/FAIL line per criterion.  Exit status is
// nonzero if any criterion fails.

#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

using namespace nahmkit;
namespace nt = nahmkit::testing;

namespace {

// Tolerances.
constexpr double kExact = 1e-12;
constexpr double kRelative = 1e-3;
constexpr double kClosedForm = 1e-10;
constexpr double kGauge = 1e-14;
constexpr double kPolar = 1e-12;
constexpr double kRankTol = 1e-8;
// Relative error below which a fit counts as converged when checking
// monotone improvement across decades.
constexpr double kFitFloor = 1e-11;

constexpr std::size_t kConjugatedFields = 50;

constexpr double kInvolutionSeconds = 2.0;
constexpr double kFiberSeconds = 30.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double max_match(const std::vector<Complex>& a, const std::vector<Complex>& b,
                 const std::function<double(Complex, Complex)>& err) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  const auto m = multiset_match(a, b, std::numeric_limits<double>::infinity());
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, err(a[k], b[m.assignment[k]]));
  return worst;
}

double rel(Complex a, Complex b) { return std::abs(a - b) / std::abs(b); }
double pos(Complex a, Complex b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

/// Expected transform^2: positions negated, everything else fixed.
template <class Side>
SingularityData<Side> negate_positions(SingularityData<Side> d) {
  for (auto& lp : d.log_points) lp.position = Complex{} - lp.position;
  for (auto& g : d.inf_groups) g.xi = Complex{} - g.xi;
  return d;
}

template <class Side>
int count_singular(const SingularityData<Side>& d) {
  int n = 0;
  for (const auto& lp : d.log_points)
    for (const auto& e : lp.entries) n += e.value != Complex{} ? 1 : 0;
  return n;
}

std::vector<HiggsData> higgs_corpus() {
  std::mt19937_64 rng(20260101);
  std::vector<HiggsData> out;
  for (int i = 0; i < 200; ++i) out.push_back(random_higgs_data(rng));
  return out;
}

std::vector<ConnectionData> connection_corpus() {
  std::mt19937_64 rng(20260102);
  std::vector<ConnectionData> out;
  for (int i = 0; i < 200; ++i) out.push_back(random_connection_data(rng));
  return out;
}

// 1 -------------------------------------------------------------------------

template <class Side>
void involution_on(const std::vector<SingularityData<Side>>& corpus, int& failures, double& worst) {
  for (const auto& d : corpus) {
    const auto twice = forward_transform(forward_transform(d));
    const auto m = data_match(twice, negate_positions(d), kExact);
    worst = std::max(worst, m.max_distance);
    if (!m.match || twice.rank != d.rank) ++failures;
  }
}

Outcome criterion_involution() {
  const auto hs = higgs_corpus();
  const auto cs = connection_corpus();
  const auto t0 = Clock::now();
  int failures = 0;
  double worst = 0.0;
  involution_on(hs, failures, worst);
  involution_on(cs, failures, worst);
  const double dt = seconds_since(t0);
  Outcome o;
  o.pass = failures == 0 && dt < kInvolutionSeconds;
  o.detail = "400 instances, " + std::to_string(failures) + " failures, max distance " + fmt(worst) + ", " +
             fmt(dt) + " s";
  return o;
}

// 2 -------------------------------------------------------------------------

template <class Side>
void bookkeeping_on(const std::vector<SingularityData<Side>>& corpus, int& failures, double& worst) {
  for (const auto& d : corpus) {
    const auto t = forward_transform(d);
    const auto b = extension_bookkeeping(d);
    const int r_hat = count_singular(d);
    bool ok = t.rank == r_hat && b.induced_rank == r_hat;
    ok = ok && b.induced_degree == r_hat + d.rank + d.degree;
    ok = ok && t.degree == d.degree && b.transformed_degree == d.degree;
    // Weight-shift identity from the transformed weights directly.
    double shifted = b.induced_degree, plain = t.degree;
    int nonzero = 0;
    auto add = [&](const std::vector<WeightedEigen>& es) {
      for (const auto& e : es)
        if (e.weight != 0.0) {
          shifted += -1.0 + e.weight;
          plain += e.weight;
          ++nonzero;
        }
    };
    for (const auto& lp : t.log_points) add(lp.entries);
    for (const auto& g : t.inf_groups) add(g.entries);
    ok = ok && nonzero == r_hat + d.rank;
    const double identity = std::abs(shifted - plain);
    double in_pardeg = d.degree, out_pardeg = t.degree;
    for (const auto& lp : d.log_points)
      for (const auto& e : lp.entries) in_pardeg += e.weight;
    for (const auto& g : d.inf_groups)
      for (const auto& e : g.entries) in_pardeg += e.weight;
    for (const auto& lp : t.log_points)
      for (const auto& e : lp.entries) out_pardeg += e.weight;
    for (const auto& g : t.inf_groups)
      for (const auto& e : g.entries) out_pardeg += e.weight;
    const double pardeg = std::abs(in_pardeg - out_pardeg);
    worst = std::max({worst, identity, pardeg, std::abs(b.identity_residual)});
    if (!ok || identity > kExact || pardeg > kExact || std::abs(b.identity_residual) > kExact) ++failures;
  }
}

Outcome criterion_bookkeeping() {
  int failures = 0;
  double worst = 0.0;
  bookkeeping_on(higgs_corpus(), failures, worst);
  bookkeeping_on(connection_corpus(), failures, worst);
  return {failures == 0, "400 instances, " + std::to_string(failures) + " failures, max residual " + fmt(worst)};
}

// 3 -------------------------------------------------------------------------

Outcome criterion_fiber() {
  const auto t0 = Clock::now();
  const auto corpus = nt::generic_corpus(50, 303);
  std::mt19937_64 rng(304);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  int count_fail = 0, coker_fail = 0, poly_fail = 0, samples = 0;
  double fraction = 1.0;
  for (const auto& inst : corpus) {
    const SpectralCurve curve(inst.field);
    std::size_t r_hat = 0;
    for (const auto& c : inst.field.residues) r_hat += nt::singular_residues(c, kRankTol).size();
    std::vector<Complex> xis;
    while (xis.size() < 20) {
      const double re = u(rng);
      const Complex xi{re, u(rng)};
      if (curve.nearest_group(xi).second > 1e-2) xis.push_back(xi);
    }
    for (const auto& xi : xis) {
      ++samples;
      const auto s = curve.sample(xi);
      if (s.points.size() != r_hat) ++count_fail;
      std::size_t sum = 0;
      for (auto c : s.coker_dims) sum += c;
      if (sum != r_hat) ++coker_fail;
      const auto cp = char_poly_at(inst.field, xi);
      if (cp.poly.degree() != static_cast<int>(r_hat)) ++poly_fail;
    }
    fraction = std::min(fraction, reducedness_probe(curve, 20, inst.seed).fraction);
  }
  const double dt = seconds_since(t0);
  Outcome o;
  o.pass = count_fail == 0 && coker_fail == 0 && poly_fail == 0 && fraction == 1.0 && dt < kFiberSeconds;
  o.detail = std::to_string(samples) + " samples, count failures " + std::to_string(count_fail) +
             ", coker failures " + std::to_string(coker_fail) + ", degree failures " + std::to_string(poly_fail) +
             ", reduced fraction " + fmt(fraction) + ", " + fmt(dt) + " s";
  return o;
}

// 4 -------------------------------------------------------------------------

Outcome criterion_puncture() {
  const auto corpus = nt::generic_corpus(kConjugatedFields, 404);
  int count_fail = 0, monotone_fail = 0, groups = 0;
  double worst_1e3 = 0.0;
  for (const auto& inst : corpus) {
    const SpectralCurve curve(inst.field);
    for (std::size_t l = 0; l < curve.groups().size(); ++l) {
      ++groups;
      const auto& g = curve.groups()[l];
      std::vector<Complex> truth;
      for (const auto& v : nt::block_residues(inst.field, static_cast<Eigen::Index>(g.begin),
                                              static_cast<Eigen::Index>(g.size)))
        truth.push_back(2.0 * v);
      const auto fit = fit_puncture_asymptotics(curve, l);
      if (fit.escaping_count != g.size) {
        ++count_fail;
        continue;
      }
      std::vector<std::vector<Complex>> per_radius(fit.radii.size());
      for (const auto& b : fit.branches)
        for (std::size_t i = 0; i < fit.radii.size(); ++i) per_radius[i].push_back(b.estimates[i]);
      std::vector<double> err;
      for (const auto& est : per_radius) err.push_back(max_match(est, truth, rel));
      worst_1e3 = std::max(worst_1e3, err[1]);
      for (std::size_t i = 1; i < err.size(); ++i)
        if (!(err[i] < err[i - 1] || err[i] <= kFitFloor)) ++monotone_fail;
    }
  }
  const auto closed = nt::closed_form_corpus(20, 405);
  double worst_closed = 0.0;
  int closed_count_fail = 0;
  for (const auto& m : closed) {
    const SpectralCurve curve(m.field);
    for (std::size_t l = 0; l < curve.groups().size(); ++l) {
      // One coordinate per group: q = p + 2 lambda / (xi - xi_l) exactly.
      const auto k = static_cast<Eigen::Index>(curve.groups()[l].begin);
      Complex lambda{};
      for (const auto& c : m.field.residues) lambda += c(k, k);
      const auto fit = fit_puncture_asymptotics(curve, l);
      if (fit.escaping_count != 1) {
        ++closed_count_fail;
        continue;
      }
      for (const auto& e : fit.branches.front().estimates) worst_closed = std::max(worst_closed, rel(e, 2.0 * lambda));
    }
  }
  Outcome o;
  o.pass = count_fail == 0 && monotone_fail == 0 && worst_1e3 <= kRelative && closed_count_fail == 0 &&
           worst_closed <= kClosedForm;
  o.detail = std::to_string(groups) + " conjugated groups, count failures " + std::to_string(count_fail) +
             ", max rel error at 1e-3 " + fmt(worst_1e3) + ", non-monotone " + std::to_string(monotone_fail) +
             "; closed form max error " + fmt(worst_closed) + ", count failures " + std::to_string(closed_count_fail);
  return o;
}

// 5 -------------------------------------------------------------------------

Outcome criterion_infinity() {
  const auto corpus = nt::generic_corpus(kConjugatedFields, 505);
  int partition_fail = 0;
  double worst_p = 0.0, worst_l = 0.0;
  for (const auto& inst : corpus) {
    const SpectralCurve curve(inst.field);
    const auto fit = fit_infinity_asymptotics(curve);
    const std::size_t at = 1;  // |xi| = 1e3
    for (std::size_t j = 0; j < inst.field.punctures.size(); ++j) {
      const auto truth = nt::singular_residues(inst.field.residues[j], kRankTol);
      if (fit.group_sizes[j] != truth.size()) ++partition_fail;
      std::vector<Complex> lambdas;
      for (const auto& b : fit.branches)
        if (b.puncture == j) {
          lambdas.push_back(b.lambda_hat[at]);
          worst_p = std::max(worst_p, pos(b.p_hat[at], inst.field.punctures[j]));
        }
      worst_l = std::max(worst_l, max_match(lambdas, truth, rel));
    }
  }
  const auto closed = nt::closed_form_corpus(20, 506);
  double worst_closed = 0.0;
  for (const auto& m : closed) {
    const auto fit = fit_infinity_asymptotics(SpectralCurve(m.field));
    for (const auto& b : fit.branches) {
      const auto& p = m.field.punctures[b.puncture];
      std::vector<Complex> truth;
      for (Eigen::Index k = 0; k < m.field.leading.rows(); ++k)
        if (m.field.residues[b.puncture](k, k) != Complex{}) truth.push_back(m.field.residues[b.puncture](k, k));
      double best = std::numeric_limits<double>::infinity();
      for (const auto& t : truth) best = std::min(best, rel(b.lambda_hat.back(), t));
      worst_closed = std::max({worst_closed, best, pos(b.p_hat.back(), p)});
    }
  }
  Outcome o;
  o.pass = partition_fail == 0 && worst_p <= kRelative && worst_l <= kRelative && worst_closed <= kClosedForm;
  o.detail = std::to_string(corpus.size()) + " fields, partition failures " + std::to_string(partition_fail) + ", max p error " + fmt(worst_p) +
             ", max lambda error " + fmt(worst_l) + " at |xi| = 1e3; closed form max error " + fmt(worst_closed);
  return o;
}

// 6 -------------------------------------------------------------------------

Outcome criterion_transformed() {
  const auto corpus = nt::generic_corpus(kConjugatedFields, 606);
  double worst = 0.0;
  int shape_fail = 0;
  for (const auto& inst : corpus) {
    const auto predicted = higgs_transform(inst.data);
    const auto est = estimate_transformed_singularities(SpectralCurve(inst.field));
    if (est.punctures.size() != predicted.log_points.size() || est.infinity.size() != predicted.inf_groups.size()) {
      ++shape_fail;
      continue;
    }
    for (std::size_t l = 0; l < est.punctures.size(); ++l) {
      const auto& lp = predicted.log_points[l];
      std::vector<Complex> truth;
      for (const auto& e : lp.entries)
        if (e.value != Complex{}) truth.push_back(e.value);
      worst = std::max({worst, pos(est.punctures[l].position, lp.position),
                        max_match(est.punctures[l].residues, truth, rel)});
    }
    for (std::size_t j = 0; j < est.infinity.size(); ++j) {
      const auto& g = predicted.inf_groups[j];
      std::vector<Complex> truth;
      for (const auto& e : g.entries) truth.push_back(e.value);
      worst = std::max({worst, pos(est.infinity[j].xi, g.xi), max_match(est.infinity[j].residues, truth, rel)});
    }
  }
  return {shape_fail == 0 && worst <= kRelative,
          std::to_string(corpus.size()) + " fields, shape failures " + std::to_string(shape_fail) + ", max rel error " + fmt(worst)};
}

// 7 -------------------------------------------------------------------------

bool brute_force_critical(Complex mu, double beta) {
  // nu imaginary makes nu^2 <= 0, so a solution needs both squares to vanish.
  for (int n = -1000; n <= 1000; ++n) {
    const double a = mu.real() - beta;
    const double b = std::norm(static_cast<double>(n) + mu);
    if (a * a + b == 0.0) return true;
  }
  return false;
}

Outcome criterion_dictionary() {
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> w(0.0, 1.0);
  double worst = 0.0;
  int weight_range_fail = 0;
  for (int i = 0; i < 10000; ++i) {
    const double re = u(rng);
    const WeightedEigen c{{re, u(rng)}, w(rng)};
    const auto h = connection_to_higgs(c);
    if (!(h.weight >= 0.0 && h.weight < 1.0)) ++weight_range_fail;
    const auto back = higgs_to_connection(h);
    worst = std::max({worst, std::abs(back.value - c.value), std::abs(back.weight - c.weight)});
    const auto again = connection_to_higgs(back);
    worst = std::max({worst, std::abs(again.value - h.value), std::abs(again.weight - h.weight)});
  }
  std::uniform_real_distribution<double> big(-100.0, 100.0);
  std::uniform_int_distribution<int> pick(0, 3), ints(-100, 100);
  int disagreements = 0, trues = 0;
  for (int i = 0; i < 10000; ++i) {
    Complex mu;
    double beta = w(rng);
    switch (pick(rng)) {
      case 0:
        mu = {big(rng), big(rng)};
        break;
      case 1:  // integral real mu
        mu = {static_cast<double>(ints(rng)), 0.0};
        beta = 0.0;
        break;
      case 2:  // Re mu = beta
        mu = {beta, 0.0};
        break;
      default:
        mu = {0.0, 0.0};
        beta = (i % 2 == 0) ? 0.0 : beta;
    }
    const bool expected = brute_force_critical(mu, beta);
    trues += expected ? 1 : 0;
    if (critical_weight_zero(mu, beta) != expected) ++disagreements;
  }
  return {worst <= kExact && weight_range_fail == 0 && disagreements == 0,
          "roundtrip max error " + fmt(worst) + ", weight range failures " + std::to_string(weight_range_fail) +
              ", critical-weight disagreements " + std::to_string(disagreements) + " (" + std::to_string(trues) +
              " critical cases)"};
}

// 8 -------------------------------------------------------------------------

Outcome criterion_local() {
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> w(0.0, 1.0);
  auto cz = [&] {
    const double re = u(rng);
    return Complex{re, u(rng)};
  };
  double gauge = 0.0;
  for (int i = 0; i < 1000; ++i) {
    LocalForm omega = LocalForm::zero(3);
    for (auto* m : {&omega.dr_over_r, &omega.dtheta, &omega.dz, &omega.dzbar}) *m = CMatrix::Random(3, 3);
    gauge = std::max(gauge, gauge_relation_check(omega, cz(), cz()));
  }
  double split = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<WeightedEigen> entries;
    for (int k = 0; k < 3; ++k) entries.push_back({cz(), w(rng)});
    const PolarPoint pt{1e-3 + 2.0 * w(rng), 2.0 * std::numbers::pi * w(rng)};
    const auto m = local_models_at(entries, Picture::connection, pt);
    split = std::max(split, (m.full - (m.unitary + m.selfadjoint)).max_abs());
  }
  return {gauge <= kGauge && split <= kPolar, "gauge residual " + fmt(gauge) + ", polar split residual " + fmt(split)};
}

// 9 -------------------------------------------------------------------------

/// Connection data with dyadic values chosen so that deg equals the
/// residue sum and the parabolic degree vanishes.
ConnectionData gauss_chern_instance(std::mt19937_64& rng) {
  auto dyadic = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo * 64, hi * 64)(rng) / 64.0; };
  for (;;) {
    const int r = std::uniform_int_distribution<int>(1, 4)(rng);
    const int n = std::uniform_int_distribution<int>(1, 3)(rng);
    ConnectionData cd;
    cd.rank = r;
    std::vector<double*> weights;
    for (int j = 0; j < n; ++j) {
      LogPoint lp{{dyadic(-2, 2), dyadic(-2, 2)}, {}};
      for (int k = 0; k < r; ++k) lp.entries.push_back({{dyadic(-2, 2), dyadic(-1, 1)}, 0.0});
      cd.log_points.push_back(std::move(lp));
    }
    cd.inf_groups.push_back({{1.0, 0.0}, {}});
    for (int k = 0; k < r; ++k) cd.inf_groups[0].entries.push_back({{dyadic(-2, 2), dyadic(-1, 1)}, 0.0});
    for (auto& lp : cd.log_points)
      for (auto& e : lp.entries) weights.push_back(&e.weight);
    for (auto& e : cd.inf_groups[0].entries) weights.push_back(&e.weight);
    const int total = static_cast<int>(weights.size());
    if (total < 2) continue;
    const int k = std::uniform_int_distribution<int>(1, total - 1)(rng);
    // Weights in [0,1) summing to k.
    double sum = 0.0;
    for (int i = 0; i + 1 < total; ++i) {
      *weights[static_cast<std::size_t>(i)] = std::uniform_int_distribution<int>(0, 63)(rng) / 64.0;
      sum += *weights[static_cast<std::size_t>(i)];
    }
    const double last = k - sum;
    if (last < 0.0 || last >= 1.0) continue;
    *weights.back() = last;
    cd.degree = -k;
    // Adjust one infinity residue so that deg = sum Re mu_inf - sum Re mu_j.
    double inf_sum = 0.0, fin_sum = 0.0;
    for (const auto& e : cd.inf_groups[0].entries) inf_sum += e.value.real();
    for (const auto& lp : cd.log_points)
      for (const auto& e : lp.entries) fin_sum += e.value.real();
    cd.inf_groups[0].entries[0].value += Complex{cd.degree - (inf_sum - fin_sum), 0.0};
    return cd;
  }
}

Outcome criterion_realizability() {
  std::mt19937_64 rng(909);
  int clean_fail = 0, flag_fail = 0;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto cd = gauss_chern_instance(rng);
    const auto rep = realizability_checks(cd, kExact);
    worst = std::max({worst, std::abs(rep.residue_residual), std::abs(rep.pardeg_residual)});
    if (!rep.residue_ok || !rep.pardeg_ok) ++clean_fail;

    auto shifted = cd;
    shifted.inf_groups[0].entries[0].value += 0.5;
    const auto a = realizability_checks(shifted, kExact);
    if (a.residue_ok || std::abs(a.residue_residual - (-0.5)) > kExact || !a.pardeg_ok) ++flag_fail;

    auto reweighted = cd;
    auto& e = reweighted.inf_groups[0].entries[0];
    const double delta = e.weight < 0.5 ? 0.25 : -0.25;
    e.weight += delta;
    const auto b = realizability_checks(reweighted, kExact);
    if (b.pardeg_ok || std::abs(b.pardeg_residual - delta) > kExact || !b.residue_ok) ++flag_fail;

    auto degree = cd;
    degree.degree += 1;
    const auto c = realizability_checks(degree, kExact);
    if (c.residue_ok || c.pardeg_ok || std::abs(c.residue_residual - 1.0) > kExact ||
        std::abs(c.pardeg_residual - 1.0) > kExact)
      ++flag_fail;
  }
  return {clean_fail == 0 && flag_fail == 0 && worst <= kExact,
          "200 instances, clean failures " + std::to_string(clean_fail) + ", max clean residual " + fmt(worst) +
              ", perturbation misreports " + std::to_string(flag_fail)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "involution", criterion_involution},
      {2, "bookkeeping", criterion_bookkeeping},
      {3, "spectral fiber", criterion_fiber},
      {4, "puncture asymptotics", criterion_puncture},
      {5, "infinity asymptotics", criterion_infinity},
      {6, "transformed field", criterion_transformed},
      {7, "dictionary and critical weights", criterion_dictionary},
      {8, "local identities", criterion_local},
      {9, "realizability warnings", criterion_realizability},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %d %-32s %s  %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/9 criteria pass\n", 9 - failed);
  return failed == 0 ? 0 : 1;
}
