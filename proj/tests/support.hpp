#pragma once

// Instance generators shared by the unit and acceptance suites.

#include "nahmkit/nahmkit.hpp"

#include <Eigen/Eigenvalues>

#include <cstdint>
#include <random>
#include <vector>

namespace nahmkit::testing {

/// Rank 2, two log points, two simple infinity groups.
inline HiggsData t1() {
  HiggsData hd;
  hd.rank = 2;
  hd.degree = -1;
  hd.log_points = {{0.0, {{0.0, 0.0}, {0.3, 0.25}}}, {1.0, {{0.0, 0.0}, {Complex{-0.2, 0.1}, 0.6}}}};
  hd.inf_groups = {{2.0, {{0.5, 0.4}}}, {Complex{-1.0, 1.0}, {{-0.35, 0.7}}}};
  return hd;
}

struct GenericInstance {
  ExplicitHiggsField field;
  HiggsData data;
  std::uint64_t seed = 0;
};

/// Random conjugated fields (rank <= max_rank, at most max_points
/// punctures) whose read-off data satisfies the hypothesis with margin:
/// infinity residues at least `margin` from zero and from each other.
/// The disk in which an escaping branch follows its leading term shrinks
/// with |lambda_inf|, so the margin keeps fits at radius 1e-3 asymptotic.
inline std::vector<GenericInstance> generic_corpus(std::size_t count, std::uint64_t seed, std::size_t max_rank = 4,
                                                   std::size_t max_points = 3, double margin = 0.2) {
  std::mt19937_64 rng(seed);
  std::vector<GenericInstance> out;
  HypothesisOptions hyp;
  hyp.distinct_tol = margin;
  hyp.zero_tol = margin;
  while (out.size() < count) {
    const auto rank = std::uniform_int_distribution<std::size_t>(1, max_rank)(rng);
    const auto n = std::uniform_int_distribution<std::size_t>(1, max_points)(rng);
    RandomFieldOptions opt;
    opt.rank = rank;
    opt.punctures = detail::separated_points(rng, n, 2.0, 0.5);
    for (std::size_t j = 0; j < n; ++j)
      opt.regular_ranks.push_back(std::uniform_int_distribution<std::size_t>(0, rank - 1)(rng));
    opt.group_sizes = detail::random_composition(rng, rank, rank);
    opt.seed = rng();
    const auto f = random_field(opt);
    const auto hd = extract_data(f, f.weights);
    if (!check_hypothesis(hd, hyp).pass || !transformability_check(hd).pass) continue;
    out.push_back({f, hd, opt.seed});
  }
  return out;
}

/// Diagonal models in which every coordinate carries exactly one nonzero
/// residue, so each branch is q = p + 2 lambda / (xi - xi_k) in closed form.
inline std::vector<ModelField> closed_form_corpus(std::size_t count, std::uint64_t seed, std::size_t max_rank = 4) {
  std::mt19937_64 rng(seed);
  std::vector<ModelField> out;
  while (out.size() < count) {
    const auto rank = std::uniform_int_distribution<std::size_t>(1, max_rank)(rng);
    const auto n = std::uniform_int_distribution<std::size_t>(1, rank)(rng);
    const auto positions = detail::separated_points(rng, n, 2.0, 0.5);
    const auto xis = detail::separated_points(rng, rank, 3.0, 0.5);
    const auto lambdas = detail::residue_values(rng, rank);
    std::vector<std::size_t> owner(rank);
    for (std::size_t k = 0; k < rank; ++k) owner[k] = k < n ? k : std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    HiggsData hd;
    hd.rank = static_cast<int>(rank);
    hd.degree = 0;
    for (std::size_t j = 0; j < n; ++j) {
      LogPoint lp{positions[j], {}};
      for (std::size_t k = 0; k < rank; ++k)
        lp.entries.push_back(owner[k] == j ? WeightedEigen{lambdas[k], detail::nonzero_weight(rng)} : WeightedEigen{});
      hd.log_points.push_back(std::move(lp));
    }
    for (std::size_t k = 0; k < rank; ++k) hd.inf_groups.push_back({xis[k], {{lambdas[k], detail::nonzero_weight(rng)}}});
    out.push_back(model_field(hd));
  }
  return out;
}

/// Eigenvalues of the diagonal block [b, b+s) of sum_j C_j, computed
/// directly.
inline std::vector<Complex> block_residues(const ExplicitHiggsField& f, Eigen::Index b, Eigen::Index s) {
  CMatrix sum = CMatrix::Zero(f.leading.rows(), f.leading.cols());
  for (const auto& c : f.residues) sum += c;
  Eigen::ComplexEigenSolver<CMatrix> es(sum.block(b, b, s, s));
  std::vector<Complex> out;
  for (Eigen::Index k = 0; k < s; ++k) out.push_back(es.eigenvalues()(k));
  return out;
}

/// Nonzero eigenvalues of C_j, computed directly; the r_j smallest in
/// modulus are dropped, r_j read off the singular values.
inline std::vector<Complex> singular_residues(const CMatrix& c, double rel_tol = 1e-8) {
  Eigen::JacobiSVD<CMatrix> svd(c);
  const auto& sv = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > rel_tol * sv(0)) ++rank;
  Eigen::ComplexEigenSolver<CMatrix> es(c);
  std::vector<Complex> vals;
  for (Eigen::Index k = 0; k < c.rows(); ++k) vals.push_back(es.eigenvalues()(k));
  std::sort(vals.begin(), vals.end(), [](Complex a, Complex b) { return std::abs(a) > std::abs(b); });
  vals.resize(static_cast<std::size_t>(rank));
  return vals;
}

}  // namespace nahmkit::testing
