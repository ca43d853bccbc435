#pragma once

// Command-line front end.  run() returns the process exit code: 0 when all
// checks pass, 1 when a check fails, 2 on malformed input.

#include "nahmkit/fields.hpp"
#include "nahmkit/io.hpp"
#include "nahmkit/nahm.hpp"
#include "nahmkit/spectral.hpp"
#include "nahmkit/verify.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace nahmkit::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_check_failed = 1;
inline constexpr int exit_bad_input = 2;

inline std::uint64_t default_seed() {
  if (const char* s = std::getenv("NAHMKIT_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw ParseError(std::string("NAHMKIT_SEED: not an unsigned integer: ") + s);
    }
  }
  return 1;
}

/// "re,im" or "re".
inline Complex parse_complex(const std::string& text) {
  std::stringstream ss(text);
  std::string a, b;
  std::getline(ss, a, ',');
  std::getline(ss, b);
  try {
    std::size_t used = 0;
    const double re = std::stod(a, &used);
    if (used != a.size()) throw std::invalid_argument(a);
    double im = 0.0;
    if (!b.empty()) {
      im = std::stod(b, &used);
      if (used != b.size()) throw std::invalid_argument(b);
    }
    return {re, im};
  } catch (const std::exception&) {
    throw ParseError("cannot read complex number \"" + text + "\"");
  }
}

/// "re,im;re,im;..."
inline std::vector<Complex> parse_path(const std::string& text) {
  std::vector<Complex> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';'))
    if (!item.empty()) out.push_back(parse_complex(item));
  if (out.empty()) throw ParseError("empty xi path");
  return out;
}

inline HiggsData higgs_view(const SpecFile& s) {
  return s.kind == DataKind::higgs ? s.higgs : connection_to_higgs(s.connection);
}

namespace detail {

inline int cmd_transform(const std::string& path, const std::string& out_path, std::ostream& out) {
  const auto spec = read_spec_file(path);
  Json j;
  if (spec.kind == DataKind::higgs) {
    j = to_json(make_transform_report(spec.higgs));
  } else {
    j = to_json(make_transform_report(spec.connection));
    j["dictionary"] = to_json(dictionary_consistency_report(spec.connection));
  }
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty())
    out << text;
  else
    write_text(out_path, text);
  return exit_ok;
}

inline int cmd_involution(const std::string& path, double tol, std::ostream& out) {
  const auto spec = read_spec_file(path);
  const auto rep = spec.kind == DataKind::higgs ? involution_check(spec.higgs, tol)
                                                : involution_check(spec.connection, tol);
  out << to_json(rep).dump(2) << "\n";
  return rep.pass ? exit_ok : exit_check_failed;
}

inline void print_report(const VerificationReport& rep, bool json, std::ostream& out) {
  if (json) {
    out << to_json(rep).dump(2) << "\n";
    return;
  }
  for (const auto& c : rep.checks)
    if (!c.pass || rep.suite == "spec")
      out << (c.pass ? "PASS " : "FAIL ") << c.name << " residual=" << format_real(c.residual)
          << " tol=" << format_real(c.tolerance) << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
  out << rep.suite << ": " << rep.passed() << "/" << rep.checks.size() << " pass\n";
}

inline int cmd_verify(const std::string& path, std::size_t count, std::uint64_t seed, bool json, bool timing,
                      std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  const auto rep = path.empty() ? verify_corpus(count, seed) : verify_spec(read_spec_file(path), seed);
  print_report(rep, json, out);
  if (timing) {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    err << "wall time " << dt.count() << " s\n";
  }
  return rep.pass() ? exit_ok : exit_check_failed;
}

/// Radial path into center along `direction`, with a loop of `samples`
/// nodes at each radius.
inline std::vector<Complex> around_path(Complex center, std::vector<double> radii, std::size_t samples,
                                        double direction) {
  std::vector<Complex> path;
  for (const double r : radii) {
    if (!(r > 0.0)) throw ParseError("radii must be positive");
    for (std::size_t s = 0; s <= samples; ++s)
      path.push_back(center + std::polar(r, direction + 2.0 * std::numbers::pi * static_cast<double>(s % samples) /
                                                            static_cast<double>(samples)));
  }
  return path;
}

inline int cmd_scan(const std::string& path, const std::string& xi_path, const std::string& around,
                    std::vector<double> radii, std::size_t samples, const std::string& out_path, std::ostream& out) {
  const auto spec = read_spec_file(path);
  const auto model = realize(higgs_view(spec), spec.field);
  const SpectralCurve curve(model.field);
  std::vector<Complex> nodes;
  double near_radius = 0.0;
  if (!xi_path.empty()) {
    nodes = parse_path(xi_path);
  } else {
    if (around.empty()) throw ParseError("spectral-scan needs --xi-path or --around");
    if (radii.empty()) radii = {1e-2, 1e-3};
    if (samples == 0) throw ParseError("--samples must be positive");
    const Complex target = parse_complex(around);
    const auto [l, dist] = curve.nearest_group(target);
    if (curve.groups().empty() || dist > 1e-6 * (1.0 + std::abs(target)))
      throw ParseError("--around " + around + " is not a puncture of the transform");
    std::sort(radii.begin(), radii.end(), std::greater<>());
    nodes = around_path(curve.groups()[l].xi, radii, samples, 0.7);
    near_radius = 2.0 * radii.front();
  }
  auto branches = track_branches(curve, nodes, TrackOptions{40, true});
  label_branches(branches, curve, model.data, 1e2, near_radius);
  const std::string csv = branches_csv(branches);
  if (out_path.empty())
    out << csv;
  else
    write_text(out_path, csv);
  return exit_ok;
}

inline int cmd_local_check(std::size_t count, std::uint64_t seed, std::ostream& out) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_real_distribution<double> w(0.0, 1.0);
  auto cz = [&] {
    const double re = u(rng);
    return Complex{re, u(rng)};
  };
  double gauge = 0.0, split = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    LocalForm omega = LocalForm::zero(2);
    for (auto* m : {&omega.dr_over_r, &omega.dtheta, &omega.dz, &omega.dzbar})
      for (Eigen::Index a = 0; a < 2; ++a)
        for (Eigen::Index b = 0; b < 2; ++b) (*m)(a, b) = cz();
    gauge = std::max(gauge, gauge_relation_check(omega, cz(), cz()));
    const std::vector<WeightedEigen> entries{{cz(), w(rng)}, {cz(), w(rng)}};
    const PolarPoint pt{0.01 + w(rng), 2.0 * std::numbers::pi * w(rng)};
    for (const auto picture : {Picture::connection, Picture::higgs}) {
      const auto m = local_models_at(entries, picture, pt);
      split = std::max(split, (m.full - (m.unitary + m.selfadjoint)).max_abs());
    }
  }
  VerificationReport rep;
  rep.suite = "local";
  rep.seed = seed;
  rep.count = count;
  rep.add("gauge_relation", gauge, 1e-14);
  rep.add("polar_split", split, 1e-12);
  for (const auto& c : rep.checks)
    out << (c.pass ? "PASS " : "FAIL ") << c.name << " residual=" << format_real(c.residual)
        << " tol=" << format_real(c.tolerance) << "\n";
  return rep.pass() ? exit_ok : exit_check_failed;
}

}  // namespace detail

/// Runs one command line; args excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nahm transform of singularity data and spectral checks", "nahmkit"};
  app.require_subcommand(1);

  std::string spec_path, out_path, xi_path, around;
  std::size_t count = 200, samples = 16;
  std::uint64_t seed = 0;
  bool seed_given = false, json = false, timing = false;
  double tol = 1e-12;
  std::vector<double> radii;

  auto* transform = app.add_subcommand("transform", "Transform a spec file and print the report");
  transform->add_option("spec", spec_path, "Spec file (JSON)")->required();
  transform->add_option("--out", out_path, "Write the report here instead of stdout");

  auto* involution = app.add_subcommand("involution", "Check transform^2 = pullback under z -> -z");
  involution->add_option("spec", spec_path, "Spec file (JSON)")->required();
  involution->add_option("--tol", tol, "Matching tolerance");

  auto* verify = app.add_subcommand("verify", "Run the invariant suite on a spec file or a random corpus");
  verify->add_option("spec", spec_path, "Spec file (JSON); omit for a random corpus");
  verify->add_option("--count", count, "Corpus size per picture");
  verify->add_option("--seed", seed, "Seed (default: NAHMKIT_SEED or 1)")->each([&](const std::string&) {
    seed_given = true;
  });
  verify->add_flag("--json", json, "Print the full report as JSON");
  verify->add_flag("--timing", timing, "Print wall time to stderr");

  auto* scan = app.add_subcommand("spectral-scan", "Track spectral points along a path and emit CSV");
  scan->add_option("spec", spec_path, "Spec file (JSON)")->required();
  auto* path_opt = scan->add_option("--xi-path", xi_path, "Path nodes \"re,im;re,im;...\"");
  auto* around_opt = scan->add_option("--around", around, "Puncture of the transform \"re,im\"");
  path_opt->excludes(around_opt);
  scan->add_option("--radii", radii, "Loop radii around the puncture")->delimiter(',');
  scan->add_option("--samples", samples, "Nodes per loop");
  scan->add_option("--out", out_path, "Write the CSV here instead of stdout");

  auto* local = app.add_subcommand("local-check", "Gauge relation and polar model identities");
  local->add_option("--count", count, "Random points");
  local->add_option("--seed", seed, "Seed (default: NAHMKIT_SEED or 1)")->each([&](const std::string&) {
    seed_given = true;
  });

  std::vector<std::string> argv_store{"nahmkit"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return exit_bad_input;
  }

  try {
    if (!seed_given) seed = default_seed();
    if (*transform) return detail::cmd_transform(spec_path, out_path, out);
    if (*involution) return detail::cmd_involution(spec_path, tol, out);
    if (*verify) return detail::cmd_verify(spec_path, count, seed, json, timing, out, err);
    if (*scan) return detail::cmd_scan(spec_path, xi_path, around, radii, samples, out_path, out);
    if (*local) return detail::cmd_local_check(count, seed, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return exit_bad_input;
  } catch (const Error& e) {
    err << "check failed: " << e.what() << "\n";
    return exit_check_failed;
  }
  return exit_bad_input;
}

}  // namespace nahmkit::cli
