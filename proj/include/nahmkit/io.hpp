#pragma once

// JSON spec files and reports, CSV branch tables.

#include "nahmkit/fields.hpp"
#include "nahmkit/moduli.hpp"
#include "nahmkit/nahm.hpp"
#include "nahmkit/spectral.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace nahmkit {

using Json = nlohmann::ordered_json;

enum class DataKind { higgs, connection };

struct FieldSpec {
  std::string mode = "diagonal";  // "diagonal" or "random"
  std::uint64_t seed = 1;
};

struct SpecFile {
  DataKind kind = DataKind::higgs;
  /// Filled for kind == higgs.
  HiggsData higgs;
  /// Filled for kind == connection.
  ConnectionData connection;
  std::optional<FieldSpec> field;
};

/// Parse failure with the JSON path of the offending node.
class ParseError : public Error {
 public:
  using Error::Error;
};

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& path, const std::string& what) {
  throw ParseError(path + ": " + what);
}

inline const Json& member(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) parse_fail(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) parse_fail(path, "missing key \"" + key + "\"");
  return *it;
}

inline double read_real(const Json& j, const std::string& path) {
  if (!j.is_number()) parse_fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) parse_fail(path, "non-finite number");
  return v;
}

inline int read_int(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) parse_fail(path, "expected an integer");
  return j.get<int>();
}

inline Complex read_complex(const Json& j, const std::string& path) {
  if (j.is_number()) return {read_real(j, path), 0.0};
  if (!j.is_array() || j.size() != 2) parse_fail(path, "expected [re, im]");
  return {read_real(j[0], path + "[0]"), read_real(j[1], path + "[1]")};
}

inline std::vector<WeightedEigen> read_entries(const Json& j, const std::string& path) {
  if (!j.is_array()) parse_fail(path, "expected an array");
  std::vector<WeightedEigen> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string p = path + "[" + std::to_string(k) + "]";
    out.push_back({read_complex(member(j[k], "value", p), p + ".value"),
                   read_real(member(j[k], "weight", p), p + ".weight")});
  }
  return out;
}

template <class Side>
SingularityData<Side> read_data(const Json& j) {
  SingularityData<Side> d;
  d.rank = read_int(member(j, "rank", "$"), "$.rank");
  d.degree = read_int(member(j, "degree", "$"), "$.degree");
  const auto& lps = member(j, "log_points", "$");
  if (!lps.is_array()) parse_fail("$.log_points", "expected an array");
  for (std::size_t i = 0; i < lps.size(); ++i) {
    const std::string p = "$.log_points[" + std::to_string(i) + "]";
    d.log_points.push_back({read_complex(member(lps[i], "position", p), p + ".position"),
                            read_entries(member(lps[i], "entries", p), p + ".entries")});
  }
  const auto& gs = member(j, "inf_groups", "$");
  if (!gs.is_array()) parse_fail("$.inf_groups", "expected an array");
  for (std::size_t i = 0; i < gs.size(); ++i) {
    const std::string p = "$.inf_groups[" + std::to_string(i) + "]";
    d.inf_groups.push_back(
        {read_complex(member(gs[i], "xi", p), p + ".xi"), read_entries(member(gs[i], "entries", p), p + ".entries")});
  }
  try {
    validate_structure(d);
  } catch (const Error& e) {
    parse_fail("$", e.what());
  }
  return d;
}

inline Json write_complex(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json write_entries(const std::vector<WeightedEigen>& es) {
  Json a = Json::array();
  for (const auto& e : es) a.push_back({{"value", write_complex(e.value)}, {"weight", e.weight}});
  return a;
}

}  // namespace detail

inline SpecFile parse_spec(const Json& j) {
  SpecFile s;
  const auto& kind = detail::member(j, "kind", "$");
  if (!kind.is_string()) detail::parse_fail("$.kind", "expected a string");
  const auto k = kind.get<std::string>();
  if (k == "higgs") {
    s.kind = DataKind::higgs;
    s.higgs = detail::read_data<HiggsSide>(j);
  } else if (k == "connection") {
    s.kind = DataKind::connection;
    s.connection = detail::read_data<ConnectionSide>(j);
  } else {
    detail::parse_fail("$.kind", "expected \"higgs\" or \"connection\", got \"" + k + "\"");
  }
  if (const auto it = j.find("field"); it != j.end()) {
    FieldSpec f;
    const auto& mode = detail::member(*it, "mode", "$.field");
    if (!mode.is_string()) detail::parse_fail("$.field.mode", "expected a string");
    f.mode = mode.get<std::string>();
    if (f.mode != "diagonal" && f.mode != "random")
      detail::parse_fail("$.field.mode", "expected \"diagonal\" or \"random\"");
    if (const auto sd = it->find("seed"); sd != it->end()) {
      if (!sd->is_number_unsigned()) detail::parse_fail("$.field.seed", "expected a nonnegative integer");
      f.seed = sd->get<std::uint64_t>();
    }
    s.field = f;
  }
  return s;
}

inline SpecFile parse_spec_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  return parse_spec(j);
}

inline SpecFile read_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_spec_text(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

template <class Side>
Json to_json(const SingularityData<Side>& d) {
  Json j;
  j["kind"] = Side::name;
  j["rank"] = d.rank;
  j["degree"] = d.degree;
  j["log_points"] = Json::array();
  for (const auto& lp : d.log_points)
    j["log_points"].push_back({{"position", detail::write_complex(lp.position)},
                               {"entries", detail::write_entries(lp.entries)}});
  j["inf_groups"] = Json::array();
  for (const auto& g : d.inf_groups)
    j["inf_groups"].push_back({{"xi", detail::write_complex(g.xi)}, {"entries", detail::write_entries(g.entries)}});
  return j;
}

inline Json to_json(const CheckReport& r) {
  return {{"pass", r.pass}, {"violations", r.violations}};
}

inline Json to_json(const InvolutionReport& r) {
  Json j;
  j["precondition_ok"] = r.precondition_ok;
  j["precondition_violations"] = r.precondition_violations;
  j["pass"] = r.pass;
  j["rank"] = r.rank;
  j["transformed_rank"] = r.transformed_rank;
  j["rank_recovered"] = r.rank_recovered;
  j["max_distance"] = r.comparison.max_distance;
  j["mismatches"] = r.comparison.mismatches;
  return j;
}

/// The "output" member is itself a valid spec file.
template <class Side>
Json to_json(const TransformReport<Side>& r) {
  Json j;
  j["input"] = to_json(r.input);
  j["output"] = to_json(r.output);
  j["inverse"] = to_json(r.inverse);
  j["r_hat"] = r.r_hat;
  j["induced_degree"] = r.induced_degree;
  j["transformed_degree"] = r.transformed_degree;
  j["induced_weights"] = r.induced_weights;
  j["hypothesis_preserved"] = r.hypothesis_preserved;
  j["involution"] = to_json(r.involution);
  return j;
}

inline Json to_json(const DictionaryReport& r) {
  Json j;
  j["agree"] = r.agree;
  j["max_value_delta"] = r.max_value_delta;
  j["max_weight_delta"] = r.max_weight_delta;
  j["entries"] = Json::array();
  for (const auto& e : r.entries)
    j["entries"].push_back({{"where", e.where},
                            {"via_connection", {{"value", detail::write_complex(e.via_connection.value)},
                                                {"weight", e.via_connection.weight}}},
                            {"via_higgs", {{"value", detail::write_complex(e.via_higgs.value)},
                                           {"weight", e.via_higgs.weight}}},
                            {"value_delta", detail::write_complex(e.value_delta)},
                            {"weight_delta", e.weight_delta}});
  return j;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr const char* csv_header = "xi_re,xi_im,branch,q_re,q_im,coker_dim";

inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// One row per (path node, branch), ordered by node then branch label.
inline std::string branches_csv(const std::vector<BranchPath>& branches) {
  if (branches.empty()) throw Error("branches_csv: no branches");
  std::vector<const BranchPath*> order;
  for (const auto& b : branches) order.push_back(&b);
  std::stable_sort(order.begin(), order.end(), [](const BranchPath* a, const BranchPath* b) {
    const auto ka = std::tuple(static_cast<int>(a->label.kind), a->label.point, a->label.entry);
    const auto kb = std::tuple(static_cast<int>(b->label.kind), b->label.point, b->label.entry);
    return ka < kb;
  });
  std::string out = std::string(csv_header) + "\n";
  const std::size_t nodes = branches.front().samples.size();
  for (std::size_t i = 0; i < nodes; ++i)
    for (const auto* b : order) {
      const auto& s = b->samples.at(i);
      out += format_real(s.xi.real()) + "," + format_real(s.xi.imag()) + "," + b->label.str() + "," +
             format_real(s.q.real()) + "," + format_real(s.q.imag()) + "," + std::to_string(s.coker_dim) + "\n";
    }
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path + ": cannot open for writing");
  out << text;
  if (!out) throw Error(path + ": write failed");
}

}  // namespace nahmkit
