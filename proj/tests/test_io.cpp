#include "support.hpp"

#include <gtest/gtest.h>

using namespace nahmkit;
using nahmkit::testing::t1;

namespace {

std::string parse_message(const std::string& text) {
  try {
    (void)parse_spec_text(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return {};
}

const char* kMinimal = R"({
  "kind": "higgs", "rank": 1, "degree": 0,
  "log_points": [{"position": [0, 0], "entries": [{"value": [0.5, 0], "weight": 0.25}]}],
  "inf_groups": [{"xi": [1, 0], "entries": [{"value": [0.5, 0], "weight": 0.25}]}]
})";

}  // namespace

TEST(Spec, ReadsReferenceFile) {
  const auto s = read_spec_file(NAHMKIT_SPEC_DIR "/t1.json");
  EXPECT_EQ(s.kind, DataKind::higgs);
  EXPECT_EQ(s.higgs, t1());
  EXPECT_FALSE(s.field.has_value());
}

TEST(Spec, ReadsFieldBlock) {
  const auto s = read_spec_file(NAHMKIT_SPEC_DIR "/t1r.json");
  ASSERT_TRUE(s.field.has_value());
  EXPECT_EQ(s.field->mode, "diagonal");
}

TEST(Spec, MinimalAndScalarValues) {
  auto j = Json::parse(kMinimal);
  j["log_points"][0]["position"] = 2.5;
  const auto s = parse_spec(j);
  EXPECT_EQ(s.higgs.log_points[0].position, Complex{2.5});
}

TEST(Spec, ErrorsCarryPaths) {
  auto bad = [](const std::function<void(Json&)>& edit) {
    auto j = Json::parse(kMinimal);
    edit(j);
    return parse_message(j.dump());
  };
  EXPECT_NE(bad([](Json& j) { j.erase("rank"); }).find("$: missing key \"rank\""), std::string::npos);
  EXPECT_NE(bad([](Json& j) { j["kind"] = "other"; }).find("$.kind"), std::string::npos);
  EXPECT_NE(bad([](Json& j) { j["log_points"][0]["entries"][0]["value"] = "x"; })
                .find("$.log_points[0].entries[0].value"),
            std::string::npos);
  EXPECT_NE(bad([](Json& j) { j["inf_groups"][0]["xi"] = Json::array({1, "y"}); }).find("$.inf_groups[0].xi[1]"),
            std::string::npos);
  EXPECT_NE(bad([](Json& j) { j["inf_groups"][0]["entries"][0]["weight"] = 1.5; }).find("outside [0,1)"),
            std::string::npos);
  EXPECT_NE(bad([](Json& j) { j["field"] = {{"mode", "sparse"}}; }).find("$.field.mode"), std::string::npos);
  EXPECT_NE(parse_message("{ not json").find("invalid JSON"), std::string::npos);
}

TEST(Spec, MissingFileIsParseError) {
  EXPECT_THROW((void)read_spec_file("/nonexistent/spec.json"), ParseError);
}

TEST(Report, OutputBlockRoundTrips) {
  const auto rep = make_transform_report(t1());
  const Json j = to_json(rep);
  const auto again = parse_spec(j["output"]);
  ASSERT_EQ(again.kind, DataKind::higgs);
  EXPECT_EQ(again.higgs, rep.output);
  const auto back = inverse_transform(again.higgs);
  const auto m = data_match(back, t1(), 1e-12);
  EXPECT_TRUE(m.match);
  EXPECT_EQ(j["r_hat"], 2);
  EXPECT_EQ(j["involution"]["pass"], true);
}

TEST(Report, ConnectionRoundTrip) {
  const auto cd = higgs_to_connection(t1());
  const Json j = to_json(cd);
  const auto s = parse_spec(j);
  ASSERT_EQ(s.kind, DataKind::connection);
  EXPECT_EQ(s.connection, cd);
}

TEST(Report, SerializationIsDeterministic) {
  EXPECT_EQ(to_json(make_transform_report(t1())).dump(2), to_json(make_transform_report(t1())).dump(2));
}

TEST(Csv, FormatAndOrder) {
  ExplicitHiggsField f;
  f.leading = CMatrix::Zero(1, 1);
  f.punctures = {0.0};
  f.residues = {CMatrix::Constant(1, 1, 0.5)};
  const std::vector<Complex> path{2.0, 3.0, 4.0};
  const auto csv = branches_csv(track_branches(f, path, TrackOptions{40, true}));
  const std::string want = std::string(csv_header) + "\n" +
                           "2,0,0,0.5,0,1\n"
                           "3,0,0,0.33333333333333331,0,1\n"
                           "4,0,0,0.25,0,1\n";
  EXPECT_EQ(csv, want);
}

TEST(Csv, RowsOrderedByNodeThenLabel) {
  std::vector<BranchPath> br(2);
  br[0].label = {BranchLabel::Kind::group, 1, 0};
  br[1].label = {BranchLabel::Kind::group, 0, 0};
  for (auto& b : br) b.samples = {{1.0, 2.0, 1}, {3.0, 4.0, 1}};
  const auto csv = branches_csv(br);
  const auto first = csv.find("g0.0"), second = csv.find("g1.0");
  ASSERT_NE(first, std::string::npos);
  EXPECT_LT(first, second);
  EXPECT_THROW((void)branches_csv({}), Error);
}

TEST(Csv, SeventeenDigits) {
  EXPECT_EQ(format_real(0.1), "0.10000000000000001");
  EXPECT_EQ(format_real(-2.0), "-2");
}
