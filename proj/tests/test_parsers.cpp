#include <gtest/gtest.h>

#include <functional>
#include <string>
#include <vector>

#include "edgeform/parsers.hpp"
#include "edgeform/prompts.hpp"

using namespace edgeform;

TEST(Feedback, NoRevisionExample) {
  const VerificationVerdict v = parse_feedback_json(R"({"feedback": false, "reason": "Grid matches user request."})");
  EXPECT_TRUE(v.consistent);
  EXPECT_EQ(v.reason, "Grid matches user request.");
}

TEST(Feedback, RevisionExample) {
  const VerificationVerdict v =
      parse_feedback_json(R"({"feedback": true, "reason": "One cluster but multiple groups requested."})");
  EXPECT_FALSE(v.consistent);
  EXPECT_EQ(v.reason, "One cluster but multiple groups requested.");
}

TEST(Feedback, FencedOutputAccepted) {
  const VerificationVerdict v = parse_feedback_json("```json\n{\"feedback\": false, \"reason\": \"ok\"}\n```\n");
  EXPECT_TRUE(v.consistent);
}

TEST(MotionDescriptor, FullSchema) {
  const Intent in = parse_motion_descriptor(
      R"({"mode": "track", "tracking": true, "groups": ["car1", "car2", "car3"], "formation": "grid", "even_split": true, "spacing": 2})");
  EXPECT_EQ(in.mode, Mode::track);
  ASSERT_EQ(in.groups.size(), 3u);
  EXPECT_EQ(in.groups[0].target, 0);
  EXPECT_EQ(in.groups[2].target, 2);
  EXPECT_EQ(in.formation, Shape::grid);
  EXPECT_TRUE(in.even_split);
  EXPECT_DOUBLE_EQ(in.spacing, 2.0);
}

TEST(MotionDescriptor, Defaults) {
  const Intent in = parse_motion_descriptor(R"({"mode": "stationary", "tracking": false})");
  EXPECT_EQ(in.mode, Mode::stationary);
  EXPECT_EQ(in.formation, Shape::grid);
  EXPECT_FALSE(in.even_split);
  EXPECT_DOUBLE_EQ(in.spacing, 2.0);
  EXPECT_TRUE(in.groups.empty());
}

TEST(MotionDescriptor, PerGroupObjects) {
  const Intent in = parse_motion_descriptor(
      R"({"mode": "track", "tracking": true, "groups": [{"target": "car1", "formation": "circle"}, {"target": 1, "formation": "square", "count": 4}], "spacing": 3.5})");
  ASSERT_EQ(in.groups.size(), 2u);
  EXPECT_EQ(in.groups[0].formation, Shape::circle);
  EXPECT_EQ(in.groups[1].target, 1);
  EXPECT_EQ(in.groups[1].count, 4);
  EXPECT_DOUBLE_EQ(in.spacing, 3.5);
}

TEST(FormationCsv, FourRows) {
  const FormationTemplate t = parse_formation_csv("id,x,y,z\n0,-1,-1,5\n1,1,-1,5\n2,-1,1,5\n3,1,1,5\n", 4);
  ASSERT_EQ(t.size(), 4);
  EXPECT_EQ(Vec3(t.offsets.col(0)), Vec3(-1, -1, 5));
  EXPECT_EQ(Vec3(t.offsets.col(3)), Vec3(1, 1, 5));
}

TEST(FormationCsv, RowsOutOfOrderKeyedById) {
  const FormationTemplate t = parse_formation_csv("id,x,y,z\n1,2,0,0\n0,0,0,0\n", 2);
  EXPECT_EQ(Vec3(t.offsets.col(1)), Vec3(2, 0, 0));
}

TEST(Corrupted, EveryFixtureRaisesTypedError) {
  struct Case {
    const char* name;
    std::function<void()> call;
  };
  const auto md = [](std::string s) { return [s] { (void)parse_motion_descriptor(s); }; };
  const auto csv = [](std::string s, int n) { return [s, n] { (void)parse_formation_csv(s, n); }; };
  const auto fb = [](std::string s) { return [s] { (void)parse_feedback_json(s); }; };
  const std::vector<Case> cases = {
      {"md_prose_prefix", md(R"(Sure! {"mode": "track", "tracking": true})")},
      {"md_trailing_text", md(R"({"mode": "track", "tracking": true} Let me know!)")},
      {"md_truncated", md(R"({"mode": "track", "tracking": tr)")},
      {"md_empty", md("")},
      {"md_missing_mode", md(R"({"tracking": false, "formation": "grid"})")},
      {"md_unknown_mode", md(R"({"mode": "hover", "tracking": false})")},
      {"md_tracking_mismatch", md(R"({"mode": "track", "tracking": false})")},
      {"md_spacing_string", md(R"({"mode": "stationary", "tracking": false, "spacing": "two"})")},
      {"md_unknown_shape", md(R"({"mode": "stationary", "tracking": false, "formation": "hexagon"})")},
      {"md_groups_not_list", md(R"({"mode": "track", "tracking": true, "groups": 7})")},
      {"md_array_root", md(R"(["track", "car1"])")},
      {"md_two_objects", md(R"({"mode": "stationary"}{"mode": "track"})")},
      {"csv_no_header", csv("0,0,0,0\n1,1,0,0\n", 2)},
      {"csv_too_few_rows", csv("id,x,y,z\n0,0,0,0\n", 2)},
      {"csv_non_numeric", csv("id,x,y,z\n0,0,zero,0\n1,1,0,0\n", 2)},
      {"csv_duplicate_id", csv("id,x,y,z\n0,0,0,0\n0,1,0,0\n", 2)},
      {"csv_duplicate_point", csv("id,x,y,z\n0,1,1,0\n1,1,1,0\n", 2)},
      {"csv_missing_field", csv("id,x,y,z\n0,0,0\n1,1,0,0\n", 2)},
      {"fb_string_flag", fb(R"({"feedback": "false", "reason": "fine"})")},
      {"fb_missing_reason", fb(R"({"feedback": true})")},
  };
  ASSERT_EQ(cases.size(), 20u);
  for (const Case& c : cases) {
    EXPECT_THROW(c.call(), ParseError) << c.name;
  }
}

TEST(Corrupted, ErrorCarriesOffset) {
  try {
    (void)parse_motion_descriptor(R"({"mode": "track"} trailing)");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GE(e.offset(), 17);
  }
}

TEST(Unfence, StripsOneFence) {
  EXPECT_EQ(unfence("  ```csv\nid,x,y,z\n0,0,0,0\n```  "), "id,x,y,z\n0,0,0,0");
  EXPECT_EQ(unfence("{\"a\":1}"), "{\"a\":1}");
}

TEST(Prompts, PlaceholdersFilled) {
  const PromptTemplate& t = prompt_template(PromptName::auto_correction);
  const std::string s = fill_prompt(t, {{"USER_TEXT", "make a grid"}, {"FEEDBACK_CSV", "# group 0\nid,x,y,z"}});
  EXPECT_NE(s.find("make a grid"), std::string::npos);
  EXPECT_EQ(s.find("{USER_TEXT}"), std::string::npos);
  EXPECT_NE(s.find(R"({"feedback": true, "reason": "One cluster but multiple groups requested."})"), std::string::npos);
  EXPECT_THROW(fill_prompt(t, {{"USER_TEXT", "x"}}), ParameterError);
}

TEST(Prompts, MotionDescriptorRules) {
  const PromptTemplate& t = prompt_template(PromptName::motion_descriptor);
  EXPECT_EQ(t.format, OutputFormat::json);
  for (const char* key : {"\"mode\"", "\"tracking\"", "\"formation\"", "\"even_split\"", "\"spacing\"", "Output JSON only."})
    EXPECT_NE(t.text.find(key), std::string::npos) << key;
  EXPECT_EQ(prompt_template(PromptName::formation_instruction).format, OutputFormat::csv);
}
