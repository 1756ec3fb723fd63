// Pattern-configuration language tests: grammar, positions on syntax errors,
// semantic validation diagnostics, printing round trips, and the JSON form.

#include <gtest/gtest.h>

#include <fstream>

#include "test_util.hpp"
#include "trace_enrich/dsl.hpp"
#include "trace_enrich/generator.hpp"

using namespace trace_enrich;

namespace {

DslError capture(const std::string& text) {
    try {
        parse_pipeline_text(text);
    } catch (const DslError& e) {
        return e;
    }
    throw std::logic_error("expected DslError for: " + text);
}

std::string read_file_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST(DslParse, AllValueKinds) {
    Pipeline p = parse_pipeline_text(
        "# leading comment\n"
        "pattern interval_aggregate as x {\n"
        "  start = TrackIn   # trailing comment\n"
        "  end = \"TrackOut\"\n"
        "  eventType = Observation\n"
        "  attribute = \"a b\\n\\\"c\\\"\"\n"
        "  agg = count_above\n"
        "  threshold = -2.5\n"
        "  pairOnProductionEntity = false\n"
        "  stage = 3\n"
        "}\n"
        "pattern elapsed_preceding as y { eventType = TrackOut preceding = TrackIn "
        "matchOn = [Machine, Job] }\n");
    ASSERT_EQ(p.instances.size(), 2u);
    const PatternInstance& x = p.instances[0];
    EXPECT_EQ(x.pattern, PatternKind::IntervalAggregate);
    EXPECT_EQ(x.name, "x");
    EXPECT_EQ(x.find("start")->str, "TrackIn");
    EXPECT_EQ(x.find("end")->str, "TrackOut");  // quoted and bare idents coincide
    EXPECT_EQ(x.find("attribute")->str, "a b\n\"c\"");
    EXPECT_EQ(x.find("threshold")->num, -2.5);
    EXPECT_FALSE(x.find("pairOnProductionEntity")->boolean);
    EXPECT_EQ(x.stage, 3);
    const PatternInstance& y = p.instances[1];
    ASSERT_EQ(y.find("matchOn")->list.size(), 2u);
    EXPECT_EQ(y.find("matchOn")->list[1].str, "Job");
    EXPECT_EQ(y.stage, 0);  // default
}

TEST(DslParse, ErrorsCarryExactPositions) {
    // Missing '=': parser stops at the value token.
    DslError e1 = capture(
        "pattern interval_count as a {\n"
        "  start = TrackIn\n"
        "  end TrackOut\n"
        "}\n");
    EXPECT_EQ(e1.line, 3u);
    EXPECT_EQ(e1.col, 7u);
    EXPECT_NE(std::string(e1.what()).find("expected '='"), std::string::npos);

    // Unknown pattern name, position of the name token.
    DslError e2 = capture("pattern bogus as a { }\n");
    EXPECT_EQ(e2.line, 1u);
    EXPECT_EQ(e2.col, 9u);
    EXPECT_NE(std::string(e2.what()).find("unknown pattern 'bogus'"), std::string::npos);

    // Unterminated string points at the opening quote.
    DslError e3 = capture(
        "pattern elapsed_succeeding_same_type as a {\n"
        "  eventType = SwitchState\n"
        "  filterAttribute = state\n"
        "  filterValue = \"Fail\n"
        "}\n");
    EXPECT_EQ(e3.line, 4u);
    EXPECT_EQ(e3.col, 17u);
    EXPECT_NE(std::string(e3.what()).find("unterminated string"), std::string::npos);

    // Unexpected character.
    DslError e4 = capture("pattern interval_count as a @ { }\n");
    EXPECT_EQ(e4.line, 1u);
    EXPECT_EQ(e4.col, 29u);

    // Unknown parameter is rejected at parse time, at the key token.
    DslError e5 = capture(
        "pattern interval_count as a {\n"
        "  begin = TrackIn\n"
        "}\n");
    EXPECT_EQ(e5.line, 2u);
    EXPECT_EQ(e5.col, 3u);
    EXPECT_NE(std::string(e5.what()).find("unknown parameter 'begin'"), std::string::npos);

    // Duplicate parameter.
    DslError e6 = capture(
        "pattern interval_count as a {\n"
        "  start = TrackIn\n"
        "  start = TrackOut\n"
        "}\n");
    EXPECT_EQ(e6.line, 3u);
    EXPECT_EQ(e6.col, 3u);

    // Unclosed block reaches end of input.
    DslError e7 = capture("pattern interval_count as a {\n  start = TrackIn\n");
    EXPECT_NE(std::string(e7.what()).find("expected '}'"), std::string::npos);

    // Malformed number and list punctuation.
    DslError e8 = capture("pattern interval_aggregate as a { threshold = 1e }\n");
    EXPECT_NE(std::string(e8.what()).find("malformed number"), std::string::npos);
    DslError e9 = capture("pattern elapsed_preceding as a { matchOn = [Machine, ] }\n");
    EXPECT_NE(std::string(e9.what()).find("expected a value"), std::string::npos);

    // Structural violations.
    EXPECT_THROW(parse_pipeline_text("interval_count as a { }\n"), DslError);
    EXPECT_THROW(parse_pipeline_text("pattern interval_count a { }\n"), DslError);
    EXPECT_THROW(parse_pipeline_text(
                     "pattern interval_count as a { stage = -1 start = TrackIn }\n"),
                 DslError);
    EXPECT_THROW(parse_pipeline_text(
                     "pattern interval_count as a { stage = 1.5 start = TrackIn }\n"),
                 DslError);
    EXPECT_THROW(parse_pipeline_text("pattern interval_count as a { }\n"
                                     "pattern interval_count as a { }\n"),
                 DslError);
}

TEST(DslValidate, DiagnosticsPerInstanceAndKey) {
    const Taxonomy tax = Taxonomy::with_defaults();
    Pipeline p = parse_pipeline_text(
        "pattern interval_count as a { start = TrackIn end = TrackOut counted = Nope }\n"
        "pattern interval_count as b { start = TrackIn end = TrackOut }\n"
        "pattern interval_aggregate as c { start = TrackIn end = TrackOut "
        "eventType = Observation attribute = value agg = wildly }\n"
        "pattern interval_aggregate as d { start = TrackIn end = TrackOut "
        "eventType = Observation attribute = value agg = count_above }\n"
        "pattern interval_aggregate as e { start = TrackIn end = TrackOut "
        "eventType = Observation attribute = value agg = sum threshold = 3 }\n"
        "pattern elapsed_succeeding_same_type as f { eventType = SwitchState "
        "filterAttribute = state }\n"
        "pattern elapsed_preceding as g { eventType = TrackOut preceding = TrackIn "
        "matchOn = [] }\n"
        "pattern interval_count as h { start = TrackIn end = TrackOut counted = Alarm "
        "pairOnProductionEntity = 3 }\n");
    auto diags = validate_pipeline(p, tax);
    auto has = [&](const char* inst, const char* key, const char* msgPart) {
        for (const Diagnostic& d : diags)
            if (d.instance == inst && d.key == key &&
                d.message.find(msgPart) != std::string::npos)
                return true;
        return false;
    };
    EXPECT_TRUE(has("a", "counted", "not declared"));
    EXPECT_TRUE(has("b", "counted", "missing required parameter"));
    EXPECT_TRUE(has("c", "agg", "invalid value 'wildly'"));
    EXPECT_TRUE(has("d", "threshold", "required for count_above/count_below"));
    EXPECT_TRUE(has("e", "threshold", "only valid for count_above/count_below"));
    EXPECT_TRUE(has("f", "filterValue", "must be given together"));
    EXPECT_TRUE(has("g", "matchOn", "must not be empty"));
    EXPECT_TRUE(has("h", "pairOnProductionEntity", "must be true or false"));
    EXPECT_EQ(diags.size(), 8u);

    // Enum spellings accept '-' for '_'.
    Pipeline ok = parse_pipeline_text(
        "pattern interval_aggregate as i { start = TrackIn end = TrackOut "
        "eventType = Observation attribute = value agg = \"count-above\" threshold = 1 }\n"
        "pattern relate_partof as j { direction = \"whole-to-part\" }\n");
    EXPECT_TRUE(validate_pipeline(ok, tax).empty());

    // Classes from a user-extended taxonomy pass; the same pipeline fails on defaults.
    Taxonomy extended = Taxonomy::with_defaults();
    extended.add_class("Oven", {"Machine"});
    extended.build_closure();
    Pipeline oven = parse_pipeline_text(
        "pattern elapsed_preceding as k { eventType = TrackOut preceding = TrackIn "
        "matchOn = [Oven, Job] }\n");
    EXPECT_TRUE(validate_pipeline(oven, extended).empty());
    auto defaultDiags = validate_pipeline(oven, tax);
    ASSERT_EQ(defaultDiags.size(), 1u);
    EXPECT_NE(defaultDiags[0].message.find("class 'Oven' is not declared"), std::string::npos);
}

TEST(DslPrint, RoundTripIsExact) {
    const std::string text = default_pattern_text();
    Pipeline p1 = parse_pipeline_text(text);
    const std::string printed = print_pipeline(p1);
    Pipeline p2 = parse_pipeline_text(printed);
    EXPECT_EQ(print_pipeline(p2), printed);
    ASSERT_EQ(p1.instances.size(), p2.instances.size());
    for (std::size_t i = 0; i < p1.instances.size(); ++i) {
        EXPECT_EQ(p1.instances[i].name, p2.instances[i].name);
        EXPECT_EQ(p1.instances[i].pattern, p2.instances[i].pattern);
        EXPECT_EQ(p1.instances[i].stage, p2.instances[i].stage);
        EXPECT_EQ(p1.instances[i].params.size(), p2.instances[i].params.size());
    }
    // Strings that are not bare identifiers stay quoted.
    EXPECT_NE(printed.find("attribute = \"downtime.elapsed\""), std::string::npos);
    EXPECT_NE(printed.find("matchOn = [Machine, Job]"), std::string::npos);
}

TEST(DslPrint, RandomInstancesRoundTrip) {
    Rng rng(99);
    Pipeline pipe;
    for (int i = 0; i < 50; ++i) {
        PatternInstance inst =
            testutil::random_instance(static_cast<PatternKind>(i % 10), rng);
        inst.name = "inst_" + std::to_string(i);
        inst.params["stage"] = ParamValue::make_number(i % 4);
        inst.stage = i % 4;
        pipe.instances.push_back(std::move(inst));
    }
    const std::string printed = print_pipeline(pipe);
    Pipeline reparsed = parse_pipeline_text(printed);
    EXPECT_EQ(print_pipeline(reparsed), printed);
    EXPECT_TRUE(validate_pipeline(reparsed, Taxonomy::with_defaults()).empty());
}

TEST(DslJson, ParsesAndMatchesDslForm) {
    const std::string jsonText = R"({
      "useDerived": false,
      "materializeBetweenStages": false,
      "instances": [
        {"pattern": "interval_count", "name": "alarms", "stage": 2,
         "params": {"start": "TrackIn", "end": "TrackOut", "counted": "Alarm",
                    "pairOnProductionEntity": true}},
        {"pattern": "elapsed_preceding", "name": "lead",
         "params": {"eventType": "TrackOut", "preceding": "TrackIn",
                    "matchOn": ["Machine", "Job"]}}
      ]
    })";
    Pipeline p = parse_pipeline_text(jsonText);  // auto-detected by leading '{'
    EXPECT_FALSE(p.useDerived);
    EXPECT_FALSE(p.materializeBetweenStages);
    ASSERT_EQ(p.instances.size(), 2u);
    EXPECT_EQ(p.instances[0].stage, 2);
    EXPECT_TRUE(p.instances[0].find("pairOnProductionEntity")->boolean);
    EXPECT_EQ(p.instances[1].find("matchOn")->list.size(), 2u);
    EXPECT_TRUE(validate_pipeline(p, Taxonomy::with_defaults()).empty());

    const Pipeline dsl = parse_pipeline_text(
        "pattern interval_count as alarms { start = TrackIn end = TrackOut "
        "counted = Alarm pairOnProductionEntity = true stage = 2 }\n"
        "pattern elapsed_preceding as lead { eventType = TrackOut preceding = TrackIn "
        "matchOn = [Machine, Job] }\n");
    EXPECT_EQ(print_pipeline(p), print_pipeline(dsl));

    EXPECT_THROW(parse_pipeline_text(R"({"instance": []})"), DslError);
    EXPECT_THROW(parse_pipeline_text(R"({"instances": [], "extra": 1})"), DslError);
    EXPECT_THROW(parse_pipeline_text(R"({"instances": [{"pattern": "nope", "name": "x"}]})"),
                 DslError);
    EXPECT_THROW(parse_pipeline_text(
                     R"({"instances": [{"pattern": "interval_count", "name": "x",
                         "params": {"start": {"deep": 1}}}]})"),
                 DslError);
    EXPECT_THROW(parse_pipeline_text(R"({"instances": [
        {"pattern": "interval_count", "name": "x", "stage": -2}]})"),
                 DslError);
    EXPECT_THROW(parse_pipeline_text(R"({"useDerived": "yes", "instances": []})"), DslError);
}

TEST(DslPipeline, StageGrouping) {
    Pipeline p = parse_pipeline_text(
        "pattern interval_count as a { start = TrackIn end = TrackOut counted = Alarm "
        "stage = 2 }\n"
        "pattern interval_count as b { start = TrackIn end = TrackOut counted = Alarm }\n"
        "pattern interval_count as c { start = TrackIn end = TrackOut counted = Repair "
        "stage = 2 }\n"
        "pattern interval_count as d { start = TrackIn end = TrackOut counted = Alarm "
        "stage = 5 }\n");
    auto stages = p.stages();
    ASSERT_EQ(stages.size(), 3u);  // stages 0, 2, 5 in ascending order
    EXPECT_EQ(stages[0], (std::vector<std::uint32_t>{1}));
    EXPECT_EQ(stages[1], (std::vector<std::uint32_t>{0, 2}));
    EXPECT_EQ(stages[2], (std::vector<std::uint32_t>{3}));
}

TEST(DslFiles, CheckedInPipelineMatchesBuiltin) {
    const std::string checkedIn = read_file_text(std::string(DEMOS_DIR) + "/use_cases.pattern");
    EXPECT_EQ(checkedIn, default_pattern_text());
    Pipeline p = parse_pipeline_text(checkedIn);
    EXPECT_EQ(p.instances.size(), 23u);
    EXPECT_TRUE(validate_pipeline(p, Taxonomy::with_defaults()).empty());

    const std::string demo = read_file_text(std::string(DEMOS_DIR) + "/single_machine.pattern");
    Pipeline pd = parse_pipeline_text(demo);
    EXPECT_EQ(pd.instances.size(), 5u);
    EXPECT_TRUE(validate_pipeline(pd, Taxonomy::with_defaults()).empty());
}
