// Data-model tests: taxonomy closure, event total order, store indices,
// FIFO interval pairing, fact normalization, scalar formatting.

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "trace_enrich/facts.hpp"
#include "trace_enrich/store.hpp"
#include "trace_enrich/taxonomy.hpp"

using namespace trace_enrich;

namespace {

GraphStore tiny_store(std::vector<Event> events, std::vector<PartOfEdge> edges = {}) {
    Taxonomy tax = Taxonomy::with_defaults();
    std::vector<Entity> entities;
    for (const char* id : {"a1", "b1", "c1", "d1"}) {
        Entity e;
        e.id = id;
        e.types.push_back(tax.index_of(id[0] == 'a' || id[0] == 'c' ? "Machine" : "Job"));
        entities.push_back(std::move(e));
    }
    return GraphStore(std::move(tax), std::move(entities), std::move(events), std::move(edges));
}

Event mk(const char* id, const char* type, TimestampMs ts, std::vector<Correlation> corr,
         const Taxonomy& tax) {
    Event e;
    e.id = id;
    e.type = tax.index_of(type);
    e.timestamp = ts;
    std::sort(corr.begin(), corr.end(), [](const Correlation& a, const Correlation& b) {
        return a.entity != b.entity ? a.entity < b.entity : a.role < b.role;
    });
    e.correlations = std::move(corr);
    return e;
}

}  // namespace

TEST(Taxonomy, DefaultSubsumption) {
    Taxonomy tax = Taxonomy::with_defaults();
    EXPECT_TRUE(tax.is_subclass(tax.index_of("Machine"), tax.index_of("Resource")));
    EXPECT_TRUE(tax.is_subclass(tax.index_of("TrackIn"), tax.index_of("Event")));
    EXPECT_FALSE(tax.is_subclass(tax.index_of("Machine"), tax.index_of("ProductionEntity")));
    EXPECT_TRUE(tax.is_subclass(tax.index_of("Split"), tax.index_of("Aggregate")));
    EXPECT_TRUE(tax.is_subclass(tax.index_of("Split"), tax.index_of("Event")));  // transitive
    EXPECT_TRUE(tax.is_subclass(tax.index_of("Split"), tax.index_of("Split")));  // reflexive
    EXPECT_TRUE(tax.is_subclass(tax.index_of("Sensor"), tax.index_of("Entity")));
    EXPECT_FALSE(tax.is_subclass(tax.index_of("Resource"), tax.index_of("Machine")));
}

TEST(Taxonomy, UserExtension) {
    Taxonomy tax = Taxonomy::with_defaults();
    tax.add_class("Oven", {"Machine"});
    tax.build_closure();
    EXPECT_TRUE(tax.is_subclass(tax.index_of("Oven"), tax.index_of("Resource")));
    EXPECT_TRUE(tax.is_event_class(tax.index_of("TrackIn")));
    EXPECT_FALSE(tax.is_event_class(tax.index_of("Oven")));
    EXPECT_TRUE(tax.is_entity_class(tax.index_of("Oven")));
}

TEST(Taxonomy, MultiParentDag) {
    Taxonomy tax = Taxonomy::with_defaults();
    tax.add_class("SmartTool", {"Tool", "Sensor"});
    tax.build_closure();
    const ClassIdx st = tax.index_of("SmartTool");
    EXPECT_TRUE(tax.is_subclass(st, tax.index_of("Resource")));
    EXPECT_TRUE(tax.is_subclass(st, tax.index_of("Sensor")));
    auto desc = tax.descendants(tax.index_of("Sensor"));
    EXPECT_NE(std::find(desc.begin(), desc.end(), st), desc.end());
}

TEST(Taxonomy, CycleRejected) {
    Taxonomy tax = Taxonomy::with_defaults();
    tax.add_class("A", {"B"});
    tax.add_class("B", {"A"});
    EXPECT_THROW(tax.build_closure(), DataError);
}

TEST(Taxonomy, UnreachableClassRejected) {
    Taxonomy tax = Taxonomy::with_defaults();
    tax.add_class("Orphan", {});
    EXPECT_THROW(tax.build_closure(), DataError);
}

TEST(Taxonomy, UnknownClassThrows) {
    Taxonomy tax = Taxonomy::with_defaults();
    EXPECT_THROW(tax.index_of("Nope"), DataError);
    EXPECT_FALSE(tax.has_class("Nope"));
    EXPECT_TRUE(tax.has_class("Machine"));
}

TEST(Store, TotalOrderBreaksTimestampTiesById) {
    Taxonomy tax = Taxonomy::with_defaults();
    std::vector<Event> events;
    events.push_back(mk("z9", "Alarm", 5, {{0, Role::None, false}}, tax));
    events.push_back(mk("a1", "Alarm", 5, {{0, Role::None, false}}, tax));
    events.push_back(mk("m5", "Alarm", 4, {{0, Role::None, false}}, tax));
    GraphStore s = tiny_store(std::move(events));
    ASSERT_EQ(s.events().size(), 3u);
    EXPECT_EQ(s.events()[0].id, "m5");  // earlier timestamp first
    EXPECT_EQ(s.events()[1].id, "a1");  // tie broken by id bytes
    EXPECT_EQ(s.events()[2].id, "z9");
    EXPECT_LT(compare_events(s.events()[1], s.events()[2]), 0);
}

TEST(Store, CorrelatedEntitiesFilterRoleDerived) {
    Taxonomy tax = Taxonomy::with_defaults();
    std::vector<Event> events;
    events.push_back(mk("e1", "Split", 1,
                        {{0, Role::Input, false},
                         {1, Role::Output, false},
                         {2, Role::None, true},
                         {3, Role::Output, true}},
                        tax));
    GraphStore s = tiny_store(std::move(events));
    const ClassIdx entity = s.taxonomy().index_of("Entity");
    const ClassIdx machine = s.taxonomy().index_of("Machine");

    auto all = s.correlated_entities(0, entity);
    EXPECT_EQ(all, (std::vector<EntityIdx>{0, 1, 2, 3}));
    auto baseOnly = s.correlated_entities(0, entity, std::nullopt, false);
    EXPECT_EQ(baseOnly, (std::vector<EntityIdx>{0, 1}));
    auto outputs = s.correlated_entities(0, entity, Role::Output);
    EXPECT_EQ(outputs, (std::vector<EntityIdx>{1, 3}));
    auto machines = s.correlated_entities(0, machine);
    EXPECT_EQ(machines, (std::vector<EntityIdx>{0, 2}));

    EXPECT_TRUE(s.correlates(0, 2));
    EXPECT_FALSE(s.correlates_base(0, 2));
    EXPECT_TRUE(s.correlates_base(0, 0));
}

TEST(Store, EventsOfTypeIsConcreteAndDescendantsCloseIt) {
    Taxonomy tax = Taxonomy::with_defaults();
    std::vector<Event> events;
    events.push_back(mk("e1", "Split", 1, {{0, Role::None, false}}, tax));
    events.push_back(mk("e2", "Merge", 2, {{0, Role::None, false}}, tax));
    events.push_back(mk("e3", "Alarm", 3, {{0, Role::None, false}}, tax));
    GraphStore s = tiny_store(std::move(events));
    EXPECT_EQ(s.events_of(0).size(), 3u);
    // The per-entity index is keyed by concrete type; abstract classes hold nothing.
    EXPECT_EQ(s.events_of_type(0, s.taxonomy().index_of("Split")).size(), 1u);
    EXPECT_EQ(s.events_of_type(0, s.taxonomy().index_of("Alarm")).size(), 1u);
    EXPECT_EQ(s.events_of_type(0, s.taxonomy().index_of("Aggregate")).size(), 0u);
    EXPECT_EQ(s.events_of_type(1, s.taxonomy().index_of("Alarm")).size(), 0u);
    // Subsumption queries walk the descendant closure over those lists.
    auto count_subsumed = [&](const char* cls) {
        std::size_t n = 0;
        for (ClassIdx c : s.taxonomy().descendants(s.taxonomy().index_of(cls)))
            n += s.events_of_type(0, c).size();
        return n;
    };
    EXPECT_EQ(count_subsumed("Aggregate"), 2u);
    EXPECT_EQ(count_subsumed("Event"), 3u);
    EXPECT_TRUE(s.event_has_class(0, s.taxonomy().index_of("Aggregate")));
    EXPECT_FALSE(s.event_has_class(2, s.taxonomy().index_of("Aggregate")));
}

TEST(Store, PartOfIndicesAndCycles) {
    GraphStore s = tiny_store({}, {{0, 1, false}, {1, 2, true}});
    EXPECT_EQ(s.wholes_of(0, false), (std::vector<EntityIdx>{1}));
    EXPECT_EQ(s.wholes_of(1, false), (std::vector<EntityIdx>{}));
    EXPECT_EQ(s.wholes_of(1, true), (std::vector<EntityIdx>{2}));
    EXPECT_EQ(s.parts_of(1, false), (std::vector<EntityIdx>{0}));
    EXPECT_TRUE(s.has_part_of(0, 1));
    EXPECT_FALSE(s.has_part_of(1, 0));
    EXPECT_TRUE(s.part_of_would_cycle(2, 0));   // 0⊑1⊑2, adding 2⊑0 closes the loop
    EXPECT_TRUE(s.part_of_would_cycle(0, 0));   // self edge
    EXPECT_FALSE(s.part_of_would_cycle(3, 0));  // fresh edge is fine
}

TEST(Intervals, FifoPairing) {
    Taxonomy tax = Taxonomy::with_defaults();
    std::vector<Event> events;
    events.push_back(mk("s1", "TrackIn", 1, {{0, Role::None, false}}, tax));
    events.push_back(mk("s2", "TrackIn", 2, {{0, Role::None, false}}, tax));
    events.push_back(mk("x1", "TrackOut", 3, {{0, Role::None, false}}, tax));
    events.push_back(mk("x2", "TrackOut", 4, {{0, Role::None, false}}, tax));
    GraphStore s = tiny_store(std::move(events));
    IntervalBuild b = build_intervals(s, s.taxonomy().index_of("TrackIn"),
                                      s.taxonomy().index_of("TrackOut"), false);
    ASSERT_EQ(b.intervals.size(), 2u);
    // FIFO: first end closes the earliest open start.
    EXPECT_EQ(s.event(b.intervals[0].start).id, "s1");
    EXPECT_EQ(s.event(b.intervals[0].end).id, "x1");
    EXPECT_EQ(s.event(b.intervals[1].start).id, "s2");
    EXPECT_EQ(s.event(b.intervals[1].end).id, "x2");
    ASSERT_EQ(b.warnings.size(), 1u);  // x1 closed s1 while s2 was still open
    EXPECT_NE(b.warnings[0].find("overlapping"), std::string::npos);
}

TEST(Intervals, UnmatchedBoundariesWarn) {
    Taxonomy tax = Taxonomy::with_defaults();
    std::vector<Event> events;
    events.push_back(mk("x0", "TrackOut", 1, {{0, Role::None, false}}, tax));
    events.push_back(mk("s1", "TrackIn", 2, {{0, Role::None, false}}, tax));
    GraphStore s = tiny_store(std::move(events));
    IntervalBuild b = build_intervals(s, s.taxonomy().index_of("TrackIn"),
                                      s.taxonomy().index_of("TrackOut"), false);
    EXPECT_TRUE(b.intervals.empty());
    ASSERT_EQ(b.warnings.size(), 2u);
    EXPECT_NE(b.warnings[0].find("unmatched end event 'x0'"), std::string::npos);
    EXPECT_NE(b.warnings[1].find("unmatched start event 's1'"), std::string::npos);
}

TEST(Intervals, PairOnProductionEntitySeparatesGroups) {
    Taxonomy tax = Taxonomy::with_defaults();
    // Two jobs interleaved on one machine: per-job pairing must not cross.
    std::vector<Event> events;
    events.push_back(mk("i1", "TrackIn", 1, {{0, Role::None, false}, {1, Role::None, false}}, tax));
    events.push_back(mk("i2", "TrackIn", 2, {{0, Role::None, false}, {3, Role::None, false}}, tax));
    events.push_back(mk("o1", "TrackOut", 3, {{0, Role::None, false}, {1, Role::None, false}}, tax));
    events.push_back(mk("o2", "TrackOut", 4, {{0, Role::None, false}, {3, Role::None, false}}, tax));
    GraphStore s = tiny_store(std::move(events));
    IntervalBuild b = build_intervals(s, s.taxonomy().index_of("TrackIn"),
                                      s.taxonomy().index_of("TrackOut"), true);
    ASSERT_EQ(b.intervals.size(), 2u);
    EXPECT_TRUE(b.warnings.empty());
    for (const Interval& iv : b.intervals) {
        EXPECT_EQ(iv.resource, 0u);
        EXPECT_EQ(s.event(iv.start).correlations[1].entity,
                  s.event(iv.end).correlations[1].entity);
    }
}

TEST(Intervals, EventWithoutResourceIgnored) {
    Taxonomy tax = Taxonomy::with_defaults();
    std::vector<Event> events;
    events.push_back(mk("s1", "TrackIn", 1, {{1, Role::None, false}}, tax));  // job only
    GraphStore s = tiny_store(std::move(events));
    IntervalBuild b = build_intervals(s, s.taxonomy().index_of("TrackIn"),
                                      s.taxonomy().index_of("TrackOut"), false);
    EXPECT_TRUE(b.intervals.empty());
    EXPECT_TRUE(b.warnings.empty());
}

TEST(Facts, NormalizeDedupsAndOrders) {
    GraphStore s = tiny_store({});
    FactSet set;
    set.instances = {"i0", "i1"};
    Fact a = make_measurement(false, 0, MeasureKey::Count, 2.0, Unit::None,
                              Provenance{PatternKind::IntervalCount, {}, false, 0, 0});
    Fact b = a;  // identical identity, different provenance inputs
    b.prov.inputs.push_back(1);
    Fact c = make_measurement(false, 0, MeasureKey::Count, 3.0, Unit::None,
                              Provenance{PatternKind::IntervalCount, {}, false, 0, 0});
    Fact d = make_relation(true, 0, PredicateKind::CorrelatesTo, 1,
                           Provenance{PatternKind::RelatePreceding, {}, false, 0, 0});
    d.instance = 1;
    set.facts = {d, c, b, a};
    normalize_facts(s, set);
    ASSERT_EQ(set.facts.size(), 3u);  // a == b by identity; value 2 vs 3 kept apart
    EXPECT_EQ(set.facts[0].value, 2.0);
    EXPECT_EQ(set.facts[1].value, 3.0);
    EXPECT_EQ(set.facts[2].kind, FactKind::Relation);
    // First-wins on provenance: 'a' (no inputs) sorts before 'b'.
    EXPECT_TRUE(set.facts[0].prov.inputs.empty());
}

TEST(Facts, IdentityStringsNameSubjects) {
    Taxonomy tax = Taxonomy::with_defaults();
    std::vector<Event> events;
    events.push_back(mk("e4", "Alarm", 1, {{0, Role::None, false}}, tax));
    GraphStore s = tiny_store(std::move(events));
    std::vector<Fact> facts;
    facts.push_back(make_measurement(true, 0, MeasureKey::Count, 2.0, Unit::None,
                                     Provenance{PatternKind::IntervalCount, {}, false, 0, 0}));
    facts.push_back(make_relation(true, 0, PredicateKind::CorrelatesTo, 1,
                                  Provenance{PatternKind::RelatePreceding, {}, false, 0, 0}));
    auto ids = fact_identities(s, facts);
    ASSERT_EQ(ids.size(), 2u);
    EXPECT_EQ(ids[0], "measurement|e4|count|2");
    EXPECT_EQ(ids[1], "relation|e4|correlatesTo|b1");
}

TEST(Scalars, FormatNumberIsCanonical) {
    EXPECT_EQ(format_number(2.0), "2");
    EXPECT_EQ(format_number(2.5), "2.5");
    EXPECT_EQ(format_number(-0.0), "0");
    EXPECT_EQ(format_number(11.0), "11");
    EXPECT_EQ(format_number(-3.25), "-3.25");
    EXPECT_EQ(format_number(1e15), "1000000000000000");
}

TEST(Scalars, NumericCoercionAndEquality) {
    EXPECT_TRUE(scalar_is_numeric(Scalar{std::int64_t{3}}));
    EXPECT_TRUE(scalar_is_numeric(Scalar{2.5}));
    EXPECT_FALSE(scalar_is_numeric(Scalar{true}));
    EXPECT_FALSE(scalar_is_numeric(Scalar{std::string("3")}));
    EXPECT_EQ(scalar_as_double(Scalar{std::int64_t{3}}), 3.0);
    EXPECT_TRUE(scalar_equals(Scalar{std::int64_t{3}}, Scalar{3.0}));
    EXPECT_FALSE(scalar_equals(Scalar{std::string("x")}, Scalar{std::string("y")}));
    EXPECT_TRUE(scalar_equals(Scalar{std::string("x")}, Scalar{std::string("x")}));
}

TEST(Scalars, Iso8601Parses) {
    EXPECT_EQ(parse_iso8601_utc("1970-01-01T00:00:00Z"), std::optional<TimestampMs>{0});
    EXPECT_EQ(parse_iso8601_utc("1970-01-02T00:00:00Z"), std::optional<TimestampMs>{86400000});
    EXPECT_EQ(parse_iso8601_utc("1970-01-01T00:00:00.250Z"), std::optional<TimestampMs>{250});
    EXPECT_EQ(parse_iso8601_utc("2024-01-01T00:00:00Z"), std::optional<TimestampMs>{1704067200000});
    EXPECT_FALSE(parse_iso8601_utc("not-a-date").has_value());
    EXPECT_FALSE(parse_iso8601_utc("1970-13-01T00:00:00Z").has_value());
}
