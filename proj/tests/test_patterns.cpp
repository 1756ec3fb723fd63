// Engine behavior: the worked single-machine fixture, cross-engine consistency
// properties on adversarial random stores, staged pipelines, and parallelism.

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "test_util.hpp"
#include "trace_enrich/oracle.hpp"
#include "trace_enrich/patterns.hpp"

using namespace trace_enrich;

namespace {

GraphStore fixture() { return testutil::load_inline(testutil::figure_fixture()); }

// Parses a one-instance pipeline, requires it to validate, runs it.
PatternResult run_one(const GraphStore& store, const std::string& dsl) {
    Pipeline p = parse_pipeline_text(dsl);
    EXPECT_TRUE(validate_pipeline(p, store.taxonomy()).empty());
    return run_pattern(store, p.instances.at(0));
}

const Fact* fact_on(const GraphStore& store, const PatternResult& r, const std::string& id) {
    for (const Fact& f : r.facts)
        if (fact_subject_id(store, f) == id) return &f;
    return nullptr;
}

std::vector<std::string> ids(const GraphStore& store, const PatternResult& r) {
    return fact_identities(store, r.facts);
}

}  // namespace

TEST(WorkedExample, AlarmsPerVisit) {
    GraphStore s = fixture();
    PatternResult r = run_one(
        s, "pattern interval_count as t { start = TrackIn end = TrackOut counted = Alarm }\n");
    EXPECT_EQ(r.counters.intervals, 2u);  // (m1,j1) and (buf,p1)
    ASSERT_EQ(r.facts.size(), 2u);
    const Fact* visit = fact_on(s, r, "e07");
    ASSERT_NE(visit, nullptr);
    EXPECT_EQ(visit->value, 2.0);
    EXPECT_EQ(visit->key, MeasureKey::Count);
    EXPECT_TRUE(visit->prov.hasInterval);
    EXPECT_EQ(s.event(visit->prov.intervalStart).id, "e02");
    EXPECT_EQ(s.event(visit->prov.intervalEnd).id, "e07");
    ASSERT_EQ(visit->prov.inputs.size(), 2u);
    EXPECT_EQ(s.event(visit->prov.inputs[0]).id, "e04");
    EXPECT_EQ(s.event(visit->prov.inputs[1]).id, "e06");
    const Fact* buffered = fact_on(s, r, "e11");  // no alarms at the buffer
    ASSERT_NE(buffered, nullptr);
    EXPECT_EQ(buffered->value, 0.0);
}

TEST(WorkedExample, AverageSensorValue) {
    GraphStore s = fixture();
    PatternResult r = run_one(
        s,
        "pattern interval_aggregate as t { start = TrackIn end = TrackOut "
        "eventType = Observation attribute = value agg = avg }\n");
    // The buffer interval holds no observations; value aggregations stay silent there.
    ASSERT_EQ(r.facts.size(), 1u);
    EXPECT_EQ(fact_subject_id(s, r.facts[0]), "e07");
    EXPECT_EQ(r.facts[0].value, 11.0);
    EXPECT_EQ(r.counters.intervals, 2u);
}

TEST(WorkedExample, TimeSinceMaintenance) {
    GraphStore s = fixture();
    PatternResult r = run_one(
        s,
        "pattern elapsed_preceding as t { eventType = TrackIn preceding = Maintenance "
        "matchOn = [Resource] }\n");
    ASSERT_EQ(r.facts.size(), 1u);  // the buffer TrackIn has no prior maintenance
    EXPECT_EQ(fact_subject_id(s, r.facts[0]), "e02");
    EXPECT_EQ(r.facts[0].value, 2.0);
    EXPECT_EQ(r.facts[0].key, MeasureKey::Elapsed);
    EXPECT_EQ(r.facts[0].unit, Unit::Millis);
    EXPECT_EQ(r.counters.unmatched, 1u);
}

TEST(WorkedExample, DowntimeUntilRecovery) {
    GraphStore s = fixture();
    PatternResult r = run_one(
        s,
        "pattern elapsed_succeeding_same_type as t { eventType = SwitchState "
        "filterAttribute = state filterValue = Failed matchOn = [Resource] }\n");
    ASSERT_EQ(r.facts.size(), 1u);  // only the Failed event opens a downtime
    EXPECT_EQ(fact_subject_id(s, r.facts[0]), "e08");
    EXPECT_EQ(r.facts[0].value, 4.0);
}

TEST(WorkedExample, ProductThroughputTime) {
    GraphStore s = fixture();
    PatternResult r = run_one(
        s,
        "pattern elapsed_maximum as t { start = TrackIn end = TrackOut "
        "entityType = Product }\n");
    ASSERT_EQ(r.facts.size(), 1u);
    EXPECT_FALSE(r.facts[0].subjectIsEvent);
    EXPECT_EQ(fact_subject_id(s, r.facts[0]), "p1");
    EXPECT_EQ(r.facts[0].value, 12.0);
    EXPECT_EQ(r.facts[0].key, MeasureKey::ElapsedMax);
}

TEST(WorkedExample, TwoStageDowntimeAverage) {
    GraphStore s = fixture();
    Pipeline p = parse_pipeline_text(
        "pattern elapsed_succeeding_same_type as downtime {\n"
        "  eventType = SwitchState filterAttribute = state filterValue = Failed\n"
        "  matchOn = [Resource]\n"
        "}\n"
        "pattern interval_aggregate as avg_downtime {\n"
        "  start = TrackIn end = TrackOut eventType = SwitchState\n"
        "  attribute = \"downtime.elapsed\" agg = avg window = all_per_resource\n"
        "  stage = 2\n"
        "}\n");
    ASSERT_TRUE(validate_pipeline(p, s.taxonomy()).empty());
    RunOutput out = run_pipeline(s, p);
    const Fact* avg = nullptr;
    for (const Fact& f : out.facts.facts)
        if (out.facts.instances[f.instance] == "avg_downtime") avg = &f;
    ASSERT_NE(avg, nullptr);
    EXPECT_FALSE(avg->subjectIsEvent);
    EXPECT_EQ(fact_subject_id(out.store, *avg), "m1");
    EXPECT_EQ(avg->value, 4.0);

    // Stage-0 output was folded into the store the stage-2 engine saw.
    auto e08 = out.store.find_event("e08");
    ASSERT_TRUE(e08.has_value());
    const Scalar* attr = find_attribute(out.store.event(*e08).attributes, "downtime.elapsed");
    ASSERT_NE(attr, nullptr);
    EXPECT_EQ(scalar_as_double(*attr), 4.0);

    // Without between-stage folding the upstream attribute never appears.
    Pipeline lazy = p;
    lazy.materializeBetweenStages = false;
    RunOutput out2 = run_pipeline(s, lazy);
    for (const Fact& f : out2.facts.facts)
        EXPECT_NE(out2.facts.instances[f.instance], "avg_downtime");
}

TEST(WorkedExample, CountSubsumesSubclasses) {
    GraphStore s = fixture();
    PatternResult alarms = run_one(
        s, "pattern interval_count as t { start = TrackIn end = TrackOut counted = Alarm }\n");
    PatternResult all = run_one(
        s, "pattern interval_count as t { start = TrackIn end = TrackOut counted = Event }\n");
    // Boundary events count themselves: e02..e07 holds 7 machine events, e10..e11 two.
    EXPECT_EQ(fact_on(s, all, "e07")->value, 7.0);
    EXPECT_EQ(fact_on(s, all, "e11")->value, 2.0);
    for (const Fact& f : alarms.facts) {
        const Fact* wider = fact_on(s, all, fact_subject_id(s, f));
        ASSERT_NE(wider, nullptr);
        EXPECT_GE(wider->value, f.value);
    }
}

TEST(Property, CountAggregateMatchesIntervalCount) {
    for (std::uint64_t seed = 1; seed <= 80; ++seed) {
        GraphStore s = testutil::random_store(seed);
        const Taxonomy& tax = s.taxonomy();
        Rng rng(seed * 31 + 7);
        static const char* classes[] = {"TrackIn", "TrackOut", "Alarm", "Observation",
                                        "SwitchState", "Event"};
        const ClassIdx start = tax.index_of(classes[rng.below(6)]);
        const ClassIdx end = tax.index_of(classes[rng.below(6)]);
        const ClassIdx counted = tax.index_of(classes[rng.below(6)]);
        const bool pairOn = rng.chance(0.5);
        const bool incD = rng.chance(0.5);
        PatternResult byCount =
            p1_interval_count(s, start, end, counted, pairOn, false, incD);
        PatternResult byAgg = p2_interval_aggregate(s, start, end, counted, "value",
                                                    make_agg_spec("count"), "interval",
                                                    pairOn, incD);
        EXPECT_EQ(ids(s, byCount), ids(s, byAgg)) << "seed " << seed;
        EXPECT_EQ(byCount.counters.intervals, byAgg.counters.intervals);
    }
}

TEST(Property, DerivedFlagMatchesStrippedStore) {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        GraphStore s = testutil::random_store(seed);

        // The same graph with every derived edge removed from the data itself.
        std::vector<Entity> entities = s.entities();
        std::vector<Event> events = s.events();
        for (Event& ev : events)
            ev.correlations.erase(std::remove_if(ev.correlations.begin(), ev.correlations.end(),
                                                 [](const Correlation& c) { return c.derived; }),
                                  ev.correlations.end());
        std::vector<PartOfEdge> edges = s.part_of_edges();
        edges.erase(std::remove_if(edges.begin(), edges.end(),
                                   [](const PartOfEdge& e) { return e.derived; }),
                    edges.end());
        GraphStore stripped(s.taxonomy(), std::move(entities), std::move(events),
                            std::move(edges));

        Rng rng(seed);
        for (int k = 0; k < 10; ++k) {
            PatternInstance inst = testutil::random_instance(static_cast<PatternKind>(k), rng);
            PatternResult viaFlag = run_pattern(s, inst, false);
            PatternResult viaData = run_pattern(stripped, inst, true);
            EXPECT_EQ(ids(s, viaFlag), ids(stripped, viaData))
                << "seed " << seed << " pattern " << pattern_name(inst.pattern);
        }
    }
}

TEST(Property, AggregationRelatesAcrossTheRightDirection) {
    int seen = 0;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        GraphStore s = testutil::random_store(seed);
        const ClassIdx agg = s.taxonomy().index_of("Aggregate");
        const ClassIdx any = s.taxonomy().index_of("Entity");
        const bool recursive = seed % 2 == 0;
        PatternResult before = p8_relate_preceding_aggregation(s, agg, any, recursive);
        PatternResult after = p9_relate_succeeding_aggregation(s, agg, any, recursive);
        for (const Fact& f : before.facts) {
            ASSERT_EQ(f.kind, FactKind::Relation);
            ASSERT_EQ(f.prov.inputs.size(), 2u);
            EXPECT_EQ(f.subject, f.prov.inputs[0]);  // subject precedes its aggregation
            EXPECT_LT(f.prov.inputs[0], f.prov.inputs[1]);
            ++seen;
        }
        for (const Fact& f : after.facts) {
            ASSERT_EQ(f.prov.inputs.size(), 2u);
            EXPECT_EQ(f.subject, f.prov.inputs[1]);  // subject follows its aggregation
            EXPECT_LT(f.prov.inputs[0], f.prov.inputs[1]);
            ++seen;
        }
    }
    EXPECT_GT(seen, 100);  // the sweep must actually exercise aggregation events
}

TEST(Property, RecursiveEqualsMaterializedFixpoint) {
    int converged = 0;
    for (std::uint64_t seed = 1; seed <= 24; ++seed) {
        GraphStore s = testutil::random_store(seed);
        const ClassIdx agg = s.taxonomy().index_of("Aggregate");
        const ClassIdx any = s.taxonomy().index_of("ProductionEntity");
        const bool preceding = seed % 2 == 0;
        auto run = [&](const GraphStore& st, bool recursive) {
            return preceding ? p8_relate_preceding_aggregation(st, agg, any, recursive)
                             : p9_relate_succeeding_aggregation(st, agg, any, recursive);
        };
        PatternResult oneShot = run(s, true);
        std::vector<std::string> want = ids(s, oneShot);

        std::set<std::string> got;
        GraphStore cur = s;
        for (int iter = 0; iter < 12; ++iter) {
            PatternResult step = run(cur, false);
            const std::size_t before = got.size();
            for (std::string& id : ids(cur, step)) got.insert(std::move(id));
            if (got.size() == before) {
                ++converged;
                break;
            }
            FactSet fs;
            fs.instances.push_back("t");
            fs.facts = step.facts;
            cur = materialize(cur, std::move(fs)).store;
        }
        EXPECT_EQ(std::vector<std::string>(got.begin(), got.end()), want) << "seed " << seed;
    }
    EXPECT_EQ(converged, 24);  // every fixpoint loop must terminate by itself
}

TEST(Property, EngineAgreesWithReferenceEvaluator) {
    // A focused slice of the big equivalence sweep; the acceptance binary runs
    // the full thousand-store version.
    Rng rng(2024);
    for (std::uint64_t seed = 500; seed < 560; ++seed) {
        GraphStore s = testutil::random_store(seed);
        for (int k = 0; k < 10; ++k) {
            PatternInstance inst = testutil::random_instance(static_cast<PatternKind>(k), rng);
            const bool incD = rng.chance(0.5);
            PatternResult engine = run_pattern(s, inst, incD);
            PatternResult reference = oracle_eval(inst, s, incD);
            EXPECT_EQ(ids(s, engine), ids(s, reference))
                << "seed " << seed << " pattern " << pattern_name(inst.pattern);
        }
    }
}

TEST(Pipeline, ParallelRunsAreByteIdentical) {
    Pipeline pipe = parse_pipeline_text(default_pattern_text());
    for (std::uint64_t seed : {3u, 11u, 29u, 47u}) {
        GraphStore s = testutil::random_store(seed);
        RunOutput serial = run_pipeline(s, pipe, 1);
        RunOutput parallel = run_pipeline(s, pipe, 4);
        std::ostringstream a, b;
        write_facts_stream(serial.store, serial.facts, a);
        write_facts_stream(parallel.store, parallel.facts, b);
        EXPECT_EQ(a.str(), b.str()) << "seed " << seed;
        EXPECT_EQ(serial.warnings, parallel.warnings);
        ASSERT_EQ(serial.reports.size(), parallel.reports.size());
        for (std::size_t i = 0; i < serial.reports.size(); ++i)
            EXPECT_EQ(serial.reports[i].factCount, parallel.reports[i].factCount);
    }
}

TEST(Pipeline, RerunAddsNothingNew) {
    GraphStore s = fixture();
    Pipeline pipe = parse_pipeline_text(default_pattern_text());
    RunOutput first = run_pipeline(s, pipe);
    RunOutput second = run_pipeline(first.store, pipe);
    // Same facts re-derived, nothing beyond them.
    EXPECT_EQ(fact_identities(first.store, first.facts.facts),
              fact_identities(second.store, second.facts.facts));
    MaterializeResult again = materialize(first.store, second.facts);
    EXPECT_EQ(again.store.events().size(), first.store.events().size());
    for (EventIdx i = 0; i < first.store.events().size(); ++i)
        EXPECT_EQ(again.store.event(i).attributes, first.store.event(i).attributes);
}

TEST(Pipeline, EmptyStoreYieldsNoFacts) {
    GraphStore empty(Taxonomy::with_defaults(), {}, {}, {});
    Pipeline pipe = parse_pipeline_text(default_pattern_text());
    RunOutput out = run_pipeline(empty, pipe, 2);
    EXPECT_TRUE(out.facts.facts.empty());
    Rng rng(5);
    for (int k = 0; k < 10; ++k) {
        PatternInstance inst = testutil::random_instance(static_cast<PatternKind>(k), rng);
        EXPECT_TRUE(run_pattern(empty, inst).facts.empty());
    }
}

TEST(Pipeline, ReportsCoverEveryInstanceInOrder) {
    GraphStore s = fixture();
    Pipeline pipe = parse_pipeline_text(default_pattern_text());
    RunOutput out = run_pipeline(s, pipe);
    ASSERT_EQ(out.reports.size(), pipe.instances.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < out.reports.size(); ++i) {
        EXPECT_EQ(out.reports[i].name, pipe.instances[i].name);
        EXPECT_EQ(out.reports[i].pattern, pipe.instances[i].pattern);
        EXPECT_GE(out.reports[i].millis, 0.0);
        total += out.reports[i].factCount;
    }
    EXPECT_GE(total, out.facts.facts.size());  // cross-instance dedup only shrinks
}
