#pragma once
// The ten enrichment engines and the staged pipeline runner.
//
// Every engine is a pure function over a frozen store returning deduplicated
// facts plus warnings and counters. The runner evaluates stages in ascending
// order, optionally in parallel within a stage, and materializes each stage's
// facts before the next stage runs; outputs are deterministic for any job
// count and any input record order.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "trace_enrich/dsl.hpp"
#include "trace_enrich/facts.hpp"
#include "trace_enrich/ingest.hpp"
#include "trace_enrich/store.hpp"

namespace trace_enrich {

struct PatternCounters {
    std::uint64_t intervals = 0;
    std::uint64_t matches = 0;           // facts emitted before deduplication
    std::uint64_t skippedNonNumeric = 0; // non-numeric attribute values ignored
    std::uint64_t unmatched = 0;         // subjects/boundaries without a partner
};

struct PatternResult {
    std::vector<Fact> facts;  // deduplicated, canonical order; instance field is 0
    std::vector<std::string> warnings;
    PatternCounters counters;
};

namespace detail {

// Sort + dedup an engine's raw emissions (instance name irrelevant: constant).
inline void finalize(const GraphStore& store, PatternResult& r) {
    FactSet tmp;
    tmp.instances.push_back("");
    tmp.facts = std::move(r.facts);
    normalize_facts(store, tmp);
    r.facts = std::move(tmp.facts);
}

// Events of some type ⊑ cls correlated to ent with lo ≤ index ≤ hi, ascending.
inline void collect_events_of(const GraphStore& store, EntityIdx ent, ClassIdx cls, EventIdx lo,
                              EventIdx hi, std::vector<EventIdx>& out) {
    const std::size_t base = out.size();
    for (ClassIdx concrete : store.taxonomy().descendants(cls)) {
        const auto& lst = store.events_of_type(ent, concrete);
        auto from = std::lower_bound(lst.begin(), lst.end(), lo);
        auto to = std::upper_bound(from, lst.end(), hi);
        out.insert(out.end(), from, to);
    }
    std::sort(out.begin() + base, out.end());  // concrete-type lists are disjoint
}

// True when `ev` correlates to at least one entity from each per-class list.
inline bool shares_all(const GraphStore& store,
                       const std::vector<std::vector<EntityIdx>>& matchSets, std::size_t skip,
                       EventIdx ev, bool includeDerived) {
    for (std::size_t m = 0; m < matchSets.size(); ++m) {
        if (m == skip) continue;
        bool any = false;
        for (EntityIdx ent : matchSets[m])
            if (store.correlates(ev, ent, includeDerived)) {
                any = true;
                break;
            }
        if (!any) return false;
    }
    return true;
}

// Descending / ascending nearest-neighbour search over per-(entity, concrete
// type) index lists. Finds the closest event of type ⊑ cls strictly before
// (after) `pivot` that shares one entity of every matchOn class with the
// pivot event. matchSets[0] drives the candidate lists.
inline std::optional<EventIdx> closest_neighbour(const GraphStore& store,
                                                 const std::vector<std::vector<EntityIdx>>& matchSets,
                                                 ClassIdx cls, EventIdx pivot, bool preceding,
                                                 bool includeDerived) {
    struct Cursor {
        const std::vector<EventIdx>* list;
        std::ptrdiff_t pos;  // current element; -1 / size() when exhausted
    };
    std::vector<Cursor> cursors;
    for (EntityIdx ent : matchSets[0]) {
        for (ClassIdx concrete : store.taxonomy().descendants(cls)) {
            const auto& lst = store.events_of_type(ent, concrete);
            if (lst.empty()) continue;
            if (preceding) {
                auto it = std::lower_bound(lst.begin(), lst.end(), pivot);
                const std::ptrdiff_t pos = (it - lst.begin()) - 1;
                if (pos >= 0) cursors.push_back({&lst, pos});
            } else {
                auto it = std::upper_bound(lst.begin(), lst.end(), pivot);
                const std::ptrdiff_t pos = it - lst.begin();
                if (pos < static_cast<std::ptrdiff_t>(lst.size()))
                    cursors.push_back({&lst, pos});
            }
        }
    }
    while (!cursors.empty()) {
        // Best candidate: max index when looking back, min index when looking ahead.
        EventIdx best = preceding ? 0 : kNoIdx;
        for (const Cursor& c : cursors) {
            const EventIdx v = (*c.list)[c.pos];
            if (preceding ? v >= best : v <= best) best = v;
        }
        // A candidate may still fail the full sharing test (other matchOn
        // classes, or a derived-only correlation when those are excluded);
        // then advance every cursor sitting on it and retry.
        bool ok = shares_all(store, matchSets, 0, best, includeDerived);
        if (ok && !includeDerived) {
            ok = false;
            for (EntityIdx ent : matchSets[0])
                if (store.correlates(best, ent, false)) {
                    ok = true;
                    break;
                }
        }
        if (ok) return best;
        for (std::size_t i = 0; i < cursors.size();) {
            Cursor& c = cursors[i];
            if ((*c.list)[c.pos] == best) {
                c.pos += preceding ? -1 : 1;
                if (c.pos < 0 || c.pos >= static_cast<std::ptrdiff_t>(c.list->size())) {
                    cursors.erase(cursors.begin() + i);
                    continue;
                }
            }
            ++i;
        }
    }
    return std::nullopt;
}

inline std::vector<std::vector<EntityIdx>> match_sets(const GraphStore& store, EventIdx ev,
                                                      const std::vector<ClassIdx>& matchOn,
                                                      bool includeDerived) {
    std::vector<std::vector<EntityIdx>> sets;
    sets.reserve(matchOn.size());
    for (ClassIdx m : matchOn)
        sets.push_back(store.correlated_entities(ev, m, std::nullopt, includeDerived));
    return sets;
}

}  // namespace detail

// --- 1: count events inside start/end intervals -----------------------------------

inline PatternResult p1_interval_count(const GraphStore& store, ClassIdx start, ClassIdx end,
                                       ClassIdx counted, bool pairOnProductionEntity = true,
                                       bool countedSharesProductionEntity = false,
                                       bool includeDerived = true) {
    PatternResult r;
    IntervalBuild build =
        build_intervals(store, start, end, pairOnProductionEntity, includeDerived);
    r.warnings = std::move(build.warnings);
    r.counters.intervals = build.intervals.size();
    r.counters.unmatched = r.warnings.size();
    std::vector<EventIdx> inputs;
    for (const Interval& iv : build.intervals) {
        inputs.clear();
        detail::collect_events_of(store, iv.resource, counted, iv.start, iv.end, inputs);
        if (!includeDerived)
            inputs.erase(std::remove_if(inputs.begin(), inputs.end(),
                                        [&](EventIdx e) {
                                            return !store.correlates_base(e, iv.resource);
                                        }),
                         inputs.end());
        if (countedSharesProductionEntity && iv.productionEntity != kNoIdx) {
            inputs.erase(std::remove_if(inputs.begin(), inputs.end(),
                                        [&](EventIdx e) {
                                            return !store.correlates(e, iv.productionEntity,
                                                                     includeDerived);
                                        }),
                         inputs.end());
        }
        Provenance prov;
        prov.pattern = PatternKind::IntervalCount;
        prov.inputs = inputs;
        prov.hasInterval = true;
        prov.intervalStart = iv.start;
        prov.intervalEnd = iv.end;
        r.facts.push_back(make_measurement(true, iv.end, MeasureKey::Count,
                                           static_cast<double>(inputs.size()), Unit::None,
                                           std::move(prov)));
        ++r.counters.matches;
    }
    detail::finalize(store, r);
    return r;
}

// --- 2: aggregate an event attribute inside intervals (or per resource) -----------

struct AggSpec {
    MeasureKey key = MeasureKey::Count;
    bool countsEvents = false;  // plain `count`: attribute values not consulted
    bool thresholded = false;   // count_above / count_below
    double threshold = 0.0;
};

inline AggSpec make_agg_spec(const std::string& canonicalName, double threshold = 0.0) {
    AggSpec a;
    a.threshold = threshold;
    if (canonicalName == "sum") a.key = MeasureKey::Sum;
    else if (canonicalName == "avg") a.key = MeasureKey::Avg;
    else if (canonicalName == "min") a.key = MeasureKey::Min;
    else if (canonicalName == "max") a.key = MeasureKey::Max;
    else if (canonicalName == "var") a.key = MeasureKey::Var;
    else if (canonicalName == "stddev") a.key = MeasureKey::Stddev;
    else if (canonicalName == "count") { a.key = MeasureKey::Count; a.countsEvents = true; }
    else if (canonicalName == "count_above") { a.key = MeasureKey::CountAbove; a.thresholded = true; }
    else if (canonicalName == "count_below") { a.key = MeasureKey::CountBelow; a.thresholded = true; }
    else throw DataError("unknown aggregation '" + canonicalName + "'");
    return a;
}

namespace detail {

// Applies an aggregation; returns nothing when a value aggregation sees an
// empty collection (count-style aggregations always produce a value).
inline std::optional<double> apply_agg(const AggSpec& agg, const std::vector<double>& values,
                                       std::size_t eventCount) {
    if (agg.countsEvents) return static_cast<double>(eventCount);
    if (agg.thresholded) {
        std::size_t n = 0;
        for (double v : values)
            if (agg.key == MeasureKey::CountAbove ? v > agg.threshold : v < agg.threshold) ++n;
        return static_cast<double>(n);
    }
    if (values.empty()) return std::nullopt;
    switch (agg.key) {
        case MeasureKey::Sum: {
            double s = 0;
            for (double v : values) s += v;
            return s;
        }
        case MeasureKey::Avg: {
            double s = 0;
            for (double v : values) s += v;
            return s / static_cast<double>(values.size());
        }
        case MeasureKey::Min: return *std::min_element(values.begin(), values.end());
        case MeasureKey::Max: return *std::max_element(values.begin(), values.end());
        case MeasureKey::Var:
        case MeasureKey::Stddev: {
            double s = 0;
            for (double v : values) s += v;
            const double mean = s / static_cast<double>(values.size());
            double acc = 0;
            for (double v : values) acc += (v - mean) * (v - mean);
            const double var = acc / static_cast<double>(values.size());
            return agg.key == MeasureKey::Var ? var : std::sqrt(var);
        }
        default: return std::nullopt;
    }
}

}  // namespace detail

inline PatternResult p2_interval_aggregate(const GraphStore& store, ClassIdx start, ClassIdx end,
                                           ClassIdx eventType, const std::string& attribute,
                                           const AggSpec& agg,
                                           const std::string& window = "interval",
                                           bool pairOnProductionEntity = true,
                                           bool includeDerived = true) {
    PatternResult r;
    std::vector<EventIdx> candidates, inputs;
    std::vector<double> values;

    auto gather = [&](EventIdx ev) {
        if (agg.countsEvents) {
            inputs.push_back(ev);
            return;
        }
        const Scalar* v = find_attribute(store.event(ev).attributes, attribute);
        if (!v) return;
        if (!scalar_is_numeric(*v)) {
            ++r.counters.skippedNonNumeric;
            return;
        }
        values.push_back(scalar_as_double(*v));
        inputs.push_back(ev);
    };

    if (window == "all_per_resource") {
        const ClassIdx resourceRoot = store.taxonomy().index_of(Taxonomy::kResource);
        for (EntityIdx ent = 0; ent < store.entities().size(); ++ent) {
            if (!store.entity_has_class(ent, resourceRoot)) continue;
            candidates.clear();
            inputs.clear();
            values.clear();
            detail::collect_events_of(store, ent, eventType, 0,
                                      store.events().empty()
                                          ? 0
                                          : static_cast<EventIdx>(store.events().size() - 1),
                                      candidates);
            if (!includeDerived)
                candidates.erase(std::remove_if(candidates.begin(), candidates.end(),
                                                [&](EventIdx e) {
                                                    return !store.correlates_base(e, ent);
                                                }),
                                 candidates.end());
            for (EventIdx ev : candidates) gather(ev);
            auto value = detail::apply_agg(agg, values, inputs.size());
            if (!value) continue;
            Provenance prov;
            prov.pattern = PatternKind::IntervalAggregate;
            prov.inputs = inputs;
            r.facts.push_back(
                make_measurement(false, ent, agg.key, *value, Unit::None, std::move(prov)));
            ++r.counters.matches;
        }
    } else {
        IntervalBuild build =
            build_intervals(store, start, end, pairOnProductionEntity, includeDerived);
        r.warnings = std::move(build.warnings);
        r.counters.intervals = build.intervals.size();
        r.counters.unmatched = r.warnings.size();
        for (const Interval& iv : build.intervals) {
            candidates.clear();
            inputs.clear();
            values.clear();
            detail::collect_events_of(store, iv.resource, eventType, iv.start, iv.end,
                                      candidates);
            if (!includeDerived)
                candidates.erase(std::remove_if(candidates.begin(), candidates.end(),
                                                [&](EventIdx e) {
                                                    return !store.correlates_base(e, iv.resource);
                                                }),
                                 candidates.end());
            for (EventIdx ev : candidates) gather(ev);
            auto value = detail::apply_agg(agg, values, inputs.size());
            if (!value) continue;
            Provenance prov;
            prov.pattern = PatternKind::IntervalAggregate;
            prov.inputs = inputs;
            prov.hasInterval = true;
            prov.intervalStart = iv.start;
            prov.intervalEnd = iv.end;
            r.facts.push_back(
                make_measurement(true, iv.end, agg.key, *value, Unit::None, std::move(prov)));
            ++r.counters.matches;
        }
    }
    detail::finalize(store, r);
    return r;
}

// --- 3: time since the closest preceding event of a type --------------------------

inline PatternResult p3_elapsed_preceding(const GraphStore& store, ClassIdx eventType,
                                          ClassIdx preceding,
                                          const std::vector<ClassIdx>& matchOn,
                                          bool includeDerived = true) {
    PatternResult r;
    for (EventIdx i = 0; i < store.events().size(); ++i) {
        if (!store.event_has_class(i, eventType)) continue;
        auto sets = detail::match_sets(store, i, matchOn, includeDerived);
        bool possible = true;
        for (const auto& s : sets) possible &= !s.empty();
        if (!possible) {
            ++r.counters.unmatched;
            continue;
        }
        auto found =
            detail::closest_neighbour(store, sets, preceding, i, true, includeDerived);
        if (!found) {
            ++r.counters.unmatched;
            continue;
        }
        Provenance prov;
        prov.pattern = PatternKind::ElapsedPreceding;
        prov.inputs = {*found, i};
        const double elapsed =
            static_cast<double>(store.event(i).timestamp - store.event(*found).timestamp);
        r.facts.push_back(
            make_measurement(true, i, MeasureKey::Elapsed, elapsed, Unit::Millis,
                             std::move(prov)));
        ++r.counters.matches;
    }
    detail::finalize(store, r);
    return r;
}

// --- 4: time until the next event of the same type ---------------------------------

inline PatternResult p4_elapsed_succeeding_same_type(
    const GraphStore& store, ClassIdx eventType,
    const std::optional<std::pair<std::string, Scalar>>& firstEventFilter,
    const std::vector<ClassIdx>& matchOn, bool includeDerived = true) {
    PatternResult r;
    for (EventIdx i = 0; i < store.events().size(); ++i) {
        if (!store.event_has_class(i, eventType)) continue;
        if (firstEventFilter) {
            const Scalar* v =
                find_attribute(store.event(i).attributes, firstEventFilter->first);
            if (!v || !scalar_equals(*v, firstEventFilter->second)) continue;
        }
        auto sets = detail::match_sets(store, i, matchOn, includeDerived);
        bool possible = true;
        for (const auto& s : sets) possible &= !s.empty();
        if (!possible) {
            ++r.counters.unmatched;
            continue;
        }
        auto found =
            detail::closest_neighbour(store, sets, eventType, i, false, includeDerived);
        if (!found) {
            ++r.counters.unmatched;
            continue;
        }
        Provenance prov;
        prov.pattern = PatternKind::ElapsedSucceedingSameType;
        prov.inputs = {i, *found};
        const double elapsed =
            static_cast<double>(store.event(*found).timestamp - store.event(i).timestamp);
        r.facts.push_back(
            make_measurement(true, i, MeasureKey::Elapsed, elapsed, Unit::Millis,
                             std::move(prov)));
        ++r.counters.matches;
    }
    detail::finalize(store, r);
    return r;
}

// --- 5: maximum span between first start and last end per entity -------------------

inline PatternResult p5_elapsed_maximum(const GraphStore& store, ClassIdx start, ClassIdx end,
                                        ClassIdx entityType, bool includeDerived = true) {
    PatternResult r;
    std::vector<EventIdx> tmp;
    for (EntityIdx x = 0; x < store.entities().size(); ++x) {
        if (!store.entity_has_class(x, entityType)) continue;
        tmp.clear();
        detail::collect_events_of(
            store, x, start, 0,
            store.events().empty() ? 0 : static_cast<EventIdx>(store.events().size() - 1), tmp);
        if (!includeDerived)
            tmp.erase(std::remove_if(tmp.begin(), tmp.end(),
                                     [&](EventIdx e) { return !store.correlates_base(e, x); }),
                      tmp.end());
        if (tmp.empty()) {
            ++r.counters.unmatched;
            continue;
        }
        const EventIdx firstStart = tmp.front();
        tmp.clear();
        detail::collect_events_of(
            store, x, end, 0,
            store.events().empty() ? 0 : static_cast<EventIdx>(store.events().size() - 1), tmp);
        if (!includeDerived)
            tmp.erase(std::remove_if(tmp.begin(), tmp.end(),
                                     [&](EventIdx e) { return !store.correlates_base(e, x); }),
                      tmp.end());
        if (tmp.empty()) {
            ++r.counters.unmatched;
            continue;
        }
        const EventIdx lastEnd = tmp.back();
        const double span = static_cast<double>(store.event(lastEnd).timestamp -
                                                store.event(firstStart).timestamp);
        if (span < 0) {
            r.warnings.push_back("entity '" + store.entity(x).id +
                                 "': latest end event precedes earliest start event");
            ++r.counters.unmatched;
            continue;
        }
        Provenance prov;
        prov.pattern = PatternKind::ElapsedMaximum;
        if (firstStart == lastEnd)
            prov.inputs = {firstStart};
        else
            prov.inputs = {std::min(firstStart, lastEnd), std::max(firstStart, lastEnd)};
        r.facts.push_back(make_measurement(false, x, MeasureKey::ElapsedMax, span, Unit::Millis,
                                           std::move(prov)));
        ++r.counters.matches;
    }
    detail::finalize(store, r);
    return r;
}

// --- 6: relate an event to entities of its closest preceding event -----------------

inline PatternResult p6_relate_preceding(const GraphStore& store, ClassIdx eventType,
                                         ClassIdx preceding, ClassIdx targetEntityType,
                                         const std::vector<ClassIdx>& matchOn,
                                         bool includeDerived = true) {
    PatternResult r;
    for (EventIdx i = 0; i < store.events().size(); ++i) {
        if (!store.event_has_class(i, eventType)) continue;
        auto sets = detail::match_sets(store, i, matchOn, includeDerived);
        bool possible = true;
        for (const auto& s : sets) possible &= !s.empty();
        if (!possible) {
            ++r.counters.unmatched;
            continue;
        }
        auto found =
            detail::closest_neighbour(store, sets, preceding, i, true, includeDerived);
        if (!found) {
            ++r.counters.unmatched;
            continue;
        }
        for (EntityIdx x :
             store.correlated_entities(*found, targetEntityType, std::nullopt, includeDerived)) {
            Provenance prov;
            prov.pattern = PatternKind::RelatePreceding;
            prov.inputs = {*found, i};
            r.facts.push_back(
                make_relation(true, i, PredicateKind::CorrelatesTo, x, std::move(prov)));
            ++r.counters.matches;
        }
    }
    detail::finalize(store, r);
    return r;
}

// --- 7: relate events across part-of edges ------------------------------------------

inline PatternResult p7_relate_partof(const GraphStore& store, bool wholeToPart,
                                      std::optional<ClassIdx> eventEntityFilter,
                                      std::optional<ClassIdx> otherEntityFilter,
                                      bool includeDerived = true) {
    PatternResult r;
    for (const PartOfEdge& edge : store.part_of_edges()) {
        if (edge.derived && !includeDerived) continue;
        // The entity already on the event vs the entity the fact points to.
        const EntityIdx eventSide = wholeToPart ? edge.whole : edge.part;
        const EntityIdx otherSide = wholeToPart ? edge.part : edge.whole;
        if (eventEntityFilter && !store.entity_has_class(eventSide, *eventEntityFilter))
            continue;
        if (otherEntityFilter && !store.entity_has_class(otherSide, *otherEntityFilter))
            continue;
        for (EventIdx ev : store.events_of(eventSide)) {
            if (!includeDerived && !store.correlates_base(ev, eventSide)) continue;
            if (store.correlates_base(ev, otherSide)) continue;  // already in the base log
            Provenance prov;
            prov.pattern = PatternKind::RelatePartof;
            prov.inputs = {ev};
            r.facts.push_back(
                make_relation(true, ev, PredicateKind::CorrelatesTo, otherSide, std::move(prov)));
            ++r.counters.matches;
        }
    }
    detail::finalize(store, r);
    return r;
}

// --- 8 & 9: genealogy through aggregation events ------------------------------------

namespace detail {

inline PatternResult relate_aggregation(const GraphStore& store, ClassIdx aggType,
                                        ClassIdx entityType, bool recursive, bool preceding,
                                        bool includeDerived) {
    PatternResult r;
    const PatternKind kind = preceding ? PatternKind::RelatePrecedingAggregation
                                       : PatternKind::RelateSucceedingAggregation;
    std::vector<EventIdx> aggEvents;
    for (EventIdx i = 0; i < store.events().size(); ++i)
        if (store.event_has_class(i, aggType)) aggEvents.push_back(i);
    if (!preceding) std::reverse(aggEvents.begin(), aggEvents.end());

    struct AggInfo {
        EventIdx at;
        std::vector<EntityIdx> from;  // entities whose events propagate
        std::vector<EntityIdx> to;    // entities the events get related to
    };
    std::vector<AggInfo> infos;
    for (EventIdx a : aggEvents) {
        auto ins = store.correlated_entities(a, entityType, Role::Input, includeDerived);
        auto outs = store.correlated_entities(a, entityType, Role::Output, includeDerived);
        if (ins.empty() || outs.empty()) {
            r.warnings.push_back("aggregation event '" + store.event(a).id +
                                 "' lacks input/output entities of the configured type");
            ++r.counters.unmatched;
            continue;
        }
        // p8 walks input→output over earlier events; p9 output→input over later.
        infos.push_back(AggInfo{a, preceding ? std::move(ins) : std::move(outs),
                                preceding ? std::move(outs) : std::move(ins)});
    }

    // extra[x] = events newly related to entity x during the fixpoint, sorted.
    std::vector<std::vector<EventIdx>> extra(store.entities().size());
    std::vector<std::pair<EventIdx, EntityIdx>> emitted;  // guards re-emission across passes

    auto already_related = [&](EventIdx e, EntityIdx x) {
        if (store.correlates(e, x, includeDerived)) return true;
        const auto& ex = extra[x];
        return std::binary_search(ex.begin(), ex.end(), e);
    };

    bool changed = true;
    bool firstPass = true;
    while (changed) {
        changed = false;
        for (const AggInfo& info : infos) {
            for (EntityIdx x : info.from) {
                // Events related to x on the propagating side of the aggregation.
                const auto& base = store.events_of(x);
                auto emit_for = [&](EventIdx e) {
                    for (EntityIdx y : info.to) {
                        if (recursive && !already_related(e, y)) {
                            auto& ex = extra[y];
                            ex.insert(std::lower_bound(ex.begin(), ex.end(), e), e);
                            changed = true;
                        }
                        const auto key = std::make_pair(e, y);
                        auto it = std::lower_bound(emitted.begin(), emitted.end(), key);
                        if (it != emitted.end() && *it == key) continue;
                        emitted.insert(it, key);
                        Provenance prov;
                        prov.pattern = kind;
                        prov.inputs = {std::min(e, info.at), std::max(e, info.at)};
                        r.facts.push_back(make_relation(true, e, PredicateKind::CorrelatesTo, y,
                                                        std::move(prov)));
                        ++r.counters.matches;
                    }
                };
                if (preceding) {
                    auto to = std::lower_bound(base.begin(), base.end(), info.at);
                    for (auto it = base.begin(); it != to; ++it) {
                        if (!includeDerived && !store.correlates_base(*it, x)) continue;
                        emit_for(*it);
                    }
                    if (recursive) {
                        // Snapshot: emit_for may grow extra[x] through a self-loop.
                        const std::vector<EventIdx> ex = extra[x];
                        for (auto it = ex.begin();
                             it != std::lower_bound(ex.begin(), ex.end(), info.at); ++it)
                            emit_for(*it);
                    }
                } else {
                    auto from = std::upper_bound(base.begin(), base.end(), info.at);
                    for (auto it = from; it != base.end(); ++it) {
                        if (!includeDerived && !store.correlates_base(*it, x)) continue;
                        emit_for(*it);
                    }
                    if (recursive) {
                        const std::vector<EventIdx> ex = extra[x];
                        for (auto it = std::upper_bound(ex.begin(), ex.end(), info.at);
                             it != ex.end(); ++it)
                            emit_for(*it);
                    }
                }
            }
        }
        if (!recursive && firstPass) break;
        firstPass = false;
    }
    finalize(store, r);
    return r;
}

}  // namespace detail

inline PatternResult p8_relate_preceding_aggregation(const GraphStore& store, ClassIdx aggType,
                                                     ClassIdx entityType, bool recursive = false,
                                                     bool includeDerived = true) {
    return detail::relate_aggregation(store, aggType, entityType, recursive, true,
                                      includeDerived);
}

inline PatternResult p9_relate_succeeding_aggregation(const GraphStore& store, ClassIdx aggType,
                                                      ClassIdx entityType,
                                                      bool recursive = false,
                                                      bool includeDerived = true) {
    return detail::relate_aggregation(store, aggType, entityType, recursive, false,
                                      includeDerived);
}

// --- 10: derive part-of edges from events inside intervals --------------------------

inline PatternResult p10_derive_partof(const GraphStore& store, ClassIdx start, ClassIdx end,
                                       ClassIdx partEntityType, ClassIdx wholeEntityType,
                                       bool includeDerived = true) {
    PatternResult r;
    IntervalBuild build = build_intervals(store, start, end, true, includeDerived);
    r.warnings = std::move(build.warnings);
    r.counters.intervals = build.intervals.size();
    r.counters.unmatched = r.warnings.size();
    for (const Interval& iv : build.intervals) {
        const EntityIdx whole = iv.productionEntity;
        if (whole == kNoIdx || !store.entity_has_class(whole, wholeEntityType)) continue;
        const auto& evs = store.events_of(iv.resource);
        auto from = std::lower_bound(evs.begin(), evs.end(), iv.start);
        auto to = std::upper_bound(from, evs.end(), iv.end);
        for (auto it = from; it != to; ++it) {
            if (!includeDerived && !store.correlates_base(*it, iv.resource)) continue;
            for (EntityIdx p :
                 store.correlated_entities(*it, partEntityType, std::nullopt, includeDerived)) {
                if (p == whole) continue;
                Provenance prov;
                prov.pattern = PatternKind::DerivePartof;
                prov.inputs = {*it};
                prov.hasInterval = true;
                prov.intervalStart = iv.start;
                prov.intervalEnd = iv.end;
                r.facts.push_back(
                    make_relation(false, p, PredicateKind::IsPartOf, whole, std::move(prov)));
                ++r.counters.matches;
            }
        }
    }
    detail::finalize(store, r);
    return r;
}

// --- instance dispatch ---------------------------------------------------------------

inline PatternResult run_pattern(const GraphStore& store, const PatternInstance& inst,
                                 bool includeDerived = true) {
    const Taxonomy& tax = store.taxonomy();
    switch (inst.pattern) {
        case PatternKind::IntervalCount:
            return p1_interval_count(store, param_class(inst, tax, "start"),
                                     param_class(inst, tax, "end"),
                                     param_class(inst, tax, "counted"),
                                     param_bool_or(inst, "pairOnProductionEntity", true),
                                     param_bool_or(inst, "countedSharesProductionEntity", false),
                                     includeDerived);
        case PatternKind::IntervalAggregate: {
            const std::string aggName = param_enum_or(inst, "agg", "count");
            const double threshold =
                inst.find("threshold") ? param_number(inst, "threshold") : 0.0;
            return p2_interval_aggregate(
                store, param_class(inst, tax, "start"), param_class(inst, tax, "end"),
                param_class(inst, tax, "eventType"), param_string(inst, "attribute"),
                make_agg_spec(aggName, threshold), param_enum_or(inst, "window", "interval"),
                param_bool_or(inst, "pairOnProductionEntity", true), includeDerived);
        }
        case PatternKind::ElapsedPreceding:
            return p3_elapsed_preceding(
                store, param_class(inst, tax, "eventType"), param_class(inst, tax, "preceding"),
                param_class_list_or(inst, tax, "matchOn", {Taxonomy::kResource}),
                includeDerived);
        case PatternKind::ElapsedSucceedingSameType: {
            std::optional<std::pair<std::string, Scalar>> filter;
            if (inst.find("filterAttribute") && inst.find("filterValue"))
                filter = std::make_pair(param_string(inst, "filterAttribute"),
                                        *param_scalar(inst, "filterValue"));
            return p4_elapsed_succeeding_same_type(
                store, param_class(inst, tax, "eventType"), filter,
                param_class_list_or(inst, tax, "matchOn", {Taxonomy::kResource}),
                includeDerived);
        }
        case PatternKind::ElapsedMaximum:
            return p5_elapsed_maximum(store, param_class(inst, tax, "start"),
                                      param_class(inst, tax, "end"),
                                      param_class(inst, tax, "entityType"), includeDerived);
        case PatternKind::RelatePreceding:
            return p6_relate_preceding(
                store, param_class(inst, tax, "eventType"), param_class(inst, tax, "preceding"),
                param_class(inst, tax, "targetEntityType"),
                param_class_list_or(inst, tax, "matchOn", {Taxonomy::kResource}),
                includeDerived);
        case PatternKind::RelatePartof: {
            const std::string dir = param_enum_or(inst, "direction", "whole_to_part");
            std::optional<ClassIdx> eventFilter, otherFilter;
            if (inst.find("eventEntityFilter"))
                eventFilter = param_class(inst, tax, "eventEntityFilter");
            if (inst.find("otherEntityFilter"))
                otherFilter = param_class(inst, tax, "otherEntityFilter");
            return p7_relate_partof(store, dir == "whole_to_part", eventFilter, otherFilter,
                                    includeDerived);
        }
        case PatternKind::RelatePrecedingAggregation:
            return p8_relate_preceding_aggregation(
                store, param_class_or(inst, tax, "aggType", Taxonomy::kAggregate),
                param_class_or(inst, tax, "entityType", Taxonomy::kProductionEntity),
                param_bool_or(inst, "recursive", false), includeDerived);
        case PatternKind::RelateSucceedingAggregation:
            return p9_relate_succeeding_aggregation(
                store, param_class_or(inst, tax, "aggType", Taxonomy::kAggregate),
                param_class_or(inst, tax, "entityType", Taxonomy::kProductionEntity),
                param_bool_or(inst, "recursive", false), includeDerived);
        case PatternKind::DerivePartof:
            return p10_derive_partof(
                store, param_class(inst, tax, "start"), param_class(inst, tax, "end"),
                param_class(inst, tax, "partEntityType"),
                param_class_or(inst, tax, "wholeEntityType", Taxonomy::kProductionEntity),
                includeDerived);
    }
    throw DataError("unknown pattern kind");
}

// --- pipeline runner -------------------------------------------------------------------

struct InstanceReport {
    std::string name;
    PatternKind pattern = PatternKind::IntervalCount;
    std::size_t factCount = 0;  // after per-instance dedup
    PatternCounters counters;
    double millis = 0.0;  // engine wall time; diagnostic only, not byte-stable
};

struct RunOutput {
    FactSet facts;     // union of all instances, canonical order
    GraphStore store;  // input store with all facts materialized
    std::vector<std::string> warnings;
    std::vector<InstanceReport> reports;
};

inline RunOutput run_pipeline(const GraphStore& initial, const Pipeline& pipe, int jobs = 1) {
    RunOutput out;
    out.store = initial;
    for (const PatternInstance& inst : pipe.instances)
        out.facts.instances.push_back(inst.name);
    out.reports.resize(pipe.instances.size());

    FactSet pending;  // facts not yet materialized (when between-stage folding is off)
    pending.instances = out.facts.instances;

    for (const std::vector<std::uint32_t>& stage : pipe.stages()) {
        std::vector<PatternResult> results(stage.size());
        std::vector<double> timings(stage.size(), 0.0);
        auto run_one = [&](std::size_t k) {
            const auto t0 = std::chrono::steady_clock::now();
            results[k] = run_pattern(out.store, pipe.instances[stage[k]], pipe.useDerived);
            timings[k] = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
        };
        if (jobs > 1 && stage.size() > 1) {
            std::atomic<std::size_t> next{0};
            auto worker = [&]() {
                while (true) {
                    const std::size_t k = next.fetch_add(1);
                    if (k >= stage.size()) return;
                    run_one(k);
                }
            };
            std::vector<std::thread> pool;
            const std::size_t n =
                std::min<std::size_t>(static_cast<std::size_t>(jobs), stage.size());
            pool.reserve(n);
            for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
            for (std::thread& t : pool) t.join();
        } else {
            for (std::size_t k = 0; k < stage.size(); ++k) run_one(k);
        }

        FactSet stageFacts;
        stageFacts.instances = out.facts.instances;
        for (std::size_t k = 0; k < stage.size(); ++k) {
            const std::uint32_t idx = stage[k];
            PatternResult& r = results[k];
            out.reports[idx] = InstanceReport{pipe.instances[idx].name,
                                              pipe.instances[idx].pattern, r.facts.size(),
                                              r.counters, timings[k]};
            for (Fact& f : r.facts) {
                f.instance = idx;
                stageFacts.facts.push_back(std::move(f));
            }
            for (const std::string& w : r.warnings)
                out.warnings.push_back("instance '" + pipe.instances[idx].name + "': " + w);
        }

        out.facts.facts.insert(out.facts.facts.end(), stageFacts.facts.begin(),
                               stageFacts.facts.end());
        if (!stageFacts.facts.empty()) {
            if (pipe.materializeBetweenStages) {
                MaterializeResult mat =
                    materialize(out.store, std::move(stageFacts), pipe.useDerived);
                out.store = std::move(mat.store);
                for (std::string& w : mat.warnings) out.warnings.push_back(std::move(w));
            } else {
                pending.facts.insert(pending.facts.end(), stageFacts.facts.begin(),
                                     stageFacts.facts.end());
            }
        }
    }
    if (!pipe.materializeBetweenStages && !pending.facts.empty()) {
        MaterializeResult mat = materialize(out.store, std::move(pending), pipe.useDerived);
        out.store = std::move(mat.store);
        for (std::string& w : mat.warnings) out.warnings.push_back(std::move(w));
    }
    normalize_facts(out.store, out.facts);
    return out;
}

}  // namespace trace_enrich
