#pragma once
// Derived facts: measurements and relations produced by pattern instances,
// with provenance back to the contributing events. Facts reference store
// entities/events by index; indices stay valid across materialization
// because it never adds or removes nodes.

#include <cstdint>
#include <string>
#include <vector>

#include "trace_enrich/store.hpp"

namespace trace_enrich {

enum class FactKind : std::uint8_t { Measurement = 0, Relation = 1 };

enum class PredicateKind : std::uint8_t { CorrelatesTo = 0, IsPartOf = 1 };

enum class PatternKind : std::uint8_t {
    IntervalCount = 0,
    IntervalAggregate,
    ElapsedPreceding,
    ElapsedSucceedingSameType,
    ElapsedMaximum,
    RelatePreceding,
    RelatePartof,
    RelatePrecedingAggregation,
    RelateSucceedingAggregation,
    DerivePartof,
};

inline constexpr int kPatternCount = 10;

inline const char* pattern_name(PatternKind p) {
    static const char* names[] = {
        "interval_count",         "interval_aggregate",
        "elapsed_preceding",      "elapsed_succeeding_same_type",
        "elapsed_maximum",        "relate_preceding",
        "relate_partof",          "relate_preceding_aggregation",
        "relate_succeeding_aggregation", "derive_partof",
    };
    return names[static_cast<int>(p)];
}

enum class MeasureKey : std::uint8_t {
    Count = 0,
    Sum,
    Avg,
    Min,
    Max,
    Var,
    Stddev,
    CountAbove,
    CountBelow,
    Elapsed,
    ElapsedMax,
};

inline const char* measure_key_name(MeasureKey k) {
    static const char* names[] = {"count", "sum",  "avg",         "min",         "max",     "var",
                                  "stddev", "count_above", "count_below", "elapsed", "elapsed_max"};
    return names[static_cast<int>(k)];
}

enum class Unit : std::uint8_t { None = 0, Millis = 1 };

inline const char* unit_name(Unit u) { return u == Unit::Millis ? "ms" : ""; }

inline const char* predicate_name(PredicateKind p) {
    return p == PredicateKind::CorrelatesTo ? "correlatesTo" : "isPartOf";
}

struct Provenance {
    PatternKind pattern = PatternKind::IntervalCount;
    std::vector<EventIdx> inputs;  // contributing events, ascending in total order
    bool hasInterval = false;
    EventIdx intervalStart = 0;
    EventIdx intervalEnd = 0;
};

struct Fact {
    FactKind kind = FactKind::Measurement;
    std::uint32_t instance = 0;  // index into the owning FactSet's instance names
    bool subjectIsEvent = true;
    std::uint32_t subject = 0;  // EventIdx or EntityIdx per subjectIsEvent
    // measurement fields
    MeasureKey key = MeasureKey::Count;
    double value = 0.0;
    Unit unit = Unit::None;
    // relation fields
    PredicateKind predicate = PredicateKind::CorrelatesTo;
    EntityIdx object = 0;

    Provenance prov;
};

inline Fact make_measurement(bool subjectIsEvent, std::uint32_t subject, MeasureKey key,
                             double value, Unit unit, Provenance prov) {
    Fact f;
    f.kind = FactKind::Measurement;
    f.subjectIsEvent = subjectIsEvent;
    f.subject = subject;
    f.key = key;
    f.value = value;
    f.unit = unit;
    f.prov = std::move(prov);
    return f;
}

inline Fact make_relation(bool subjectIsEvent, std::uint32_t subject, PredicateKind predicate,
                          EntityIdx object, Provenance prov) {
    Fact f;
    f.kind = FactKind::Relation;
    f.subjectIsEvent = subjectIsEvent;
    f.subject = subject;
    f.predicate = predicate;
    f.object = object;
    f.prov = std::move(prov);
    return f;
}

// Facts plus the instance-name table their `instance` fields point into.
struct FactSet {
    std::vector<std::string> instances;
    std::vector<Fact> facts;
};

inline const std::string& fact_subject_id(const GraphStore& store, const Fact& f) {
    return f.subjectIsEvent ? store.event(f.subject).id : store.entity(f.subject).id;
}

// Canonical output order: (instance, kind, subject, key|predicate, object|value),
// provenance as the final tie-break so byte output is a pure function of content.
class FactOrder {
public:
    FactOrder(const GraphStore& store, const std::vector<std::string>& instances)
        : store_(&store), instances_(&instances) {}

    bool operator()(const Fact& a, const Fact& b) const { return compare(a, b) < 0; }

    int compare(const Fact& a, const Fact& b) const {
        const int id = identity_compare(a, b);
        if (id != 0) return id;
        return provenance_compare(a.prov, b.prov);
    }

    // Dedup identity: (kind, instance, subject, key|predicate, value|object).
    int identity_compare(const Fact& a, const Fact& b) const {
        if (int c = (*instances_)[a.instance].compare((*instances_)[b.instance]); c != 0)
            return c;
        if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
        if (int c = fact_subject_id(*store_, a).compare(fact_subject_id(*store_, b)); c != 0)
            return c;
        if (a.kind == FactKind::Measurement) {
            if (a.key != b.key) {
                const int c = std::string_view(measure_key_name(a.key))
                                  .compare(measure_key_name(b.key));
                return c < 0 ? -1 : 1;
            }
            if (a.value != b.value) return a.value < b.value ? -1 : 1;
        } else {
            if (a.predicate != b.predicate) return a.predicate < b.predicate ? -1 : 1;
            if (int c = store_->entity(a.object).id.compare(store_->entity(b.object).id); c != 0)
                return c;
        }
        return 0;
    }

private:
    int provenance_compare(const Provenance& a, const Provenance& b) const {
        if (a.pattern != b.pattern) return a.pattern < b.pattern ? -1 : 1;
        // Event indices are total-order positions, so index comparison is id-stable.
        if (a.inputs != b.inputs) return a.inputs < b.inputs ? -1 : 1;
        if (a.hasInterval != b.hasInterval) return a.hasInterval < b.hasInterval ? -1 : 1;
        if (a.hasInterval) {
            if (a.intervalStart != b.intervalStart)
                return a.intervalStart < b.intervalStart ? -1 : 1;
            if (a.intervalEnd != b.intervalEnd) return a.intervalEnd < b.intervalEnd ? -1 : 1;
        }
        return 0;
    }

    const GraphStore* store_;
    const std::vector<std::string>* instances_;
};

// Sorts into canonical order and drops identity duplicates (first wins).
inline void normalize_facts(const GraphStore& store, FactSet& set) {
    FactOrder order(store, set.instances);
    std::sort(set.facts.begin(), set.facts.end(), order);
    set.facts.erase(std::unique(set.facts.begin(), set.facts.end(),
                                [&](const Fact& a, const Fact& b) {
                                    return order.identity_compare(a, b) == 0;
                                }),
                    set.facts.end());
}

// Dedup-identity strings, e.g. "measurement|e4|count|2" — the comparison
// currency for engine-vs-reference equality checks (provenance excluded).
inline std::vector<std::string> fact_identities(const GraphStore& store,
                                                const std::vector<Fact>& facts) {
    std::vector<std::string> out;
    out.reserve(facts.size());
    for (const Fact& f : facts) {
        std::string s = f.kind == FactKind::Measurement ? "measurement|" : "relation|";
        s += fact_subject_id(store, f);
        s += '|';
        if (f.kind == FactKind::Measurement) {
            s += measure_key_name(f.key);
            s += '|';
            s += format_number(f.value);
        } else {
            s += predicate_name(f.predicate);
            s += '|';
            s += store.entity(f.object).id;
        }
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace trace_enrich
