#pragma once
// Brute-force reference semantics for every pattern. Shares the data model
// with the engines but none of their interval pairing or index machinery:
// everything here is a plain nested scan over the totally ordered event list,
// intended O(n²)–O(n³) and obviously correct.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "trace_enrich/dsl.hpp"
#include "trace_enrich/patterns.hpp"
#include "trace_enrich/store.hpp"

namespace trace_enrich {
namespace oracle {

// Linear-scan primitives (no store indices).

inline bool corr(const GraphStore& s, EventIdx ev, EntityIdx ent, bool includeDerived,
                 std::optional<Role> role = std::nullopt) {
    for (const Correlation& c : s.event(ev).correlations) {
        if (c.entity != ent) continue;
        if (c.derived && !includeDerived) continue;
        if (role && c.role != *role) continue;
        return true;
    }
    return false;
}

inline bool has_class(const GraphStore& s, EntityIdx ent, ClassIdx cls) {
    for (ClassIdx t : s.entity(ent).types)
        if (s.taxonomy().is_subclass(t, cls)) return true;
    return false;
}

inline bool shares_entity_of(const GraphStore& s, EventIdx a, EventIdx b, ClassIdx cls,
                             bool includeDerived) {
    for (EntityIdx ent = 0; ent < s.entities().size(); ++ent)
        if (has_class(s, ent, cls) && corr(s, a, ent, includeDerived) &&
            corr(s, b, ent, includeDerived))
            return true;
    return false;
}

struct OInterval {
    EntityIdx resource;
    EntityIdx pe;  // kNoIdx when pairing on resource only
    EventIdx start;
    EventIdx end;
};

// Independent FIFO replay per candidate (resource [, production-entity]) pair.
inline std::vector<OInterval> intervals(const GraphStore& s, ClassIdx startT, ClassIdx endT,
                                        bool pairOnPE, bool includeDerived) {
    std::vector<OInterval> out;
    const ClassIdx res = s.taxonomy().index_of(Taxonomy::kResource);
    const ClassIdx pe = s.taxonomy().index_of(Taxonomy::kProductionEntity);
    auto replay = [&](EntityIdx r, EntityIdx p) {
        std::vector<EventIdx> open;
        for (EventIdx i = 0; i < s.events().size(); ++i) {
            if (!corr(s, i, r, includeDerived)) continue;
            if (p != kNoIdx && !corr(s, i, p, includeDerived)) continue;
            const bool isStart = s.taxonomy().is_subclass(s.event(i).type, startT);
            const bool isEnd = s.taxonomy().is_subclass(s.event(i).type, endT);
            if (isEnd && !open.empty()) {
                out.push_back(OInterval{r, p, open.front(), i});
                open.erase(open.begin());
            } else if (isStart) {
                open.push_back(i);
            }
        }
    };
    for (EntityIdx r = 0; r < s.entities().size(); ++r) {
        if (!has_class(s, r, res)) continue;
        if (pairOnPE) {
            for (EntityIdx p = 0; p < s.entities().size(); ++p)
                if (has_class(s, p, pe)) replay(r, p);
        } else {
            replay(r, kNoIdx);
        }
    }
    return out;
}

inline std::vector<double> numeric_values(const GraphStore& s,
                                          const std::vector<EventIdx>& evs,
                                          const std::string& attribute,
                                          std::vector<EventIdx>& contributing) {
    std::vector<double> vals;
    for (EventIdx e : evs) {
        const Scalar* v = find_attribute(s.event(e).attributes, attribute);
        if (v && scalar_is_numeric(*v)) {
            vals.push_back(scalar_as_double(*v));
            contributing.push_back(e);
        }
    }
    return vals;
}

}  // namespace oracle

// Evaluates one validated instance with the naive reference semantics.
inline PatternResult oracle_eval(const PatternInstance& inst, const GraphStore& s,
                                 bool includeDerived = true) {
    using namespace oracle;
    const Taxonomy& tax = s.taxonomy();
    PatternResult r;
    const std::size_t nEv = s.events().size();
    const std::size_t nEnt = s.entities().size();

    auto in_interval = [&](EventIdx e, const OInterval& iv) {
        return e >= iv.start && e <= iv.end;  // indices are total-order positions
    };
    auto matchOn = [&]() {
        return param_class_list_or(inst, tax, "matchOn", {Taxonomy::kResource});
    };
    auto shares_all_classes = [&](EventIdx a, EventIdx b, const std::vector<ClassIdx>& classes) {
        for (ClassIdx c : classes)
            if (!shares_entity_of(s, a, b, c, includeDerived)) return false;
        return true;
    };

    switch (inst.pattern) {
        case PatternKind::IntervalCount: {
            const ClassIdx counted = param_class(inst, tax, "counted");
            const bool sharePE = param_bool_or(inst, "countedSharesProductionEntity", false);
            for (const OInterval& iv :
                 intervals(s, param_class(inst, tax, "start"), param_class(inst, tax, "end"),
                           param_bool_or(inst, "pairOnProductionEntity", true),
                           includeDerived)) {
                std::vector<EventIdx> inputs;
                for (EventIdx e = 0; e < nEv; ++e) {
                    if (!in_interval(e, iv)) continue;
                    if (!tax.is_subclass(s.event(e).type, counted)) continue;
                    if (!corr(s, e, iv.resource, includeDerived)) continue;
                    if (sharePE && iv.pe != kNoIdx && !corr(s, e, iv.pe, includeDerived))
                        continue;
                    inputs.push_back(e);
                }
                Provenance prov;
                prov.pattern = PatternKind::IntervalCount;
                prov.inputs = inputs;
                prov.hasInterval = true;
                prov.intervalStart = iv.start;
                prov.intervalEnd = iv.end;
                r.facts.push_back(make_measurement(true, iv.end, MeasureKey::Count,
                                                   static_cast<double>(inputs.size()),
                                                   Unit::None, std::move(prov)));
            }
            break;
        }
        case PatternKind::IntervalAggregate: {
            const ClassIdx eventType = param_class(inst, tax, "eventType");
            const std::string attribute = param_string(inst, "attribute");
            const AggSpec agg =
                make_agg_spec(param_enum_or(inst, "agg", "count"),
                              inst.find("threshold") ? param_number(inst, "threshold") : 0.0);
            auto emit = [&](bool subjIsEvent, std::uint32_t subj,
                            const std::vector<EventIdx>& evs, bool withInterval,
                            EventIdx ivStart, EventIdx ivEnd) {
                std::vector<EventIdx> contributing;
                std::vector<double> vals = numeric_values(s, evs, attribute, contributing);
                std::optional<double> value;
                if (agg.countsEvents) {
                    value = static_cast<double>(evs.size());
                    contributing = evs;
                } else {
                    value = detail::apply_agg(agg, vals, evs.size());
                }
                if (!value) return;
                Provenance prov;
                prov.pattern = PatternKind::IntervalAggregate;
                prov.inputs = contributing;
                prov.hasInterval = withInterval;
                prov.intervalStart = ivStart;
                prov.intervalEnd = ivEnd;
                r.facts.push_back(
                    make_measurement(subjIsEvent, subj, agg.key, *value, Unit::None,
                                     std::move(prov)));
            };
            if (param_enum_or(inst, "window", "interval") == "all_per_resource") {
                const ClassIdx res = tax.index_of(Taxonomy::kResource);
                for (EntityIdx ent = 0; ent < nEnt; ++ent) {
                    if (!has_class(s, ent, res)) continue;
                    std::vector<EventIdx> evs;
                    for (EventIdx e = 0; e < nEv; ++e)
                        if (tax.is_subclass(s.event(e).type, eventType) &&
                            corr(s, e, ent, includeDerived))
                            evs.push_back(e);
                    emit(false, ent, evs, false, 0, 0);
                }
            } else {
                for (const OInterval& iv :
                     intervals(s, param_class(inst, tax, "start"),
                               param_class(inst, tax, "end"),
                               param_bool_or(inst, "pairOnProductionEntity", true),
                               includeDerived)) {
                    std::vector<EventIdx> evs;
                    for (EventIdx e = 0; e < nEv; ++e)
                        if (in_interval(e, iv) &&
                            tax.is_subclass(s.event(e).type, eventType) &&
                            corr(s, e, iv.resource, includeDerived))
                            evs.push_back(e);
                    emit(true, iv.end, evs, true, iv.start, iv.end);
                }
            }
            break;
        }
        case PatternKind::ElapsedPreceding:
        case PatternKind::RelatePreceding: {
            const ClassIdx eventType = param_class(inst, tax, "eventType");
            const ClassIdx preceding = param_class(inst, tax, "preceding");
            const auto classes = matchOn();
            for (EventIdx e1 = 0; e1 < nEv; ++e1) {
                if (!tax.is_subclass(s.event(e1).type, eventType)) continue;
                std::optional<EventIdx> best;
                for (EventIdx e2 = 0; e2 < e1; ++e2) {
                    if (!tax.is_subclass(s.event(e2).type, preceding)) continue;
                    if (!shares_all_classes(e1, e2, classes)) continue;
                    best = e2;  // ascending scan: the last hit is the closest
                }
                if (!best) continue;
                if (inst.pattern == PatternKind::ElapsedPreceding) {
                    Provenance prov;
                    prov.pattern = PatternKind::ElapsedPreceding;
                    prov.inputs = {*best, e1};
                    r.facts.push_back(make_measurement(
                        true, e1, MeasureKey::Elapsed,
                        static_cast<double>(s.event(e1).timestamp - s.event(*best).timestamp),
                        Unit::Millis, std::move(prov)));
                } else {
                    const ClassIdx target = param_class(inst, tax, "targetEntityType");
                    for (EntityIdx x = 0; x < nEnt; ++x) {
                        if (!has_class(s, x, target) || !corr(s, *best, x, includeDerived))
                            continue;
                        Provenance prov;
                        prov.pattern = PatternKind::RelatePreceding;
                        prov.inputs = {*best, e1};
                        r.facts.push_back(make_relation(true, e1, PredicateKind::CorrelatesTo, x,
                                                        std::move(prov)));
                    }
                }
            }
            break;
        }
        case PatternKind::ElapsedSucceedingSameType: {
            const ClassIdx eventType = param_class(inst, tax, "eventType");
            const auto classes = matchOn();
            for (EventIdx e1 = 0; e1 < nEv; ++e1) {
                if (!tax.is_subclass(s.event(e1).type, eventType)) continue;
                if (inst.find("filterAttribute") && inst.find("filterValue")) {
                    const Scalar* v = find_attribute(s.event(e1).attributes,
                                                     param_string(inst, "filterAttribute"));
                    if (!v || !scalar_equals(*v, *param_scalar(inst, "filterValue"))) continue;
                }
                std::optional<EventIdx> best;
                for (EventIdx e2 = e1 + 1; e2 < nEv && !best; ++e2) {
                    if (!tax.is_subclass(s.event(e2).type, eventType)) continue;
                    if (shares_all_classes(e1, e2, classes)) best = e2;
                }
                if (!best) continue;
                Provenance prov;
                prov.pattern = PatternKind::ElapsedSucceedingSameType;
                prov.inputs = {e1, *best};
                r.facts.push_back(make_measurement(
                    true, e1, MeasureKey::Elapsed,
                    static_cast<double>(s.event(*best).timestamp - s.event(e1).timestamp),
                    Unit::Millis, std::move(prov)));
            }
            break;
        }
        case PatternKind::ElapsedMaximum: {
            const ClassIdx startT = param_class(inst, tax, "start");
            const ClassIdx endT = param_class(inst, tax, "end");
            const ClassIdx entityType = param_class(inst, tax, "entityType");
            for (EntityIdx x = 0; x < nEnt; ++x) {
                if (!has_class(s, x, entityType)) continue;
                std::optional<EventIdx> first, last;
                for (EventIdx e = 0; e < nEv; ++e) {
                    if (!corr(s, e, x, includeDerived)) continue;
                    if (tax.is_subclass(s.event(e).type, startT) && !first) first = e;
                    if (tax.is_subclass(s.event(e).type, endT)) last = e;
                }
                if (!first || !last) continue;
                const double span = static_cast<double>(s.event(*last).timestamp -
                                                        s.event(*first).timestamp);
                if (span < 0) continue;
                Provenance prov;
                prov.pattern = PatternKind::ElapsedMaximum;
                if (*first == *last)
                    prov.inputs = {*first};
                else
                    prov.inputs = {std::min(*first, *last), std::max(*first, *last)};
                r.facts.push_back(make_measurement(false, x, MeasureKey::ElapsedMax, span,
                                                   Unit::Millis, std::move(prov)));
            }
            break;
        }
        case PatternKind::RelatePartof: {
            const bool wholeToPart =
                param_enum_or(inst, "direction", "whole_to_part") == "whole_to_part";
            std::optional<ClassIdx> evFilter, otherFilter;
            if (inst.find("eventEntityFilter"))
                evFilter = param_class(inst, tax, "eventEntityFilter");
            if (inst.find("otherEntityFilter"))
                otherFilter = param_class(inst, tax, "otherEntityFilter");
            for (const PartOfEdge& edge : s.part_of_edges()) {
                if (edge.derived && !includeDerived) continue;
                const EntityIdx onEvent = wholeToPart ? edge.whole : edge.part;
                const EntityIdx other = wholeToPart ? edge.part : edge.whole;
                if (evFilter && !has_class(s, onEvent, *evFilter)) continue;
                if (otherFilter && !has_class(s, other, *otherFilter)) continue;
                for (EventIdx e = 0; e < nEv; ++e) {
                    if (!corr(s, e, onEvent, includeDerived)) continue;
                    if (corr(s, e, other, false)) continue;  // present in base log
                    Provenance prov;
                    prov.pattern = PatternKind::RelatePartof;
                    prov.inputs = {e};
                    r.facts.push_back(make_relation(true, e, PredicateKind::CorrelatesTo, other,
                                                    std::move(prov)));
                }
            }
            break;
        }
        case PatternKind::RelatePrecedingAggregation:
        case PatternKind::RelateSucceedingAggregation: {
            const bool preceding = inst.pattern == PatternKind::RelatePrecedingAggregation;
            const ClassIdx aggType = param_class_or(inst, tax, "aggType", Taxonomy::kAggregate);
            const ClassIdx entityType =
                param_class_or(inst, tax, "entityType", Taxonomy::kProductionEntity);
            const bool recursive = param_bool_or(inst, "recursive", false);

            // extraRel[(e, x)] models correlations discovered by earlier hops.
            std::vector<std::pair<EventIdx, EntityIdx>> extraRel;
            auto related = [&](EventIdx e, EntityIdx x) {
                if (corr(s, e, x, includeDerived)) return true;
                return std::find(extraRel.begin(), extraRel.end(), std::make_pair(e, x)) !=
                       extraRel.end();
            };
            std::vector<std::pair<EventIdx, EntityIdx>> emitted;
            auto pass = [&]() {
                bool changed = false;
                for (EventIdx a = 0; a < nEv; ++a) {
                    if (!tax.is_subclass(s.event(a).type, aggType)) continue;
                    std::vector<EntityIdx> ins, outs;
                    for (EntityIdx x = 0; x < nEnt; ++x) {
                        if (!has_class(s, x, entityType)) continue;
                        if (corr(s, a, x, includeDerived, Role::Input)) ins.push_back(x);
                        if (corr(s, a, x, includeDerived, Role::Output)) outs.push_back(x);
                    }
                    if (ins.empty() || outs.empty()) continue;
                    const auto& from = preceding ? ins : outs;
                    const auto& to = preceding ? outs : ins;
                    for (EntityIdx x : from) {
                        for (EventIdx e = 0; e < nEv; ++e) {
                            if (preceding ? e >= a : e <= a) continue;
                            if (!related(e, x)) continue;
                            for (EntityIdx y : to) {
                                if (recursive && !related(e, y)) {
                                    extraRel.emplace_back(e, y);
                                    changed = true;
                                }
                                const auto key = std::make_pair(e, y);
                                if (std::find(emitted.begin(), emitted.end(), key) !=
                                    emitted.end())
                                    continue;
                                emitted.push_back(key);
                                Provenance prov;
                                prov.pattern = inst.pattern;
                                prov.inputs = {std::min(e, a), std::max(e, a)};
                                r.facts.push_back(make_relation(
                                    true, e, PredicateKind::CorrelatesTo, y, std::move(prov)));
                            }
                        }
                    }
                }
                return changed;
            };
            if (recursive) {
                while (pass()) {
                }
            } else {
                pass();
            }
            break;
        }
        case PatternKind::DerivePartof: {
            const ClassIdx partT = param_class(inst, tax, "partEntityType");
            const ClassIdx wholeT =
                param_class_or(inst, tax, "wholeEntityType", Taxonomy::kProductionEntity);
            for (const OInterval& iv :
                 intervals(s, param_class(inst, tax, "start"), param_class(inst, tax, "end"),
                           true, includeDerived)) {
                if (iv.pe == kNoIdx || !has_class(s, iv.pe, wholeT)) continue;
                for (EventIdx e = 0; e < nEv; ++e) {
                    if (!in_interval(e, iv) || !corr(s, e, iv.resource, includeDerived))
                        continue;
                    for (EntityIdx p = 0; p < nEnt; ++p) {
                        if (p == iv.pe || !has_class(s, p, partT) ||
                            !corr(s, e, p, includeDerived))
                            continue;
                        Provenance prov;
                        prov.pattern = PatternKind::DerivePartof;
                        prov.inputs = {e};
                        prov.hasInterval = true;
                        prov.intervalStart = iv.start;
                        prov.intervalEnd = iv.end;
                        r.facts.push_back(make_relation(false, p, PredicateKind::IsPartOf,
                                                        iv.pe, std::move(prov)));
                    }
                }
            }
            break;
        }
    }
    detail::finalize(s, r);
    return r;
}

}  // namespace trace_enrich
