#pragma once
// The event knowledge graph: typed entities and events, correlation edges,
// part-of edges, and time-sorted per-entity indices. Built once, then frozen;
// concurrent readers are safe.
//
// Events are totally ordered by (timestamp, id bytes). After freezing, an
// event's index in the store IS its position in that order, so order
// comparisons reduce to integer comparisons.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "trace_enrich/taxonomy.hpp"
#include "trace_enrich/types.hpp"

namespace trace_enrich {

struct Correlation {
    EntityIdx entity = 0;
    Role role = Role::None;
    bool derived = false;

    bool operator==(const Correlation&) const = default;
};

using AttributeList = std::vector<std::pair<std::string, Scalar>>;  // sorted by name

inline const Scalar* find_attribute(const AttributeList& attrs, const std::string& name) {
    auto it = std::lower_bound(attrs.begin(), attrs.end(), name,
                               [](const auto& a, const std::string& n) { return a.first < n; });
    if (it != attrs.end() && it->first == name) return &it->second;
    return nullptr;
}

inline void set_attribute(AttributeList& attrs, const std::string& name, Scalar value) {
    auto it = std::lower_bound(attrs.begin(), attrs.end(), name,
                               [](const auto& a, const std::string& n) { return a.first < n; });
    if (it != attrs.end() && it->first == name)
        it->second = std::move(value);
    else
        attrs.insert(it, {name, std::move(value)});
}

struct Entity {
    std::string id;
    std::vector<ClassIdx> types;  // sorted, non-empty, all ⊑ Entity
    AttributeList attributes;
};

struct Event {
    std::string id;
    ClassIdx type = 0;  // ⊑ Event
    TimestampMs timestamp = 0;
    AttributeList attributes;
    std::vector<Correlation> correlations;  // sorted by (entity, role)
};

struct PartOfEdge {
    EntityIdx part = 0;
    EntityIdx whole = 0;
    bool derived = false;
};

// One matched (start, end) occurrence for a (resource[, production entity]) group.
struct Interval {
    EntityIdx resource = 0;
    EntityIdx productionEntity = kNoIdx;  // kNoIdx when pairing on resource only
    EventIdx start = 0;
    EventIdx end = 0;
};

// Orders by (timestamp, id bytes); equal only for the same event.
inline int compare_events(const Event& a, const Event& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp ? -1 : 1;
    const int c = a.id.compare(b.id);
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

class GraphStore {
public:
    GraphStore() = default;
    GraphStore(Taxonomy taxonomy, std::vector<Entity> entities, std::vector<Event> events,
               std::vector<PartOfEdge> partOf)
        : taxonomy_(std::move(taxonomy)),
          entities_(std::move(entities)),
          events_(std::move(events)),
          partOf_(std::move(partOf)) {
        freeze();
    }

    const Taxonomy& taxonomy() const { return taxonomy_; }
    const std::vector<Entity>& entities() const { return entities_; }
    const std::vector<Event>& events() const { return events_; }
    const std::vector<PartOfEdge>& part_of_edges() const { return partOf_; }

    const Entity& entity(EntityIdx i) const { return entities_[i]; }
    const Event& event(EventIdx i) const { return events_[i]; }

    std::optional<EntityIdx> find_entity(const std::string& id) const {
        auto it = entityIndex_.find(id);
        if (it == entityIndex_.end()) return std::nullopt;
        return it->second;
    }
    std::optional<EventIdx> find_event(const std::string& id) const {
        auto it = eventIndex_.find(id);
        if (it == eventIndex_.end()) return std::nullopt;
        return it->second;
    }

    bool entity_has_class(EntityIdx e, ClassIdx filter) const {
        for (ClassIdx t : entities_[e].types)
            if (taxonomy_.is_subclass(t, filter)) return true;
        return false;
    }

    bool event_has_class(EventIdx e, ClassIdx filter) const {
        return taxonomy_.is_subclass(events_[e].type, filter);
    }

    // Correlated entities of some type ⊑ filter, optionally role-matching,
    // in entity-id order. includeDerived=false restricts to base edges.
    std::vector<EntityIdx> correlated_entities(EventIdx ev, ClassIdx filter,
                                               std::optional<Role> role = std::nullopt,
                                               bool includeDerived = true) const {
        std::vector<EntityIdx> out;
        for (const Correlation& c : events_[ev].correlations) {
            if (c.derived && !includeDerived) continue;
            if (role && c.role != *role) continue;
            if (!entity_has_class(c.entity, filter)) continue;
            if (!out.empty() && out.back() == c.entity) continue;  // same entity, two roles
            out.push_back(c.entity);
        }
        return out;  // correlations are sorted by entity, entities by id
    }

    bool correlates(EventIdx ev, EntityIdx ent, bool includeDerived = true) const {
        const auto& cs = events_[ev].correlations;
        auto it = std::lower_bound(cs.begin(), cs.end(), ent,
                                   [](const Correlation& c, EntityIdx e) { return c.entity < e; });
        for (; it != cs.end() && it->entity == ent; ++it)
            if (includeDerived || !it->derived) return true;
        return false;
    }

    bool correlates_base(EventIdx ev, EntityIdx ent) const { return correlates(ev, ent, false); }

    // Events correlated to an entity, ascending in total order.
    const std::vector<EventIdx>& events_of(EntityIdx ent) const { return entityEvents_[ent]; }

    // Events of one concrete type correlated to an entity, ascending. May be empty.
    const std::vector<EventIdx>& events_of_type(EntityIdx ent, ClassIdx type) const {
        static const std::vector<EventIdx> kEmpty;
        const auto& byType = typeEvents_[ent];
        auto it = std::lower_bound(byType.begin(), byType.end(), type,
                                   [](const auto& p, ClassIdx t) { return p.first < t; });
        if (it != byType.end() && it->first == type) return it->second;
        return kEmpty;
    }

    // part-of adjacency: wholes an entity is part of / parts an entity has.
    const std::vector<EntityIdx>& wholes_of(EntityIdx part, bool includeDerived = true) const {
        return includeDerived ? wholesAll_[part] : wholesBase_[part];
    }
    const std::vector<EntityIdx>& parts_of(EntityIdx whole, bool includeDerived = true) const {
        return includeDerived ? partsAll_[whole] : partsBase_[whole];
    }

    bool has_part_of(EntityIdx part, EntityIdx whole) const {
        const auto& ws = wholesAll_[part];
        return std::binary_search(ws.begin(), ws.end(), whole);
    }

    // True if adding part->whole would close a cycle (whole already reaches part).
    bool part_of_would_cycle(EntityIdx part, EntityIdx whole) const {
        if (part == whole) return true;
        std::vector<EntityIdx> stack{whole};
        std::vector<bool> seen(entities_.size(), false);
        seen[whole] = true;
        while (!stack.empty()) {
            EntityIdx cur = stack.back();
            stack.pop_back();
            for (EntityIdx next : wholesAll_[cur]) {
                if (next == part) return true;
                if (!seen[next]) {
                    seen[next] = true;
                    stack.push_back(next);
                }
            }
        }
        return false;
    }

private:
    void freeze() {
        std::sort(entities_.begin(), entities_.end(),
                  [](const Entity& a, const Entity& b) { return a.id < b.id; });
        std::sort(events_.begin(), events_.end(),
                  [](const Event& a, const Event& b) { return compare_events(a, b) < 0; });
        rebuild_indices();
    }

    void rebuild_indices() {
        entityIndex_.clear();
        eventIndex_.clear();
        entityIndex_.reserve(entities_.size());
        eventIndex_.reserve(events_.size());
        for (std::size_t i = 0; i < entities_.size(); ++i)
            entityIndex_.emplace(entities_[i].id, static_cast<EntityIdx>(i));
        for (std::size_t i = 0; i < events_.size(); ++i)
            eventIndex_.emplace(events_[i].id, static_cast<EventIdx>(i));

        entityEvents_.assign(entities_.size(), {});
        typeEvents_.assign(entities_.size(), {});
        for (std::size_t i = 0; i < events_.size(); ++i) {
            const Event& ev = events_[i];
            EntityIdx last = kNoIdx;
            for (const Correlation& c : ev.correlations) {
                if (c.entity == last) continue;
                last = c.entity;
                entityEvents_[c.entity].push_back(static_cast<EventIdx>(i));
                auto& byType = typeEvents_[c.entity];
                auto it = std::lower_bound(
                    byType.begin(), byType.end(), ev.type,
                    [](const auto& p, ClassIdx t) { return p.first < t; });
                if (it == byType.end() || it->first != ev.type)
                    it = byType.insert(it, {ev.type, {}});
                it->second.push_back(static_cast<EventIdx>(i));
            }
        }

        wholesBase_.assign(entities_.size(), {});
        partsBase_.assign(entities_.size(), {});
        wholesAll_.assign(entities_.size(), {});
        partsAll_.assign(entities_.size(), {});
        for (const PartOfEdge& e : partOf_) {
            wholesAll_[e.part].push_back(e.whole);
            partsAll_[e.whole].push_back(e.part);
            if (!e.derived) {
                wholesBase_[e.part].push_back(e.whole);
                partsBase_[e.whole].push_back(e.part);
            }
        }
        for (auto* adj : {&wholesBase_, &partsBase_, &wholesAll_, &partsAll_})
            for (auto& v : *adj) {
                std::sort(v.begin(), v.end());
                v.erase(std::unique(v.begin(), v.end()), v.end());
            }
    }

    Taxonomy taxonomy_;
    std::vector<Entity> entities_;  // sorted by id
    std::vector<Event> events_;     // sorted by total order
    std::vector<PartOfEdge> partOf_;

    std::unordered_map<std::string, EntityIdx> entityIndex_;
    std::unordered_map<std::string, EventIdx> eventIndex_;
    std::vector<std::vector<EventIdx>> entityEvents_;
    std::vector<std::vector<std::pair<ClassIdx, std::vector<EventIdx>>>> typeEvents_;
    std::vector<std::vector<EntityIdx>> wholesBase_, partsBase_, wholesAll_, partsAll_;
};

// --- interval pairing ---------------------------------------------------------

struct IntervalBuild {
    std::vector<Interval> intervals;  // sorted by (resource, productionEntity, key(start))
    std::vector<std::string> warnings;
};

// Pairs start/end events per (resource[, production entity]) group, FIFO per
// group: each end closes the earliest still-open start. Unmatched boundaries
// and overlapping closes are reported as warnings, never errors.
inline IntervalBuild build_intervals(const GraphStore& store, ClassIdx startType,
                                     ClassIdx endType, bool pairOnProductionEntity,
                                     bool includeDerived = true) {
    IntervalBuild out;
    const Taxonomy& tax = store.taxonomy();
    const ClassIdx resourceRoot = tax.index_of(Taxonomy::kResource);
    const ClassIdx peRoot = tax.index_of(Taxonomy::kProductionEntity);

    struct Group {
        std::deque<EventIdx> open;
        std::vector<Interval> done;
    };
    std::map<std::pair<EntityIdx, EntityIdx>, Group> groups;

    auto group_label = [&](EntityIdx r, EntityIdx pe) {
        std::string s = store.entity(r).id;
        if (pe != kNoIdx) s += "/" + store.entity(pe).id;
        return s;
    };

    const auto& events = store.events();
    for (EventIdx i = 0; i < events.size(); ++i) {
        const bool isStart = tax.is_subclass(events[i].type, startType);
        const bool isEnd = tax.is_subclass(events[i].type, endType);
        if (!isStart && !isEnd) continue;
        std::vector<std::pair<EntityIdx, EntityIdx>> keys;
        const auto resources =
            store.correlated_entities(i, resourceRoot, std::nullopt, includeDerived);
        if (pairOnProductionEntity) {
            const auto pes = store.correlated_entities(i, peRoot, std::nullopt, includeDerived);
            for (EntityIdx r : resources)
                for (EntityIdx pe : pes) keys.emplace_back(r, pe);
        } else {
            for (EntityIdx r : resources) keys.emplace_back(r, kNoIdx);
        }
        for (const auto& key : keys) {
            Group& g = groups[key];
            if (isEnd && !g.open.empty()) {
                EventIdx start = g.open.front();
                g.open.pop_front();
                if (!g.open.empty())
                    out.warnings.push_back("interval group " +
                                           group_label(key.first, key.second) +
                                           ": overlapping intervals at end event '" +
                                           events[i].id + "'");
                g.done.push_back(Interval{key.first, key.second, start, i});
            } else if (isStart) {
                g.open.push_back(i);
            } else {
                out.warnings.push_back("interval group " + group_label(key.first, key.second) +
                                       ": unmatched end event '" + events[i].id + "'");
            }
        }
    }

    for (auto& [key, g] : groups) {
        for (EventIdx open : g.open)
            out.warnings.push_back("interval group " + group_label(key.first, key.second) +
                                   ": unmatched start event '" + store.event(open).id + "'");
        out.intervals.insert(out.intervals.end(), g.done.begin(), g.done.end());
    }
    // Map iteration gives (resource, productionEntity) order; starts are FIFO within
    // a group, so each group's intervals are already ascending by key(start).
    return out;
}

}  // namespace trace_enrich
