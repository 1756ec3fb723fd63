#pragma once
// File I/O: taxonomy JSON, event-log JSONL (entity/event/relation records),
// derived-fact JSONL output, and materialization of facts back into a store.
//
// Strict mode turns data problems (dangling references, unknown fields,
// malformed values) into errors; otherwise the offending record is skipped
// with a warning. Malformed JSON and duplicate ids are always errors.

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "trace_enrich/facts.hpp"
#include "trace_enrich/store.hpp"
#include "trace_enrich/taxonomy.hpp"
#include "trace_enrich/types.hpp"

namespace trace_enrich {

using json = nlohmann::json;

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("error while reading '" + path + "'");
    return buf.str();
}

// A named blob of JSONL text; name is used in diagnostics only.
struct Source {
    std::string name;
    std::string text;
};

// --- taxonomy -----------------------------------------------------------------

// Merges {"subclass_of": {"Class": ["Parent", ...]}} into the default taxonomy.
inline Taxonomy load_taxonomy_text(const std::string& text) {
    Taxonomy tax = Taxonomy::with_defaults();
    std::string trimmed = text;
    trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
    if (trimmed.empty()) return tax;

    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("taxonomy file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw DataError("taxonomy file must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (key != "subclass_of")
            throw DataError("taxonomy file: unknown field '" + key + "'");
        if (!value.is_object())
            throw DataError("taxonomy file: 'subclass_of' must map class to parent list");
        for (const auto& [cls, parents] : value.items()) {
            if (!parents.is_array())
                throw DataError("taxonomy file: parents of '" + cls + "' must be an array");
            for (const auto& p : parents) {
                if (!p.is_string())
                    throw DataError("taxonomy file: parent of '" + cls + "' must be a string");
                const std::string parent = p.get<std::string>();
                if (!tax.has_class(parent) && !value.contains(parent))
                    throw DataError("taxonomy file: unknown parent '" + parent +
                                    "' for class '" + cls + "'");
            }
        }
        for (const auto& [cls, parents] : value.items()) {
            std::vector<std::string> ps;
            for (const auto& p : parents) ps.push_back(p.get<std::string>());
            tax.add_class(cls, ps);
        }
    }
    tax.build_closure();
    return tax;
}

inline Taxonomy load_taxonomy(const std::string& path) {
    return load_taxonomy_text(read_file(path));
}

// --- event-log loading ----------------------------------------------------------

struct LoadResult {
    GraphStore store;
    std::vector<std::string> warnings;
};

namespace detail {

struct PendingCorrelation {
    std::string entity;
    Role role = Role::None;
};

struct PendingEvent {
    std::string id;
    ClassIdx type = 0;
    TimestampMs timestamp = 0;
    AttributeList attributes;
    std::vector<PendingCorrelation> correlations;
    std::string origin;
};

struct PendingRelation {
    std::string subject;
    std::string object;
    std::string origin;
};

struct LineContext {
    const std::string* sourceName;
    std::size_t line;
    bool strict;
    std::vector<std::string>* warnings;

    std::string where() const { return *sourceName + ":" + std::to_string(line); }

    // Strict: throw. Lenient: record a warning and tell the caller to skip.
    bool reject(const std::string& msg) const {
        if (strict) throw DataError(where() + ": " + msg);
        warnings->push_back(where() + ": " + msg + " (record skipped)");
        return false;
    }
};

inline std::optional<Scalar> scalar_from_json(const json& v) {
    if (v.is_boolean()) return Scalar{v.get<bool>()};
    if (v.is_number_integer()) return Scalar{v.get<std::int64_t>()};
    if (v.is_number_unsigned()) {
        const std::uint64_t u = v.get<std::uint64_t>();
        if (u <= 0x7fffffffffffffffull) return Scalar{static_cast<std::int64_t>(u)};
        return Scalar{static_cast<double>(u)};
    }
    if (v.is_number_float()) return Scalar{v.get<double>()};
    if (v.is_string()) return Scalar{v.get<std::string>()};
    return std::nullopt;
}

inline bool parse_attributes(const json& rec, const LineContext& ctx, AttributeList& out) {
    auto it = rec.find("attributes");
    if (it == rec.end()) return true;
    if (!it->is_object()) return ctx.reject("'attributes' must be an object");
    for (const auto& [name, value] : it->items()) {
        auto scalar = scalar_from_json(value);
        if (!scalar)
            return ctx.reject("attribute '" + name + "' must be a string, number or boolean");
        out.emplace_back(name, std::move(*scalar));
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return true;
}

inline bool check_fields(const json& rec, const LineContext& ctx,
                         std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : rec.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end()) {
            if (ctx.strict) throw DataError(ctx.where() + ": unknown field '" + key + "'");
            ctx.warnings->push_back(ctx.where() + ": unknown field '" + key + "' (ignored)");
        }
    }
    return true;
}

}  // namespace detail

// Loads one or more JSONL sources into a frozen store. Order of records within
// and across sources does not affect the result.
inline LoadResult load_store_sources(const std::vector<Source>& sources,
                                     const Taxonomy& taxonomy, bool strict) {
    using namespace detail;
    std::vector<Entity> entities;
    std::vector<PendingEvent> events;
    std::vector<PendingRelation> relations;
    std::vector<std::string> warnings;

    for (const Source& src : sources) {
        std::size_t lineNo = 0;
        std::size_t pos = 0;
        while (pos <= src.text.size()) {
            std::size_t eol = src.text.find('\n', pos);
            if (eol == std::string::npos) eol = src.text.size();
            std::string_view line(src.text.data() + pos, eol - pos);
            pos = eol + 1;
            ++lineNo;
            while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
                line.remove_suffix(1);
            if (line.empty()) {
                if (pos > src.text.size()) break;
                continue;
            }
            LineContext ctx{&src.name, lineNo, strict, &warnings};

            json rec;
            try {
                rec = json::parse(line);
            } catch (const json::exception& e) {
                throw DataError(ctx.where() + ": malformed JSON: " + e.what());
            }
            if (!rec.is_object()) throw DataError(ctx.where() + ": record must be a JSON object");
            const auto kindIt = rec.find("kind");
            if (kindIt == rec.end() || !kindIt->is_string())
                throw DataError(ctx.where() + ": record has no 'kind'");
            const std::string kind = kindIt->get<std::string>();

            if (kind == "entity") {
                check_fields(rec, ctx, {"kind", "id", "types", "attributes"});
                if (!rec.contains("id") || !rec["id"].is_string()) {
                    ctx.reject("entity record needs a string 'id'");
                    continue;
                }
                Entity ent;
                ent.id = rec["id"].get<std::string>();
                if (!rec.contains("types") || !rec["types"].is_array() || rec["types"].empty()) {
                    ctx.reject("entity '" + ent.id + "' needs a non-empty 'types' array");
                    continue;
                }
                bool ok = true;
                for (const auto& t : rec["types"]) {
                    if (!t.is_string() || !taxonomy.has_class(t.get<std::string>())) {
                        ok = ctx.reject("entity '" + ent.id + "' has undeclared type " + t.dump());
                        break;
                    }
                    const ClassIdx c = taxonomy.index_of(t.get<std::string>());
                    if (!taxonomy.is_entity_class(c)) {
                        ok = ctx.reject("entity '" + ent.id + "' type '" + taxonomy.name_of(c) +
                                        "' is not a subclass of Entity");
                        break;
                    }
                    ent.types.push_back(c);
                }
                if (!ok) continue;
                std::sort(ent.types.begin(), ent.types.end());
                ent.types.erase(std::unique(ent.types.begin(), ent.types.end()),
                                ent.types.end());
                if (!parse_attributes(rec, ctx, ent.attributes)) continue;
                entities.push_back(std::move(ent));
            } else if (kind == "event") {
                check_fields(rec, ctx, {"kind", "id", "type", "timestamp", "entities",
                                        "attributes"});
                if (!rec.contains("id") || !rec["id"].is_string()) {
                    ctx.reject("event record needs a string 'id'");
                    continue;
                }
                PendingEvent ev;
                ev.id = rec["id"].get<std::string>();
                ev.origin = ctx.where();
                if (!rec.contains("type") || !rec["type"].is_string() ||
                    !taxonomy.has_class(rec["type"].get<std::string>())) {
                    ctx.reject("event '" + ev.id + "' has missing or undeclared 'type'");
                    continue;
                }
                ev.type = taxonomy.index_of(rec["type"].get<std::string>());
                if (!taxonomy.is_event_class(ev.type)) {
                    ctx.reject("event '" + ev.id + "' type '" + taxonomy.name_of(ev.type) +
                               "' is not a subclass of Event");
                    continue;
                }
                const auto tsIt = rec.find("timestamp");
                if (tsIt == rec.end()) {
                    ctx.reject("event '" + ev.id + "' has no timestamp");
                    continue;
                }
                if (tsIt->is_number_integer() || tsIt->is_number_unsigned()) {
                    ev.timestamp = tsIt->get<std::int64_t>();
                } else if (tsIt->is_string()) {
                    auto parsed = parse_iso8601_utc(tsIt->get<std::string>());
                    if (!parsed) {
                        ctx.reject("event '" + ev.id + "' timestamp '" +
                                   tsIt->get<std::string>() + "' is not ISO-8601 UTC");
                        continue;
                    }
                    ev.timestamp = *parsed;
                } else {
                    ctx.reject("event '" + ev.id +
                               "' timestamp must be integer milliseconds or an ISO-8601 string");
                    continue;
                }
                bool ok = true;
                if (auto entIt = rec.find("entities"); entIt != rec.end()) {
                    if (!entIt->is_array()) {
                        ctx.reject("event '" + ev.id + "' field 'entities' must be an array");
                        continue;
                    }
                    for (const auto& ref : *entIt) {
                        if (!ref.is_object() || !ref.contains("id") || !ref["id"].is_string()) {
                            ok = ctx.reject("event '" + ev.id +
                                            "' entity reference must be {\"id\": ...}");
                            break;
                        }
                        for (const auto& [k, _] : ref.items())
                            if (k != "id" && k != "role") {
                                if (strict)
                                    throw DataError(ctx.where() + ": unknown field '" + k +
                                                    "' in entity reference");
                                warnings.push_back(ctx.where() + ": unknown field '" + k +
                                                   "' in entity reference (ignored)");
                            }
                        PendingCorrelation pc;
                        pc.entity = ref["id"].get<std::string>();
                        if (ref.contains("role")) {
                            const std::string role =
                                ref["role"].is_string() ? ref["role"].get<std::string>() : "";
                            if (role == "input")
                                pc.role = Role::Input;
                            else if (role == "output")
                                pc.role = Role::Output;
                            else {
                                ok = ctx.reject("event '" + ev.id + "' has invalid role " +
                                                ref["role"].dump());
                                break;
                            }
                        }
                        ev.correlations.push_back(std::move(pc));
                    }
                }
                if (!ok) continue;
                if (!parse_attributes(rec, ctx, ev.attributes)) continue;
                events.push_back(std::move(ev));
            } else if (kind == "relation") {
                check_fields(rec, ctx, {"kind", "subject", "predicate", "object"});
                if (!rec.contains("subject") || !rec["subject"].is_string() ||
                    !rec.contains("object") || !rec["object"].is_string() ||
                    !rec.contains("predicate") || !rec["predicate"].is_string()) {
                    ctx.reject("relation record needs string subject/predicate/object");
                    continue;
                }
                if (rec["predicate"].get<std::string>() != "isPartOf") {
                    ctx.reject("relation predicate '" + rec["predicate"].get<std::string>() +
                               "' is not supported in input (only isPartOf)");
                    continue;
                }
                PendingRelation rel;
                rel.subject = rec["subject"].get<std::string>();
                rel.object = rec["object"].get<std::string>();
                rel.origin = ctx.where();
                if (rel.subject == rel.object) {
                    ctx.reject("relation subject and object are both '" + rel.subject + "'");
                    continue;
                }
                relations.push_back(std::move(rel));
            } else {
                throw DataError(ctx.where() + ": unknown record kind '" + kind + "'");
            }
        }
    }

    // Resolve references. Entities first so events/relations can look them up.
    std::sort(entities.begin(), entities.end(),
              [](const Entity& a, const Entity& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < entities.size(); ++i)
        if (entities[i].id == entities[i - 1].id)
            throw DataError("duplicate entity id '" + entities[i].id + "'");
    std::unordered_map<std::string, EntityIdx> entityIdx;
    entityIdx.reserve(entities.size());
    for (std::size_t i = 0; i < entities.size(); ++i)
        entityIdx.emplace(entities[i].id, static_cast<EntityIdx>(i));

    std::vector<Event> resolved;
    resolved.reserve(events.size());
    std::unordered_set<std::string> eventIds;
    eventIds.reserve(events.size());
    const ClassIdx aggregate = taxonomy.has_class(Taxonomy::kAggregate)
                                   ? taxonomy.index_of(Taxonomy::kAggregate)
                                   : kNoIdx;
    for (PendingEvent& pe : events) {
        if (!eventIds.insert(pe.id).second)
            throw DataError("duplicate event id '" + pe.id + "'");
        if (entityIdx.count(pe.id))
            throw DataError("id '" + pe.id + "' is used for both an entity and an event");
        Event ev;
        ev.id = std::move(pe.id);
        ev.type = pe.type;
        ev.timestamp = pe.timestamp;
        ev.attributes = std::move(pe.attributes);
        bool ok = true;
        bool hasInput = false, hasOutput = false;
        for (const PendingCorrelation& pc : pe.correlations) {
            auto it = entityIdx.find(pc.entity);
            if (it == entityIdx.end()) {
                if (strict)
                    throw DataError(pe.origin + ": event '" + ev.id +
                                    "' references unknown entity '" + pc.entity + "'");
                warnings.push_back(pe.origin + ": event '" + ev.id +
                                   "' references unknown entity '" + pc.entity +
                                   "' (event dropped)");
                ok = false;
                break;
            }
            hasInput |= pc.role == Role::Input;
            hasOutput |= pc.role == Role::Output;
            ev.correlations.push_back(Correlation{it->second, pc.role, false});
        }
        if (!ok) continue;
        std::sort(ev.correlations.begin(), ev.correlations.end(),
                  [](const Correlation& a, const Correlation& b) {
                      return a.entity != b.entity ? a.entity < b.entity : a.role < b.role;
                  });
        ev.correlations.erase(std::unique(ev.correlations.begin(), ev.correlations.end()),
                              ev.correlations.end());
        if (aggregate != kNoIdx && taxonomy.is_subclass(ev.type, aggregate) &&
            (!hasInput || !hasOutput))
            warnings.push_back("aggregation event '" + ev.id +
                               "' lacks input/output roles on its entities");
        resolved.push_back(std::move(ev));
    }

    std::vector<PartOfEdge> partOf;
    std::set<std::pair<EntityIdx, EntityIdx>> edgeSeen;
    for (const PendingRelation& rel : relations) {
        auto s = entityIdx.find(rel.subject);
        auto o = entityIdx.find(rel.object);
        if (s == entityIdx.end() || o == entityIdx.end()) {
            const std::string& missing = s == entityIdx.end() ? rel.subject : rel.object;
            if (strict)
                throw DataError(rel.origin + ": relation references unknown entity '" +
                                missing + "'");
            warnings.push_back(rel.origin + ": relation references unknown entity '" + missing +
                               "' (relation skipped)");
            continue;
        }
        if (edgeSeen.emplace(s->second, o->second).second)
            partOf.push_back(PartOfEdge{s->second, o->second, false});
    }

    // Base part-of edges must be acyclic.
    {
        std::vector<std::uint32_t> outDeg(entities.size(), 0);
        std::vector<std::vector<EntityIdx>> incoming(entities.size());
        for (const PartOfEdge& e : partOf) {
            ++outDeg[e.part];
            incoming[e.whole].push_back(e.part);
        }
        std::vector<EntityIdx> queue;
        for (std::size_t i = 0; i < entities.size(); ++i)
            if (outDeg[i] == 0) queue.push_back(static_cast<EntityIdx>(i));
        std::size_t done = 0;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            ++done;
            for (EntityIdx p : incoming[queue[head]])
                if (--outDeg[p] == 0) queue.push_back(p);
        }
        if (done != entities.size()) {
            std::string cyc;
            for (std::size_t i = 0; i < entities.size(); ++i)
                if (outDeg[i] > 0) cyc += (cyc.empty() ? "" : ", ") + entities[i].id;
            throw DataError("isPartOf relations form a cycle involving: " + cyc);
        }
    }

    return LoadResult{GraphStore(taxonomy, std::move(entities), std::move(resolved),
                                 std::move(partOf)),
                      std::move(warnings)};
}

inline LoadResult load_store(const std::vector<std::string>& paths, const Taxonomy& taxonomy,
                             bool strict) {
    std::vector<Source> sources;
    sources.reserve(paths.size());
    for (const std::string& p : paths) sources.push_back(Source{p, read_file(p)});
    return load_store_sources(sources, taxonomy, strict);
}

// --- JSON writing helpers -------------------------------------------------------

namespace detail {

inline void append_json_string(std::string& out, std::string_view s) {
    out += '"';
    for (char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(ch) < 0x20) {
                    static const char* hex = "0123456789abcdef";
                    out += "\\u00";
                    out += hex[(ch >> 4) & 0xf];
                    out += hex[ch & 0xf];
                } else {
                    out += ch;
                }
        }
    }
    out += '"';
}

inline void append_scalar(std::string& out, const Scalar& s) {
    if (const auto* b = std::get_if<bool>(&s)) {
        out += *b ? "true" : "false";
    } else if (const auto* i = std::get_if<std::int64_t>(&s)) {
        char buf[24];
        auto res = std::to_chars(buf, buf + sizeof(buf), *i);
        out.append(buf, res.ptr);
    } else if (const auto* d = std::get_if<double>(&s)) {
        out += format_number(*d);
    } else {
        append_json_string(out, std::get<std::string>(s));
    }
}

}  // namespace detail

// --- derived-fact output ---------------------------------------------------------

// One canonical JSONL line per fact. Output is byte-stable: facts are
// normalized (sorted + deduplicated) before writing.
inline void write_facts_stream(const GraphStore& store, FactSet facts, std::ostream& out) {
    normalize_facts(store, facts);
    std::string line;
    for (const Fact& f : facts.facts) {
        line.clear();
        line += "{\"kind\":\"";
        line += f.kind == FactKind::Measurement ? "measurement" : "relation";
        line += "\",\"instance\":";
        detail::append_json_string(line, facts.instances[f.instance]);
        line += ",\"subject\":";
        detail::append_json_string(line, fact_subject_id(store, f));
        if (f.kind == FactKind::Measurement) {
            line += ",\"key\":\"";
            line += measure_key_name(f.key);
            line += "\",\"value\":";
            line += format_number(f.value);
            line += ",\"unit\":\"";
            line += unit_name(f.unit);
            line += "\"";
        } else {
            line += ",\"predicate\":\"";
            line += predicate_name(f.predicate);
            line += "\",\"object\":";
            detail::append_json_string(line, store.entity(f.object).id);
        }
        line += ",\"provenance\":{\"pattern\":\"";
        line += pattern_name(f.prov.pattern);
        line += "\",\"inputs\":[";
        for (std::size_t i = 0; i < f.prov.inputs.size(); ++i) {
            if (i) line += ',';
            detail::append_json_string(line, store.event(f.prov.inputs[i]).id);
        }
        line += "]";
        if (f.prov.hasInterval) {
            line += ",\"interval\":{\"start\":";
            detail::append_json_string(line, store.event(f.prov.intervalStart).id);
            line += ",\"end\":";
            detail::append_json_string(line, store.event(f.prov.intervalEnd).id);
            line += "}";
        }
        line += "}}\n";
        out << line;
    }
}

inline void write_facts(const GraphStore& store, const FactSet& facts, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_facts_stream(store, facts, out);
    out.flush();
    if (!out) throw IoError("error while writing '" + path + "'");
}

// --- materialization --------------------------------------------------------------

struct MaterializeResult {
    GraphStore store;
    std::vector<std::string> warnings;
};

// Folds facts into a new store: relations become derived correlation/part-of
// edges, measurements become "<instance>.<key>" attributes on their subject.
// Monotone: nothing is removed; conflicting or cycle-closing facts are
// rejected with a warning. applyRelations=false applies measurements only.
inline MaterializeResult materialize(const GraphStore& store, FactSet facts,
                                     bool applyRelations = true) {
    normalize_facts(store, facts);
    std::vector<Entity> entities = store.entities();
    std::vector<Event> events = store.events();
    std::vector<PartOfEdge> partOf = store.part_of_edges();
    std::vector<std::string> warnings;

    // Incremental part->whole adjacency for cycle checks.
    std::vector<std::vector<EntityIdx>> wholes(entities.size());
    for (const PartOfEdge& e : partOf) wholes[e.part].push_back(e.whole);
    auto reaches = [&](EntityIdx from, EntityIdx target) {
        std::vector<EntityIdx> stack{from};
        std::unordered_set<EntityIdx> seen{from};
        while (!stack.empty()) {
            EntityIdx cur = stack.back();
            stack.pop_back();
            for (EntityIdx next : wholes[cur]) {
                if (next == target) return true;
                if (seen.insert(next).second) stack.push_back(next);
            }
        }
        return false;
    };

    for (const Fact& f : facts.facts) {
        if (f.kind == FactKind::Measurement) {
            const std::string name =
                facts.instances[f.instance] + "." + measure_key_name(f.key);
            AttributeList& attrs =
                f.subjectIsEvent ? events[f.subject].attributes : entities[f.subject].attributes;
            if (const Scalar* existing = find_attribute(attrs, name)) {
                if (!scalar_equals(*existing, Scalar{f.value}))
                    warnings.push_back("attribute '" + name + "' on '" +
                                       fact_subject_id(store, f) +
                                       "' already set to a different value (kept existing)");
                continue;
            }
            set_attribute(attrs, name, Scalar{f.value});
        } else if (applyRelations) {
            if (f.predicate == PredicateKind::CorrelatesTo) {
                if (!f.subjectIsEvent) {
                    warnings.push_back("correlatesTo fact with entity subject '" +
                                       fact_subject_id(store, f) + "' skipped");
                    continue;
                }
                auto& cs = events[f.subject].correlations;
                bool exists = false;
                for (const Correlation& c : cs) exists |= c.entity == f.object;
                if (exists) continue;
                Correlation nc{f.object, Role::None, true};
                cs.insert(std::lower_bound(cs.begin(), cs.end(), nc,
                                           [](const Correlation& a, const Correlation& b) {
                                               return a.entity != b.entity ? a.entity < b.entity
                                                                           : a.role < b.role;
                                           }),
                          nc);
            } else {
                if (f.subjectIsEvent) {
                    warnings.push_back("isPartOf fact with event subject '" +
                                       fact_subject_id(store, f) + "' skipped");
                    continue;
                }
                const EntityIdx part = f.subject, whole = f.object;
                if (part == whole) {
                    warnings.push_back("isPartOf fact with identical part and whole '" +
                                       entities[part].id + "' skipped");
                    continue;
                }
                const auto& ws = wholes[part];
                if (std::find(ws.begin(), ws.end(), whole) != ws.end()) continue;
                if (reaches(whole, part)) {
                    warnings.push_back("isPartOf fact " + entities[part].id + " -> " +
                                       entities[whole].id + " would close a cycle (rejected)");
                    continue;
                }
                wholes[part].push_back(whole);
                partOf.push_back(PartOfEdge{part, whole, true});
            }
        }
    }

    return MaterializeResult{GraphStore(store.taxonomy(), std::move(entities), std::move(events),
                                        std::move(partOf)),
                             std::move(warnings)};
}

// --- base-record dump -------------------------------------------------------------

// Serializes a store's base records (no derived edges) in the input JSONL
// format; loading the dump reproduces an identical base store.
inline void dump_records(const GraphStore& store, std::ostream& out) {
    std::string line;
    for (const Entity& e : store.entities()) {
        line = "{\"kind\":\"entity\",\"id\":";
        detail::append_json_string(line, e.id);
        line += ",\"types\":[";
        for (std::size_t i = 0; i < e.types.size(); ++i) {
            if (i) line += ',';
            detail::append_json_string(line, store.taxonomy().name_of(e.types[i]));
        }
        line += ']';
        if (!e.attributes.empty()) {
            line += ",\"attributes\":{";
            for (std::size_t i = 0; i < e.attributes.size(); ++i) {
                if (i) line += ',';
                detail::append_json_string(line, e.attributes[i].first);
                line += ':';
                detail::append_scalar(line, e.attributes[i].second);
            }
            line += '}';
        }
        line += "}\n";
        out << line;
    }
    std::vector<const PartOfEdge*> baseEdges;
    for (const PartOfEdge& e : store.part_of_edges())
        if (!e.derived) baseEdges.push_back(&e);
    std::sort(baseEdges.begin(), baseEdges.end(), [&](const PartOfEdge* a, const PartOfEdge* b) {
        if (a->part != b->part)
            return store.entity(a->part).id < store.entity(b->part).id;
        return store.entity(a->whole).id < store.entity(b->whole).id;
    });
    for (const PartOfEdge* e : baseEdges) {
        line = "{\"kind\":\"relation\",\"subject\":";
        detail::append_json_string(line, store.entity(e->part).id);
        line += ",\"predicate\":\"isPartOf\",\"object\":";
        detail::append_json_string(line, store.entity(e->whole).id);
        line += "}\n";
        out << line;
    }
    for (const Event& ev : store.events()) {
        line = "{\"kind\":\"event\",\"id\":";
        detail::append_json_string(line, ev.id);
        line += ",\"type\":";
        detail::append_json_string(line, store.taxonomy().name_of(ev.type));
        line += ",\"timestamp\":";
        {
            char buf[24];
            auto res = std::to_chars(buf, buf + sizeof(buf), ev.timestamp);
            line.append(buf, res.ptr);
        }
        bool any = false;
        for (const Correlation& c : ev.correlations) any |= !c.derived;
        if (any) {
            line += ",\"entities\":[";
            bool first = true;
            for (const Correlation& c : ev.correlations) {
                if (c.derived) continue;
                if (!first) line += ',';
                first = false;
                line += "{\"id\":";
                detail::append_json_string(line, store.entity(c.entity).id);
                if (c.role != Role::None) {
                    line += ",\"role\":\"";
                    line += role_name(c.role);
                    line += '"';
                }
                line += '}';
            }
            line += ']';
        }
        if (!ev.attributes.empty()) {
            line += ",\"attributes\":{";
            for (std::size_t i = 0; i < ev.attributes.size(); ++i) {
                if (i) line += ',';
                detail::append_json_string(line, ev.attributes[i].first);
                line += ':';
                detail::append_scalar(line, ev.attributes[i].second);
            }
            line += '}';
        }
        line += "}\n";
        out << line;
    }
}

}  // namespace trace_enrich
