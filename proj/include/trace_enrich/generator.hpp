#pragma once
// Seeded synthetic flow-shop log: machines with sensors and tools, jobs moving
// across machines, production lots with split/merge genealogy, components
// consumed into products, batch handling, and buffer/transport legs. Emits the
// ingest JSONL record format; identical config + seed gives identical bytes on
// every platform (raw mt19937_64 draws, no distribution objects).

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "trace_enrich/ingest.hpp"
#include "trace_enrich/types.hpp"

namespace trace_enrich {

struct GeneratorConfig {
    std::uint64_t seed = 42;
    std::uint32_t machines = 3;
    std::uint32_t jobs = 12;
    std::uint32_t lots = 6;
    std::uint32_t productsPerLot = 3;
    double sensorRate = 0.8;        // chance of another observation while processing
    double alarmRate = 0.45;        // chance of another alarm while processing
    double splitProbability = 0.6;  // per eligible lot
    double mergeProbability = 0.6;  // per eligible lot pair
    double consumeProbability = 0.9;  // per product: consume one component
    TimestampMs horizon = 1000000;  // target time scale for the last event
};

inline void validate_config(const GeneratorConfig& cfg) {
    auto prob = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0))
            throw DataError(std::string(name) + " must be within [0, 1]");
    };
    prob(cfg.sensorRate, "sensorRate");
    prob(cfg.alarmRate, "alarmRate");
    prob(cfg.splitProbability, "splitProbability");
    prob(cfg.mergeProbability, "mergeProbability");
    prob(cfg.consumeProbability, "consumeProbability");
    if (cfg.horizon <= 0) throw DataError("horizon must be positive");
    if (cfg.jobs > 0 && cfg.machines == 0)
        throw DataError("jobs require at least one machine");
}

// Bounded draws are hand-rolled on top of raw mt19937_64 output because the
// standard distribution objects are implementation-defined (byte determinism
// across platforms matters more than perfect uniformity here).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t raw() { return eng_(); }
    std::uint32_t below(std::uint32_t n) {  // in [0, n)
        return n == 0 ? 0 : static_cast<std::uint32_t>(raw() % n);
    }
    std::uint32_t range(std::uint32_t lo, std::uint32_t hi) {  // inclusive
        return lo + below(hi - lo + 1);
    }
    double unit() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }  // [0, 1)
    bool chance(double p) { return unit() < p; }

private:
    std::mt19937_64 eng_;
};

struct GeneratedLog {
    std::string records;  // JSONL: entities, relations, then events in time order
    std::size_t entityCount = 0;
    std::size_t relationCount = 0;
    std::size_t eventCount = 0;
};

namespace gen_detail {

inline int digits(std::uint64_t n) {
    int d = 1;
    while (n >= 10) {
        n /= 10;
        ++d;
    }
    return d;
}

inline std::string padded_id(const char* prefix, std::uint64_t n, int width) {
    std::string num = std::to_string(n);
    std::string out = prefix;
    for (int i = static_cast<int>(num.size()); i < width; ++i) out += '0';
    out += num;
    return out;
}

struct GenEvent {
    const char* type;
    std::uint64_t tick;
    std::vector<std::pair<std::string, Role>> refs;
    std::vector<std::pair<std::string, Scalar>> attrs;
};

}  // namespace gen_detail

inline GeneratedLog generate_dataset(const GeneratorConfig& cfg) {
    using gen_detail::GenEvent;
    validate_config(cfg);
    Rng rng(cfg.seed);

    // --- genealogy plan (structure first, so lot ids can be padded uniformly).
    struct SplitPlan {
        std::uint32_t input, out1, out2;
    };
    struct MergePlan {
        std::uint32_t in1, in2, output;
    };
    std::uint32_t lotCount = cfg.lots;
    std::vector<SplitPlan> splits;
    for (std::uint32_t i = 0; i < cfg.lots; i += 2)
        if (rng.chance(cfg.splitProbability)) {
            splits.push_back({i, lotCount, lotCount + 1});
            lotCount += 2;
        }
    // A positive probability guarantees at least one occurrence (probabilities
    // shape volume, not feature coverage); zero still means strictly none.
    if (splits.empty() && cfg.splitProbability > 0 && cfg.lots >= 1) {
        splits.push_back({0, lotCount, lotCount + 1});
        lotCount += 2;
    }
    // Occasionally split a split output again: exercises multi-hop genealogy.
    if (!splits.empty() && rng.chance(cfg.splitProbability)) {
        splits.push_back({splits[0].out1, lotCount, lotCount + 1});
        lotCount += 2;
    }
    std::vector<std::uint32_t> oddRoots;
    for (std::uint32_t i = 1; i < cfg.lots; i += 2) oddRoots.push_back(i);
    std::vector<MergePlan> merges;
    for (std::size_t i = 0; i + 1 < oddRoots.size(); i += 2)
        if (rng.chance(cfg.mergeProbability))
            merges.push_back({oddRoots[i], oddRoots[i + 1], lotCount++});
    if (merges.empty() && cfg.mergeProbability > 0 && oddRoots.size() >= 2)
        merges.push_back({oddRoots[0], oddRoots[1], lotCount++});
    if (!merges.empty() && (oddRoots.size() % 2) == 1 && rng.chance(cfg.mergeProbability))
        merges.push_back({merges[0].output, oddRoots.back(), lotCount++});

    const std::uint32_t productCount = cfg.lots * cfg.productsPerLot;
    std::vector<bool> consumed(productCount, false);
    bool anyConsumed = false;
    for (std::uint32_t p = 0; p < productCount; ++p) {
        consumed[p] = rng.chance(cfg.consumeProbability);
        anyConsumed |= consumed[p];
    }
    if (!anyConsumed && cfg.consumeProbability > 0 && productCount > 0) consumed[0] = true;

    // --- entity ids.
    const int mw = std::max(2, gen_detail::digits(cfg.machines));
    const int jw = std::max(3, gen_detail::digits(cfg.jobs));
    const int lw = std::max(3, gen_detail::digits(lotCount));
    const int pw = std::max(4, gen_detail::digits(productCount));
    auto machine_id = [&](std::uint32_t i) { return gen_detail::padded_id("m", i + 1, mw); };
    auto sensor_id = [&](std::uint32_t i) { return gen_detail::padded_id("s", i + 1, mw); };
    auto tool_id = [&](std::uint32_t i, int slot) {
        return gen_detail::padded_id("t", i + 1, mw) + (slot == 0 ? "a" : "b");
    };
    auto job_id = [&](std::uint32_t i) { return gen_detail::padded_id("j", i + 1, jw); };
    auto lot_id = [&](std::uint32_t i) { return gen_detail::padded_id("L", i + 1, lw); };
    auto product_id = [&](std::uint32_t i) { return gen_detail::padded_id("p", i + 1, pw); };
    auto component_id = [&](std::uint32_t i) { return gen_detail::padded_id("c", i + 1, pw); };

    std::vector<std::pair<std::string, const char*>> entities;
    std::vector<std::pair<std::string, std::string>> relations;  // (part, whole)
    for (std::uint32_t i = 0; i < cfg.machines; ++i) {
        entities.emplace_back(machine_id(i), "Machine");
        entities.emplace_back(sensor_id(i), "Sensor");
        relations.emplace_back(sensor_id(i), machine_id(i));
        entities.emplace_back(tool_id(i, 0), "Tool");
        entities.emplace_back(tool_id(i, 1), "Tool");
    }
    entities.emplace_back("ws_lot", "Workstation");
    entities.emplace_back("ws_batch", "Workstation");
    entities.emplace_back("asm1", "Workstation");
    entities.emplace_back("buf1", "Buffer");
    entities.emplace_back("agv1", "AGV");
    entities.emplace_back("op1", "Operator");
    for (std::uint32_t i = 0; i < cfg.jobs; ++i) entities.emplace_back(job_id(i), "Job");
    for (std::uint32_t i = 0; i < lotCount; ++i) entities.emplace_back(lot_id(i), "ProductionLot");
    for (std::uint32_t p = 0; p < productCount; ++p) {
        entities.emplace_back(product_id(p), "Product");
        relations.emplace_back(product_id(p), lot_id(p / cfg.productsPerLot));
        if (consumed[p]) entities.emplace_back(component_id(p), "Component");
    }
    if (productCount > 0) entities.emplace_back("B01", "Batch");

    // --- event timeline (single strictly increasing tick cursor).
    std::vector<GenEvent> events;
    std::uint64_t tick = 0;
    auto emit = [&](const char* type, std::vector<std::pair<std::string, Role>> refs,
                    std::vector<std::pair<std::string, Scalar>> attrs = {}) {
        tick += 1 + rng.below(3);
        events.push_back(GenEvent{type, tick, std::move(refs), std::move(attrs)});
    };

    // Phase A: jobs across machines (two routing steps per job).
    std::vector<bool> machineUsed(cfg.machines, false);
    std::vector<int> activeTool(cfg.machines, 0);
    bool downtimeForced = false;
    for (std::uint32_t step = 0; step < 2 && cfg.machines > 0; ++step) {
        for (std::uint32_t i = 0; i < cfg.jobs; ++i) {
            const std::uint32_t m = (i + step) % cfg.machines;
            const std::string mid = machine_id(m);
            const bool first = !machineUsed[m];
            if (first) {
                machineUsed[m] = true;
                emit("Maintenance", {{mid, Role::None}, {"op1", Role::None}});
                emit("SwitchTool", {{mid, Role::None}, {tool_id(m, 0), Role::None}});
            } else {
                if (rng.chance(0.25))
                    emit("Maintenance", {{mid, Role::None}, {"op1", Role::None}});
                if (rng.chance(0.4)) {
                    activeTool[m] ^= 1;
                    emit("SwitchTool", {{mid, Role::None}, {tool_id(m, activeTool[m]), Role::None}});
                }
            }
            emit("TrackIn", {{mid, Role::None}, {job_id(i), Role::None}});
            int observations = 0;
            while (observations < 5 && rng.chance(cfg.sensorRate)) {
                emit("Observation", {{sensor_id(m), Role::None}},
                     {{"value", Scalar{static_cast<std::int64_t>(50 + rng.below(50))}}});
                ++observations;
            }
            if (first && observations == 0 && cfg.sensorRate > 0)
                emit("Observation", {{sensor_id(m), Role::None}},
                     {{"value", Scalar{static_cast<std::int64_t>(50 + rng.below(50))}}});
            int alarms = 0;
            while (alarms < 3 && rng.chance(cfg.alarmRate)) {
                emit("Alarm", {{mid, Role::None}});
                ++alarms;
            }
            if (m == 0 && first && alarms == 0 && cfg.alarmRate > 0)
                emit("Alarm", {{mid, Role::None}});
            if (rng.chance(0.2)) emit("Repair", {{mid, Role::None}, {"op1", Role::None}});
            emit("TrackOut", {{mid, Role::None}, {job_id(i), Role::None}});
            const bool forceDown = m == 0 && !downtimeForced;
            if (forceDown || rng.chance(0.25)) {
                downtimeForced = downtimeForced || forceDown;
                emit("SwitchState", {{mid, Role::None}}, {{"state", Scalar{std::string("Failed")}}});
                emit("SwitchState", {{mid, Role::None}},
                     {{"state", Scalar{std::string("Working")}}});
            }
        }
    }

    // Phase B: root lots processed at the lot workstation; product piece work
    // happens inside the lot interval (quantityRejected drives scrap analysis).
    auto leaf_block = [&](std::uint32_t lot) {
        emit("TrackIn", {{"ws_lot", Role::None}, {lot_id(lot), Role::None}});
        emit("TrackOut", {{"ws_lot", Role::None}, {lot_id(lot), Role::None}});
    };
    for (std::uint32_t r = 0; r < cfg.lots; ++r) {
        emit("TrackIn", {{"ws_lot", Role::None}, {lot_id(r), Role::None}});
        for (std::uint32_t k = 0; k < cfg.productsPerLot; ++k) {
            const std::uint32_t p = r * cfg.productsPerLot + k;
            emit("TrackIn", {{"ws_lot", Role::None}, {product_id(p), Role::None}});
            emit("TrackOut", {{"ws_lot", Role::None}, {product_id(p), Role::None}},
                 {{"quantityRejected", Scalar{static_cast<std::int64_t>(rng.below(4))}}});
        }
        emit("TrackOut", {{"ws_lot", Role::None}, {lot_id(r), Role::None}});
    }
    for (const SplitPlan& sp : splits) {
        emit("Split", {{"ws_lot", Role::None},
                       {lot_id(sp.input), Role::Input},
                       {lot_id(sp.out1), Role::Output},
                       {lot_id(sp.out2), Role::Output}});
        leaf_block(sp.out1);
        leaf_block(sp.out2);
    }
    for (const MergePlan& mp : merges) {
        emit("Merge", {{"ws_lot", Role::None},
                       {lot_id(mp.in1), Role::Input},
                       {lot_id(mp.in2), Role::Input},
                       {lot_id(mp.output), Role::Output}});
        leaf_block(mp.output);
    }

    // Phase C: the whole product population is handled as one batch.
    if (productCount > 0) {
        emit("TrackIn", {{"ws_batch", Role::None}, {"B01", Role::None}});
        for (std::uint32_t p = 0; p < productCount; ++p)
            emit("Observation", {{"ws_batch", Role::None}, {product_id(p), Role::None}});
        emit("TrackOut", {{"ws_batch", Role::None}, {"B01", Role::None}});
    }

    // Phase D: assembly consumes one component per (consuming) product.
    for (std::uint32_t p = 0; p < productCount; ++p) {
        if (!consumed[p]) continue;
        emit("TrackIn", {{"buf1", Role::None}, {component_id(p), Role::None}});
        emit("TrackOut", {{"buf1", Role::None}, {component_id(p), Role::None}});
        emit("TrackIn", {{"asm1", Role::None}, {product_id(p), Role::None}});
        emit("Consume", {{"asm1", Role::None},
                         {component_id(p), Role::Input},
                         {product_id(p), Role::Output}});
        emit("TrackOut", {{"asm1", Role::None}, {product_id(p), Role::None}});
    }

    // Phase E: buffer and transport legs per product.
    for (std::uint32_t p = 0; p < productCount; ++p) {
        emit("TrackIn", {{"buf1", Role::None}, {product_id(p), Role::None}});
        emit("TrackOut", {{"buf1", Role::None}, {product_id(p), Role::None}});
        emit("TrackIn", {{"agv1", Role::None}, {product_id(p), Role::None}});
        emit("TrackOut", {{"agv1", Role::None}, {product_id(p), Role::None}});
    }

    // --- serialization (ticks scaled onto the configured horizon).
    GeneratedLog out;
    out.entityCount = entities.size();
    out.relationCount = relations.size();
    out.eventCount = events.size();
    std::string& s = out.records;
    s.reserve(entities.size() * 48 + relations.size() * 80 + events.size() * 140);
    for (const auto& [id, type] : entities) {
        s += "{\"kind\":\"entity\",\"id\":";
        detail::append_json_string(s, id);
        s += ",\"types\":[";
        detail::append_json_string(s, type);
        s += "]}\n";
    }
    for (const auto& [part, whole] : relations) {
        s += "{\"kind\":\"relation\",\"subject\":";
        detail::append_json_string(s, part);
        s += ",\"predicate\":\"isPartOf\",\"object\":";
        detail::append_json_string(s, whole);
        s += "}\n";
    }
    const int ew = std::max(4, gen_detail::digits(events.size()));
    const auto scale = std::max<TimestampMs>(
        1, cfg.horizon / static_cast<TimestampMs>(tick + 1));
    for (std::size_t i = 0; i < events.size(); ++i) {
        const GenEvent& ev = events[i];
        s += "{\"kind\":\"event\",\"id\":";
        detail::append_json_string(s, gen_detail::padded_id("e", i + 1, ew));
        s += ",\"type\":\"";
        s += ev.type;
        s += "\",\"timestamp\":";
        s += std::to_string(static_cast<TimestampMs>(ev.tick) * scale);
        s += ",\"entities\":[";
        for (std::size_t k = 0; k < ev.refs.size(); ++k) {
            if (k) s += ',';
            s += "{\"id\":";
            detail::append_json_string(s, ev.refs[k].first);
            if (ev.refs[k].second != Role::None) {
                s += ",\"role\":\"";
                s += role_name(ev.refs[k].second);
                s += '"';
            }
            s += '}';
        }
        s += ']';
        if (!ev.attrs.empty()) {
            s += ",\"attributes\":{";
            for (std::size_t k = 0; k < ev.attrs.size(); ++k) {
                if (k) s += ',';
                detail::append_json_string(s, ev.attrs[k].first);
                s += ':';
                detail::append_scalar(s, ev.attrs[k].second);
            }
            s += '}';
        }
        s += "}\n";
    }
    return out;
}

// The staged default pipeline cmd-generate writes next to its data: relation
// producers first, part-of propagation second, measurements over the enriched
// graph last. Every pattern appears at least once.
inline std::string default_pattern_text() {
    return R"(# Default enrichment pipeline for generated flow-shop logs.
# Stage 0 derives relations (genealogy, tooling, containment) and downtime.
# Stage 1 propagates correlations across part-of edges.
# Stage 2 computes measurements on the enriched graph.

pattern elapsed_succeeding_same_type as downtime {
  eventType = SwitchState
  filterAttribute = state
  filterValue = Failed
  matchOn = [Resource]
  stage = 0
}

pattern relate_preceding as tool_used {
  eventType = TrackIn
  preceding = SwitchTool
  targetEntityType = Tool
  matchOn = [Machine]
  stage = 0
}

pattern relate_preceding_aggregation as split_origin_to_outputs {
  aggType = Split
  entityType = ProductionLot
  recursive = true
  stage = 0
}

pattern relate_preceding_aggregation as merge_inputs_to_merged {
  aggType = Merge
  entityType = ProductionLot
  recursive = true
  stage = 0
}

pattern relate_preceding_aggregation as component_to_product {
  aggType = Consume
  entityType = ProductionEntity
  stage = 0
}

pattern relate_succeeding_aggregation as split_outputs_to_origin {
  aggType = Split
  entityType = ProductionLot
  recursive = true
  stage = 0
}

pattern relate_succeeding_aggregation as merged_to_merge_inputs {
  aggType = Merge
  entityType = ProductionLot
  recursive = true
  stage = 0
}

pattern derive_partof as product_in_batch {
  start = TrackIn
  end = TrackOut
  partEntityType = Product
  wholeEntityType = Batch
  stage = 0
}

pattern derive_partof as component_part_of_product {
  start = TrackIn
  end = TrackOut
  partEntityType = Component
  wholeEntityType = Product
  stage = 0
}

pattern relate_partof as lot_events_to_products {
  direction = whole_to_part
  eventEntityFilter = ProductionLot
  otherEntityFilter = Product
  stage = 1
}

pattern relate_partof as observation_to_machine {
  direction = part_to_whole
  eventEntityFilter = Sensor
  otherEntityFilter = Resource
  stage = 1
}

pattern interval_count as alarm_count {
  start = TrackIn
  end = TrackOut
  counted = Alarm
  stage = 2
}

pattern interval_count as repair_count {
  start = TrackIn
  end = TrackOut
  counted = Repair
  stage = 2
}

pattern interval_aggregate as avg_measurement {
  start = TrackIn
  end = TrackOut
  eventType = Observation
  attribute = value
  agg = avg
  stage = 2
}

pattern interval_aggregate as threshold_crossings {
  start = TrackIn
  end = TrackOut
  eventType = Observation
  attribute = value
  agg = count_above
  threshold = 75
  stage = 2
}

pattern interval_aggregate as rejected_sum {
  start = TrackIn
  end = TrackOut
  eventType = TrackOut
  attribute = quantityRejected
  agg = sum
  stage = 2
}

pattern elapsed_preceding as processing_time {
  eventType = TrackOut
  preceding = TrackIn
  matchOn = [Machine, Job]
  stage = 2
}

pattern elapsed_preceding as time_since_maintenance {
  eventType = TrackIn
  preceding = Maintenance
  matchOn = [Resource]
  stage = 2
}

pattern elapsed_preceding as setup_time {
  eventType = TrackOut
  preceding = TrackIn
  matchOn = [Machine]
  stage = 2
}

pattern elapsed_preceding as buffer_time {
  eventType = TrackOut
  preceding = TrackIn
  matchOn = [Buffer, Product]
  stage = 2
}

pattern elapsed_preceding as transport_time {
  eventType = TrackOut
  preceding = TrackIn
  matchOn = [AGV, Product]
  stage = 2
}

pattern elapsed_maximum as throughput_time {
  start = TrackIn
  end = TrackOut
  entityType = Product
  stage = 2
}

pattern interval_aggregate as avg_downtime {
  start = TrackIn
  end = TrackOut
  eventType = SwitchState
  attribute = "downtime.elapsed"
  agg = avg
  window = all_per_resource
  stage = 2
}
)";
}

}  // namespace trace_enrich
