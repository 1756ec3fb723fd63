// trace-enrich: ingest multi-dimensional production event logs, run the
// enrichment pipeline, validate data, generate synthetic logs, print stats.
//
// Exit codes: 0 success, 1 data validation failure, 2 pattern/config failure,
// 3 IO failure. Diagnostics go to stderr (TRACE_ENRICH_LOG), data to files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "trace_enrich/generator.hpp"
#include "trace_enrich/ingest.hpp"
#include "trace_enrich/patterns.hpp"

namespace {

using namespace trace_enrich;

constexpr int kOk = 0;
constexpr int kDataError = 1;
constexpr int kConfigError = 2;
constexpr int kIoError = 3;

struct EnrichArgs {
    std::vector<std::string> data;
    std::string taxonomy;
    std::string patterns;
    std::string out;
    std::string report;
    bool strict = false;
    int jobs = 1;
};

struct ValidateArgs {
    std::vector<std::string> data;
    std::string taxonomy;
    bool strict = false;
};

struct GenerateArgs {
    GeneratorConfig cfg;
    std::string out;
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << text;
    f.flush();
    if (!f) throw IoError("error while writing '" + path + "'");
}

void write_report(const std::string& path, const RunOutput& run) {
    nlohmann::ordered_json doc;
    doc["instances"] = nlohmann::ordered_json::array();
    for (const InstanceReport& r : run.reports) {
        nlohmann::ordered_json item;
        item["name"] = r.name;
        item["pattern"] = pattern_name(r.pattern);
        item["facts"] = r.factCount;
        item["counters"] = {{"intervals", r.counters.intervals},
                            {"matches", r.counters.matches},
                            {"skippedNonNumeric", r.counters.skippedNonNumeric},
                            {"unmatched", r.counters.unmatched}};
        item["millis"] = r.millis;
        doc["instances"].push_back(std::move(item));
    }
    doc["warnings"] = run.warnings;
    doc["totals"] = {{"facts", run.facts.facts.size()},
                     {"warnings", run.warnings.size()}};
    write_text(path, doc.dump(2) + "\n");
}

int cmd_enrich(const EnrichArgs& a) {
    const std::string patternText = read_file(a.patterns);
    Pipeline pipe;
    try {
        pipe = parse_pipeline_text(patternText);
    } catch (const DslError& e) {
        log(LogLevel::Error, std::string("pattern file: ") + e.what());
        return kConfigError;
    }
    const Taxonomy tax = load_taxonomy(a.taxonomy);
    const std::vector<Diagnostic> diags = validate_pipeline(pipe, tax);
    if (!diags.empty()) {
        for (const Diagnostic& d : diags)
            log(LogLevel::Error, "instance '" + d.instance + "', param '" + d.key +
                                     "': " + d.message);
        return kConfigError;
    }

    LoadResult loaded = load_store(a.data, tax, a.strict);
    for (const std::string& w : loaded.warnings) log(LogLevel::Warn, w);

    RunOutput run = run_pipeline(loaded.store, pipe, a.jobs);
    for (const std::string& w : run.warnings) log(LogLevel::Warn, w);

    write_facts(run.store, run.facts, a.out);
    if (!a.report.empty()) write_report(a.report, run);

    std::cout << "wrote " << run.facts.facts.size() << " facts from "
              << pipe.instances.size() << " instances to " << a.out << "\n";
    return kOk;
}

int cmd_validate(const ValidateArgs& a) {
    const Taxonomy tax = load_taxonomy(a.taxonomy);
    LoadResult loaded = load_store(a.data, tax, a.strict);
    for (const std::string& w : loaded.warnings) std::cout << "warning: " << w << "\n";
    std::cout << "ok: " << loaded.store.entities().size() << " entities, "
              << loaded.store.events().size() << " events, " << loaded.warnings.size()
              << " warnings\n";
    if (a.strict && !loaded.warnings.empty()) return kDataError;
    return kOk;
}

int cmd_generate(const GenerateArgs& a) {
    try {
        validate_config(a.cfg);
    } catch (const DataError& e) {
        log(LogLevel::Error, e.what());
        return kConfigError;
    }
    std::error_code ec;
    std::filesystem::create_directories(a.out, ec);
    if (ec) throw IoError("cannot create directory '" + a.out + "': " + ec.message());

    const GeneratedLog gen = generate_dataset(a.cfg);
    const std::filesystem::path dir(a.out);
    write_text((dir / "events.jsonl").string(), gen.records);
    write_text((dir / "taxonomy.json").string(), "{\"subclass_of\":{}}\n");
    write_text((dir / "use_cases.pattern").string(), default_pattern_text());

    std::cout << "wrote " << gen.eventCount << " events, " << gen.entityCount
              << " entities, " << gen.relationCount << " relations to " << a.out << "\n";
    return kOk;
}

int cmd_stats(const std::vector<std::string>& data) {
    const Taxonomy tax = Taxonomy::with_defaults();
    LoadResult loaded = load_store(data, tax, false);
    for (const std::string& w : loaded.warnings) log(LogLevel::Warn, w);
    const GraphStore& s = loaded.store;

    std::map<std::string, std::size_t> entityCounts;
    for (const Entity& e : s.entities())
        for (ClassIdx c : e.types) ++entityCounts[s.taxonomy().name_of(c)];
    std::map<std::string, std::size_t> eventCounts;
    TimestampMs lo = 0, hi = 0;
    std::map<std::size_t, std::size_t> degrees;
    for (const Event& ev : s.events()) {
        ++eventCounts[s.taxonomy().name_of(ev.type)];
        ++degrees[ev.correlations.size()];
    }
    if (!s.events().empty()) {
        lo = s.events().front().timestamp;
        hi = s.events().back().timestamp;
    }

    std::cout << "entities: " << s.entities().size() << "\n";
    for (const auto& [name, n] : entityCounts) std::cout << "  " << name << ": " << n << "\n";
    std::cout << "events: " << s.events().size() << "\n";
    for (const auto& [name, n] : eventCounts) std::cout << "  " << name << ": " << n << "\n";
    std::cout << "time range: " << lo << " .. " << hi << "\n";
    std::cout << "correlation degree histogram:\n";
    if (degrees.empty()) std::cout << "  (none)\n";
    for (const auto& [deg, n] : degrees) std::cout << "  " << deg << ": " << n << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"batch enrichment engine for multi-dimensional production event logs"};
    app.require_subcommand(1);

    EnrichArgs en;
    CLI::App* enrich = app.add_subcommand("enrich", "run a pattern pipeline over event logs");
    enrich->add_option("--data", en.data, "event-log JSONL file(s)")->required();
    enrich->add_option("--taxonomy", en.taxonomy, "taxonomy JSON file")->required();
    enrich->add_option("--patterns", en.patterns, "pattern pipeline file")->required();
    enrich->add_option("--out", en.out, "derived-facts JSONL output path")->required();
    enrich->add_option("--report", en.report, "run report JSON output path");
    enrich->add_flag("--strict", en.strict, "treat data warnings as errors");
    enrich->add_option("--jobs", en.jobs, "worker threads per stage")
        ->check(CLI::PositiveNumber);

    ValidateArgs va;
    CLI::App* validate = app.add_subcommand("validate", "load event logs and report issues");
    validate->add_option("--data", va.data, "event-log JSONL file(s)")->required();
    validate->add_option("--taxonomy", va.taxonomy, "taxonomy JSON file")->required();
    validate->add_flag("--strict", va.strict, "treat warnings as errors");

    GenerateArgs ge;
    CLI::App* generate = app.add_subcommand("generate", "write a synthetic flow-shop log");
    generate->add_option("--seed", ge.cfg.seed, "RNG seed");
    generate->add_option("--out", ge.out, "output directory")->required();
    generate->add_option("--machines", ge.cfg.machines, "machine count");
    generate->add_option("--jobs", ge.cfg.jobs, "job count");
    generate->add_option("--lots", ge.cfg.lots, "production lot count");
    generate->add_option("--products-per-lot", ge.cfg.productsPerLot, "products per lot");
    generate->add_option("--sensor-rate", ge.cfg.sensorRate, "observation probability");
    generate->add_option("--alarm-rate", ge.cfg.alarmRate, "alarm probability");
    generate->add_option("--split-prob", ge.cfg.splitProbability, "lot split probability");
    generate->add_option("--merge-prob", ge.cfg.mergeProbability, "lot merge probability");
    generate->add_option("--consume-prob", ge.cfg.consumeProbability,
                         "component consumption probability");
    generate->add_option("--horizon", ge.cfg.horizon, "timestamp horizon (ms)");

    std::vector<std::string> statsData;
    CLI::App* stats = app.add_subcommand("stats", "print class counts and time range");
    stats->add_option("--data", statsData, "event-log JSONL file(s)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        if (*enrich) return cmd_enrich(en);
        if (*validate) return cmd_validate(va);
        if (*generate) return cmd_generate(ge);
        if (*stats) return cmd_stats(statsData);
    } catch (const DslError& e) {
        trace_enrich::log(trace_enrich::LogLevel::Error, e.what());
        return kConfigError;
    } catch (const IoError& e) {
        trace_enrich::log(trace_enrich::LogLevel::Error, e.what());
        return kIoError;
    } catch (const DataError& e) {
        trace_enrich::log(trace_enrich::LogLevel::Error, e.what());
        return kDataError;
    } catch (const std::exception& e) {
        trace_enrich::log(trace_enrich::LogLevel::Error, e.what());
        return kDataError;
    }
    return kOk;
}
