#pragma once
// Pattern-instantiation DSL: a small declaration language plus an equivalent
// JSON form. Parsing yields a Pipeline of PatternInstances grouped into
// stages; validation reports diagnostics instead of throwing.
//
//   pattern interval_count as alarms {
//     start = TrackIn
//     end = TrackOut
//     counted = Alarm
//   }

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "trace_enrich/facts.hpp"
#include "trace_enrich/taxonomy.hpp"
#include "trace_enrich/types.hpp"

namespace trace_enrich {

struct ParamValue {
    enum class Kind { String, Number, Boolean, List };
    Kind kind = Kind::String;
    std::string str;
    double num = 0.0;
    bool boolean = false;
    std::vector<ParamValue> list;

    static ParamValue make_string(std::string s) {
        ParamValue v;
        v.kind = Kind::String;
        v.str = std::move(s);
        return v;
    }
    static ParamValue make_number(double d) {
        ParamValue v;
        v.kind = Kind::Number;
        v.num = d;
        return v;
    }
    static ParamValue make_boolean(bool b) {
        ParamValue v;
        v.kind = Kind::Boolean;
        v.boolean = b;
        return v;
    }

    bool operator==(const ParamValue& o) const {
        if (kind != o.kind) return false;
        switch (kind) {
            case Kind::String: return str == o.str;
            case Kind::Number: return num == o.num;
            case Kind::Boolean: return boolean == o.boolean;
            case Kind::List: return list == o.list;
        }
        return false;
    }
};

struct PatternInstance {
    PatternKind pattern = PatternKind::IntervalCount;
    std::string name;
    std::map<std::string, ParamValue> params;
    int stage = 0;

    bool operator==(const PatternInstance& o) const {
        return pattern == o.pattern && name == o.name && params == o.params && stage == o.stage;
    }

    const ParamValue* find(const std::string& key) const {
        auto it = params.find(key);
        return it == params.end() ? nullptr : &it->second;
    }
};

struct Pipeline {
    std::vector<PatternInstance> instances;  // declaration order
    bool useDerived = true;                  // derived correlations visible to engines
    bool materializeBetweenStages = true;

    bool operator==(const Pipeline& o) const {
        return instances == o.instances && useDerived == o.useDerived &&
               materializeBetweenStages == o.materializeBetweenStages;
    }

    // Instance indices grouped by ascending stage number.
    std::vector<std::vector<std::uint32_t>> stages() const {
        std::map<int, std::vector<std::uint32_t>> byStage;
        for (std::uint32_t i = 0; i < instances.size(); ++i)
            byStage[instances[i].stage].push_back(i);
        std::vector<std::vector<std::uint32_t>> out;
        out.reserve(byStage.size());
        for (auto& [_, idxs] : byStage) out.push_back(std::move(idxs));
        return out;
    }
};

struct Diagnostic {
    std::string instance;
    std::string key;
    std::string message;
};

// --- parameter signatures ---------------------------------------------------------

enum class ParamType { Class, String, Number, Boolean, ClassList, Scalar, Enum };

struct ParamSpec {
    const char* key;
    ParamType type;
    bool required;
    const char* enumValues;  // '|'-separated, canonical (underscore) spellings
};

inline const std::vector<ParamSpec>& pattern_signature(PatternKind p) {
    static const std::vector<ParamSpec> sigs[10] = {
        // IntervalCount
        {{"start", ParamType::Class, true, nullptr},
         {"end", ParamType::Class, true, nullptr},
         {"counted", ParamType::Class, true, nullptr},
         {"pairOnProductionEntity", ParamType::Boolean, false, nullptr},
         {"countedSharesProductionEntity", ParamType::Boolean, false, nullptr}},
        // IntervalAggregate
        {{"start", ParamType::Class, true, nullptr},
         {"end", ParamType::Class, true, nullptr},
         {"eventType", ParamType::Class, true, nullptr},
         {"attribute", ParamType::String, true, nullptr},
         {"agg", ParamType::Enum, true,
          "sum|avg|min|max|count|var|stddev|count_above|count_below"},
         {"threshold", ParamType::Number, false, nullptr},
         {"window", ParamType::Enum, false, "interval|all_per_resource"},
         {"pairOnProductionEntity", ParamType::Boolean, false, nullptr}},
        // ElapsedPreceding
        {{"eventType", ParamType::Class, true, nullptr},
         {"preceding", ParamType::Class, true, nullptr},
         {"matchOn", ParamType::ClassList, false, nullptr}},
        // ElapsedSucceedingSameType
        {{"eventType", ParamType::Class, true, nullptr},
         {"filterAttribute", ParamType::String, false, nullptr},
         {"filterValue", ParamType::Scalar, false, nullptr},
         {"matchOn", ParamType::ClassList, false, nullptr}},
        // ElapsedMaximum
        {{"start", ParamType::Class, true, nullptr},
         {"end", ParamType::Class, true, nullptr},
         {"entityType", ParamType::Class, true, nullptr}},
        // RelatePreceding
        {{"eventType", ParamType::Class, true, nullptr},
         {"preceding", ParamType::Class, true, nullptr},
         {"targetEntityType", ParamType::Class, true, nullptr},
         {"matchOn", ParamType::ClassList, false, nullptr}},
        // RelatePartOf
        {{"direction", ParamType::Enum, true, "whole_to_part|part_to_whole"},
         {"eventEntityFilter", ParamType::Class, false, nullptr},
         {"otherEntityFilter", ParamType::Class, false, nullptr}},
        // RelatePrecedingAggregation
        {{"aggType", ParamType::Class, false, nullptr},
         {"entityType", ParamType::Class, false, nullptr},
         {"recursive", ParamType::Boolean, false, nullptr}},
        // RelateSucceedingAggregation
        {{"aggType", ParamType::Class, false, nullptr},
         {"entityType", ParamType::Class, false, nullptr},
         {"recursive", ParamType::Boolean, false, nullptr}},
        // DerivePartOf
        {{"start", ParamType::Class, true, nullptr},
         {"end", ParamType::Class, true, nullptr},
         {"partEntityType", ParamType::Class, true, nullptr},
         {"wholeEntityType", ParamType::Class, false, nullptr}},
    };
    return sigs[static_cast<int>(p)];
}

inline std::optional<PatternKind> pattern_kind_from_name(std::string_view name) {
    for (int i = 0; i < 10; ++i)
        if (name == pattern_name(static_cast<PatternKind>(i)))
            return static_cast<PatternKind>(i);
    return std::nullopt;
}

// Canonical enum spelling: hyphens (paper style) become underscores.
inline std::string canonical_enum(std::string s) {
    std::replace(s.begin(), s.end(), '-', '_');
    return s;
}

// --- DSL parser ------------------------------------------------------------------

namespace detail {

struct Token {
    enum class Kind { Ident, String, Number, Punct, End };
    Kind kind = Kind::End;
    std::string text;  // ident spelling, decoded string, or punct char
    double num = 0.0;
    std::size_t line = 1, col = 1;
};

inline bool ident_start(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}
inline bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    Token next() {
        skip_ws();
        Token t;
        t.line = line_;
        t.col = col_;
        if (pos_ >= text_.size()) return t;
        const char c = text_[pos_];
        if (ident_start(c)) {
            std::size_t start = pos_;
            while (pos_ < text_.size() && ident_char(text_[pos_])) advance();
            t.kind = Token::Kind::Ident;
            t.text = std::string(text_.substr(start, pos_ - start));
            return t;
        }
        if (c == '"') return lex_string(t);
        if (c == '-' || (c >= '0' && c <= '9')) return lex_number(t);
        if (c == '{' || c == '}' || c == '[' || c == ']' || c == '=' || c == ',') {
            t.kind = Token::Kind::Punct;
            t.text = std::string(1, c);
            advance();
            return t;
        }
        throw DslError(line_, col_, std::string("unexpected character '") + c + "'");
    }

private:
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_ws() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else {
                break;
            }
        }
    }

    Token lex_string(Token t) {
        const std::size_t sLine = line_, sCol = col_;
        advance();  // opening quote
        std::string out;
        while (true) {
            if (pos_ >= text_.size() || text_[pos_] == '\n')
                throw DslError(sLine, sCol, "unterminated string");
            char c = text_[pos_];
            advance();
            if (c == '"') break;
            if (c == '\\') {
                if (pos_ >= text_.size()) throw DslError(sLine, sCol, "unterminated string");
                char esc = text_[pos_];
                advance();
                switch (esc) {
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case 'r': out += '\r'; break;
                    default:
                        throw DslError(line_, col_ > 2 ? col_ - 2 : 1,
                                       std::string("unknown escape '\\") + esc + "'");
                }
            } else {
                out += c;
            }
        }
        t.kind = Token::Kind::String;
        t.text = std::move(out);
        return t;
    }

    Token lex_number(Token t) {
        std::size_t start = pos_;
        if (text_[pos_] == '-') advance();
        bool digits = false;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            advance();
            digits = true;
        }
        if (pos_ < text_.size() && text_[pos_] == '.') {
            advance();
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                advance();
                digits = true;
            }
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            advance();
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) advance();
            bool expDigits = false;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                advance();
                expDigits = true;
            }
            if (!expDigits) throw DslError(t.line, t.col, "malformed number");
        }
        if (!digits) throw DslError(t.line, t.col, "malformed number");
        t.kind = Token::Kind::Number;
        t.text = std::string(text_.substr(start, pos_ - start));
        t.num = std::strtod(t.text.c_str(), nullptr);
        return t;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1, col_ = 1;
};

class Parser {
public:
    explicit Parser(std::string_view text) : lex_(text) { cur_ = lex_.next(); }

    Pipeline parse_file() {
        Pipeline pipe;
        while (cur_.kind != Token::Kind::End) {
            pipe.instances.push_back(parse_instance());
        }
        check_unique_names(pipe);
        return pipe;
    }

private:
    [[noreturn]] void fail(const Token& at, const std::string& msg) {
        throw DslError(at.line, at.col, msg);
    }

    Token take() {
        Token t = cur_;
        cur_ = lex_.next();
        return t;
    }

    Token expect_ident(const char* what) {
        if (cur_.kind != Token::Kind::Ident)
            fail(cur_, std::string("expected ") + what);
        return take();
    }

    void expect_punct(char c) {
        if (cur_.kind != Token::Kind::Punct || cur_.text[0] != c)
            fail(cur_, std::string("expected '") + c + "'");
        take();
    }

    PatternInstance parse_instance() {
        Token kw = expect_ident("'pattern'");
        if (kw.text != "pattern") fail(kw, "expected 'pattern'");
        Token patTok = expect_ident("a pattern name");
        auto kind = pattern_kind_from_name(patTok.text);
        if (!kind) fail(patTok, "unknown pattern '" + patTok.text + "'");
        Token asTok = expect_ident("'as'");
        if (asTok.text != "as") fail(asTok, "expected 'as'");
        Token nameTok = expect_ident("an instance name");

        PatternInstance inst;
        inst.pattern = *kind;
        inst.name = nameTok.text;
        expect_punct('{');
        while (!(cur_.kind == Token::Kind::Punct && cur_.text[0] == '}')) {
            if (cur_.kind == Token::Kind::End) fail(cur_, "expected '}'");
            Token keyTok = expect_ident("a parameter key");
            if (!known_key(inst.pattern, keyTok.text))
                fail(keyTok, "unknown parameter '" + keyTok.text + "' for pattern '" +
                                 std::string(pattern_name(inst.pattern)) + "'");
            if (inst.params.count(keyTok.text))
                fail(keyTok, "duplicate parameter '" + keyTok.text + "'");
            expect_punct('=');
            inst.params.emplace(keyTok.text, parse_value());
        }
        take();  // '}'
        if (const ParamValue* s = inst.find("stage")) {
            if (s->kind != ParamValue::Kind::Number || s->num < 0 ||
                s->num != static_cast<double>(static_cast<long long>(s->num)))
                fail(cur_, "'stage' must be a non-negative integer");
            inst.stage = static_cast<int>(s->num);
        }
        return inst;
    }

    static bool known_key(PatternKind p, const std::string& key) {
        if (key == "stage") return true;
        for (const ParamSpec& s : pattern_signature(p))
            if (key == s.key) return true;
        return false;
    }

    ParamValue parse_value() {
        if (cur_.kind == Token::Kind::Ident) {
            Token t = take();
            if (t.text == "true") return ParamValue::make_boolean(true);
            if (t.text == "false") return ParamValue::make_boolean(false);
            return ParamValue::make_string(t.text);
        }
        if (cur_.kind == Token::Kind::String) return ParamValue::make_string(take().text);
        if (cur_.kind == Token::Kind::Number) return ParamValue::make_number(take().num);
        if (cur_.kind == Token::Kind::Punct && cur_.text[0] == '[') {
            take();
            ParamValue v;
            v.kind = ParamValue::Kind::List;
            if (cur_.kind == Token::Kind::Punct && cur_.text[0] == ']') {
                take();
                return v;
            }
            while (true) {
                v.list.push_back(parse_value());
                if (cur_.kind == Token::Kind::Punct && cur_.text[0] == ',') {
                    take();
                    continue;
                }
                if (cur_.kind == Token::Kind::Punct && cur_.text[0] == ']') {
                    take();
                    return v;
                }
                fail(cur_, "expected ',' or ']'");
            }
        }
        fail(cur_, "expected a value");
    }

    void check_unique_names(const Pipeline& pipe) {
        for (std::size_t i = 0; i < pipe.instances.size(); ++i)
            for (std::size_t j = i + 1; j < pipe.instances.size(); ++j)
                if (pipe.instances[i].name == pipe.instances[j].name)
                    throw DslError(1, 1, "duplicate instance name '" + pipe.instances[i].name +
                                             "'");
    }

    Lexer lex_;
    Token cur_;
};

}  // namespace detail

inline Pipeline parse_pattern_file(std::string_view text) {
    return detail::Parser(text).parse_file();
}

// --- JSON form --------------------------------------------------------------------

inline ParamValue param_value_from_json(const nlohmann::json& v, const std::string& key) {
    if (v.is_string()) return ParamValue::make_string(v.get<std::string>());
    if (v.is_number()) return ParamValue::make_number(v.get<double>());
    if (v.is_boolean()) return ParamValue::make_boolean(v.get<bool>());
    if (v.is_array()) {
        ParamValue out;
        out.kind = ParamValue::Kind::List;
        for (const auto& item : v) out.list.push_back(param_value_from_json(item, key));
        return out;
    }
    throw DslError(1, 1, "parameter '" + key + "' has unsupported JSON value " + v.dump());
}

inline Pipeline parse_pattern_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DslError(1, 1, std::string("invalid JSON pattern file: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("instances") || !doc["instances"].is_array())
        throw DslError(1, 1, "JSON pattern file must be {\"instances\": [...]}");
    Pipeline pipe;
    if (doc.contains("useDerived")) {
        if (!doc["useDerived"].is_boolean())
            throw DslError(1, 1, "'useDerived' must be a boolean");
        pipe.useDerived = doc["useDerived"].get<bool>();
    }
    if (doc.contains("materializeBetweenStages")) {
        if (!doc["materializeBetweenStages"].is_boolean())
            throw DslError(1, 1, "'materializeBetweenStages' must be a boolean");
        pipe.materializeBetweenStages = doc["materializeBetweenStages"].get<bool>();
    }
    for (const auto& [key, _] : doc.items())
        if (key != "instances" && key != "useDerived" && key != "materializeBetweenStages")
            throw DslError(1, 1, "unknown field '" + key + "' in JSON pattern file");

    for (const auto& item : doc["instances"]) {
        if (!item.is_object() || !item.contains("pattern") || !item["pattern"].is_string() ||
            !item.contains("name") || !item["name"].is_string())
            throw DslError(1, 1, "each instance needs string 'pattern' and 'name'");
        PatternInstance inst;
        auto kind = pattern_kind_from_name(item["pattern"].get<std::string>());
        if (!kind)
            throw DslError(1, 1,
                           "unknown pattern '" + item["pattern"].get<std::string>() + "'");
        inst.pattern = *kind;
        inst.name = item["name"].get<std::string>();
        if (item.contains("params")) {
            if (!item["params"].is_object())
                throw DslError(1, 1, "instance '" + inst.name + "': 'params' must be an object");
            for (const auto& [key, value] : item["params"].items()) {
                bool known = key == "stage";
                for (const ParamSpec& s : pattern_signature(inst.pattern))
                    known |= key == s.key;
                if (!known)
                    throw DslError(1, 1, "unknown parameter '" + key + "' for pattern '" +
                                             std::string(pattern_name(inst.pattern)) + "'");
                inst.params.emplace(key, param_value_from_json(value, key));
            }
        }
        if (item.contains("stage")) {
            if (!item["stage"].is_number_integer() || item["stage"].get<int>() < 0)
                throw DslError(1, 1, "instance '" + inst.name +
                                         "': 'stage' must be a non-negative integer");
            inst.params["stage"] = ParamValue::make_number(item["stage"].get<double>());
        }
        for (const auto& [key, _] : item.items())
            if (key != "pattern" && key != "name" && key != "params" && key != "stage")
                throw DslError(1, 1, "unknown field '" + key + "' in instance '" + inst.name +
                                         "'");
        if (const ParamValue* s = inst.find("stage")) {
            if (s->kind != ParamValue::Kind::Number || s->num < 0 ||
                s->num != static_cast<double>(static_cast<long long>(s->num)))
                throw DslError(1, 1, "instance '" + inst.name +
                                         "': 'stage' must be a non-negative integer");
            inst.stage = static_cast<int>(s->num);
        }
        pipe.instances.push_back(std::move(inst));
    }
    for (std::size_t i = 0; i < pipe.instances.size(); ++i)
        for (std::size_t j = i + 1; j < pipe.instances.size(); ++j)
            if (pipe.instances[i].name == pipe.instances[j].name)
                throw DslError(1, 1,
                               "duplicate instance name '" + pipe.instances[i].name + "'");
    return pipe;
}

// Auto-detects the JSON form (first significant byte is '{').
inline Pipeline parse_pipeline_text(std::string_view text) {
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') continue;
        if (c == '{') return parse_pattern_json(text);
        break;
    }
    return parse_pattern_file(text);
}

// --- validation -------------------------------------------------------------------

inline void check_enum(const PatternInstance& inst, const ParamSpec& spec, const ParamValue& v,
                       std::vector<Diagnostic>& out) {
    if (v.kind != ParamValue::Kind::String) {
        out.push_back({inst.name, spec.key, "must be one of: " + std::string(spec.enumValues)});
        return;
    }
    const std::string canon = canonical_enum(v.str);
    std::string_view all(spec.enumValues);
    std::size_t pos = 0;
    while (pos <= all.size()) {
        std::size_t bar = all.find('|', pos);
        if (bar == std::string_view::npos) bar = all.size();
        if (canon == all.substr(pos, bar - pos)) return;
        pos = bar + 1;
    }
    out.push_back({inst.name, spec.key,
                   "invalid value '" + v.str + "' (one of: " + spec.enumValues + ")"});
}

inline std::vector<Diagnostic> validate_pipeline(const Pipeline& pipe, const Taxonomy& taxonomy) {
    std::vector<Diagnostic> out;
    for (const PatternInstance& inst : pipe.instances) {
        const auto& sig = pattern_signature(inst.pattern);
        for (const ParamSpec& spec : sig) {
            const ParamValue* v = inst.find(spec.key);
            if (!v) {
                if (spec.required)
                    out.push_back({inst.name, spec.key, "missing required parameter"});
                continue;
            }
            switch (spec.type) {
                case ParamType::Class:
                    if (v->kind != ParamValue::Kind::String)
                        out.push_back({inst.name, spec.key, "must be a class identifier"});
                    else if (!taxonomy.has_class(v->str))
                        out.push_back({inst.name, spec.key,
                                       "class '" + v->str + "' is not declared"});
                    break;
                case ParamType::String:
                    if (v->kind != ParamValue::Kind::String)
                        out.push_back({inst.name, spec.key, "must be a string"});
                    else if (v->str.empty())
                        out.push_back({inst.name, spec.key, "must not be empty"});
                    break;
                case ParamType::Number:
                    if (v->kind != ParamValue::Kind::Number)
                        out.push_back({inst.name, spec.key, "must be a number"});
                    break;
                case ParamType::Boolean:
                    if (v->kind != ParamValue::Kind::Boolean)
                        out.push_back({inst.name, spec.key, "must be true or false"});
                    break;
                case ParamType::Scalar:
                    if (v->kind == ParamValue::Kind::List)
                        out.push_back({inst.name, spec.key, "must be a scalar"});
                    break;
                case ParamType::ClassList:
                    if (v->kind != ParamValue::Kind::List) {
                        out.push_back({inst.name, spec.key, "must be a list of classes"});
                    } else {
                        for (const ParamValue& item : v->list) {
                            if (item.kind != ParamValue::Kind::String)
                                out.push_back(
                                    {inst.name, spec.key, "must be a list of class identifiers"});
                            else if (!taxonomy.has_class(item.str))
                                out.push_back({inst.name, spec.key,
                                               "class '" + item.str + "' is not declared"});
                        }
                        if (v->list.empty())
                            out.push_back({inst.name, spec.key, "must not be empty"});
                    }
                    break;
                case ParamType::Enum:
                    check_enum(inst, spec, *v, out);
                    break;
            }
        }
        if (inst.pattern == PatternKind::IntervalAggregate) {
            const ParamValue* agg = inst.find("agg");
            const bool thresholded =
                agg && agg->kind == ParamValue::Kind::String &&
                (canonical_enum(agg->str) == "count_above" ||
                 canonical_enum(agg->str) == "count_below");
            const bool hasThreshold = inst.find("threshold") != nullptr;
            if (thresholded && !hasThreshold)
                out.push_back({inst.name, "threshold",
                               "required for count_above/count_below"});
            if (!thresholded && hasThreshold && agg)
                out.push_back({inst.name, "threshold",
                               "only valid for count_above/count_below"});
        }
        if (inst.pattern == PatternKind::ElapsedSucceedingSameType) {
            const bool a = inst.find("filterAttribute") != nullptr;
            const bool b = inst.find("filterValue") != nullptr;
            if (a != b)
                out.push_back({inst.name, a ? "filterValue" : "filterAttribute",
                               "filterAttribute and filterValue must be given together"});
        }
    }
    return out;
}

// --- pretty printer ---------------------------------------------------------------

namespace detail {

inline bool is_bare_ident(const std::string& s) {
    if (s.empty() || s == "true" || s == "false") return false;
    if (!ident_start(s[0])) return false;
    for (char c : s)
        if (!ident_char(c)) return false;
    return true;
}

inline void print_value(std::string& out, const ParamValue& v) {
    switch (v.kind) {
        case ParamValue::Kind::String:
            if (is_bare_ident(v.str)) {
                out += v.str;
            } else {
                out += '"';
                for (char c : v.str) {
                    switch (c) {
                        case '"': out += "\\\""; break;
                        case '\\': out += "\\\\"; break;
                        case '\n': out += "\\n"; break;
                        case '\t': out += "\\t"; break;
                        case '\r': out += "\\r"; break;
                        default: out += c;
                    }
                }
                out += '"';
            }
            break;
        case ParamValue::Kind::Number: out += format_number(v.num); break;
        case ParamValue::Kind::Boolean: out += v.boolean ? "true" : "false"; break;
        case ParamValue::Kind::List:
            out += '[';
            for (std::size_t i = 0; i < v.list.size(); ++i) {
                if (i) out += ", ";
                print_value(out, v.list[i]);
            }
            out += ']';
            break;
    }
}

}  // namespace detail

// Canonical text form; parse_pattern_file(print_pipeline(p)) == p for any
// DSL-expressible pipeline (params in signature order, stage last).
inline std::string print_pipeline(const Pipeline& pipe) {
    std::string out;
    for (const PatternInstance& inst : pipe.instances) {
        out += "pattern ";
        out += pattern_name(inst.pattern);
        out += " as ";
        out += inst.name;
        out += " {\n";
        for (const ParamSpec& spec : pattern_signature(inst.pattern)) {
            if (const ParamValue* v = inst.find(spec.key)) {
                out += "  ";
                out += spec.key;
                out += " = ";
                detail::print_value(out, *v);
                out += '\n';
            }
        }
        if (const ParamValue* v = inst.find("stage")) {
            out += "  stage = ";
            detail::print_value(out, *v);
            out += '\n';
        }
        out += "}\n";
    }
    return out;
}

// --- typed parameter access (assumes a validated instance) -------------------------

inline ClassIdx param_class(const PatternInstance& inst, const Taxonomy& tax,
                            const std::string& key) {
    const ParamValue* v = inst.find(key);
    if (!v) throw DataError("instance '" + inst.name + "': missing parameter '" + key + "'");
    return tax.index_of(v->str);
}

inline ClassIdx param_class_or(const PatternInstance& inst, const Taxonomy& tax,
                               const std::string& key, const char* dflt) {
    const ParamValue* v = inst.find(key);
    return tax.index_of(v ? v->str : std::string(dflt));
}

inline std::string param_string(const PatternInstance& inst, const std::string& key) {
    const ParamValue* v = inst.find(key);
    if (!v) throw DataError("instance '" + inst.name + "': missing parameter '" + key + "'");
    return v->str;
}

inline bool param_bool_or(const PatternInstance& inst, const std::string& key, bool dflt) {
    const ParamValue* v = inst.find(key);
    return v ? v->boolean : dflt;
}

inline double param_number(const PatternInstance& inst, const std::string& key) {
    const ParamValue* v = inst.find(key);
    if (!v) throw DataError("instance '" + inst.name + "': missing parameter '" + key + "'");
    return v->num;
}

inline std::string param_enum_or(const PatternInstance& inst, const std::string& key,
                                 const char* dflt) {
    const ParamValue* v = inst.find(key);
    return canonical_enum(v ? v->str : std::string(dflt));
}

inline std::vector<ClassIdx> param_class_list_or(const PatternInstance& inst, const Taxonomy& tax,
                                                 const std::string& key,
                                                 std::initializer_list<const char*> dflt) {
    std::vector<ClassIdx> out;
    if (const ParamValue* v = inst.find(key)) {
        for (const ParamValue& item : v->list) out.push_back(tax.index_of(item.str));
    } else {
        for (const char* c : dflt) out.push_back(tax.index_of(c));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline std::optional<Scalar> param_scalar(const PatternInstance& inst, const std::string& key) {
    const ParamValue* v = inst.find(key);
    if (!v) return std::nullopt;
    switch (v->kind) {
        case ParamValue::Kind::String: return Scalar{v->str};
        case ParamValue::Kind::Number: return Scalar{v->num};
        case ParamValue::Kind::Boolean: return Scalar{v->boolean};
        case ParamValue::Kind::List: break;
    }
    return std::nullopt;
}

}  // namespace trace_enrich
