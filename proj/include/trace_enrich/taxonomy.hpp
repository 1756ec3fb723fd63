#pragma once
// Class taxonomy: a DAG of subclass relations rooted at Event and Entity.
// Subsumption checks are O(1) bitset tests after the closure is built.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "trace_enrich/types.hpp"

namespace trace_enrich {

class Taxonomy {
public:
    // Root and built-in class names.
    static constexpr const char* kEvent = "Event";
    static constexpr const char* kEntity = "Entity";
    static constexpr const char* kResource = "Resource";
    static constexpr const char* kProductionEntity = "ProductionEntity";
    static constexpr const char* kSensor = "Sensor";
    static constexpr const char* kAggregate = "Aggregate";

    Taxonomy() {
        add_class(kEvent, {});
        add_class(kEntity, {});
        add_class(kResource, {kEntity});
        add_class(kProductionEntity, {kEntity});
        add_class(kSensor, {kEntity});
    }

    // Built-in manufacturing vocabulary; user declarations extend it.
    static Taxonomy with_defaults() {
        Taxonomy t;
        for (const char* c : {"Machine", "Workstation", "Buffer", "AGV", "Operator", "Tool"})
            t.add_class(c, {kResource});
        for (const char* c : {"Job", "Product", "Component", "ProductionLot", "Batch", "Order"})
            t.add_class(c, {kProductionEntity});
        for (const char* c : {"TrackIn", "TrackOut", "Alarm", "Repair", "Maintenance",
                              "Observation", "SwitchState", "SwitchTool"})
            t.add_class(c, {kEvent});
        t.add_class(kAggregate, {kEvent});
        for (const char* c : {"Split", "Merge", "Consume"}) t.add_class(c, {kAggregate});
        t.build_closure();
        return t;
    }

    // Declares a class (parents may be declared later); call build_closure() when done.
    void add_class(const std::string& name, const std::vector<std::string>& parents) {
        ClassIdx idx = intern(name);
        for (const auto& p : parents) {
            ClassIdx pi = intern(p);
            auto& ps = parents_[idx];
            if (std::find(ps.begin(), ps.end(), pi) == ps.end()) ps.push_back(pi);
        }
        closed_ = false;
    }

    // Verifies the DAG and computes the reflexive-transitive ancestor closure.
    // Throws DataError on cycles or classes that reach no built-in root.
    void build_closure() {
        const std::size_t n = names_.size();
        words_ = (n + 63) / 64;
        ancestors_.assign(n * words_, 0);
        // Kahn's algorithm over the child->parent edges; leftovers are a cycle.
        std::vector<std::uint32_t> pending(n, 0);
        std::vector<std::vector<ClassIdx>> children(n);
        for (std::size_t c = 0; c < n; ++c) {
            pending[c] = static_cast<std::uint32_t>(parents_[c].size());
            for (ClassIdx p : parents_[c]) children[p].push_back(static_cast<ClassIdx>(c));
        }
        std::vector<ClassIdx> queue;
        for (std::size_t c = 0; c < n; ++c)
            if (pending[c] == 0) queue.push_back(static_cast<ClassIdx>(c));
        std::size_t done = 0;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            ClassIdx c = queue[head];
            ++done;
            set_bit(c, c);
            for (ClassIdx p : parents_[c]) or_row(c, p);
            for (ClassIdx child : children[c])
                if (--pending[child] == 0) queue.push_back(child);
        }
        if (done != n) {
            std::string cyc;
            for (std::size_t c = 0; c < n; ++c)
                if (pending[c] > 0) cyc += (cyc.empty() ? "" : ", ") + names_[c];
            throw DataError("taxonomy contains a subclass cycle involving: " + cyc);
        }
        const ClassIdx ev = index_of(kEvent), en = index_of(kEntity);
        for (std::size_t c = 0; c < n; ++c) {
            if (!test_bit(static_cast<ClassIdx>(c), ev) &&
                !test_bit(static_cast<ClassIdx>(c), en))
                throw DataError("class '" + names_[c] +
                                "' does not reach a built-in root (Event or Entity)");
        }
        descendants_.assign(n, {});
        for (std::size_t c = 0; c < n; ++c)
            for (std::size_t a = 0; a < n; ++a)
                if (test_bit(static_cast<ClassIdx>(c), static_cast<ClassIdx>(a)))
                    descendants_[a].push_back(static_cast<ClassIdx>(c));
        closed_ = true;
    }

    bool has_class(const std::string& name) const { return index_.count(name) != 0; }

    ClassIdx index_of(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw DataError("unknown class '" + name + "'");
        return it->second;
    }

    const std::string& name_of(ClassIdx c) const { return names_[c]; }
    std::size_t size() const { return names_.size(); }

    // sub ⊑ super under the reflexive-transitive closure.
    bool is_subclass(ClassIdx sub, ClassIdx super) const { return test_bit(sub, super); }

    bool is_subclass(const std::string& sub, const std::string& super) const {
        return is_subclass(index_of(sub), index_of(super));
    }

    // All classes c with c ⊑ of (including `of` itself), ascending index.
    const std::vector<ClassIdx>& descendants(ClassIdx of) const { return descendants_[of]; }

    ClassIdx event_root() const { return index_of(kEvent); }
    ClassIdx entity_root() const { return index_of(kEntity); }

    bool is_event_class(ClassIdx c) const { return test_bit(c, event_root()); }
    bool is_entity_class(ClassIdx c) const { return test_bit(c, entity_root()); }

private:
    ClassIdx intern(const std::string& name) {
        auto it = index_.find(name);
        if (it != index_.end()) return it->second;
        ClassIdx idx = static_cast<ClassIdx>(names_.size());
        names_.push_back(name);
        parents_.emplace_back();
        index_.emplace(name, idx);
        return idx;
    }

    void set_bit(ClassIdx row, ClassIdx bit) {
        ancestors_[row * words_ + bit / 64] |= (std::uint64_t{1} << (bit % 64));
    }
    bool test_bit(ClassIdx row, ClassIdx bit) const {
        return (ancestors_[row * words_ + bit / 64] >> (bit % 64)) & 1;
    }
    void or_row(ClassIdx dst, ClassIdx src) {
        for (std::size_t w = 0; w < words_; ++w)
            ancestors_[dst * words_ + w] |= ancestors_[src * words_ + w];
    }

    std::vector<std::string> names_;
    std::vector<std::vector<ClassIdx>> parents_;
    std::unordered_map<std::string, ClassIdx> index_;
    std::vector<std::uint64_t> ancestors_;  // row per class, reflexive-transitive
    std::vector<std::vector<ClassIdx>> descendants_;
    std::size_t words_ = 0;
    bool closed_ = false;
};

}  // namespace trace_enrich
