#pragma once

#include <json.hpp>
#include <map>
#include <optional>

#include "attrib/action_only.hpp"
#include "attrib/system.hpp"

namespace attrib {

// A constructed system plus the factorized view when one exists.
struct RegisteredSystem {
    AdaptiveSystem system;
    std::optional<ActionOnlySystem> action_only;
    std::string description;
};

// Named system factories keyed by name + JSON parameters, for reproducible
// experiment addressing from the command line.
class SystemRegistry {
public:
    using Factory = std::function<RegisteredSystem(const nlohmann::json&)>;

    void add(const std::string& name, const std::string& params_doc, Factory factory);
    bool contains(const std::string& name) const;
    RegisteredSystem build(const std::string& name, const nlohmann::json& params) const;

    struct Entry {
        std::string name;
        std::string params_doc;
    };
    std::vector<Entry> entries() const;

private:
    std::map<std::string, std::pair<std::string, Factory>> entries_;
};

// Registry with the counterexample families, the bandit, and the seeded
// random test systems.
SystemRegistry builtin_registry();

}  // namespace attrib
