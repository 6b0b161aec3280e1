#include "attrib/registry.hpp"

#include "attrib/bandit.hpp"
#include "attrib/errors.hpp"
#include "attrib/gallery.hpp"
#include "attrib/random_system.hpp"

namespace attrib {

void SystemRegistry::add(const std::string& name, const std::string& params_doc,
                         Factory factory) {
    entries_[name] = {params_doc, std::move(factory)};
}

bool SystemRegistry::contains(const std::string& name) const { return entries_.count(name) > 0; }

RegisteredSystem SystemRegistry::build(const std::string& name,
                                       const nlohmann::json& params) const {
    const auto it = entries_.find(name);
    if (it == entries_.end()) throw ConfigError("unknown system name: " + name);
    return it->second.second(params.is_null() ? nlohmann::json::object() : params);
}

std::vector<SystemRegistry::Entry> SystemRegistry::entries() const {
    std::vector<Entry> out;
    for (const auto& [name, value] : entries_) out.push_back({name, value.first});
    return out;
}

namespace {

void check_keys(const nlohmann::json& params, std::initializer_list<const char*> allowed) {
    if (!params.is_object()) throw ConfigError("system params must be a JSON object");
    for (const auto& [key, value] : params.items()) {
        bool ok = false;
        for (const char* a : allowed) ok |= key == a;
        if (!ok) throw ConfigError("unknown system parameter: " + key);
    }
}

double require_number(const nlohmann::json& params, const char* key, double fallback) {
    if (!params.contains(key)) return fallback;
    if (!params[key].is_number()) throw ConfigError(std::string(key) + " must be a number");
    return params[key].get<double>();
}

}  // namespace

SystemRegistry builtin_registry() {
    SystemRegistry reg;

    reg.add("insufficiency", "gamma (default 1)", [](const nlohmann::json& p) {
        check_keys(p, {"gamma"});
        const double gamma = require_number(p, "gamma", 1.0);
        return RegisteredSystem{insufficiency_family(gamma), std::nullopt,
                                "horizon-2 sigmoid family, shared replay oracle"};
    });

    reg.add("frontier-reward", "gamma (default 1)", [](const nlohmann::json& p) {
        check_keys(p, {"gamma"});
        const double gamma = require_number(p, "gamma", 1.0);
        auto pair = negative_frontier_pair(FrontierKind::reward, gamma, gamma + 1.0);
        return RegisteredSystem{std::move(pair.first), std::nullopt,
                                "state-dependent reward law, baseline-indistinguishable"};
    });

    reg.add("frontier-context", "gamma (default 1)", [](const nlohmann::json& p) {
        check_keys(p, {"gamma"});
        const double gamma = require_number(p, "gamma", 1.0);
        auto pair = negative_frontier_pair(FrontierKind::context, gamma, gamma + 1.0);
        return RegisteredSystem{std::move(pair.first), std::nullopt,
                                "state-dependent context law, baseline-indistinguishable"};
    });

    reg.add("exogenous-coin", "(no parameters)", [](const nlohmann::json& p) {
        check_keys(p, {});
        return RegisteredSystem{exogenous_coin(), std::nullopt,
                                "state-independent coin flip with moving replay responses"};
    });

    reg.add("insufficiency-action-only", "gamma (default 1)", [](const nlohmann::json& p) {
        check_keys(p, {"gamma"});
        const double gamma = require_number(p, "gamma", 1.0);
        ActionOnlySystem aos = insufficiency_action_only(gamma);
        return RegisteredSystem{aos.to_adaptive(), aos,
                                "sigmoid family recast with the state dependence in the policy"};
    });

    reg.add("bandit", "q, mu0, mu1, eta (array; default [0.3, 0.3])",
            [](const nlohmann::json& p) {
                check_keys(p, {"q", "mu0", "mu1", "eta"});
                BanditConfig cfg;
                cfg.q = require_number(p, "q", 0.25);
                cfg.mu0 = require_number(p, "mu0", 0.5);
                cfg.mu1 = require_number(p, "mu1", 0.5);
                if (p.contains("eta")) {
                    if (!p["eta"].is_array()) throw ConfigError("eta must be an array");
                    cfg.eta = p["eta"].get<std::vector<double>>();
                } else {
                    cfg.eta = {0.3, 0.3};
                }
                ActionOnlySystem aos = bandit_system(cfg);
                return RegisteredSystem{aos.to_adaptive(), aos,
                                        "two-armed Bernoulli bandit with mirror-descent policy"};
            });

    reg.add("random-smooth", "seed, T, d, max_cardinality", [](const nlohmann::json& p) {
        check_keys(p, {"seed", "T", "d", "max_cardinality"});
        RandomSystemOptions opt;
        opt.horizon = static_cast<int>(require_number(p, "T", 3));
        opt.dim = static_cast<int>(require_number(p, "d", 2));
        opt.max_cardinality = static_cast<int>(require_number(p, "max_cardinality", 3));
        const auto seed = static_cast<std::uint64_t>(require_number(p, "seed", 1));
        return RegisteredSystem{random_smooth_system(seed, opt), std::nullopt,
                                "seeded random smooth system"};
    });

    reg.add("random-exogenous", "seed, T, d, max_cardinality", [](const nlohmann::json& p) {
        check_keys(p, {"seed", "T", "d", "max_cardinality"});
        RandomSystemOptions opt;
        opt.horizon = static_cast<int>(require_number(p, "T", 3));
        opt.dim = static_cast<int>(require_number(p, "d", 2));
        opt.max_cardinality = static_cast<int>(require_number(p, "max_cardinality", 3));
        opt.exogenous = true;
        const auto seed = static_cast<std::uint64_t>(require_number(p, "seed", 1));
        return RegisteredSystem{random_smooth_system(seed, opt), std::nullopt,
                                "seeded random system with state-independent kernels"};
    });

    reg.add("random-action-only", "seed, T, d", [](const nlohmann::json& p) {
        check_keys(p, {"seed", "T", "d"});
        RandomActionOnlyOptions opt;
        opt.horizon = static_cast<int>(require_number(p, "T", 3));
        opt.dim = static_cast<int>(require_number(p, "d", 2));
        const auto seed = static_cast<std::uint64_t>(require_number(p, "seed", 1));
        ActionOnlySystem aos = random_action_only_system(seed, opt);
        return RegisteredSystem{aos.to_adaptive(), aos, "seeded random factorized system"};
    });

    return reg;
}

}  // namespace attrib
