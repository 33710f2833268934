#include "courier/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace courier {

using nlohmann::json;

Frac to_frac(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f", x);
    Frac f = parse_frac(buf);
    if (std::fabs(f.value() - x) > 1e-9)
        throw ConfigError("value " + std::to_string(x) + " is not a short decimal");
    return f;
}

Config default_config() { return Config{}; }

namespace {

// Pulls section.key out of the JSON if present, enforcing the value type.
struct Section {
    const json& j;
    std::string name;
    std::vector<std::string> seen;

    template <typename T>
    void get(const char* key, T& out) {
        seen.push_back(key);
        auto it = j.find(key);
        if (it == j.end()) return;
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config: bad value for '" + name + "." + key + "'");
        }
    }

    void finish() const {
        for (auto it = j.begin(); it != j.end(); ++it)
            if (std::find(seen.begin(), seen.end(), it.key()) == seen.end())
                throw ConfigError("config: unknown key '" + name + "." + it.key() + "'");
    }
};

void check(bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("config: ") + what);
}

}  // namespace

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config: " + std::string(e.what()));
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");

    Config c;
    std::vector<std::string> top_seen;
    auto section = [&](const char* name) -> const json* {
        top_seen.push_back(name);
        auto it = j.find(name);
        if (it == j.end()) return nullptr;
        if (!it->is_object()) throw ConfigError("config: '" + std::string(name) + "' must be an object");
        return &*it;
    };

    if (const json* p = section("paths")) {
        Section s{*p, "paths", {}};
        s.get("map30", c.map30);
        s.get("map50", c.map50);
        s.get("merge_map", c.merge_map);
        s.get("dialog_kb", c.dialog_kb);
        s.get("out_dir", c.out_dir);
        s.finish();
    }
    if (const json* p = section("learner")) {
        Section s{*p, "learner", {}};
        s.get("m_known", c.learner.m_known);
        s.get("replan_every", c.learner.replan_every);
        s.get("r_max", c.learner.r_max);
        s.get("gamma", c.learner.gamma);
        s.get("vi_epsilon", c.learner.vi_epsilon);
        s.finish();
    }
    if (const json* p = section("nav")) {
        Section s{*p, "nav", {}};
        s.get("p_base", c.p_base);
        s.get("step_cap_small", c.step_cap_small);
        s.get("step_cap_large", c.step_cap_large);
        s.get("step_cost", c.step_cost);
        s.finish();
    }
    if (const json* p = section("dialog")) {
        Section s{*p, "dialog", {}};
        s.get("general_cost", c.general_cost);
        s.get("confirm_cost", c.confirm_cost);
        s.get("serve_reward", c.serve_reward);
        s.get("p_general", c.p_general);
        s.get("p_confirm", c.p_confirm);
        s.get("turn_cap", c.turn_cap);
        s.get("plan_depth", c.plan_depth);
        s.finish();
    }
    if (const json* p = section("experiments")) {
        Section s{*p, "experiments", {}};
        s.get("delivery_brs", c.delivery_brs);
        s.get("static_br", c.static_br);
        s.get("delivery_trials", c.delivery_trials);
        s.get("transfer_seeds", c.transfer_seeds);
        s.get("transfer_episodes_small", c.transfer_episodes_small);
        s.get("transfer_episodes_large", c.transfer_episodes_large);
        s.get("transfer_source_room", c.transfer_source_room);
        s.get("transfer_target_small", c.transfer_target_small);
        s.get("transfer_target_large", c.transfer_target_large);
        s.get("entropy_draws", c.entropy_draws);
        s.get("entropy_alpha", c.entropy_alpha);
        s.get("merge_trials", c.merge_trials);
        s.get("cdf_trials", c.cdf_trials);
        s.get("cdf_brs", c.cdf_brs);
        s.get("learn_tasks", c.learn_tasks);
        s.get("learn_episodes", c.learn_episodes);
        s.finish();
    }
    {
        top_seen.push_back("seed");
        auto it = j.find("seed");
        if (it != j.end()) {
            if (!it->is_number_unsigned()) throw ConfigError("config: 'seed' must be a nonnegative integer");
            c.seed = it->get<uint64_t>();
        }
    }
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(top_seen.begin(), top_seen.end(), it.key()) == top_seen.end())
            throw ConfigError("config: unknown key '" + it.key() + "'");

    check(c.p_base > 0.0 && c.p_base <= 1.0, "nav.p_base must lie in (0,1]");
    check(c.step_cap_small >= 1 && c.step_cap_large >= 1, "step caps must be positive");
    check(c.learner.m_known >= 1, "learner.m_known must be positive");
    check(c.learner.replan_every >= 1, "learner.replan_every must be positive");
    check(c.learner.gamma > 0.0 && c.learner.gamma <= 1.0, "learner.gamma must lie in (0,1]");
    check(c.turn_cap >= 1, "dialog.turn_cap must be positive");
    check(c.plan_depth >= 0 && c.plan_depth <= 8, "dialog.plan_depth must lie in [0,8]");
    check(!c.delivery_brs.empty(), "experiments.delivery_brs must be nonempty");
    for (double br : c.delivery_brs) check(br >= 0.0 && br < 1.0, "blocking rates must lie in [0,1)");
    for (double br : c.cdf_brs) check(br >= 0.0 && br < 1.0, "blocking rates must lie in [0,1)");
    check(c.static_br >= 0.0 && c.static_br < 1.0, "experiments.static_br must lie in [0,1)");
    check(c.delivery_trials >= 1 && c.transfer_seeds >= 1 && c.entropy_draws >= 1 &&
              c.merge_trials >= 1 && c.cdf_trials >= 1,
          "trial counts must be at least 1");
    check(c.entropy_alpha > 0.0, "experiments.entropy_alpha must be positive");
    check(c.transfer_source_room.size() == 1 && c.transfer_target_small.size() == 1 &&
              c.transfer_target_large.size() == 1,
          "transfer room names must be single characters");
    check(c.learn_tasks >= 0 && c.learn_episodes >= 1, "learning budget out of range");
    return c;
}

void apply_profile(Config& c, const std::string& profile) {
    if (profile == "desk") return;
    if (profile == "paper") {
        c.delivery_trials = 10000;
        c.transfer_seeds = 1000;
        c.merge_trials = 10000;
        c.cdf_trials = 5000;
        return;
    }
    throw ConfigError("config: unknown profile '" + profile + "' (expected desk or paper)");
}

}  // namespace courier
