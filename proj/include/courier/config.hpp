#pragma once

// Run configuration: JSON file over built-in defaults, with a desk/paper
// profile switch for trial counts. Unknown keys are rejected so typos fail
// loudly instead of silently running the defaults.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "courier/prob.hpp"
#include "courier/rmax.hpp"

namespace courier {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Config {
    // inputs and outputs
    std::string map30 = "data/fig30.map";
    std::string map50 = "data/grid50.map";
    std::string merge_map = "data/merge.map";
    std::string dialog_kb = "data/dialog.kb";
    std::string out_dir = "out";

    uint64_t seed = 20240817;

    rmax::Params learner;

    // navigation
    double p_base = 0.8;
    int step_cap_small = 200;
    int step_cap_large = 300;
    double step_cost = -1.0;

    // dialog
    double general_cost = 2.0;
    double confirm_cost = 1.5;
    double serve_reward = 80.0;
    double p_general = 0.8;
    double p_confirm = 0.9;
    int turn_cap = 20;
    int plan_depth = 3;

    // experiment sizes (desk profile values; see apply_profile)
    std::vector<double> delivery_brs = {0.1, 0.5, 0.7};
    double static_br = 0.3;
    int delivery_trials = 1000;
    int transfer_seeds = 100;
    int transfer_episodes_small = 120;
    int transfer_episodes_large = 150;
    // source task is trained once and handed to every seeded arm; targets
    // differ per floor so each curve converges inside its episode budget
    std::string transfer_source_room = "1";
    std::string transfer_target_small = "4";
    std::string transfer_target_large = "2";
    int entropy_draws = 10000;
    double entropy_alpha = 0.05;
    int merge_trials = 1000;
    int cdf_trials = 800;
    std::vector<double> cdf_brs = {0.1, 0.5};
    int learn_tasks = 5;
    int learn_episodes = 2000;
};

// Parses the file (JSON) over the defaults. Throws ConfigError on syntax
// errors, unknown keys, or out-of-range values.
Config load_config(const std::string& path);

// Built-in defaults only.
Config default_config();

// profile "desk" (the defaults) or "paper" (full trial counts).
void apply_profile(Config& c, const std::string& profile);

// Exact rational from a short decimal (config values like 0.8 or 0.35).
Frac to_frac(double x);

}  // namespace courier
