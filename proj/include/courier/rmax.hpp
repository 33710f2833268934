#pragma once

// R-Max model-based learner. Pairs with fewer than m_known observations point
// at a fictitious absorbing state s^v worth R_max; known pairs carry their
// empirical successor frequencies and mean reward. The policy is recomputed
// the moment a pair first becomes known (the optimistic model just changed
// shape, so the old plan may chase a disproven bonus) and anyway every
// replan_every action steps, which folds in the drift of the empirical
// estimates as counts keep growing.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "courier/mdp.hpp"

namespace courier::rmax {

struct Params {
    int m_known = 5;
    int replan_every = 20;
    double r_max = 100.0;
    double gamma = 0.95;
    // replanning tolerance; action gaps on these floors are >= the step
    // cost, so there is no need to sweep values down to analytic precision
    double vi_epsilon = 1e-4;
};

// Known-pair snapshot with exact counts; probabilities are count/total.
struct ExportEntry {
    int state = 0;
    int action = 0;
    long long total = 0;
    std::vector<std::pair<int, long long>> succ_counts;  // sorted by successor
    double mean_reward = 0.0;
};

class Learner {
public:
    Learner(int num_states, int num_actions, std::vector<char> terminal, Params params);

    // Greedy action under the cached policy; replans when due. Counts one
    // action step.
    int act(int state);

    void observe(int state, int action, int next, double reward);

    bool known(int state, int action) const;
    int count(int state, int action) const;
    const Params& params() const { return params_; }
    int num_states() const { return num_states_; }   // excludes s^v
    int num_actions() const { return num_actions_; }
    int absorbing_state() const { return num_states_; }

    // Copy of the induced model (env states + s^v at index num_states()).
    mdp::Mdp induced_mdp() const { return mdp_; }

    // Forces a policy recomputation now and resets the step counter.
    void replan();
    int replans() const { return replans_; }
    // True when the last `window` replanned policies were identical.
    bool policy_stable(int window) const { return replans_ >= window && stable_streak_ + 1 >= window; }
    const std::vector<int>& policy() const { return policy_; }
    const std::vector<double>& values() const { return values_; }

    std::vector<ExportEntry> export_model() const;  // known pairs only, sorted

    // Pre-seed with previously learned pairs. Rewards pass through
    // reward_map (e.g. to re-target task bonuses); null keeps them as-is.
    using RewardMap = std::function<double(const ExportEntry&)>;
    void inject(const std::vector<ExportEntry>& entries, const RewardMap& reward_map = nullptr);

private:
    struct PairStats {
        long long total = 0;
        double reward_sum = 0.0;
        std::map<int, long long> succ;
    };

    PairStats& stats(int s, int a) { return stats_[(size_t)s * num_actions_ + a]; }
    const PairStats& stats(int s, int a) const { return stats_[(size_t)s * num_actions_ + a]; }
    void refresh_row(int s, int a);
    long long required_samples(int state, const PairStats& ps) const;

    int num_states_, num_actions_;
    Params params_;
    std::vector<PairStats> stats_;
    mdp::Mdp mdp_;  // maintained incrementally
    std::vector<int> policy_;
    std::vector<double> values_;
    int steps_since_replan_ = -1;  // -1: never planned
    bool model_grew_ = false;      // a pair crossed the known threshold
    int replans_ = 0;
    int stable_streak_ = 0;
};

// Line format: `<state> <action> <succ>:<count>/<total> ... <mean reward>`,
// actions rendered through the given name table.
void write_model_dump(const std::string& path, const std::vector<ExportEntry>& entries,
                      const std::vector<std::string>& action_names);
std::vector<ExportEntry> read_model_dump(const std::string& path, const std::vector<std::string>& action_names);

}  // namespace courier::rmax
