#pragma once

// Tabular MDP with exact transition rows plus the three solvers everything
// else leans on: value iteration (parallel kernel and a serial reference),
// exact policy success probability by forward distribution propagation, and
// fixed-policy evaluation.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace courier::mdp {

struct Transition {
    int next;
    double prob;
};

struct Mdp {
    int num_states = 0;
    int num_actions = 0;
    double gamma = 0.95;
    // row[s][a]: enumerated outcome distribution; empty row = action
    // unavailable in s (skipped by the max; illegal if all rows empty)
    std::vector<std::vector<std::vector<Transition>>> trans;
    std::vector<std::vector<double>> reward;  // R(s,a)
    std::vector<char> terminal;               // absorbing, value 0

    void init(int states, int actions, double g) {
        num_states = states;
        num_actions = actions;
        gamma = g;
        trans.assign(states, std::vector<std::vector<Transition>>(actions));
        reward.assign(states, std::vector<double>(actions, 0.0));
        terminal.assign(states, 0);
    }

    void validate() const;  // throws std::invalid_argument on malformed rows
};

struct Solution {
    std::vector<double> value;
    std::vector<int> policy;  // -1 on terminals
    int iterations = 0;
};

inline constexpr int kMaxIterations = 100000;

// Bellman residual < epsilon; greedy ties break toward the lowest action
// index. gamma = 1 requires every policy to reach a terminal (checked).
// warm_start, when non-null, seeds the value table (same length).
Solution value_iteration(const Mdp& m, double epsilon, const std::vector<double>* warm_start = nullptr);

// Serial reference for the parallel sweep kernel; identical arithmetic.
Solution value_iteration_serial(const Mdp& m, double epsilon, const std::vector<double>* warm_start = nullptr);

// Probability that following `policy` from `start` lands the process in one
// of `success` (all of which must be terminal) within step_cap steps.
// Exact forward propagation of the state distribution, gamma plays no role.
double policy_success_probability(const Mdp& m, const std::vector<int>& policy, int start,
                                  const std::vector<int>& success, int step_cap);

// Fixed-policy value to residual 1e-9. Throws on gamma = 1 divergence
// (iteration cap with growing values).
std::vector<double> evaluate_policy(const Mdp& m, const std::vector<int>& policy);

}  // namespace courier::mdp
