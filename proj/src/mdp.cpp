#include "courier/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace courier::mdp {

void Mdp::validate() const {
    if (num_states <= 0 || num_actions <= 0) throw std::invalid_argument("mdp: empty state or action space");
    if (gamma <= 0.0 || gamma > 1.0) throw std::invalid_argument("mdp: gamma must be in (0, 1]");
    for (int s = 0; s < num_states; ++s) {
        if (terminal[s]) continue;
        bool any = false;
        for (int a = 0; a < num_actions; ++a) {
            const auto& row = trans[s][a];
            if (row.empty()) continue;
            any = true;
            double sum = 0.0;
            for (const auto& t : row) {
                if (t.next < 0 || t.next >= num_states)
                    throw std::invalid_argument("mdp: successor out of range at state " + std::to_string(s));
                if (t.prob < -1e-12) throw std::invalid_argument("mdp: negative probability");
                sum += t.prob;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw std::invalid_argument("mdp: row (" + std::to_string(s) + "," + std::to_string(a) +
                                            ") sums to " + std::to_string(sum));
        }
        if (!any) throw std::invalid_argument("mdp: non-terminal state " + std::to_string(s) + " has no actions");
    }
}

namespace {

// gamma = 1 is only sound when no policy can loop forever off the terminals.
// Iteratively shrink the set of states where some action keeps all mass
// inside the set; a nonempty fixpoint is a potential infinite loop.
void require_proper_for_gamma1(const Mdp& m) {
    std::vector<char> in_set(m.num_states, 0);
    for (int s = 0; s < m.num_states; ++s) in_set[s] = !m.terminal[s];
    bool changed = true;
    while (changed) {
        changed = false;
        for (int s = 0; s < m.num_states; ++s) {
            if (!in_set[s]) continue;
            bool has_closed_action = false;
            for (int a = 0; a < m.num_actions && !has_closed_action; ++a) {
                const auto& row = m.trans[s][a];
                if (row.empty()) continue;
                double inside = 0.0;
                for (const auto& t : row)
                    if (in_set[t.next]) inside += t.prob;
                if (inside >= 1.0 - 1e-12) has_closed_action = true;
            }
            if (!has_closed_action) {
                in_set[s] = 0;
                changed = true;
            }
        }
    }
    for (int s = 0; s < m.num_states; ++s)
        if (in_set[s])
            throw std::invalid_argument("mdp: gamma=1 but some policy never reaches a terminal (state " +
                                        std::to_string(s) + ")");
}

inline double backup_state(const Mdp& m, int s, const std::vector<double>& v, int* best_action) {
    double best = -std::numeric_limits<double>::infinity();
    int arg = -1;
    for (int a = 0; a < m.num_actions; ++a) {
        const auto& row = m.trans[s][a];
        if (row.empty()) continue;
        double q = m.reward[s][a];
        double acc = 0.0;
        for (const auto& t : row) acc += t.prob * v[t.next];
        q += m.gamma * acc;
        if (q > best) {  // strict: first (lowest-index) action wins ties
            best = q;
            arg = a;
        }
    }
    if (best_action) *best_action = arg;
    return best;
}

template <bool Parallel>
Solution run_vi(const Mdp& m, double epsilon, const std::vector<double>* warm_start) {
    m.validate();
    if (epsilon <= 0) throw std::invalid_argument("mdp: epsilon must be positive");
    if (m.gamma >= 1.0) require_proper_for_gamma1(m);

    Solution sol;
    sol.value.assign(m.num_states, 0.0);
    if (warm_start) {
        if ((int)warm_start->size() != m.num_states) throw std::invalid_argument("mdp: warm start size mismatch");
        sol.value = *warm_start;
        for (int s = 0; s < m.num_states; ++s)
            if (m.terminal[s]) sol.value[s] = 0.0;
    }
    std::vector<double> next(m.num_states, 0.0);

    for (int it = 0; it < kMaxIterations; ++it) {
        double residual = 0.0;
        if constexpr (Parallel) {
#pragma omp parallel for schedule(static) reduction(max : residual)
            for (int s = 0; s < m.num_states; ++s) {
                if (m.terminal[s]) { next[s] = 0.0; continue; }
                next[s] = backup_state(m, s, sol.value, nullptr);
                double d = std::abs(next[s] - sol.value[s]);
                if (d > residual) residual = d;
            }
        } else {
            for (int s = 0; s < m.num_states; ++s) {
                if (m.terminal[s]) { next[s] = 0.0; continue; }
                next[s] = backup_state(m, s, sol.value, nullptr);
                double d = std::abs(next[s] - sol.value[s]);
                if (d > residual) residual = d;
            }
        }
        sol.value.swap(next);
        sol.iterations = it + 1;
        if (residual < epsilon) {
            sol.policy.assign(m.num_states, -1);
            for (int s = 0; s < m.num_states; ++s)
                if (!m.terminal[s]) backup_state(m, s, sol.value, &sol.policy[s]);
            return sol;
        }
    }
    throw std::runtime_error("value iteration did not converge within " + std::to_string(kMaxIterations) +
                             " iterations");
}

}  // namespace

Solution value_iteration(const Mdp& m, double epsilon, const std::vector<double>* warm_start) {
    return run_vi<true>(m, epsilon, warm_start);
}

Solution value_iteration_serial(const Mdp& m, double epsilon, const std::vector<double>* warm_start) {
    return run_vi<false>(m, epsilon, warm_start);
}

double policy_success_probability(const Mdp& m, const std::vector<int>& policy, int start,
                                  const std::vector<int>& success, int step_cap) {
    if (start < 0 || start >= m.num_states) throw std::invalid_argument("success prob: bad start state");
    if ((int)policy.size() != m.num_states) throw std::invalid_argument("success prob: policy size mismatch");
    std::vector<char> is_success(m.num_states, 0);
    for (int s : success) {
        if (s < 0 || s >= m.num_states) throw std::invalid_argument("success prob: bad success state");
        if (!m.terminal[s]) throw std::invalid_argument("success prob: success states must be terminal");
        is_success[s] = 1;
    }
    for (int s = 0; s < m.num_states; ++s) {
        if (m.terminal[s] || policy[s] < 0) continue;
        if (policy[s] >= m.num_actions || m.trans[s][policy[s]].empty())
            throw std::invalid_argument("success prob: policy undefined at reachable state " + std::to_string(s));
    }

    std::vector<double> dist(m.num_states, 0.0), nxt(m.num_states, 0.0);
    dist[start] = 1.0;
    for (int step = 0; step < step_cap; ++step) {
        double moving = 0.0;
        std::fill(nxt.begin(), nxt.end(), 0.0);
        for (int s = 0; s < m.num_states; ++s) {
            double p = dist[s];
            if (p <= 0.0) continue;
            if (m.terminal[s]) {
                nxt[s] += p;  // absorbing
                continue;
            }
            moving += p;
            for (const auto& t : m.trans[s][policy[s]]) nxt[t.next] += p * t.prob;
        }
        dist.swap(nxt);
        if (moving < 1e-15) break;
    }
    double total = 0.0;
    for (int s = 0; s < m.num_states; ++s)
        if (is_success[s]) total += dist[s];
    return total;
}

std::vector<double> evaluate_policy(const Mdp& m, const std::vector<int>& policy) {
    if ((int)policy.size() != m.num_states) throw std::invalid_argument("evaluate: policy size mismatch");
    std::vector<double> v(m.num_states, 0.0), nxt(m.num_states, 0.0);
    constexpr double kEps = 1e-9;
    double prev_residual = std::numeric_limits<double>::infinity();
    int grow_streak = 0;
    for (int it = 0; it < kMaxIterations; ++it) {
        double residual = 0.0;
        for (int s = 0; s < m.num_states; ++s) {
            if (m.terminal[s] || policy[s] < 0) { nxt[s] = 0.0; continue; }
            const auto& row = m.trans[s][policy[s]];
            if (row.empty()) throw std::invalid_argument("evaluate: policy picks unavailable action");
            double acc = 0.0;
            for (const auto& t : row) acc += t.prob * v[t.next];
            nxt[s] = m.reward[s][policy[s]] + m.gamma * acc;
            residual = std::max(residual, std::abs(nxt[s] - v[s]));
        }
        v.swap(nxt);
        if (residual < kEps) return v;
        // divergence only possible at gamma = 1 with an improper policy
        if (m.gamma >= 1.0) {
            grow_streak = residual >= prev_residual * 0.999999 ? grow_streak + 1 : 0;
            if (grow_streak > 1000)
                throw std::runtime_error("policy evaluation diverges (gamma=1, policy never terminates)");
        }
        prev_residual = residual;
    }
    throw std::runtime_error("policy evaluation did not converge");
}

}  // namespace courier::mdp
