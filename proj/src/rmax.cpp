#include "courier/rmax.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace courier::rmax {

Learner::Learner(int num_states, int num_actions, std::vector<char> terminal, Params params)
    : num_states_(num_states), num_actions_(num_actions), params_(params) {
    if (num_states <= 0 || num_actions <= 0) throw std::invalid_argument("rmax: empty state or action space");
    if ((int)terminal.size() != num_states) throw std::invalid_argument("rmax: terminal mask size mismatch");
    if (params_.m_known < 1) throw std::invalid_argument("rmax: m_known must be >= 1");
    if (params_.replan_every < 1) throw std::invalid_argument("rmax: replan_every must be >= 1");
    stats_.resize((size_t)num_states * num_actions);

    // induced model: env states plus the absorbing optimism state s^v
    mdp_.init(num_states + 1, num_actions, params_.gamma);
    int sv = num_states;
    mdp_.terminal[sv] = 1;
    for (int s = 0; s < num_states; ++s) {
        mdp_.terminal[s] = terminal[s];
        if (terminal[s]) continue;
        for (int a = 0; a < num_actions; ++a) {
            mdp_.trans[s][a] = {{sv, 1.0}};
            mdp_.reward[s][a] = params_.r_max;
        }
    }
    values_.assign(num_states + 1, 0.0);
    policy_.assign(num_states + 1, -1);
}

void Learner::refresh_row(int s, int a) {
    const PairStats& ps = stats(s, a);
    auto& row = mdp_.trans[s][a];
    row.clear();
    row.reserve(ps.succ.size());
    for (const auto& [next, c] : ps.succ)
        row.push_back({next, (double)c / (double)ps.total});
    mdp_.reward[s][a] = ps.reward_sum / (double)ps.total;
}

// How many samples before a pair counts as known. A row whose samples all
// bounced back to the same state looks exactly like a wall, but it could
// just be a run of bad luck in a busy corridor; writing it into the model
// as impassable would wall off everything behind it. Demand a longer streak
// before believing that, while ordinary mixed rows settle at m_known.
long long Learner::required_samples(int state, const PairStats& ps) const {
    bool only_self = ps.succ.size() == 1 && ps.succ.begin()->first == state;
    return only_self ? 3LL * params_.m_known : params_.m_known;
}

void Learner::observe(int state, int action, int next, double reward) {
    if (state < 0 || state >= num_states_ || next < 0 || next >= num_states_)
        throw std::invalid_argument("rmax observe: state out of range");
    if (action < 0 || action >= num_actions_) throw std::invalid_argument("rmax observe: action out of range");
    if (mdp_.terminal[state]) throw std::invalid_argument("rmax observe: transition from a terminal state");
    bool was_known = known(state, action);
    PairStats& ps = stats(state, action);
    ps.total += 1;
    ps.reward_sum += reward;
    ps.succ[next] += 1;
    if (known(state, action)) {
        refresh_row(state, action);
        if (!was_known) model_grew_ = true;
    }
}

bool Learner::known(int state, int action) const {
    const PairStats& ps = stats(state, action);
    return ps.total >= required_samples(state, ps);
}

int Learner::count(int state, int action) const { return (int)stats(state, action).total; }

void Learner::replan() {
    auto sol = mdp::value_iteration(mdp_, params_.vi_epsilon, &values_);
    values_ = std::move(sol.value);
    bool same = replans_ > 0 && sol.policy == policy_;
    stable_streak_ = same ? stable_streak_ + 1 : 0;
    policy_ = std::move(sol.policy);
    ++replans_;
    steps_since_replan_ = 0;
    model_grew_ = false;
}

int Learner::act(int state) {
    if (state < 0 || state >= num_states_) throw std::invalid_argument("rmax act: state out of range");
    if (mdp_.terminal[state]) throw std::invalid_argument("rmax act: terminal state");
    if (steps_since_replan_ < 0 || model_grew_ || steps_since_replan_ >= params_.replan_every) replan();
    ++steps_since_replan_;
    return policy_[state];
}

std::vector<ExportEntry> Learner::export_model() const {
    std::vector<ExportEntry> out;
    for (int s = 0; s < num_states_; ++s) {
        if (mdp_.terminal[s]) continue;
        for (int a = 0; a < num_actions_; ++a) {
            const PairStats& ps = stats(s, a);
            if (!known(s, a)) continue;
            ExportEntry e;
            e.state = s;
            e.action = a;
            e.total = ps.total;
            e.succ_counts.assign(ps.succ.begin(), ps.succ.end());
            e.mean_reward = ps.reward_sum / (double)ps.total;
            out.push_back(std::move(e));
        }
    }
    return out;  // (s,a) order by construction
}

void Learner::inject(const std::vector<ExportEntry>& entries, const RewardMap& reward_map) {
    for (const auto& e : entries) {
        if (e.state < 0 || e.state >= num_states_ || e.action < 0 || e.action >= num_actions_)
            throw std::invalid_argument("rmax inject: entry out of range");
        if (mdp_.terminal[e.state]) continue;  // pair originates in this task's terminal, irrelevant here
        if (e.total <= 0 || e.succ_counts.empty()) throw std::invalid_argument("rmax inject: empty entry");
        PairStats& ps = stats(e.state, e.action);
        ps.total = e.total;
        double reward = reward_map ? reward_map(e) : e.mean_reward;
        ps.reward_sum = reward * (double)e.total;
        ps.succ.clear();
        long long check = 0;
        for (const auto& [next, c] : e.succ_counts) {
            if (next < 0 || next >= num_states_ || c <= 0) throw std::invalid_argument("rmax inject: bad successor");
            ps.succ[next] = c;
            check += c;
        }
        if (check != e.total) throw std::invalid_argument("rmax inject: counts do not sum to total");
        if (known(e.state, e.action)) refresh_row(e.state, e.action);
    }
    model_grew_ = true;
    if (replans_ > 0) replan();  // stale policy otherwise
}

void write_model_dump(const std::string& path, const std::vector<ExportEntry>& entries,
                      const std::vector<std::string>& action_names) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model dump '" + path + "'");
    out.precision(17);
    for (const auto& e : entries) {
        out << e.state << " " << action_names.at(e.action);
        for (const auto& [next, c] : e.succ_counts) out << " " << next << ":" << c << "/" << e.total;
        out << " " << e.mean_reward << "\n";
    }
}

std::vector<ExportEntry> read_model_dump(const std::string& path, const std::vector<std::string>& action_names) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read model dump '" + path + "'");
    std::vector<ExportEntry> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        ExportEntry e;
        std::string action;
        if (!(ls >> e.state >> action)) throw std::runtime_error("model dump line " + std::to_string(lineno) + ": malformed");
        auto it = std::find(action_names.begin(), action_names.end(), action);
        if (it == action_names.end())
            throw std::runtime_error("model dump line " + std::to_string(lineno) + ": unknown action '" + action + "'");
        e.action = (int)(it - action_names.begin());
        std::vector<std::string> fields;
        std::string f;
        while (ls >> f) fields.push_back(f);
        if (fields.size() < 2) throw std::runtime_error("model dump line " + std::to_string(lineno) + ": too short");
        e.mean_reward = std::stod(fields.back());
        fields.pop_back();
        for (const auto& sc : fields) {
            auto colon = sc.find(':'), slash = sc.find('/');
            if (colon == std::string::npos || slash == std::string::npos || slash < colon)
                throw std::runtime_error("model dump line " + std::to_string(lineno) + ": bad successor field '" + sc + "'");
            int next = std::stoi(sc.substr(0, colon));
            long long c = std::stoll(sc.substr(colon + 1, slash - colon - 1));
            long long total = std::stoll(sc.substr(slash + 1));
            if (e.total == 0) e.total = total;
            else if (e.total != total)
                throw std::runtime_error("model dump line " + std::to_string(lineno) + ": inconsistent totals");
            e.succ_counts.emplace_back(next, c);
        }
        std::sort(e.succ_counts.begin(), e.succ_counts.end());
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace courier::rmax
