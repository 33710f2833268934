#include "courier/dialog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace courier::dialog {

RequestSpace request_space_from(const kb::GroundProgram& gp) {
    RequestSpace s;
    s.items = gp.attr_values[gp.attr_of("req_item")];
    s.rooms = gp.attr_values[gp.attr_of("req_room")];
    s.persons = gp.attr_values[gp.attr_of("req_person")];
    return s;
}

std::string DialogPomdp::action_name(int action) const {
    if (is_serve(action)) return "serve(" + space.request_name(serve_request(action)) + ")";
    if (action == 0) return "ask_item";
    if (action == 1) return "ask_room";
    if (action == 2) return "ask_person";
    int k = action - 3;
    if (k < static_cast<int>(space.items.size())) return "confirm_item(" + space.items[k] + ")";
    k -= static_cast<int>(space.items.size());
    if (k < static_cast<int>(space.rooms.size())) return "confirm_room(" + space.rooms[k] + ")";
    k -= static_cast<int>(space.rooms.size());
    return "confirm_person(" + space.persons[k] + ")";
}

std::string DialogPomdp::observation_name(int question, int obs) const {
    if (question == 0) return space.items[obs];
    if (question == 1) return space.rooms[obs];
    if (question == 2) return space.persons[obs];
    return obs == 1 ? "yes" : "no";
}

void rebuild_tables(DialogPomdp& p) {
    const int nr = p.space.num_requests();
    p.cost.clear();
    p.obs_count.clear();
    p.like.clear();

    // question layout: 3 general, then one confirmation per value
    auto attr_value = [&](int dim, int r) {
        if (dim == 0) return p.space.item_of(r);
        if (dim == 1) return p.space.room_of(r);
        return p.space.person_of(r);
    };
    const int dim_size[3] = {static_cast<int>(p.space.items.size()),
                             static_cast<int>(p.space.rooms.size()),
                             static_cast<int>(p.space.persons.size())};
    for (int dim = 0; dim < 3; ++dim) {
        p.cost.push_back(p.general_cost);
        p.obs_count.push_back(dim_size[dim]);
        std::vector<std::vector<double>> lk(dim_size[dim], std::vector<double>(nr));
        for (int o = 0; o < dim_size[dim]; ++o)
            for (int r = 0; r < nr; ++r)
                lk[o][r] = attr_value(dim, r) == o
                               ? (dim_size[dim] == 1 ? 1.0 : p.p_general)
                               : (1.0 - p.p_general) / (dim_size[dim] - 1);
        p.like.push_back(std::move(lk));
    }
    for (int dim = 0; dim < 3; ++dim) {
        for (int t = 0; t < dim_size[dim]; ++t) {
            p.cost.push_back(p.confirm_cost);
            p.obs_count.push_back(2);
            std::vector<std::vector<double>> lk(2, std::vector<double>(nr));
            for (int r = 0; r < nr; ++r) {
                double yes = attr_value(dim, r) == t ? p.p_confirm : 1.0 - p.p_confirm;
                lk[1][r] = yes;
                lk[0][r] = 1.0 - yes;
            }
            p.like.push_back(std::move(lk));
        }
    }

    p.serve_gain.assign(nr, std::vector<double>(nr));
    for (int r = 0; r < nr; ++r)
        for (int a = 0; a < nr; ++a)
            p.serve_gain[r][a] = (2.0 * p.serve_success[r][a] - 1.0) * p.serve_reward;

    if (p.turn_cap < 1) throw std::invalid_argument("dialog: turn_cap must be at least 1");
    if (p.plan_depth < 0 || p.plan_depth > 8)
        throw std::invalid_argument("dialog: plan_depth must lie in [0,8]");
}

DialogPomdp make_dialog_pomdp(RequestSpace space, std::vector<std::vector<double>> serve_success) {
    if (space.items.empty() || space.rooms.empty() || space.persons.empty())
        throw std::invalid_argument("dialog: request space has an empty dimension");
    DialogPomdp p;
    p.space = std::move(space);
    const int nr = p.space.num_requests();

    if (serve_success.empty()) {
        serve_success.assign(nr, std::vector<double>(nr, 0.0));
        for (int r = 0; r < nr; ++r) serve_success[r][r] = 1.0;
    }
    if (static_cast<int>(serve_success.size()) != nr)
        throw std::invalid_argument("dialog: serve_success must be square over requests");
    for (auto& row : serve_success) {
        if (static_cast<int>(row.size()) != nr)
            throw std::invalid_argument("dialog: serve_success must be square over requests");
        for (double& x : row) {
            if (x < -1e-12 || x > 1.0 + 1e-12)
                throw std::invalid_argument("dialog: serve_success entries must lie in [0,1]");
            x = std::clamp(x, 0.0, 1.0);
        }
    }
    p.serve_success = std::move(serve_success);
    rebuild_tables(p);
    return p;
}

Belief init_belief(const kb::GroundProgram& gp, const RequestSpace& space) {
    Belief b = kb::query_joint(gp, {"req_item", "req_room", "req_person"});
    if (static_cast<int>(b.size()) != space.num_requests())
        throw std::invalid_argument("dialog: knowledge base request space does not match");
    return b;
}

double belief_entropy(const Belief& b) {
    double h = 0.0;
    for (double x : b)
        if (x > 0.0) h -= x * std::log2(x);
    return h;
}

std::vector<double> observation_probs(const DialogPomdp& p, const Belief& b, int question) {
    if (question < 0 || question >= p.num_questions())
        throw std::invalid_argument("dialog: not a question action");
    std::vector<double> out(p.obs_count[question], 0.0);
    for (int o = 0; o < p.obs_count[question]; ++o) {
        const auto& lk = p.like[question][o];
        double acc = 0.0;
        for (std::size_t r = 0; r < b.size(); ++r) acc += b[r] * lk[r];
        out[o] = acc;
    }
    return out;
}

Belief belief_update(const DialogPomdp& p, const Belief& b, int question, int obs) {
    if (question < 0 || question >= p.num_questions())
        throw std::invalid_argument("dialog: not a question action");
    if (obs < 0 || obs >= p.obs_count[question])
        throw std::invalid_argument("dialog: observation out of range");
    const auto& lk = p.like[question][obs];
    double norm = 0.0;
    for (std::size_t r = 0; r < b.size(); ++r) norm += b[r] * lk[r];
    if (norm <= 0.0) throw std::runtime_error("dialog: observation has zero probability under the belief");
    Belief nb(b.size());
    for (std::size_t r = 0; r < b.size(); ++r) nb[r] = b[r] * lk[r] / norm;
    return nb;
}

double serve_value(const DialogPomdp& p, const Belief& b, int request) {
    const auto& g = p.serve_gain[request];
    double acc = 0.0;
    for (std::size_t r = 0; r < b.size(); ++r) acc += b[r] * g[r];
    return acc;
}

std::pair<int, double> best_serve(const DialogPomdp& p, const Belief& b) {
    int best = 0;
    double bv = serve_value(p, b, 0);
    for (int r = 1; r < p.space.num_requests(); ++r) {
        double v = serve_value(p, b, r);
        if (v > bv) {
            bv = v;
            best = r;
        }
    }
    return {best, bv};
}

int simulate_user(const DialogPomdp& p, int true_request, int question, Rng& rng) {
    if (question < 0 || question >= p.num_questions())
        throw std::invalid_argument("dialog: serves have no observation");
    if (true_request < 0 || true_request >= p.space.num_requests())
        throw std::invalid_argument("dialog: request index out of range");
    std::vector<double> probs(p.obs_count[question]);
    for (int o = 0; o < p.obs_count[question]; ++o) probs[o] = p.like[question][o][true_request];
    return static_cast<int>(sample_index(rng, probs));
}

DialogPlanner::DialogPlanner(const DialogPomdp& p, Belief root, int root_turns)
    : p_(&p), root_(std::move(root)), root_turns_(root_turns) {
    if (static_cast<int>(root_.size()) != p.space.num_requests())
        throw std::invalid_argument("dialog: belief size does not match the request space");
    int next = 0;
    for (int q = 0; q < p.num_questions(); ++q) {
        sym_base_.push_back(next);
        next += p.obs_count[q];
    }
    key_base_ = static_cast<uint64_t>(next) + 1;
    min_cost_ = p.cost.empty() ? 0.0 : *std::min_element(p.cost.begin(), p.cost.end());
}

int DialogPlanner::symbol(int question, int obs) const { return sym_base_[question] + obs + 1; }

double DialogPlanner::node_value(std::vector<int>& syms, const Belief& b, int turns_used, int depth,
                                 std::unordered_map<uint64_t, Node>& memo, int* best_action) {
    uint64_t key = 0;
    if (!best_action) {
        std::vector<int> sorted = syms;
        std::sort(sorted.begin(), sorted.end());
        for (int s : sorted) key = key * key_base_ + static_cast<uint64_t>(s);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second.value;
    }

    double serve_best = -std::numeric_limits<double>::infinity();
    int serve_act = -1;
    // clairvoyance bound: answers only mix the belief, and the expected
    // aligned gain is linear in it, so no amount of asking can lift the
    // eventual serve above it. Every question costs at least min_cost_ up
    // front, which caps what asking can ever return.
    double clairvoyant = 0.0;
    for (int r = 0; r < p_->space.num_requests(); ++r) {
        double v = serve_value(*p_, b, r);
        if (v > serve_best) {
            serve_best = v;
            serve_act = p_->serve_action(r);
        }
        clairvoyant += b[r] * p_->serve_gain[r][r];
    }

    double best = -std::numeric_limits<double>::infinity();
    int best_act = -1;
    // questions carry the lower action indexes, so scanning them first and
    // replacing only on strict improvement resolves ties downward
    if (depth > 0 && turns_used < p_->turn_cap - 1 && serve_best <= clairvoyant - min_cost_) {
        const std::size_t nr = b.size();
        Belief nb(nr);
        for (int q = 0; q < p_->num_questions(); ++q) {
            double val = -p_->cost[q];
            for (int o = 0; o < p_->obs_count[q]; ++o) {
                const auto& lk = p_->like[q][o];
                double po = 0.0;
                for (std::size_t r = 0; r < nr; ++r) po += b[r] * lk[r];
                if (po <= 0.0) continue;
                double inv = 1.0 / po;
                for (std::size_t r = 0; r < nr; ++r) nb[r] = b[r] * lk[r] * inv;
                syms.push_back(symbol(q, o));
                val += po * node_value(syms, nb, turns_used + 1, depth - 1, memo, nullptr);
                syms.pop_back();
            }
            if (val > best) {
                best = val;
                best_act = q;
            }
        }
    }
    if (serve_best > best) {
        best = serve_best;
        best_act = serve_act;
    }

    if (best_action) {
        *best_action = best_act;
    } else {
        memo[key] = Node{best, true};
    }
    return best;
}

int DialogPlanner::plan(const std::vector<std::pair<int, int>>& history) {
    std::vector<int> key;
    key.reserve(history.size());
    for (const auto& [q, o] : history) key.push_back(symbol(q, o));
    std::sort(key.begin(), key.end());
    auto it = decisions_.find(key);
    if (it != decisions_.end()) return it->second;

    Belief b = root_;
    for (const auto& [q, o] : history) b = belief_update(*p_, b, q, o);
    std::unordered_map<uint64_t, Node> memo;
    memo.reserve(4096);
    std::vector<int> syms;
    int best = -1;
    node_value(syms, b, root_turns_ + static_cast<int>(history.size()), p_->plan_depth, memo, &best);
    decisions_.emplace(std::move(key), best);
    return best;
}

int plan_dialog_action(const DialogPomdp& p, const Belief& b, int turns_used) {
    DialogPlanner planner(p, b, turns_used);
    return planner.plan({});
}

DialogResult run_dialog(DialogPlanner& planner, int true_request, Rng& rng) {
    const DialogPomdp& p = planner.pomdp();
    DialogResult res;
    for (int turn = 0; turn < p.turn_cap; ++turn) {
        int action = planner.plan(res.history);
        if (p.is_serve(action)) {
            res.served = p.serve_request(action);
            return res;
        }
        int obs = simulate_user(p, true_request, action, rng);
        res.history.emplace_back(action, obs);
        res.qa_cost += p.cost[action];
        res.questions += 1;
    }
    throw std::logic_error("dialog: planner failed to serve within the turn cap");
}

}  // namespace courier::dialog
