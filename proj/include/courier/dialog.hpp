#pragma once

// Spoken-dialog front end for delivery requests. A request is one
// (item, room, person) combination; the robot keeps a belief over all
// combinations, asks general or confirmation questions with noisy answers,
// and eventually commits to a serve. Planning is a short-horizon belief
// expectimax whose serve payoff can fold in the downstream chance that the
// delivery itself works out, so a robot with a shaky navigation model keeps
// asking while a confident one commits early.

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "courier/kb.hpp"
#include "courier/prob.hpp"

namespace courier::dialog {

struct RequestSpace {
    std::vector<std::string> items;
    std::vector<std::string> rooms;
    std::vector<std::string> persons;

    int num_requests() const {
        return static_cast<int>(items.size() * rooms.size() * persons.size());
    }
    int index(int item, int room, int person) const {
        return (item * static_cast<int>(rooms.size()) + room) * static_cast<int>(persons.size()) + person;
    }
    int item_of(int r) const { return r / static_cast<int>(rooms.size() * persons.size()); }
    int room_of(int r) const { return (r / static_cast<int>(persons.size())) % static_cast<int>(rooms.size()); }
    int person_of(int r) const { return r % static_cast<int>(persons.size()); }
    std::string request_name(int r) const {
        return items[item_of(r)] + "," + rooms[room_of(r)] + "," + persons[person_of(r)];
    }
};

// Reads the value lists of req_item / req_room / req_person from a grounded
// knowledge base. Throws if any of the three attributes is missing.
RequestSpace request_space_from(const kb::GroundProgram& gp);

using Belief = std::vector<double>;

// Actions are laid out questions first, serves after: ask_item, ask_room,
// ask_person, one confirmation per item/room/person value, then one serve
// per request. Observations are value indexes for general questions and
// no=0 / yes=1 for confirmations.
struct DialogPomdp {
    RequestSpace space;

    double general_cost = 2.0;
    double confirm_cost = 1.5;
    double serve_reward = 80.0;
    double p_general = 0.8;   // chance a general answer names the true value
    double p_confirm = 0.9;   // chance a yes/no answer is truthful
    int turn_cap = 20;        // total actions per dialog, serve included
    int plan_depth = 3;       // question lookahead before the serve leaf

    // serve_success[served][actual] is the chance the delivery works out
    // end to end. Identity by default: only the exact request succeeds.
    std::vector<std::vector<double>> serve_success;

    int num_questions() const { return static_cast<int>(cost.size()); }
    int num_actions() const { return num_questions() + space.num_requests(); }
    bool is_serve(int action) const { return action >= num_questions(); }
    int serve_request(int action) const { return action - num_questions(); }
    int serve_action(int request) const { return num_questions() + request; }
    std::string action_name(int action) const;
    std::string observation_name(int question, int obs) const;

    // per-question tables, filled by make_dialog_pomdp
    std::vector<double> cost;                             // [question]
    std::vector<int> obs_count;                           // [question]
    std::vector<std::vector<std::vector<double>>> like;   // [question][obs][request]
    std::vector<std::vector<double>> serve_gain;          // [request] -> (2*success-1)*reward rows
};

// Builds the action/observation tables. If serve_success is empty the
// identity matrix is used; otherwise it must be num_requests() square with
// entries in [0,1].
DialogPomdp make_dialog_pomdp(RequestSpace space,
                              std::vector<std::vector<double>> serve_success = {});

// Refills cost/obs_count/like/serve_gain after a scalar field change
// (costs, answer accuracies, serve reward). make_dialog_pomdp calls this.
void rebuild_tables(DialogPomdp& p);

// Joint prior over requests from the knowledge base, row-major over
// (item, room, person) in request-index order.
Belief init_belief(const kb::GroundProgram& gp, const RequestSpace& space);

// Shannon entropy in bits.
double belief_entropy(const Belief& b);

// P(obs | belief) for every observation of one question.
std::vector<double> observation_probs(const DialogPomdp& p, const Belief& b, int question);

// Exact Bayes update. Throws std::runtime_error if the observation has zero
// probability under the belief.
Belief belief_update(const DialogPomdp& p, const Belief& b, int question, int obs);

// Expected immediate payoff of serving `request` under the belief.
double serve_value(const DialogPomdp& p, const Belief& b, int request);

// Highest-value serve, lowest request index on ties.
std::pair<int, double> best_serve(const DialogPomdp& p, const Belief& b);

// Depth-limited expectimax from one belief. Question subtrees bottom out in
// the best immediate serve; at the turn cap only serves are considered.
// Ties go to the lowest action index. Returns an action index.
int plan_dialog_action(const DialogPomdp& p, const Belief& b, int turns_used = 0);

// Samples the user's answer to a question given the request they actually
// made. Serves have no observation; passing one is an error.
int simulate_user(const DialogPomdp& p, int true_request, int question, Rng& rng);

// Replans from scratch share almost all of their work when every dialog in a
// batch starts from the same prior: answers commute, so the belief reached
// by a question/answer history depends only on its multiset. The planner
// caches one decision per distinct multiset across calls.
class DialogPlanner {
  public:
    // root_turns: actions already spent before the root belief, for callers
    // resuming mid-dialog.
    DialogPlanner(const DialogPomdp& p, Belief root, int root_turns = 0);

    // history holds (question, observation) pairs in any order.
    int plan(const std::vector<std::pair<int, int>>& history);

    const DialogPomdp& pomdp() const { return *p_; }
    const Belief& root() const { return root_; }
    std::size_t cached_decisions() const { return decisions_.size(); }

  private:
    struct Node {
        double value = 0.0;
        bool computed = false;
    };

    int symbol(int question, int obs) const;
    double node_value(std::vector<int>& syms, const Belief& b, int turns_used, int depth,
                      std::unordered_map<uint64_t, Node>& memo, int* best_action);

    const DialogPomdp* p_;
    Belief root_;
    int root_turns_ = 0;
    double min_cost_ = 0.0;                     // cheapest question, for the ask bound
    uint64_t key_base_ = 0;                     // one past the largest symbol id
    std::vector<int> sym_base_;                 // per question, first symbol id minus 1
    std::map<std::vector<int>, int> decisions_; // sorted history symbols -> action
};

struct DialogResult {
    int served = -1;      // request index handed over
    double qa_cost = 0.0; // summed question costs
    int questions = 0;
    std::vector<std::pair<int, int>> history;  // (question, observation)
};

// Runs one full dialog against a simulated user until the planner serves.
DialogResult run_dialog(DialogPlanner& planner, int true_request, Rng& rng);

}  // namespace courier::dialog
