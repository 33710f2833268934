#pragma once

// Bridges the knowledge base and the planners: splits state variables into
// endogenous/exogenous per task, builds transition tables by querying the KB
// one conditional row at a time, merges tables across exogenous settings,
// and couples navigation success into the dialog POMDP's serve payoffs.

#include <functional>
#include <string>
#include <vector>

#include "courier/dialog.hpp"
#include "courier/kb.hpp"
#include "courier/mdp.hpp"
#include "courier/nav.hpp"
#include "courier/rmax.hpp"

namespace courier::model {

struct TaskSpec {
    enum class Kind { Navigation, Dialog, Delivery };
    Kind kind = Kind::Navigation;
    std::string goal_room;  // navigation only

    static TaskSpec navigation(std::string room) {
        TaskSpec t;
        t.kind = Kind::Navigation;
        t.goal_room = std::move(room);
        return t;
    }
    static TaskSpec dialog() { return TaskSpec{Kind::Dialog, ""}; }
    static TaskSpec delivery() { return TaskSpec{Kind::Delivery, ""}; }
};

struct VariableSplit {
    std::vector<std::string> endogenous;
    std::vector<std::string> exogenous;
};

// State variables of a grounded KB: every attribute that is not an action
// (act_*) and not a next-state copy (next_*).
std::vector<std::string> state_variables(const kb::GroundProgram& gp);

// Fixed per-task guidance: navigation owns the robot cell, dialog owns the
// request attributes, delivery owns both. Everything else is exogenous.
// Throws std::invalid_argument when a variable the task needs is missing.
VariableSplit split_variables(const std::vector<std::string>& all_vars, const TaskSpec& task);

// One transition table: dist[state][action] lists (next state, probability)
// pairs over the endogenous space, each row summing to 1.
struct TransitionTable {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    std::vector<std::vector<std::vector<std::pair<int, double>>>> dist;

    double prob(int s, int a, int next) const;
};

// Fills the table by querying P(next | curr, action, evidence) for every
// endogenous state and action. Exogenous variables not fixed by the
// evidence are marginalized under the KB's own prior. The endogenous
// variable must follow the curr_/next_ naming convention.
TransitionTable construct_model(const kb::GroundProgram& gp, const VariableSplit& split,
                                const std::string& action_attr,
                                const std::vector<kb::Literal>& exogenous_evidence = {});

// merged(next|s,a) = sum_e prior(e) * models[e](next|s,a).
TransitionTable merge_models(const std::vector<TransitionTable>& models,
                             const std::vector<double>& prior);

// Navigation MDP over a constructed table: walls become inert terminals,
// goals absorb, reward = step_cost + r_max * (mass entering a goal).
// The table's states must be the map's cells in row-major order.
mdp::Mdp mdp_from_table(const TransitionTable& table, const nav::GridMap& map,
                   const std::vector<int>& goal_cells, double step_cost, double r_max,
                   double gamma);

// ---- Navigation KB scaffolding -------------------------------------------

// Sorts and attributes for a map's navigation dynamics (curr_cell, next_cell,
// act_move, plus one exogenous attribute per provided setting sort), with no
// motion pr-atoms yet: transition knowledge arrives via update_pr_atoms.
kb::Program make_nav_program(const nav::GridMap& map,
                             const std::vector<std::string>& time_values = {});

// Exact pr-atoms for every traversable (cell, move) pair from the true
// transition function, optionally tagged with a time setting condition.
std::vector<kb::PrAtom> nav_pr_atoms_from_truth(const nav::GridMap& map, const nav::BrTable& br,
                                                Frac p_base, const std::string& time = "*",
                                                const std::string& cond_time = "");

// pr-atoms from a learner's exported counts, probabilities kept as exact
// count fractions.
std::vector<kb::PrAtom> nav_pr_atoms_from_export(const nav::GridMap& map,
                                                 const std::vector<rmax::ExportEntry>& entries,
                                                 const std::string& cond_time = "");

// ---- Dialog-navigation coupling -------------------------------------------

// Per-room navigation success probabilities for the two delivery legs, both
// as the agent's model believes them and as the true environment would have
// them under the agent's own policies.
struct PnTable {
    std::vector<double> to_room, back;            // believed
    std::vector<double> to_room_true, back_true;  // same policies, true dynamics
};

using MdpBuilder = std::function<mdp::Mdp(const std::vector<int>& goal_cells)>;

PnTable compute_pn(const nav::GridMap& map, const MdpBuilder& believed, const MdpBuilder& actual,
                   int step_cap, double vi_epsilon);

// Chance that serving `serve` fulfills `request`: the direct shop-to-room
// trip when the serve matches the request exactly, otherwise the wrong-room
// round trip (out, back to the shop, out again to the right room).
double delivery_success(const PnTable& pn, const dialog::RequestSpace& space, int request,
                        int serve, bool use_true = false);

// Full serve-success matrix over requests; use_true selects the
// true-environment probabilities instead of the believed ones.
std::vector<std::vector<double>> delivery_success_matrix(const PnTable& pn,
                                                         const dialog::RequestSpace& space,
                                                         bool use_true = false);

// Dialog POMDP whose serve payoffs embed the believed delivery success.
dialog::DialogPomdp build_delivery_pomdp(const dialog::RequestSpace& space, const PnTable& pn);

// Least-practiced navigation goal, lowest room index on ties. practiced[i]
// counts completed learning sessions for room i.
int select_task(const std::vector<int>& practiced);

}  // namespace courier::model
