#include "courier/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace courier::model {

namespace {

std::string cell_name(int idx) { return "c" + std::to_string(idx); }

bool has_prefix(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

void require_var(const std::vector<std::string>& all, const std::string& name, const char* task) {
    if (std::find(all.begin(), all.end(), name) == all.end())
        throw std::invalid_argument(std::string(task) + " task needs variable '" + name +
                                    "', which the knowledge base does not declare");
}

}  // namespace

std::vector<std::string> state_variables(const kb::GroundProgram& gp) {
    std::vector<std::string> vars;
    for (const auto& name : gp.attr_names)
        if (!has_prefix(name, "next_") && !has_prefix(name, "act_")) vars.push_back(name);
    return vars;
}

VariableSplit split_variables(const std::vector<std::string>& all_vars, const TaskSpec& task) {
    VariableSplit split;
    switch (task.kind) {
        case TaskSpec::Kind::Navigation:
            require_var(all_vars, "curr_cell", "navigation");
            split.endogenous = {"curr_cell"};
            break;
        case TaskSpec::Kind::Dialog:
            for (const char* v : {"req_item", "req_room", "req_person"}) {
                require_var(all_vars, v, "dialog");
                split.endogenous.push_back(v);
            }
            break;
        case TaskSpec::Kind::Delivery:
            require_var(all_vars, "curr_cell", "delivery");
            split.endogenous = {"curr_cell"};
            for (const char* v : {"req_item", "req_room", "req_person"}) {
                require_var(all_vars, v, "delivery");
                split.endogenous.push_back(v);
            }
            break;
    }
    if (split.endogenous.empty()) throw std::invalid_argument("task guidance produced no endogenous variables");
    for (const auto& v : all_vars)
        if (std::find(split.endogenous.begin(), split.endogenous.end(), v) == split.endogenous.end())
            split.exogenous.push_back(v);
    return split;
}

double TransitionTable::prob(int s, int a, int next) const {
    for (const auto& [n, p] : dist[s][a])
        if (n == next) return p;
    return 0.0;
}

TransitionTable construct_model(const kb::GroundProgram& gp, const VariableSplit& split,
                                const std::string& action_attr,
                                const std::vector<kb::Literal>& exogenous_evidence) {
    // Pair every endogenous curr_* attribute with its next_* counterpart and
    // check the two share a domain, so next-state indexes map back to states.
    struct Dim {
        int curr, next, size;
    };
    std::vector<Dim> dims;
    for (const auto& var : split.endogenous) {
        if (!has_prefix(var, "curr_"))
            throw std::invalid_argument("endogenous variable '" + var +
                                        "' does not follow the curr_/next_ naming convention");
        int curr = gp.attr_of(var);
        int next = gp.attr_of("next_" + var.substr(5));
        if (gp.attr_values[curr] != gp.attr_values[next])
            throw std::invalid_argument("attributes '" + var + "' and 'next_" + var.substr(5) +
                                        "' range over different domains");
        dims.push_back({curr, next, static_cast<int>(gp.attr_values[curr].size())});
    }
    int act = gp.attr_of(action_attr);

    TransitionTable table;
    long long num_states = 1;
    for (const auto& d : dims) num_states *= d.size;
    table.states.reserve(num_states);
    std::vector<int> odo(dims.size(), 0);
    for (long long s = 0; s < num_states; ++s) {
        std::string label;
        for (std::size_t i = 0; i < dims.size(); ++i) {
            if (i) label += '|';
            label += gp.attr_values[dims[i].curr][odo[i]];
        }
        table.states.push_back(std::move(label));
        for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
            if (++odo[i] < dims[i].size) break;
            odo[i] = 0;
        }
    }
    table.actions = gp.attr_values[act];

    std::vector<std::string> next_attrs;
    for (const auto& d : dims) next_attrs.push_back(gp.attr_names[d.next]);

    table.dist.assign(num_states, {});
    std::fill(odo.begin(), odo.end(), 0);
    for (long long s = 0; s < num_states; ++s) {
        table.dist[s].resize(table.actions.size());
        for (std::size_t a = 0; a < table.actions.size(); ++a) {
            std::vector<kb::Literal> evidence = exogenous_evidence;
            for (std::size_t i = 0; i < dims.size(); ++i)
                evidence.push_back(kb::Literal::attr(gp.attr_names[dims[i].curr],
                                                     kb::Term::cst(gp.attr_values[dims[i].curr][odo[i]])));
            evidence.push_back(kb::Literal::attr(action_attr, kb::Term::cst(table.actions[a])));
            std::vector<double> row = kb::query_joint(gp, next_attrs, evidence);

            double sum = 0.0;
            auto& sparse = table.dist[s][a];
            for (std::size_t n = 0; n < row.size(); ++n) {
                if (row[n] > 0.0) sparse.emplace_back(static_cast<int>(n), row[n]);
                sum += row[n];
            }
            if (std::fabs(sum - 1.0) > 1e-9)
                throw kb::SemanticError("constructed row for state '" + table.states[s] +
                                        "', action '" + table.actions[a] + "' does not normalize");
        }
        for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
            if (++odo[i] < dims[i].size) break;
            odo[i] = 0;
        }
    }
    return table;
}

TransitionTable merge_models(const std::vector<TransitionTable>& models,
                             const std::vector<double>& prior) {
    if (models.empty()) throw std::invalid_argument("merge_models: no models");
    if (prior.size() != models.size())
        throw std::invalid_argument("merge_models: prior size does not match model count");
    double psum = 0.0;
    for (double p : prior) {
        if (p < 0.0) throw std::invalid_argument("merge_models: negative prior weight");
        psum += p;
    }
    if (std::fabs(psum - 1.0) > 1e-9) throw std::invalid_argument("merge_models: prior does not sum to 1");

    const TransitionTable& base = models[0];
    for (const auto& m : models)
        if (m.states != base.states || m.actions != base.actions)
            throw std::invalid_argument("merge_models: models disagree on the state or action space");

    TransitionTable out;
    out.states = base.states;
    out.actions = base.actions;
    out.dist.assign(base.states.size(), {});
    std::vector<double> row(base.states.size());
    for (std::size_t s = 0; s < base.states.size(); ++s) {
        out.dist[s].resize(base.actions.size());
        for (std::size_t a = 0; a < base.actions.size(); ++a) {
            std::fill(row.begin(), row.end(), 0.0);
            for (std::size_t e = 0; e < models.size(); ++e)
                for (const auto& [n, p] : models[e].dist[s][a]) row[n] += prior[e] / psum * p;
            auto& sparse = out.dist[s][a];
            for (std::size_t n = 0; n < row.size(); ++n)
                if (row[n] > 0.0) sparse.emplace_back(static_cast<int>(n), row[n]);
        }
    }
    return out;
}

mdp::Mdp mdp_from_table(const TransitionTable& table, const nav::GridMap& map,
                        const std::vector<int>& goal_cells, double step_cost, double r_max,
                        double gamma) {
    const int n = map.width * map.height;
    if (static_cast<int>(table.states.size()) != n)
        throw std::invalid_argument("mdp_from_table: table states do not cover the map's cells");
    std::vector<char> is_goal(n, 0);
    for (int g : goal_cells) {
        if (g < 0 || g >= n || map.wall(g))
            throw std::invalid_argument("mdp_from_table: goal cell is not traversable");
        is_goal[g] = 1;
    }

    mdp::Mdp m;
    m.init(n, static_cast<int>(table.actions.size()), gamma);
    for (int s = 0; s < n; ++s) {
        if (map.wall(s) || is_goal[s]) {
            m.terminal[s] = 1;
            continue;
        }
        for (std::size_t a = 0; a < table.actions.size(); ++a) {
            double goal_mass = 0.0;
            auto& row = m.trans[s][a];
            for (const auto& [next, p] : table.dist[s][a]) {
                row.push_back({next, p});
                if (is_goal[next]) goal_mass += p;
            }
            m.reward[s][a] = step_cost + r_max * goal_mass;
        }
    }
    m.validate();
    return m;
}

kb::Program make_nav_program(const nav::GridMap& map, const std::vector<std::string>& time_values) {
    kb::Program p;
    kb::SortDecl cells;
    cells.name = "cell";
    for (int i = 0; i < map.width * map.height; ++i) cells.values.push_back(cell_name(i));
    p.sorts.push_back(std::move(cells));
    kb::SortDecl moves;
    moves.name = "move";
    for (int a = 0; a < nav::kNumMoves; ++a) moves.values.push_back(nav::move_name(static_cast<nav::Move>(a)));
    p.sorts.push_back(std::move(moves));
    p.attrs.push_back({"curr_cell", "cell", {}, 0});
    p.attrs.push_back({"next_cell", "cell", {}, 0});
    p.attrs.push_back({"act_move", "move", {}, 0});
    if (!time_values.empty()) {
        p.sorts.push_back({"tod", time_values, 0});
        p.attrs.push_back({"time", "tod", {}, 0});
    }
    return p;
}

namespace {

std::vector<kb::Literal> motion_cond(int cell, int move, const std::string& cond_time) {
    std::vector<kb::Literal> cond;
    cond.push_back(kb::Literal::attr("curr_cell", kb::Term::cst(cell_name(cell))));
    cond.push_back(kb::Literal::attr("act_move", kb::Term::cst(nav::move_name(static_cast<nav::Move>(move)))));
    if (!cond_time.empty()) cond.push_back(kb::Literal::attr("time", kb::Term::cst(cond_time)));
    return cond;
}

}  // namespace

std::vector<kb::PrAtom> nav_pr_atoms_from_truth(const nav::GridMap& map, const nav::BrTable& br,
                                                Frac p_base, const std::string& time,
                                                const std::string& cond_time) {
    std::vector<kb::PrAtom> atoms;
    for (int c = 0; c < map.width * map.height; ++c) {
        if (map.wall(c)) continue;
        for (int a = 0; a < nav::kNumMoves; ++a) {
            auto row = nav::true_transition(map, br, p_base, time, c, static_cast<nav::Move>(a));
            for (const auto& [next, frac] : row) {
                kb::PrAtom atom;
                atom.attr = "next_cell";
                atom.value = kb::Term::cst(cell_name(next));
                atom.cond = motion_cond(c, a, cond_time);
                atom.prob = frac;
                atoms.push_back(std::move(atom));
            }
        }
    }
    return atoms;
}

std::vector<kb::PrAtom> nav_pr_atoms_from_export(const nav::GridMap& map,
                                                 const std::vector<rmax::ExportEntry>& entries,
                                                 const std::string& cond_time) {
    std::vector<kb::PrAtom> atoms;
    for (const auto& e : entries) {
        if (e.state < 0 || e.state >= map.width * map.height)
            throw std::invalid_argument("exported state lies outside the map");
        for (const auto& [next, count] : e.succ_counts) {
            kb::PrAtom atom;
            atom.attr = "next_cell";
            atom.value = kb::Term::cst(cell_name(next));
            atom.cond = motion_cond(e.state, e.action, cond_time);
            atom.prob = Frac(count, e.total);
            atoms.push_back(std::move(atom));
        }
    }
    return atoms;
}

PnTable compute_pn(const nav::GridMap& map, const MdpBuilder& believed, const MdpBuilder& actual,
                   int step_cap, double vi_epsilon) {
    PnTable pn;
    const int shop = map.shop;
    if (shop < 0) throw std::invalid_argument("compute_pn: map has no shop");

    // one homeward policy serves every room's return leg
    mdp::Mdp home_b = believed({shop});
    mdp::Mdp home_t = actual({shop});
    mdp::Solution home = mdp::value_iteration(home_b, vi_epsilon);

    for (const auto& [room, cells] : map.rooms) {
        int goal = map.door.at(room);
        mdp::Mdp out_b = believed({goal});
        mdp::Mdp out_t = actual({goal});
        mdp::Solution sol = mdp::value_iteration(out_b, vi_epsilon);
        pn.to_room.push_back(mdp::policy_success_probability(out_b, sol.policy, shop, {goal}, step_cap));
        pn.to_room_true.push_back(mdp::policy_success_probability(out_t, sol.policy, shop, {goal}, step_cap));
        pn.back.push_back(mdp::policy_success_probability(home_b, home.policy, goal, {shop}, step_cap));
        pn.back_true.push_back(mdp::policy_success_probability(home_t, home.policy, goal, {shop}, step_cap));
        (void)cells;
    }
    return pn;
}

double delivery_success(const PnTable& pn, const dialog::RequestSpace& space, int request,
                        int serve, bool use_true) {
    const auto& to = use_true ? pn.to_room_true : pn.to_room;
    const auto& back = use_true ? pn.back_true : pn.back;
    int goal = space.room_of(request);
    int served_room = space.room_of(serve);
    if (goal >= static_cast<int>(to.size()) || served_room >= static_cast<int>(to.size()) ||
        goal >= static_cast<int>(back.size()))
        throw std::invalid_argument("delivery_success: no navigation success entry for this room");
    if (request == serve) return to[goal];
    int mi = served_room != goal ? served_room : goal;
    return to[mi] * back[mi] * to[goal];
}

std::vector<std::vector<double>> delivery_success_matrix(const PnTable& pn,
                                                         const dialog::RequestSpace& space,
                                                         bool use_true) {
    const int nr = space.num_requests();
    std::vector<std::vector<double>> t(nr, std::vector<double>(nr));
    for (int serve = 0; serve < nr; ++serve)
        for (int req = 0; req < nr; ++req) t[serve][req] = delivery_success(pn, space, req, serve, use_true);
    return t;
}

dialog::DialogPomdp build_delivery_pomdp(const dialog::RequestSpace& space, const PnTable& pn) {
    if (pn.to_room.size() != space.rooms.size() || pn.back.size() != space.rooms.size())
        throw std::invalid_argument("build_delivery_pomdp: navigation coverage does not span the rooms");
    return dialog::make_dialog_pomdp(space, delivery_success_matrix(pn, space, false));
}

int select_task(const std::vector<int>& practiced) {
    if (practiced.empty()) throw std::invalid_argument("select_task: no candidate tasks");
    int best = 0;
    for (int i = 1; i < static_cast<int>(practiced.size()); ++i)
        if (practiced[i] < practiced[best]) best = i;
    return best;
}

}  // namespace courier::model
