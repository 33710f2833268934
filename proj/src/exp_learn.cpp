#include "courier/experiments.hpp"

#include <stdexcept>

namespace courier::exp {

LearnResult run_learning_loop(const nav::GridMap& map, double br, const Config& c) {
    LearnResult result;
    result.program = model::make_nav_program(map);

    std::vector<char> rooms;
    for (const auto& [label, cells] : map.rooms) rooms.push_back(label);
    if (rooms.empty()) throw std::invalid_argument("learning loop: map declares no rooms");

    nav::BrTable rates = area_rates(map, br);
    Frac p_base = to_frac(c.p_base);
    int step_cap = map.width >= 50 ? c.step_cap_large : c.step_cap_small;
    int num_cells = map.width * map.height;
    std::vector<int> practiced(rooms.size(), 0);

    for (int session = 0; session < c.learn_tasks; ++session) {
        int pick = model::select_task(practiced);
        LearnTask record;
        record.room = rooms[pick];

        nav::NavTask task =
            nav::task_to_room(map, rooms[pick], step_cap, c.step_cost, c.learner.r_max);
        nav::NavEnv env(map, rates, p_base, "*", task,
                        derive_seed(c.seed, 1000 + static_cast<uint64_t>(session)));
        std::vector<char> terminal(num_cells, 0);
        for (int g : task.goal_cells) terminal[g] = 1;
        rmax::Learner learner(num_cells, nav::kNumMoves, terminal, c.learner);

        for (int episode = 0; episode < c.learn_episodes; ++episode) {
            int cell = env.reset();
            while (!env.done()) {
                int a = learner.act(cell);
                nav::NavEnv::StepResult step = env.step(static_cast<nav::Move>(a));
                learner.observe(cell, a, step.cell, step.reward);
                cell = step.cell;
            }
            record.episodes_run = episode + 1;
            if (learner.policy_stable(3)) {
                record.converged = true;
                break;
            }
        }

        // whatever became known lands in the KB, converged or interrupted
        record.exported = learner.export_model();
        kb::update_pr_atoms(result.program,
                            model::nav_pr_atoms_from_export(map, record.exported));
        practiced[pick] += 1;
        result.tasks.push_back(std::move(record));
    }
    return result;
}

}  // namespace courier::exp
