#include "courier/experiments.hpp"

#include <stdexcept>

namespace courier::exp {

std::vector<model::TransitionTable> setting_tables(const nav::GridMap& map, const Config& c) {
    kb::Program prog = model::make_nav_program(map, map.times);
    for (const std::string& t : map.times)
        kb::update_pr_atoms(prog,
                            model::nav_pr_atoms_from_truth(map, map.br, to_frac(c.p_base), t, t));
    kb::GroundProgram gp = kb::ground(prog);
    model::VariableSplit split =
        model::split_variables(model::state_variables(gp), model::TaskSpec::navigation(""));

    std::vector<model::TransitionTable> tables;
    for (const std::string& t : map.times)
        tables.push_back(model::construct_model(gp, split, "act_move",
                                                {kb::Literal::attr("time", kb::Term::cst(t))}));
    return tables;
}

MergeResult run_merge_experiment(const Config& c, std::ostream* progress) {
    nav::GridMap map = nav::load_map(c.merge_map);
    if (map.times.size() != 3)
        throw std::invalid_argument("merge: map must declare exactly three time settings");
    if (map.rooms.empty()) throw std::invalid_argument("merge: map declares no rooms");
    const std::vector<std::string>& settings = map.times;
    std::vector<model::TransitionTable> tables = setting_tables(map, c);

    char room = map.rooms.begin()->first;
    nav::NavTask task =
        nav::task_to_room(map, room, c.step_cap_small, c.step_cost, c.learner.r_max);
    auto solve = [&](const model::TransitionTable& table) {
        mdp::Mdp m = model::mdp_from_table(table, map, task.goal_cells, c.step_cost,
                                           c.learner.r_max, c.learner.gamma);
        return mdp::value_iteration(m, c.learner.vi_epsilon).policy;
    };

    // only three candidate pairs exist, so every policy is precomputable
    std::vector<std::vector<int>> single(3), merged(3);
    const int pair_a[3] = {0, 0, 1};
    const int pair_b[3] = {1, 2, 2};
    for (int k = 0; k < 3; ++k) {
        single[k] = solve(tables[k]);
        merged[k] = solve(model::merge_models({tables[pair_a[k]], tables[pair_b[k]]}, {0.5, 0.5}));
    }

    auto rollout = [&](const std::vector<int>& policy, const std::string& time, uint64_t seed) {
        nav::NavEnv env(map, map.br, to_frac(c.p_base), time, task, seed);
        int cell = env.reset();
        while (!env.done()) {
            int a = policy[cell];
            if (a < 0) break;
            cell = env.step(static_cast<nav::Move>(a)).cell;
        }
        return std::make_pair(env.reached_goal(), env.steps_taken());
    };

    MergeResult result;
    result.trials = c.merge_trials;
    std::vector<double> merged_steps, baseline_steps;
    int merged_hits = 0, baseline_hits = 0;
    const std::vector<double> third(3, 1.0 / 3.0);
    for (int trial = 0; trial < c.merge_trials; ++trial) {
        Rng rng = make_rng(c.seed, 0x8000000000ULL + trial);
        int k = static_cast<int>(sample_index(rng, third));
        int truth = bernoulli(rng, 0.5) ? pair_b[k] : pair_a[k];
        int guess = bernoulli(rng, 0.5) ? pair_b[k] : pair_a[k];

        auto [m_ok, m_steps] = rollout(merged[k], settings[truth],
                                       derive_seed(c.seed, 0x8100000000ULL + trial));
        auto [b_ok, b_steps] = rollout(single[guess], settings[truth],
                                       derive_seed(c.seed, 0x8200000000ULL + trial));
        merged_hits += m_ok ? 1 : 0;
        baseline_hits += b_ok ? 1 : 0;
        merged_steps.push_back(static_cast<double>(m_steps));
        baseline_steps.push_back(static_cast<double>(b_steps));
    }

    result.merged_rate = static_cast<double>(merged_hits) / c.merge_trials;
    result.baseline_rate = static_cast<double>(baseline_hits) / c.merge_trials;
    result.merged_steps = stats::box_stats(merged_steps);
    result.baseline_steps = stats::box_stats(baseline_steps);
    if (progress)
        *progress << "merge: merged " << fmt(result.merged_rate) << ", baseline "
                  << fmt(result.baseline_rate) << "\n";
    return result;
}

std::vector<TrendCheck> check_merge(const MergeResult& r) {
    std::vector<TrendCheck> checks;
    double lift = r.merged_rate - r.baseline_rate;
    checks.push_back({"merge: mixture policy lifts success rate by 20 points", lift >= 0.20,
                      fmt(r.merged_rate) + " vs " + fmt(r.baseline_rate) + " over " +
                          std::to_string(r.trials) + " trials"});
    return checks;
}

}  // namespace courier::exp
