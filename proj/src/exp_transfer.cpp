#include "courier/experiments.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace courier::exp {

std::vector<double> smooth(const std::vector<double>& xs, int window) {
    if (window < 1) throw std::invalid_argument("smooth: window must be positive");
    std::vector<double> out(xs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        acc += xs[i];
        if (i >= static_cast<std::size_t>(window)) acc -= xs[i - window];
        out[i] = acc / static_cast<double>(std::min<std::size_t>(i + 1, window));
    }
    return out;
}

double episodes_to_asymptote(const std::vector<double>& rewards, int window) {
    if (rewards.empty()) return 0.0;
    std::vector<double> s = smooth(rewards, window);
    std::size_t tail = std::max<std::size_t>(1, s.size() / 10);
    double asymptote =
        std::accumulate(s.end() - static_cast<long>(tail), s.end(), 0.0) / static_cast<double>(tail);
    double floor = *std::min_element(s.begin(), s.end());
    // a curve that never lifted off its floor has not reached any asymptote;
    // without this guard the threshold collapses onto the floor and episode 0
    // would qualify
    if (asymptote - floor < 1e-9 * (std::abs(floor) + 1.0))
        return static_cast<double>(s.size());
    double threshold = floor + 0.9 * (asymptote - floor);
    int streak = 0;
    for (std::size_t e = 0; e < s.size(); ++e) {
        if (s[e] >= threshold - 1e-12) {
            if (++streak == 3) return static_cast<double>(e - 2);
        } else {
            streak = 0;
        }
    }
    return static_cast<double>(s.size());
}

namespace {

// One R-Max run on a task; returns total reward per episode. A non-null
// warm start is injected before the first action, rewards remapped.
std::vector<double> run_arm(const nav::GridMap& map, const nav::BrTable& rates, Frac p_base,
                            const nav::NavTask& task, const Config& c, int episodes,
                            uint64_t env_seed, const std::vector<rmax::ExportEntry>* warm,
                            const rmax::Learner::RewardMap& remap) {
    int num_cells = map.width * map.height;
    std::vector<char> terminal(num_cells, 0);
    for (int g : task.goal_cells) terminal[g] = 1;
    rmax::Learner learner(num_cells, nav::kNumMoves, terminal, c.learner);
    if (warm) learner.inject(*warm, remap);

    nav::NavEnv env(map, rates, p_base, "*", task, env_seed);
    std::vector<double> rewards(episodes, 0.0);
    for (int episode = 0; episode < episodes; ++episode) {
        int cell = env.reset();
        double total = 0.0;
        while (!env.done()) {
            int a = learner.act(cell);
            nav::NavEnv::StepResult step = env.step(static_cast<nav::Move>(a));
            learner.observe(cell, a, step.cell, step.reward);
            total += step.reward;
            cell = step.cell;
        }
        rewards[episode] = total;
    }
    return rewards;
}

TransferSide run_side(const nav::GridMap& map, char source_room, char target_room, int episodes,
                      int step_cap, const Config& c, uint64_t salt, std::ostream* progress) {
    if (source_room == target_room)
        throw std::invalid_argument("transfer: source and target must be different rooms");
    for (char room : {source_room, target_room})
        if (!map.rooms.count(room))
            throw std::invalid_argument(std::string("transfer: map has no room '") + room + "'");

    nav::BrTable rates = area_rates(map, 0.1);
    Frac p_base = to_frac(c.p_base);
    nav::NavTask source_task =
        nav::task_to_room(map, source_room, step_cap, c.step_cost, c.learner.r_max);
    nav::NavTask target_task =
        nav::task_to_room(map, target_room, step_cap, c.step_cost, c.learner.r_max);

    // learned rewards carry the source task's goal bonus; re-target them to
    // the new goal so injected pairs look exactly like target-task data
    std::vector<char> is_target_goal(map.width * map.height, 0);
    for (int g : target_task.goal_cells) is_target_goal[g] = 1;
    double step_cost = c.step_cost;
    double r_max = c.learner.r_max;
    rmax::Learner::RewardMap remap = [&is_target_goal, step_cost,
                                      r_max](const rmax::ExportEntry& e) {
        long long goal_hits = 0;
        for (const auto& [succ, count] : e.succ_counts)
            if (is_target_goal[succ]) goal_hits += count;
        return step_cost +
               r_max * static_cast<double>(goal_hits) / static_cast<double>(e.total);
    };

    TransferSide side;
    side.width = map.width;
    side.seeded.mean_curve.assign(episodes, 0.0);
    side.fresh.mean_curve.assign(episodes, 0.0);

    // train the source task once; every seeded arm below reuses this model,
    // the way a deployed robot carries over whatever map it already has. Half
    // again as many episodes as the arms get, so the handed-over estimates
    // rest on solid counts rather than whatever exploration left behind
    int source_episodes = episodes + episodes / 2;
    int num_cells = map.width * map.height;
    std::vector<char> source_terminal(num_cells, 0);
    for (int g : source_task.goal_cells) source_terminal[g] = 1;
    rmax::Learner source(num_cells, nav::kNumMoves, source_terminal, c.learner);
    {
        nav::NavEnv env(map, rates, p_base, "*", source_task, derive_seed(c.seed, salt + 5));
        for (int episode = 0; episode < source_episodes; ++episode) {
            int cell = env.reset();
            while (!env.done()) {
                int a = source.act(cell);
                nav::NavEnv::StepResult step = env.step(static_cast<nav::Move>(a));
                source.observe(cell, a, step.cell, step.reward);
                cell = step.cell;
            }
        }
    }
    std::vector<rmax::ExportEntry> exported = source.export_model();

    for (int seed_idx = 0; seed_idx < c.transfer_seeds; ++seed_idx) {
        uint64_t base = salt + static_cast<uint64_t>(seed_idx) * 8;

        std::vector<double> fresh = run_arm(map, rates, p_base, target_task, c, episodes,
                                            derive_seed(c.seed, base + 1), nullptr, nullptr);
        std::vector<double> seeded = run_arm(map, rates, p_base, target_task, c, episodes,
                                             derive_seed(c.seed, base + 2), &exported, remap);

        side.fresh.per_seed_episodes.push_back(episodes_to_asymptote(fresh, 10));
        side.seeded.per_seed_episodes.push_back(episodes_to_asymptote(seeded, 10));
        for (int e = 0; e < episodes; ++e) {
            side.fresh.mean_curve[e] += fresh[e];
            side.seeded.mean_curve[e] += seeded[e];
        }
        if (progress && (seed_idx + 1) % 10 == 0)
            *progress << "transfer " << map.width << "x" << map.height << ": seed "
                      << (seed_idx + 1) << "/" << c.transfer_seeds << "\n";
    }

    for (int e = 0; e < episodes; ++e) {
        side.fresh.mean_curve[e] /= c.transfer_seeds;
        side.seeded.mean_curve[e] /= c.transfer_seeds;
    }
    side.fresh.mean_episodes = stats::summarize(side.fresh.per_seed_episodes).mean;
    side.seeded.mean_episodes = stats::summarize(side.seeded.per_seed_episodes).mean;
    side.gap = side.fresh.mean_episodes - side.seeded.mean_episodes;
    side.test = stats::welch_t_test(side.fresh.per_seed_episodes, side.seeded.per_seed_episodes);
    return side;
}

}  // namespace

TransferResult run_transfer_experiment(const Config& c, std::ostream* progress) {
    TransferResult result;
    nav::GridMap small = nav::load_map(c.map30);
    nav::GridMap large = nav::load_map(c.map50);
    result.small = run_side(small, c.transfer_source_room[0], c.transfer_target_small[0],
                            c.transfer_episodes_small, c.step_cap_small, c, 0x7200000000ULL,
                            progress);
    result.large = run_side(large, c.transfer_source_room[0], c.transfer_target_large[0],
                            c.transfer_episodes_large, c.step_cap_large, c, 0x7300000000ULL,
                            progress);
    return result;
}

std::vector<TrendCheck> check_transfer(const TransferResult& r) {
    std::vector<TrendCheck> checks;
    checks.push_back({"transfer: warm start reaches asymptote sooner on the small map",
                      r.small.gap > 0.0,
                      "seeded " + fmt(r.small.seeded.mean_episodes) + " vs fresh " +
                          fmt(r.small.fresh.mean_episodes) + " episodes"});
    checks.push_back({"transfer: one-sided p below 0.05 on the small map",
                      r.small.test.p_greater < 0.05, "p = " + fmt(r.small.test.p_greater)});
    checks.push_back({"transfer: episode gap grows on the large map", r.large.gap > r.small.gap,
                      "gap " + fmt(r.small.gap) + " -> " + fmt(r.large.gap)});
    return checks;
}

}  // namespace courier::exp
