#include "courier/experiments.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace courier::exp {

std::string fmt(double x) {
    if (x == 0.0) x = 0.0;  // fold -0 into +0 so reruns match bytewise
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& rows) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << header << '\n';
    for (const auto& row : rows) out << row << '\n';
}

nav::BrTable area_rates(const nav::GridMap& map, double br) {
    nav::BrTable rates = map.br;
    for (const auto& [area, cells] : map.areas) {
        bool declared = false;
        for (const auto& [key, rate] : rates.rates) declared = declared || key.first == area;
        if (!declared) rates.set(area, "*", to_frac(br));
    }
    return rates;
}

model::TransitionTable believed_table(const nav::GridMap& map, double br, const Config& c) {
    kb::Program prog = model::make_nav_program(map);
    kb::update_pr_atoms(
        prog, model::nav_pr_atoms_from_truth(map, area_rates(map, br), to_frac(c.p_base)));
    kb::GroundProgram gp = kb::ground(prog);
    model::VariableSplit split =
        model::split_variables(model::state_variables(gp), model::TaskSpec::navigation(""));
    return model::construct_model(gp, split, "act_move");
}

model::MdpBuilder table_builder(const model::TransitionTable& table, const nav::GridMap& map,
                                const Config& c) {
    double step_cost = c.step_cost;
    double r_max = c.learner.r_max;
    double gamma = c.learner.gamma;
    return [table, map, step_cost, r_max, gamma](const std::vector<int>& goal_cells) {
        return model::mdp_from_table(table, map, goal_cells, step_cost, r_max, gamma);
    };
}

model::MdpBuilder truth_builder(const nav::GridMap& map, double br, const Config& c) {
    nav::BrTable rates = area_rates(map, br);
    Frac p_base = to_frac(c.p_base);
    double step_cost = c.step_cost;
    double r_max = c.learner.r_max;
    double gamma = c.learner.gamma;
    return [map, rates, p_base, step_cost, r_max, gamma](const std::vector<int>& goal_cells) {
        nav::NavTask task;
        task.goal_cells = goal_cells;
        task.step_cost = step_cost;
        task.r_max = r_max;
        return nav::build_true_mdp(map, rates, p_base, "*", task, gamma);
    };
}

model::PnTable pn_for(const nav::GridMap& map, double model_br, double true_br, int step_cap,
                      const Config& c) {
    model::TransitionTable believed = believed_table(map, model_br, c);
    return model::compute_pn(map, table_builder(believed, map, c), truth_builder(map, true_br, c),
                             step_cap, c.learner.vi_epsilon);
}

dialog::DialogPomdp delivery_pomdp(const dialog::RequestSpace& space, const model::PnTable& pn,
                                   const Config& c) {
    dialog::DialogPomdp p = model::build_delivery_pomdp(space, pn);
    p.general_cost = c.general_cost;
    p.confirm_cost = c.confirm_cost;
    p.serve_reward = c.serve_reward;
    p.p_general = c.p_general;
    p.p_confirm = c.p_confirm;
    p.turn_cap = c.turn_cap;
    p.plan_depth = c.plan_depth;
    dialog::rebuild_tables(p);
    return p;
}

// ---- CSV emission ----------------------------------------------------------

namespace {

std::string join_dir(const std::string& dir, const char* file) {
    return (std::filesystem::path(dir) / file).string();
}

void write_transfer_side(const TransferSide& side, const std::string& dir, const char* tag) {
    std::vector<std::string> rows;
    std::vector<double> seeded_sm = smooth(side.seeded.mean_curve, 10);
    std::vector<double> fresh_sm = smooth(side.fresh.mean_curve, 10);
    for (std::size_t e = 0; e < side.seeded.mean_curve.size(); ++e)
        rows.push_back(std::to_string(e) + "," + fmt(side.seeded.mean_curve[e]) + "," +
                       fmt(side.fresh.mean_curve[e]) + "," + fmt(seeded_sm[e]) + "," +
                       fmt(fresh_sm[e]));
    write_csv(join_dir(dir, (std::string("transfer_curves_") + tag + ".csv").c_str()),
              "episode,seeded_mean,fresh_mean,seeded_smooth,fresh_smooth", rows);
}

}  // namespace

void write_transfer_csv(const TransferResult& r, const std::string& dir) {
    write_transfer_side(r.small, dir, "small");
    write_transfer_side(r.large, dir, "large");

    std::vector<std::string> rows;
    for (const TransferSide* side : {&r.small, &r.large})
        for (std::size_t s = 0; s < side->seeded.per_seed_episodes.size(); ++s)
            rows.push_back(std::to_string(side->width) + "," + std::to_string(s) + "," +
                           fmt(side->seeded.per_seed_episodes[s]) + "," +
                           fmt(side->fresh.per_seed_episodes[s]));
    write_csv(join_dir(dir, "transfer_seeds.csv"), "width,seed,seeded_episodes,fresh_episodes",
              rows);

    rows.clear();
    for (const TransferSide* side : {&r.small, &r.large})
        rows.push_back(std::to_string(side->width) + "," + fmt(side->seeded.mean_episodes) + "," +
                       fmt(side->fresh.mean_episodes) + "," + fmt(side->gap) + "," +
                       fmt(side->test.t) + "," + fmt(side->test.p_greater));
    write_csv(join_dir(dir, "transfer_summary.csv"),
              "width,seeded_mean_episodes,fresh_mean_episodes,gap,t,p_one_sided", rows);
}

void write_delivery_csv(const DeliveryResult& r, const std::string& dir) {
    std::vector<std::string> rows;
    for (const TrialRecord& t : r.records)
        rows.push_back(std::to_string(t.trial) + "," + fmt(t.br) + "," + t.variant + "," +
                       fmt(t.reward) + "," + std::to_string(t.fulfilled) + "," + fmt(t.qa_cost) +
                       "," + fmt(t.entropy) + "," + std::to_string(t.length));
    write_csv(join_dir(dir, "delivery_trials.csv"),
              "trial,br,variant,reward,fulfilled,qa_cost,entropy,length", rows);

    rows.clear();
    for (const DeliveryCell& cell : r.cells)
        rows.push_back(fmt(cell.br) + "," + cell.variant + "," + std::to_string(cell.trials) +
                       "," + fmt(cell.mean_reward) + "," + fmt(cell.fulfillment) + "," +
                       fmt(cell.mean_qa));
    write_csv(join_dir(dir, "delivery_summary.csv"),
              "br,variant,trials,mean_reward,fulfillment,mean_qa", rows);

    rows.clear();
    for (const DeliveryTest& test : r.tests)
        rows.push_back(fmt(test.br) + "," + fmt(test.reward.t) + "," + fmt(test.reward.df) + "," +
                       fmt(test.reward.p_greater));
    write_csv(join_dir(dir, "delivery_tests.csv"), "br,t,df,p_one_sided", rows);
}

void write_entropy_csv(const EntropyResult& r, const std::string& dir) {
    std::vector<std::string> rows;
    for (const EntropyCell& cell : r.cells)
        rows.push_back(fmt(cell.br) + "," + cell.room + "," + std::to_string(cell.count) + "," +
                       fmt(cell.mean) + "," + fmt(cell.stddev) + "," + fmt(cell.max));
    write_csv(join_dir(dir, "entropy.csv"), "br,room,count,mean,stddev,max", rows);
}

void write_merge_csv(const MergeResult& r, const std::string& dir) {
    auto row = [&](const char* agent, double rate, const stats::BoxStats& b) {
        return std::string(agent) + "," + std::to_string(r.trials) + "," + fmt(rate) + "," +
               fmt(b.min) + "," + fmt(b.q1) + "," + fmt(b.median) + "," + fmt(b.q3) + "," +
               fmt(b.max);
    };
    write_csv(join_dir(dir, "merge.csv"), "agent,trials,success_rate,min,q1,median,q3,max",
              {row("merged", r.merged_rate, r.merged_steps),
               row("baseline", r.baseline_rate, r.baseline_steps)});
}

void write_cdf_csv(const CdfResult& r, const std::string& dir) {
    std::vector<std::string> rows;
    for (const CdfCurve& curve : r.curves)
        for (std::size_t i = 0; i < curve.cost.size(); ++i)
            rows.push_back(fmt(curve.br) + "," + curve.room + "," + fmt(curve.cost[i]) + "," +
                           fmt(curve.completion[i]));
    write_csv(join_dir(dir, "cdf.csv"), "br,room,cost,completion", rows);
}

}  // namespace courier::exp
