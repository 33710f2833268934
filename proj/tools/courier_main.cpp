// Command-line front end. Experiment subcommands (learn, transfer, delivery,
// entropy, merge, cdf) run a study and drop its CSV files into the output
// directory; --check additionally prints pass/fail trend verdicts and exits 3
// on any failure. The remaining subcommands are small inspection tools: kb
// check/query, nav render, construct/merge table emission, and the dialog
// REPL/simulator.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "courier/config.hpp"
#include "courier/dialog.hpp"
#include "courier/experiments.hpp"
#include "courier/kb.hpp"
#include "courier/model.hpp"
#include "courier/nav.hpp"
#include "courier/rmax.hpp"

using namespace courier;

namespace {

std::string prob9(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9f", x);
    return buf;
}

void trim(std::string& s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
}

// Literal syntax for --target/--given: `attr=value`, `pred(c1,...,ck)`, a
// bare predicate name, any of them with a `not ` prefix.
kb::Literal parse_literal_arg(std::string text) {
    trim(text);
    bool negated = false;
    if (text.rfind("not ", 0) == 0) {
        negated = true;
        text = text.substr(4);
        trim(text);
    }
    if (text.empty()) throw std::runtime_error("empty literal");

    kb::Literal lit;
    auto eq = text.find('=');
    auto par = text.find('(');
    if (eq != std::string::npos && (par == std::string::npos || eq < par)) {
        std::string name = text.substr(0, eq), value = text.substr(eq + 1);
        trim(name);
        trim(value);
        lit = kb::Literal::attr(name, kb::Term::cst(value));
    } else if (par != std::string::npos) {
        if (text.back() != ')') throw std::runtime_error("bad literal '" + text + "': missing ')'");
        std::string name = text.substr(0, par);
        trim(name);
        std::vector<kb::Term> args;
        std::stringstream inner(text.substr(par + 1, text.size() - par - 2));
        std::string tok;
        while (std::getline(inner, tok, ',')) {
            trim(tok);
            if (tok.empty()) throw std::runtime_error("bad literal '" + text + "': empty argument");
            args.push_back(kb::Term::cst(tok));
        }
        lit = kb::Literal::pred(name, std::move(args));
    } else {
        lit = kb::Literal::pred(text);
    }
    lit.negated = negated;
    return lit;
}

std::vector<kb::Literal> parse_literal_args(const std::vector<std::string>& texts) {
    std::vector<kb::Literal> lits;
    for (const auto& t : texts) lits.push_back(parse_literal_arg(t));
    return lits;
}

void write_text(const std::string& path, const std::string& text) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

void emit_table_csv(const model::TransitionTable& t, std::ostream& os) {
    os << "state,action,next,prob\n";
    for (std::size_t s = 0; s < t.states.size(); ++s)
        for (std::size_t a = 0; a < t.actions.size(); ++a)
            for (const auto& [n, p] : t.dist[s][a])
                os << t.states[s] << ',' << t.actions[a] << ',' << t.states[n] << ','
                   << prob9(p) << '\n';
}

int report_checks(const std::vector<exp::TrendCheck>& checks) {
    bool all_pass = true;
    for (const auto& ck : checks) {
        std::cout << (ck.pass ? "[PASS] " : "[FAIL] ") << ck.name << "  (" << ck.detail << ")\n";
        all_pass = all_pass && ck.pass;
    }
    return all_pass ? 0 : 3;
}

// ---- dialog REPL -----------------------------------------------------------

// question dimension and value index behind a confirmation action
std::pair<int, int> confirm_target(const dialog::DialogPomdp& p, int question) {
    int k = question - 3;
    if (k < static_cast<int>(p.space.items.size())) return {0, k};
    k -= static_cast<int>(p.space.items.size());
    if (k < static_cast<int>(p.space.rooms.size())) return {1, k};
    k -= static_cast<int>(p.space.rooms.size());
    return {2, k};
}

const std::vector<std::string>& dim_values(const dialog::RequestSpace& space, int dim) {
    if (dim == 0) return space.items;
    if (dim == 1) return space.rooms;
    return space.persons;
}

const char* dim_name(int dim) { return dim == 0 ? "item" : dim == 1 ? "room" : "person"; }

std::string question_text(const dialog::DialogPomdp& p, int question) {
    if (question < 3) return std::string("which ") + dim_name(question) + " do you want?";
    auto [dim, value] = confirm_target(p, question);
    return std::string("is the ") + dim_name(dim) + " " + dim_values(p.space, dim)[value] + "?";
}

std::string answer_options(const dialog::DialogPomdp& p, int question) {
    if (question >= 3) return "yes, no";
    std::string opts;
    for (const auto& v : dim_values(p.space, question)) {
        if (!opts.empty()) opts += ", ";
        opts += v;
    }
    return opts;
}

// observation index for a typed answer, -1 when unrecognized
int parse_answer(const dialog::DialogPomdp& p, int question, std::string line) {
    trim(line);
    for (auto& ch : line) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (question >= 3) {
        if (line == "yes" || line == "y") return 1;
        if (line == "no" || line == "n") return 0;
        return -1;
    }
    const auto& values = dim_values(p.space, question);
    for (std::size_t i = 0; i < values.size(); ++i)
        if (line == values[i]) return static_cast<int>(i);
    return -1;
}

void print_belief(const dialog::DialogPomdp& p, const dialog::Belief& b) {
    int hidden = 0;
    for (int r = 0; r < p.space.num_requests(); ++r) {
        if (b[r] < 0.005) {
            ++hidden;
            continue;
        }
        int bar = static_cast<int>(std::lround(b[r] * 40));
        std::printf("  %-22s %6.3f %s\n", p.space.request_name(r).c_str(), b[r],
                    std::string(bar, '#').c_str());
    }
    if (hidden > 0) std::printf("  (%d requests below 0.005)\n", hidden);
    std::printf("  entropy %.3f bits\n", dialog::belief_entropy(b));
}

int run_interactive(const dialog::DialogPomdp& p, const dialog::Belief& prior) {
    dialog::Belief b = prior;
    int turns = 0;
    std::cout << "Delivery request dialog. Answer general questions with a value name,\n"
                 "confirmations with yes/no.\n\n";
    while (true) {
        print_belief(p, b);
        int action = dialog::plan_dialog_action(p, b, turns);
        if (p.is_serve(action)) {
            std::cout << "robot: serving " << p.space.request_name(p.serve_request(action))
                      << "\n";
            return 0;
        }
        std::cout << "robot: " << question_text(p, action) << "\n";
        int obs = -1;
        while (obs < 0) {
            std::cout << "you> " << std::flush;
            std::string line;
            if (!std::getline(std::cin, line)) {
                std::cout << "\n(dialog abandoned)\n";
                return 0;
            }
            obs = parse_answer(p, action, line);
            if (obs < 0) std::cout << "  (answers: " << answer_options(p, action) << ")\n";
        }
        b = dialog::belief_update(p, b, action, obs);
        ++turns;
    }
}

// ---- subcommand bodies -----------------------------------------------------

int run_learn(const Config& c, const std::string& map_path, double br) {
    nav::GridMap map = nav::load_map(map_path.empty() ? c.map30 : map_path);
    exp::LearnResult res = exp::run_learning_loop(map, br, c);

    const std::vector<std::string> moves = {"up", "down", "left", "right"};
    std::vector<std::string> rows;
    for (std::size_t i = 0; i < res.tasks.size(); ++i) {
        const exp::LearnTask& t = res.tasks[i];
        std::string room(1, t.room);
        std::cout << "task " << i + 1 << ": room" << room << ", " << t.episodes_run
                  << " episodes, " << (t.converged ? "policy stable" : "episode budget hit")
                  << ", " << t.exported.size() << " known pairs\n";
        rows.push_back(std::to_string(i + 1) + ",room" + room + "," +
                       std::to_string(t.episodes_run) + "," + (t.converged ? "1" : "0") + "," +
                       std::to_string(t.exported.size()));
        rmax::write_model_dump(
            c.out_dir + "/learn_task" + std::to_string(i + 1) + "_room" + room + ".model",
            t.exported, moves);
    }
    exp::write_csv(c.out_dir + "/learn_tasks.csv", "task,room,episodes,policy_stable,known_pairs",
                   rows);
    write_text(c.out_dir + "/learned.kb", kb::print_program(res.program));
    std::cout << "learned KB written to " << c.out_dir << "/learned.kb\n";
    return 0;
}

int run_transfer(const Config& c, bool check) {
    exp::TransferResult r = exp::run_transfer_experiment(c, &std::cout);
    exp::write_transfer_csv(r, c.out_dir);
    std::cout << "small map: seeded " << exp::fmt(r.small.seeded.mean_episodes) << " vs fresh "
              << exp::fmt(r.small.fresh.mean_episodes) << " episodes (p "
              << exp::fmt(r.small.test.p_greater) << ")\n"
              << "large map: seeded " << exp::fmt(r.large.seeded.mean_episodes) << " vs fresh "
              << exp::fmt(r.large.fresh.mean_episodes) << " episodes (p "
              << exp::fmt(r.large.test.p_greater) << ")\n";
    return check ? report_checks(exp::check_transfer(r)) : 0;
}

int run_delivery(const Config& c, bool check) {
    exp::DeliveryResult r = exp::run_delivery_experiment(c, &std::cout);
    exp::write_delivery_csv(r, c.out_dir);
    for (const exp::DeliveryTest& t : r.tests)
        std::cout << "br=" << exp::fmt(t.br) << ": reward gap p = " << exp::fmt(t.reward.p_greater)
                  << "\n";
    return check ? report_checks(exp::check_delivery(r)) : 0;
}

int run_entropy(const Config& c, bool check) {
    exp::EntropyResult r = exp::run_entropy_study(c, &std::cout);
    exp::write_entropy_csv(r, c.out_dir);
    for (const exp::EntropyCell& cell : r.cells)
        std::cout << cell.room << " br=" << exp::fmt(cell.br) << ": " << cell.count
                  << " serves, mean entropy " << exp::fmt(cell.mean) << "\n";
    return check ? report_checks(exp::check_entropy(r)) : 0;
}

int run_merge_tables(const Config& c, const std::string& prior_text) {
    nav::GridMap map = nav::load_map(c.merge_map);
    std::vector<model::TransitionTable> tables = exp::setting_tables(map, c);

    std::vector<double> prior;
    std::stringstream ss(prior_text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        trim(tok);
        prior.push_back(std::stod(tok));
    }
    if (prior.size() != tables.size())
        throw std::runtime_error("--prior needs " + std::to_string(tables.size()) +
                                 " comma-separated weights, one per time setting");
    double sum = 0.0;
    for (double p : prior) sum += p;
    if (sum <= 0.0) throw std::runtime_error("--prior weights sum to zero");
    for (double& p : prior) p /= sum;

    emit_table_csv(model::merge_models(tables, prior), std::cout);
    return 0;
}

int run_merge(const Config& c, bool check, const std::string& prior_text) {
    if (!prior_text.empty()) return run_merge_tables(c, prior_text);
    exp::MergeResult r = exp::run_merge_experiment(c, &std::cout);
    exp::write_merge_csv(r, c.out_dir);
    return check ? report_checks(exp::check_merge(r)) : 0;
}

int run_cdf(const Config& c, bool check) {
    exp::CdfResult r = exp::run_cdf_report(c, &std::cout);
    exp::write_cdf_csv(r, c.out_dir);
    return check ? report_checks(exp::check_cdf(r)) : 0;
}

int run_dialog(const Config& c, bool interactive, bool simulate, int trials, double br) {
    if (interactive == simulate)
        throw std::runtime_error("dialog: pass exactly one of --interactive or --simulate");

    nav::GridMap map = nav::load_map(c.map30);
    kb::Program dprog = kb::parse_program(exp::read_file(c.dialog_kb));
    kb::GroundProgram dgp = kb::ground(dprog);
    dialog::RequestSpace space = dialog::request_space_from(dgp);
    dialog::Belief prior = dialog::init_belief(dgp, space);
    model::PnTable pn = exp::pn_for(map, br, br, c.step_cap_small, c);
    dialog::DialogPomdp pomdp = exp::delivery_pomdp(space, pn, c);

    if (interactive) return run_interactive(pomdp, prior);

    auto true_success = model::delivery_success_matrix(pn, space, true);
    dialog::DialogPlanner planner(pomdp, prior);
    std::cout << "trial,reward,fulfilled,qa_cost\n";
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng = make_rng(c.seed, 0x5500000000ULL + trial);
        int request = static_cast<int>(sample_index(rng, prior));
        dialog::DialogResult dlg = dialog::run_dialog(planner, request, rng);
        bool fulfilled = uniform01(rng) < true_success[dlg.served][request];
        double reward = (fulfilled ? c.serve_reward : -c.serve_reward) - dlg.qa_cost;
        std::cout << trial << ',' << exp::fmt(reward) << ',' << (fulfilled ? 1 : 0) << ','
                  << exp::fmt(dlg.qa_cost) << '\n';
    }
    return 0;
}

int run_kb_check(const std::string& path) {
    kb::Program prog = kb::parse_program(exp::read_file(path));
    kb::GroundProgram gp = kb::ground(prog);
    std::cout << "parsed: " << prog.sorts.size() << " sorts, " << prog.attrs.size()
              << " random attributes, " << prog.rules.size() << " rules, " << prog.facts.size()
              << " facts, " << prog.pr_atoms.size() << " pr-atoms\n";
    std::cout << "ground: " << gp.attr_names.size() << " attributes, " << gp.world_count
              << " worlds\nok\n";
    return 0;
}

int run_kb_query(const std::string& path, const std::string& target,
                 const std::vector<std::string>& given) {
    kb::Program prog = kb::parse_program(exp::read_file(path));
    kb::GroundProgram gp = kb::ground(prog);
    double prob = kb::query(gp, parse_literal_arg(target), parse_literal_args(given));
    std::cout << prob9(prob) << "\n";
    return 0;
}

int run_nav_render(const std::string& path) {
    nav::GridMap map = nav::load_map(path);
    std::cout << render_map(map);
    std::cout << map.width << "x" << map.height << ", shop at cell " << map.shop << ", "
              << map.rooms.size() << " rooms, " << map.areas.size() << " blocking areas";
    if (!map.times.empty()) {
        std::cout << ", times:";
        for (const auto& t : map.times) std::cout << " " << t;
    }
    std::cout << "\n";
    return 0;
}

int run_construct(const std::string& kb_path, const std::string& task_name,
                  const std::string& action, const std::vector<std::string>& given) {
    kb::Program prog = kb::parse_program(exp::read_file(kb_path));
    kb::GroundProgram gp = kb::ground(prog);
    model::TaskSpec task = task_name == "navigation" ? model::TaskSpec::navigation("")
                           : task_name == "dialog"   ? model::TaskSpec::dialog()
                                                     : model::TaskSpec::delivery();
    model::VariableSplit split = model::split_variables(model::state_variables(gp), task);
    emit_table_csv(model::construct_model(gp, split, action, parse_literal_args(given)),
                   std::cout);
    return 0;
}

int run_pn(const Config& c, const std::string& map_path, double model_br, double true_br,
           int step_cap) {
    nav::GridMap map = nav::load_map(map_path.empty() ? c.map30 : map_path);
    int cap = step_cap > 0 ? step_cap : c.step_cap_small;
    model::PnTable pn = exp::pn_for(map, model_br, true_br, cap, c);
    std::cout << "room,to_room,back,to_room_true,back_true\n";
    int i = 0;
    for (const auto& [room, cells] : map.rooms) {
        std::cout << "room" << room << ',' << exp::fmt(pn.to_room[i]) << ','
                  << exp::fmt(pn.back[i]) << ',' << exp::fmt(pn.to_room_true[i]) << ','
                  << exp::fmt(pn.back_true[i]) << '\n';
        ++i;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"service-robot knowledge base, learning, and dialog experiments"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, profile = "desk", out_dir;
    uint64_t seed = 0;
    app.add_option("--config", config_path, "JSON config file");
    auto* profile_opt = app.add_option("--profile", profile, "trial-count profile: desk or paper");
    auto* seed_opt = app.add_option("--seed", seed, "master seed override");
    auto* out_opt = app.add_option("--out", out_dir, "output directory override");

    bool check = false;
    std::string learn_map;
    double learn_br = 0.1;
    auto* learn = app.add_subcommand("learn", "run the task practice loop and emit the KB");
    learn->add_option("--map", learn_map, "map file (default: the small map)");
    learn->add_option("--br", learn_br, "true blocking rate of the environment");

    auto* transfer = app.add_subcommand("transfer", "warm-start study across two maps");
    auto* delivery = app.add_subcommand("delivery", "adaptive vs static delivery comparison");
    auto* entropy = app.add_subcommand("entropy", "belief entropy at serve time per room");
    auto* merge = app.add_subcommand("merge", "mixture-model navigation under a hidden setting");
    auto* cdf = app.add_subcommand("cdf", "dialog completion vs question cost curves");
    for (auto* sub : {transfer, delivery, entropy, merge, cdf})
        sub->add_flag("--check", check, "verify the expected trends; exit 3 on failure");

    std::string merge_prior;
    merge->add_option("--prior", merge_prior,
                      "emit the merged transition table for these setting weights instead");

    bool dlg_interactive = false, dlg_simulate = false;
    int dlg_trials = 100;
    double dlg_br = 0.1;
    auto* dlg = app.add_subcommand("dialog", "request dialog REPL / batch simulator");
    dlg->add_flag("--interactive", dlg_interactive, "type answers yourself");
    dlg->add_flag("--simulate", dlg_simulate, "simulated users, per-trial CSV on stdout");
    dlg->add_option("--trials", dlg_trials, "simulated dialog count");
    dlg->add_option("--br", dlg_br, "blocking rate behind the serve payoffs");

    auto* kbc = app.add_subcommand("kb", "knowledge base tools");
    kbc->require_subcommand(1);
    std::string kb_file, kb_target;
    std::vector<std::string> kb_given;
    auto* kb_check = kbc->add_subcommand("check", "parse and ground, report sizes");
    kb_check->add_option("file", kb_file, "KB source file")->required();
    auto* kb_query = kbc->add_subcommand("query", "conditional probability of a literal");
    kb_query->add_option("file", kb_file, "KB source file")->required();
    kb_query->add_option("--target", kb_target, "literal, e.g. 'req_item=coke'")->required();
    kb_query->add_option("--given", kb_given, "evidence literals");

    auto* navc = app.add_subcommand("nav", "map tools");
    navc->require_subcommand(1);
    std::string nav_file;
    auto* nav_render = navc->add_subcommand("render", "print the parsed map");
    nav_render->add_option("map", nav_file, "map file")->required();

    std::string con_kb, con_task = "navigation", con_action = "act_move";
    std::vector<std::string> con_given;
    auto* construct = app.add_subcommand("construct", "emit a KB-built transition table as CSV");
    construct->add_option("--kb", con_kb, "KB source file")->required();
    construct->add_option("--task", con_task, "navigation, dialog, or delivery")
        ->check(CLI::IsMember({"navigation", "dialog", "delivery"}));
    construct->add_option("--action", con_action, "action attribute");
    construct->add_option("--given", con_given, "exogenous evidence literals");

    std::string pn_map;
    double pn_model_br = 0.1, pn_true_br = 0.1;
    int pn_cap = 0;
    auto* pn = app.add_subcommand("pn", "per-room leg success probabilities");
    pn->group("");  // tuning tool, hidden from help
    pn->add_option("--map", pn_map, "map file");
    pn->add_option("--br", pn_model_br, "blocking rate of the agent's model");
    pn->add_option("--true-br", pn_true_br, "blocking rate of the environment");
    pn->add_option("--step-cap", pn_cap, "episode step cap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        Config c = config_path.empty() ? default_config() : load_config(config_path);
        if (profile_opt->count()) apply_profile(c, profile);
        if (seed_opt->count()) c.seed = seed;
        if (out_opt->count()) c.out_dir = out_dir;

        if (learn->parsed()) return run_learn(c, learn_map, learn_br);
        if (transfer->parsed()) return run_transfer(c, check);
        if (delivery->parsed()) return run_delivery(c, check);
        if (entropy->parsed()) return run_entropy(c, check);
        if (merge->parsed()) return run_merge(c, check, merge_prior);
        if (cdf->parsed()) return run_cdf(c, check);
        if (dlg->parsed()) return run_dialog(c, dlg_interactive, dlg_simulate, dlg_trials, dlg_br);
        if (kb_check->parsed()) return run_kb_check(kb_file);
        if (kb_query->parsed()) return run_kb_query(kb_file, kb_target, kb_given);
        if (nav_render->parsed()) return run_nav_render(nav_file);
        if (construct->parsed()) return run_construct(con_kb, con_task, con_action, con_given);
        if (pn->parsed()) return run_pn(c, pn_map, pn_model_br, pn_true_br, pn_cap);
        std::cerr << "no subcommand\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
