#pragma once

// Experiment harness shared by the CLI and the acceptance suite: builds the
// task models a given study needs, runs its trials on per-trial derived rng
// streams, and returns plain result structs. CSV emission is split out so
// reruns with one seed produce byte-identical files.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "courier/config.hpp"
#include "courier/dialog.hpp"
#include "courier/kb.hpp"
#include "courier/model.hpp"
#include "courier/nav.hpp"
#include "courier/rmax.hpp"
#include "courier/stats.hpp"

namespace courier::exp {

// ---- shared plumbing -------------------------------------------------------

// Fixed-notation float text used by every CSV writer.
std::string fmt(double x);

// Whole file as a string; throws std::runtime_error when unreadable.
std::string read_file(const std::string& path);

// Writes header and rows, each with a trailing newline. Creates missing
// parent directories. Throws std::runtime_error when the file cannot open.
void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& rows);

// Blocking rates for an experiment run: areas whose rate the map declares
// keep it (fixed zones such as shelving aisles), every undeclared area runs
// at the experiment's rate knob.
nav::BrTable area_rates(const nav::GridMap& map, double br);

// The world model a converged learner would hold at one blocking rate:
// exact truth folded into the navigation KB, then constructed back out.
model::TransitionTable believed_table(const nav::GridMap& map, double br, const Config& c);

// Policy sources for compute_pn: a constructed table, or the environment
// truth itself.
model::MdpBuilder table_builder(const model::TransitionTable& table, const nav::GridMap& map,
                                const Config& c);
model::MdpBuilder truth_builder(const nav::GridMap& map, double br, const Config& c);

// Per-room leg success for an agent whose model was learned at model_br
// while the world actually runs at true_br.
model::PnTable pn_for(const nav::GridMap& map, double model_br, double true_br, int step_cap,
                      const Config& c);

// Delivery POMDP over the believed success, with the config's dialog costs
// applied.
dialog::DialogPomdp delivery_pomdp(const dialog::RequestSpace& space, const model::PnTable& pn,
                                   const Config& c);

// ---- learning loop ---------------------------------------------------------

struct LearnTask {
    char room = '?';
    int episodes_run = 0;
    bool converged = false;  // policy held stable before the episode budget
    std::vector<rmax::ExportEntry> exported;
};

struct LearnResult {
    kb::Program program;  // navigation KB with the learned pr-atoms folded in
    std::vector<LearnTask> tasks;
};

// Practice loop: pick the least-practiced room, learn it with R-Max on the
// true environment, fold the known pairs into the KB, repeat c.learn_tasks
// times. A small episode budget models interruption: whatever became known
// so far still lands in the KB.
LearnResult run_learning_loop(const nav::GridMap& map, double br, const Config& c);

// ---- transfer study --------------------------------------------------------

// Trailing moving average, window clipped at the front.
std::vector<double> smooth(const std::vector<double>& xs, int window);

// First episode where the smoothed curve holds 90% of its asymptote (mean
// of the last tenth) above the curve floor for three consecutive episodes;
// returns the episode count when it never does.
double episodes_to_asymptote(const std::vector<double>& rewards, int window);

struct TransferArm {
    std::vector<double> mean_curve;          // per-episode reward, seed-averaged
    std::vector<double> per_seed_episodes;   // episodes-to-asymptote per seed
    double mean_episodes = 0.0;
};

struct TransferSide {
    int width = 0;
    TransferArm seeded, fresh;
    double gap = 0.0;          // fresh minus seeded, in episodes
    stats::WelchResult test;   // H1: fresh needs more episodes than seeded
};

struct TransferResult {
    TransferSide small, large;
};

// Learns the first room from scratch, then the second room twice per seed:
// once fresh and once pre-seeded with the first task's known pairs (rewards
// re-targeted to the new goal).
TransferResult run_transfer_experiment(const Config& c, std::ostream* progress = nullptr);

// ---- delivery study --------------------------------------------------------

// One dialog-then-delivery trial. reward always equals
// (fulfilled ? serve_reward : -serve_reward) - qa_cost.
struct TrialRecord {
    int trial = 0;
    double br = 0.0;
    std::string variant;   // "adaptive" or "static"
    double reward = 0.0;
    int fulfilled = 0;
    double qa_cost = 0.0;
    double entropy = 0.0;  // belief entropy just before the serve
    int length = 0;        // dialog actions taken, serve included
};

struct DeliveryCell {
    double br = 0.0;
    std::string variant;
    int trials = 0;
    double mean_reward = 0.0;
    double fulfillment = 0.0;
    double mean_qa = 0.0;
};

struct DeliveryTest {
    double br = 0.0;
    stats::WelchResult reward;  // H1: adaptive mean reward exceeds static
};

struct DeliveryResult {
    std::vector<TrialRecord> records;  // br-major, adaptive block then static block
    std::vector<DeliveryCell> cells;
    std::vector<DeliveryTest> tests;
};

// At each blocking rate, runs paired trials of the full request dialog plus
// delivery outcome for two agents: one whose model tracks the current rate
// and one stuck with the c.static_br model. Requests and outcome draws are
// shared per trial so the comparison is common-random-number paired.
DeliveryResult run_delivery_experiment(const Config& c, std::ostream* progress = nullptr);

// ---- entropy study ---------------------------------------------------------

struct EntropyCell {
    std::string room;
    double br = 0.0;
    int count = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double max = 0.0;
};

struct EntropyResult {
    std::vector<EntropyCell> cells;  // br-major, rooms in map order
};

// Draws symmetric-Dirichlet beliefs and keeps those the planner would act
// on by serving immediately, recording the belief entropy per target room.
EntropyResult run_entropy_study(const Config& c, std::ostream* progress = nullptr);

// ---- merge study -----------------------------------------------------------

// One transition table per time setting declared by the map, KB-constructed
// from the exact per-setting dynamics. Shared by the experiment and the
// CLI's table-emission mode.
std::vector<model::TransitionTable> setting_tables(const nav::GridMap& map, const Config& c);

struct MergeResult {
    int trials = 0;
    double merged_rate = 0.0;
    double baseline_rate = 0.0;
    stats::BoxStats merged_steps{};
    stats::BoxStats baseline_steps{};
};

// The true time setting hides among two candidates each trial. The merged
// agent plans on the prior-weighted mixture of the candidates' models; the
// baseline commits to one candidate's policy at random.
MergeResult run_merge_experiment(const Config& c, std::ostream* progress = nullptr);

// ---- dialog-completion report ----------------------------------------------

struct CdfCurve {
    std::string room;
    double br = 0.0;
    std::vector<double> cost;        // sorted unique QA costs
    std::vector<double> completion;  // fraction of dialogs with qa <= cost[i]
};

struct CdfResult {
    std::vector<CdfCurve> curves;  // br-major, rooms in map order
};

// Completion fraction at cost x, 0 left of the support and the terminal
// value right of it.
double cdf_at(const CdfCurve& curve, double x);

// Runs request dialogs conditioned on the true room per (room, br) and
// reports the QA-cost distribution of completed dialogs.
CdfResult run_cdf_report(const Config& c, std::ostream* progress = nullptr);

// ---- trend checks ----------------------------------------------------------

// One named pass/fail verdict with the numbers that decided it. The CLI's
// --check mode and the acceptance suite share these so the bar cannot
// drift between them.
struct TrendCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

std::vector<TrendCheck> check_transfer(const TransferResult& r);
std::vector<TrendCheck> check_delivery(const DeliveryResult& r);
std::vector<TrendCheck> check_entropy(const EntropyResult& r);
std::vector<TrendCheck> check_merge(const MergeResult& r);
std::vector<TrendCheck> check_cdf(const CdfResult& r);

// ---- CSV emission ----------------------------------------------------------

void write_transfer_csv(const TransferResult& r, const std::string& dir);
void write_delivery_csv(const DeliveryResult& r, const std::string& dir);
void write_entropy_csv(const EntropyResult& r, const std::string& dir);
void write_merge_csv(const MergeResult& r, const std::string& dir);
void write_cdf_csv(const CdfResult& r, const std::string& dir);

}  // namespace courier::exp
