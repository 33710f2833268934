#pragma once

// Independent reference implementations the tests compare the library
// against: a brute-force possible-world evaluator for the knowledge base, a
// finite-horizon expectimax for MDP values, Monte Carlo rollout estimators,
// and the random instance generators those comparisons draw from. Everything
// here recomputes results from first principles on purpose; none of it may
// call the code path it is checking.

#include <vector>

#include "courier/kb.hpp"
#include "courier/mdp.hpp"
#include "courier/nav.hpp"
#include "courier/prob.hpp"

namespace courier::test {

// ---- knowledge base ---------------------------------------------------------

// Full joint over every attribute assignment of a ground program (0-ary
// predicates, no variables). Worlds that contradict an attribute fact are
// dropped entirely; the rest are weighted and normalized. Rules must form a
// DAG over predicates, heads in rule order.
struct NaiveWorlds {
    std::vector<std::string> attrs;                  // declaration order
    std::vector<std::vector<std::string>> values;    // per attribute
    std::vector<std::vector<int>> worlds;            // value index per attribute
    std::vector<double> probs;                       // normalized
    std::vector<std::vector<char>> pred_true;        // per world, per predicate seen
    std::vector<std::string> preds;

    int attr_of(const std::string& name) const;
    int pred_of(const std::string& name) const;      // -1 when never seen
    bool lit_holds(std::size_t world, const kb::Literal& l) const;
};

NaiveWorlds naive_enumerate(const kb::Program& p);

// P(target | evidence) under the naive joint; -1 when the evidence carries
// zero probability (callers assert the library throws there).
double naive_query(const NaiveWorlds& w, const kb::Literal& target,
                   const std::vector<kb::Literal>& evidence = {});

// Random acyclic ground program: per-attribute sorts, a DAG of 0-ary
// predicates, and pr-atoms whose conditions only reach earlier attributes,
// with partial mass and mutually exclusive condition groups mixed in. The
// free world count never exceeds max_worlds.
kb::Program random_program(Rng& rng, uint64_t max_worlds = 4096);

// Ground literal over the program's attributes and predicates, negated some
// of the time; usable as a query target or one evidence conjunct.
kb::Literal random_literal(Rng& rng, const kb::Program& p);

// ---- mdp --------------------------------------------------------------------

// Backward induction to a fixed horizon, V_0 = 0. Terminal states stay 0,
// empty rows are skipped like the solver skips them.
std::vector<double> expectimax_values(const mdp::Mdp& m, int horizon);

// Success frequency of `rollouts` policy walks capped at step_cap.
double mc_policy_success(const mdp::Mdp& m, const std::vector<int>& policy, int start,
                         const std::vector<int>& success, int step_cap, int rollouts, Rng& rng);

// Random tabular MDP: gamma in [0.8, 0.9] so a horizon-200 expectimax pins
// the infinite-horizon value far below the comparison tolerance.
mdp::Mdp random_mdp(Rng& rng, int max_states);

// Random connected grid with a shop, one room, and sometimes a blocking
// area; small enough that exact success propagation stays cheap.
nav::GridMap random_grid(Rng& rng);

}  // namespace courier::test
