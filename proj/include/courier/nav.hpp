#pragma once

// Grid navigation with blocking areas. Maps are ASCII: '.' free, '#' wall,
// 'S' the shop, digits 1-5 room cells, letters a-d blocking-area cells.
// Optional header lines `br <area> <time> <rate>` declare per-time blocking
// rates ('*' matches any time). Movement succeeds toward the intended
// neighbor with p_base, attenuated by (1 - br) when that neighbor sits in a
// blocking area; the leftover mass splits evenly between staying put and the
// two lateral neighbors, with walls folding their share back into "stay".

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "courier/mdp.hpp"
#include "courier/prob.hpp"

namespace courier::nav {

struct MapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Move { Up = 0, Down = 1, Left = 2, Right = 3 };
inline constexpr int kNumMoves = 4;
const char* move_name(Move m);
std::optional<Move> move_from_name(const std::string& name);

// Blocking rate per (area label, time name). '*' rows are time wildcards.
struct BrTable {
    std::map<std::pair<char, std::string>, Frac> rates;

    Frac rate(char area, const std::string& time) const {
        auto it = rates.find({area, time});
        if (it != rates.end()) return it->second;
        it = rates.find({area, "*"});
        if (it != rates.end()) return it->second;
        return Frac(0);
    }
    void set(char area, const std::string& time, Frac r) { rates[{area, time}] = r; }
};

struct GridMap {
    int width = 0, height = 0;
    std::vector<char> cells;  // row-major labels
    int shop = -1;
    std::map<char, std::vector<int>> rooms;  // '1'..'5'
    std::map<char, std::vector<int>> areas;  // 'a'..'d'
    std::map<char, int> door;                // per room: first cell adjacent to the outside
    BrTable br;                              // from header lines
    std::vector<std::string> times;          // distinct names seen in br lines

    int index(int row, int col) const { return row * width + col; }
    int row(int cell) const { return cell / width; }
    int col(int cell) const { return cell % width; }
    char label(int cell) const { return cells[cell]; }
    bool wall(int cell) const { return cells[cell] == '#'; }
    bool blocking(int cell) const { return cells[cell] >= 'a' && cells[cell] <= 'd'; }
    // -1 when the move leaves the grid
    int neighbor(int cell, Move m) const;
};

GridMap parse_map(const std::string& text);
GridMap load_map(const std::string& path);
std::string render_map(const GridMap& m);

// All areas get the same rate at every time; handy for rate sweeps.
BrTable uniform_br(Frac rate);

// Exact successor distribution for one (cell, move). Entries are unique,
// sorted by cell, and sum to exactly 1 in rational arithmetic.
std::vector<std::pair<int, Frac>> true_transition(const GridMap& map, const BrTable& br, Frac p_base,
                                                  const std::string& time, int cell, Move move);

struct NavTask {
    std::vector<int> goal_cells;
    int step_cap = 200;
    double step_cost = -1.0;
    double r_max = 100.0;
};

// Goal = the room's door cell (P^N endpoints are shop and door cells).
NavTask task_to_room(const GridMap& map, char room, int step_cap, double step_cost = -1.0, double r_max = 100.0);
NavTask task_to_cell(int goal, int step_cap, double step_cost = -1.0, double r_max = 100.0);

// Ground-truth MDP over all cells (walls are inert terminals). Reward
// R(s,a) = step_cost + r_max * P(successor is a goal); goals are terminal.
mdp::Mdp build_true_mdp(const GridMap& map, const BrTable& br, Frac p_base, const std::string& time,
                        const NavTask& task, double gamma);

// Seeded episodic simulator.
class NavEnv {
public:
    NavEnv(const GridMap& map, BrTable br, Frac p_base, std::string time, NavTask task, uint64_t seed);

    struct StepResult {
        int cell;
        double reward;
        bool done;
    };

    int reset();                // start at the shop
    int reset(int start_cell);
    StepResult step(Move m);    // throws std::logic_error once done

    int cell() const { return cell_; }
    int steps_taken() const { return steps_; }
    bool done() const { return done_; }
    bool reached_goal() const { return reached_goal_; }
    const NavTask& task() const { return task_; }
    const GridMap& map() const { return map_; }

private:
    const GridMap& map_;
    BrTable br_;
    Frac p_base_;
    std::string time_;
    NavTask task_;
    Rng rng_;
    int cell_ = -1;
    int steps_ = 0;
    bool done_ = true;
    bool reached_goal_ = false;
    std::vector<char> is_goal_;
    // successor distributions materialize lazily and memoize per (cell,move)
    std::vector<std::vector<std::pair<int, double>>> cache_;
    std::vector<char> cached_;
};

}  // namespace courier::nav
