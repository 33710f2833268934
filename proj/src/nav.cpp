#include "courier/nav.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

namespace courier::nav {

const char* move_name(Move m) {
    switch (m) {
        case Move::Up: return "up";
        case Move::Down: return "down";
        case Move::Left: return "left";
        case Move::Right: return "right";
    }
    return "?";
}

std::optional<Move> move_from_name(const std::string& name) {
    if (name == "up") return Move::Up;
    if (name == "down") return Move::Down;
    if (name == "left") return Move::Left;
    if (name == "right") return Move::Right;
    return std::nullopt;
}

int GridMap::neighbor(int cell, Move m) const {
    int r = row(cell), c = col(cell);
    switch (m) {
        case Move::Up: --r; break;
        case Move::Down: ++r; break;
        case Move::Left: --c; break;
        case Move::Right: ++c; break;
    }
    if (r < 0 || r >= height || c < 0 || c >= width) return -1;
    return index(r, c);
}

namespace {

bool legal_label(char c) {
    return c == '.' || c == '#' || c == 'S' || (c >= '1' && c <= '5') || (c >= 'a' && c <= 'd');
}

void check_connected(const GridMap& m, char label, const std::vector<int>& cells) {
    std::vector<char> seen(m.cells.size(), 0);
    std::vector<int> stack{cells[0]};
    seen[cells[0]] = 1;
    size_t found = 1;
    while (!stack.empty()) {
        int cur = stack.back();
        stack.pop_back();
        for (int mv = 0; mv < kNumMoves; ++mv) {
            int nb = m.neighbor(cur, (Move)mv);
            if (nb < 0 || seen[nb] || m.cells[nb] != label) continue;
            seen[nb] = 1;
            ++found;
            stack.push_back(nb);
        }
    }
    if (found != cells.size())
        throw MapError(std::string("label '") + label + "' is not connected");
}

}  // namespace

GridMap parse_map(const std::string& text) {
    GridMap m;
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> grid;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string trimmed = line;
        trimmed.erase(0, trimmed.find_first_not_of(" \t"));
        if (trimmed.empty() || trimmed[0] == '%') continue;
        if (trimmed.rfind("br ", 0) == 0) {
            if (!grid.empty()) throw MapError("line " + std::to_string(lineno) + ": br lines must precede the grid");
            std::istringstream ls(trimmed);
            std::string kw, area, time, rate;
            ls >> kw >> area >> time >> rate;
            if (area.size() != 1 || area[0] < 'a' || area[0] > 'd' || time.empty() || rate.empty())
                throw MapError("line " + std::to_string(lineno) + ": malformed br line");
            Frac r;
            try {
                r = parse_frac(rate);
            } catch (const std::exception&) {
                throw MapError("line " + std::to_string(lineno) + ": bad rate '" + rate + "'");
            }
            if (r.num < 0 || Frac(1) < r)
                throw MapError("line " + std::to_string(lineno) + ": rate outside [0,1]");
            m.br.set(area[0], time, r);
            if (time != "*" && std::find(m.times.begin(), m.times.end(), time) == m.times.end())
                m.times.push_back(time);
            continue;
        }
        grid.push_back(trimmed);
    }
    if (grid.empty()) throw MapError("map has no grid rows");
    m.height = (int)grid.size();
    m.width = (int)grid[0].size();
    for (size_t r = 0; r < grid.size(); ++r) {
        if ((int)grid[r].size() != m.width)
            throw MapError("grid row " + std::to_string(r + 1) + " has width " + std::to_string(grid[r].size()) +
                           ", expected " + std::to_string(m.width));
        for (char c : grid[r]) {
            if (!legal_label(c)) throw MapError(std::string("illegal cell '") + c + "'");
            m.cells.push_back(c);
        }
    }
    for (int i = 0; i < (int)m.cells.size(); ++i) {
        char c = m.cells[i];
        if (c == 'S') {
            if (m.shop != -1) throw MapError("more than one shop cell");
            m.shop = i;
        } else if (c >= '1' && c <= '5') {
            m.rooms[c].push_back(i);
        } else if (c >= 'a' && c <= 'd') {
            m.areas[c].push_back(i);
        }
    }
    if (m.shop == -1) throw MapError("no shop cell");
    for (const auto& [label, cells] : m.rooms) check_connected(m, label, cells);
    for (const auto& [label, cells] : m.areas) check_connected(m, label, cells);

    // doors: first room cell adjacent to a traversable non-room cell
    for (const auto& [label, cells] : m.rooms) {
        for (int cell : cells) {
            for (int mv = 0; mv < kNumMoves && !m.door.count(label); ++mv) {
                int nb = m.neighbor(cell, (Move)mv);
                if (nb >= 0 && !m.wall(nb) && m.cells[nb] != label) m.door[label] = cell;
            }
            if (m.door.count(label)) break;
        }
        if (!m.door.count(label)) throw MapError(std::string("room '") + label + "' has no door");
    }

    // every room must be reachable from the shop over non-wall cells
    {
        std::vector<char> seen(m.cells.size(), 0);
        std::vector<int> stack{m.shop};
        seen[m.shop] = 1;
        while (!stack.empty()) {
            int cur = stack.back();
            stack.pop_back();
            for (int mv = 0; mv < kNumMoves; ++mv) {
                int nb = m.neighbor(cur, (Move)mv);
                if (nb < 0 || seen[nb] || m.wall(nb)) continue;
                seen[nb] = 1;
                stack.push_back(nb);
            }
        }
        for (const auto& [label, d] : m.door)
            if (!seen[d]) throw MapError(std::string("room '") + label + "' unreachable from the shop");
    }
    return m;
}

GridMap load_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MapError("cannot open map file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_map(buf.str());
}

std::string render_map(const GridMap& m) {
    std::string out;
    for (const auto& [key, rate] : m.br.rates) {
        out += "br ";
        out += key.first;
        out += " " + key.second + " " + rate.str() + "\n";
    }
    for (int r = 0; r < m.height; ++r) {
        out.append(m.cells.begin() + (size_t)r * m.width, m.cells.begin() + (size_t)(r + 1) * m.width);
        out += "\n";
    }
    return out;
}

BrTable uniform_br(Frac rate) {
    BrTable t;
    for (char area = 'a'; area <= 'd'; ++area) t.set(area, "*", rate);
    return t;
}

std::vector<std::pair<int, Frac>> true_transition(const GridMap& map, const BrTable& br, Frac p_base,
                                                  const std::string& time, int cell, Move move) {
    if (cell < 0 || cell >= (int)map.cells.size() || map.wall(cell))
        throw std::invalid_argument("true_transition: cell is not traversable");
    if (p_base.num < 0 || Frac(1) < p_base) throw std::invalid_argument("true_transition: p_base outside [0,1]");

    int intended = map.neighbor(cell, move);
    std::map<int, Frac> out;
    if (intended < 0 || map.wall(intended)) {
        out[cell] = Frac(1);  // walking into a wall keeps you where you are
    } else {
        Frac p_eff = p_base;
        if (map.blocking(intended)) p_eff = p_eff * (Frac(1) - br.rate(map.label(intended), time));
        Frac residual = Frac(1) - p_eff;
        Frac share = residual / Frac(3);

        out[intended] = p_eff;
        // stay plus the two lateral slips; lateral walls fold into stay
        Move lat1, lat2;
        if (move == Move::Up || move == Move::Down) { lat1 = Move::Left; lat2 = Move::Right; }
        else { lat1 = Move::Up; lat2 = Move::Down; }
        auto add = [&](int target, Frac p) {
            auto [it, fresh] = out.emplace(target, p);
            if (!fresh) it->second = it->second + p;
        };
        add(cell, share);
        for (Move lat : {lat1, lat2}) {
            int lc = map.neighbor(cell, lat);
            add(lc >= 0 && !map.wall(lc) ? lc : cell, share);
        }
    }
    std::vector<std::pair<int, Frac>> result(out.begin(), out.end());
    return result;  // std::map iteration is already cell-sorted
}

NavTask task_to_room(const GridMap& map, char room, int step_cap, double step_cost, double r_max) {
    auto it = map.door.find(room);
    if (it == map.door.end()) throw std::invalid_argument(std::string("no room '") + room + "' in map");
    return NavTask{{it->second}, step_cap, step_cost, r_max};
}

NavTask task_to_cell(int goal, int step_cap, double step_cost, double r_max) {
    return NavTask{{goal}, step_cap, step_cost, r_max};
}

mdp::Mdp build_true_mdp(const GridMap& map, const BrTable& br, Frac p_base, const std::string& time,
                        const NavTask& task, double gamma) {
    mdp::Mdp m;
    m.init((int)map.cells.size(), kNumMoves, gamma);
    std::vector<char> is_goal(map.cells.size(), 0);
    for (int g : task.goal_cells) is_goal[g] = 1;
    for (int s = 0; s < m.num_states; ++s) {
        if (map.wall(s) || is_goal[s]) {
            m.terminal[s] = 1;
            continue;
        }
        for (int a = 0; a < kNumMoves; ++a) {
            auto row = true_transition(map, br, p_base, time, s, (Move)a);
            double goal_mass = 0.0;
            auto& tr = m.trans[s][a];
            tr.reserve(row.size());
            for (const auto& [next, p] : row) {
                tr.push_back({next, p.value()});
                if (is_goal[next]) goal_mass += p.value();
            }
            m.reward[s][a] = task.step_cost + task.r_max * goal_mass;
        }
    }
    return m;
}

NavEnv::NavEnv(const GridMap& map, BrTable br, Frac p_base, std::string time, NavTask task, uint64_t seed)
    : map_(map),
      br_(std::move(br)),
      p_base_(p_base),
      time_(std::move(time)),
      task_(std::move(task)),
      rng_(make_rng(seed)),
      is_goal_(map.cells.size(), 0),
      cache_((size_t)map.cells.size() * kNumMoves),
      cached_((size_t)map.cells.size() * kNumMoves, 0) {
    for (int g : task_.goal_cells) {
        if (g < 0 || g >= (int)map_.cells.size() || map_.wall(g))
            throw std::invalid_argument("nav env: goal cell not traversable");
        is_goal_[g] = 1;
    }
    reset();
}

int NavEnv::reset() { return reset(map_.shop); }

int NavEnv::reset(int start_cell) {
    if (start_cell < 0 || start_cell >= (int)map_.cells.size() || map_.wall(start_cell))
        throw std::invalid_argument("nav env: bad start cell");
    cell_ = start_cell;
    steps_ = 0;
    done_ = is_goal_[cell_] != 0;
    reached_goal_ = done_;
    return cell_;
}

NavEnv::StepResult NavEnv::step(Move m) {
    if (done_) throw std::logic_error("nav env: episode already finished");
    size_t key = (size_t)cell_ * kNumMoves + (size_t)m;
    if (!cached_[key]) {
        auto exact = true_transition(map_, br_, p_base_, time_, cell_, m);
        auto& row = cache_[key];
        row.reserve(exact.size());
        for (const auto& [c, p] : exact) row.emplace_back(c, p.value());
        cached_[key] = 1;
    }
    const auto& row = cache_[key];
    double u = uniform01(rng_);
    double acc = 0.0;
    int next = row.back().first;
    for (const auto& [c, p] : row) {
        acc += p;
        if (u < acc) { next = c; break; }
    }
    cell_ = next;
    ++steps_;
    double reward = task_.step_cost;
    if (is_goal_[cell_]) {
        reward += task_.r_max;
        done_ = true;
        reached_goal_ = true;
    } else if (steps_ >= task_.step_cap) {
        // the cap ends the episode but is not part of the dynamics; no extra
        // penalty here, or a model learner would blame the unlucky last pair
        done_ = true;
    }
    return {cell_, reward, done_};
}

}  // namespace courier::nav
