#include "courier/experiments.hpp"

#include <algorithm>
#include <cmath>

namespace courier::exp {

namespace {

// Root-action screen without expanding the expectimax tree. Serving is
// certain once the best immediate serve beats the clairvoyant ceiling any
// question could still reach; asking is certain once even ask-once-then-
// serve already matches the best serve. Only the sliver in between needs
// the real planner.
enum class Screen { Serve, Ask, Unknown };

Screen screen_root(const dialog::DialogPomdp& p, const dialog::Belief& b, int* serve_request) {
    auto [best_req, serve_best] = dialog::best_serve(p, b);
    if (p.plan_depth == 0 || p.turn_cap <= 1) {
        *serve_request = best_req;
        return Screen::Serve;
    }
    const int nr = p.space.num_requests();
    double clairvoyant = 0.0;
    for (int r = 0; r < nr; ++r) clairvoyant += b[r] * p.serve_gain[r][r];
    double min_cost = *std::min_element(p.cost.begin(), p.cost.end());
    if (serve_best > clairvoyant - min_cost) {
        *serve_request = best_req;
        return Screen::Serve;
    }
    for (int q = 0; q < p.num_questions(); ++q) {
        double value = -p.cost[q];
        for (int o = 0; o < p.obs_count[q]; ++o) {
            const auto& lk = p.like[q][o];
            double po = 0.0;
            for (int r = 0; r < nr; ++r) po += b[r] * lk[r];
            if (po <= 0.0) continue;
            dialog::Belief nb(nr);
            double inv = 1.0 / po;
            for (int r = 0; r < nr; ++r) nb[r] = b[r] * lk[r] * inv;
            value += po * dialog::best_serve(p, nb).second;
        }
        if (value >= serve_best) return Screen::Ask;
    }
    return Screen::Unknown;
}

}  // namespace

EntropyResult run_entropy_study(const Config& c, std::ostream* progress) {
    nav::GridMap map = nav::load_map(c.map30);
    kb::Program dialog_prog = kb::parse_program(read_file(c.dialog_kb));
    kb::GroundProgram dialog_gp = kb::ground(dialog_prog);
    dialog::RequestSpace space = dialog::request_space_from(dialog_gp);
    const int num_rooms = static_cast<int>(space.rooms.size());

    EntropyResult result;
    for (std::size_t bi = 0; bi < c.delivery_brs.size(); ++bi) {
        double br = c.delivery_brs[bi];
        model::PnTable pn = pn_for(map, br, br, c.step_cap_small, c);
        dialog::DialogPomdp pomdp = delivery_pomdp(space, pn, c);

        std::vector<std::vector<double>> samples(num_rooms);
        int planner_calls = 0;
        for (int draw = 0; draw < c.entropy_draws; ++draw) {
            Rng rng = make_rng(c.seed, 0x6000000000ULL + bi * 0x10000000ULL + draw);
            dialog::Belief b = dirichlet_sample(rng, c.entropy_alpha, space.num_requests());

            int request = -1;
            Screen screen = screen_root(pomdp, b, &request);
            if (screen == Screen::Ask) continue;
            if (screen == Screen::Unknown) {
                ++planner_calls;
                int action = dialog::plan_dialog_action(pomdp, b);
                if (!pomdp.is_serve(action)) continue;
                request = pomdp.serve_request(action);
            }
            samples[space.room_of(request)].push_back(dialog::belief_entropy(b));
        }

        for (int room = 0; room < num_rooms; ++room) {
            EntropyCell cell;
            cell.room = space.rooms[room];
            cell.br = br;
            cell.count = static_cast<int>(samples[room].size());
            if (cell.count > 0) {
                stats::SampleStats s = stats::summarize(samples[room]);
                cell.mean = s.mean;
                cell.stddev = s.stddev;
                cell.max = s.max;
            }
            result.cells.push_back(std::move(cell));
        }
        if (progress)
            *progress << "entropy br=" << fmt(br) << ": " << planner_calls
                      << " draws needed the full planner\n";
    }
    return result;
}

namespace {

const EntropyCell* find_cell(const EntropyResult& r, const std::string& room, double br) {
    for (const EntropyCell& cell : r.cells)
        if (cell.room == room && std::abs(cell.br - br) < 1e-12) return &cell;
    return nullptr;
}

}  // namespace

std::vector<TrendCheck> check_entropy(const EntropyResult& r) {
    std::vector<TrendCheck> checks;
    std::vector<std::string> rooms;
    std::vector<double> brs;
    for (const EntropyCell& cell : r.cells) {
        if (std::find(rooms.begin(), rooms.end(), cell.room) == rooms.end())
            rooms.push_back(cell.room);
        if (std::find(brs.begin(), brs.end(), cell.br) == brs.end()) brs.push_back(cell.br);
    }
    std::sort(brs.begin(), brs.end());

    bool populated = true;
    std::string empty_detail;
    for (const EntropyCell& cell : r.cells)
        if (cell.count == 0 && populated) {
            populated = false;
            empty_detail = cell.room + " at br=" + fmt(cell.br) + " has no serves";
        }
    checks.push_back({"entropy: every room/br cell has serve samples", populated,
                      populated ? "all cells populated" : empty_detail});

    for (const std::string& room : rooms) {
        bool falling = true;
        std::string path;
        for (std::size_t i = 0; i < brs.size(); ++i) {
            const EntropyCell* cell = find_cell(r, room, brs[i]);
            if (!cell || cell->count == 0) {
                falling = false;
                break;
            }
            if (i > 0) {
                const EntropyCell* prev = find_cell(r, room, brs[i - 1]);
                if (!(cell->mean < prev->mean)) falling = false;
                path += " -> ";
            }
            path += fmt(cell->mean);
        }
        checks.push_back({"entropy: " + room + " serve threshold tightens as blocking rises",
                          falling, path});
    }

    // The unreliable-room chain: harder rooms force more certainty before a
    // serve, so their mean entropy at serve time sits lower.
    const char* chain[] = {"room5", "room2", "room1"};
    for (double br : brs) {
        bool ordered = true;
        std::string path;
        for (int i = 0; i < 3; ++i) {
            const EntropyCell* cell = find_cell(r, chain[i], br);
            if (!cell || cell->count == 0) {
                ordered = false;
                break;
            }
            if (i > 0) {
                const EntropyCell* prev = find_cell(r, chain[i - 1], br);
                if (!(prev->mean <= cell->mean)) ordered = false;
                path += " <= ";
            }
            path += fmt(cell->mean);
        }
        checks.push_back({"entropy br=" + fmt(br) + ": harder rooms serve at lower entropy",
                          ordered, path});
    }
    return checks;
}

}  // namespace courier::exp
