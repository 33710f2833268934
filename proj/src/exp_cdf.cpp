#include "courier/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace courier::exp {

double cdf_at(const CdfCurve& curve, double x) {
    auto it = std::upper_bound(curve.cost.begin(), curve.cost.end(), x + 1e-9);
    if (it == curve.cost.begin()) return 0.0;
    return curve.completion[static_cast<std::size_t>(it - curve.cost.begin()) - 1];
}

CdfResult run_cdf_report(const Config& c, std::ostream* progress) {
    nav::GridMap map = nav::load_map(c.map30);
    kb::Program dialog_prog = kb::parse_program(read_file(c.dialog_kb));
    kb::GroundProgram dialog_gp = kb::ground(dialog_prog);
    dialog::RequestSpace space = dialog::request_space_from(dialog_gp);
    dialog::Belief prior = dialog::init_belief(dialog_gp, space);
    const int num_rooms = static_cast<int>(space.rooms.size());
    const int nr = space.num_requests();

    CdfResult result;
    for (std::size_t bi = 0; bi < c.cdf_brs.size(); ++bi) {
        double br = c.cdf_brs[bi];
        model::PnTable pn = pn_for(map, br, br, c.step_cap_small, c);
        dialog::DialogPomdp pomdp = delivery_pomdp(space, pn, c);
        // one planner per rate: the root prior is shared, so decisions cache
        // across rooms
        dialog::DialogPlanner planner(pomdp, prior);

        for (int room = 0; room < num_rooms; ++room) {
            // the condition fixes the true room; the agent still starts from
            // the full prior
            std::vector<double> conditioned(nr, 0.0);
            double mass = 0.0;
            for (int r = 0; r < nr; ++r)
                if (space.room_of(r) == room) {
                    conditioned[r] = prior[r];
                    mass += prior[r];
                }
            if (mass <= 0.0)
                throw std::runtime_error("cdf: prior puts no mass on room " + space.rooms[room]);
            for (double& w : conditioned) w /= mass;

            std::vector<double> costs(c.cdf_trials);
            for (int trial = 0; trial < c.cdf_trials; ++trial) {
                Rng rng = make_rng(c.seed, 0x9000000000ULL + bi * 0x10000000ULL +
                                               static_cast<uint64_t>(room) * 0x1000000ULL + trial);
                int request = static_cast<int>(sample_index(rng, conditioned));
                dialog::DialogResult dlg = dialog::run_dialog(planner, request, rng);
                costs[trial] = dlg.qa_cost;
            }

            std::sort(costs.begin(), costs.end());
            CdfCurve curve;
            curve.room = space.rooms[room];
            curve.br = br;
            for (std::size_t i = 0; i < costs.size(); ++i) {
                bool last_of_value = i + 1 == costs.size() || costs[i + 1] > costs[i] + 1e-12;
                if (last_of_value) {
                    curve.cost.push_back(costs[i]);
                    curve.completion.push_back(static_cast<double>(i + 1) / costs.size());
                }
            }
            result.curves.push_back(std::move(curve));
        }
        if (progress) *progress << "cdf br=" << fmt(br) << ": " << num_rooms << " rooms done\n";
    }
    return result;
}

namespace {

const CdfCurve* find_curve(const CdfResult& r, const std::string& room, double br) {
    for (const CdfCurve& curve : r.curves)
        if (curve.room == room && std::abs(curve.br - br) < 1e-12) return &curve;
    return nullptr;
}

std::vector<double> union_support(const CdfCurve& a, const CdfCurve& b) {
    std::vector<double> xs = a.cost;
    xs.insert(xs.end(), b.cost.begin(), b.cost.end());
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

}  // namespace

std::vector<TrendCheck> check_cdf(const CdfResult& r) {
    std::vector<TrendCheck> checks;

    bool shaped = !r.curves.empty();
    std::string shape_detail = shaped ? "all curves step upward to at most 1" : "no curves";
    for (const CdfCurve& curve : r.curves) {
        if (!shaped) break;
        if (curve.cost.empty() || curve.cost.size() != curve.completion.size()) {
            shaped = false;
            shape_detail = curve.room + " br=" + fmt(curve.br) + " is empty";
            break;
        }
        for (std::size_t i = 0; i + 1 < curve.cost.size(); ++i)
            if (curve.cost[i + 1] <= curve.cost[i] ||
                curve.completion[i + 1] < curve.completion[i]) {
                shaped = false;
                shape_detail = curve.room + " br=" + fmt(curve.br) + " is not a step function";
                break;
            }
        if (shaped && curve.completion.back() > 1.0 + 1e-9) {
            shaped = false;
            shape_detail = curve.room + " br=" + fmt(curve.br) + " exceeds 1";
        }
    }
    checks.push_back({"cdf: completion curves step upward to at most 1", shaped, shape_detail});

    std::vector<double> brs;
    for (const CdfCurve& curve : r.curves)
        if (std::find(brs.begin(), brs.end(), curve.br) == brs.end()) brs.push_back(curve.br);
    std::sort(brs.begin(), brs.end());

    if (brs.size() >= 2) {
        const CdfCurve* low = find_curve(r, "room2", brs.front());
        const CdfCurve* high = find_curve(r, "room2", brs.back());
        bool pass = low && high;
        std::string detail = "room2 curve missing";
        if (pass) {
            double worst = 0.0, lead = 0.0;
            for (double x : union_support(*low, *high)) {
                double gap = cdf_at(*low, x) - cdf_at(*high, x);
                worst = std::min(worst, gap);
                lead = std::max(lead, gap);
            }
            pass = worst >= -1e-9 && lead > 1e-9;
            detail = "largest completion lead " + fmt(lead) + ", worst inversion " + fmt(-worst);
        }
        checks.push_back({"cdf: room2 completion shifts right as blocking rises", pass, detail});
    }

    for (double br : brs) {
        const CdfCurve* easy = find_curve(r, "room4", br);
        const CdfCurve* hard = find_curve(r, "room2", br);
        bool pass = easy && hard;
        std::string detail = "curve missing";
        if (pass) {
            double worst = 0.0;
            for (double x : union_support(*easy, *hard))
                worst = std::min(worst, cdf_at(*easy, x) - cdf_at(*hard, x));
            pass = worst >= -1e-9;
            detail = "worst shortfall " + fmt(-worst);
        }
        checks.push_back(
            {"cdf br=" + fmt(br) + ": the easy room completes at no more cost than the hard one",
             pass, detail});
    }
    return checks;
}

}  // namespace courier::exp
