#include "support/oracles.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace courier::test {

namespace {

// predicate truth for one world, heads resolved in rule order; sound for the
// DAG-shaped programs the generator emits because every body literal refers
// to a predicate whose rules all appear earlier
std::map<std::string, bool> derive_preds(const kb::Program& p, const std::vector<int>& world,
                                         const std::vector<std::string>& attrs,
                                         const std::vector<std::vector<std::string>>& values) {
    std::map<std::string, bool> truth;
    for (const auto& f : p.facts)
        if (f.kind == kb::Literal::Kind::Predicate) truth[f.name] = true;

    auto attr_pos = [&](const std::string& name) {
        for (std::size_t i = 0; i < attrs.size(); ++i)
            if (attrs[i] == name) return static_cast<int>(i);
        throw std::logic_error("oracle: unknown attribute " + name);
    };
    auto holds = [&](const kb::Literal& l) {
        bool t;
        if (l.kind == kb::Literal::Kind::Attribute) {
            int a = attr_pos(l.name);
            t = values[a][static_cast<std::size_t>(world[a])] == l.value.text;
        } else {
            auto it = truth.find(l.name);
            t = it != truth.end() && it->second;
        }
        return l.negated ? !t : t;
    };

    for (const auto& r : p.rules) {
        if (truth.count(r.head.name) && truth[r.head.name]) continue;
        bool all = true;
        for (const auto& l : r.body)
            if (!holds(l)) {
                all = false;
                break;
            }
        if (all) truth[r.head.name] = true;
    }
    return truth;
}

}  // namespace

int NaiveWorlds::attr_of(const std::string& name) const {
    for (std::size_t i = 0; i < attrs.size(); ++i)
        if (attrs[i] == name) return static_cast<int>(i);
    throw std::logic_error("oracle: unknown attribute " + name);
}

int NaiveWorlds::pred_of(const std::string& name) const {
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == name) return static_cast<int>(i);
    return -1;
}

bool NaiveWorlds::lit_holds(std::size_t world, const kb::Literal& l) const {
    bool t;
    if (l.kind == kb::Literal::Kind::Attribute) {
        int a = attr_of(l.name);
        t = values[static_cast<std::size_t>(a)][static_cast<std::size_t>(worlds[world][a])] ==
            l.value.text;
    } else {
        int id = pred_of(l.name);
        t = id >= 0 && pred_true[world][static_cast<std::size_t>(id)] != 0;
    }
    return l.negated ? !t : t;
}

NaiveWorlds naive_enumerate(const kb::Program& p) {
    NaiveWorlds out;
    for (const auto& a : p.attrs) {
        out.attrs.push_back(a.name);
        bool found = false;
        for (const auto& s : p.sorts)
            if (s.name == a.sort) {
                out.values.push_back(s.values);
                found = true;
            }
        if (!found) throw std::logic_error("oracle: attribute sort missing");
    }

    // every predicate name the program can mention
    std::set<std::string> pred_names;
    for (const auto& r : p.rules) {
        pred_names.insert(r.head.name);
        for (const auto& l : r.body)
            if (l.kind == kb::Literal::Kind::Predicate) pred_names.insert(l.name);
    }
    for (const auto& f : p.facts)
        if (f.kind == kb::Literal::Kind::Predicate) pred_names.insert(f.name);
    for (const auto& pa : p.pr_atoms)
        for (const auto& l : pa.cond)
            if (l.kind == kb::Literal::Kind::Predicate) pred_names.insert(l.name);
    out.preds.assign(pred_names.begin(), pred_names.end());

    // hard attribute facts pin values; contradicting worlds are not part of
    // the model at all
    std::vector<int> pinned(out.attrs.size(), -1);
    for (const auto& f : p.facts) {
        if (f.kind != kb::Literal::Kind::Attribute) continue;
        int a = out.attr_of(f.name);
        int v = -1;
        for (std::size_t i = 0; i < out.values[static_cast<std::size_t>(a)].size(); ++i)
            if (out.values[static_cast<std::size_t>(a)][i] == f.value.text)
                v = static_cast<int>(i);
        if (v < 0) throw std::logic_error("oracle: fact value outside sort");
        if (pinned[static_cast<std::size_t>(a)] != -1 &&
            pinned[static_cast<std::size_t>(a)] != v)
            return out;  // contradictory facts: empty model
        pinned[static_cast<std::size_t>(a)] = v;
    }

    std::vector<int> world(out.attrs.size(), 0);
    double total = 0.0;
    while (true) {
        bool consistent = true;
        for (std::size_t a = 0; a < world.size(); ++a)
            if (pinned[a] != -1 && world[a] != pinned[a]) consistent = false;
        if (consistent) {
            std::map<std::string, bool> truth = derive_preds(p, world, out.attrs, out.values);
            auto holds = [&](const kb::Literal& l) {
                bool t;
                if (l.kind == kb::Literal::Kind::Attribute) {
                    int a = out.attr_of(l.name);
                    t = out.values[static_cast<std::size_t>(a)]
                                  [static_cast<std::size_t>(world[a])] == l.value.text;
                } else {
                    auto it = truth.find(l.name);
                    t = it != truth.end() && it->second;
                }
                return l.negated ? !t : t;
            };

            double weight = 1.0;
            for (std::size_t a = 0; a < out.attrs.size() && weight > 0.0; ++a) {
                double mass = 0.0;
                std::map<std::string, double> fired;
                for (const auto& pa : p.pr_atoms) {
                    if (pa.attr != out.attrs[a]) continue;
                    bool match = true;
                    for (const auto& c : pa.cond)
                        if (!holds(c)) {
                            match = false;
                            break;
                        }
                    if (!match) continue;
                    if (fired.count(pa.value.text))
                        throw std::logic_error("oracle: generator let two pr-atoms fire");
                    fired[pa.value.text] = pa.prob.value();
                    mass += pa.prob.value();
                }
                const std::string& val =
                    out.values[a][static_cast<std::size_t>(world[a])];
                auto it = fired.find(val);
                if (it != fired.end()) {
                    weight *= it->second;
                } else {
                    std::size_t unmentioned = out.values[a].size() - fired.size();
                    double residual = 1.0 - mass;
                    if (residual < 0.0) residual = 0.0;
                    weight *= unmentioned == 0 ? 0.0
                                               : residual / static_cast<double>(unmentioned);
                }
            }

            out.worlds.push_back(world);
            out.probs.push_back(weight);
            std::vector<char> row(out.preds.size(), 0);
            for (std::size_t i = 0; i < out.preds.size(); ++i) {
                auto it = truth.find(out.preds[i]);
                row[i] = it != truth.end() && it->second ? 1 : 0;
            }
            out.pred_true.push_back(std::move(row));
            total += out.probs.back();
        }

        std::size_t i = 0;
        for (; i < world.size(); ++i) {
            if (++world[i] < static_cast<int>(out.values[i].size())) break;
            world[i] = 0;
        }
        if (i == world.size()) break;
    }

    if (total > 0.0)
        for (auto& pr : out.probs) pr /= total;
    else
        out.worlds.clear();  // caller treats an empty model as "library must throw"
    return out;
}

double naive_query(const NaiveWorlds& w, const kb::Literal& target,
                   const std::vector<kb::Literal>& evidence) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < w.worlds.size(); ++i) {
        if (w.probs[i] <= 0.0) continue;
        bool keep = true;
        for (const auto& e : evidence)
            if (!w.lit_holds(i, e)) {
                keep = false;
                break;
            }
        if (!keep) continue;
        den += w.probs[i];
        if (w.lit_holds(i, target)) num += w.probs[i];
    }
    if (den <= 0.0) return -1.0;
    return num / den;
}

kb::Program random_program(Rng& rng, uint64_t max_worlds) {
    kb::Program p;
    auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<uint64_t>(n)); };

    // attributes with per-attribute sorts, product capped
    int want_attrs = 2 + pick(4);
    uint64_t worlds = 1;
    for (int a = 0; a < want_attrs; ++a) {
        int domain = 2 + pick(3);
        while (domain > 2 && worlds * static_cast<uint64_t>(domain) > max_worlds) --domain;
        if (worlds * static_cast<uint64_t>(domain) > max_worlds) break;
        worlds *= static_cast<uint64_t>(domain);
        kb::SortDecl s;
        s.name = "srt" + std::to_string(a);
        for (int v = 0; v < domain; ++v)
            s.values.push_back("a" + std::to_string(a) + "v" + std::to_string(v));
        p.sorts.push_back(s);
        p.attrs.push_back({"attr" + std::to_string(a), s.name, {}, 0});
    }
    const int na = static_cast<int>(p.attrs.size());

    auto attr_lit = [&](int a, bool allow_neg) {
        const auto& vals = p.sorts[static_cast<std::size_t>(a)].values;
        kb::Literal l = kb::Literal::attr(p.attrs[static_cast<std::size_t>(a)].name,
                                          kb::Term::cst(vals[static_cast<std::size_t>(
                                              pick(static_cast<int>(vals.size())))]));
        l.negated = allow_neg && pick(10) < 3;
        return l;
    };

    // booleans of three kinds: base facts (true), ghosts (mentioned but never
    // derivable, so statically false), and rule heads in DAG order
    int num_facts = pick(3);
    for (int f = 0; f < num_facts; ++f)
        p.facts.push_back(kb::Literal::pred("fact" + std::to_string(f)));
    int num_ghosts = pick(2);
    int num_heads = pick(4);

    // per predicate, the highest attribute its truth can depend on; needed to
    // keep pr-atom conditions acyclic
    std::vector<int> head_dep(static_cast<std::size_t>(num_heads), -1);
    auto pred_pool = [&](int upto_head) {
        std::vector<std::pair<std::string, int>> pool;  // name, attr dependency
        for (int f = 0; f < num_facts; ++f) pool.push_back({"fact" + std::to_string(f), -1});
        for (int g = 0; g < num_ghosts; ++g) pool.push_back({"ghost" + std::to_string(g), -1});
        for (int h = 0; h < upto_head; ++h)
            pool.push_back({"head" + std::to_string(h), head_dep[static_cast<std::size_t>(h)]});
        return pool;
    };

    for (int h = 0; h < num_heads; ++h) {
        int rules = 1 + pick(2);
        int dep = -1;
        for (int r = 0; r < rules; ++r) {
            kb::Rule rule;
            rule.head = kb::Literal::pred("head" + std::to_string(h));
            int body = 1 + pick(3);
            auto pool = pred_pool(h);
            for (int b = 0; b < body; ++b) {
                if (pool.empty() || pick(2) == 0) {
                    int a = pick(na);
                    rule.body.push_back(attr_lit(a, true));
                    dep = std::max(dep, a);
                } else {
                    auto& choice = pool[static_cast<std::size_t>(
                        pick(static_cast<int>(pool.size())))];
                    kb::Literal l = kb::Literal::pred(choice.first);
                    l.negated = pick(10) < 3;
                    rule.body.push_back(l);
                    dep = std::max(dep, choice.second);
                }
            }
            p.rules.push_back(rule);
        }
        head_dep[static_cast<std::size_t>(h)] = dep;
    }

    // pr-atoms per attribute: none, one unconditional group, groups keyed on
    // every value of an earlier attribute (mutually exclusive), or one group
    // gated on a predicate that cannot reach this attribute
    for (int a = 0; a < na; ++a) {
        const auto& vals = p.sorts[static_cast<std::size_t>(a)].values;
        auto add_group = [&](std::vector<kb::Literal> cond) {
            int den = 8 + 8 * pick(2);  // 8 or 16
            int left = den;
            int entries = 1 + pick(static_cast<int>(vals.size()));
            std::vector<int> order(vals.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
            for (std::size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[static_cast<std::size_t>(pick(static_cast<int>(i)))]);
            for (int e = 0; e < entries && left > 0; ++e) {
                int c = 1 + pick(left);
                left -= c;
                kb::PrAtom pa;
                pa.attr = p.attrs[static_cast<std::size_t>(a)].name;
                pa.value = kb::Term::cst(vals[static_cast<std::size_t>(order[static_cast<std::size_t>(e)])]);
                pa.cond = cond;
                pa.prob = Frac(c, den);
                p.pr_atoms.push_back(pa);
            }
        };
        switch (pick(4)) {
            case 0:
                break;
            case 1:
                add_group({});
                break;
            case 2: {
                if (a == 0) {
                    add_group({});
                    break;
                }
                int key = pick(a);
                for (const auto& kv : p.sorts[static_cast<std::size_t>(key)].values) {
                    if (pick(4) == 0) continue;  // some key values stay default
                    add_group({kb::Literal::attr(p.attrs[static_cast<std::size_t>(key)].name,
                                                 kb::Term::cst(kv))});
                }
                break;
            }
            default: {
                std::vector<std::pair<std::string, int>> pool = pred_pool(num_heads);
                std::vector<std::pair<std::string, int>> ok;
                for (auto& pr : pool)
                    if (pr.second < a) ok.push_back(pr);
                if (ok.empty()) {
                    add_group({});
                    break;
                }
                auto& choice = ok[static_cast<std::size_t>(pick(static_cast<int>(ok.size())))];
                kb::Literal l = kb::Literal::pred(choice.first);
                l.negated = pick(10) < 3;
                add_group({l});
                break;
            }
        }
    }

    // occasionally pin one attribute with a hard fact
    if (pick(4) == 0) {
        int a = pick(na);
        p.facts.push_back(attr_lit(a, false));
    }
    return p;
}

kb::Literal random_literal(Rng& rng, const kb::Program& p) {
    auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<uint64_t>(n)); };
    std::vector<std::string> preds;
    for (const auto& r : p.rules) preds.push_back(r.head.name);
    for (const auto& f : p.facts)
        if (f.kind == kb::Literal::Kind::Predicate) preds.push_back(f.name);
    kb::Literal l;
    if (!preds.empty() && pick(3) == 0) {
        l = kb::Literal::pred(preds[static_cast<std::size_t>(pick(static_cast<int>(preds.size())))]);
    } else {
        const auto& a = p.attrs[static_cast<std::size_t>(pick(static_cast<int>(p.attrs.size())))];
        const kb::SortDecl* sort = nullptr;
        for (const auto& s : p.sorts)
            if (s.name == a.sort) sort = &s;
        l = kb::Literal::attr(a.name,
                              kb::Term::cst(sort->values[static_cast<std::size_t>(
                                  pick(static_cast<int>(sort->values.size())))]));
    }
    l.negated = pick(4) == 0;
    return l;
}

std::vector<double> expectimax_values(const mdp::Mdp& m, int horizon) {
    std::vector<double> v(static_cast<std::size_t>(m.num_states), 0.0);
    std::vector<double> next(v.size(), 0.0);
    for (int h = 0; h < horizon; ++h) {
        for (int s = 0; s < m.num_states; ++s) {
            if (m.terminal[static_cast<std::size_t>(s)]) {
                next[static_cast<std::size_t>(s)] = 0.0;
                continue;
            }
            double best = 0.0;
            bool any = false;
            for (int a = 0; a < m.num_actions; ++a) {
                const auto& row = m.trans[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
                if (row.empty()) continue;
                double q = m.reward[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
                for (const auto& t : row)
                    q += m.gamma * t.prob * v[static_cast<std::size_t>(t.next)];
                if (!any || q > best) best = q;
                any = true;
            }
            next[static_cast<std::size_t>(s)] = any ? best : 0.0;
        }
        std::swap(v, next);
    }
    return v;
}

double mc_policy_success(const mdp::Mdp& m, const std::vector<int>& policy, int start,
                         const std::vector<int>& success, int step_cap, int rollouts, Rng& rng) {
    std::vector<char> is_success(static_cast<std::size_t>(m.num_states), 0);
    for (int s : success) is_success[static_cast<std::size_t>(s)] = 1;
    int hits = 0;
    for (int r = 0; r < rollouts; ++r) {
        int s = start;
        for (int t = 0; t <= step_cap; ++t) {
            if (is_success[static_cast<std::size_t>(s)]) {
                ++hits;
                break;
            }
            if (t == step_cap || m.terminal[static_cast<std::size_t>(s)]) break;
            int a = policy[static_cast<std::size_t>(s)];
            const auto& row = m.trans[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
            double u = uniform01(rng);
            double acc = 0.0;
            int next = row.back().next;
            for (const auto& tr : row) {
                acc += tr.prob;
                if (u < acc) {
                    next = tr.next;
                    break;
                }
            }
            s = next;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(rollouts);
}

mdp::Mdp random_mdp(Rng& rng, int max_states) {
    auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<uint64_t>(n)); };
    int n = 2 + pick(max_states - 1);
    int actions = 1 + pick(4);
    mdp::Mdp m;
    m.init(n, actions, 0.8 + 0.1 * uniform01(rng));
    for (int s = 0; s < n; ++s)
        if (pick(5) == 0 && s > 0) m.terminal[static_cast<std::size_t>(s)] = 1;
    for (int s = 0; s < n; ++s) {
        if (m.terminal[static_cast<std::size_t>(s)]) continue;
        bool any = false;
        for (int a = 0; a < actions; ++a) {
            if (any && pick(6) == 0) continue;  // unavailable action
            int outcomes = 1 + pick(3);
            std::vector<int> succ;
            for (int o = 0; o < outcomes; ++o) {
                int cand = pick(n);
                if (std::find(succ.begin(), succ.end(), cand) == succ.end()) succ.push_back(cand);
            }
            std::vector<double> w(succ.size());
            double total = 0.0;
            for (auto& x : w) {
                x = 0.05 + uniform01(rng);
                total += x;
            }
            auto& row = m.trans[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < succ.size(); ++i) {
                double pr = w[i] / total;
                row.push_back({succ[i], pr});
                acc += pr;
            }
            row.push_back({succ.back(), 1.0 - acc});  // exact unit row sum
            m.reward[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] =
                -2.0 + 4.0 * uniform01(rng);
            any = true;
        }
    }
    return m;
}

nav::GridMap random_grid(Rng& rng) {
    auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<uint64_t>(n)); };
    for (;;) {
        int w = 6 + pick(4), h = 6 + pick(4);
        std::vector<std::string> grid(static_cast<std::size_t>(h),
                                      std::string(static_cast<std::size_t>(w), '#'));
        for (int r = 1; r < h - 1; ++r)
            for (int c = 1; c < w - 1; ++c)
                grid[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
                    pick(5) == 0 ? '#' : '.';
        grid[1][1] = 'S';
        int rr = 1 + pick(h - 2), rc = 1 + pick(w - 2);
        if (rr == 1 && rc == 1) continue;
        grid[static_cast<std::size_t>(rr)][static_cast<std::size_t>(rc)] = '1';
        if (pick(2) == 0) {
            int ar = 1 + pick(h - 2), ac = 1 + pick(w - 2);
            char& cell = grid[static_cast<std::size_t>(ar)][static_cast<std::size_t>(ac)];
            if (cell == '.') cell = 'a';
        }

        std::string text = "br a * 1/4\n";
        for (const auto& row : grid) text += row + "\n";
        nav::GridMap map;
        try {
            map = nav::parse_map(text);
        } catch (const nav::MapError&) {
            continue;  // e.g. the room cell ended up sealed by walls
        }

        // keep only maps where the room is actually reachable
        std::vector<char> seen(map.cells.size(), 0);
        std::vector<int> queue{map.shop};
        seen[static_cast<std::size_t>(map.shop)] = 1;
        for (std::size_t qi = 0; qi < queue.size(); ++qi)
            for (int mv = 0; mv < nav::kNumMoves; ++mv) {
                int nb = map.neighbor(queue[qi], static_cast<nav::Move>(mv));
                if (nb >= 0 && !map.wall(nb) && !seen[static_cast<std::size_t>(nb)]) {
                    seen[static_cast<std::size_t>(nb)] = 1;
                    queue.push_back(nb);
                }
            }
        int room_cell = map.rooms.begin()->second.front();
        if (seen[static_cast<std::size_t>(room_cell)]) return map;
    }
}

}  // namespace courier::test
