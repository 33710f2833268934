#include "courier/kb.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

// Exact inference. A world fixes every attribute; its weight is the product
// over attributes of either a matching pr-atom's probability or the uniform
// share of whatever mass the matching pr-atoms left unclaimed. Conditional
// queries pin evidence attributes before enumerating, so the loop only walks
// the free attributes' product space.

namespace courier::kb {

namespace {

struct WorldEval {
    const GroundProgram& gp;
    std::vector<char> derived;              // per ground predicate instance
    std::vector<std::pair<int, double>> fired;  // scratch: value -> prob of fired groups

    explicit WorldEval(const GroundProgram& g) : gp(g), derived(g.pred_names.size(), 0) {}

    bool lit_holds(const GLit& l, const std::vector<int>& world) const {
        bool t = l.kind == Literal::Kind::Attribute ? world[l.a] == l.v : derived[l.a] != 0;
        return l.negated ? !t : t;
    }

    void derive(const std::vector<int>& world) {
        for (size_t i = 0; i < derived.size(); ++i) derived[i] = gp.pred_is_fact[i] ? 1 : 0;
        size_t i = 0;
        while (i < gp.rules.size()) {
            size_t begin = i;
            int stratum = gp.rules[i].stratum;
            size_t end = i;
            while (end < gp.rules.size() && gp.rules[end].stratum == stratum) ++end;
            bool changed = true;
            while (changed) {
                changed = false;
                for (size_t r = begin; r < end; ++r) {
                    const GRule& rule = gp.rules[r];
                    if (derived[rule.head.a]) continue;
                    bool all = true;
                    for (const auto& l : rule.body)
                        if (!lit_holds(l, world)) { all = false; break; }
                    if (all) {
                        derived[rule.head.a] = 1;
                        changed = true;
                    }
                }
            }
            i = end;
        }
    }

    // Selection factor of attribute a in this world. Call derive() first.
    double attr_factor(int a, const std::vector<int>& world) {
        fired.clear();
        double mass = 0.0;
        auto consider = [&](const GPrGroup& g) {
            for (const auto& l : g.cond)
                if (!lit_holds(l, world)) return;
            for (const auto& e : g.entries) {
                for (const auto& f : fired)
                    if (f.first == e.first)
                        throw SemanticError("pr-atoms fire twice for attribute '" + gp.attr_names[a] +
                                            "' value '" + gp.attr_values[a][e.first] + "' in one world");
                fired.push_back(e);
            }
            mass += g.mass;
        };
        const auto& groups = gp.pr_groups[a];
        int key_attr = gp.pr_bucket_attr[a];
        if (key_attr >= 0)
            for (int gi : gp.pr_bucket[a][world[key_attr]]) consider(groups[gi]);
        for (int gi : gp.pr_catchall[a]) consider(groups[gi]);

        if (mass > 1.0 + 1e-9)
            throw SemanticError("pr-atom mass " + std::to_string(mass) + " exceeds 1 for attribute '" +
                                gp.attr_names[a] + "' in one world");
        int v = world[a];
        for (const auto& f : fired)
            if (f.first == v) return f.second;
        size_t dom = gp.attr_values[a].size();
        size_t unmentioned = dom - fired.size();
        if (unmentioned == 0) return 0.0;  // unreachable: v would have been mentioned
        double residual = 1.0 - mass;
        if (residual < 0) residual = 0;    // float slack only, real overshoot threw above
        return residual / (double)unmentioned;
    }

    double weight(const std::vector<int>& world) {
        derive(world);
        double w = 1.0;
        for (size_t a = 0; a < gp.attr_names.size() && w > 0; ++a) w *= attr_factor((int)a, world);
        return w;
    }
};

struct Pins {
    std::vector<int> value;  // per attribute, -1 = free
    bool contradictory = false;
};

Pins base_pins(const GroundProgram& gp) {
    Pins p;
    p.value.assign(gp.attr_names.size(), -1);
    for (auto [a, v] : gp.attr_facts) {
        if (p.value[a] != -1 && p.value[a] != v) p.contradictory = true;
        p.value[a] = v;
    }
    return p;
}

uint64_t free_world_count(const GroundProgram& gp, const Pins& pins) {
    uint64_t n = 1;
    for (size_t a = 0; a < gp.attr_names.size(); ++a) {
        if (pins.value[a] != -1) continue;
        n *= gp.attr_values[a].size();
        if (n > kWorldCap) return n;
    }
    return n;
}

// Odometer over the free attributes; invokes fn(world, weight, eval) for
// every pinned-consistent world (zero-weight worlds included). The evaluator
// still holds the world's derived predicates when fn runs.
void for_each_world(const GroundProgram& gp, const Pins& pins,
                    const std::function<void(const std::vector<int>&, double, WorldEval&)>& fn) {
    if (pins.contradictory) return;
    uint64_t count = free_world_count(gp, pins);
    if (count > kWorldCap)
        throw SemanticError("world count " + std::to_string(count) + " exceeds cap " + std::to_string(kWorldCap));

    size_t n = gp.attr_names.size();
    std::vector<int> world(n, 0);
    std::vector<size_t> free_attrs;
    for (size_t a = 0; a < n; ++a) {
        if (pins.value[a] != -1) world[a] = pins.value[a];
        else free_attrs.push_back(a);
    }
    WorldEval eval(gp);
    while (true) {
        fn(world, eval.weight(world), eval);
        size_t i = 0;
        for (; i < free_attrs.size(); ++i) {
            size_t a = free_attrs[i];
            if (++world[a] < (int)gp.attr_values[a].size()) break;
            world[a] = 0;
        }
        if (i == free_attrs.size()) break;
    }
}

struct ResolvedEvidence {
    Pins pins;
    std::vector<GLit> checks;  // literals that cannot pin (negations, predicates)
};

GLit resolve_literal(const GroundProgram& gp, const Literal& l) {
    if (l.kind == Literal::Kind::Attribute) {
        if (l.value.is_var) throw SemanticError("literal '" + print_literal(l) + "' is not ground");
        int a = gp.attr_of(l.name);
        int v = gp.value_of(a, l.value.text);
        return {Literal::Kind::Attribute, l.negated, a, v};
    }
    std::string key = l.name;
    if (!l.args.empty()) {
        key += "(";
        for (size_t i = 0; i < l.args.size(); ++i) {
            if (l.args[i].is_var) throw SemanticError("literal '" + print_literal(l) + "' is not ground");
            if (i) key += ",";
            key += l.args[i].text;
        }
        key += ")";
    }
    auto it = gp.pred_index.find(key);
    if (it == gp.pred_index.end()) throw SemanticError("unknown atom '" + key + "'");
    return {Literal::Kind::Predicate, l.negated, it->second, -1};
}

ResolvedEvidence resolve_evidence(const GroundProgram& gp, const std::vector<Literal>& evidence) {
    ResolvedEvidence r;
    r.pins = base_pins(gp);
    for (const auto& l : evidence) {
        GLit g = resolve_literal(gp, l);
        if (g.kind == Literal::Kind::Attribute && !g.negated) {
            if (r.pins.value[g.a] != -1 && r.pins.value[g.a] != g.v) r.pins.contradictory = true;
            r.pins.value[g.a] = g.v;
        } else {
            r.checks.push_back(g);
        }
    }
    return r;
}

}  // namespace

WorldSet enumerate_worlds(const GroundProgram& gp) {
    WorldSet ws;
    Pins pins = base_pins(gp);
    double total = 0.0;
    for_each_world(gp, pins, [&](const std::vector<int>& w, double weight, WorldEval&) {
        ws.worlds.push_back(w);
        ws.probs.push_back(weight);
        total += weight;
    });
    if (ws.worlds.empty() || total <= 0.0)
        throw SemanticError("contradictory program: no consistent world carries mass");
    for (auto& p : ws.probs) p /= total;
    return ws;
}

double query(const GroundProgram& gp, const Literal& target, const std::vector<Literal>& evidence) {
    ResolvedEvidence ev = resolve_evidence(gp, evidence);
    GLit tgt = resolve_literal(gp, target);
    double num = 0.0, den = 0.0;
    for_each_world(gp, ev.pins, [&](const std::vector<int>& w, double weight, WorldEval& eval) {
        if (weight <= 0.0) return;
        for (const auto& c : ev.checks)
            if (!eval.lit_holds(c, w)) return;
        den += weight;
        if (eval.lit_holds(tgt, w)) num += weight;
    });
    if (den <= 0.0) throw SemanticError("evidence has zero probability");
    return num / den;
}

std::vector<double> query_attribute(const GroundProgram& gp, const std::string& attr,
                                    const std::vector<Literal>& evidence) {
    int a = gp.attr_of(attr);
    ResolvedEvidence ev = resolve_evidence(gp, evidence);
    std::vector<double> dist(gp.attr_values[a].size(), 0.0);
    double den = 0.0;
    for_each_world(gp, ev.pins, [&](const std::vector<int>& w, double weight, WorldEval& eval) {
        if (weight <= 0.0) return;
        for (const auto& c : ev.checks)
            if (!eval.lit_holds(c, w)) return;
        den += weight;
        dist[w[a]] += weight;
    });
    if (den <= 0.0) throw SemanticError("evidence has zero probability");
    for (auto& p : dist) p /= den;
    return dist;
}

std::vector<double> query_joint(const GroundProgram& gp, const std::vector<std::string>& attrs,
                                const std::vector<Literal>& evidence) {
    std::vector<int> ids;
    size_t cells = 1;
    for (const auto& name : attrs) {
        ids.push_back(gp.attr_of(name));
        cells *= gp.attr_values[ids.back()].size();
    }
    ResolvedEvidence ev = resolve_evidence(gp, evidence);
    std::vector<double> dist(cells, 0.0);
    double den = 0.0;
    for_each_world(gp, ev.pins, [&](const std::vector<int>& w, double weight, WorldEval& eval) {
        if (weight <= 0.0) return;
        for (const auto& c : ev.checks)
            if (!eval.lit_holds(c, w)) return;
        den += weight;
        size_t idx = 0;
        for (int id : ids) idx = idx * gp.attr_values[id].size() + (size_t)w[id];
        dist[idx] += weight;
    });
    if (den <= 0.0) throw SemanticError("evidence has zero probability");
    for (auto& p : dist) p /= den;
    return dist;
}

}  // namespace courier::kb
