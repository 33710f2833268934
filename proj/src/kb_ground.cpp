#include "courier/kb.hpp"

#include <algorithm>
#include <functional>
#include <set>

// Grounding: instantiate variables, prune instances refuted by extensional
// facts, then index everything for fast per-world evaluation. Variable
// domains come from the attribute literals a variable appears in, falling
// back to the constants seen at its predicate argument positions.

namespace courier::kb {

namespace {

constexpr uint64_t kBindingCap = 20000000;  // instantiation work guard

struct Interner {
    GroundProgram& gp;

    int pred_id(const std::string& key) {
        auto it = gp.pred_index.find(key);
        if (it != gp.pred_index.end()) return it->second;
        int id = (int)gp.pred_names.size();
        gp.pred_index.emplace(key, id);
        gp.pred_names.push_back(key);
        gp.pred_is_fact.push_back(false);
        gp.pred_is_idb.push_back(false);
        return id;
    }
};

std::string ground_pred_key(const std::string& name, const std::vector<std::string>& args) {
    std::string key = name;
    if (!args.empty()) {
        key += "(";
        for (size_t i = 0; i < args.size(); ++i) {
            if (i) key += ",";
            key += args[i];
        }
        key += ")";
    }
    return key;
}

using Binding = std::unordered_map<std::string, std::string>;

std::string subst(const Term& t, const Binding& b) {
    if (!t.is_var) return t.text;
    auto it = b.find(t.text);
    if (it == b.end()) throw SemanticError("unbound variable '" + t.text + "'");
    return it->second;
}

struct Grounder {
    const Program& p;
    GroundProgram& gp;
    Interner intern;

    std::unordered_map<std::string, const SortDecl*> sorts;
    std::unordered_map<std::string, const AttrDecl*> attr_decl;
    std::set<std::string> idb_preds;                                  // names with rules
    std::unordered_map<std::string, std::vector<std::vector<std::string>>> edb_facts;  // name -> arg tuples
    uint64_t bindings_tried = 0;

    explicit Grounder(const Program& prog, GroundProgram& out) : p(prog), gp(out), intern{out} {}

    void run() {
        declare();
        collect_facts();
        for (const auto& r : p.rules) ground_rule(r);
        for (const auto& a : p.pr_atoms) ground_pr_atom(a);
        stratify();
        check_attr_dependencies();
        build_pr_buckets();
        gp.world_count = 1;
        for (const auto& vals : gp.attr_values) {
            gp.world_count *= vals.size();
            if (gp.world_count > kWorldCap * 16) break;  // saturate, callers compare against kWorldCap
        }
    }

    void declare() {
        for (const auto& s : p.sorts) {
            if (sorts.count(s.name)) throw SemanticError("duplicate sort '" + s.name + "'");
            sorts[s.name] = &s;
        }
        for (const auto& a : p.attrs) {
            if (attr_decl.count(a.name)) throw SemanticError("duplicate attribute '" + a.name + "'");
            auto si = sorts.find(a.sort);
            if (si == sorts.end()) throw SemanticError("attribute '" + a.name + "' uses undeclared sort '" + a.sort + "'");
            attr_decl[a.name] = &a;
            int idx = (int)gp.attr_names.size();
            gp.attr_index[a.name] = idx;
            gp.attr_names.push_back(a.name);
            gp.attr_values.push_back(si->second->values);
            gp.value_index.emplace_back();
            for (size_t v = 0; v < si->second->values.size(); ++v)
                gp.value_index.back()[si->second->values[v]] = (int)v;
        }
        for (const auto& r : p.rules) idb_preds.insert(r.head.name);
    }

    void collect_facts() {
        for (const auto& f : p.facts) {
            if (f.kind == Literal::Kind::Attribute) {
                auto [a, v] = attr_value(f, {});
                gp.attr_facts.emplace_back(a, v);
            } else {
                if (attr_decl.count(f.name))
                    throw SemanticError("'" + f.name + "' is a random attribute, fact must use '='");
                std::vector<std::string> args;
                args.reserve(f.args.size());
                for (const auto& t : f.args) args.push_back(t.text);
                int id = intern.pred_id(ground_pred_key(f.name, args));
                gp.pred_is_fact[id] = true;
                edb_facts[f.name].push_back(std::move(args));
            }
        }
    }

    std::pair<int, int> attr_value(const Literal& l, const Binding& b) {
        auto it = gp.attr_index.find(l.name);
        if (it == gp.attr_index.end()) throw SemanticError("undeclared attribute '" + l.name + "'");
        int a = it->second;
        std::string val = subst(l.value, b);
        auto vi = gp.value_index[a].find(val);
        if (vi == gp.value_index[a].end())
            throw SemanticError("value '" + val + "' not in sort of attribute '" + l.name + "'");
        return {a, vi->second};
    }

    // The candidate domain for each variable of one statement.
    std::unordered_map<std::string, std::vector<std::string>> var_domains(const std::vector<const Literal*>& lits,
                                                                          int line) {
        std::unordered_map<std::string, std::vector<std::string>> dom;
        auto merge = [&](const std::string& var, const std::vector<std::string>& vals) {
            auto it = dom.find(var);
            if (it == dom.end()) {
                dom[var] = vals;
                return;
            }
            std::vector<std::string> keep;
            std::set<std::string> have(vals.begin(), vals.end());
            for (const auto& v : it->second)
                if (have.count(v)) keep.push_back(v);
            it->second = std::move(keep);
        };
        for (const auto* l : lits) {
            if (l->kind == Literal::Kind::Attribute) {
                if (l->value.is_var) {
                    auto it = gp.attr_index.find(l->name);
                    if (it == gp.attr_index.end()) throw SemanticError("undeclared attribute '" + l->name + "'");
                    merge(l->value.text, gp.attr_values[it->second]);
                }
            }
        }
        // fall back to constants observed in extensional facts
        for (const auto* l : lits) {
            if (l->kind != Literal::Kind::Predicate) continue;
            for (size_t i = 0; i < l->args.size(); ++i) {
                if (!l->args[i].is_var || dom.count(l->args[i].text)) continue;
                if (idb_preds.count(l->name)) continue;
                std::set<std::string> seen;
                auto fi = edb_facts.find(l->name);
                if (fi != edb_facts.end())
                    for (const auto& tuple : fi->second)
                        if (i < tuple.size()) seen.insert(tuple[i]);
                dom[l->args[i].text] = std::vector<std::string>(seen.begin(), seen.end());
            }
        }
        for (const auto* l : lits) {
            auto need = [&](const Term& t) {
                if (t.is_var && !dom.count(t.text))
                    throw SemanticError("line " + std::to_string(line) + ": cannot infer a domain for variable '" +
                                        t.text + "'");
            };
            for (const auto& t : l->args) need(t);
            if (l->kind == Literal::Kind::Attribute) need(l->value);
        }
        return dom;
    }

    // Enumerate bindings; positive extensional body literals drive the
    // search (iterate their fact tuples), everything else filters.
    void enumerate_bindings(const std::vector<const Literal*>& lits, int line,
                            const std::function<void(const Binding&)>& emit) {
        auto dom = var_domains(lits, line);

        std::vector<const Literal*> drivers;  // positive EDB predicate literals with vars
        std::vector<std::string> loose;       // remaining vars filled from domains
        std::set<std::string> covered;
        for (const auto* l : lits) {
            if (l->kind == Literal::Kind::Predicate && !l->negated && !idb_preds.count(l->name)) {
                bool has_var = std::any_of(l->args.begin(), l->args.end(), [](const Term& t) { return t.is_var; });
                if (has_var) {
                    drivers.push_back(l);
                    for (const auto& t : l->args)
                        if (t.is_var) covered.insert(t.text);
                }
            }
        }
        for (const auto& [var, vals] : dom)
            if (!covered.count(var)) loose.push_back(var);
        std::sort(loose.begin(), loose.end());

        Binding b;
        std::function<void(size_t)> loop_loose = [&](size_t i) {
            if (i == loose.size()) {
                emit(b);
                return;
            }
            for (const auto& v : dom[loose[i]]) {
                b[loose[i]] = v;
                loop_loose(i + 1);
            }
            b.erase(loose[i]);
        };
        std::function<void(size_t)> loop_driver = [&](size_t i) {
            if (++bindings_tried > kBindingCap) throw SemanticError("grounding too large");
            if (i == drivers.size()) {
                loop_loose(0);
                return;
            }
            const Literal* l = drivers[i];
            auto fi = edb_facts.find(l->name);
            if (fi == edb_facts.end()) return;  // no facts, no instances
            for (const auto& tuple : fi->second) {
                if (tuple.size() != l->args.size()) continue;
                std::vector<std::string> added;
                bool ok = true;
                for (size_t k = 0; k < tuple.size(); ++k) {
                    const Term& t = l->args[k];
                    if (!t.is_var) {
                        if (t.text != tuple[k]) { ok = false; break; }
                        continue;
                    }
                    auto bi = b.find(t.text);
                    if (bi != b.end()) {
                        if (bi->second != tuple[k]) { ok = false; break; }
                    } else {
                        b[t.text] = tuple[k];
                        added.push_back(t.text);
                    }
                }
                if (ok) loop_driver(i + 1);
                for (const auto& v : added) b.erase(v);
            }
        };
        loop_driver(0);
    }

    // Returns false if the instance is statically refuted (extensional
    // literal with no matching fact); verified extensional literals vanish.
    bool ground_body(const std::vector<Literal>& body, const Binding& b, std::vector<GLit>& out) {
        for (const auto& l : body) {
            if (l.kind == Literal::Kind::Attribute) {
                auto [a, v] = attr_value(l, b);
                out.push_back({Literal::Kind::Attribute, l.negated, a, v});
                continue;
            }
            std::vector<std::string> args;
            args.reserve(l.args.size());
            for (const auto& t : l.args) args.push_back(subst(t, b));
            bool idb = idb_preds.count(l.name) != 0;
            int id = intern.pred_id(ground_pred_key(l.name, args));
            gp.pred_is_idb[id] = gp.pred_is_idb[id] || idb;
            if (!idb) {
                bool holds = gp.pred_is_fact[id];
                if (holds == l.negated) return false;
                continue;  // statically true, drop
            }
            out.push_back({Literal::Kind::Predicate, l.negated, id, -1});
        }
        return true;
    }

    void ground_rule(const Rule& r) {
        std::vector<const Literal*> lits{&r.head};
        for (const auto& l : r.body) lits.push_back(&l);
        enumerate_bindings(lits, r.line, [&](const Binding& b) {
            GRule gr;
            if (!ground_body(r.body, b, gr.body)) return;
            std::vector<std::string> args;
            for (const auto& t : r.head.args) args.push_back(subst(t, b));
            int id = intern.pred_id(ground_pred_key(r.head.name, args));
            gp.pred_is_idb[id] = true;
            gr.head = {Literal::Kind::Predicate, false, id, -1};
            gp.rules.push_back(std::move(gr));
        });
    }

    void ground_pr_atom(const PrAtom& a) {
        auto it = gp.attr_index.find(a.attr);
        if (it == gp.attr_index.end()) throw SemanticError("pr-atom for undeclared attribute '" + a.attr + "'");
        int attr = it->second;
        if (gp.pr_groups.empty()) gp.pr_groups.resize(gp.attr_names.size());

        Literal head = Literal::attr(a.attr, a.value);
        std::vector<const Literal*> lits{&head};
        for (const auto& l : a.cond) lits.push_back(&l);
        enumerate_bindings(lits, a.line, [&](const Binding& b) {
            std::vector<GLit> cond;
            if (!ground_body(a.cond, b, cond)) return;
            auto [ga, gv] = attr_value(head, b);
            (void)ga;
            add_to_group(attr, cond, gv, a.prob.value(), a.line);
        });
    }

    // Groups share identical ground conditions so a world evaluates each
    // condition once and reads off the distribution fragment.
    void add_to_group(int attr, std::vector<GLit>& cond, int value, double prob, int line) {
        auto key_less = [](const GLit& x, const GLit& y) {
            return std::tie(x.kind, x.negated, x.a, x.v) < std::tie(y.kind, y.negated, y.a, y.v);
        };
        std::sort(cond.begin(), cond.end(), key_less);
        cond.erase(std::unique(cond.begin(), cond.end(),
                               [](const GLit& x, const GLit& y) {
                                   return x.kind == y.kind && x.negated == y.negated && x.a == y.a && x.v == y.v;
                               }),
                   cond.end());
        auto& groups = gp.pr_groups[attr];
        GPrGroup* g = nullptr;
        for (auto& cand : groups) {
            if (cand.cond.size() != cond.size()) continue;
            bool same = true;
            for (size_t i = 0; i < cond.size(); ++i) {
                const auto& x = cand.cond[i];
                const auto& y = cond[i];
                if (x.kind != y.kind || x.negated != y.negated || x.a != y.a || x.v != y.v) { same = false; break; }
            }
            if (same) { g = &cand; break; }
        }
        if (!g) {
            groups.push_back(GPrGroup{});
            g = &groups.back();
            g->cond = cond;
        }
        for (auto& [v, p] : g->entries) {
            if (v == value) {
                if (std::abs(p - prob) > 1e-12)
                    throw SemanticError("line " + std::to_string(line) + ": conflicting pr-atoms for " +
                                        gp.attr_names[attr] + "=" + gp.attr_values[attr][value]);
                return;  // exact duplicate
            }
        }
        g->entries.emplace_back(value, prob);
        g->mass += prob;
        if (g->mass > 1.0 + 1e-9)
            throw SemanticError("line " + std::to_string(line) + ": pr-atom group mass " + std::to_string(g->mass) +
                                " exceeds 1 for attribute '" + gp.attr_names[attr] + "'");
    }

    // Predicate-level stratification; negative edges may not sit on cycles.
    void stratify() {
        // map ground instance -> predicate name component; we stratify at the
        // name level which is coarser but sound
        std::unordered_map<std::string, int> name_id;
        auto nid = [&](int pred_instance) {
            const std::string& key = gp.pred_names[pred_instance];
            auto paren = key.find('(');
            std::string name = paren == std::string::npos ? key : key.substr(0, paren);
            auto it = name_id.find(name);
            if (it != name_id.end()) return it->second;
            int id = (int)name_id.size();
            name_id.emplace(name, id);
            return id;
        };
        struct Edge { int from, to; bool neg; };
        std::vector<Edge> edges;
        std::set<int> nodes;
        for (const auto& r : gp.rules) {
            int h = nid(r.head.a);
            nodes.insert(h);
            for (const auto& l : r.body) {
                if (l.kind != Literal::Kind::Predicate) continue;
                int b = nid(l.a);
                nodes.insert(b);
                edges.push_back({b, h, l.negated});
            }
        }
        // longest-path strata: stratum(h) >= stratum(b) (+1 if negated)
        std::unordered_map<int, int> stratum;
        for (int n : nodes) stratum[n] = 0;
        size_t iters = 0, limit = (nodes.size() + 1) * (edges.size() + 1) + 1;
        bool changed = true;
        while (changed) {
            if (++iters > limit) throw SemanticError("program is not stratifiable (negation cycle)");
            changed = false;
            for (const auto& e : edges) {
                int need = stratum[e.from] + (e.neg ? 1 : 0);
                if (stratum[e.to] < need) {
                    stratum[e.to] = need;
                    changed = true;
                    if (stratum[e.to] > (int)nodes.size()) throw SemanticError("program is not stratifiable (negation cycle)");
                }
            }
        }
        int max_s = 0;
        for (auto& r : gp.rules) {
            r.stratum = stratum[nid(r.head.a)];
            max_s = std::max(max_s, r.stratum);
        }
        std::stable_sort(gp.rules.begin(), gp.rules.end(),
                          [](const GRule& a, const GRule& b) { return a.stratum < b.stratum; });
        gp.num_strata = gp.rules.empty() ? 0 : max_s + 1;
    }

    // Attribute A depends on attribute B when some pr-atom condition for A
    // mentions B, directly or through derived predicates. Must be acyclic
    // for the selection product to define a distribution.
    void check_attr_dependencies() {
        size_t n = gp.attr_names.size();
        if (gp.pr_groups.empty()) gp.pr_groups.resize(n);

        // attributes feeding each predicate name, via rule bodies (transitive)
        std::unordered_map<std::string, std::set<int>> pred_attrs;
        auto name_of = [&](int pred_instance) {
            const std::string& key = gp.pred_names[pred_instance];
            auto paren = key.find('(');
            return paren == std::string::npos ? key : key.substr(0, paren);
        };
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& r : gp.rules) {
                auto& target = pred_attrs[name_of(r.head.a)];
                size_t before = target.size();
                for (const auto& l : r.body) {
                    if (l.kind == Literal::Kind::Attribute) target.insert(l.a);
                    else {
                        const auto& src = pred_attrs[name_of(l.a)];
                        target.insert(src.begin(), src.end());
                    }
                }
                changed = changed || target.size() != before;
            }
        }

        std::vector<std::set<int>> deps(n);
        auto add_lit = [&](int attr, const GLit& l) {
            if (l.kind == Literal::Kind::Attribute) deps[attr].insert(l.a);
            else {
                const auto& src = pred_attrs[name_of(l.a)];
                deps[attr].insert(src.begin(), src.end());
            }
        };
        for (size_t a = 0; a < n; ++a)
            for (const auto& g : gp.pr_groups[a])
                for (const auto& l : g.cond) add_lit((int)a, l);
        for (const auto& decl : p.attrs) {
            int a = gp.attr_index.at(decl.name);
            for (const auto& l : decl.guard) {
                // guards are ungrounded; resolve at the name level
                if (l.kind == Literal::Kind::Attribute) {
                    auto it = gp.attr_index.find(l.name);
                    if (it == gp.attr_index.end()) throw SemanticError("guard mentions undeclared attribute '" + l.name + "'");
                    deps[a].insert(it->second);
                } else {
                    const auto& src = pred_attrs[l.name];
                    deps[a].insert(src.begin(), src.end());
                }
            }
        }

        // cycle check by repeated removal of dependency-free attributes
        std::vector<int> indeg(n, 0);
        std::vector<std::set<int>> rev(n);
        for (size_t a = 0; a < n; ++a) {
            deps[a].erase((int)a);  // self-loop would be caught as cycle; spec treats self-conditioning via worlds
            for (int b : deps[a]) rev[b].insert((int)a);
            indeg[a] = (int)deps[a].size();
        }
        std::vector<int> ready;
        for (size_t a = 0; a < n; ++a)
            if (indeg[a] == 0) ready.push_back((int)a);
        size_t removed = 0;
        while (!ready.empty()) {
            int b = ready.back();
            ready.pop_back();
            ++removed;
            for (int a : rev[b])
                if (--indeg[a] == 0) ready.push_back(a);
        }
        if (removed != n) {
            std::string cyc;
            for (size_t a = 0; a < n; ++a)
                if (indeg[a] > 0) cyc += (cyc.empty() ? "" : ", ") + gp.attr_names[a];
            throw SemanticError("cyclic attribute dependencies among: " + cyc);
        }
    }

    void build_pr_buckets() {
        size_t n = gp.attr_names.size();
        if (gp.pr_groups.empty()) gp.pr_groups.resize(n);
        gp.pr_bucket.assign(n, {});
        gp.pr_bucket_attr.assign(n, -1);
        gp.pr_catchall.assign(n, {});
        for (size_t a = 0; a < n; ++a) {
            // choose the most selective bucketing attribute: the positive
            // condition attribute with the largest domain used by most groups
            std::unordered_map<int, int> votes;
            for (const auto& g : gp.pr_groups[a])
                for (const auto& l : g.cond)
                    if (l.kind == Literal::Kind::Attribute && !l.negated) votes[l.a]++;
            int best = -1;
            long long best_score = -1;
            for (auto [attr, count] : votes) {
                long long score = (long long)count * (long long)gp.attr_values[attr].size();
                if (score > best_score) { best_score = score; best = attr; }
            }
            gp.pr_bucket_attr[a] = best;
            if (best >= 0) gp.pr_bucket[a].assign(gp.attr_values[best].size(), {});
            for (size_t gi = 0; gi < gp.pr_groups[a].size(); ++gi) {
                const auto& g = gp.pr_groups[a][gi];
                int key = -1;
                if (best >= 0)
                    for (const auto& l : g.cond)
                        if (l.kind == Literal::Kind::Attribute && !l.negated && l.a == best) { key = l.v; break; }
                if (key >= 0) gp.pr_bucket[a][key].push_back((int)gi);
                else gp.pr_catchall[a].push_back((int)gi);
            }
        }
    }
};

}  // namespace

int GroundProgram::attr_of(const std::string& name) const {
    auto it = attr_index.find(name);
    if (it == attr_index.end()) throw SemanticError("unknown attribute '" + name + "'");
    return it->second;
}

int GroundProgram::value_of(int attr, const std::string& val) const {
    auto it = value_index[attr].find(val);
    if (it == value_index[attr].end())
        throw SemanticError("unknown value '" + val + "' for attribute '" + attr_names[attr] + "'");
    return it->second;
}

GroundProgram ground(const Program& p) {
    GroundProgram gp;
    Grounder g(p, gp);
    g.run();
    return gp;
}

}  // namespace courier::kb
