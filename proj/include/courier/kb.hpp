#pragma once

// Logical-probabilistic knowledge base: sorts, 0-ary random attributes over
// those sorts, definite rules with stratified default negation, and pr-atoms
// that shape each attribute's distribution. Inference is exact possible-world
// enumeration. The fragment is deliberately small: rule heads are predicate
// literals, attribute literals appear in bodies/conditions/facts only.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "courier/prob.hpp"

namespace courier::kb {

struct ParseError : std::runtime_error {
    int line, col;
    ParseError(int line_, int col_, const std::string& what_)
        : std::runtime_error("line " + std::to_string(line_) + ", col " + std::to_string(col_) + ": " + what_),
          line(line_), col(col_) {}
};

struct SemanticError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A term is a constant symbol or a variable. Variables start uppercase.
struct Term {
    bool is_var = false;
    std::string text;

    static Term var(std::string v) { return {true, std::move(v)}; }
    static Term cst(std::string c) { return {false, std::move(c)}; }
    friend bool operator==(const Term& a, const Term& b) { return a.is_var == b.is_var && a.text == b.text; }
};

// Either `attr = value` (attribute literal, attr is a declared random
// attribute) or `pred(t1,...,tk)` / bare `pred` (predicate literal).
// `negated` is default negation and is only legal in bodies and conditions.
struct Literal {
    enum class Kind { Attribute, Predicate };
    Kind kind = Kind::Predicate;
    bool negated = false;
    std::string name;
    std::vector<Term> args;  // predicate arguments
    Term value;              // attribute value

    static Literal attr(std::string a, Term v) {
        Literal l;
        l.kind = Kind::Attribute;
        l.name = std::move(a);
        l.value = std::move(v);
        return l;
    }
    static Literal pred(std::string p, std::vector<Term> as = {}) {
        Literal l;
        l.kind = Kind::Predicate;
        l.name = std::move(p);
        l.args = std::move(as);
        return l;
    }
};

struct Rule {
    Literal head;                // predicate literal, never negated
    std::vector<Literal> body;   // empty body = fact (kept separately)
    int line = 0;
};

// pr(attr = value | cond1, ..., condk) = prob.
struct PrAtom {
    std::string attr;
    Term value;
    std::vector<Literal> cond;
    Frac prob;
    int line = 0;
};

struct SortDecl {
    std::string name;
    std::vector<std::string> values;
    int line = 0;
};

// #random attr : sort [if guard].  The guard joins the dependency graph but
// does not gate value selection; every world assigns every attribute.
struct AttrDecl {
    std::string name;
    std::string sort;
    std::vector<Literal> guard;
    int line = 0;
};

struct Program {
    std::vector<SortDecl> sorts;
    std::vector<AttrDecl> attrs;
    std::vector<Rule> rules;
    std::vector<Literal> facts;     // ground facts; attribute facts act as hard constraints
    std::vector<PrAtom> pr_atoms;
};

Program parse_program(const std::string& text);
std::string print_program(const Program& p);       // parseable round-trip form
std::string print_literal(const Literal& l);

// Replace-or-insert pr-atoms keyed on (attribute, value, condition set).
// Throws SemanticError on unknown attribute/value or if some (attribute,
// condition) group ends up with probability mass > 1.
void update_pr_atoms(Program& p, const std::vector<PrAtom>& updates);

// ---- Ground representation ----------------------------------------------

// Ground literal against interned ids. kind Attribute: a = attribute index,
// v = value index. kind Predicate: a = ground instance id, v unused.
struct GLit {
    Literal::Kind kind;
    bool negated = false;
    int a = -1;
    int v = -1;
};

struct GRule {
    GLit head;
    std::vector<GLit> body;
    int stratum = 0;
};

// One pr-atom group: a shared ground condition plus the value->prob fragment
// of the distribution it induces.
struct GPrGroup {
    std::vector<GLit> cond;
    std::vector<std::pair<int, double>> entries;  // (value index, prob), unique values
    double mass = 0.0;                            // sum of entries
};

struct GroundProgram {
    // attributes
    std::vector<std::string> attr_names;
    std::vector<std::vector<std::string>> attr_values;  // per attribute, its sort's values
    std::unordered_map<std::string, int> attr_index;
    std::vector<std::unordered_map<std::string, int>> value_index;

    // interned ground predicate instances ("pred" or "pred(c1,c2)")
    std::unordered_map<std::string, int> pred_index;
    std::vector<std::string> pred_names;
    std::vector<bool> pred_is_fact;        // base facts
    std::vector<bool> pred_is_idb;         // appears in some rule head

    std::vector<GRule> rules;              // sorted by stratum
    int num_strata = 0;

    // pr-atom groups per attribute, plus a per-(attribute,value) bucket index
    // on the largest-domain positive attribute literal of the condition so a
    // world only inspects plausibly matching groups.
    std::vector<std::vector<GPrGroup>> pr_groups;                 // [attr]
    std::vector<std::vector<std::vector<int>>> pr_bucket;         // [attr][key_attr value] -> group ids
    std::vector<int> pr_bucket_attr;                              // [attr] bucketing attribute or -1
    std::vector<std::vector<int>> pr_catchall;                    // [attr] group ids without usable key

    std::vector<std::pair<int, int>> attr_facts;  // pinned (attribute, value)

    uint64_t world_count = 0;  // product of attribute domain sizes

    int attr_of(const std::string& name) const;
    int value_of(int attr, const std::string& val) const;
};

inline constexpr uint64_t kWorldCap = 1000000;

// Instantiates variables, prunes on extensional facts, indexes pr-atoms,
// stratifies rules. Throws SemanticError on undeclared names, unsafe
// variables, negation cycles, cyclic attribute dependencies, or pr-atom
// groups with mass > 1.
GroundProgram ground(const Program& p);

// ---- Possible worlds ------------------------------------------------------

// A world is one value index per attribute.
struct WorldSet {
    std::vector<std::vector<int>> worlds;
    std::vector<double> probs;  // normalized
};

// All worlds consistent with the attribute facts, probabilities normalized.
// Throws SemanticError if the (free) world count exceeds kWorldCap or no
// world carries positive mass.
WorldSet enumerate_worlds(const GroundProgram& gp);

// P(target | evidence), both ground. Throws SemanticError on unknown atoms
// or zero-probability evidence.
double query(const GroundProgram& gp, const Literal& target, const std::vector<Literal>& evidence = {});

// Full conditional distribution of one attribute in a single enumeration
// pass; identical semantics to calling query per value.
std::vector<double> query_attribute(const GroundProgram& gp, const std::string& attr,
                                    const std::vector<Literal>& evidence = {});

// Joint conditional over several attributes, row-major in the given order.
std::vector<double> query_joint(const GroundProgram& gp, const std::vector<std::string>& attrs,
                                const std::vector<Literal>& evidence = {});

}  // namespace courier::kb
