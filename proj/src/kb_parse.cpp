#include "courier/kb.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace courier {

Frac parse_frac(const std::string& s) {
    auto bad = [&] { throw std::invalid_argument("not a number: '" + s + "'"); };
    if (s.empty()) bad();
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        size_t pos = 0;
        long long n = std::stoll(s.substr(0, slash), &pos);
        if (pos != slash) bad();
        long long d = std::stoll(s.substr(slash + 1), &pos);
        if (pos != s.size() - slash - 1) bad();
        return Frac(n, d);
    }
    auto dot = s.find('.');
    if (dot == std::string::npos) {
        size_t pos = 0;
        long long n = std::stoll(s, &pos);
        if (pos != s.size()) bad();
        return Frac(n);
    }
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    size_t frac_len = s.size() - dot - 1;
    if (frac_len == 0 || frac_len > 17) bad();
    bool neg = false;
    if (!digits.empty() && (digits[0] == '-' || digits[0] == '+')) {
        neg = digits[0] == '-';
        digits = digits.substr(1);
    }
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit((unsigned char)c); }))
        bad();
    long long n = 0;
    for (char c : digits) {
        if (n > (std::numeric_limits<long long>::max() - 9) / 10) bad();
        n = n * 10 + (c - '0');
    }
    long long d = 1;
    for (size_t i = 0; i < frac_len; ++i) d *= 10;
    return Frac(neg ? -n : n, d);
}

}  // namespace courier

namespace courier::kb {

namespace {

enum class Tok {
    Ident, Int, Number,       // Number: decimal or explicit fraction handled at use site
    LParen, RParen, LBrace, RBrace,
    Comma, Dot, DotDot, Eq, Bar, Colon, ColonDash, Slash,
    Random,                   // "#random"
    End,
};

struct Token {
    Tok kind;
    std::string text;
    int line, col;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) {}

    Token next() {
        skip_ws();
        int line = line_, col = col_;
        if (pos_ >= src_.size()) return {Tok::End, "", line, col};
        char c = src_[pos_];
        if (c == '#') {
            std::string word;
            advance();
            while (pos_ < src_.size() && (std::isalnum((unsigned char)src_[pos_]) || src_[pos_] == '_'))
                word += take();
            if (word != "random") throw ParseError(line, col, "unknown directive '#" + word + "'");
            return {Tok::Random, "#random", line, col};
        }
        if (std::isalpha((unsigned char)c) || c == '_') {
            std::string word;
            while (pos_ < src_.size() && (std::isalnum((unsigned char)src_[pos_]) || src_[pos_] == '_'))
                word += take();
            return {Tok::Ident, word, line, col};
        }
        if (std::isdigit((unsigned char)c) || (c == '.' && pos_ + 1 < src_.size() && std::isdigit((unsigned char)src_[pos_ + 1]))) {
            std::string num;
            bool saw_dot = false;
            while (pos_ < src_.size()) {
                char d = src_[pos_];
                if (std::isdigit((unsigned char)d)) {
                    num += take();
                } else if (d == '.' && !saw_dot && pos_ + 1 < src_.size() && std::isdigit((unsigned char)src_[pos_ + 1])) {
                    // a dot ends an integer statement unless digits follow
                    saw_dot = true;
                    num += take();
                } else {
                    break;
                }
            }
            return {saw_dot ? Tok::Number : Tok::Int, num, line, col};
        }
        switch (c) {
            case '(': advance(); return {Tok::LParen, "(", line, col};
            case ')': advance(); return {Tok::RParen, ")", line, col};
            case '{': advance(); return {Tok::LBrace, "{", line, col};
            case '}': advance(); return {Tok::RBrace, "}", line, col};
            case ',': advance(); return {Tok::Comma, ",", line, col};
            case '=': advance(); return {Tok::Eq, "=", line, col};
            case '|': advance(); return {Tok::Bar, "|", line, col};
            case '/': advance(); return {Tok::Slash, "/", line, col};
            case '.':
                advance();
                if (pos_ < src_.size() && src_[pos_] == '.') { advance(); return {Tok::DotDot, "..", line, col}; }
                return {Tok::Dot, ".", line, col};
            case ':':
                advance();
                if (pos_ < src_.size() && src_[pos_] == '-') { advance(); return {Tok::ColonDash, ":-", line, col}; }
                return {Tok::Colon, ":", line, col};
            default:
                throw ParseError(line, col, std::string("unexpected character '") + c + "'");
        }
    }

private:
    void skip_ws() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '%') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else if (std::isspace((unsigned char)c)) {
                advance();
            } else {
                break;
            }
        }
    }
    char take() {
        char c = src_[pos_];
        advance();
        return c;
    }
    void advance() {
        if (src_[pos_] == '\n') { ++line_; col_ = 1; } else { ++col_; }
        ++pos_;
    }

    const std::string& src_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;
};

class Parser {
public:
    explicit Parser(const std::string& src) : lex_(src) { bump(); }

    Program parse() {
        Program p;
        while (cur_.kind != Tok::End) {
            if (cur_.kind == Tok::Random) {
                parse_random(p);
            } else if (cur_.kind == Tok::Ident && cur_.text == "pr" && peek().kind == Tok::LParen) {
                parse_pr_atom(p);
            } else if (cur_.kind == Tok::Ident) {
                parse_sort_or_statement(p);
            } else {
                throw err("expected a statement");
            }
        }
        return p;
    }

private:
    ParseError err(const std::string& msg) const { return ParseError(cur_.line, cur_.col, msg + " (got '" + cur_.text + "')"); }

    void bump() {
        if (have_peek_) { cur_ = peek_; have_peek_ = false; }
        else cur_ = lex_.next();
    }
    const Token& peek() {
        if (!have_peek_) { peek_ = lex_.next(); have_peek_ = true; }
        return peek_;
    }
    void expect(Tok k, const char* what) {
        if (cur_.kind != k) throw err(std::string("expected ") + what);
        bump();
    }

    void parse_random(Program& p) {
        AttrDecl d;
        d.line = cur_.line;
        bump();  // #random
        if (cur_.kind != Tok::Ident) throw err("expected attribute name");
        d.name = cur_.text;
        bump();
        expect(Tok::Colon, "':'");
        if (cur_.kind != Tok::Ident) throw err("expected sort name");
        d.sort = cur_.text;
        bump();
        if (cur_.kind == Tok::Ident && cur_.text == "if") {
            bump();
            d.guard = parse_literals();
        }
        expect(Tok::Dot, "'.'");
        p.attrs.push_back(std::move(d));
    }

    void parse_pr_atom(Program& p) {
        PrAtom a;
        a.line = cur_.line;
        bump();  // pr
        expect(Tok::LParen, "'('");
        if (cur_.kind != Tok::Ident) throw err("expected attribute name");
        a.attr = cur_.text;
        bump();
        expect(Tok::Eq, "'='");
        a.value = parse_term();
        if (cur_.kind == Tok::Bar) {
            bump();
            a.cond = parse_literals();
        }
        expect(Tok::RParen, "')'");
        expect(Tok::Eq, "'='");
        int pline = cur_.line, pcol = cur_.col;
        a.prob = parse_number();
        if (a.prob.num < 0 || Frac(1) < a.prob)
            throw ParseError(pline, pcol, "probability outside [0,1]");
        expect(Tok::Dot, "'.'");
        p.pr_atoms.push_back(std::move(a));
    }

    // sort decl, fact, or rule; all start with an identifier
    void parse_sort_or_statement(Program& p) {
        if (peek().kind == Tok::Eq) {
            // could be `sort = {...}` or an attribute fact `attr = v.`
            Token name = cur_;
            bump();
            bump();  // '='
            if (cur_.kind == Tok::LBrace) {
                SortDecl s;
                s.name = name.text;
                s.line = name.line;
                bump();
                parse_sort_values(s);
                expect(Tok::RBrace, "'}'");
                expect(Tok::Dot, "'.'");
                p.sorts.push_back(std::move(s));
                return;
            }
            Literal fact = Literal::attr(name.text, parse_term());
            int line = name.line;
            if (cur_.kind == Tok::ColonDash) throw ParseError(line, name.col, "attribute literals cannot head rules");
            expect(Tok::Dot, "'.'");
            require_ground(fact, line);
            p.facts.push_back(std::move(fact));
            return;
        }
        int line = cur_.line, col = cur_.col;
        Literal head = parse_literal();
        if (head.negated) throw ParseError(line, col, "rule head cannot be negated");
        if (head.kind == Literal::Kind::Attribute) throw ParseError(line, col, "attribute literals cannot head rules");
        if (cur_.kind == Tok::ColonDash) {
            Rule r;
            r.head = std::move(head);
            r.line = line;
            bump();
            r.body = parse_literals();
            expect(Tok::Dot, "'.'");
            p.rules.push_back(std::move(r));
        } else {
            expect(Tok::Dot, "'.'");
            require_ground(head, line);
            p.facts.push_back(std::move(head));
        }
    }

    void parse_sort_values(SortDecl& s) {
        while (true) {
            if (cur_.kind == Tok::Int) {
                long long lo = std::stoll(cur_.text);
                bump();
                if (cur_.kind == Tok::DotDot) {
                    bump();
                    if (cur_.kind != Tok::Int) throw err("expected range end");
                    long long hi = std::stoll(cur_.text);
                    bump();
                    if (hi < lo) throw err("empty range");
                    if (hi - lo >= (long long)kWorldCap) throw err("sort too large");
                    for (long long v = lo; v <= hi; ++v) s.values.push_back(std::to_string(v));
                } else {
                    s.values.push_back(std::to_string(lo));
                }
            } else if (cur_.kind == Tok::Ident) {
                s.values.push_back(cur_.text);
                bump();
            } else {
                throw err("expected sort value");
            }
            if (cur_.kind != Tok::Comma) break;
            bump();
        }
        if (s.values.empty()) throw err("empty sort");
    }

    std::vector<Literal> parse_literals() {
        std::vector<Literal> ls;
        ls.push_back(parse_literal());
        while (cur_.kind == Tok::Comma) {
            bump();
            ls.push_back(parse_literal());
        }
        return ls;
    }

    Literal parse_literal() {
        bool neg = false;
        if (cur_.kind == Tok::Ident && cur_.text == "not") {
            neg = true;
            bump();
        }
        if (cur_.kind != Tok::Ident) throw err("expected literal");
        std::string name = cur_.text;
        bump();
        Literal l;
        if (cur_.kind == Tok::LParen) {
            bump();
            std::vector<Term> args;
            args.push_back(parse_term());
            while (cur_.kind == Tok::Comma) {
                bump();
                args.push_back(parse_term());
            }
            expect(Tok::RParen, "')'");
            l = Literal::pred(name, std::move(args));
        } else if (cur_.kind == Tok::Eq) {
            bump();
            l = Literal::attr(name, parse_term());
        } else {
            l = Literal::pred(name);
        }
        l.negated = neg;
        return l;
    }

    Term parse_term() {
        if (cur_.kind == Tok::Int) {
            Term t = Term::cst(cur_.text);
            bump();
            return t;
        }
        if (cur_.kind != Tok::Ident) throw err("expected a term");
        Term t = std::isupper((unsigned char)cur_.text[0]) ? Term::var(cur_.text) : Term::cst(cur_.text);
        bump();
        return t;
    }

    Frac parse_number() {
        bool neg = false;
        if (cur_.kind == Tok::Number) {
            Frac f = parse_frac(cur_.text);
            bump();
            return f;
        }
        if (cur_.kind != Tok::Int) throw err("expected a number");
        long long n = std::stoll(cur_.text);
        bump();
        if (cur_.kind == Tok::Slash) {
            bump();
            if (cur_.kind != Tok::Int) throw err("expected denominator");
            long long d = std::stoll(cur_.text);
            bump();
            if (d == 0) throw err("zero denominator");
            return Frac(neg ? -n : n, d);
        }
        return Frac(neg ? -n : n);
    }

    void require_ground(const Literal& l, int line) {
        auto check = [&](const Term& t) {
            if (t.is_var) throw ParseError(line, 1, "facts must be ground (variable '" + t.text + "')");
        };
        for (const auto& t : l.args) check(t);
        if (l.kind == Literal::Kind::Attribute) check(l.value);
        if (l.negated) throw ParseError(line, 1, "facts cannot be negated");
    }

    Lexer lex_;
    Token cur_{Tok::End, "", 0, 0};
    Token peek_{Tok::End, "", 0, 0};
    bool have_peek_ = false;
};

std::string print_term(const Term& t) { return t.text; }

}  // namespace

Program parse_program(const std::string& text) { return Parser(text).parse(); }

std::string print_literal(const Literal& l) {
    std::string s;
    if (l.negated) s += "not ";
    s += l.name;
    if (l.kind == Literal::Kind::Attribute) {
        s += "=" + print_term(l.value);
    } else if (!l.args.empty()) {
        s += "(";
        for (size_t i = 0; i < l.args.size(); ++i) {
            if (i) s += ",";
            s += print_term(l.args[i]);
        }
        s += ")";
    }
    return s;
}

static std::string print_literals(const std::vector<Literal>& ls) {
    std::string s;
    for (size_t i = 0; i < ls.size(); ++i) {
        if (i) s += ", ";
        s += print_literal(ls[i]);
    }
    return s;
}

std::string print_program(const Program& p) {
    std::ostringstream out;
    for (const auto& s : p.sorts) {
        out << s.name << " = {";
        for (size_t i = 0; i < s.values.size(); ++i) {
            if (i) out << ", ";
            out << s.values[i];
        }
        out << "}.\n";
    }
    for (const auto& a : p.attrs) {
        out << "#random " << a.name << " : " << a.sort;
        if (!a.guard.empty()) out << " if " << print_literals(a.guard);
        out << ".\n";
    }
    for (const auto& f : p.facts) out << print_literal(f) << ".\n";
    for (const auto& r : p.rules) out << print_literal(r.head) << " :- " << print_literals(r.body) << ".\n";
    for (const auto& a : p.pr_atoms) {
        out << "pr(" << a.attr << "=" << print_term(a.value);
        if (!a.cond.empty()) out << " | " << print_literals(a.cond);
        out << ") = " << a.prob.str() << ".\n";
    }
    return out.str();
}

static std::string pr_key(const PrAtom& a, bool with_value) {
    std::vector<std::string> conds;
    conds.reserve(a.cond.size());
    for (const auto& c : a.cond) conds.push_back(print_literal(c));
    std::sort(conds.begin(), conds.end());
    std::string key = a.attr;
    if (with_value) key += "=" + a.value.text;
    key += "|";
    for (const auto& c : conds) key += c + ";";
    return key;
}

void update_pr_atoms(Program& p, const std::vector<PrAtom>& updates) {
    std::unordered_map<std::string, const SortDecl*> sorts;
    for (const auto& s : p.sorts) sorts[s.name] = &s;
    std::unordered_map<std::string, const AttrDecl*> attrs;
    for (const auto& a : p.attrs) attrs[a.name] = &a;

    std::unordered_map<std::string, size_t> by_key;
    for (size_t i = 0; i < p.pr_atoms.size(); ++i) by_key[pr_key(p.pr_atoms[i], true)] = i;

    for (const auto& u : updates) {
        auto ai = attrs.find(u.attr);
        if (ai == attrs.end()) throw SemanticError("update_pr_atoms: unknown attribute '" + u.attr + "'");
        if (!u.value.is_var) {
            const auto& vals = sorts.at(ai->second->sort)->values;
            if (std::find(vals.begin(), vals.end(), u.value.text) == vals.end())
                throw SemanticError("update_pr_atoms: value '" + u.value.text + "' not in sort of '" + u.attr + "'");
        }
        if (u.prob.num < 0 || Frac(1) < u.prob)
            throw SemanticError("update_pr_atoms: probability outside [0,1]");
        auto key = pr_key(u, true);
        auto it = by_key.find(key);
        if (it != by_key.end()) {
            p.pr_atoms[it->second] = u;
        } else {
            by_key[key] = p.pr_atoms.size();
            p.pr_atoms.push_back(u);
        }
    }

    // ground groups may not exceed unit mass (variable atoms are checked
    // again after instantiation, this catches the common fully-ground case)
    std::unordered_map<std::string, Frac> mass;
    for (const auto& a : p.pr_atoms) {
        bool ground_atom = !a.value.is_var;
        for (const auto& c : a.cond) {
            if (c.kind == Literal::Kind::Attribute && c.value.is_var) ground_atom = false;
            for (const auto& t : c.args)
                if (t.is_var) ground_atom = false;
        }
        if (!ground_atom) continue;
        auto key = pr_key(a, false);
        auto [it, fresh] = mass.emplace(key, a.prob);
        if (!fresh) it->second = it->second + a.prob;
    }
    for (const auto& [key, m] : mass) {
        if (Frac(1) < m)
            throw SemanticError("update_pr_atoms: probability mass " + m.str() + " exceeds 1 for group " + key);
    }
}

}  // namespace courier::kb
