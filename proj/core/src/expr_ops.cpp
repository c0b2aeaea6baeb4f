#include "psym/expr_ops.hpp"

#include <algorithm>
#include <unordered_map>

namespace psym {

namespace {

Expr fn_derivative(Fn f, const Expr& a) {
    switch (f) {
        case Fn::Exp: return apply_fn(Fn::Exp, a);
        case Fn::Log: return pow(a, -1);
        case Fn::Sin: return apply_fn(Fn::Cos, a);
        case Fn::Cos: return -apply_fn(Fn::Sin, a);
        case Fn::Tan: return 1 + pow(apply_fn(Fn::Tan, a), 2);
        case Fn::Sinh: return apply_fn(Fn::Cosh, a);
        case Fn::Cosh: return apply_fn(Fn::Sinh, a);
        case Fn::Tanh: return 1 - pow(apply_fn(Fn::Tanh, a), 2);
        case Fn::Sech: return -apply_fn(Fn::Sech, a) * apply_fn(Fn::Tanh, a);
    }
    return Expr(0);
}

std::vector<int> orders_of(const Expr& e) {
    if (e.kind() == Kind::Deriv) return e.orders();
    return std::vector<int>(e.args().size(), 0);
}

}  // namespace

bool is_parameter_like(const Symbol& s) {
    return s.kind() == SymbolKind::Parameter || s.kind() == SymbolKind::Constant;
}

Expr derivation(const Expr& e, const std::function<Expr(const Symbol&)>& on_symbol) {
    std::unordered_map<const Node*, Expr> memo;
    std::function<Expr(const Expr&)> go = [&](const Expr& x) -> Expr {
        if (auto it = memo.find(&x.node()); it != memo.end()) return it->second;
        Expr out;
        switch (x.kind()) {
            case Kind::Number: break;
            case Kind::Symbol: out = on_symbol(x.symbol()); break;
            case Kind::Add: {
                std::vector<Expr> parts;
                for (const auto& t : x.terms()) {
                    Expr d = go(t.expr);
                    if (!d.is_zero()) parts.push_back(mul({number(t.coef), d}));
                }
                out = add(std::span<const Expr>(parts));
                break;
            }
            case Kind::Mul: {
                const auto& fs = x.terms();
                std::vector<Expr> parts;
                for (std::size_t i = 0; i < fs.size(); ++i) {
                    Expr d = go(fs[i].expr);
                    if (d.is_zero()) continue;
                    std::vector<Expr> prod{number(x.number() * fs[i].coef), d,
                                           pow(fs[i].expr, fs[i].coef - 1)};
                    for (std::size_t j = 0; j < fs.size(); ++j)
                        if (j != i) prod.push_back(pow(fs[j].expr, fs[j].coef));
                    parts.push_back(mul(std::span<const Expr>(prod)));
                }
                out = add(std::span<const Expr>(parts));
                break;
            }
            case Kind::Func: {
                Expr d = go(x.args()[0]);
                if (!d.is_zero()) out = fn_derivative(x.fn(), x.args()[0]) * d;
                break;
            }
            case Kind::Apply:
            case Kind::Deriv: {
                std::vector<Expr> parts;
                const std::vector<int> base = orders_of(x);
                for (std::size_t j = 0; j < x.args().size(); ++j) {
                    Expr d = go(x.args()[j]);
                    if (d.is_zero()) continue;
                    std::vector<int> o = base;
                    ++o[j];
                    parts.push_back(derivative_of(x.name(), o, x.args()) * d);
                }
                out = add(std::span<const Expr>(parts));
                break;
            }
        }
        memo.emplace(&x.node(), out);
        return out;
    };
    return go(e);
}

Expr diff(const Expr& e, const Symbol& v) {
    return derivation(e, [&](const Symbol& s) { return s == v ? Expr(1) : Expr(0); });
}

Expr rebuild(const Expr& e, const std::function<std::optional<Expr>(const Symbol&)>& leaf) {
    std::unordered_map<const Node*, Expr> memo;
    std::function<Expr(const Expr&)> go = [&](const Expr& x) -> Expr {
        if (auto it = memo.find(&x.node()); it != memo.end()) return it->second;
        Expr out;
        switch (x.kind()) {
            case Kind::Number: out = x; break;
            case Kind::Symbol: {
                auto r = leaf(x.symbol());
                out = r ? *r : x;
                break;
            }
            case Kind::Add: {
                std::vector<Expr> parts{number(x.number())};
                for (const auto& t : x.terms()) parts.push_back(mul({number(t.coef), go(t.expr)}));
                out = add(std::span<const Expr>(parts));
                break;
            }
            case Kind::Mul: {
                std::vector<Expr> parts{number(x.number())};
                for (const auto& t : x.terms()) parts.push_back(pow(go(t.expr), t.coef));
                out = mul(std::span<const Expr>(parts));
                break;
            }
            case Kind::Func: out = apply_fn(x.fn(), go(x.args()[0])); break;
            case Kind::Apply:
            case Kind::Deriv: {
                std::vector<Expr> args;
                for (const auto& a : x.args()) args.push_back(go(a));
                out = derivative_of(x.name(), orders_of(x), std::move(args));
                break;
            }
        }
        memo.emplace(&x.node(), out);
        return out;
    };
    return go(e);
}

Expr substitute(const Expr& e, const SymbolMap& rules) {
    if (rules.empty()) return e;
    // Cycle check on the dependency graph between rule symbols, ignoring
    // self references.
    std::map<Symbol, std::vector<Symbol>, SymbolLess> graph;
    for (const auto& [s, rhs] : rules) {
        SymbolSet fs = free_symbols(rhs);
        for (const auto& t : fs)
            if (!(t == s) && rules.count(t)) graph[s].push_back(t);
    }
    std::map<Symbol, int, SymbolLess> state;
    std::function<void(const Symbol&)> visit = [&](const Symbol& s) {
        int& st = state[s];
        if (st == 2) return;
        if (st == 1) throw Error(ErrorKind::CyclicSubstitution, "cyclic substitution through " + s.name());
        st = 1;
        for (const auto& t : graph[s]) visit(t);
        state[s] = 2;
    };
    for (const auto& [s, _] : rules) visit(s);
    return rebuild(e, [&](const Symbol& s) -> std::optional<Expr> {
        auto it = rules.find(s);
        if (it == rules.end()) return std::nullopt;
        return it->second;
    });
}

void collect_symbols(const Expr& e, SymbolSet& out) {
    switch (e.kind()) {
        case Kind::Number: return;
        case Kind::Symbol: out.insert(e.symbol()); return;
        case Kind::Add:
        case Kind::Mul:
            for (const auto& t : e.terms()) collect_symbols(t.expr, out);
            return;
        default:
            for (const auto& a : e.args()) collect_symbols(a, out);
    }
}

SymbolSet free_symbols(const Expr& e) {
    SymbolSet s;
    collect_symbols(e, s);
    return s;
}

bool contains(const Expr& e, const std::function<bool(const Symbol&)>& pred) {
    switch (e.kind()) {
        case Kind::Number: return false;
        case Kind::Symbol: return pred(e.symbol());
        case Kind::Add:
        case Kind::Mul:
            return std::any_of(e.terms().begin(), e.terms().end(),
                               [&](const Term& t) { return contains(t.expr, pred); });
        default:
            return std::any_of(e.args().begin(), e.args().end(),
                               [&](const Expr& a) { return contains(a, pred); });
    }
}

bool contains_symbol(const Expr& e, const Symbol& s) {
    return contains(e, [&](const Symbol& t) { return t == s; });
}

bool has_function_application(const Expr& e) {
    switch (e.kind()) {
        case Kind::Number:
        case Kind::Symbol: return false;
        case Kind::Apply:
        case Kind::Deriv: return true;
        case Kind::Add:
        case Kind::Mul:
            return std::any_of(e.terms().begin(), e.terms().end(),
                               [](const Term& t) { return has_function_application(t.expr); });
        case Kind::Func: return has_function_application(e.args()[0]);
    }
    return false;
}

Expr instantiate(const Expr& e, const FunctionTable& defs) {
    if (defs.empty() || !has_function_application(e)) return e;
    switch (e.kind()) {
        case Kind::Number:
        case Kind::Symbol: return e;
        case Kind::Add: {
            std::vector<Expr> parts{number(e.number())};
            for (const auto& t : e.terms()) parts.push_back(mul({number(t.coef), instantiate(t.expr, defs)}));
            return add(std::span<const Expr>(parts));
        }
        case Kind::Mul: {
            std::vector<Expr> parts{number(e.number())};
            for (const auto& t : e.terms()) parts.push_back(pow(instantiate(t.expr, defs), t.coef));
            return mul(std::span<const Expr>(parts));
        }
        case Kind::Func: return apply_fn(e.fn(), instantiate(e.args()[0], defs));
        case Kind::Apply:
        case Kind::Deriv: {
            std::vector<Expr> args;
            for (const auto& a : e.args()) args.push_back(instantiate(a, defs));
            auto it = defs.find(e.name());
            if (it == defs.end()) return derivative_of(e.name(), orders_of(e), std::move(args));
            const FunctionDef& def = it->second;
            if (def.params.size() != args.size())
                throw Error(ErrorKind::Contract, "arity mismatch for function " + e.name());
            Expr body = def.body;
            const std::vector<int> o = orders_of(e);
            for (std::size_t j = 0; j < o.size(); ++j)
                for (int k = 0; k < o[j]; ++k) body = diff(body, def.params[j]);
            SymbolMap rules;
            for (std::size_t j = 0; j < args.size(); ++j) rules.emplace(def.params[j], args[j]);
            // Formal parameters are fresh symbols so simultaneous replacement
            // cannot cycle.
            return rebuild(body, [&](const Symbol& s) -> std::optional<Expr> {
                auto r = rules.find(s);
                if (r == rules.end()) return std::nullopt;
                return r->second;
            });
        }
    }
    return e;
}

namespace {

using Monomial = std::vector<Term>;  // (base, exponent), coefficient kept apart

Monomial monomial_factors(const Expr& m) {
    if (m.kind() == Kind::Mul) return m.terms();
    if (m.is_one()) return {};
    return {Term{m, 1}};
}

Expr from_factors(const Rational& c, const Monomial& fs) {
    std::vector<Expr> parts{number(c)};
    for (const auto& f : fs) parts.push_back(pow(f.expr, f.coef));
    return mul(std::span<const Expr>(parts));
}

bool parameter_only(const Expr& e) {
    if (e.is_number()) return true;
    return !has_function_application(e) &&
           !contains(e, [](const Symbol& s) { return !is_parameter_like(s); });
}

Rational content_of(const std::vector<Rational>& cs) {
    mpz_class g = 0, l = 1;
    for (const auto& c : cs) {
        mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), c.get_num_mpz_t());
        mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), c.get_den_mpz_t());
    }
    if (g == 0) return 1;
    return Rational(g, l);
}

using Groups = std::vector<std::pair<Expr, Expr>>;  // (non-parameter part, parameter coefficient)

Groups group_by_nonparameter(const Expr& sum) {
    std::map<Expr, std::vector<Expr>, ExprLess> groups;
    for (const Expr& s : (sum.kind() == Kind::Add ? std::vector<Expr>{} : std::vector<Expr>{sum})) {
        auto [c, m] = split_coefficient(s);
        Monomial par, rest;
        for (auto& f : monomial_factors(m)) (parameter_only(f.expr) ? par : rest).push_back(f);
        groups[from_factors(1, rest)].push_back(from_factors(c, par));
    }
    if (sum.kind() == Kind::Add) {
        if (sum.number() != 0) groups[number(1)].push_back(number(sum.number()));
        for (const auto& t : sum.terms()) {
            Monomial par, rest;
            for (auto& f : monomial_factors(t.expr)) (parameter_only(f.expr) ? par : rest).push_back(f);
            groups[from_factors(1, rest)].push_back(from_factors(t.coef, par));
        }
    }
    Groups out;
    for (auto& [rest, ps] : groups) out.emplace_back(rest, add(std::span<const Expr>(ps)));
    return out;
}

// Sum of (q_g * rest_g) when every coefficient is q_g * p with q_g rational.
std::optional<Expr> quotient_by(const Groups& groups, const Expr& p) {
    std::vector<Expr> quotient;
    for (const auto& [rest, pg] : groups) {
        Rational q;
        if (p.kind() == Kind::Add) {
            if (pg.kind() != Kind::Add || pg.terms().size() != p.terms().size()) return std::nullopt;
            q = pg.terms().back().coef / p.terms().back().coef;
        } else {
            auto [pc, pm] = split_coefficient(p);
            auto [gc, gm] = split_coefficient(pg);
            if (!(gm == pm)) return std::nullopt;
            q = gc / pc;
        }
        if (!(pg - mul({number(q), p})).is_zero()) return std::nullopt;
        quotient.push_back(mul({number(q), rest}));
    }
    return add(std::span<const Expr>(quotient));
}

Expr primitive(const Expr& p) {
    if (p.kind() != Kind::Add) return split_coefficient(p).second;
    std::vector<Rational> cs;
    if (p.number() != 0) cs.push_back(p.number());
    for (const auto& t : p.terms()) cs.push_back(t.coef);
    Rational c = content_of(cs);
    if (leading_sign(p) < 0) c = -c;
    return mul({number(1 / c), p});
}

// Splits an expanded sum by a common parameter-polynomial factor. Returns
// (P, quotient) or nullopt when no such factor exists.
std::optional<std::pair<Expr, Expr>> parameter_content(const Expr& sum) {
    if (sum.kind() != Kind::Add) return std::nullopt;
    Groups groups = group_by_nonparameter(sum);
    const Expr p = primitive(groups.front().second);
    if (p.is_number()) return std::nullopt;
    auto q = quotient_by(groups, p);
    if (!q) return std::nullopt;
    return std::make_pair(p, *q);
}

}  // namespace

std::vector<Expr> factor_split(const Expr& e) {
    std::vector<Expr> out;
    switch (e.kind()) {
        case Kind::Number:
            if (e.is_zero()) out.push_back(e);
            return out;
        case Kind::Mul:
            for (const auto& f : e.terms()) {
                if (f.expr.is_number()) continue;
                out.push_back(pow(f.expr, f.coef));
            }
            return out;
        case Kind::Add: break;
        default:
            out.push_back(e);
            return out;
    }

    // Common monomial factor over all terms: the smallest exponent of each
    // base, with absent bases counting as exponent 0. Negative minima pull
    // out shared denominators.
    Monomial common;
    {
        std::vector<Monomial> rows;
        if (e.number() != 0) rows.emplace_back();
        for (const auto& t : e.terms()) rows.push_back(monomial_factors(t.expr));
        std::vector<Expr> bases;
        for (const auto& row : rows)
            for (const auto& f : row)
                if (std::find(bases.begin(), bases.end(), f.expr) == bases.end()) bases.push_back(f.expr);
        for (const auto& b : bases) {
            bool first = true;
            Rational m = 0;
            for (const auto& row : rows) {
                Rational k = 0;
                for (const auto& f : row)
                    if (f.expr == b) k = f.coef;
                if (first || k < m) m = k;
                first = false;
            }
            if (m != 0) common.push_back(Term{b, m});
        }
    }
    Expr rest = e;
    if (!common.empty()) {
        Monomial inv;
        for (const auto& c : common) inv.push_back(Term{c.expr, -c.coef});
        // Term by term, so that a factor cancels against its own inverse
        // before any sum is expanded.
        std::vector<Expr> q;
        for (const auto& f : inv) q.push_back(pow(f.expr, f.coef));
        auto times = [&](const Rational& c, const Expr& t) {
            std::vector<Expr> xs{number(c), t};
            xs.insert(xs.end(), q.begin(), q.end());
            return mul(std::span<const Expr>(xs));
        };
        std::vector<Expr> parts{times(e.number(), number(1))};
        for (const auto& t : e.terms()) parts.push_back(times(t.coef, t.expr));
        rest = add(std::span<const Expr>(parts));
        for (const auto& c : common) out.push_back(pow(c.expr, c.coef));
    }
    if (auto pc = parameter_content(rest)) {
        out.push_back(pc->first);
        rest = pc->second;
    }
    if (rest.is_number()) return out;
    if (rest.kind() == Kind::Mul) {
        for (const auto& f : rest.terms()) out.push_back(pow(f.expr, f.coef));
        return out;
    }
    if (rest.kind() == Kind::Add) {
        std::vector<Rational> cs;
        if (rest.number() != 0) cs.push_back(rest.number());
        for (const auto& t : rest.terms()) cs.push_back(t.coef);
        Rational c = content_of(cs);
        if (leading_sign(rest) < 0) c = -c;
        rest = mul({number(1 / c), rest});
    }
    out.push_back(rest);
    return out;
}

std::optional<Expr> divide_by_parameter_polynomial(const Expr& b, const Expr& a) {
    if (a.is_zero()) return std::nullopt;
    if (a.is_number()) return mul({b, number(1 / a.number())});
    if (!parameter_only(a)) return std::nullopt;
    if (b.is_zero()) return b;
    return quotient_by(group_by_nonparameter(b), a);
}

bool proportional(const Expr& e, const Expr& f) {
    if (e.is_zero() || f.is_zero()) return e.is_zero() && f.is_zero();
    auto ratio_of = [](const Expr& x) -> Rational {
        if (x.is_number()) return x.number();
        if (x.kind() == Kind::Mul) return x.number();
        if (x.kind() == Kind::Add) return x.terms().back().coef;
        return 1;
    };
    const Rational q = ratio_of(e) / ratio_of(f);
    return (e - mul({number(q), f})).is_zero();
}

}  // namespace psym
