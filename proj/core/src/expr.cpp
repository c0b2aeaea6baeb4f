#include "psym/expr.hpp"

#include <algorithm>
#include <functional>

namespace psym {

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
    return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

std::size_t hash_rational(const Rational& q) {
    std::size_t h = static_cast<std::size_t>(mpz_get_si(q.get_num_mpz_t()));
    h = mix(h, static_cast<std::size_t>(mpz_get_si(q.get_den_mpz_t())));
    h = mix(h, mpz_size(q.get_num_mpz_t()));
    return mix(h, static_cast<std::size_t>(mpz_sgn(q.get_num_mpz_t()) + 2));
}

int cmp_rational(const Rational& a, const Rational& b) {
    const int c = cmp(a, b);
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

bool is_integer(const Rational& q) { return q.get_den() == 1; }

Rational rational_pow(const Rational& base, long k) {
    Rational result = 1;
    Rational b = base;
    unsigned long n = static_cast<unsigned long>(k < 0 ? -k : k);
    while (n) {
        if (n & 1UL) result *= b;
        b *= b;
        n >>= 1;
    }
    if (k < 0) result = 1 / result;
    return result;
}

bool exact_root(const mpz_class& v, unsigned long n, mpz_class& out) {
    if (v < 0 && n % 2 == 0) return false;
    return mpz_root(out.get_mpz_t(), v.get_mpz_t(), n) != 0;
}

constexpr int kind_rank(Kind k) { return static_cast<int>(k); }

}  // namespace

const char* fn_name(Fn f) noexcept {
    switch (f) {
        case Fn::Exp: return "exp";
        case Fn::Log: return "log";
        case Fn::Sin: return "sin";
        case Fn::Cos: return "cos";
        case Fn::Tan: return "tan";
        case Fn::Sinh: return "sinh";
        case Fn::Cosh: return "cosh";
        case Fn::Tanh: return "tanh";
        case Fn::Sech: return "sech";
    }
    return "?";
}

bool fn_from_name(const std::string& name, Fn& out) noexcept {
    static const std::pair<const char*, Fn> table[] = {
        {"exp", Fn::Exp},   {"log", Fn::Log},   {"sin", Fn::Sin},
        {"cos", Fn::Cos},   {"tan", Fn::Tan},   {"sinh", Fn::Sinh},
        {"cosh", Fn::Cosh}, {"tanh", Fn::Tanh}, {"sech", Fn::Sech},
    };
    for (const auto& [n, f] : table) {
        if (name == n) {
            out = f;
            return true;
        }
    }
    return false;
}

struct ExprFactory {
    static Expr make(Node&& n) {
        std::size_t h = static_cast<std::size_t>(n.kind) * 0x100000001b3ULL;
        switch (n.kind) {
            case Kind::Number: h = mix(h, hash_rational(n.value)); break;
            case Kind::Symbol: h = mix(h, n.sym.hash()); break;
            case Kind::Mul:
            case Kind::Add:
                h = mix(h, hash_rational(n.value));
                for (const auto& t : n.terms) {
                    h = mix(h, t.expr.hash());
                    h = mix(h, hash_rational(t.coef));
                }
                break;
            case Kind::Func:
                h = mix(h, static_cast<std::size_t>(n.fn));
                h = mix(h, n.args[0].hash());
                break;
            case Kind::Apply:
            case Kind::Deriv:
                h = mix(h, std::hash<std::string>()(n.name));
                for (int o : n.orders) h = mix(h, static_cast<std::size_t>(o));
                for (const auto& a : n.args) h = mix(h, a.hash());
                break;
        }
        n.hash = h;
        return Expr(std::make_shared<const Node>(std::move(n)));
    }

    static Expr make_number(const Rational& q) {
        Node n;
        n.kind = Kind::Number;
        n.value = q;
        return make(std::move(n));
    }

    static const Expr& zero() {
        static const Expr z = make_number(0);
        return z;
    }
    static const Expr& one() {
        static const Expr o = make_number(1);
        return o;
    }
};

Expr::Expr() : node_(ExprFactory::zero().node_) {}
Expr::Expr(long v) {
    if (v == 0) node_ = ExprFactory::zero().node_;
    else if (v == 1) node_ = ExprFactory::one().node_;
    else node_ = ExprFactory::make_number(Rational(v)).node_;
}
Expr::Expr(const Rational& q) : node_(ExprFactory::make_number(q).node_) {}
Expr::Expr(const Symbol& s) {
    Node n;
    n.kind = Kind::Symbol;
    n.sym = s;
    node_ = ExprFactory::make(std::move(n)).node_;
}

Kind Expr::kind() const { return node_->kind; }
std::size_t Expr::hash() const { return node_->hash; }
bool Expr::is_zero() const { return node_->kind == Kind::Number && node_->value == 0; }
bool Expr::is_one() const { return node_->kind == Kind::Number && node_->value == 1; }
const Rational& Expr::number() const { return node_->value; }
const Symbol& Expr::symbol() const { return node_->sym; }
const std::vector<Term>& Expr::terms() const { return node_->terms; }
Fn Expr::fn() const { return node_->fn; }
const std::string& Expr::name() const { return node_->name; }
const std::vector<int>& Expr::orders() const { return node_->orders; }
const std::vector<Expr>& Expr::args() const { return node_->args; }

int compare(const Expr& a, const Expr& b) {
    const Node& x = a.node();
    const Node& y = b.node();
    if (&x == &y) return 0;
    if (x.kind != y.kind) return kind_rank(x.kind) < kind_rank(y.kind) ? -1 : 1;
    switch (x.kind) {
        case Kind::Number: return cmp_rational(x.value, y.value);
        case Kind::Symbol: return compare(x.sym, y.sym);
        case Kind::Mul:
        case Kind::Add: {
            const std::size_t n = std::min(x.terms.size(), y.terms.size());
            for (std::size_t i = 0; i < n; ++i) {
                // Compare from the highest-ranked end so that products and
                // sums order by their dominant part.
                const Term& tx = x.terms[x.terms.size() - 1 - i];
                const Term& ty = y.terms[y.terms.size() - 1 - i];
                if (int c = compare(tx.expr, ty.expr)) return c;
                if (int c = cmp_rational(tx.coef, ty.coef)) return c;
            }
            if (x.terms.size() != y.terms.size()) return x.terms.size() < y.terms.size() ? -1 : 1;
            return cmp_rational(x.value, y.value);
        }
        case Kind::Func:
            if (x.fn != y.fn) return x.fn < y.fn ? -1 : 1;
            return compare(x.args[0], y.args[0]);
        case Kind::Apply:
        case Kind::Deriv: {
            if (int c = x.name.compare(y.name)) return c < 0 ? -1 : 1;
            if (x.orders != y.orders) return x.orders < y.orders ? -1 : 1;
            if (x.args.size() != y.args.size()) return x.args.size() < y.args.size() ? -1 : 1;
            for (std::size_t i = 0; i < x.args.size(); ++i)
                if (int c = compare(x.args[i], y.args[i])) return c;
            return 0;
        }
    }
    return 0;
}

Expr number(const Rational& value) {
    Rational q = value;
    q.canonicalize();
    if (q == 0) return ExprFactory::zero();
    if (q == 1) return ExprFactory::one();
    return ExprFactory::make_number(q);
}

namespace {

Expr make_mul_node(const Rational& coef, std::vector<Term> factors) {
    if (coef == 0) return number(0);
    if (factors.empty()) return number(coef);
    if (coef == 1 && factors.size() == 1 && factors[0].coef == 1) return factors[0].expr;
    Node n;
    n.kind = Kind::Mul;
    n.value = coef;
    n.terms = std::move(factors);
    return ExprFactory::make(std::move(n));
}

// Monomial with coefficient stripped.
Expr strip(const Expr& e) {
    if (e.kind() != Kind::Mul || e.number() == 1) return e;
    return make_mul_node(1, e.terms());
}

Expr scale(const Expr& term, const Rational& q) {
    if (q == 0) return number(0);
    if (q == 1) return term;
    if (term.kind() == Kind::Number) return number(term.number() * q);
    if (term.kind() == Kind::Mul) return make_mul_node(term.number() * q, term.terms());
    return make_mul_node(q, {Term{term, 1}});
}

void sort_and_merge(std::vector<Term>& ts) {
    std::sort(ts.begin(), ts.end(),
              [](const Term& a, const Term& b) { return compare(a.expr, b.expr) < 0; });
    std::vector<Term> out;
    out.reserve(ts.size());
    for (auto& t : ts) {
        if (!out.empty() && out.back().expr == t.expr) {
            out.back().coef += t.coef;
        } else {
            out.push_back(std::move(t));
        }
    }
    std::erase_if(out, [](const Term& t) { return t.coef == 0; });
    ts = std::move(out);
}

std::vector<Expr> summands(const Expr& e) {
    std::vector<Expr> out;
    if (e.kind() != Kind::Add) {
        out.push_back(e);
        return out;
    }
    out.reserve(e.terms().size() + 1);
    if (e.number() != 0) out.push_back(number(e.number()));
    for (const auto& t : e.terms()) out.push_back(scale(t.expr, t.coef));
    return out;
}

const Term* highest_term(const Expr& a) {
    return a.terms().empty() ? nullptr : &a.terms().back();
}

Expr build_product(Rational coef, std::vector<Term> work) {
    std::vector<Term> atoms;
    std::vector<Term> numeric;  // numeric bases with fractional exponents

    while (!work.empty()) {
        Term t = std::move(work.back());
        work.pop_back();
        if (t.coef == 0) continue;
        const Expr& b = t.expr;
        switch (b.kind()) {
            case Kind::Number: {
                if (is_integer(t.coef)) {
                    if (b.number() == 0) {
                        if (t.coef < 0) throw Error(ErrorKind::MalformedExpression, "division by zero");
                        return number(0);
                    }
                    coef *= rational_pow(b.number(), t.coef.get_num().get_si());
                } else if (b.number() == 0) {
                    if (t.coef < 0) throw Error(ErrorKind::MalformedExpression, "division by zero");
                    return number(0);
                } else if (b.number() != 1) {
                    numeric.push_back(t);
                }
                break;
            }
            case Kind::Mul: {
                if (is_integer(t.coef)) {
                    coef *= rational_pow(b.number(), t.coef.get_num().get_si());
                } else if (b.number() != 1) {
                    work.push_back(Term{number(b.number()), t.coef});
                }
                for (const auto& f : b.terms()) work.push_back(Term{f.expr, f.coef * t.coef});
                break;
            }
            case Kind::Add: {
                const bool positive_int = is_integer(t.coef) && t.coef > 0;
                const Term* lead = highest_term(b);
                if (!positive_int && lead && lead->coef != 1 &&
                    (is_integer(t.coef) || lead->coef > 0)) {
                    const Rational lc = lead->coef;
                    std::vector<Term> scaled;
                    scaled.reserve(b.terms().size());
                    for (const auto& s : b.terms()) scaled.push_back(Term{s.expr, s.coef / lc});
                    Node n;
                    n.kind = Kind::Add;
                    n.value = b.number() / lc;
                    n.terms = std::move(scaled);
                    work.push_back(Term{ExprFactory::make(std::move(n)), t.coef});
                    work.push_back(Term{number(lc), t.coef});
                } else {
                    atoms.push_back(t);
                }
                break;
            }
            default:
                atoms.push_back(t);
        }
    }

    // Merge equal bases, then apply the identity rewrites until stable.
    for (int guard = 0;; ++guard) {
        sort_and_merge(atoms);
        bool rewrote = false;
        std::vector<Term> next;
        std::vector<Expr> exp_args;
        for (auto& t : atoms) {
            const Expr& b = t.expr;
            if (b.kind() == Kind::Func && b.fn() == Fn::Exp) {
                exp_args.push_back(mul({number(t.coef), b.args()[0]}));
                continue;
            }
            if (b.kind() == Kind::Func && (b.fn() == Fn::Sech || b.fn() == Fn::Sin) &&
                is_integer(t.coef) && t.coef >= 2) {
                const long k = t.coef.get_num().get_si();
                const Fn partner = b.fn() == Fn::Sech ? Fn::Tanh : Fn::Cos;
                // sech^2 = 1 - tanh^2, sin^2 = 1 - cos^2
                Expr sq = pow(apply_fn(partner, b.args()[0]), 2);
                Expr one_minus = add({number(1), mul({number(-1), sq})});
                if (k % 2) next.push_back(Term{b, 1});
                next.push_back(Term{one_minus, Rational(k / 2)});
                rewrote = true;
                continue;
            }
            next.push_back(std::move(t));
        }
        if (exp_args.size() > 1 || (exp_args.size() == 1 && rewrote)) {
            Expr e = apply_fn(Fn::Exp, add(std::span<const Expr>(exp_args)));
            if (e.is_number()) coef *= e.number();
            else next.push_back(Term{e, 1});
        } else if (exp_args.size() == 1) {
            // exp(a)^k with k != 1 folds into exp(k a)
            Expr e = apply_fn(Fn::Exp, exp_args[0]);
            if (e.is_number()) coef *= e.number();
            else next.push_back(Term{e, 1});
        }
        atoms = std::move(next);
        if (!rewrote) {
            sort_and_merge(atoms);
            break;
        }
        if (guard > 64) break;
    }

    // Numeric bases with fractional exponents.
    sort_and_merge(numeric);
    for (auto& t : numeric) {
        const Rational& p = t.expr.number();
        mpz_class fl;
        mpz_fdiv_q(fl.get_mpz_t(), t.coef.get_num_mpz_t(), t.coef.get_den_mpz_t());
        Rational frac = t.coef - Rational(fl);
        coef *= rational_pow(p, fl.get_si());
        if (frac == 0) continue;
        const unsigned long s = frac.get_den().get_ui();
        mpz_class rn, rd;
        if (exact_root(p.get_num(), s, rn) && exact_root(p.get_den(), s, rd)) {
            coef *= rational_pow(Rational(rn, rd), frac.get_num().get_si());
            continue;
        }
        atoms.push_back(Term{t.expr, frac});
    }
    if (coef == 0) return number(0);
    sort_and_merge(atoms);

    // Expand positive integer powers of sums.
    bool expandable = std::any_of(atoms.begin(), atoms.end(), [](const Term& t) {
        return t.expr.kind() == Kind::Add && is_integer(t.coef) && t.coef > 0;
    });
    if (!expandable) return make_mul_node(coef, std::move(atoms));

    std::vector<Term> rest;
    std::vector<std::pair<Expr, long>> sums;
    for (auto& t : atoms) {
        if (t.expr.kind() == Kind::Add && is_integer(t.coef) && t.coef > 0)
            sums.emplace_back(t.expr, t.coef.get_num().get_si());
        else
            rest.push_back(std::move(t));
    }
    std::vector<Expr> acc{make_mul_node(coef, std::move(rest))};
    for (const auto& [sum, k] : sums) {
        const std::vector<Expr> parts = summands(sum);
        for (long i = 0; i < k; ++i) {
            std::vector<Expr> next;
            next.reserve(acc.size() * parts.size());
            for (const auto& a : acc)
                for (const auto& s : parts) next.push_back(mul({a, s}));
            acc = summands(add(std::span<const Expr>(next)));
        }
    }
    return add(std::span<const Expr>(acc));
}

}  // namespace

Expr add(std::span<const Expr> xs) {
    Rational c = 0;
    std::vector<Term> ts;
    ts.reserve(xs.size());
    for (const auto& x : xs) {
        switch (x.kind()) {
            case Kind::Number: c += x.number(); break;
            case Kind::Add:
                c += x.number();
                for (const auto& t : x.terms()) ts.push_back(t);
                break;
            case Kind::Mul: ts.push_back(Term{strip(x), x.number()}); break;
            default: ts.push_back(Term{x, 1});
        }
    }
    sort_and_merge(ts);
    if (ts.empty()) return number(c);
    if (c == 0 && ts.size() == 1) return scale(ts[0].expr, ts[0].coef);
    Node n;
    n.kind = Kind::Add;
    n.value = c;
    n.terms = std::move(ts);
    return ExprFactory::make(std::move(n));
}

Expr mul(std::span<const Expr> xs) {
    std::vector<Term> work;
    work.reserve(xs.size());
    for (const auto& x : xs) {
        if (x.is_zero()) return number(0);
        work.push_back(Term{x, 1});
    }
    return build_product(1, std::move(work));
}

Expr pow(const Expr& base, const Rational& exponent) {
    if (exponent == 0) return number(1);
    if (exponent == 1) return base;
    return build_product(1, {Term{base, exponent}});
}

int leading_sign(const Expr& e) {
    switch (e.kind()) {
        case Kind::Number: return sgn(e.number());
        case Kind::Mul: return sgn(e.number());
        case Kind::Add:
            if (!e.terms().empty()) return sgn(e.terms().back().coef);
            return sgn(e.number());
        default: return 1;
    }
}

Expr apply_fn(Fn f, const Expr& arg) {
    if (arg.is_zero()) {
        switch (f) {
            case Fn::Exp:
            case Fn::Cos:
            case Fn::Cosh:
            case Fn::Sech: return number(1);
            case Fn::Log: throw Error(ErrorKind::MalformedExpression, "log(0)");
            default: return number(0);
        }
    }
    if (f == Fn::Log && arg.is_one()) return number(0);
    const bool odd = f == Fn::Sin || f == Fn::Tan || f == Fn::Sinh || f == Fn::Tanh;
    const bool even = f == Fn::Cos || f == Fn::Cosh || f == Fn::Sech;
    if ((odd || even) && leading_sign(arg) < 0) {
        Expr flipped = apply_fn(f, -arg);
        return odd ? -flipped : flipped;
    }
    Node n;
    n.kind = Kind::Func;
    n.fn = f;
    n.args = {arg};
    return ExprFactory::make(std::move(n));
}

Expr apply(const std::string& name, std::vector<Expr> args) {
    Node n;
    n.kind = Kind::Apply;
    n.name = name;
    n.args = std::move(args);
    return ExprFactory::make(std::move(n));
}

Expr derivative_of(const std::string& name, std::vector<int> orders, std::vector<Expr> args) {
    if (std::all_of(orders.begin(), orders.end(), [](int o) { return o == 0; }))
        return apply(name, std::move(args));
    Node n;
    n.kind = Kind::Deriv;
    n.name = name;
    n.orders = std::move(orders);
    n.args = std::move(args);
    return ExprFactory::make(std::move(n));
}

Expr sqrt(const Expr& e) { return pow(e, Rational(1, 2)); }
Expr exp(const Expr& e) { return apply_fn(Fn::Exp, e); }

Expr operator+(const Expr& a, const Expr& b) { return add({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return add({a, mul({number(-1), b})}); }
Expr operator*(const Expr& a, const Expr& b) { return mul({a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return mul({a, pow(b, -1)}); }
Expr operator-(const Expr& a) { return mul({number(-1), a}); }

std::pair<Rational, Expr> split_coefficient(const Expr& e) {
    if (e.is_number()) return {e.number(), number(1)};
    if (e.kind() == Kind::Mul) return {e.number(), strip(e)};
    return {Rational(1), e};
}

Expr normalize(const Expr& e) {
    switch (e.kind()) {
        case Kind::Number: return number(e.number());
        case Kind::Symbol: return Expr(e.symbol());
        case Kind::Mul: {
            std::vector<Term> fs;
            for (const auto& t : e.terms()) fs.push_back(Term{normalize(t.expr), t.coef});
            return build_product(e.number(), std::move(fs));
        }
        case Kind::Add: {
            std::vector<Expr> xs{number(e.number())};
            for (const auto& t : e.terms()) xs.push_back(mul({number(t.coef), normalize(t.expr)}));
            return add(std::span<const Expr>(xs));
        }
        case Kind::Func: return apply_fn(e.fn(), normalize(e.args()[0]));
        case Kind::Apply:
        case Kind::Deriv: {
            std::vector<Expr> args;
            for (const auto& a : e.args()) args.push_back(normalize(a));
            return derivative_of(e.name(), e.orders().empty() ? std::vector<int>(args.size(), 0)
                                                              : e.orders(),
                                 std::move(args));
        }
    }
    return e;
}

}  // namespace psym
