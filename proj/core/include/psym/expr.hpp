#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "psym/error.hpp"
#include "psym/symbol.hpp"

namespace psym {

using Rational = mpq_class;

enum class Kind : unsigned char { Number, Symbol, Mul, Add, Func, Apply, Deriv };

/// Elementary functions known to the kernel. sqrt is not listed: it is
/// represented as a power with exponent 1/2.
enum class Fn : unsigned char { Exp, Log, Sin, Cos, Tan, Sinh, Cosh, Tanh, Sech };

const char* fn_name(Fn f) noexcept;
bool fn_from_name(const std::string& name, Fn& out) noexcept;

class Expr;
struct Node;

/// (expression, rational) pair. In a sum it is coefficient*term, in a
/// product it is base^exponent.
struct Term;

/// Immutable expression in canonical form. Every Expr is produced by the
/// smart constructors below, which normalize on construction, so two
/// canonical expressions are equal iff they are structurally equal.
class Expr {
public:
    Expr();  // the integer 0
    Expr(long v);
    Expr(int v) : Expr(static_cast<long>(v)) {}
    Expr(const Rational& q);
    Expr(const Symbol& s);

    Kind kind() const;
    const Node& node() const { return *node_; }
    std::size_t hash() const;

    bool is_number() const { return kind() == Kind::Number; }
    bool is_zero() const;
    bool is_one() const;
    bool is_symbol() const { return kind() == Kind::Symbol; }
    bool is_add() const { return kind() == Kind::Add; }
    bool is_mul() const { return kind() == Kind::Mul; }

    const Rational& number() const;  // Number value, Add constant, Mul coefficient
    const Symbol& symbol() const;
    const std::vector<Term>& terms() const;  // Add terms / Mul factors
    Fn fn() const;
    const std::string& name() const;          // Apply / Deriv
    const std::vector<int>& orders() const;   // Deriv
    const std::vector<Expr>& args() const;    // Func (1) / Apply / Deriv

    std::string str() const;

    friend struct ExprFactory;

private:
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

struct Term {
    Expr expr;
    Rational coef;
};

struct Node {
    Kind kind = Kind::Number;
    Rational value;
    Symbol sym;
    std::vector<Term> terms;
    Fn fn = Fn::Exp;
    std::string name;
    std::vector<int> orders;
    std::vector<Expr> args;
    std::size_t hash = 0;
};

/// Total order on canonical expressions: numbers < symbols < products <
/// sums < elementary functions < uninterpreted applications < derivatives
/// of uninterpreted functions.
int compare(const Expr& a, const Expr& b);

inline bool operator==(const Expr& a, const Expr& b) {
    return a.hash() == b.hash() && compare(a, b) == 0;
}
inline bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

struct ExprLess {
    bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};
struct ExprHash {
    std::size_t operator()(const Expr& e) const { return e.hash(); }
};

// Smart constructors.
Expr number(const Rational& q);
Expr add(std::span<const Expr> xs);
Expr mul(std::span<const Expr> xs);
Expr pow(const Expr& base, const Rational& exponent);
Expr apply_fn(Fn f, const Expr& arg);
Expr apply(const std::string& name, std::vector<Expr> args);
Expr derivative_of(const std::string& name, std::vector<int> orders, std::vector<Expr> args);

inline Expr add(std::initializer_list<Expr> xs) { return add(std::span<const Expr>(xs.begin(), xs.size())); }
inline Expr mul(std::initializer_list<Expr> xs) { return mul(std::span<const Expr>(xs.begin(), xs.size())); }

Expr sqrt(const Expr& e);
Expr exp(const Expr& e);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);

/// Returns (coefficient, monomial) with coefficient*monomial == e and the
/// monomial carrying coefficient 1.
std::pair<Rational, Expr> split_coefficient(const Expr& e);

/// Sign of the leading coefficient, used for odd/even function parity and
/// for sign normalization of polynomial bases.
int leading_sign(const Expr& e);

/// Identity rebuild through the constructors. Canonical inputs come back
/// unchanged; the function exists to make idempotence checkable.
Expr normalize(const Expr& e);

}  // namespace psym
