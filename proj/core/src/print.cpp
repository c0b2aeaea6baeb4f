#include <sstream>

#include "psym/expr.hpp"

namespace psym {

namespace {

void print(std::ostream& os, const Expr& e);

void print_rational(std::ostream& os, const Rational& q) {
    os << q.get_num().get_str();
    if (q.get_den() != 1) os << '/' << q.get_den().get_str();
}

bool needs_parens_as_base(const Expr& e) {
    switch (e.kind()) {
        case Kind::Number: return e.number() < 0 || e.number().get_den() != 1;
        case Kind::Add:
        case Kind::Mul: return true;
        default: return false;
    }
}

void print_factor(std::ostream& os, const Term& f) {
    if (needs_parens_as_base(f.expr)) {
        os << '(';
        print(os, f.expr);
        os << ')';
    } else {
        print(os, f.expr);
    }
    if (f.coef == 1) return;
    os << '^';
    if (f.coef > 0 && f.coef.get_den() == 1) {
        print_rational(os, f.coef);
    } else {
        os << '(';
        print_rational(os, f.coef);
        os << ')';
    }
}

// Prints mag * mono with mag > 0; the sign is emitted by the caller.
void print_scaled(std::ostream& os, const Rational& mag, const Expr& mono) {
    std::vector<Term> factors;
    if (mono.kind() == Kind::Mul) factors = mono.terms();
    else if (!mono.is_one()) factors.push_back(Term{mono, 1});
    bool first = true;
    if (mag != 1 || factors.empty()) {
        const bool frac = mag.get_den() != 1 && !factors.empty();
        if (frac) os << '(';
        print_rational(os, mag);
        if (frac) os << ')';
        first = false;
    }
    // Highest ranked factors first.
    for (auto it = factors.rbegin(); it != factors.rend(); ++it) {
        if (!first) os << '*';
        first = false;
        print_factor(os, *it);
    }
}

void print_args(std::ostream& os, const std::vector<Expr>& args) {
    os << '(';
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) os << ", ";
        print(os, args[i]);
    }
    os << ')';
}

void print(std::ostream& os, const Expr& e) {
    switch (e.kind()) {
        case Kind::Number: print_rational(os, e.number()); return;
        case Kind::Symbol: os << e.symbol().name(); return;
        case Kind::Mul: {
            auto [c, mono] = split_coefficient(e);
            if (c < 0) os << '-';
            print_scaled(os, abs(c), mono);
            return;
        }
        case Kind::Add: {
            bool first = true;
            for (auto it = e.terms().rbegin(); it != e.terms().rend(); ++it) {
                if (it->coef < 0) os << (first ? "-" : " - ");
                else if (!first) os << " + ";
                print_scaled(os, abs(it->coef), it->expr);
                first = false;
            }
            const Rational& c = e.number();
            if (c != 0) {
                os << (c < 0 ? " - " : " + ");
                print_rational(os, abs(c));
            }
            return;
        }
        case Kind::Func:
            os << fn_name(e.fn()) << '(';
            print(os, e.args()[0]);
            os << ')';
            return;
        case Kind::Apply:
            os << e.name();
            print_args(os, e.args());
            return;
        case Kind::Deriv:
            os << "deriv(" << e.name();
            for (int o : e.orders()) os << ',' << o;
            os << ')';
            print_args(os, e.args());
            return;
    }
}

}  // namespace

std::string Expr::str() const {
    std::ostringstream os;
    print(os, *this);
    return os.str();
}

}  // namespace psym
