#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "psym/dsl.hpp"
#include "psym/engine.hpp"
#include "psym/jet.hpp"
#include "psym/numeric.hpp"

namespace psym::test {

inline Expr P(const std::string& text, const JetContext& ctx) { return parse_expr(text, ctx); }

// Expression paired with an evaluator that never went through the kernel.
struct Sample {
    Expr e;
    std::function<double(const std::map<std::string, double>&)> eval;
};

// Random smooth expressions over a fixed set of symbols. The evaluator is
// built from the generation tree, so it is an oracle independent of
// normalization.
class ExprGen {
public:
    ExprGen(std::vector<Symbol> symbols, std::uint64_t seed, bool functions = true)
        : symbols_(std::move(symbols)), rng_(seed), functions_(functions) {}

    Sample operator()(int depth = 3) { return gen(depth); }

    std::mt19937_64& rng() { return rng_; }

    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

    Rational rational() {
        const long num = std::uniform_int_distribution<long>(-5, 5)(rng_);
        const long den = std::uniform_int_distribution<long>(1, 3)(rng_);
        return Rational(num, den);
    }

private:
    Sample leaf() {
        if (pick(4) == 0) {
            Rational q = rational();
            if (q == 0) q = 1;
            q.canonicalize();
            const double v = q.get_d();
            return {number(q), [v](const auto&) { return v; }};
        }
        const Symbol s = symbols_[pick(static_cast<int>(symbols_.size()))];
        const std::string n = s.name();
        return {Expr(s), [n](const auto& m) { return m.at(n); }};
    }

    Sample gen(int depth) {
        if (depth <= 0) return leaf();
        const int k = pick(functions_ ? 6 : 4);
        switch (k) {
            case 0: {
                Sample a = gen(depth - 1), b = gen(depth - 1);
                return {a.e + b.e, [a, b](const auto& m) { return a.eval(m) + b.eval(m); }};
            }
            case 1: {
                Sample a = gen(depth - 1), b = gen(depth - 1);
                return {a.e * b.e, [a, b](const auto& m) { return a.eval(m) * b.eval(m); }};
            }
            case 2: {
                Sample a = gen(depth - 1), b = gen(depth - 1);
                const Rational c = rational();
                const double cd = c.get_d();
                return {a.e - number(c) * b.e, [a, b, cd](const auto& m) { return a.eval(m) - cd * b.eval(m); }};
            }
            case 3: {
                Sample a = gen(depth - 1);
                const int p = 2 + pick(2);
                return {pow(a.e, p), [a, p](const auto& m) { return std::pow(a.eval(m), p); }};
            }
            case 4: {
                Sample a = gen(depth - 2);
                return {apply_fn(Fn::Sin, a.e), [a](const auto& m) { return std::sin(a.eval(m)); }};
            }
            default: {
                Sample a = gen(depth - 2);
                return {exp(a.e * number(Rational(1, 4))),
                        [a](const auto& m) { return std::exp(a.eval(m) / 4); }};
            }
        }
    }

    std::vector<Symbol> symbols_;
    std::mt19937_64 rng_;
    bool functions_;
};

inline std::map<std::string, double> random_point(const std::vector<Symbol>& symbols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.5, 1.5);
    std::map<std::string, double> m;
    for (const auto& s : symbols) m[s.name()] = d(rng);
    return m;
}

inline double eval(const Expr& e, const std::map<std::string, double>& values,
                   const FunctionTable* functions = nullptr) {
    return evaluate(e, NumericEnv{values, functions});
}

}  // namespace psym::test
