#include "psym/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_map>

namespace psym {

namespace {

struct Evaluator {
    const NumericEnv& env;
    std::unordered_map<const Node*, double> memo;

    double body(const std::string& name, const std::vector<int>& orders, const std::vector<double>& args) {
        if (!env.functions) throw Error(ErrorKind::SamplingFailure, "no realization for function " + name);
        auto it = env.functions->find(name);
        if (it == env.functions->end())
            throw Error(ErrorKind::SamplingFailure, "no realization for function " + name);
        const FunctionDef& def = it->second;
        if (def.params.size() != args.size())
            throw Error(ErrorKind::Contract, "arity mismatch for function " + name);
        Expr b = def.body;
        for (std::size_t j = 0; j < orders.size(); ++j)
            for (int k = 0; k < orders[j]; ++k) b = diff(b, def.params[j]);
        NumericEnv local{env.values, env.functions};
        for (std::size_t j = 0; j < args.size(); ++j) local.values[def.params[j].name()] = args[j];
        Evaluator sub{local, {}};
        return sub(b);
    }

    double operator()(const Expr& e) {
        if (auto it = memo.find(&e.node()); it != memo.end()) return it->second;
        double v = 0.0;
        switch (e.kind()) {
            case Kind::Number: v = e.number().get_d(); break;
            case Kind::Symbol: {
                auto it = env.values.find(e.symbol().name());
                if (it == env.values.end())
                    throw Error(ErrorKind::SamplingFailure, "no value for symbol " + e.symbol().name());
                v = it->second;
                break;
            }
            case Kind::Add:
                v = e.number().get_d();
                for (const auto& t : e.terms()) v += t.coef.get_d() * (*this)(t.expr);
                break;
            case Kind::Mul:
                v = e.number().get_d();
                for (const auto& t : e.terms()) {
                    const double b = (*this)(t.expr);
                    if (t.coef.get_den() == 1) {
                        v *= std::pow(b, t.coef.get_num().get_d());
                    } else if (t.coef.get_den() % 2 == 1 && b < 0) {
                        const bool odd = mpz_odd_p(t.coef.get_num_mpz_t());
                        v *= std::pow(-b, t.coef.get_d()) * (odd ? -1.0 : 1.0);
                    } else {
                        v *= std::pow(b, t.coef.get_d());
                    }
                }
                break;
            case Kind::Func: {
                const double a = (*this)(e.args()[0]);
                switch (e.fn()) {
                    case Fn::Exp: v = std::exp(a); break;
                    case Fn::Log: v = std::log(a); break;
                    case Fn::Sin: v = std::sin(a); break;
                    case Fn::Cos: v = std::cos(a); break;
                    case Fn::Tan: v = std::tan(a); break;
                    case Fn::Sinh: v = std::sinh(a); break;
                    case Fn::Cosh: v = std::cosh(a); break;
                    case Fn::Tanh: v = std::tanh(a); break;
                    case Fn::Sech: v = 1.0 / std::cosh(a); break;
                }
                break;
            }
            case Kind::Apply:
            case Kind::Deriv: {
                std::vector<double> args;
                for (const auto& a : e.args()) args.push_back((*this)(a));
                std::vector<int> orders =
                    e.kind() == Kind::Deriv ? e.orders() : std::vector<int>(args.size(), 0);
                v = body(e.name(), orders, args);
                break;
            }
        }
        memo.emplace(&e.node(), v);
        return v;
    }
};

}  // namespace

double evaluate(const Expr& e, const NumericEnv& env) {
    Evaluator ev{env, {}};
    return ev(e);
}

double magnitude(const Expr& e, const NumericEnv& env) {
    Evaluator ev{env, {}};
    if (e.kind() != Kind::Add) return std::abs(ev(e));
    double m = std::abs(e.number().get_d());
    for (const auto& t : e.terms()) m += std::abs(t.coef.get_d() * ev(t.expr));
    return m;
}

FunctionDef random_cubic(const std::string& name, std::size_t arity, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    FunctionDef def;
    for (std::size_t i = 0; i < arity; ++i)
        def.params.push_back(Symbol::make("%" + name + std::to_string(i), SymbolKind::Parameter));
    // All monomials of total degree <= 3, enumerated by exponent vectors.
    std::vector<Expr> terms;
    std::vector<int> e(arity, 0);
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
        if (i == arity) {
            // Coefficients are exact dyadic rationals so the body stays exact.
            Rational c(static_cast<long>(std::lround(coef(rng) * 1024)), 1024);
            std::vector<Expr> fs{number(c)};
            for (std::size_t j = 0; j < arity; ++j) fs.push_back(pow(Expr(def.params[j]), e[j]));
            terms.push_back(mul(std::span<const Expr>(fs)));
            return;
        }
        for (int k = 0; k <= left; ++k) {
            e[i] = k;
            rec(i + 1, left - k);
        }
        e[i] = 0;
    };
    rec(0, 3);
    def.body = add(std::span<const Expr>(terms));
    return def;
}

const char* to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::SymbolicallyZero: return "symbolically-zero";
        case Verdict::NumericallyZero: return "numerically-zero";
        case Verdict::Nonzero: return "nonzero";
        case Verdict::Unknown: return "unknown";
    }
    return "unknown";
}

double sample_value(const std::string& name, const SampleOptions& opts, std::mt19937_64& rng) {
    if (auto it = opts.boxes.find(name); it != opts.boxes.end()) {
        std::uniform_real_distribution<double> d(it->second.first, it->second.second);
        return d(rng);
    }
    std::uniform_real_distribution<double> mag(0.1, 2.0);
    std::bernoulli_distribution neg(0.5);
    const double m = mag(rng);
    return neg(rng) ? -m : m;
}

namespace {

void collect_function_arities(const Expr& e, std::map<std::string, std::size_t>& out) {
    switch (e.kind()) {
        case Kind::Number:
        case Kind::Symbol: return;
        case Kind::Add:
        case Kind::Mul:
            for (const auto& t : e.terms()) collect_function_arities(t.expr, out);
            return;
        case Kind::Apply:
        case Kind::Deriv:
            out.emplace(e.name(), e.args().size());
            [[fallthrough]];
        case Kind::Func:
            for (const auto& a : e.args()) collect_function_arities(a, out);
    }
}

}  // namespace

ZeroStatus is_zero(const Expr& e, ZeroMode mode, const SampleOptions& opts) {
    ZeroStatus st;
    if (e.is_zero()) {
        st.verdict = Verdict::SymbolicallyZero;
        return st;
    }
    st.residual = e.str();
    if (e.is_number()) {
        st.verdict = Verdict::Nonzero;
        st.value = e.number().get_d();
        return st;
    }
    if (mode == ZeroMode::SymbolicOnly) {
        st.verdict = Verdict::Unknown;
        return st;
    }

    std::mt19937_64 rng(opts.seed);
    FunctionTable table;
    if (opts.functions) table = *opts.functions;
    std::map<std::string, std::size_t> arities;
    collect_function_arities(e, arities);
    for (const auto& [name, arity] : arities) {
        if (table.count(name)) continue;
        if (!opts.allow_random_functions)
            throw Error(ErrorKind::SamplingFailure, "no realization for function " + name);
        table.emplace(name, random_cubic(name, arity, rng));
    }
    const SymbolSet syms = free_symbols(e);

    int good = 0;
    int attempts = 0;
    bool unsure = false;
    double worst = 0.0;
    const double loose = std::sqrt(opts.tol);
    while (good < opts.samples) {
        if (attempts++ > opts.samples + opts.max_resamples)
            throw Error(ErrorKind::SamplingFailure, "could not find finite sample points for " + st.residual);
        NumericEnv env;
        env.functions = &table;
        for (const auto& s : syms) env.values[s.name()] = sample_value(s.name(), opts, rng);
        const double v = evaluate(e, env);
        const double scale = std::max(1.0, magnitude(e, env));
        if (!std::isfinite(v) || !std::isfinite(scale)) continue;
        ++good;
        const double rel = std::abs(v) / scale;
        worst = std::max(worst, rel);
        if (rel > loose) {
            st.verdict = Verdict::Nonzero;
            st.witness = env.values;
            st.value = v;
            return st;
        }
        if (rel > opts.tol) unsure = true;
    }
    st.value = worst;
    st.verdict = unsure ? Verdict::Unknown : Verdict::NumericallyZero;
    return st;
}

}  // namespace psym

namespace psym {

CompiledExpr::CompiledExpr(const Expr& e, const std::vector<std::string>& slots,
                           const std::map<std::string, double>& fixed, const FunctionTable* functions) {
    const Expr body = functions ? instantiate(e, *functions) : e;
    emit(body, slots, fixed);
}

int CompiledExpr::emit(const Expr& e, const std::vector<std::string>& slots,
                       const std::map<std::string, double>& fixed) {
    Instr in{Op::Const};
    std::vector<Kid> kids;
    switch (e.kind()) {
        case Kind::Number: in.value = e.number().get_d(); break;
        case Kind::Symbol: {
            const std::string& n = e.symbol().name();
            auto it = std::find(slots.begin(), slots.end(), n);
            if (it != slots.end()) {
                in.op = Op::Slot;
                in.index = static_cast<int>(it - slots.begin());
            } else if (auto f = fixed.find(n); f != fixed.end()) {
                in.value = f->second;
            } else {
                throw Error(ErrorKind::SamplingFailure, "no value for symbol " + n);
            }
            break;
        }
        case Kind::Add:
        case Kind::Mul:
            in.op = e.is_add() ? Op::Add : Op::Mul;
            in.value = e.number().get_d();
            for (const auto& t : e.terms()) {
                Kid k{emit(t.expr, slots, fixed), t.coef.get_d()};
                if (in.op == Op::Mul && t.coef.get_den() != 1 && t.coef.get_den() % 2 == 1)
                    k.parity = mpz_odd_p(t.coef.get_num_mpz_t()) ? 1 : 2;
                kids.push_back(k);
            }
            break;
        case Kind::Func:
            in.op = Op::Func;
            in.fn = e.fn();
            kids.push_back({emit(e.args()[0], slots, fixed), 1.0});
            break;
        case Kind::Apply:
        case Kind::Deriv: throw Error(ErrorKind::SamplingFailure, "no realization for function " + e.name());
    }
    if (in.op != Op::Slot) in.index = static_cast<int>(kids_.size());
    in.count = static_cast<int>(kids.size());
    kids_.insert(kids_.end(), kids.begin(), kids.end());
    code_.push_back(in);
    return static_cast<int>(code_.size()) - 1;
}

double CompiledExpr::operator()(const double* slots) const {
    if (code_.empty()) return 0.0;
    thread_local std::vector<double> reg;
    if (reg.size() < code_.size()) reg.resize(code_.size());
    for (std::size_t i = 0; i < code_.size(); ++i) {
        const Instr& in = code_[i];
        double v = in.value;
        const Kid* k = kids_.data() + in.index;
        switch (in.op) {
            case Op::Const: break;
            case Op::Slot: v = slots[in.index]; break;
            case Op::Add:
                for (int j = 0; j < in.count; ++j) v += k[j].coef * reg[k[j].reg];
                break;
            case Op::Mul:
                for (int j = 0; j < in.count; ++j) {
                    const double b = reg[k[j].reg];
                    if (k[j].parity != 0 && b < 0)
                        v *= std::pow(-b, k[j].coef) * (k[j].parity == 1 ? -1.0 : 1.0);
                    else
                        v *= std::pow(b, k[j].coef);
                }
                break;
            case Op::Func: {
                const double a = reg[k[0].reg];
                switch (in.fn) {
                    case Fn::Exp: v = std::exp(a); break;
                    case Fn::Log: v = std::log(a); break;
                    case Fn::Sin: v = std::sin(a); break;
                    case Fn::Cos: v = std::cos(a); break;
                    case Fn::Tan: v = std::tan(a); break;
                    case Fn::Sinh: v = std::sinh(a); break;
                    case Fn::Cosh: v = std::cosh(a); break;
                    case Fn::Tanh: v = std::tanh(a); break;
                    case Fn::Sech: v = 1.0 / std::cosh(a); break;
                }
                break;
            }
        }
        reg[i] = v;
    }
    return reg[code_.size() - 1];
}

}  // namespace psym
