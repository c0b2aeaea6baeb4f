#include "psym/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace psym {

void check_ansatz(const Ansatz& a, const JetContext& ctx) {
    if (static_cast<int>(a.u.size()) != ctx.q())
        throw Error(ErrorKind::Contract, "ansatz " + a.name + " needs one expression per dependent variable");
    const Symbol lambda = ctx.group_parameter();
    for (const auto& U : a.u) {
        if (contains(U, [](const Symbol& s) { return s.is_jet(); }))
            throw Error(ErrorKind::Contract, "ansatz " + a.name + " mentions jet coordinates");
        if (!a.orbit && contains_symbol(U, lambda))
            throw Error(ErrorKind::Contract, "ansatz " + a.name + " uses lambda but is not declared as an orbit");
    }
}

Verdict VerifyVerdict::verdict() const {
    bool unknown = false;
    bool numeric = false;
    for (const auto& c : checks) {
        switch (c.status.verdict) {
            case Verdict::Nonzero: return Verdict::Nonzero;
            case Verdict::Unknown: unknown = true; break;
            case Verdict::NumericallyZero: numeric = true; break;
            case Verdict::SymbolicallyZero: break;
        }
    }
    if (unknown) return Verdict::Unknown;
    return numeric ? Verdict::NumericallyZero : Verdict::SymbolicallyZero;
}

bool VerifyVerdict::passed() const {
    const Verdict v = verdict();
    return v == Verdict::SymbolicallyZero || v == Verdict::NumericallyZero;
}

bool VerifyVerdict::symbolic() const { return verdict() == Verdict::SymbolicallyZero; }

Expr substitute_ansatz(const Expr& e, const Ansatz& a, const JetContext& ctx) {
    std::map<std::pair<int, MultiIndex>, Expr> memo;
    std::function<Expr(int, const MultiIndex&)> deriv = [&](int alpha, const MultiIndex& J) -> Expr {
        auto key = std::make_pair(alpha, J);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        Expr v;
        int last = -1;
        for (std::size_t i = 0; i < J.size(); ++i)
            if (J[i] > 0) last = static_cast<int>(i);
        if (last < 0) {
            v = a.u[alpha];
        } else {
            MultiIndex K = J;
            --K[last];
            v = diff(deriv(alpha, K), ctx.independent(last));
        }
        memo.emplace(key, v);
        return v;
    };
    return rebuild(e, [&](const Symbol& s) -> std::optional<Expr> {
        if (!s.is_jet()) return std::nullopt;
        return deriv(s.alpha(), s.counts());
    });
}

VerifyVerdict verify_expressions(const Ansatz& a, const std::vector<std::pair<std::string, Expr>>& exprs,
                                 const JetContext& ctx, const VerifyOptions& opts) {
    check_ansatz(a, ctx);
    SampleOptions so = opts.sampling;
    for (const auto& [k, v] : a.box) so.boxes[k] = v;
    if (opts.realizations) so.functions = opts.realizations;

    VerifyVerdict out;
    bool realized = false;
    for (const auto& [name, e] : exprs) {
        Expr r = substitute_ansatz(e, a, ctx);
        if (!r.is_zero() && opts.realizations && has_function_application(r)) {
            r = instantiate(r, *opts.realizations);
            realized = true;
        }
        EquationCheck c{name, is_zero(r, ZeroMode::SymbolicThenNumeric, so)};
        if (c.status.verdict != Verdict::SymbolicallyZero) out.samples += so.samples;
        out.max_residual = std::max(out.max_residual, std::abs(c.status.value));
        out.checks.push_back(std::move(c));
    }
    if (realized) out.notes.push_back("uninterpreted functions replaced by their declared realizations");
    return out;
}

VerifyVerdict verify_ansatz(const Ansatz& a, const DiffSystem& S, const VerifyOptions& opts) {
    std::vector<std::pair<std::string, Expr>> exprs;
    for (const auto& eq : S.equations()) exprs.emplace_back(eq.name, eq.expr);
    return verify_expressions(a, exprs, S.context(), opts);
}

std::vector<Expr> characteristic_on(const Ansatz& a, const VectorField& X, const JetContext& ctx) {
    check_field(X, ctx);
    std::vector<Expr> out;
    for (int alpha = 0; alpha < ctx.q(); ++alpha) {
        Expr q = X.phi[alpha];
        if (X.type == VectorField::Type::Point)
            for (int i = 0; i < ctx.p(); ++i) q = q - X.xi[i] * ctx.u(alpha, ctx.unit(i));
        out.push_back(substitute_ansatz(q, a, ctx));
    }
    return out;
}

VerifyVerdict verify_orbit_ode(const Ansatz& a, const VectorField& X, const JetContext& ctx,
                               const VerifyOptions& opts) {
    const Symbol lambda = ctx.group_parameter();
    if (!a.orbit)
        throw Error(ErrorKind::Contract, "ansatz " + a.name + " is not declared as an orbit in lambda");
    const std::vector<Expr> Q = characteristic_on(a, X, ctx);

    auto run = [&](int sign) {
        std::vector<std::pair<std::string, Expr>> exprs;
        for (int alpha = 0; alpha < ctx.q(); ++alpha)
            exprs.emplace_back("orbit_" + ctx.dependents()[alpha], diff(a.u[alpha], lambda) - sign * Q[alpha]);
        // Residuals are already free of jets; substitution is the identity.
        return verify_expressions(a, exprs, ctx, opts);
    };
    VerifyVerdict v = run(1);
    if (v.passed()) return v;
    VerifyVerdict rev = run(-1);
    if (rev.passed()) {
        rev.notes.push_back("family traverses the orbit with reversed orientation (lambda -> -lambda)");
        rev.orientation = -1;
        return rev;
    }
    return v;
}

VerifyVerdict verify_series(const Ansatz& a, const VectorField& X, const DiffSystem& S, int k,
                            const VerifyOptions& opts) {
    const auto rows = exp_series_terms(X, S, k);
    std::vector<std::pair<std::string, Expr>> exprs;
    for (std::size_t e = 0; e < rows.size(); ++e)
        for (std::size_t r = 0; r < rows[e].size(); ++r)
            exprs.emplace_back(S.equations()[e].name + "^" + std::to_string(r + 1), rows[e][r]);
    return verify_expressions(a, exprs, S.context(), opts);
}

}  // namespace psym
