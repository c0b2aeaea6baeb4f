#include "psym/engine.hpp"

#include <algorithm>

namespace psym {

const char* to_string(SideKind k) noexcept {
    switch (k) {
        case SideKind::Nonvanishing: return "nonvanishing";
        case SideKind::ParameterConstraint: return "parameter-constraint";
        case SideKind::DroppedFactor: return "dropped-factor";
    }
    return "unknown";
}

const char* to_string(ChainStatus s) noexcept {
    switch (s) {
        case ChainStatus::Exact: return "exact";
        case ChainStatus::Partial: return "partial";
        case ChainStatus::Inconsistent: return "inconsistent";
        case ChainStatus::Inconclusive: return "inconclusive";
    }
    return "unknown";
}

namespace {

bool has_jet(const Expr& e) {
    return contains(e, [](const Symbol& s) { return s.is_jet(); });
}

bool has_independent(const Expr& e) {
    return contains(e, [](const Symbol& s) {
        return s.kind() == SymbolKind::Independent || s.kind() == SymbolKind::GroupParameter;
    });
}

ZeroStatus decide(const Expr& e, const ChainOptions& opts) {
    if (e.is_zero() || !opts.numeric_fallback) {
        return is_zero(e, ZeroMode::SymbolicOnly, opts.sampling);
    }
    try {
        return is_zero(e, ZeroMode::SymbolicThenNumeric, opts.sampling);
    } catch (const Error& err) {
        if (err.kind() != ErrorKind::SamplingFailure) throw;
        ZeroStatus st;
        st.verdict = Verdict::Unknown;
        st.residual = e.str();
        return st;
    }
}

struct Policy {
    enum class Outcome { Keep, ParameterOnly, Nonzero } outcome = Outcome::Keep;
    Expr reduced;
    Expr parameter_part = Expr(1);
    std::vector<SideCondition> side;
};

bool declared_nonzero(const Expr& base, const std::vector<Expr>& nonzero) {
    for (const auto& nz : nonzero) {
        if (proportional(base, nz)) return true;
        for (const auto& f : factor_split(nz)) {
            Expr b = f.kind() == Kind::Mul && f.terms().size() == 1 ? f.terms()[0].expr : f;
            if (proportional(base, b)) return true;
        }
    }
    return false;
}

Policy apply_policy(const Expr& e, const std::vector<Expr>& nonzero, int step) {
    Policy pol;
    std::vector<Expr> keep;
    std::vector<Expr> params;
    for (const auto& f : factor_split(e)) {
        Expr base = f;
        Rational k = 1;
        if (f.kind() == Kind::Mul && f.terms().size() == 1 && f.number() == 1) {
            base = f.terms()[0].expr;
            k = f.terms()[0].coef;
        }
        if (k < 0 || (base.kind() == Kind::Func && base.fn() == Fn::Exp)) {
            pol.side.push_back({SideKind::DroppedFactor, f, step});
            continue;
        }
        if (declared_nonzero(base, nonzero)) {
            pol.side.push_back({SideKind::DroppedFactor, f, step});
            continue;
        }
        if (!has_jet(base)) {
            if (has_independent(base) || has_function_application(base)) {
                pol.side.push_back({SideKind::Nonvanishing, base, step});
                continue;
            }
            params.push_back(f);
            continue;
        }
        keep.push_back(f);
    }
    if (keep.empty()) {
        if (!params.empty()) {
            pol.outcome = Policy::Outcome::ParameterOnly;
            pol.parameter_part = mul(std::span<const Expr>(params));
        } else {
            pol.outcome = Policy::Outcome::Nonzero;
        }
        return pol;
    }
    for (const auto& p : params) pol.side.push_back({SideKind::Nonvanishing, p, step});
    pol.reduced = mul(std::span<const Expr>(keep));
    return pol;
}

DiffSystem merged(const DiffSystem& base, const DiffSystem& chain, RestrictMode mode) {
    DiffSystem out(base.context());
    if (mode == RestrictMode::Chain) {
        for (const auto& eq : chain.equations()) out.add(eq);
        for (const auto& eq : base.equations()) out.add(eq);
    } else {
        for (const auto& eq : base.equations()) out.add(eq);
        for (const auto& eq : chain.equations()) out.add(eq);
    }
    return out;
}

}  // namespace

ZeroStatus exact_symmetry_check(const VectorField& X, const DiffSystem& S, const SampleOptions& opts) {
    const Prolongation pr(X, S.context());
    ZeroStatus agg;
    agg.verdict = Verdict::SymbolicallyZero;
    for (const auto& eq : S.equations()) {
        Expr r = S.restrict(pr.apply(eq.expr));
        ZeroStatus st = is_zero(r, ZeroMode::SymbolicThenNumeric, opts);
        if (st.verdict == Verdict::Nonzero) return st;
        if (st.verdict == Verdict::Unknown) agg = st;
        else if (st.verdict == Verdict::NumericallyZero && agg.verdict == Verdict::SymbolicallyZero) agg = st;
    }
    return agg;
}

ChainResult run_chain(const std::function<Expr(const Expr&)>& act, const DiffSystem& S, const ChainOptions& opts,
                      std::optional<int> period) {
    const JetContext& ctx = S.context();
    ChainResult res(ctx);
    DiffSystem chain(ctx);
    std::vector<Expr> current;
    for (const auto& eq : S.equations()) current.push_back(eq.expr);

    int nonzero_levels = 0;
    for (int r = 1; r <= opts.max_order; ++r) {
        const DiffSystem full = merged(S, chain, opts.restrict);
        std::vector<Expr> next;
        std::vector<Equation> appended;
        bool level_nonzero = false;
        res.applications = r;
        for (std::size_t c = 0; c < current.size(); ++c) {
            ChainStep step;
            step.r = r;
            step.component = static_cast<int>(c);
            step.raw = act(current[c]);
            Expr full_form = opts.strong ? step.raw : full.restrict(step.raw);
            Expr shown = full_form;
            if (!opts.strong && opts.restrict == RestrictMode::Chain) shown = chain.restrict(step.raw);
            step.restricted = shown;
            ZeroStatus z = decide(full_form, opts);
            step.verdict = z.verdict;
            if (z.zero()) {
                step.reduced = Expr(0);
                res.steps.push_back(std::move(step));
                continue;
            }
            Policy pol = apply_policy(full_form, opts.nonzero, r);
            if (pol.outcome == Policy::Outcome::Nonzero) {
                step.side_conditions = pol.side;
                step.reduced = full_form;
                res.steps.push_back(step);
                res.side_conditions.insert(res.side_conditions.end(), pol.side.begin(), pol.side.end());
                res.status = ChainStatus::Inconsistent;
                res.inconsistent_step = r;
                res.order = nonzero_levels;
                res.reason = "restricted step reduces to a nonvanishing expression free of jet coordinates";
                res.system = merged(S, chain, opts.restrict);
                return res;
            }
            if (pol.outcome == Policy::Outcome::ParameterOnly) {
                pol.side.push_back({SideKind::ParameterConstraint, pol.parameter_part, r});
                step.side_conditions = pol.side;
                step.reduced = Expr(0);
                res.side_conditions.insert(res.side_conditions.end(), pol.side.begin(), pol.side.end());
                res.steps.push_back(std::move(step));
                continue;
            }
            if (opts.restrict == RestrictMode::Chain && !opts.strong && !(shown == full_form)) {
                Policy shown_pol = apply_policy(shown, opts.nonzero, r);
                if (shown_pol.outcome == Policy::Outcome::Keep) pol = std::move(shown_pol);
            }
            step.reduced = pol.reduced;
            level_nonzero = true;
            if (!opts.strong) {
                std::vector<Symbol> avoid =
                    opts.restrict == RestrictMode::Chain ? chain.pivots() : full.pivots();
                auto choice = choose_pivot(pol.reduced, ctx, avoid);
                if (!choice) {
                    step.side_conditions = pol.side;
                    res.steps.push_back(step);
                    res.side_conditions.insert(res.side_conditions.end(), pol.side.begin(), pol.side.end());
                    res.status = ChainStatus::Inconclusive;
                    res.order = nonzero_levels;
                    res.reason = "unsolvable-step: no jet coordinate of step " + std::to_string(r) +
                                 " enters linearly";
                    res.system = merged(S, chain, opts.restrict);
                    return res;
                }
                for (const auto& nv : choice->nonvanishing)
                    if (!nv.is_number()) pol.side.push_back({SideKind::Nonvanishing, nv, r});
                Equation eq;
                eq.name = "chain" + std::to_string(r) + (current.size() > 1 ? "_" + std::to_string(c) : "");
                eq.expr = pol.reduced;
                eq.pivot = choice->pivot;
                eq.rhs = choice->rhs;
                eq.nonvanishing = choice->nonvanishing;
                step.pivot = choice->pivot;
                appended.push_back(std::move(eq));
            }
            step.side_conditions = pol.side;
            res.side_conditions.insert(res.side_conditions.end(), pol.side.begin(), pol.side.end());
            next.push_back(pol.reduced);
            res.steps.push_back(std::move(step));
        }
        for (auto& eq : appended) chain.add(eq);
        if (!level_nonzero) {
            res.status = nonzero_levels == 0 ? ChainStatus::Exact : ChainStatus::Partial;
            res.order = nonzero_levels;
            res.system = merged(S, chain, opts.restrict);
            return res;
        }
        ++nonzero_levels;
        if (period && r + 1 >= *period) {
            // R^k = I: the next image returns to Delta itself, which vanishes
            // on the accumulated system.
            res.status = ChainStatus::Partial;
            res.order = nonzero_levels;
            res.reason = "closed by declared period " + std::to_string(*period);
            res.system = merged(S, chain, opts.restrict);
            if (r + 1 > opts.max_order) return res;
            // Still compute the closing step for the record.
            const DiffSystem closing = merged(S, chain, opts.restrict);
            for (std::size_t c = 0; c < next.size(); ++c) {
                ChainStep step;
                step.r = r + 1;
                step.component = static_cast<int>(c);
                step.raw = act(next[c]);
                step.restricted = opts.restrict == RestrictMode::Chain ? chain.restrict(step.raw)
                                                                       : closing.restrict(step.raw);
                ZeroStatus z = decide(closing.restrict(step.raw), opts);
                step.verdict = z.verdict;
                step.reduced = z.zero() ? Expr(0) : step.restricted;
                res.steps.push_back(std::move(step));
            }
            res.applications = r + 1;
            return res;
        }
        current = std::move(next);
    }
    res.status = ChainStatus::Inconclusive;
    res.order = nonzero_levels;
    res.reason = "max_order reached";
    res.system = merged(S, chain, opts.restrict);
    return res;
}

ChainResult partial_chain(const VectorField& X, const DiffSystem& S, const ChainOptions& opts) {
    check_field(X, S.context());
    const Prolongation pr(X, S.context());
    return run_chain([&](const Expr& e) { return pr.apply(e); }, S, opts);
}

ChainResult discrete_chain(const DiscreteMap& R, const DiffSystem& S, const ChainOptions& opts) {
    const DiscreteProlongation pr(R, S.context());
    return run_chain([&](const Expr& e) { return pr.apply(e); }, S, opts, R.period);
}

DiffSystem conditional_system(const VectorField& X, const DiffSystem& S) {
    if (X.degenerate()) throw Error(ErrorKind::DegenerateField, "field " + X.name + " vanishes identically");
    check_field(X, S.context());
    const JetContext& ctx = S.context();
    const VectorField Q = evolutionary_form(X, ctx);
    DiffSystem out(ctx);
    for (int a = 0; a < ctx.q(); ++a) {
        if (Q.phi[a].is_zero()) continue;
        out.add("invariance_" + ctx.dependents()[a], Q.phi[a]);
    }
    const std::vector<Symbol> conds = out.pivots();
    for (const auto& eq : S.equations()) {
        Expr e = out.restrict(eq.expr);
        if (e.is_zero()) continue;
        bool clash = std::any_of(conds.begin(), conds.end(), [&](const Symbol& v) { return in_cone(eq.pivot, v); });
        if (!clash && e == eq.expr) {
            out.add(eq);
            continue;
        }
        out.add(eq.name, e, std::nullopt, out.pivots());
    }
    return out;
}

std::vector<Expr> frechet_apply(const std::vector<Expr>& phi, const DiffSystem& S) {
    const JetContext& ctx = S.context();
    for (const auto& f : phi)
        if (has_jet(f)) throw Error(ErrorKind::Contract, "frechet_apply needs phi depending on x only");
    const Prolongation pr(VectorField::generalized("phi", ctx.p(), phi), ctx);
    std::vector<Expr> out;
    for (const auto& eq : S.equations()) out.push_back(pr.apply(eq.expr));
    return out;
}

std::vector<std::vector<Expr>> exp_series_terms(const VectorField& X, const DiffSystem& S, int k) {
    if (k < 1) throw Error(ErrorKind::Contract, "series needs k >= 1");
    const Prolongation pr(X, S.context());
    std::vector<std::vector<Expr>> out;
    for (const auto& eq : S.equations()) {
        std::vector<Expr> row;
        Expr cur = eq.expr;
        for (int r = 1; r <= k; ++r) {
            cur = pr.apply(cur);
            row.push_back(cur);
        }
        out.push_back(std::move(row));
    }
    return out;
}

void DynSys::check() const {
    if (!ctx || ctx->p() != 1) throw Error(ErrorKind::Contract, "dynamical system needs exactly one independent variable");
    if (n() != ctx->q()) throw Error(ErrorKind::Contract, "dynamical system needs one component per dependent variable");
    for (const auto& fa : f) {
        if (jet_order(fa) > 0 || has_independent(fa))
            throw Error(ErrorKind::Contract, "dynamical system must be autonomous and free of derivatives");
    }
}

std::vector<Expr> ds_commutator(const DynSys& F, const std::vector<Expr>& phi) {
    F.check();
    if (static_cast<int>(phi.size()) != F.n()) throw Error(ErrorKind::Contract, "phi has the wrong dimension");
    std::vector<Expr> psi;
    for (int a = 0; a < F.n(); ++a) {
        std::vector<Expr> parts;
        for (int b = 0; b < F.n(); ++b) {
            const Symbol ub = F.state(b).symbol();
            parts.push_back(F.f[b] * diff(phi[a], ub));
            parts.push_back(-phi[b] * diff(F.f[a], ub));
        }
        psi.push_back(add(std::span<const Expr>(parts)));
    }
    return psi;
}

DiffSystem ds_as_system(const DynSys& F) {
    F.check();
    DiffSystem S(*F.ctx);
    for (int a = 0; a < F.n(); ++a) {
        const Symbol dot = F.ctx->jet(a, F.ctx->unit(0));
        S.add(F.ctx->dependents()[a] + "_dot", Expr(dot) - F.f[a], dot);
    }
    return S;
}

}  // namespace psym
