#include "psym/system.hpp"

#include <algorithm>

namespace psym {

bool in_cone(const Symbol& w, const Symbol& v) {
    return w.is_jet() && v.is_jet() && w.alpha() == v.alpha() && dominates(w.counts(), v.counts());
}

namespace {

bool cone_free(const Expr& e, const Symbol& v) {
    return !contains(e, [&](const Symbol& s) { return in_cone(s, v); });
}

// Negative when a ranks before b.
int rank(const Symbol& a, const Symbol& b) {
    if (a.order() != b.order()) return a.order() > b.order() ? -1 : 1;
    const auto& ca = a.counts();
    const auto& cb = b.counts();
    for (std::size_t i = ca.size(); i-- > 0;)
        if (ca[i] != cb[i]) return ca[i] > cb[i] ? -1 : 1;
    if (a.alpha() != b.alpha()) return a.alpha() < b.alpha() ? -1 : 1;
    return 0;
}

}  // namespace

std::optional<PivotChoice> solve_for(const Expr& e, const Symbol& v, const JetContext&) {
    const Expr a = diff(e, v);
    if (a.is_zero() || contains_symbol(a, v)) return std::nullopt;
    const Expr b = substitute(e, {{v, Expr(0)}});
    PivotChoice c{v, Expr(0), {}};
    if (auto q = divide_by_parameter_polynomial(b, a)) {
        c.rhs = -*q;
    } else {
        c.rhs = -b * pow(a, -1);
    }
    if (!cone_free(c.rhs, v)) return std::nullopt;
    if (!a.is_number()) {
        for (const auto& f : factor_split(a)) c.nonvanishing.push_back(f);
    }
    return c;
}

std::optional<PivotChoice> choose_pivot(const Expr& e, const JetContext& ctx, const std::vector<Symbol>& avoid) {
    std::vector<Symbol> cands;
    for (const auto& s : free_symbols(e)) {
        if (!s.is_jet()) continue;
        if (std::any_of(avoid.begin(), avoid.end(), [&](const Symbol& v) { return in_cone(s, v); })) continue;
        cands.push_back(s);
    }
    std::sort(cands.begin(), cands.end(), [](const Symbol& a, const Symbol& b) { return rank(a, b) < 0; });
    for (const auto& v : cands)
        if (auto c = solve_for(e, v, ctx)) return c;
    return std::nullopt;
}

std::vector<Symbol> DiffSystem::pivots() const {
    std::vector<Symbol> out;
    for (const auto& eq : equations_) out.push_back(eq.pivot);
    return out;
}

const Equation& DiffSystem::add(std::string name, const Expr& e, std::optional<Symbol> solvefor,
                                const std::vector<Symbol>& avoid) {
    std::optional<PivotChoice> c;
    if (solvefor) {
        c = solve_for(e, *solvefor, *ctx_);
        if (!c)
            throw Error(ErrorKind::UnsolvableStep,
                        "equation " + name + " cannot be solved for " + solvefor->name());
    } else {
        c = choose_pivot(e, *ctx_, avoid);
        if (!c) throw Error(ErrorKind::UnsolvableStep, "equation " + name + " has no solvable jet coordinate");
    }
    Equation eq;
    eq.name = std::move(name);
    eq.expr = e;
    eq.pivot = c->pivot;
    eq.rhs = c->rhs;
    eq.nonvanishing = std::move(c->nonvanishing);
    equations_.push_back(std::move(eq));
    return equations_.back();
}

void DiffSystem::add(const Equation& eq) { equations_.push_back(eq); }
void DiffSystem::prepend(const Equation& eq) { equations_.insert(equations_.begin(), eq); }

Expr DiffSystem::consequence(const Equation& eq, const MultiIndex& k) const {
    std::lock_guard lock(eq.cache->mutex);
    auto& memo = eq.cache->consequences;
    // Walk down by removing the last nonzero count until a cached or zero
    // index is reached, then differentiate back up.
    std::vector<std::pair<MultiIndex, int>> path;
    MultiIndex cur = k;
    Expr value;
    for (;;) {
        if (auto it = memo.find(cur); it != memo.end()) {
            value = it->second;
            break;
        }
        int last = -1;
        for (std::size_t i = 0; i < cur.size(); ++i)
            if (cur[i] > 0) last = static_cast<int>(i);
        if (last < 0) {
            value = eq.rhs;
            memo.emplace(cur, value);
            break;
        }
        path.emplace_back(cur, last);
        --cur[last];
    }
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        value = total_derivative(value, it->second, *ctx_);
        memo.emplace(it->first, value);
    }
    return value;
}

Expr DiffSystem::restrict(const Expr& e) const {
    Expr cur = e;
    for (int round = 0;; ++round) {
        bool hit = false;
        Expr next = rebuild(cur, [&](const Symbol& s) -> std::optional<Expr> {
            if (!s.is_jet()) return std::nullopt;
            for (const auto& eq : equations_) {
                if (in_cone(s, eq.pivot)) {
                    hit = true;
                    return consequence(eq, s.counts() - eq.pivot.counts());
                }
            }
            return std::nullopt;
        });
        if (!hit) return cur;
        if (round >= kMaxRounds)
            throw Error(ErrorKind::NonTerminatingReduction, "restriction did not reach a fixed point in 64 rounds");
        cur = next;
    }
}

}  // namespace psym
