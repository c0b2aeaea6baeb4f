#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "psym/numeric.hpp"
#include "psym/system.hpp"

namespace psym {

enum class SideKind { Nonvanishing, ParameterConstraint, DroppedFactor };
const char* to_string(SideKind k) noexcept;

struct SideCondition {
    SideKind kind = SideKind::Nonvanishing;
    Expr expr;
    int step = 0;
};

enum class ChainStatus { Exact, Partial, Inconsistent, Inconclusive };
const char* to_string(ChainStatus s) noexcept;

struct ChainStep {
    int r = 0;
    int component = 0;
    Expr raw;         // X* applied to the previous reduced step
    Expr restricted;  // raw restricted to the current system
    Expr reduced;     // restricted with authorized factors dropped
    Verdict verdict = Verdict::Unknown;
    std::optional<Symbol> pivot;  // set when appended as a new equation
    std::vector<SideCondition> side_conditions;
};

struct ChainResult {
    ChainStatus status = ChainStatus::Inconclusive;
    int order = 0;         // nonzero restricted steps before the first vanishing one
    int applications = 0;  // applications of X* performed
    std::optional<int> inconsistent_step;
    std::string reason;
    std::vector<ChainStep> steps;
    std::vector<SideCondition> side_conditions;
    DiffSystem system;  // base system plus the appended chain equations

    explicit ChainResult(const JetContext& ctx) : system(ctx) {}
};

enum class RestrictMode {
    Full,   // show steps restricted by the whole system
    Chain,  // show steps reduced by the chain equations only
};

struct ChainOptions {
    int max_order = 10;
    bool strong = false;
    RestrictMode restrict = RestrictMode::Full;
    std::vector<Expr> nonzero;    // declared nonvanishing expressions
    SampleOptions sampling;       // numeric fallback of the zero test
    bool numeric_fallback = true;
};

/// Exact check: X* Delta_k restricted to Delta for every equation.
ZeroStatus exact_symmetry_check(const VectorField& X, const DiffSystem& S, const SampleOptions& opts = {});

/// Chain Delta^(r+1) = X* Delta~^(r), each step restricted before the next
/// application.
ChainResult partial_chain(const VectorField& X, const DiffSystem& S, const ChainOptions& opts = {});

/// Same loop driven by a discrete map; a declared period closes the chain.
ChainResult discrete_chain(const DiscreteMap& R, const DiffSystem& S, const ChainOptions& opts = {});

/// Generic driver used by both chains.
ChainResult run_chain(const std::function<Expr(const Expr&)>& act, const DiffSystem& S, const ChainOptions& opts,
                      std::optional<int> period = std::nullopt);

/// Delta augmented by the invariant-surface conditions phi - xi_i u_i = 0,
/// which take priority; base equations are re-solved modulo them.
DiffSystem conditional_system(const VectorField& X, const DiffSystem& S);

/// X* Delta_k for X = phi_alpha(x) d/du_alpha.
std::vector<Expr> frechet_apply(const std::vector<Expr>& phi, const DiffSystem& S);

/// (X*)^r Delta_k for r = 1..k, unrestricted; one row per equation.
std::vector<std::vector<Expr>> exp_series_terms(const VectorField& X, const DiffSystem& S, int k);

/// Autonomous u' = f(u) over the dependent variables of a context with a
/// single independent variable.
struct DynSys {
    const JetContext* ctx = nullptr;
    std::vector<Expr> f;

    int n() const { return static_cast<int>(f.size()); }
    Expr state(int alpha) const { return ctx->u(alpha); }
    void check() const;
};

/// psi_alpha = (f . grad) phi_alpha - (phi . grad) f_alpha.
std::vector<Expr> ds_commutator(const DynSys& F, const std::vector<Expr>& phi);

/// Encodes u'_alpha - f_alpha = 0 as a system solved for u'_alpha.
DiffSystem ds_as_system(const DynSys& F);

}  // namespace psym
