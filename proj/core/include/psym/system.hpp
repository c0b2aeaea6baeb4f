#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "psym/jet.hpp"

namespace psym {

/// One equation `expr = 0` solved as `pivot = rhs`.
struct Equation {
    std::string name;
    Expr expr;
    Symbol pivot;
    Expr rhs;
    std::vector<Expr> nonvanishing;  // factors of the pivot coefficient

    // Total-derivative consequences D_K rhs, shared between copies.
    struct Cache {
        std::mutex mutex;
        std::map<MultiIndex, Expr> consequences;
    };
    std::shared_ptr<Cache> cache = std::make_shared<Cache>();
};

struct PivotChoice {
    Symbol pivot;
    Expr rhs;
    std::vector<Expr> nonvanishing;
};

/// Solves e for v when e is linear in v with a coefficient free of v and the
/// solution contains no coordinate of v's cone.
std::optional<PivotChoice> solve_for(const Expr& e, const Symbol& v, const JetContext& ctx);

/// Ranking: highest order, then the larger count on the most recently
/// declared independent, then the lower dependent index. Coordinates lying
/// in a cone of `avoid` are skipped.
std::optional<PivotChoice> choose_pivot(const Expr& e, const JetContext& ctx,
                                        const std::vector<Symbol>& avoid = {});

/// Ordered system of solved equations. Earlier equations take priority when
/// cones overlap.
class DiffSystem {
public:
    explicit DiffSystem(const JetContext& ctx) : ctx_(&ctx) {}

    const JetContext& context() const { return *ctx_; }
    const std::vector<Equation>& equations() const { return equations_; }
    std::size_t size() const { return equations_.size(); }
    std::vector<Symbol> pivots() const;

    /// Adds `e = 0`, solving for `solvefor` or for the ranked pivot. Throws
    /// UnsolvableStep when no coordinate qualifies.
    const Equation& add(std::string name, const Expr& e, std::optional<Symbol> solvefor = std::nullopt,
                        const std::vector<Symbol>& avoid = {});
    void add(const Equation& eq);
    void prepend(const Equation& eq);

    /// Substitutes solved coordinates and their differential consequences
    /// until no coordinate of any cone remains.
    Expr restrict(const Expr& e) const;

    static constexpr int kMaxRounds = 64;

private:
    Expr consequence(const Equation& eq, const MultiIndex& k) const;

    const JetContext* ctx_;
    std::vector<Equation> equations_;
};

bool in_cone(const Symbol& w, const Symbol& v);

}  // namespace psym
