#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "psym/expr.hpp"
#include "psym/expr_ops.hpp"

namespace psym {

/// Counts per independent variable; order() is their sum.
using MultiIndex = std::vector<int>;

int order(const MultiIndex& j);
bool dominates(const MultiIndex& w, const MultiIndex& v);  // w >= v componentwise
MultiIndex operator-(const MultiIndex& a, const MultiIndex& b);

/// Independent and dependent variables, parameters, ansatz constants and
/// uninterpreted function arities. Jet coordinates are created on demand and
/// cached; the cache is internally synchronized.
class JetContext {
public:
    JetContext() = default;
    JetContext(std::vector<std::string> independents, std::vector<std::string> dependents);
    JetContext(const JetContext& other);
    JetContext& operator=(const JetContext& other);

    int p() const { return static_cast<int>(independents_.size()); }
    int q() const { return static_cast<int>(dependent_names_.size()); }

    const Symbol& independent(int i) const { return independents_[i]; }
    const std::vector<Symbol>& independents() const { return independents_; }
    const std::vector<std::string>& dependents() const { return dependent_names_; }

    Symbol jet(int alpha, const MultiIndex& j) const;
    Expr u(int alpha, const MultiIndex& j) const { return Expr(jet(alpha, j)); }
    Expr u(int alpha) const { return u(alpha, MultiIndex(p(), 0)); }
    Expr x(int i) const { return Expr(independents_[i]); }
    MultiIndex unit(int i) const;

    Symbol add_parameter(const std::string& name);
    Symbol add_constant(const std::string& name);
    Symbol group_parameter() const { return lambda_; }
    void add_function(const std::string& name, std::size_t arity);

    const std::vector<Symbol>& parameters() const { return parameters_; }
    const std::vector<Symbol>& constants() const { return constants_; }
    const std::map<std::string, std::size_t>& functions() const { return functions_; }

    /// Resolves an identifier: independents, parameters, constants, lambda,
    /// dependent names and jet names such as u_xxy.
    std::optional<Symbol> lookup(const std::string& name) const;
    std::optional<int> independent_index(const Symbol& s) const;
    std::optional<int> dependent_index(const std::string& name) const;
    bool declared(const std::string& name) const;

private:
    std::string jet_name(int alpha, const MultiIndex& j) const;

    std::vector<Symbol> independents_;
    std::vector<std::string> dependent_names_;
    std::vector<Symbol> parameters_;
    std::vector<Symbol> constants_;
    Symbol lambda_ = Symbol::make("lambda", SymbolKind::GroupParameter);
    std::map<std::string, std::size_t> functions_;

    mutable std::recursive_mutex mutex_;
    mutable std::map<std::pair<int, MultiIndex>, Symbol> jets_;
};

/// D_i e = de/dx_i + sum over jets u_J in e of u_{J+e_i} de/du_J.
Expr total_derivative(const Expr& e, int i, const JetContext& ctx);
Expr total_derivative(const Expr& e, const MultiIndex& j, const JetContext& ctx);

/// Highest jet order occurring in e (0 when only base variables occur, -1
/// when no jet coordinate occurs).
int jet_order(const Expr& e);

struct VectorField {
    enum class Type { Point, Generalized };
    std::string name;
    Type type = Type::Point;
    std::vector<Expr> xi;   // one per independent, zero for generalized fields
    std::vector<Expr> phi;  // one per dependent

    static VectorField point(std::string name, std::vector<Expr> xi, std::vector<Expr> phi);
    static VectorField generalized(std::string name, int p, std::vector<Expr> phi);
    bool degenerate() const;
};

constexpr int kMaxCharacteristicOrder = 4;

/// Validates field shape against the context: point coefficients must be
/// free of derivative coordinates, generalized characteristics are capped.
void check_field(const VectorField& X, const JetContext& ctx);

/// Lazily evaluated prolongation of a field. Coefficients are memoized per
/// (alpha, J); lookups are thread safe.
class Prolongation {
public:
    Prolongation(const VectorField& X, const JetContext& ctx);

    const VectorField& field() const { return X_; }
    /// phi^J_alpha attached to d/du_{alpha,J}.
    Expr coefficient(int alpha, const MultiIndex& j) const;
    /// X* e.
    Expr apply(const Expr& e) const;

private:
    Expr characteristic_derivative(int alpha, const MultiIndex& j) const;

    VectorField X_;
    const JetContext& ctx_;
    std::vector<Expr> q_;  // phi - xi_i u_i
    mutable std::recursive_mutex mutex_;
    mutable std::map<std::pair<int, MultiIndex>, Expr> dq_;
    mutable std::map<std::pair<int, MultiIndex>, Expr> coef_;
};

Expr prolong_coefficient(const VectorField& X, int alpha, const MultiIndex& j, const JetContext& ctx);
Expr apply_prolonged(const VectorField& X, const Expr& e, const JetContext& ctx);

/// Generalized field with characteristic phi_alpha - xi_i u_{alpha,i}.
VectorField evolutionary_form(const VectorField& X, const JetContext& ctx);

/// x~ = A x + b (A constant and invertible), u~ = B(x, u).
struct DiscreteMap {
    std::string name;
    std::vector<Expr> xmap;
    std::vector<Expr> umap;
    std::optional<int> period;
};

/// Pulls e back along the map: x -> x~, u_J -> ((A^{-T} D)^J) B.
class DiscreteProlongation {
public:
    DiscreteProlongation(const DiscreteMap& R, const JetContext& ctx);
    Expr apply(const Expr& e) const;
    const DiscreteMap& map() const { return R_; }

private:
    Expr image(int alpha, const MultiIndex& j) const;

    DiscreteMap R_;
    const JetContext& ctx_;
    std::vector<std::vector<Rational>> ainv_;  // inverse of A
    mutable std::recursive_mutex mutex_;
    mutable std::map<std::pair<int, MultiIndex>, Expr> images_;
};

Expr prolong_discrete(const DiscreteMap& R, const Expr& e, const JetContext& ctx);

}  // namespace psym
