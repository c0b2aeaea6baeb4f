#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "psym/expr.hpp"

namespace psym {

using SymbolMap = std::map<Symbol, Expr, SymbolLess>;
using SymbolSet = std::set<Symbol, SymbolLess>;

/// Applies the derivation determined by its values on symbols. Numbers map
/// to 0, elementary and uninterpreted functions follow the chain rule.
Expr derivation(const Expr& e, const std::function<Expr(const Symbol&)>& on_symbol);

/// Partial derivative treating every symbol, jets included, as independent.
Expr diff(const Expr& e, const Symbol& v);

/// Simultaneous substitution of whole symbols. A rule may mention its own
/// symbol (x -> -x); longer chains of mutually referring rules are cycles.
Expr substitute(const Expr& e, const SymbolMap& rules);

/// Bottom-up rebuild. `leaf` is consulted for every symbol and may return a
/// replacement; all other nodes are rebuilt through the smart constructors.
Expr rebuild(const Expr& e, const std::function<std::optional<Expr>(const Symbol&)>& leaf);

void collect_symbols(const Expr& e, SymbolSet& out);
SymbolSet free_symbols(const Expr& e);
bool contains(const Expr& e, const std::function<bool(const Symbol&)>& pred);
bool contains_symbol(const Expr& e, const Symbol& s);
bool has_function_application(const Expr& e);

/// Concrete body for an uninterpreted function, in terms of formal
/// parameter symbols.
struct FunctionDef {
    std::vector<Symbol> params;
    Expr body;
};
using FunctionTable = std::map<std::string, FunctionDef>;

/// Replaces applications and derivatives of functions present in `defs` by
/// the corresponding (differentiated) bodies.
Expr instantiate(const Expr& e, const FunctionTable& defs);

/// Top-level multiplicative factors with numeric content discarded. Sums are
/// split by their common monomial factor and by a common polynomial factor
/// in the parameters when every jet-group coefficient is a rational multiple
/// of it. A nonzero number yields no factors.
std::vector<Expr> factor_split(const Expr& e);

/// b / a when a is a polynomial in parameters only and every parameter
/// coefficient of b is a rational multiple of a.
std::optional<Expr> divide_by_parameter_polynomial(const Expr& b, const Expr& a);

/// True when e and f differ by a nonzero rational factor.
bool proportional(const Expr& e, const Expr& f);

/// Symbol-kind predicates.
bool is_parameter_like(const Symbol& s);  // Parameter or Constant

}  // namespace psym
