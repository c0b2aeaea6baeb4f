#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>

#include "psym/expr.hpp"
#include "psym/expr_ops.hpp"

namespace psym {

/// Numeric assignment for symbols by name, plus concrete bodies for
/// uninterpreted functions.
struct NumericEnv {
    std::map<std::string, double> values;
    const FunctionTable* functions = nullptr;
};

/// Evaluates e in double precision. Throws SamplingFailure for symbols
/// without a value and for applications of functions without a body.
double evaluate(const Expr& e, const NumericEnv& env);

/// Sum of magnitudes of the top-level summands; the scale against which a
/// numeric residual is compared.
double magnitude(const Expr& e, const NumericEnv& env);

/// Random cubic polynomial in `arity` fresh formal parameters with
/// coefficients uniform in [-1, 1].
FunctionDef random_cubic(const std::string& name, std::size_t arity, std::mt19937_64& rng);

enum class Verdict { SymbolicallyZero, NumericallyZero, Nonzero, Unknown };
const char* to_string(Verdict v) noexcept;

enum class ZeroMode { SymbolicOnly, SymbolicThenNumeric };

struct ZeroStatus {
    Verdict verdict = Verdict::Unknown;
    std::map<std::string, double> witness;  // sample point of a nonzero value
    double value = 0.0;                      // residual at the witness / max residual
    std::string residual;                    // canonical residual when not symbolically zero

    bool zero() const { return verdict == Verdict::SymbolicallyZero || verdict == Verdict::NumericallyZero; }
};

struct SampleOptions {
    int samples = 12;
    double tol = 1e-9;
    std::uint64_t seed = 20240611;
    int max_resamples = 200;
    std::map<std::string, std::pair<double, double>> boxes;  // per symbol name
    const FunctionTable* functions = nullptr;                // user realizations
    bool allow_random_functions = true;
};

/// Draws from [-2,-0.1] U [0.1,2] unless a box is configured for the name.
double sample_value(const std::string& name, const SampleOptions& opts, std::mt19937_64& rng);

ZeroStatus is_zero(const Expr& e, ZeroMode mode, const SampleOptions& opts = {});

/// Expression flattened for repeated evaluation with values supplied by slot.
/// Symbols outside `slots` take their value from `fixed`; function
/// applications are instantiated from `functions` first.
class CompiledExpr {
public:
    CompiledExpr() = default;
    CompiledExpr(const Expr& e, const std::vector<std::string>& slots, const std::map<std::string, double>& fixed = {},
                 const FunctionTable* functions = nullptr);

    double operator()(const double* slots) const;
    double operator()(const std::vector<double>& slots) const { return (*this)(slots.data()); }

private:
    enum class Op : unsigned char { Const, Slot, Add, Mul, Func };
    struct Instr {
        Op op;
        Fn fn = Fn::Exp;
        double value = 0.0;   // constant, Add constant or Mul coefficient
        int index = 0;        // slot, or first child in `kids_`
        int count = 0;        // number of children
    };
    struct Kid {
        int reg;
        double coef;      // Add coefficient or Mul exponent
        int parity = 0;   // Mul: 1 odd root of odd power, 2 odd root of even power
    };
    int emit(const Expr& e, const std::vector<std::string>& slots, const std::map<std::string, double>& fixed);

    std::vector<Instr> code_;
    std::vector<Kid> kids_;
};

}  // namespace psym
