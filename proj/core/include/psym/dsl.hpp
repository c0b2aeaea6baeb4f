#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psym/jet.hpp"
#include "psym/verify.hpp"

namespace psym {

struct SourceSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    int line = 1;
    int column = 1;
};

struct Diagnostic {
    SourceSpan span;
    std::string message;
};

/// Parse failure carrying every diagnostic found in the text.
class ParseError : public Error {
public:
    explicit ParseError(std::vector<Diagnostic> diags);
    const std::vector<Diagnostic>& diagnostics() const { return diags_; }

private:
    std::vector<Diagnostic> diags_;
};

/// "line:column: message" for each diagnostic, prefixed by `origin`.
std::string format_diagnostics(const ParseError& e, const std::string& origin);

struct EquationDecl {
    std::string name;
    Expr expr;
    std::optional<Symbol> solvefor;
    SourceSpan span;
};

/// Assumptions in force at a given point of the file.
struct AssumptionSet {
    SymbolMap substitutions;      // parameter -> value
    std::vector<Expr> nonzero;
    std::vector<std::string> text;  // as written, echoed in reports
};

struct Expectation {
    enum class Kind { Status, Order, Verdict, Restricted };
    Kind kind = Kind::Status;
    std::string value;  // status or verdict name
    int number = 0;     // order, or chain step for Restricted
    Expr expr;
    SourceSpan span;
};

struct TaskSpec {
    std::string kind;
    std::vector<std::string> targets;
    std::map<std::string, std::string> options;
    AssumptionSet assumptions;
    std::vector<Expectation> expects;
    SourceSpan span;
};

struct ProblemSpec {
    std::shared_ptr<JetContext> ctx;
    std::vector<EquationDecl> equations;
    std::map<std::string, VectorField> fields;
    std::map<std::string, DiscreteMap> maps;
    std::map<std::string, Ansatz> ansatze;
    FunctionTable realizations;
    std::vector<TaskSpec> tasks;
};

/// Parses a whole problem file. Throws ParseError.
ProblemSpec parse_problem(std::string_view text);

/// Parses one expression against an existing context. Throws ParseError.
Expr parse_expr(std::string_view text, const JetContext& ctx);

const std::vector<std::string>& task_kinds();

}  // namespace psym
