#include "psym/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <set>
#include <sstream>

namespace psym {

ParseError::ParseError(std::vector<Diagnostic> diags)
    : Error(ErrorKind::Parse, diags.empty() ? "parse error" : diags.front().message), diags_(std::move(diags)) {}

std::string format_diagnostics(const ParseError& e, const std::string& origin) {
    std::ostringstream os;
    for (const auto& d : e.diagnostics())
        os << origin << ':' << d.span.line << ':' << d.span.column << ": error: " << d.message << '\n';
    return os.str();
}

const std::vector<std::string>& task_kinds() {
    static const std::vector<std::string> kinds{"exact",        "chain",   "discrete-chain", "conditional",
                                                "frechet",      "ds-commutator", "verify", "orbit",
                                                "variational", "series-check"};
    return kinds;
}

namespace {

enum class Tok { Ident, Number, Punct, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    SourceSpan span;
};

struct Failure {
    Diagnostic diag;
};

const std::set<std::string> kKeywords{"independent", "dependent", "parameter", "constantspace", "function",
                                      "equation",    "solvefor",  "vectorfield", "generalizedfield",
                                      "discretemap", "assume",    "ansatz",    "task",     "expect"};
const std::set<std::string> kReserved{"lambda", "deriv", "sqrt", "nonzero", "orbit", "domain", "period", "xi", "phi"};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    std::vector<Diagnostic> errors;  // offending characters are skipped

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip();
            Token t;
            t.span = here();
            if (pos_ >= text_.size()) {
                t.kind = Tok::End;
                out.push_back(t);
                return out;
            }
            const char c = text_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                while (pos_ < text_.size() &&
                       (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                    advance();
                t.kind = Tok::Ident;
            } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                       (c == '.' && pos_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
                if (pos_ < text_.size() && text_[pos_] == '.') {
                    advance();
                    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
                }
                if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
                    std::size_t k = pos_ + 1;
                    if (k < text_.size() && (text_[k] == '+' || text_[k] == '-')) ++k;
                    if (k < text_.size() && std::isdigit(static_cast<unsigned char>(text_[k]))) {
                        while (pos_ < k) advance();
                        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
                    }
                }
                t.kind = Tok::Number;
            } else if ((c == '-' && peek(1) == '>') || (c == ':' && peek(1) == '=')) {
                advance();
                advance();
                t.kind = Tok::Punct;
            } else if (std::string_view("()[],;:=+-*/^").find(c) != std::string_view::npos) {
                advance();
                t.kind = Tok::Punct;
            } else {
                t.span.end = t.span.begin + 1;
                errors.push_back({t.span, std::string("unexpected character '") + c + "'"});
                advance();
                continue;
            }
            t.span.end = pos_;
            t.text = std::string(text_.substr(t.span.begin, t.span.end - t.span.begin));
            out.push_back(std::move(t));
        }
    }

private:
    char peek(std::size_t k) const { return pos_ + k < text_.size() ? text_[pos_ + k] : '\0'; }
    SourceSpan here() const { return {pos_, pos_, line_, col_}; }
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else if ((static_cast<unsigned char>(text_[pos_]) & 0xC0) != 0x80) {
            ++col_;
        }
        ++pos_;
    }
    void skip() {
        while (pos_ < text_.size()) {
            if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
                advance();
            } else if (text_[pos_] == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

// Exact rational value of a decimal literal such as 2.5e-3.
Rational parse_number(const std::string& s) {
    std::string mant = s;
    long exp10 = 0;
    if (auto e = s.find_first_of("eE"); e != std::string::npos) {
        mant = s.substr(0, e);
        exp10 = std::stol(s.substr(e + 1));
    }
    std::string digits;
    for (char c : mant) {
        if (c == '.') continue;
        digits.push_back(c);
    }
    if (auto dot = mant.find('.'); dot != std::string::npos) exp10 -= static_cast<long>(mant.size() - dot - 1);
    Rational q(mpz_class(digits.empty() ? "0" : digits, 10));
    mpz_class ten;
    mpz_ui_pow_ui(ten.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exp10)));
    if (exp10 >= 0)
        q *= ten;
    else
        q /= ten;
    q.canonicalize();
    return q;
}

class Parser {
public:
    Parser(std::string_view text, std::vector<Token> toks) : text_(text), toks_(std::move(toks)) {}

    // Expression-only mode against an existing context.
    Expr expression_only(const JetContext& ctx) {
        ctx_ = &ctx;
        Expr e = expr();
        if (cur().kind != Tok::End) fail(cur().span, "unexpected '" + cur().text + "' after expression");
        return e;
    }

    ProblemSpec problem() {
        while (cur().kind != Tok::End) {
            const std::size_t start = pos_;
            try {
                statement();
            } catch (const Failure& f) {
                diags_.push_back(f.diag);
                recover(start);
            } catch (const Error& e) {
                diags_.push_back({toks_[start].span, e.what()});
                recover(start);
            }
        }
        if (diags_.empty() && !spec_.ctx) ensure_context(cur().span);
        if (!diags_.empty()) throw ParseError(diags_);
        return std::move(spec_);
    }

private:
    // ---- token helpers -------------------------------------------------
    const Token& cur() const { return toks_[pos_]; }
    const Token& ahead(std::size_t k) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    bool is(const char* p) const { return cur().kind == Tok::Punct && cur().text == p; }
    bool is_ident(const char* w) const { return cur().kind == Tok::Ident && cur().text == w; }
    Token take() {
        Token t = cur();
        if (cur().kind != Tok::End) ++pos_;
        return t;
    }
    [[noreturn]] void fail(const SourceSpan& s, const std::string& msg) const { throw Failure{{s, msg}}; }
    void expect(const char* p) {
        if (!is(p)) fail(cur().span, std::string("expected '") + p + "' but found " + describe(cur()));
        take();
    }
    std::string describe(const Token& t) const { return t.kind == Tok::End ? "end of input" : "'" + t.text + "'"; }
    Token ident(const char* what) {
        if (cur().kind != Tok::Ident) fail(cur().span, std::string("expected ") + what + " but found " + describe(cur()));
        return take();
    }
    SourceSpan join(const SourceSpan& a, const SourceSpan& b) const { return {a.begin, b.end, a.line, a.column}; }
    const SourceSpan& prev_span() const { return toks_[pos_ == 0 ? 0 : pos_ - 1].span; }

    // Word possibly containing dashes written without spaces, e.g. series-check.
    Token dashed_word(const char* what) {
        Token t = ident(what);
        while (is("-") && cur().span.begin == t.span.end && ahead(1).kind == Tok::Ident &&
               ahead(1).span.begin == cur().span.end) {
            take();
            Token n = take();
            t.text += "-" + n.text;
            t.span.end = n.span.end;
        }
        return t;
    }

    void recover(std::size_t start) {
        if (pos_ == start) take();
        while (cur().kind != Tok::End) {
            if (is(";")) {
                take();
                if (cur().kind == Tok::End || (cur().kind == Tok::Ident && kKeywords.count(cur().text))) return;
                continue;
            }
            take();
        }
    }

    // ---- declarations --------------------------------------------------
    void ensure_context(const SourceSpan& at) {
        if (spec_.ctx) return;
        if (independents_.empty()) fail(at, "declare independent variables first");
        if (dependents_.empty()) fail(at, "declare dependent variables first");
        spec_.ctx = std::make_shared<JetContext>(independents_, dependents_);
        ctx_ = spec_.ctx.get();
    }

    void check_fresh(const Token& t) {
        if (kKeywords.count(t.text) || kReserved.count(t.text)) fail(t.span, "'" + t.text + "' is reserved");
        Fn fn;
        if (fn_from_name(t.text, fn)) fail(t.span, "'" + t.text + "' is reserved");
        if (t.text.find('_') != std::string::npos && !independents_.empty() && spec_.ctx)
            if (ctx_->lookup(t.text)) fail(t.span, "duplicate declaration of " + t.text);
        const bool dup = std::count(independents_.begin(), independents_.end(), t.text) ||
                         std::count(dependents_.begin(), dependents_.end(), t.text) ||
                         (ctx_ && ctx_->declared(t.text));
        if (dup) fail(t.span, "duplicate declaration of " + t.text);
        if (t.text.size() > 1 && t.text[0] == 'D')
            if (std::count(independents_.begin(), independents_.end(), t.text.substr(1)))
                fail(t.span, "'" + t.text + "' clashes with derivative sugar");
    }

    std::vector<Token> name_list() {
        std::vector<Token> out{ident("a name")};
        while (is(",")) {
            take();
            out.push_back(ident("a name"));
        }
        return out;
    }

    void statement() {
        const Token head = ident("a statement");
        if (!kKeywords.count(head.text)) fail(head.span, "unknown statement '" + head.text + "'");
        const std::string& h = head.text;
        if (h == "independent" || h == "dependent") {
            if (spec_.ctx) fail(head.span, h + " variables must be declared before anything else");
            for (const auto& t : name_list()) {
                check_fresh(t);
                if (t.text.find('_') != std::string::npos) fail(t.span, "variable names may not contain '_'");
                (h == "independent" ? independents_ : dependents_).push_back(t.text);
            }
            expect(";");
            return;
        }
        ensure_context(head.span);
        if (h == "parameter" || h == "constantspace") {
            for (const auto& t : name_list()) {
                check_fresh(t);
                if (h == "parameter")
                    spec_.ctx->add_parameter(t.text);
                else
                    spec_.ctx->add_constant(t.text);
            }
            expect(";");
        } else if (h == "function") {
            function_decl();
        } else if (h == "equation") {
            equation_decl();
        } else if (h == "solvefor") {
            solvefor_decl();
        } else if (h == "vectorfield" || h == "generalizedfield") {
            field_decl(h == "generalizedfield");
        } else if (h == "discretemap") {
            map_decl();
        } else if (h == "assume") {
            assume_decl();
        } else if (h == "ansatz") {
            ansatz_decl();
        } else if (h == "task") {
            task_decl(head);
        } else if (h == "expect") {
            expect_decl(head);
        }
    }

    void function_decl() {
        const Token name = ident("a function name");
        check_fresh(name);
        expect("(");
        std::vector<Token> formals;
        if (!is(")")) formals = name_list();
        expect(")");
        if (formals.empty()) fail(name.span, "function " + name.text + " needs at least one argument");
        spec_.ctx->add_function(name.text, formals.size());
        if (is(":=")) {
            take();
            FunctionDef def;
            std::map<std::string, Symbol> scope;
            for (std::size_t i = 0; i < formals.size(); ++i) {
                Symbol s = Symbol::make("%" + name.text + "." + std::to_string(i), SymbolKind::Parameter);
                def.params.push_back(s);
                scope.emplace(formals[i].text, s);
            }
            formals_ = &scope;
            const SourceSpan at = cur().span;
            def.body = expr();
            formals_ = nullptr;
            if (contains(def.body, [](const Symbol& s) { return s.is_jet() || s.kind() == SymbolKind::Independent; }))
                fail(at, "a realization may only use its formal arguments and parameters");
            spec_.realizations[name.text] = std::move(def);
        }
        expect(";");
    }

    void equation_decl() {
        const Token name = ident("an equation name");
        if (std::any_of(spec_.equations.begin(), spec_.equations.end(),
                        [&](const EquationDecl& e) { return e.name == name.text; }))
            fail(name.span, "duplicate equation " + name.text);
        expect(":");
        const SourceSpan at = cur().span;
        Expr lhs = expr();
        if (is("=")) {
            take();
            lhs = lhs - expr();
        }
        EquationDecl eq{name.text, lhs, std::nullopt, join(at, prev_span())};
        if (is_ident("solvefor")) {
            take();
            eq.solvefor = solve_target(eq.expr);
        }
        expect(";");
        spec_.equations.push_back(std::move(eq));
    }

    Symbol solve_target(const Expr& e) {
        const SourceSpan at = cur().span;
        const Expr v = primary_expr();
        if (!v.is_symbol() || !v.symbol().is_jet()) fail(join(at, prev_span()), "solvefor needs a jet coordinate");
        if (!contains_symbol(e, v.symbol()))
            fail(join(at, prev_span()), "equation does not contain " + v.symbol().name());
        return v.symbol();
    }

    void solvefor_decl() {
        const Token name = ident("an equation name");
        auto it = std::find_if(spec_.equations.begin(), spec_.equations.end(),
                               [&](const EquationDecl& e) { return e.name == name.text; });
        if (it == spec_.equations.end()) fail(name.span, "unknown equation " + name.text);
        if (is(":")) take();
        it->solvefor = solve_target(it->expr);
        expect(";");
    }

    // Name inside xi(...) / phi(...) / map heads.
    int var_index(bool independent) {
        const Token t = ident(independent ? "an independent variable" : "a dependent variable");
        const auto& list = independent ? independents_ : dependents_;
        auto it = std::find(list.begin(), list.end(), t.text);
        if (it == list.end())
            fail(t.span, t.text + " is not " + (independent ? "an independent" : "a dependent") + " variable");
        return static_cast<int>(it - list.begin());
    }

    void check_unique_name(const Token& name) {
        if (spec_.fields.count(name.text) || spec_.maps.count(name.text) || spec_.ansatze.count(name.text))
            fail(name.span, "duplicate name " + name.text);
    }

    void field_decl(bool generalized) {
        const Token name = ident("a field name");
        check_unique_name(name);
        expect(":");
        const int p = spec_.ctx->p();
        const int q = spec_.ctx->q();
        std::vector<Expr> xi(p, Expr(0)), phi(q, Expr(0));
        std::vector<bool> seen_xi(p), seen_phi(q);
        bool any = false;
        while ((is_ident("xi") || is_ident("phi")) && ahead(1).text == "(") {
            const Token which = take();
            if (generalized && which.text == "xi") fail(which.span, "generalized fields have no xi components");
            expect("(");
            const bool indep = which.text == "xi";
            const int k = var_index(indep);
            expect(")");
            expect("=");
            auto& seen = indep ? seen_xi : seen_phi;
            if (seen[k]) fail(which.span, "component given twice");
            seen[k] = true;
            (indep ? xi : phi)[k] = expr();
            expect(";");
            any = true;
        }
        if (!any) fail(cur().span, "expected xi(...) or phi(...) components");
        VectorField X = generalized ? VectorField::generalized(name.text, p, phi)
                                    : VectorField::point(name.text, xi, phi);
        try {
            check_field(X, *spec_.ctx);
        } catch (const Error& e) {
            fail(name.span, e.what());
        }
        spec_.fields.emplace(name.text, std::move(X));
    }

    void map_decl() {
        const Token name = ident("a map name");
        check_unique_name(name);
        expect(":");
        const int p = spec_.ctx->p();
        const int q = spec_.ctx->q();
        DiscreteMap R{name.text, std::vector<Expr>(p), std::vector<Expr>(q), std::nullopt};
        std::vector<bool> seen(p + q);
        for (;;) {
            if (is_ident("period")) {
                take();
                if (is("=")) take();
                const Token n = take();
                if (n.kind != Tok::Number || n.text.find_first_of(".eE") != std::string::npos || std::stol(n.text) < 1)
                    fail(n.span, "period must be a positive integer");
                R.period = static_cast<int>(std::stol(n.text));
                expect(";");
                continue;
            }
            if (cur().kind != Tok::Ident || ahead(1).text != "->") break;
            const Token v = take();
            int k = -1;
            if (auto it = std::find(independents_.begin(), independents_.end(), v.text); it != independents_.end())
                k = static_cast<int>(it - independents_.begin());
            else if (auto jt = std::find(dependents_.begin(), dependents_.end(), v.text); jt != dependents_.end())
                k = p + static_cast<int>(jt - dependents_.begin());
            else
                fail(v.span, v.text + " is not a variable");
            if (seen[k]) fail(v.span, "image of " + v.text + " given twice");
            seen[k] = true;
            take();
            (k < p ? R.xmap[k] : R.umap[k - p]) = expr();
            expect(";");
        }
        for (int k = 0; k < p + q; ++k)
            if (!seen[k])
                fail(name.span, "discrete map " + name.text + " gives no image for " +
                                    (k < p ? independents_[k] : dependents_[k - p]));
        spec_.maps.emplace(name.text, std::move(R));
    }

    void assume_decl() {
        const SourceSpan at = cur().span;
        if (is_ident("nonzero")) {
            take();
            const Expr e = expr();
            assumptions_.nonzero.push_back(substitute(e, assumptions_.substitutions));
            assumptions_.text.push_back("nonzero " + e.str());
            expect(";");
            return;
        }
        Expr e = expr();
        expect("=");
        e = e - expr();
        const SourceSpan span = join(at, prev_span());
        expect(";");
        if (contains(e, [](const Symbol& s) { return !is_parameter_like(s); }))
            fail(span, "assumed relations may involve parameters only");
        e = substitute(e, assumptions_.substitutions);
        if (e.is_zero()) fail(span, "assumption is implied by earlier assumptions");
        for (const auto& s : spec_.ctx->parameters()) {
            const Expr c = diff(e, s);
            if (!c.is_number() || c.is_zero()) continue;
            const Expr value = s - e * pow(c, -1);
            if (contains_symbol(value, s)) continue;
            for (auto& [k, v] : assumptions_.substitutions) v = substitute(v, {{s, value}});
            assumptions_.substitutions[s] = value;
            assumptions_.text.push_back(s.name() + " = " + value.str());
            return;
        }
        fail(span, "cannot solve the assumption linearly for a parameter");
    }

    void ansatz_decl() {
        const Token name = ident("an ansatz name");
        check_unique_name(name);
        Ansatz a;
        a.name = name.text;
        if (is_ident("orbit")) {
            take();
            a.orbit = true;
        }
        expect(":");
        const int q = spec_.ctx->q();
        a.u.assign(q, Expr(0));
        std::vector<bool> seen(q);
        for (;;) {
            if (is_ident("domain")) {
                take();
                const Token v = ident("a symbol");
                if (!spec_.ctx->lookup(v.text)) fail(v.span, "undeclared symbol " + v.text);
                if (is_ident("in")) take();
                expect("[");
                const double lo = evaluate(expr(), {});
                expect(",");
                const double hi = evaluate(expr(), {});
                expect("]");
                if (!(hi > lo)) fail(v.span, "empty domain");
                a.box[v.text] = {lo, hi};
                expect(";");
                continue;
            }
            if (cur().kind != Tok::Ident || ahead(1).text != "=") break;
            const Token v = cur();
            const int k = var_index(false);
            if (seen[k]) fail(v.span, "component " + v.text + " given twice");
            seen[k] = true;
            expect("=");
            const SourceSpan at = cur().span;
            a.u[k] = expr();
            if (contains(a.u[k], [](const Symbol& s) { return s.is_jet(); }))
                fail(join(at, prev_span()), "an ansatz may not contain derivative coordinates");
            if (!a.orbit && contains_symbol(a.u[k], spec_.ctx->group_parameter()))
                fail(join(at, prev_span()), "lambda appears in an ansatz not declared as an orbit");
            expect(";");
        }
        for (int k = 0; k < q; ++k)
            if (!seen[k]) fail(name.span, "ansatz " + name.text + " gives no expression for " + dependents_[k]);
        SymbolSet used;
        for (const auto& U : a.u) collect_symbols(U, used);
        for (const auto& s : used)
            if (s.kind() == SymbolKind::Constant) a.constants.push_back(s);
        spec_.ansatze.emplace(name.text, std::move(a));
    }

    void task_decl(const Token& head) {
        const Token kind = dashed_word("a task kind");
        const auto& kinds = task_kinds();
        if (std::find(kinds.begin(), kinds.end(), kind.text) == kinds.end())
            fail(kind.span, "unknown task kind " + kind.text);
        TaskSpec t;
        t.kind = kind.text;
        t.assumptions = assumptions_;
        while (cur().kind == Tok::Ident) {
            const Token w = take();
            if (is("=")) {
                take();
                std::string value;
                if (is("-")) {
                    take();
                    value = "-";
                }
                if (cur().kind == Tok::Number) {
                    value += take().text;
                } else if (value.empty()) {
                    value = dashed_word("an option value").text;
                } else {
                    fail(cur().span, "expected a number");
                }
                t.options[w.text] = value;
            } else {
                if (!spec_.fields.count(w.text) && !spec_.maps.count(w.text) && !spec_.ansatze.count(w.text))
                    fail(w.span, "unknown task target " + w.text);
                t.targets.push_back(w.text);
            }
        }
        expect(";");
        t.span = join(head.span, prev_span());
        check_targets(t);
        spec_.tasks.push_back(std::move(t));
    }

    void check_targets(const TaskSpec& t) {
        auto need = [&](std::size_t i, const char* what, auto& table) {
            if (t.targets.size() <= i || !table.count(t.targets[i]))
                fail(t.span, "task " + t.kind + " needs " + what);
        };
        const std::string& k = t.kind;
        if (k == "discrete-chain") {
            need(0, "a discrete map", spec_.maps);
        } else if (k == "verify") {
            need(0, "an ansatz", spec_.ansatze);
        } else if (k == "orbit" || k == "series-check") {
            need(0, "an ansatz", spec_.ansatze);
            need(1, "a vector field", spec_.fields);
        } else if (k == "variational") {
            need(0, "a vector field", spec_.fields);
            if (auto it = t.options.find("from"); it == t.options.end() || !spec_.ansatze.count(it->second))
                fail(t.span, "task variational needs from=<ansatz>");
        } else {
            need(0, "a vector field", spec_.fields);
        }
    }

    void expect_decl(const Token& head) {
        if (spec_.tasks.empty()) fail(head.span, "expect must follow a task");
        Expectation x;
        const Token what = ident("status, order, verdict or restricted");
        if (what.text == "restricted") {
            x.kind = Expectation::Kind::Restricted;
            expect("[");
            const Token n = take();
            if (n.kind != Tok::Number || n.text.find_first_of(".eE") != std::string::npos)
                fail(n.span, "chain step must be an integer");
            x.number = static_cast<int>(std::stol(n.text));
            expect("]");
            expect("=");
            x.expr = expr();
        } else if (what.text == "status" || what.text == "verdict") {
            x.kind = what.text == "status" ? Expectation::Kind::Status : Expectation::Kind::Verdict;
            expect("=");
            x.value = dashed_word("a value").text;
            static const std::set<std::string> statuses{"exact",        "partial",  "inconsistent",
                                                        "inconclusive", "not-exact", "computed"};
            static const std::set<std::string> verdicts{"symbolically-zero", "numerically-zero", "nonzero", "unknown",
                                                        "zero"};
            const auto& allowed = x.kind == Expectation::Kind::Status ? statuses : verdicts;
            if (!allowed.count(x.value)) fail(prev_span(), "unknown " + what.text + " " + x.value);
        } else if (what.text == "order") {
            x.kind = Expectation::Kind::Order;
            expect("=");
            const Token n = take();
            if (n.kind != Tok::Number || n.text.find_first_of(".eE") != std::string::npos)
                fail(n.span, "order must be an integer");
            x.number = static_cast<int>(std::stol(n.text));
        } else {
            fail(what.span, "unknown expectation " + what.text);
        }
        expect(";");
        x.span = join(head.span, prev_span());
        spec_.tasks.back().expects.push_back(std::move(x));
    }

    // ---- expressions ---------------------------------------------------
    static int infix_power(const Token& t) {
        if (t.kind != Tok::Punct) return -1;
        if (t.text == "+" || t.text == "-") return 10;
        if (t.text == "*" || t.text == "/") return 20;
        if (t.text == "^") return 30;
        return -1;
    }

    Expr expr(int min_bp = 0) {
        Expr lhs = prefix();
        for (;;) {
            const int bp = infix_power(cur());
            if (bp < 0 || bp <= min_bp) break;
            const Token op = take();
            if (op.text == "^") {
                const SourceSpan at = cur().span;
                const Expr rhs = expr(bp - 1);
                if (!rhs.is_number()) fail(join(at, prev_span()), "exponent must be a rational number");
                if (lhs.is_zero() && rhs.number() < 0) fail(op.span, "division by zero");
                lhs = pow(lhs, rhs.number());
                continue;
            }
            const SourceSpan at = cur().span;
            const Expr rhs = expr(bp);
            if (op.text == "+") {
                lhs = lhs + rhs;
            } else if (op.text == "-") {
                lhs = lhs - rhs;
            } else if (op.text == "*") {
                lhs = lhs * rhs;
            } else {
                if (rhs.is_zero()) fail(join(at, prev_span()), "division by zero");
                lhs = lhs * pow(rhs, -1);
            }
        }
        return lhs;
    }

    Expr prefix() {
        if (is("-")) {
            take();
            return -expr(25);
        }
        if (is("+")) {
            take();
            return expr(25);
        }
        return primary_expr();
    }

    std::vector<Expr> call_args() {
        expect("(");
        std::vector<Expr> args;
        if (!is(")")) {
            args.push_back(expr());
            while (is(",")) {
                take();
                args.push_back(expr());
            }
        }
        expect(")");
        return args;
    }

    Expr primary_expr() {
        const Token t = cur();
        if (t.kind == Tok::Number) {
            take();
            return number(parse_number(t.text));
        }
        if (is("(")) {
            take();
            Expr e = expr();
            expect(")");
            return e;
        }
        if (t.kind != Tok::Ident) fail(t.span, "expected an expression but found " + describe(t));
        take();
        if (is("(")) return call(t);
        if (formals_) {
            if (auto it = formals_->find(t.text); it != formals_->end()) return Expr(it->second);
        }
        if (!ctx_) fail(t.span, "undeclared symbol " + t.text);
        if (auto s = ctx_->lookup(t.text)) return Expr(*s);
        fail(t.span, "undeclared symbol " + t.text);
    }

    Expr call(const Token& name) {
        const SourceSpan at = name.span;
        if (name.text == "deriv") {
            expect("(");
            const Token f = ident("a function name");
            if (!ctx_ || !ctx_->functions().count(f.text)) fail(f.span, "unknown function " + f.text);
            std::vector<int> orders;
            while (is(",")) {
                take();
                const Token n = take();
                if (n.kind != Tok::Number || n.text.find_first_of(".eE") != std::string::npos)
                    fail(n.span, "derivative orders must be integers");
                orders.push_back(static_cast<int>(std::stol(n.text)));
            }
            expect(")");
            std::vector<Expr> args = call_args();
            const std::size_t arity = ctx_->functions().at(f.text);
            if (args.size() != arity || orders.size() != arity)
                fail(join(at, prev_span()), "arity mismatch for " + f.text + ": expected " + std::to_string(arity));
            return derivative_of(f.text, orders, args);
        }
        std::vector<Expr> args = call_args();
        const SourceSpan span = join(at, prev_span());
        auto unary = [&]() {
            if (args.size() != 1) fail(span, "arity mismatch for " + name.text + ": expected 1");
            return args[0];
        };
        Fn fn;
        if (fn_from_name(name.text, fn)) return apply_fn(fn, unary());
        if (name.text == "sqrt") return sqrt(unary());
        if (ctx_ && name.text.size() > 1 && name.text[0] == 'D') {
            for (int i = 0; i < ctx_->p(); ++i)
                if (ctx_->independent(i).name() == name.text.substr(1)) return total_derivative(unary(), i, *ctx_);
        }
        if (ctx_ && ctx_->functions().count(name.text)) {
            const std::size_t arity = ctx_->functions().at(name.text);
            if (args.size() != arity)
                fail(span, "arity mismatch for " + name.text + ": expected " + std::to_string(arity) + ", got " +
                               std::to_string(args.size()));
            return apply(name.text, args);
        }
        fail(name.span, "unknown function " + name.text);
    }

    std::string_view text_;
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::vector<Diagnostic> diags_;
    ProblemSpec spec_;
    const JetContext* ctx_ = nullptr;
    const std::map<std::string, Symbol>* formals_ = nullptr;
    std::vector<std::string> independents_, dependents_;
    AssumptionSet assumptions_;
};

template <typename F>
auto guarded(F&& f) {
    try {
        return f();
    } catch (const Failure& fl) {
        throw ParseError({fl.diag});
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError({Diagnostic{SourceSpan{}, e.what()}});
    }
}

}  // namespace

ProblemSpec parse_problem(std::string_view text) {
    return guarded([&] {
        Lexer lex(text);
        Parser p(text, lex.run());
        if (lex.errors.empty()) return p.problem();
        // Parser complaints on a line with a bad character are consequences of it.
        std::vector<Diagnostic> diags = lex.errors;
        try {
            (void)p.problem();
        } catch (const ParseError& e) {
            for (const auto& d : e.diagnostics()) {
                const bool shadowed = std::any_of(lex.errors.begin(), lex.errors.end(),
                                                  [&](const Diagnostic& l) { return l.span.line == d.span.line; });
                if (!shadowed) diags.push_back(d);
            }
        }
        std::stable_sort(diags.begin(), diags.end(),
                         [](const Diagnostic& a, const Diagnostic& b) { return a.span.begin < b.span.begin; });
        throw ParseError(diags);
    });
}

Expr parse_expr(std::string_view text, const JetContext& ctx) {
    return guarded([&] {
        Lexer lex(text);
        Parser p(text, lex.run());
        if (!lex.errors.empty()) throw ParseError(lex.errors);
        return p.expression_only(ctx);
    });
}

}  // namespace psym
