#include "psym/jet.hpp"

#include <algorithm>
#include <numeric>

namespace psym {

int order(const MultiIndex& j) { return std::accumulate(j.begin(), j.end(), 0); }

bool dominates(const MultiIndex& w, const MultiIndex& v) {
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] < v[i]) return false;
    return true;
}

MultiIndex operator-(const MultiIndex& a, const MultiIndex& b) {
    MultiIndex r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

JetContext::JetContext(std::vector<std::string> independents, std::vector<std::string> dependents)
    : dependent_names_(std::move(dependents)) {
    for (auto& n : independents) independents_.push_back(Symbol::make(std::move(n), SymbolKind::Independent));
}

JetContext::JetContext(const JetContext& other) { *this = other; }

JetContext& JetContext::operator=(const JetContext& other) {
    if (this == &other) return *this;
    std::scoped_lock lock(mutex_, other.mutex_);
    independents_ = other.independents_;
    dependent_names_ = other.dependent_names_;
    parameters_ = other.parameters_;
    constants_ = other.constants_;
    lambda_ = other.lambda_;
    functions_ = other.functions_;
    jets_ = other.jets_;
    return *this;
}

std::string JetContext::jet_name(int alpha, const MultiIndex& j) const {
    std::string name = dependent_names_[alpha];
    if (order(j) == 0) return name;
    name += '_';
    for (int i = 0; i < p(); ++i)
        for (int k = 0; k < j[i]; ++k) name += independents_[i].name();
    return name;
}

Symbol JetContext::jet(int alpha, const MultiIndex& j) const {
    if (alpha < 0 || alpha >= q() || static_cast<int>(j.size()) != p())
        throw Error(ErrorKind::Contract, "jet coordinate out of range");
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(alpha, j);
    if (auto it = jets_.find(key); it != jets_.end()) return it->second;
    Symbol s = Symbol::jet(dependent_names_[alpha], alpha, j, jet_name(alpha, j));
    jets_.emplace(std::move(key), s);
    return s;
}

MultiIndex JetContext::unit(int i) const {
    MultiIndex m(p(), 0);
    m[i] = 1;
    return m;
}

Symbol JetContext::add_parameter(const std::string& name) {
    Symbol s = Symbol::make(name, SymbolKind::Parameter);
    parameters_.push_back(s);
    return s;
}

Symbol JetContext::add_constant(const std::string& name) {
    Symbol s = Symbol::make(name, SymbolKind::Constant);
    constants_.push_back(s);
    return s;
}

void JetContext::add_function(const std::string& name, std::size_t arity) { functions_[name] = arity; }

std::optional<int> JetContext::independent_index(const Symbol& s) const {
    for (int i = 0; i < p(); ++i)
        if (independents_[i] == s) return i;
    return std::nullopt;
}

std::optional<int> JetContext::dependent_index(const std::string& name) const {
    for (int a = 0; a < q(); ++a)
        if (dependent_names_[a] == name) return a;
    return std::nullopt;
}

std::optional<Symbol> JetContext::lookup(const std::string& name) const {
    for (const auto& s : independents_)
        if (s.name() == name) return s;
    for (const auto& s : parameters_)
        if (s.name() == name) return s;
    for (const auto& s : constants_)
        if (s.name() == name) return s;
    if (name == lambda_.name()) return lambda_;
    if (auto a = dependent_index(name)) return jet(*a, MultiIndex(p(), 0));
    const auto us = name.find('_');
    if (us == std::string::npos) return std::nullopt;
    auto a = dependent_index(name.substr(0, us));
    if (!a) return std::nullopt;
    // Greedy split of the suffix into independent names, longest first.
    MultiIndex j(p(), 0);
    std::size_t pos = us + 1;
    if (pos == name.size()) return std::nullopt;
    while (pos < name.size()) {
        int best = -1;
        std::size_t best_len = 0;
        for (int i = 0; i < p(); ++i) {
            const std::string& n = independents_[i].name();
            if (n.size() > best_len && name.compare(pos, n.size(), n) == 0) {
                best = i;
                best_len = n.size();
            }
        }
        if (best < 0) return std::nullopt;
        ++j[best];
        pos += best_len;
    }
    return jet(*a, j);
}

bool JetContext::declared(const std::string& name) const {
    return lookup(name).has_value() || functions_.count(name) > 0;
}

Expr total_derivative(const Expr& e, int i, const JetContext& ctx) {
    const Symbol& xi = ctx.independent(i);
    return derivation(e, [&](const Symbol& s) -> Expr {
        if (s.is_jet()) {
            MultiIndex j = s.counts();
            ++j[i];
            return ctx.u(s.alpha(), j);
        }
        return s == xi ? Expr(1) : Expr(0);
    });
}

Expr total_derivative(const Expr& e, const MultiIndex& j, const JetContext& ctx) {
    Expr r = e;
    for (int i = 0; i < ctx.p(); ++i)
        for (int k = 0; k < j[i]; ++k) r = total_derivative(r, i, ctx);
    return r;
}

int jet_order(const Expr& e) {
    int best = -1;
    SymbolSet syms = free_symbols(e);
    for (const auto& s : syms)
        if (s.is_jet()) best = std::max(best, s.order());
    return best;
}

VectorField VectorField::point(std::string name, std::vector<Expr> xi, std::vector<Expr> phi) {
    return VectorField{std::move(name), Type::Point, std::move(xi), std::move(phi)};
}

VectorField VectorField::generalized(std::string name, int p, std::vector<Expr> phi) {
    return VectorField{std::move(name), Type::Generalized, std::vector<Expr>(p, Expr(0)), std::move(phi)};
}

bool VectorField::degenerate() const {
    return std::all_of(xi.begin(), xi.end(), [](const Expr& e) { return e.is_zero(); }) &&
           std::all_of(phi.begin(), phi.end(), [](const Expr& e) { return e.is_zero(); });
}

void check_field(const VectorField& X, const JetContext& ctx) {
    if (static_cast<int>(X.xi.size()) != ctx.p() || static_cast<int>(X.phi.size()) != ctx.q())
        throw Error(ErrorKind::Contract, "field " + X.name + " has the wrong number of components");
    if (X.type == VectorField::Type::Point) {
        for (const auto& c : X.xi)
            if (jet_order(c) > 0) throw Error(ErrorKind::Contract, "point field " + X.name + " depends on derivatives");
        for (const auto& c : X.phi)
            if (jet_order(c) > 0) throw Error(ErrorKind::Contract, "point field " + X.name + " depends on derivatives");
    } else {
        for (const auto& c : X.phi)
            if (jet_order(c) > kMaxCharacteristicOrder)
                throw Error(ErrorKind::Contract, "characteristic of " + X.name + " exceeds jet order 4");
    }
}

Prolongation::Prolongation(const VectorField& X, const JetContext& ctx) : X_(X), ctx_(ctx) {
    for (int a = 0; a < ctx.q(); ++a) {
        std::vector<Expr> parts{X.phi[a]};
        for (int i = 0; i < ctx.p(); ++i)
            if (!X.xi[i].is_zero()) parts.push_back(-X.xi[i] * ctx.u(a, ctx.unit(i)));
        q_.push_back(add(std::span<const Expr>(parts)));
    }
}

Expr Prolongation::characteristic_derivative(int alpha, const MultiIndex& j) const {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(alpha, j);
    if (auto it = dq_.find(key); it != dq_.end()) return it->second;
    Expr r;
    int last = -1;
    for (int i = 0; i < ctx_.p(); ++i)
        if (j[i] > 0) last = i;
    if (last < 0) {
        r = q_[alpha];
    } else {
        MultiIndex prev = j;
        --prev[last];
        r = total_derivative(characteristic_derivative(alpha, prev), last, ctx_);
    }
    dq_.emplace(std::move(key), r);
    return r;
}

Expr Prolongation::coefficient(int alpha, const MultiIndex& j) const {
    if (order(j) == 0) return X_.phi[alpha];
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(alpha, j);
    if (auto it = coef_.find(key); it != coef_.end()) return it->second;
    std::vector<Expr> parts{characteristic_derivative(alpha, j)};
    for (int i = 0; i < ctx_.p(); ++i) {
        if (X_.xi[i].is_zero()) continue;
        MultiIndex up = j;
        ++up[i];
        parts.push_back(X_.xi[i] * ctx_.u(alpha, up));
    }
    Expr r = add(std::span<const Expr>(parts));
    coef_.emplace(std::move(key), r);
    return r;
}

Expr Prolongation::apply(const Expr& e) const {
    return derivation(e, [&](const Symbol& s) -> Expr {
        if (s.is_jet()) return coefficient(s.alpha(), s.counts());
        if (auto i = ctx_.independent_index(s)) return X_.xi[*i];
        return Expr(0);
    });
}

Expr prolong_coefficient(const VectorField& X, int alpha, const MultiIndex& j, const JetContext& ctx) {
    return Prolongation(X, ctx).coefficient(alpha, j);
}

Expr apply_prolonged(const VectorField& X, const Expr& e, const JetContext& ctx) {
    return Prolongation(X, ctx).apply(e);
}

VectorField evolutionary_form(const VectorField& X, const JetContext& ctx) {
    std::vector<Expr> q;
    for (int a = 0; a < ctx.q(); ++a) {
        std::vector<Expr> parts{X.phi[a]};
        for (int i = 0; i < ctx.p(); ++i) parts.push_back(-X.xi[i] * ctx.u(a, ctx.unit(i)));
        q.push_back(add(std::span<const Expr>(parts)));
    }
    return VectorField::generalized(X.name + "_Q", ctx.p(), std::move(q));
}

namespace {

std::vector<std::vector<Rational>> invert(std::vector<std::vector<Rational>> a) {
    const std::size_t n = a.size();
    std::vector<std::vector<Rational>> inv(n, std::vector<Rational>(n, 0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        while (piv < n && a[piv][c] == 0) ++piv;
        if (piv == n) throw Error(ErrorKind::UnsupportedMap, "map on independents is singular");
        std::swap(a[piv], a[c]);
        std::swap(inv[piv], inv[c]);
        const Rational d = a[c][c];
        for (std::size_t k = 0; k < n; ++k) {
            a[c][k] /= d;
            inv[c][k] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c || a[r][c] == 0) continue;
            const Rational f = a[r][c];
            for (std::size_t k = 0; k < n; ++k) {
                a[r][k] -= f * a[c][k];
                inv[r][k] -= f * inv[c][k];
            }
        }
    }
    return inv;
}

}  // namespace

DiscreteProlongation::DiscreteProlongation(const DiscreteMap& R, const JetContext& ctx) : R_(R), ctx_(ctx) {
    const int p = ctx.p();
    if (static_cast<int>(R.xmap.size()) != p || static_cast<int>(R.umap.size()) != ctx.q())
        throw Error(ErrorKind::Contract, "map " + R.name + " must give every independent and dependent variable");
    std::vector<std::vector<Rational>> a(p, std::vector<Rational>(p, 0));
    for (int i = 0; i < p; ++i) {
        const Expr& xt = R.xmap[i];
        if (contains(xt, [](const Symbol& s) { return s.is_jet(); }) || has_function_application(xt))
            throw Error(ErrorKind::UnsupportedMap, "map " + R.name + ": new independents may not depend on u");
        for (int j = 0; j < p; ++j) {
            Expr d = diff(xt, ctx.independent(j));
            if (!d.is_number())
                throw Error(ErrorKind::UnsupportedMap, "map " + R.name + ": new independents must be affine in x");
            a[i][j] = d.number();
        }
    }
    ainv_ = invert(std::move(a));
}

Expr DiscreteProlongation::image(int alpha, const MultiIndex& j) const {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(alpha, j);
    if (auto it = images_.find(key); it != images_.end()) return it->second;
    Expr r;
    int last = -1;
    for (int i = 0; i < ctx_.p(); ++i)
        if (j[i] > 0) last = i;
    if (last < 0) {
        r = R_.umap[alpha];
    } else {
        MultiIndex prev = j;
        --prev[last];
        const Expr base = image(alpha, prev);
        // d/dx~_last = sum_k (A^{-1})_{k,last} D_k
        std::vector<Expr> parts;
        for (int k = 0; k < ctx_.p(); ++k) {
            const Rational& c = ainv_[k][last];
            if (c != 0) parts.push_back(number(c) * total_derivative(base, k, ctx_));
        }
        r = add(std::span<const Expr>(parts));
    }
    images_.emplace(std::move(key), r);
    return r;
}

Expr DiscreteProlongation::apply(const Expr& e) const {
    return rebuild(e, [&](const Symbol& s) -> std::optional<Expr> {
        if (s.is_jet()) return image(s.alpha(), s.counts());
        if (auto i = ctx_.independent_index(s)) return R_.xmap[*i];
        return std::nullopt;
    });
}

Expr prolong_discrete(const DiscreteMap& R, const Expr& e, const JetContext& ctx) {
    return DiscreteProlongation(R, ctx).apply(e);
}

}  // namespace psym
