#include "psym/symbol.hpp"

#include <functional>
#include <numeric>

#include "psym/error.hpp"

namespace psym {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::MalformedExpression: return "malformed-expression";
        case ErrorKind::CyclicSubstitution: return "cyclic-substitution";
        case ErrorKind::SamplingFailure: return "sampling-failure";
        case ErrorKind::NonTerminatingReduction: return "non-terminating-reduction";
        case ErrorKind::UnsolvableStep: return "unsolvable-step";
        case ErrorKind::UnsupportedMap: return "unsupported-map";
        case ErrorKind::DegenerateField: return "degenerate-field";
        case ErrorKind::Contract: return "contract";
        case ErrorKind::BlowUp: return "blow-up";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

int SymbolData::order() const noexcept {
    return std::accumulate(counts.begin(), counts.end(), 0);
}

Symbol Symbol::make(std::string name, SymbolKind kind) {
    auto d = std::make_shared<SymbolData>();
    d->name = std::move(name);
    d->kind = kind;
    return Symbol(std::move(d));
}

Symbol Symbol::jet(std::string base, int alpha, std::vector<int> counts, std::string name) {
    auto d = std::make_shared<SymbolData>();
    d->name = std::move(name);
    d->kind = SymbolKind::Jet;
    d->index = alpha;
    d->counts = std::move(counts);
    d->base = std::move(base);
    return Symbol(std::move(d));
}

std::size_t Symbol::hash() const {
    std::size_t h = std::hash<std::string>()(data_->name);
    return h ^ (static_cast<std::size_t>(data_->kind) * 0x9e3779b97f4a7c15ULL);
}

int compare(const Symbol& a, const Symbol& b) {
    if (a.get() == b.get()) return 0;
    if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
    if (a.kind() == SymbolKind::Jet) {
        if (a.alpha() != b.alpha()) return a.alpha() < b.alpha() ? -1 : 1;
        const int oa = a.order();
        const int ob = b.order();
        if (oa != ob) return oa < ob ? -1 : 1;
        const auto& ca = a.counts();
        const auto& cb = b.counts();
        if (ca != cb) return ca > cb ? -1 : 1;
    }
    const int c = a.name().compare(b.name());
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

}  // namespace psym
