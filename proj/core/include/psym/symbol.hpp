#pragma once

#include <compare>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace psym {

/// Role of a symbol. The enumerator order is the canonical sort order of
/// symbols inside sums and products.
enum class SymbolKind : unsigned char {
    Parameter,
    Constant,        // ansatz constant (c1, c2, A..E)
    GroupParameter,  // lambda
    Independent,
    Jet,             // u_{alpha,J}; empty J is the dependent variable itself
};

struct SymbolData {
    std::string name;
    SymbolKind kind = SymbolKind::Parameter;
    int index = 0;            // dependent index alpha for jets
    std::vector<int> counts;  // multi-index for jets, one entry per independent
    std::string base;         // dependent variable name for jets

    int order() const noexcept;
};

/// Cheap shared handle to immutable symbol data.
class Symbol {
public:
    Symbol() = default;
    explicit Symbol(std::shared_ptr<const SymbolData> data) : data_(std::move(data)) {}

    static Symbol make(std::string name, SymbolKind kind);
    static Symbol jet(std::string base, int alpha, std::vector<int> counts, std::string name);

    const std::string& name() const { return data_->name; }
    SymbolKind kind() const { return data_->kind; }
    bool is_jet() const { return data_->kind == SymbolKind::Jet; }
    int alpha() const { return data_->index; }
    const std::vector<int>& counts() const { return data_->counts; }
    const std::string& base() const { return data_->base; }
    int order() const { return data_->order(); }
    bool valid() const { return static_cast<bool>(data_); }
    const SymbolData* get() const { return data_.get(); }

    std::size_t hash() const;

private:
    std::shared_ptr<const SymbolData> data_;
};

/// Total order: kind, then (for jets) dependent index, total order and
/// multi-index, then name.
int compare(const Symbol& a, const Symbol& b);

inline bool operator==(const Symbol& a, const Symbol& b) { return compare(a, b) == 0; }
inline bool operator<(const Symbol& a, const Symbol& b) { return compare(a, b) < 0; }

struct SymbolLess {
    bool operator()(const Symbol& a, const Symbol& b) const { return compare(a, b) < 0; }
};

}  // namespace psym
