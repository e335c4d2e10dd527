#include "tilekit/symbolic.hpp"

#include <algorithm>

namespace tilekit {

namespace {
const char* kGlyphs = "0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
}

SymbolicArray SymbolicArray::filled(const GroupSpec& spec, const Window& w,
                                    std::vector<std::string> alphabet, int sym) {
    if (sym < 0 || sym >= static_cast<int>(alphabet.size())) throw UsageError("fill symbol out of range");
    SymbolicArray x;
    x.spec = spec;
    x.window = w;
    x.alphabet = std::move(alphabet);
    x.cells.reserve(w.carrier.size() * 2);
    for (const auto& g : w.carrier) x.cells.emplace(g, sym);
    return x;
}

int SymbolicArray::at(const GroupElement& g) const {
    auto it = cells.find(g);
    if (it == cells.end()) throw MarginError("read outside the carrier at " + spec.format(g));
    return it->second;
}

void SymbolicArray::set(const GroupElement& g, int sym) {
    if (sym < 0 || sym >= static_cast<int>(alphabet.size())) throw UsageError("symbol out of range");
    auto it = cells.find(g);
    if (it == cells.end()) throw MarginError("write outside the carrier at " + spec.format(g));
    it->second = sym;
}

bool SymbolicArray::pattern_defined(const FiniteSubset& F, const GroupElement& g) const {
    for (const auto& f : F)
        if (!cells.count(spec.multiply(f, g))) return false;
    return true;
}

std::vector<int> SymbolicArray::pattern(const FiniteSubset& F, const GroupElement& g) const {
    std::vector<int> p;
    p.reserve(F.size());
    for (const auto& f : F) p.push_back(at(spec.multiply(f, g)));
    return p;
}

std::string SymbolicArray::serialize() const {
    std::string out = "alphabet:";
    for (const auto& s : alphabet) {
        out += ' ';
        out += s;
    }
    out += '\n';
    if (alphabet.size() > 62) throw UsageError("alphabet too large to serialize");
    if (spec.family == Family::FreeAbelian && spec.dim == 1) {
        std::int64_t lo = INT64_MAX, hi = INT64_MIN;
        for (const auto& g : window.carrier) {
            lo = std::min(lo, g.v[0]);
            hi = std::max(hi, g.v[0]);
        }
        out += "origin: " + std::to_string(lo) + "\n";
        for (std::int64_t x = lo; x <= hi; ++x) {
            auto it = cells.find(GroupElement({x}));
            out += (it == cells.end()) ? '.' : kGlyphs[it->second];
        }
        out += '\n';
        return out;
    }
    if (spec.family == Family::FreeAbelian && spec.dim == 2) {
        std::int64_t lo0 = INT64_MAX, hi0 = INT64_MIN, lo1 = INT64_MAX, hi1 = INT64_MIN;
        for (const auto& g : window.carrier) {
            lo0 = std::min(lo0, g.v[0]);
            hi0 = std::max(hi0, g.v[0]);
            lo1 = std::min(lo1, g.v[1]);
            hi1 = std::max(hi1, g.v[1]);
        }
        out += "origin: " + std::to_string(lo0) + " " + std::to_string(lo1) + "\n";
        for (std::int64_t y = hi1; y >= lo1; --y) {
            for (std::int64_t x = lo0; x <= hi0; ++x) {
                auto it = cells.find(GroupElement({x, y}));
                out += (it == cells.end()) ? '.' : kGlyphs[it->second];
            }
            out += '\n';
        }
        return out;
    }
    // generic sparse form, canonical cell order
    for (const auto& g : window.carrier) {
        auto it = cells.find(g);
        if (it != cells.end())
            out += spec.format(g) + " = " + alphabet[it->second] + "\n";
    }
    return out;
}

SymbolicArray mark_pair(const FiniteSubset& A, const FiniteSubset& B, const Window& W) {
    if (!set_intersection(A, B).empty()) throw UsageError("mark_pair needs disjoint sets");
    SymbolicArray x = SymbolicArray::filled(W.carrier.spec(), W, {"0", "1", "2"}, 0);
    for (const auto& a : A) x.set(a, 1);
    for (const auto& b : B) x.set(b, 2);
    return x;
}

SymbolicArray BlockCode::apply(const SymbolicArray& x) const {
    SymbolicArray y;
    y.spec = x.spec;
    y.window = Window{x.window.carrier, set_union(x.window.margin_shape, horizon)};
    y.alphabet = out_alphabet;
    for (const auto& g : x.window.carrier) {
        if (!x.pattern_defined(horizon, g)) continue;
        auto it = rule.find(x.pattern(horizon, g));
        if (it == rule.end()) continue;  // partial codes leave cells blank
        y.cells.emplace(g, it->second);
    }
    return y;
}

}  // namespace tilekit
