#pragma once

#include <map>
#include <unordered_map>

#include "tilekit/folner.hpp"

namespace tilekit {

/**
 * Finite configuration: one symbol (index into a named alphabet) per carrier
 * cell of a window.
 */
struct SymbolicArray {
    GroupSpec spec;
    Window window;
    std::vector<std::string> alphabet;
    std::unordered_map<GroupElement, int, GroupElementHash> cells;

    static SymbolicArray filled(const GroupSpec& spec, const Window& w,
                                std::vector<std::string> alphabet, int sym);

    bool defined(const GroupElement& g) const { return cells.count(g) != 0; }
    int at(const GroupElement& g) const;
    void set(const GroupElement& g, int sym);

    // Pattern read at position g through shape F: symbols at f*g, f running
    // through F in canonical order.  pattern_defined = all reads land on
    // defined cells.
    bool pattern_defined(const FiniteSubset& F, const GroupElement& g) const;
    std::vector<int> pattern(const FiniteSubset& F, const GroupElement& g) const;

    // Dense text grid for zd:1 / zd:2, sparse "cell symbol" lines otherwise.
    std::string serialize() const;
};

// The three-letter position chart of a comparison pair: symbol 1 on A,
// 2 on B, 0 elsewhere on the carrier.  A and B must be disjoint.
SymbolicArray mark_pair(const FiniteSubset& A, const FiniteSubset& B, const Window& W);

/**
 * Sliding block code with a finite horizon: output at g is rule[pattern at g].
 */
struct BlockCode {
    FiniteSubset horizon;
    std::vector<std::string> out_alphabet;
    std::map<std::vector<int>, int> rule;

    // Applies on every position whose full pattern is defined; the output
    // window core shrinks to those positions.
    SymbolicArray apply(const SymbolicArray& x) const;
};

}  // namespace tilekit
