#pragma once

#include "tilekit/quasitiling.hpp"
#include "tilekit/symbolic.hpp"

namespace tilekit {

/**
 * Injective partial map A -> B whose pairs always satisfy b = m*a with the
 * multiplier m drawn from a fixed finite set E.
 */
class PartialBijection {
public:
    explicit PartialBijection(GroupSpec spec) : spec_(spec) {}

    bool defined(const GroupElement& a) const { return fwd_.count(a) != 0; }
    bool hits(const GroupElement& b) const { return rev_.count(b) != 0; }
    const GroupElement& image(const GroupElement& a) const;
    const GroupElement& preimage(const GroupElement& b) const;
    void bind(const GroupElement& a, const GroupElement& b);   // overwrite a->*, keep injectivity
    std::size_t size() const { return fwd_.size(); }
    FiniteSubset domain() const;
    FiniteSubset range() const;
    const GroupSpec& spec() const { return spec_; }
    // multiplier of a matched point: image(a) * a^-1
    GroupElement multiplier(const GroupElement& a) const;

private:
    GroupSpec spec_;
    std::unordered_map<GroupElement, GroupElement, GroupElementHash> fwd_, rev_;
};

/**
 * Comparison problem on a window: disjoint position sets A (smaller) and B
 * (larger), a reference tiling whose tiles witness the density advantage, the
 * advantage fraction eps, and the multiplier set E (defaults to the union of
 * S S^-1 over the tiling shapes).
 */
struct ComparisonInstance {
    GroupSpec spec;
    FiniteSubset A, B;
    Quasitiling tiling;
    Rational eps;
    Window W;
    std::optional<FiniteSubset> multipliers;

    FiniteSubset effective_E() const;
    void validate() const;  // A, B disjoint and inside the carrier
    // do all tiles fully inside the core beat the advantage threshold?
    bool advantage_holds(std::string* diagnostic = nullptr) const;
};

/**
 * Chain of 2n distinct points a_1, b_1, ..., a_n, b_n with b_i = p_i * a_i and
 * b_i = q_i * a_{i+1}; the name is the multiplier index word
 * (p_1, q_1, ..., p_n) over the fixed enumeration of E, compared by length
 * first and lexicographically second.
 */
struct CorrectionChain {
    std::vector<GroupElement> a, b;  // equal lengths n >= 1
    std::vector<int> name;           // 2n-1 indices into E

    std::size_t steps() const { return a.size(); }        // n
    std::size_t point_count() const { return 2 * a.size(); }
};

// length-then-lex comparison of chain names
bool name_less(const std::vector<int>& x, const std::vector<int>& y);

// Greedy first approximation: sweep multipliers in E order, matching every
// still-free a to g_j * a when that lands on a free b.
PartialBijection greedy_initial(const ComparisonInstance& inst);

struct FindChainResult {
    std::optional<CorrectionChain> chain;
    bool exhausted = false;        // reachable region closed with no free b
    bool margin_ok = false;        // exhaustion happened away from the boundary
    std::size_t explored = 0;
};

// Shortest correction chain from the unmatched point a1, name-minimal among
// the shortest, cut off at n = N steps.
FindChainResult find_chain(const PartialBijection& phi, const GroupElement& a1,
                           const ComparisonInstance& inst, int N);

struct ChainBoundReport {
    int N = 0;
    int explored = 0;          // largest n with |(E^2)^n| computed
    bool tail_certified = false;
    std::vector<BigInt> sizes; // sizes[n-1] = |(E^2)^n|
    Rational poly_C;           // fitted bound |(E^2)^n| <= C * n^degree on the range
    int poly_degree = 0;
};

// Least N such that |(E^2)^n| < (1+eps)^n for every n >= N, with the tail
// beyond the explored range certified through submultiplicativity.  Exponential
// growth (condition eventually false) raises HypothesisError.
ChainBoundReport chain_bound_N(const GroupSpec& spec, const FiniteSubset& E, const Rational& eps,
                               int cap = 0 /* 0 = automatic */, std::size_t budget = 400'000);

// All minimal correction chains (chains colliding with no chain of strictly
// smaller name).  Enumerates every correction chain up to twice the largest
// shortest-chain length, which contains all possible minimal chains and all
// of their potential smaller-name colliders.
std::vector<CorrectionChain> minimal_chains(const PartialBijection& phi,
                                            const ComparisonInstance& inst, int N,
                                            std::size_t chain_budget = 2'000'000);

// Validates the chain against phi and applies the correction
// phi(a_i) := b_i (the start a_1 enters the domain, the end b_n the range).
void correct_along(PartialBijection& phi, const CorrectionChain& chain);

struct SolveReport {
    bool success = false;
    int rounds = 0;
    int N = 0;
    std::size_t horizon_words = 0;        // |E| + 4*N*rounds
    bool advantage_ok = true;
    std::vector<GroupElement> unmatched;  // core points still free on failure
    std::vector<GroupElement> margin_indeterminate;  // matched but too close to
                                                     // the boundary to certify
    std::vector<std::string> trace;
    std::string diagnostic;
};

// Full pipeline: greedy start, then rounds of simultaneous corrections along
// all minimal chains until A n core(W) is exhausted or no chain makes
// progress.
std::pair<PartialBijection, SolveReport> comparison_solve(const ComparisonInstance& inst);

// Exact reference oracle: succeeds iff a maximum bipartite matching on the
// edge set { (a,b) : b in Ea n B } saturates A n core(W).
bool matching_oracle_saturates(const ComparisonInstance& inst);

struct BlockCodeReport {
    bool deterministic = true;
    BlockCode code;  // pattern -> multiplier index (into the shared multiplier list)
    std::vector<std::string> multiplier_names;
    // counterexample on failure: (case, position) pairs with equal patterns
    // but different multipliers
    int case1 = -1, case2 = -1;
    GroupElement pos1, pos2;
};

// Checks that across all solved cases the multiplier at a matched point is a
// function of the configuration pattern inside the horizon F.
BlockCodeReport verify_block_code(const std::vector<std::pair<SymbolicArray, PartialBijection>>& cases,
                                  const FiniteSubset& F);

// Number of E-steps needed to leave the carrier from x (1 = some E-neighbour
// is already outside).  E must be symmetric and contain the identity.
std::unordered_map<GroupElement, int, GroupElementHash> exit_distance(const FiniteSubset& E,
                                                                      const Window& W, int cutoff);

}  // namespace tilekit
