#pragma once

#include <map>

#include "tilekit/quasitiling.hpp"
#include "tilekit/symbolic.hpp"

namespace tilekit {

// -Sum p log2 p with 0*log 0 = 0.  Probabilities must be nonnegative and sum
// to 1 within 1e-12 (UsageError otherwise).
double shannon_entropy(const std::vector<double>& probs);

/**
 * Pattern-frequency table; keys are whatever finite observation the caller
 * counts (pattern vectors, label columns, ...).
 */
struct EmpiricalMeasure {
    std::map<std::vector<int>, std::int64_t> counts;
    std::int64_t total = 0;

    void add(const std::vector<int>& key, std::int64_t n = 1);
    std::vector<double> probabilities() const;
    double entropy() const;  // bits
};

// H of the empirical distribution of F-patterns of x read at the given
// positions (all patterns must be defined; MarginError otherwise).
double pattern_entropy(const SymbolicArray& x, const FiniteSubset& F, const FiniteSubset& positions);
// Same, over every carrier position where the pattern is defined.
double pattern_entropy(const SymbolicArray& x, const FiniteSubset& F);

struct DynamicalEntropyReport {
    std::vector<double> per_term;     // (1/|F_i|) H(patterns over P*F_i)
    std::vector<double> running_min;
    double estimate = 0;              // final running minimum
};

// Window estimate of the per-cell entropy: the running minimum of
// H(empirical P*F_i patterns)/|F_i| over the supplied terms.  The sequence
// itself need not be monotone.  partition_horizon defaults to {e} (plain
// symbol partition).
DynamicalEntropyReport dynamical_entropy_estimate(const SymbolicArray& x,
                                                  const std::vector<FiniteSubset>& folner_terms,
                                                  const FiniteSubset* partition_horizon = nullptr);

struct TiledEntropyReport {
    double value = 0;                  // sum over shapes of weight * H
    std::vector<double> per_shape;     // contribution per shape index
    std::vector<Rational> weights;     // observed-center fraction per shape
    std::vector<int> zero_mass_shapes; // shapes with no observed centers
    std::int64_t core_size = 0;
};

// Tiled entropy of the partition with horizon P under the quasitiling:
// Sum_S (centers of shape S in the core / |core|) * H(empirical S-patterns
// at those centers), patterns read through P (default {e}).  The core is the
// (P * union-of-shapes)-core of the carrier.
TiledEntropyReport tiled_entropy(const SymbolicArray& x, const Quasitiling& T, const Window& W,
                                 const FiniteSubset* partition_horizon = nullptr);

// H_T(P|Q) = H_T(P v Q) - H_T(Q); the join of symbol partitions with
// horizons P and Q has horizon P u Q.
double tiled_entropy_conditional(const SymbolicArray& x, const Quasitiling& T, const Window& W,
                                 const FiniteSubset& P, const FiniteSubset& Q);

struct TiledMonotonicityReport {
    std::vector<double> per_level;    // H_{T_k}, k = 1..levels
    std::vector<double> tolerance;    // boundary tolerance per level
    double estimate = 0;              // per-cell dynamical estimate
    bool decreasing_ok = false;       // H_{k+1} <= H_k + tol_k + tol_{k+1}
    bool dominates_estimate_ok = false;  // H_k >= estimate - tol_k
};

// Tolerances are derived, not tuned: (uncovered core fraction + carrier
// core-defect fraction) * log2 |P| per level.
TiledMonotonicityReport check_tiled_monotonicity(const SymbolicArray& x,
                                                 const TilingSystemWindow& system, const Window& W,
                                                 const std::vector<FiniteSubset>& folner_terms,
                                                 const FiniteSubset* partition_horizon = nullptr);

/**
 * Level-k rectangle: the tiling-structure pattern of layers 1..k (extended
 * form: 1..k+1) over one shape-S tile.  Layer j records, cell by cell in
 * canonical shape order, 1 + (shape index) at level-j tile centers and 0
 * elsewhere.  The layer-k entry at the tile center is always 1 + shape.
 */
struct Rectangle {
    int level = 0;  // 1-based
    int shape = 0;  // shape index at that level
    std::vector<std::vector<int>> layers;

    bool operator<(const Rectangle& o) const;
    bool operator==(const Rectangle& o) const;
};

// Per-cell center labels of every level: layer j maps g to 1 + shape index
// when g is a level-j tile center, else the cell is absent (read as 0).
std::vector<std::unordered_map<GroupElement, int, GroupElementHash>> tiling_layers(
    const TilingSystemWindow& system);

// Rectangle read at one level-k tile.
Rectangle rectangle_at(const TilingSystemWindow& system,
                       const std::vector<std::unordered_map<GroupElement, int, GroupElementHash>>& layers,
                       int level, const Tile& t, bool extended);

// Occurrence counts of all level-k rectangles over tile centers in the
// (union-of-shapes)-core of the carrier.
std::map<Rectangle, std::int64_t> collect_rectangles(const TilingSystemWindow& system, int level,
                                                     bool extended, const Window& W);

// Column distribution of one occurrence: for each cell s of the tile shape,
// the vector of layer values 1..level (extended: 1..level+1) at s*center.
EmpiricalMeasure rectangle_measure(const TilingSystemWindow& system, int level, const Tile& t,
                                   bool extended = false);

struct ConditionalIdentityReport {
    double lhs = 0;  // per-shape layered conditional of the level-(k+1) layer
    double rhs = 0;  // center frequency * H(extended rectangle | rectangle)
    bool ok = false;
};

// Two independent evaluations of the conditional tiled entropy of the
// level-(k+1) layer given layers 1..k, which must agree to tol.
ConditionalIdentityReport check_conditional_identity(const TilingSystemWindow& system, int level,
                                                     const Window& W, double tol = 1e-9);

// ---- oracles ---------------------------------------------------------------

using Oracle = std::map<Rectangle, BigInt>;

// ceil(2^(cells * g)) in exact integer arithmetic.
BigInt oracle_value(std::int64_t cells, const Rational& g);

// O(R) = ceil(2^(|R| * g(R))) with |R| the cell count of R's shape.
Oracle build_oracle(const TilingSystemWindow& system,
                    const std::vector<std::pair<Rectangle, Rational>>& g_values);

struct OracleCheckReport {
    bool holds = true;
    Rational worst_ratio;  // max over concatenations of Sum/Product
    // Violating concatenation: the child rectangles, then the parent
    // rectangles observed over them.
    std::vector<Rectangle> witness_children;
    std::vector<Rectangle> witness_parents;
};

// For every observed concatenation (the tuple of level-k child rectangles of
// a level-(k+1) tile, keyed with relative positions): the sum of O over the
// distinct level-(k+1) rectangles seen above that tuple must not exceed the
// product of O over the children.  Exact integer arithmetic.  Rectangles
// missing from O raise UsageError.
OracleCheckReport check_oracle_condition(const Oracle& O, const TilingSystemWindow& system,
                                         int level, const Window& W);

struct AlphabetAssignment {
    int l = 0;  // alphabet size
    // Lexicographic index range [start, start + O(R)) into the l^|S| patterns
    // over R's shape, pairwise disjoint per shape.
    std::map<Rectangle, std::pair<BigInt, BigInt>> ranges;
    // Explicit pattern families (base-l digits in canonical shape-cell
    // order), materialized when the range is small enough.
    std::map<Rectangle, std::vector<std::vector<int>>> families;
};

// Least l with l^|S| >= Sum_{R over S} O(R) for every shape S, plus the
// carved index ranges.
AlphabetAssignment min_alphabet(const std::vector<FiniteSubset>& shapes,
                                const std::vector<Rectangle>& rects, const Oracle& O,
                                std::int64_t materialize_cap = 4096);

}  // namespace tilekit
