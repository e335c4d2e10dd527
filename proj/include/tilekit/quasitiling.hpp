#pragma once

#include <optional>

#include "tilekit/folner.hpp"

namespace tilekit {

/**
 * One tile: a shape index into the owning quasitiling's shape list plus a
 * center; the tile occupies shape * center.  order_tag (j, i) records the
 * construction step (shape sweep j, pass i) and primary marks first-pass
 * tiles; both survive disjointification so later stages can replay the
 * construction order.
 */
struct Tile {
    int shape = 0;
    GroupElement center;
    std::optional<std::pair<int, int>> order_tag;
    std::optional<bool> primary;
    std::optional<int> source_shape;  // pre-disjointification shape index
};

struct Quasitiling {
    GroupSpec spec;
    std::vector<FiniteSubset> shapes;  // duplicates allowed; each must contain e
    std::vector<Tile> tiles;

    FiniteSubset tile_cells(const Tile& t) const { return translate(shapes[t.shape], t.center); }
    FiniteSubset covered_cells() const;
    // Centers of all tiles (any shape).
    FiniteSubset centers() const;
    FiniteSubset centers_of_shape(int shape) const;
    void validate() const;  // shapes contain e, per-shape center sets disjoint
};

struct QuasitilingProperties {
    bool shapes_contain_identity = false;
    bool centers_disjoint = false;        // per-shape center sets pairwise disjoint
    bool tiles_pairwise_disjoint = false;
    bool eps_disjoint = false;            // greedy witness family found
    bool tiling = false;                  // partitions the K-core of the window
    Rational covering_alpha;              // covered fraction of the K-core
    std::vector<FiniteSubset> witness;    // T° family (parallel to tiles) when eps_disjoint
};

// K defaults to the union of all shapes with the window margin; alpha and the
// tiling flag are evaluated on the K-core of the carrier.
QuasitilingProperties check_properties(const Quasitiling& T, const Rational& eps, const Window& W);

/**
 * Deterministic finite-window analogue of the epsilon-quasitiling
 * construction: sweep the shape pool from the largest (most invariant) shape
 * down; each shape is processed in passes whose candidate centers form
 * maximal separated classes, and a candidate tile is accepted exactly when
 * the part not already covered holds at least a (1-eps) fraction of it.
 * occupancy_seed rotates candidate scan order and stands in for the choice
 * of orbit point.
 */
Quasitiling construct_epsilon_quasitiling(const std::vector<FiniteSubset>& pool, const Rational& eps,
                                          const Window& W, std::uint64_t occupancy_seed = 0);

// Subtract from every tile the union of all strictly earlier tiles in the
// (j, i) construction order, dropping emptied tiles.  The covered region is
// preserved and the result is a genuine partition of it.  Requires order
// tags on every tile.
Quasitiling disjointify(const Quasitiling& T);

// Normalize shapes after disjointification: for each distinct post-cut cell
// pattern pick its canonical-least cell a, use pattern*a^-1 (which contains e)
// as the shape and a*center as the center.  Tile cell sets are unchanged.
Quasitiling adjust_centers(const Quasitiling& T);

/**
 * Congruent multi-level system on a window: level k+1 tiles are disjoint
 * unions of level-k tiles, with shape duplication making the decomposition a
 * function of the (duplicated) shape alone.
 */
struct TilingSystemWindow {
    GroupSpec spec;
    std::vector<Quasitiling> levels;  // levels[0] is the finest
    // children[k][t] = indices into levels[k].tiles of the level-(k) tiles
    // composing tile t of levels[k+1]; children.size() == levels.size()-1.
    std::vector<std::vector<std::vector<int>>> children;
    // Per level >= 1: decomposition pattern of each (duplicated) shape,
    // as (child shape, child center relative to the parent center).
    std::vector<std::vector<std::vector<std::pair<int, GroupElement>>>> shape_decomposition;
};

// Build from per-level tilings (levels[k+1] coarser).  A level-k tile whose
// center lies in no level-(k+1) tile over the relevant core is a
// diagnostic error (DataError naming the offending center).
TilingSystemWindow build_congruent_system(const std::vector<Quasitiling>& levels, const Window& W);

}  // namespace tilekit
