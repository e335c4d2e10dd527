#pragma once

#include "tilekit/quasitiling.hpp"
#include "tilekit/symbolic.hpp"

namespace tilekit {

/**
 * Family of equal-size marker sets whose shifted copies can be uniquely
 * identified inside unions: A_i g = A_j only for i = j, g = e, and any
 * translate of a member contained in a union of placed members must be one
 * of the placed copies, provided the placement quotients avoid the margin.
 */
struct RecognizableFamily {
    GroupSpec spec;
    std::vector<FiniteSubset> sets;   // B_i = A_i with one marker element added
    std::vector<GroupElement> added;  // the marker elements
    FiniteSubset margin;              // union of B_i'^-1 B_i B_i^-1 B_i''
};

// A with the canonical-least element outside A A^-1 A added; the result is
// fixed by no translation except e.  Singletons come back unchanged.
FiniteSubset make_recognizable_origin(const GroupSpec& spec, const FiniteSubset& A);

// Inductive marker selection over a list of equal-cardinality sets (each
// containing e): g_{i+1} is the canonical-least element outside
// A_{i+1}A_{i+1}^-1 A_{i+1} and outside every g_j A_j^-1 A_{i+1} and
// A_j g_j^-1 A_{i+1} for j <= i.
RecognizableFamily make_recognizable_family(const GroupSpec& spec,
                                            const std::vector<FiniteSubset>& As);

// Brute-force oracle: no B_i h = B_j for h in ball(radius) except i=j, h=e.
// Radius 2 * diameter is exhaustive.
bool verify_recognizable(const GroupSpec& spec, const std::vector<FiniteSubset>& sets, int radius);

// Placements are (set index, translate) pairs.  True iff all pairwise
// placement quotients avoid the margin; when a window is given, additionally
// brute-force the defining property over it (any translate of a member
// inside the union of placed copies is itself placed).
bool check_fully_recognizable(const RecognizableFamily& fam,
                              const std::vector<std::pair<int, GroupElement>>& placements,
                              const Window* brute = nullptr);

enum class SymbolMode { Three, Two };

/**
 * All the data needed to encode a multi-level quasitiling into symbols and
 * decode it back: the marker support U2 with one code block per
 * (shape, primariness, index) triple at the base level, and per coarser level
 * the locator sets U (one center in every translate), Uhat (at least m
 * centers in every translate, enumerated starting with U), the word table,
 * and the accumulated coding horizons.
 */
struct ShapeCodebook {
    GroupSpec spec;
    SymbolMode mode = SymbolMode::Three;

    // base level: keys are (shape index, primary) in fixed order
    std::vector<std::pair<int, bool>> keys1;
    std::vector<FiniteSubset> shapes1;
    FiniteSubset U2;  // marker support, contains e
    // blocks[3*key + (i+1)]: Three-symbol mode: values over U2 \ {e} in
    // canonical order (center cell is always 0); Two-symbol mode: 0/1
    // indicator over U2 in canonical order.
    std::vector<std::vector<int>> blocks;
    std::optional<RecognizableFamily> family;  // Two-symbol mode markers

    struct LevelLayer {  // for level l >= 2 (1-based levels)
        std::vector<std::pair<int, bool>> keys;
        std::vector<FiniteSubset> shapes;
        FiniteSubset U;                        // every U g meets a lower-level center
        std::vector<GroupElement> uhat_order;  // Uhat enumeration, U first
        int m = 0;                             // word length
        FiniteSubset horizon;                  // U_{l+1} = U_l * Uhat * U
        // word index w = 3*(|keys|*u_idx + key_idx) + (i'+1); words are
        // (0, b_2..b_m) with b in {-1,1}, assigned lexicographically
        std::vector<int> word_of(int u_idx, int key_idx, int iprime) const;
        bool lookup(const std::vector<int>& word, int& u_idx, int& key_idx, int& iprime) const;
    };
    std::vector<LevelLayer> layers;  // layers[l-2] serves level l

    // horizon needed to decode level l (1-based)
    const FiniteSubset& horizon(int level) const;
    std::string serialize() const;
};

// Derive a codebook from the per-level tilings (levels[0] finest).  All tiles
// need primariness flags; locator sets are minimal balls validated against
// the window.
ShapeCodebook build_codebook(const std::vector<Quasitiling>& levels, const Window& W,
                             SymbolMode mode);

// Top-level free index (trit) per top-level center; absent centers default
// to 1.
using TritChoices = std::unordered_map<GroupElement, int, GroupElementHash>;

// Writes the symbolic array: markers at base-level centers, with the marker
// variant (index) at each center spelled by the word of the coarser-level
// tile that claims it, and background 1 (Three) / 0 (Two) elsewhere.
// Separation violations (overlapping marker supports or colliding words)
// raise UsageError naming a colliding center.
SymbolicArray encode_tiling(const std::vector<Quasitiling>& levels, const ShapeCodebook& book,
                            const Window& W, const TritChoices& choices = {});

struct DecodeResult {
    std::vector<Quasitiling> levels;
    TritChoices trits;                    // recovered top-level indices
    std::vector<FiniteSubset> safe_core;  // region scanned per level
};

// Inverse of encode_tiling on the horizon-safe part of the window.  Unknown
// marker blocks or index words raise DataError naming the position; in
// two-symbol mode an ambiguous marker raises DataError as an integrity
// failure.
DecodeResult decode_tiling(const SymbolicArray& z, const ShapeCodebook& book);

// Per level: (measured marker-cell fraction of the carrier, claimed bound
// |U_{l+1}| / |V_{l+1}|) with V_{l+1} the largest ball keeping that level's
// centers separated (V_2 = U_2 at the base level).
std::vector<std::pair<Rational, Rational>> marker_density_bound(
    const std::vector<Quasitiling>& levels, const ShapeCodebook& book, const Window& W);

}  // namespace tilekit
