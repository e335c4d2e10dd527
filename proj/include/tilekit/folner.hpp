#pragma once

#include <functional>
#include <optional>

#include "tilekit/group.hpp"

namespace tilekit {

/**
 * Finite computation window: a carrier set plus the margin shape that defines
 * its usable core.  core = { g : margin_shape * g subset of carrier }.
 */
struct Window {
    FiniteSubset carrier;
    FiniteSubset margin_shape;

    FiniteSubset core() const;
};

struct FolnerSequence {
    GroupSpec spec;
    std::function<FiniteSubset(int)> term;  // 1-based index
    bool centered = false;                  // e in every term
    bool nested = false;
    bool symmetric = false;
};

// Standard box/ball sequence: [-n,n]^d for free-abelian groups, word-metric
// balls for heis3.  Lamplighter has no supported box sequence.
FolnerSequence folner_boxes(const GroupSpec& spec);

struct TemperedReport {
    Rational constant;        // least C witnessing the tempered condition on the range
    int argmax_n = 0;         // n at which the ratio is attained
    bool holds_for(const Rational& c) const { return constant <= c; }
};

// Exact tempered (Shulman) constant over 1 <= n < up_to:
//   max_n |union_{i<=n} F_i^-1 F_{n+1}| / |F_{n+1}|
TemperedReport check_tempered(const FolnerSequence& seq, int up_to);

struct DensityReport {
    Rational lower;
    Rational upper;
    GroupElement lower_witness;
    GroupElement upper_witness;
    std::size_t translate_count = 0;
};

// Window lower/upper density of B along translates Fg contained in the
// carrier.  Throws MarginError when no translate fits.
DensityReport density_window(const FiniteSubset& B, const FiniteSubset& F, const Window& W,
                             int threads = 1);

struct AdvantageReport {
    Rational advantage;  // inf_g (|B n Fg| - |A n Fg|) / |F|
    GroupElement witness;
    std::size_t translate_count = 0;
};

// Requires A, B disjoint.
AdvantageReport advantage_window(const FiniteSubset& B, const FiniteSubset& A,
                                 const FiniteSubset& F, const Window& W);

struct BdcReport {
    Rational coarse;     // advantage along F
    Rational fine;       // advantage along F1
    Rational bound;      // coarse - 4*eps
    bool holds = false;  // fine >= bound
};

// Invariance-comparison check: F1 must be (F, eps)-invariant; then the
// F1-advantage dominates the F-advantage minus 4*eps.
BdcReport check_bdc(const FiniteSubset& B, const FiniteSubset& A, const FiniteSubset& F,
                    const FiniteSubset& F1, const Rational& eps, const Window& W);

// Greedy (canonical order) maximal subset C of the window core with {Fc}
// pairwise disjoint.  Requires e in F.
FiniteSubset maximal_separated(const FiniteSubset& F, const Window& W);

/**
 * Periodic subset of a free-abelian group: a full-rank diagonal period
 * lattice together with the residues it contains.  Gives exact
 * whole-group densities as ground truth.
 */
struct PeriodicPattern {
    GroupSpec spec;
    std::vector<std::int64_t> periods;   // one positive period per coordinate
    FiniteSubset residues;               // representatives inside [0,p_i)

    void validate() const;
    bool contains(const GroupElement& g) const;
    Rational exact_density() const;
    std::int64_t cell_volume() const;
    // Materialize the intersection with an axis box.
    FiniteSubset restrict_to_box(const std::vector<std::pair<std::int64_t, std::int64_t>>& ranges) const;
    // Exact |B n (box + g)| for the translate g (O(#residues) per call).
    std::int64_t count_in_box(const std::vector<std::pair<std::int64_t, std::int64_t>>& ranges,
                              const GroupElement& g) const;
};

// Exact whole-group window statistics of a periodic set along a box shape F:
// min/max of |B n Fg|/|F| over all g (finite by periodicity).
DensityReport density_exact_periodic(const PeriodicPattern& B,
                                     const std::vector<std::pair<std::int64_t, std::int64_t>>& F_ranges);

AdvantageReport advantage_exact_periodic(const PeriodicPattern& B, const PeriodicPattern& A,
                                         const std::vector<std::pair<std::int64_t, std::int64_t>>& F_ranges);

}  // namespace tilekit
