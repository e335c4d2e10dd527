#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tilekit/errors.hpp"

namespace tilekit {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

enum class Family { FreeAbelian, Heisenberg3, Lamplighter };

/**
 * A group element is a flat vector of 64-bit integers whose interpretation
 * depends on the group family:
 *
 *  - FreeAbelian (rank d):  d coordinates.
 *  - Heisenberg3:           (x, y, z) in the discrete Heisenberg normal form,
 *                           (x,y,z)(x',y',z') = (x+x', y+y', z+z'+x*y').
 *  - Lamplighter (Z2 wr Z): v[0] is the cursor position, v[1..] is the
 *                           strictly increasing list of lit lamp positions.
 */
struct GroupElement {
    std::vector<std::int64_t> v;

    GroupElement() = default;
    explicit GroupElement(std::vector<std::int64_t> coords) : v(std::move(coords)) {}

    bool operator==(const GroupElement& o) const { return v == o.v; }
    bool operator!=(const GroupElement& o) const { return v != o.v; }
};

struct GroupElementHash {
    std::size_t operator()(const GroupElement& g) const noexcept {
        // FNV-1a over the raw coordinates; stable across runs.
        std::uint64_t h = 1469598103934665603ull;
        for (std::int64_t c : g.v) {
            auto u = static_cast<std::uint64_t>(c);
            for (int i = 0; i < 8; ++i) {
                h ^= (u >> (8 * i)) & 0xffu;
                h *= 1099511628211ull;
            }
        }
        return static_cast<std::size_t>(h);
    }
};

/**
 * Descriptor of a finitely generated group together with its fixed symmetric
 * generating set.  Recognised text forms: "zd:<d>", "heis3", "lamplighter".
 */
struct GroupSpec {
    Family family = Family::FreeAbelian;
    int dim = 1;  // rank for FreeAbelian, ignored otherwise

    static GroupSpec parse(std::string_view descriptor);
    std::string descriptor() const;

    bool operator==(const GroupSpec& o) const {
        return family == o.family && (family != Family::FreeAbelian || dim == o.dim);
    }

    GroupElement identity() const;
    bool is_identity(const GroupElement& g) const;

    // Symmetric generating set (inverses included, identity excluded),
    // in canonical order.
    std::vector<GroupElement> generators() const;

    GroupElement multiply(const GroupElement& a, const GroupElement& b) const;
    GroupElement invert(const GroupElement& a) const;

    // Validates coordinate count / lamp-list normal form.
    void validate(const GroupElement& g) const;

    // Length surrogate used as the primary key of the canonical order.
    // Exact generator word length for FreeAbelian; a fixed cheap surrogate
    // for the other families (see canonical_less).
    std::int64_t norm(const GroupElement& g) const;

    // Total, run-stable "length-lexicographic" order: norm first, then a
    // lexicographic comparison of normal forms in which each scalar is
    // ranked 0 < 1 < -1 < 2 < -2 < ...  In Z this enumerates the group as
    // 0, 1, -1, 2, -2, ...
    bool canonical_less(const GroupElement& a, const GroupElement& b) const;

    std::string format(const GroupElement& g) const;
    GroupElement parse_element(std::string_view text) const;
};

/**
 * Finite subset of a group, kept sorted (canonical order) and deduplicated.
 */
class FiniteSubset {
public:
    FiniteSubset() = default;
    FiniteSubset(GroupSpec spec, std::vector<GroupElement> elems);

    const GroupSpec& spec() const { return spec_; }
    std::size_t size() const { return elems_.size(); }
    bool empty() const { return elems_.empty(); }
    bool contains(const GroupElement& g) const;
    const GroupElement& operator[](std::size_t i) const { return elems_[i]; }
    const std::vector<GroupElement>& elements() const { return elems_; }

    auto begin() const { return elems_.begin(); }
    auto end() const { return elems_.end(); }

    bool operator==(const FiniteSubset& o) const { return elems_ == o.elems_; }
    bool operator!=(const FiniteSubset& o) const { return !(*this == o); }

    // Strict total order on subsets (size, then element-wise canonical order);
    // used to key maps of shapes deterministically.
    bool set_less(const FiniteSubset& o) const;

    // One normal form per line.
    std::string serialize() const;
    static FiniteSubset deserialize(const GroupSpec& spec, std::string_view text);

private:
    GroupSpec spec_;
    std::vector<GroupElement> elems_;
};

// ---- elementary set operations -------------------------------------------

FiniteSubset set_union(const FiniteSubset& a, const FiniteSubset& b);
FiniteSubset set_intersection(const FiniteSubset& a, const FiniteSubset& b);
FiniteSubset set_difference(const FiniteSubset& a, const FiniteSubset& b);
FiniteSubset symmetric_difference(const FiniteSubset& a, const FiniteSubset& b);

// {k*f : k in K, f in F}
FiniteSubset product_set(const FiniteSubset& K, const FiniteSubset& F);
// F * g
FiniteSubset translate(const FiniteSubset& F, const GroupElement& g);
// g * F
FiniteSubset translate_left(const GroupElement& g, const FiniteSubset& F);
FiniteSubset inverse_set(const FiniteSubset& F);
FiniteSubset singleton(const GroupSpec& spec, const GroupElement& g);

// K-core of F: { f in F : K*f subset of F }.
FiniteSubset k_core(const FiniteSubset& F, const FiniteSubset& K);

// |KF \triangle F| / |F| < eps (exact rational test).  Empty F is a domain
// error: invariance of the empty set is not defined.
bool is_invariant(const FiniteSubset& F, const FiniteSubset& K, const Rational& eps);
Rational invariance_defect(const FiniteSubset& F, const FiniteSubset& K);

// Ball of radius n: (R u R^-1 u {e})^n over the fixed generators.
// Throws ResourceError when the element budget is exceeded.
FiniteSubset ball(const GroupSpec& spec, int n, std::size_t element_budget = 5'000'000);

// Axis-aligned box product [lo_0,hi_0] x ... (FreeAbelian only).
FiniteSubset box(const GroupSpec& spec,
                 const std::vector<std::pair<std::int64_t, std::int64_t>>& ranges);

// Detects whether F is exactly such a box; returns ranges if so.
std::optional<std::vector<std::pair<std::int64_t, std::int64_t>>> as_box(const FiniteSubset& F);

}  // namespace tilekit
