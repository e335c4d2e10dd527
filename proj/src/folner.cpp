#include "tilekit/folner.hpp"

#include <algorithm>
#include <numeric>
#include <thread>
#include <unordered_set>

namespace tilekit {

namespace {

using ElemSet = std::unordered_set<GroupElement, GroupElementHash>;

ElemSet to_hash_set(const FiniteSubset& F) {
    ElemSet s;
    s.reserve(F.size() * 2);
    for (const auto& g : F) s.insert(g);
    return s;
}

std::int64_t floordiv(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b, r = a % b;
    return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

// #{ x in [a,b] : x = r (mod p) }
std::int64_t count_congruent(std::int64_t a, std::int64_t b, std::int64_t r, std::int64_t p) {
    if (a > b) return 0;
    return floordiv(b - r, p) - floordiv(a - 1 - r, p);
}

}  // namespace

FiniteSubset Window::core() const {
    const GroupSpec& spec = carrier.spec();
    ElemSet inside = to_hash_set(carrier);
    std::vector<GroupElement> out;
    for (const auto& g : carrier) {
        bool ok = true;
        for (const auto& m : margin_shape) {
            if (!inside.count(spec.multiply(m, g))) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(g);
    }
    return FiniteSubset(spec, std::move(out));
}

FolnerSequence folner_boxes(const GroupSpec& spec) {
    FolnerSequence seq;
    seq.spec = spec;
    seq.centered = seq.nested = seq.symmetric = true;
    switch (spec.family) {
        case Family::FreeAbelian:
            seq.term = [spec](int n) {
                if (n < 0) throw UsageError("negative box index");
                std::vector<std::pair<std::int64_t, std::int64_t>> r(spec.dim, {-n, n});
                return box(spec, r);
            };
            return seq;
        case Family::Heisenberg3:
            seq.term = [spec](int n) { return ball(spec, n); };
            return seq;
        case Family::Lamplighter:
            throw ConfigError("no supported box sequence for lamplighter");
    }
    throw InternalError("bad family");
}

TemperedReport check_tempered(const FolnerSequence& seq, int up_to) {
    if (up_to < 2) throw UsageError("check_tempered needs up_to >= 2");
    TemperedReport rep;
    rep.constant = 0;
    std::vector<FiniteSubset> inv_terms;  // F_i^-1
    for (int n = 1; n < up_to; ++n) {
        inv_terms.push_back(inverse_set(seq.term(n)));
        FiniteSubset next = seq.term(n + 1);
        FiniteSubset acc(seq.spec, {});
        for (const auto& Finv : inv_terms) acc = set_union(acc, product_set(Finv, next));
        Rational ratio(static_cast<long>(acc.size()), static_cast<long>(next.size()));
        if (ratio > rep.constant) {
            rep.constant = ratio;
            rep.argmax_n = n;
        }
    }
    return rep;
}

namespace {

// Translates g with Fg inside the carrier, in canonical order.
std::vector<GroupElement> admissible_translates(const FiniteSubset& F, const Window& W) {
    if (F.empty()) throw MarginError("density along an empty shape is undefined");
    const GroupSpec& spec = W.carrier.spec();
    ElemSet inside = to_hash_set(W.carrier);
    const GroupElement f0inv = spec.invert(F[0]);
    std::vector<GroupElement> out;
    for (const auto& c : W.carrier) {
        GroupElement g = spec.multiply(f0inv, c);  // candidate with F[0]*g == c
        bool ok = true;
        for (const auto& f : F) {
            if (!inside.count(spec.multiply(f, g))) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(g);
    }
    std::sort(out.begin(), out.end(),
              [&spec](const GroupElement& a, const GroupElement& b) { return spec.canonical_less(a, b); });
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.empty()) throw MarginError("no translate of the shape fits inside the carrier");
    return out;
}

struct Extreme {
    std::int64_t count = 0;
    GroupElement witness;
    bool set = false;
};

void take_min(const GroupSpec& spec, Extreme& e, std::int64_t c, const GroupElement& g) {
    if (!e.set || c < e.count || (c == e.count && spec.canonical_less(g, e.witness))) {
        e = {c, g, true};
    }
}
void take_max(const GroupSpec& spec, Extreme& e, std::int64_t c, const GroupElement& g) {
    if (!e.set || c > e.count || (c == e.count && spec.canonical_less(g, e.witness))) {
        e = {c, g, true};
    }
}

}  // namespace

DensityReport density_window(const FiniteSubset& B, const FiniteSubset& F, const Window& W,
                             int threads) {
    const GroupSpec& spec = W.carrier.spec();
    std::vector<GroupElement> translates = admissible_translates(F, W);
    ElemSet bset = to_hash_set(B);

    auto scan = [&](std::size_t lo, std::size_t hi, Extreme& mn, Extreme& mx) {
        for (std::size_t i = lo; i < hi; ++i) {
            std::int64_t c = 0;
            for (const auto& f : F)
                if (bset.count(spec.multiply(f, translates[i]))) ++c;
            take_min(spec, mn, c, translates[i]);
            take_max(spec, mx, c, translates[i]);
        }
    };

    Extreme mn, mx;
    if (threads <= 1 || translates.size() < 256) {
        scan(0, translates.size(), mn, mx);
    } else {
        std::size_t nth = std::min<std::size_t>(threads, 32);
        std::vector<Extreme> mins(nth), maxs(nth);
        std::vector<std::thread> pool;
        std::size_t chunk = (translates.size() + nth - 1) / nth;
        for (std::size_t t = 0; t < nth; ++t) {
            std::size_t lo = t * chunk, hi = std::min(translates.size(), lo + chunk);
            pool.emplace_back([&, lo, hi, t] { scan(lo, hi, mins[t], maxs[t]); });
        }
        for (auto& th : pool) th.join();
        // Deterministic merge: the extreme with canonical-least witness wins ties.
        for (std::size_t t = 0; t < nth; ++t) {
            if (mins[t].set) take_min(spec, mn, mins[t].count, mins[t].witness);
            if (maxs[t].set) take_max(spec, mx, maxs[t].count, maxs[t].witness);
        }
    }

    DensityReport rep;
    rep.lower = Rational(mn.count, static_cast<long>(F.size()));
    rep.upper = Rational(mx.count, static_cast<long>(F.size()));
    rep.lower_witness = mn.witness;
    rep.upper_witness = mx.witness;
    rep.translate_count = translates.size();
    return rep;
}

AdvantageReport advantage_window(const FiniteSubset& B, const FiniteSubset& A,
                                 const FiniteSubset& F, const Window& W) {
    if (!set_intersection(A, B).empty())
        throw UsageError("advantage requires disjoint sets");
    const GroupSpec& spec = W.carrier.spec();
    std::vector<GroupElement> translates = admissible_translates(F, W);
    ElemSet bset = to_hash_set(B), aset = to_hash_set(A);
    Extreme mn;
    for (const auto& g : translates) {
        std::int64_t c = 0;
        for (const auto& f : F) {
            GroupElement x = spec.multiply(f, g);
            if (bset.count(x)) ++c;
            else if (aset.count(x)) --c;
        }
        take_min(spec, mn, c, g);
    }
    AdvantageReport rep;
    rep.advantage = Rational(mn.count, static_cast<long>(F.size()));
    rep.witness = mn.witness;
    rep.translate_count = translates.size();
    return rep;
}

BdcReport check_bdc(const FiniteSubset& B, const FiniteSubset& A, const FiniteSubset& F,
                    const FiniteSubset& F1, const Rational& eps, const Window& W) {
    if (!is_invariant(F1, F, eps))
        throw UsageError("check_bdc: the fine shape is not (F, eps)-invariant");
    BdcReport rep;
    rep.coarse = advantage_window(B, A, F, W).advantage;
    rep.fine = advantage_window(B, A, F1, W).advantage;
    rep.bound = rep.coarse - Rational(4) * eps;
    rep.holds = rep.fine >= rep.bound;
    return rep;
}

FiniteSubset maximal_separated(const FiniteSubset& F, const Window& W) {
    const GroupSpec& spec = W.carrier.spec();
    if (!F.contains(spec.identity()))
        throw UsageError("maximal_separated: shape must contain the identity");
    FiniteSubset core = W.core();
    ElemSet used;
    std::vector<GroupElement> picked;
    for (const auto& c : core) {  // canonical order
        bool free = true;
        for (const auto& f : F) {
            if (used.count(spec.multiply(f, c))) {
                free = false;
                break;
            }
        }
        if (free) {
            picked.push_back(c);
            for (const auto& f : F) used.insert(spec.multiply(f, c));
        }
    }
    return FiniteSubset(spec, std::move(picked));
}

// ---- periodic patterns -----------------------------------------------------

void PeriodicPattern::validate() const {
    if (spec.family != Family::FreeAbelian) throw UsageError("periodic patterns need a free-abelian group");
    if (static_cast<int>(periods.size()) != spec.dim) throw UsageError("period arity mismatch");
    for (auto p : periods)
        if (p <= 0) throw UsageError("periods must be positive");
    for (const auto& r : residues)
        for (int i = 0; i < spec.dim; ++i)
            if (r.v[i] < 0 || r.v[i] >= periods[i]) throw UsageError("residue outside the fundamental cell");
}

bool PeriodicPattern::contains(const GroupElement& g) const {
    std::vector<std::int64_t> red(spec.dim);
    for (int i = 0; i < spec.dim; ++i) {
        std::int64_t m = g.v[i] % periods[i];
        if (m < 0) m += periods[i];
        red[i] = m;
    }
    return residues.contains(GroupElement(std::move(red)));
}

std::int64_t PeriodicPattern::cell_volume() const {
    return std::accumulate(periods.begin(), periods.end(), std::int64_t{1}, std::multiplies<>());
}

Rational PeriodicPattern::exact_density() const {
    return Rational(static_cast<long>(residues.size()), cell_volume());
}

FiniteSubset PeriodicPattern::restrict_to_box(
    const std::vector<std::pair<std::int64_t, std::int64_t>>& ranges) const {
    std::vector<GroupElement> out;
    for (const auto& g : box(spec, ranges))
        if (contains(g)) out.push_back(g);
    return FiniteSubset(spec, std::move(out));
}

std::int64_t PeriodicPattern::count_in_box(
    const std::vector<std::pair<std::int64_t, std::int64_t>>& ranges, const GroupElement& g) const {
    std::int64_t total = 0;
    for (const auto& r : residues) {
        std::int64_t prod = 1;
        for (int i = 0; i < spec.dim; ++i) {
            prod *= count_congruent(ranges[i].first + g.v[i], ranges[i].second + g.v[i], r.v[i],
                                    periods[i]);
            if (prod == 0) break;
        }
        total += prod;
    }
    return total;
}

namespace {

// All translates that matter for a periodic statistic: one per residue class
// of the period lattice (or a common refinement of two lattices).
std::vector<GroupElement> lattice_translates(const GroupSpec& spec,
                                             const std::vector<std::int64_t>& periods) {
    std::vector<std::pair<std::int64_t, std::int64_t>> r;
    r.reserve(periods.size());
    for (auto p : periods) r.push_back({0, p - 1});
    std::vector<GroupElement> out;
    for (const auto& g : box(spec, r)) out.push_back(g);
    return out;
}

}  // namespace

DensityReport density_exact_periodic(const PeriodicPattern& B,
                                     const std::vector<std::pair<std::int64_t, std::int64_t>>& F_ranges) {
    B.validate();
    std::int64_t volume = 1;
    for (auto [lo, hi] : F_ranges) volume *= (hi - lo + 1);
    Extreme mn, mx;
    for (const auto& g : lattice_translates(B.spec, B.periods)) {
        std::int64_t c = B.count_in_box(F_ranges, g);
        take_min(B.spec, mn, c, g);
        take_max(B.spec, mx, c, g);
    }
    DensityReport rep;
    rep.lower = Rational(mn.count, volume);
    rep.upper = Rational(mx.count, volume);
    rep.lower_witness = mn.witness;
    rep.upper_witness = mx.witness;
    rep.translate_count = static_cast<std::size_t>(B.cell_volume());
    return rep;
}

AdvantageReport advantage_exact_periodic(const PeriodicPattern& B, const PeriodicPattern& A,
                                         const std::vector<std::pair<std::int64_t, std::int64_t>>& F_ranges) {
    B.validate();
    A.validate();
    std::vector<std::int64_t> lcm_periods(B.periods.size());
    for (std::size_t i = 0; i < lcm_periods.size(); ++i)
        lcm_periods[i] = std::lcm(B.periods[i], A.periods[i]);
    // Disjointness over one common fundamental cell.
    std::vector<std::pair<std::int64_t, std::int64_t>> cell;
    for (auto p : lcm_periods) cell.push_back({0, p - 1});
    for (const auto& g : box(B.spec, cell))
        if (B.contains(g) && A.contains(g)) throw UsageError("advantage requires disjoint sets");

    std::int64_t volume = 1;
    for (auto [lo, hi] : F_ranges) volume *= (hi - lo + 1);
    Extreme mn;
    for (const auto& g : lattice_translates(B.spec, lcm_periods)) {
        std::int64_t c = B.count_in_box(F_ranges, g) - A.count_in_box(F_ranges, g);
        take_min(B.spec, mn, c, g);
    }
    AdvantageReport rep;
    rep.advantage = Rational(mn.count, volume);
    rep.witness = mn.witness;
    rep.translate_count = static_cast<std::size_t>(
        std::accumulate(lcm_periods.begin(), lcm_periods.end(), std::int64_t{1}, std::multiplies<>()));
    return rep;
}

}  // namespace tilekit
