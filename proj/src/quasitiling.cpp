#include "tilekit/quasitiling.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>
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
}  // namespace

FiniteSubset Quasitiling::covered_cells() const {
    std::vector<GroupElement> v;
    for (const auto& t : tiles)
        for (const auto& s : shapes[t.shape]) v.push_back(spec.multiply(s, t.center));
    return FiniteSubset(spec, std::move(v));
}

FiniteSubset Quasitiling::centers() const {
    std::vector<GroupElement> v;
    v.reserve(tiles.size());
    for (const auto& t : tiles) v.push_back(t.center);
    return FiniteSubset(spec, std::move(v));
}

FiniteSubset Quasitiling::centers_of_shape(int shape) const {
    std::vector<GroupElement> v;
    for (const auto& t : tiles)
        if (t.shape == shape) v.push_back(t.center);
    return FiniteSubset(spec, std::move(v));
}

void Quasitiling::validate() const {
    for (const auto& s : shapes) {
        if (!s.contains(spec.identity()))
            throw UsageError("quasitiling shape does not contain the identity");
    }
    for (std::size_t j = 0; j < shapes.size(); ++j) {
        auto c = centers_of_shape(static_cast<int>(j));
        std::size_t n = 0;
        for (const auto& t : tiles)
            if (t.shape == static_cast<int>(j)) ++n;
        if (c.size() != n) throw UsageError("duplicate center within one shape class");
    }
}

namespace {

// Deterministic processing order used both by the witness search and by
// disjointify: construction tags first, then size (large first), then center.
std::vector<std::size_t> tile_order(const Quasitiling& T) {
    std::vector<std::size_t> idx(T.tiles.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const Tile& ta = T.tiles[a];
        const Tile& tb = T.tiles[b];
        bool ha = ta.order_tag.has_value(), hb = tb.order_tag.has_value();
        if (ha != hb) return ha;  // tagged tiles first (construction order known)
        if (ha && *ta.order_tag != *tb.order_tag) return *ta.order_tag < *tb.order_tag;
        std::size_t sa = T.shapes[ta.shape].size(), sb = T.shapes[tb.shape].size();
        if (sa != sb) return sa > sb;
        if (ta.center != tb.center) return T.spec.canonical_less(ta.center, tb.center);
        return a < b;
    });
    return idx;
}

}  // namespace

QuasitilingProperties check_properties(const Quasitiling& T, const Rational& eps, const Window& W) {
    QuasitilingProperties P;
    const GroupSpec& spec = T.spec;

    P.shapes_contain_identity = true;
    for (const auto& s : T.shapes)
        if (!s.contains(spec.identity())) P.shapes_contain_identity = false;

    P.centers_disjoint = true;
    for (std::size_t j = 0; j < T.shapes.size(); ++j) {
        std::size_t n = 0;
        for (const auto& t : T.tiles)
            if (t.shape == static_cast<int>(j)) ++n;
        if (T.centers_of_shape(static_cast<int>(j)).size() != n) P.centers_disjoint = false;
    }

    // pairwise disjointness via a cell multiplicity map
    std::unordered_map<GroupElement, int, GroupElementHash> mult;
    for (const auto& t : T.tiles)
        for (const auto& s : T.shapes[t.shape]) ++mult[spec.multiply(s, t.center)];
    P.tiles_pairwise_disjoint =
        std::all_of(mult.begin(), mult.end(), [](const auto& kv) { return kv.second == 1; });

    // greedy witness: walk tiles in construction order, keep what is not yet
    // kept; every tile must retain at least a (1-eps) fraction.
    P.eps_disjoint = true;
    P.witness.assign(T.tiles.size(), FiniteSubset(spec, {}));
    {
        ElemSet used;
        for (std::size_t i : tile_order(T)) {
            FiniteSubset cells = T.tile_cells(T.tiles[i]);
            std::vector<GroupElement> keep;
            for (const auto& x : cells)
                if (!used.count(x)) keep.push_back(x);
            Rational removed(static_cast<long>(cells.size() - keep.size()),
                             static_cast<long>(cells.size()));
            if (removed > eps) {
                P.eps_disjoint = false;
                P.witness.clear();
                break;
            }
            for (const auto& x : keep) used.insert(x);
            P.witness[i] = FiniteSubset(spec, std::move(keep));
        }
    }

    // covering over the K-core, K = union of shapes and the window margin
    FiniteSubset K = W.margin_shape;
    for (const auto& s : T.shapes) K = set_union(K, s);
    FiniteSubset core = Window{W.carrier, K}.core();
    if (core.empty()) throw MarginError("check_properties: empty K-core");
    FiniteSubset covered = T.covered_cells();
    std::size_t hit = set_intersection(covered, core).size();
    P.covering_alpha = Rational(static_cast<long>(hit), static_cast<long>(core.size()));
    P.tiling = P.tiles_pairwise_disjoint && hit == core.size();
    return P;
}

Quasitiling construct_epsilon_quasitiling(const std::vector<FiniteSubset>& pool, const Rational& eps,
                                          const Window& W, std::uint64_t occupancy_seed) {
    if (pool.empty()) throw UsageError("empty shape pool");
    const GroupSpec& spec = W.carrier.spec();
    for (const auto& s : pool)
        if (s.empty() || !s.contains(spec.identity()))
            throw UsageError("pool shapes must contain the identity");
    if (eps <= 0 || eps >= 1) throw UsageError("eps must lie in (0,1)");

    ElemSet inside = to_hash_set(W.carrier);
    Quasitiling T;
    T.spec = spec;
    T.shapes = pool;
    ElemSet covered;

    for (std::size_t j = 0; j < pool.size(); ++j) {
        const FiniteSubset& S = pool[j];
        // candidate centers: tiles fully inside the carrier
        std::vector<GroupElement> cand;
        const GroupElement s0inv = spec.invert(S[0]);
        for (const auto& c : W.carrier) {
            GroupElement g = spec.multiply(s0inv, c);
            bool ok = true;
            for (const auto& s : S)
                if (!inside.count(spec.multiply(s, g))) {
                    ok = false;
                    break;
                }
            if (ok) cand.push_back(g);
        }
        std::sort(cand.begin(), cand.end(), [&](const GroupElement& a, const GroupElement& b) {
            return spec.canonical_less(a, b);
        });
        cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
        if (cand.empty()) continue;
        // the occupancy seed rotates the scan order (stand-in for the choice
        // of orbit point in the dynamical construction)
        std::rotate(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(occupancy_seed % cand.size()),
                    cand.end());

        // split the candidates into maximal separated classes: pass schedule
        std::vector<std::vector<GroupElement>> passes;
        std::vector<GroupElement> remaining = cand;
        while (!remaining.empty()) {
            std::vector<GroupElement> pass, rest;
            ElemSet used;
            for (const auto& c : remaining) {
                bool free = true;
                for (const auto& s : S)
                    if (used.count(spec.multiply(s, c))) {
                        free = false;
                        break;
                    }
                if (free) {
                    pass.push_back(c);
                    for (const auto& s : S) used.insert(spec.multiply(s, c));
                } else {
                    rest.push_back(c);
                }
            }
            passes.push_back(std::move(pass));
            remaining = std::move(rest);
        }

        const auto tile_size = static_cast<std::int64_t>(S.size());
        for (std::size_t i = 0; i < passes.size(); ++i) {
            // accept against the union of tiles from strictly earlier passes;
            // tiles within one pass are pairwise disjoint by the schedule
            std::vector<GroupElement> accepted_cells;
            for (const auto& c : passes[i]) {
                std::int64_t overlap = 0;
                for (const auto& s : S)
                    if (covered.count(spec.multiply(s, c))) ++overlap;
                if (Rational(overlap, tile_size) < eps) {
                    Tile t;
                    t.shape = static_cast<int>(j);
                    t.center = c;
                    t.order_tag = std::make_pair(static_cast<int>(j), static_cast<int>(i) + 1);
                    t.primary = (i == 0);
                    T.tiles.push_back(t);
                    for (const auto& s : S) accepted_cells.push_back(spec.multiply(s, c));
                }
            }
            for (const auto& x : accepted_cells) covered.insert(x);
        }
    }
    T.validate();
    return T;
}

Quasitiling disjointify(const Quasitiling& T) {
    for (const auto& t : T.tiles)
        if (!t.order_tag)
            throw UsageError("disjointify needs order tags on every tile");

    const GroupSpec& spec = T.spec;
    Quasitiling out;
    out.spec = spec;
    ElemSet used;
    std::vector<FiniteSubset> shape_cache;  // dedupe stale shapes

    for (std::size_t i : tile_order(T)) {
        const Tile& t = T.tiles[i];
        std::vector<GroupElement> keep;
        for (const auto& x : T.tile_cells(t))
            if (!used.count(x)) keep.push_back(x);
        if (keep.empty()) continue;
        for (const auto& x : keep) used.insert(x);
        // stale shape relative to the unchanged center
        GroupElement cinv = spec.invert(t.center);
        std::vector<GroupElement> rel;
        rel.reserve(keep.size());
        for (const auto& x : keep) rel.push_back(spec.multiply(x, cinv));
        FiniteSubset shape(spec, std::move(rel));
        int sidx = -1;
        for (std::size_t k = 0; k < shape_cache.size(); ++k)
            if (shape_cache[k] == shape) {
                sidx = static_cast<int>(k);
                break;
            }
        if (sidx < 0) {
            sidx = static_cast<int>(shape_cache.size());
            shape_cache.push_back(shape);
        }
        Tile nt = t;
        nt.shape = sidx;
        nt.source_shape = t.shape;
        out.tiles.push_back(nt);
    }
    out.shapes = std::move(shape_cache);
    return out;
}

Quasitiling adjust_centers(const Quasitiling& T) {
    const GroupSpec& spec = T.spec;
    Quasitiling out;
    out.spec = spec;
    // normalize each stale shape around its canonical-least cell
    std::vector<GroupElement> anchors;
    std::vector<FiniteSubset> normalized;
    anchors.reserve(T.shapes.size());
    for (const auto& s : T.shapes) {
        if (s.empty()) throw InternalError("empty shape");
        GroupElement a = s[0];  // canonical-least (sets are sorted)
        anchors.push_back(a);
        GroupElement ainv = spec.invert(a);
        std::vector<GroupElement> rel;
        for (const auto& x : s) rel.push_back(spec.multiply(x, ainv));
        normalized.emplace_back(spec, std::move(rel));
    }
    // merge shapes that normalize to the same cell pattern
    std::vector<int> remap(T.shapes.size());
    for (std::size_t k = 0; k < normalized.size(); ++k) {
        int idx = -1;
        for (std::size_t m = 0; m < out.shapes.size(); ++m)
            if (out.shapes[m] == normalized[k]) {
                idx = static_cast<int>(m);
                break;
            }
        if (idx < 0) {
            idx = static_cast<int>(out.shapes.size());
            out.shapes.push_back(normalized[k]);
        }
        remap[k] = idx;
    }
    for (const auto& t : T.tiles) {
        Tile nt = t;
        nt.shape = remap[t.shape];
        nt.center = spec.multiply(anchors[t.shape], t.center);
        out.tiles.push_back(nt);
    }
    out.validate();
    return out;
}

TilingSystemWindow build_congruent_system(const std::vector<Quasitiling>& levels, const Window& W) {
    if (levels.empty()) throw UsageError("no levels");
    const GroupSpec& spec = levels[0].spec;
    TilingSystemWindow sys;
    sys.spec = spec;
    sys.levels.push_back(levels[0]);
    sys.levels[0].validate();
    FiniteSubset core = W.core();

    for (std::size_t k = 1; k < levels.size(); ++k) {
        const Quasitiling& fine = sys.levels[k - 1];
        const Quasitiling& coarse = levels[k];

        // cell -> coarse tile index
        std::unordered_map<GroupElement, int, GroupElementHash> owner;
        for (std::size_t ti = 0; ti < coarse.tiles.size(); ++ti)
            for (const auto& x : coarse.tile_cells(coarse.tiles[ti])) {
                auto [it, fresh] = owner.emplace(x, static_cast<int>(ti));
                if (!fresh) throw DataError("coarse tiles overlap at " + spec.format(x));
            }

        std::vector<std::vector<int>> members(coarse.tiles.size());
        for (std::size_t fi = 0; fi < fine.tiles.size(); ++fi) {
            auto it = owner.find(fine.tiles[fi].center);
            if (it == owner.end()) {
                if (core.contains(fine.tiles[fi].center))
                    throw DataError("level-" + std::to_string(k) + " center " +
                                    spec.format(fine.tiles[fi].center) +
                                    " lies in no coarser tile");
                continue;  // boundary effect; drop from the regrouping
            }
            members[it->second].push_back(static_cast<int>(fi));
        }

        // regroup coarse tiles as unions of their member fine tiles, in
        // canonical center order for determinism
        std::vector<std::size_t> order(coarse.tiles.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return spec.canonical_less(coarse.tiles[a].center, coarse.tiles[b].center);
        });

        Quasitiling next;
        next.spec = spec;
        std::vector<std::vector<std::pair<int, GroupElement>>> decomposition;
        // duplication: the shape symbol is (cell pattern, decomposition)
        std::map<std::string, int> shape_ids_by_key;
        std::vector<std::vector<int>> child_lists;

        for (std::size_t ti : order) {
            if (members[ti].empty()) continue;
            std::sort(members[ti].begin(), members[ti].end(), [&](int a, int b) {
                return spec.canonical_less(fine.tiles[a].center, fine.tiles[b].center);
            });
            std::vector<GroupElement> cells;
            for (int fi : members[ti])
                for (const auto& x : fine.tile_cells(fine.tiles[fi])) cells.push_back(x);
            FiniteSubset cellset(spec, cells);
            if (cellset.size() != cells.size())
                throw DataError("fine tiles overlap inside a coarse tile");
            GroupElement anchor = cellset[0];
            GroupElement ainv = spec.invert(anchor);
            std::vector<GroupElement> rel;
            for (const auto& x : cellset) rel.push_back(spec.multiply(x, ainv));
            FiniteSubset shape(spec, std::move(rel));
            std::vector<std::pair<int, GroupElement>> decomp;
            for (int fi : members[ti])
                decomp.emplace_back(fine.tiles[fi].shape,
                                    spec.multiply(fine.tiles[fi].center, ainv));

            std::string key = shape.serialize();
            key += '|';
            for (const auto& [cs, rc] : decomp) {
                key += std::to_string(cs);
                key += '@';
                key += spec.format(rc);
                key += ';';
            }
            auto it = shape_ids_by_key.find(key);
            int sid;
            if (it == shape_ids_by_key.end()) {
                sid = static_cast<int>(next.shapes.size());
                shape_ids_by_key.emplace(std::move(key), sid);
                next.shapes.push_back(shape);
                decomposition.push_back(decomp);
            } else {
                sid = it->second;
            }
            Tile nt = coarse.tiles[ti];
            nt.shape = sid;
            nt.center = anchor;
            next.tiles.push_back(nt);
            child_lists.push_back(members[ti]);
        }
        next.validate();
        sys.levels.push_back(std::move(next));
        sys.children.push_back(std::move(child_lists));
        sys.shape_decomposition.push_back(std::move(decomposition));
    }
    return sys;
}

}  // namespace tilekit
