#include "tilekit/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace tilekit {

namespace {

using ElemSet = std::unordered_set<GroupElement, GroupElementHash>;
using ElemMap = std::unordered_map<GroupElement, int, GroupElementHash>;

ElemSet to_hash_set(const FiniteSubset& F) {
    ElemSet s;
    s.reserve(F.size() * 2);
    for (const auto& g : F) s.insert(g);
    return s;
}

// first n group elements in canonical order (e first)
std::vector<GroupElement> canonical_prefix(const GroupSpec& spec, std::size_t n) {
    int r = 0;
    FiniteSubset b = ball(spec, 0);
    while (b.size() < n) b = ball(spec, ++r);
    std::vector<GroupElement> out(b.begin(), b.begin() + n);
    return out;
}

// canonical-least element outside the given set
GroupElement least_outside(const GroupSpec& spec, const FiniteSubset& forbidden) {
    for (int r = 0;; ++r) {
        for (const auto& g : ball(spec, r))
            if (!forbidden.contains(g)) return g;
        if (r > 200) throw ResourceError("marker element search exceeded radius 200");
    }
}

int key_index(const std::vector<std::pair<int, bool>>& keys, int shape, bool primary) {
    for (std::size_t i = 0; i < keys.size(); ++i)
        if (keys[i].first == shape && keys[i].second == primary) return static_cast<int>(i);
    throw InternalError("shape key missing from codebook");
}

std::vector<std::pair<int, bool>> make_keys(const Quasitiling& T) {
    std::vector<std::pair<int, bool>> keys;
    for (int s = 0; s < static_cast<int>(T.shapes.size()); ++s) {
        keys.emplace_back(s, true);
        keys.emplace_back(s, false);
    }
    return keys;
}

int ceil_log2(std::size_t n) {
    int m = 0;
    while ((std::size_t(1) << m) < n) ++m;
    return m;
}

}  // namespace

// ---- recognizable sets ------------------------------------------------------

FiniteSubset make_recognizable_origin(const GroupSpec& spec, const FiniteSubset& A) {
    if (A.size() <= 1) return A;
    FiniteSubset aaa = product_set(product_set(A, inverse_set(A)), A);
    GroupElement g = least_outside(spec, aaa);
    return set_union(A, singleton(spec, g));
}

RecognizableFamily make_recognizable_family(const GroupSpec& spec,
                                            const std::vector<FiniteSubset>& As) {
    if (As.empty()) throw UsageError("empty family");
    for (const auto& A : As) {
        if (A.size() != As[0].size() || A.size() < 2)
            throw UsageError("family sets need equal cardinality >= 2");
        if (!A.contains(spec.identity())) throw UsageError("family sets must contain the identity");
    }
    RecognizableFamily fam;
    fam.spec = spec;
    for (std::size_t i = 0; i < As.size(); ++i) {
        const FiniteSubset& A = As[i];
        FiniteSubset forbidden = product_set(product_set(A, inverse_set(A)), A);
        for (std::size_t j = 0; j < i; ++j) {
            const FiniteSubset& Aj = As[j];
            const GroupElement& gj = fam.added[j];
            forbidden = set_union(
                forbidden, product_set(translate_left(gj, inverse_set(Aj)), A));
            forbidden = set_union(
                forbidden, product_set(translate(Aj, spec.invert(gj)), A));
        }
        GroupElement g = least_outside(spec, forbidden);
        fam.added.push_back(g);
        fam.sets.push_back(set_union(A, singleton(spec, g)));
    }
    FiniteSubset all(spec, {});
    FiniteSubset mid(spec, {});
    for (const auto& B : fam.sets) {
        all = set_union(all, B);
        mid = set_union(mid, product_set(B, inverse_set(B)));
    }
    fam.margin = product_set(product_set(inverse_set(all), mid), all);
    return fam;
}

bool verify_recognizable(const GroupSpec& spec, const std::vector<FiniteSubset>& sets, int radius) {
    for (const auto& h : ball(spec, radius)) {
        for (std::size_t i = 0; i < sets.size(); ++i) {
            FiniteSubset shifted = translate(sets[i], h);
            for (std::size_t j = 0; j < sets.size(); ++j) {
                if (shifted == sets[j] && !(i == j && h == spec.identity())) return false;
            }
        }
    }
    return true;
}

bool check_fully_recognizable(const RecognizableFamily& fam,
                              const std::vector<std::pair<int, GroupElement>>& placements,
                              const Window* brute) {
    const GroupSpec& spec = fam.spec;
    for (std::size_t a = 0; a < placements.size(); ++a)
        for (std::size_t b = 0; b < placements.size(); ++b) {
            if (a == b) continue;
            GroupElement q = spec.multiply(placements[a].second, spec.invert(placements[b].second));
            if (fam.margin.contains(q)) return false;
        }
    if (brute) {
        // the defining property, exhaustively on the window
        FiniteSubset uni(spec, {});
        for (const auto& [i, c] : placements) uni = set_union(uni, translate(fam.sets[i], c));
        ElemSet uni_set = to_hash_set(uni);
        for (std::size_t i0 = 0; i0 < fam.sets.size(); ++i0) {
            FiniteSubset candidates = product_set(inverse_set(fam.sets[i0]), uni);
            for (const auto& g : candidates) {
                bool inside = true;
                for (const auto& b : fam.sets[i0])
                    if (!uni_set.count(spec.multiply(b, g))) {
                        inside = false;
                        break;
                    }
                if (!inside) continue;
                bool placed = false;
                for (const auto& [i, c] : placements)
                    if (i == static_cast<int>(i0) && c == g) {
                        placed = true;
                        break;
                    }
                if (!placed) return false;
            }
        }
    }
    return true;
}

// ---- codebook ---------------------------------------------------------------

std::vector<int> ShapeCodebook::LevelLayer::word_of(int u_idx, int key_idx, int iprime) const {
    int w = 3 * (static_cast<int>(keys.size()) * u_idx + key_idx) + (iprime + 1);
    std::vector<int> word(m, 0);
    for (int j = m - 1; j >= 1; --j) {
        word[j] = (w & 1) ? 1 : -1;
        w >>= 1;
    }
    return word;
}

bool ShapeCodebook::LevelLayer::lookup(const std::vector<int>& word, int& u_idx, int& key_idx,
                                       int& iprime) const {
    if (static_cast<int>(word.size()) != m || word[0] != 0) return false;
    int w = 0;
    for (int j = 1; j < m; ++j) {
        if (word[j] != 1 && word[j] != -1) return false;
        w = (w << 1) | (word[j] == 1 ? 1 : 0);
    }
    iprime = w % 3 - 1;
    w /= 3;
    key_idx = w % static_cast<int>(keys.size());
    w /= static_cast<int>(keys.size());
    u_idx = w;
    return u_idx < static_cast<int>(U.size());
}

const FiniteSubset& ShapeCodebook::horizon(int level) const {
    if (level <= 1) return U2;
    return layers.at(level - 2).horizon;
}

std::string ShapeCodebook::serialize() const {
    std::string out = "mode: ";
    out += (mode == SymbolMode::Three) ? "three" : "two";
    out += "\nU2:";
    for (const auto& g : U2) out += " (" + spec.format(g) + ")";
    out += "\nblocks:\n";
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        out += "  " + std::to_string(k) + ":";
        for (int v : blocks[k]) out += " " + std::to_string(v);
        out += "\n";
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& L = layers[l];
        out += "level " + std::to_string(l + 2) + ": |U|=" + std::to_string(L.U.size()) +
               " |Uhat|=" + std::to_string(L.uhat_order.size()) + " m=" + std::to_string(L.m) +
               " |horizon|=" + std::to_string(L.horizon.size()) +
               " keys=" + std::to_string(L.keys.size()) + "\n";
    }
    return out;
}

namespace {

// minimal ball radius such that every translate inside the carrier meets the
// predicate's requirement; returns the ball
FiniteSubset minimal_locator_ball(const GroupSpec& spec, const Window& W, const ElemSet& centers,
                                  std::size_t need, int start_radius) {
    for (int r = start_radius; r <= 80; ++r) {
        FiniteSubset U = ball(spec, r);
        FiniteSubset region = Window{W.carrier, U}.core();
        if (region.empty()) throw MarginError("window too small for a locator set");
        bool ok = true;
        for (const auto& g : region) {
            std::size_t found = 0;
            for (const auto& u : U) {
                if (centers.count(spec.multiply(u, g)) && ++found >= need) break;
            }
            if (found < need) {
                ok = false;
                break;
            }
        }
        if (ok) return U;
    }
    throw ResourceError("locator ball search exceeded radius 80");
}

}  // namespace

ShapeCodebook build_codebook(const std::vector<Quasitiling>& levels, const Window& W,
                             SymbolMode mode) {
    if (levels.empty()) throw UsageError("no levels");
    for (const auto& T : levels) {
        T.validate();
        for (const auto& t : T.tiles)
            if (!t.primary.has_value())
                throw UsageError("codebook needs primariness on every tile");
    }
    const GroupSpec& spec = levels[0].spec;
    ShapeCodebook book;
    book.spec = spec;
    book.mode = mode;
    book.keys1 = make_keys(levels[0]);
    book.shapes1 = levels[0].shapes;

    std::size_t nblocks = 3 * book.keys1.size();
    if (mode == SymbolMode::Three) {
        int m2 = ceil_log2(nblocks) + 1;
        book.U2 = FiniteSubset(spec, canonical_prefix(spec, m2));
        // lexicographically first distinct {-1,1} blocks over U2 \ {e}
        for (std::size_t w = 0; w < nblocks; ++w) {
            std::vector<int> blk(m2 - 1);
            for (int j = m2 - 2, v = static_cast<int>(w); j >= 0; --j, v >>= 1)
                blk[j] = (v & 1) ? 1 : -1;
            book.blocks.push_back(std::move(blk));
        }
    } else {
        std::vector<GroupElement> heads = canonical_prefix(spec, nblocks + 1);
        std::vector<FiniteSubset> As;
        for (std::size_t i = 1; i <= nblocks; ++i)
            As.push_back(FiniteSubset(spec, {spec.identity(), heads[i]}));
        RecognizableFamily fam = make_recognizable_family(spec, As);
        FiniteSubset u2 = fam.margin;
        for (const auto& B : fam.sets) u2 = set_union(u2, B);
        book.U2 = u2;
        for (const auto& B : fam.sets) {
            std::vector<int> blk;
            blk.reserve(book.U2.size());
            for (const auto& g : book.U2) blk.push_back(B.contains(g) ? 1 : 0);
            book.blocks.push_back(std::move(blk));
        }
        book.family = std::move(fam);
    }

    FiniteSubset accumulated = book.U2;
    for (std::size_t l = 1; l < levels.size(); ++l) {
        ShapeCodebook::LevelLayer layer;
        layer.keys = make_keys(levels[l]);
        layer.shapes = levels[l].shapes;
        ElemSet below = to_hash_set(levels[l - 1].centers());
        layer.U = minimal_locator_ball(spec, W, below, 1, 0);
        layer.m = ceil_log2(3 * layer.U.size() * layer.keys.size()) + 1;
        // Uhat = m pairwise disjoint shifted copies of U (each catches at
        // least one center, so every Uhat-translate holds at least m), chosen
        // greedily over canonical translations
        FiniteSubset uhat = layer.U;
        int copies = 1;
        for (int R = 2; copies < layer.m; R *= 2) {
            if (R > 1 << 20) throw ResourceError("locator copy search exploded");
            ElemSet taken = to_hash_set(uhat);
            for (const auto& t : ball(spec, R, 4'000'000)) {
                if (copies >= layer.m) break;
                FiniteSubset copy = translate(layer.U, t);
                bool disjoint = true;
                for (const auto& g : copy)
                    if (taken.count(g)) {
                        disjoint = false;
                        break;
                    }
                if (!disjoint) continue;
                for (const auto& g : copy) taken.insert(g);
                uhat = set_union(uhat, copy);
                ++copies;
            }
        }
        // enumeration: U first, then the rest in canonical order
        for (const auto& g : layer.U) layer.uhat_order.push_back(g);
        for (const auto& g : uhat)
            if (!layer.U.contains(g)) layer.uhat_order.push_back(g);
        layer.horizon = product_set(product_set(accumulated, uhat), layer.U);
        accumulated = layer.horizon;
        book.layers.push_back(std::move(layer));
    }
    return book;
}

// ---- encode -----------------------------------------------------------------

SymbolicArray encode_tiling(const std::vector<Quasitiling>& levels, const ShapeCodebook& book,
                            const Window& W, const TritChoices& choices) {
    if (levels.empty() || levels.size() != book.layers.size() + 1)
        throw UsageError("level count disagrees with the codebook");
    const GroupSpec& spec = book.spec;
    for (const auto& [c, v] : choices)
        if (v < -1 || v > 1) throw UsageError("trit choice out of range at " + spec.format(c));

    const std::size_t L = levels.size();
    std::vector<ElemMap> idx(L);  // per-level center -> index, default 1
    for (const auto& t : levels[L - 1].tiles) {
        auto it = choices.find(t.center);
        idx[L - 1][t.center] = (it == choices.end()) ? 1 : it->second;
    }

    ElemSet carrier = to_hash_set(W.carrier);
    for (std::size_t l = L; l >= 2; --l) {
        const auto& layer = book.layers[l - 2];
        ElemSet below = to_hash_set(levels[l - 2].centers());
        ElemSet claimed;  // word positions already written at level l-1
        for (const auto& t : levels[l - 1].tiles) {
            const GroupElement& c0 = t.center;
            bool safe = true;
            for (const auto& h : layer.horizon)
                if (!carrier.count(spec.multiply(h, c0))) {
                    safe = false;
                    break;
                }
            if (!safe) continue;  // boundary tile: no word, companions stay background
            int u_idx = -1;
            GroupElement c1;
            for (std::size_t u = 0; u < layer.U.size(); ++u) {
                GroupElement cand = spec.multiply(layer.U[u], c0);
                if (below.count(cand)) {
                    u_idx = static_cast<int>(u);
                    c1 = cand;
                    break;
                }
            }
            if (u_idx < 0) throw InternalError("locator set missed every center");
            int key = key_index(layer.keys, t.shape, *t.primary);
            auto it = idx[l - 1].find(c0);
            int iprime = (it == idx[l - 1].end()) ? 1 : it->second;
            std::vector<int> word = layer.word_of(u_idx, key, iprime);
            std::vector<GroupElement> cs{c1};
            for (const auto& g : layer.uhat_order) {
                if (static_cast<int>(cs.size()) >= layer.m) break;
                GroupElement cand = spec.multiply(g, c1);
                if (cand == c1 || !below.count(cand)) continue;
                cs.push_back(cand);
            }
            if (static_cast<int>(cs.size()) < layer.m)
                throw InternalError("locator set yielded too few companions");
            for (int j = 0; j < layer.m; ++j) {
                if (!claimed.insert(cs[j]).second)
                    throw UsageError("colliding index words at " + spec.format(cs[j]) +
                                     " (separation violated)");
                idx[l - 2][cs[j]] = word[j];
            }
        }
    }

    // physical marker layer
    const bool three = (book.mode == SymbolMode::Three);
    std::vector<std::string> alphabet =
        three ? std::vector<std::string>{"-1", "0", "1"} : std::vector<std::string>{"0", "1"};
    SymbolicArray z = SymbolicArray::filled(spec, W, alphabet, three ? 2 : 0);
    ElemMap owner;  // marker support cell -> tile index, to report collisions
    for (std::size_t ti = 0; ti < levels[0].tiles.size(); ++ti) {
        const Tile& t = levels[0].tiles[ti];
        bool inside = true;
        for (const auto& u : book.U2)
            if (!carrier.count(spec.multiply(u, t.center))) {
                inside = false;
                break;
            }
        if (!inside) continue;  // boundary center: marker not representable
        for (const auto& u : book.U2) {
            auto [it, fresh] = owner.emplace(spec.multiply(u, t.center), static_cast<int>(ti));
            if (!fresh)
                throw UsageError("marker supports overlap between centers " +
                                 spec.format(levels[0].tiles[it->second].center) + " and " +
                                 spec.format(t.center));
        }
        int key = key_index(book.keys1, t.shape, *t.primary);
        auto it = idx[0].find(t.center);
        int i = (it == idx[0].end()) ? 1 : it->second;
        const std::vector<int>& blk = book.blocks[3 * key + (i + 1)];
        if (three) {
            z.set(t.center, 1);  // symbol value 0
            std::size_t p = 0;
            for (const auto& u : book.U2) {
                if (u == spec.identity()) continue;
                z.set(spec.multiply(u, t.center), blk[p++] + 1);
            }
        } else {
            std::size_t p = 0;
            for (const auto& u : book.U2) z.set(spec.multiply(u, t.center), blk[p++]);
        }
    }
    return z;
}

// ---- decode -----------------------------------------------------------------

DecodeResult decode_tiling(const SymbolicArray& z, const ShapeCodebook& book) {
    const GroupSpec& spec = book.spec;
    const Window& W = z.window;
    DecodeResult res;
    const bool three = (book.mode == SymbolMode::Three);

    FiniteSubset safe1 = Window{W.carrier, book.U2}.core();
    Quasitiling base;
    base.spec = spec;
    base.shapes = book.shapes1;
    ElemMap trit1;
    for (const auto& c : safe1) {
        int found = -1;
        if (three) {
            if (z.at(c) != 1) continue;  // symbol value 0 marks a center
            std::vector<int> pat;
            for (const auto& u : book.U2) {
                if (u == spec.identity()) continue;
                pat.push_back(z.at(spec.multiply(u, c)) - 1);
            }
            for (std::size_t b = 0; b < book.blocks.size(); ++b)
                if (book.blocks[b] == pat) {
                    found = static_cast<int>(b);
                    break;
                }
            if (found < 0)
                throw DataError("unknown marker block at " + spec.format(c));
        } else {
            std::vector<int> pat;
            for (const auto& u : book.U2) pat.push_back(z.at(spec.multiply(u, c)));
            for (std::size_t b = 0; b < book.blocks.size(); ++b) {
                if (book.blocks[b] == pat) {
                    if (found >= 0)
                        throw DataError("ambiguous marker at " + spec.format(c) +
                                        " (recognizability violated)");
                    found = static_cast<int>(b);
                }
            }
            if (found < 0) continue;  // background
        }
        int key = found / 3, i = found % 3 - 1;
        base.tiles.push_back(Tile{book.keys1[key].first, c, std::nullopt,
                                  book.keys1[key].second, std::nullopt});
        trit1[c] = i;
    }
    res.levels.push_back(std::move(base));
    res.safe_core.push_back(safe1);

    ElemSet carrier = to_hash_set(W.carrier);
    ElemMap trits_below = trit1;
    for (std::size_t l = 2; l <= book.layers.size() + 1; ++l) {
        const auto& layer = book.layers[l - 2];
        const Quasitiling& below = res.levels[l - 2];
        ElemSet below_centers = to_hash_set(below.centers());
        ElemSet known = to_hash_set(res.safe_core[l - 2]);
        Quasitiling lvl;
        lvl.spec = spec;
        lvl.shapes = layer.shapes;
        ElemMap next_trits;
        ElemSet emitted;
        for (const auto& t : below.tiles) {
            auto trit_it = trits_below.find(t.center);
            if (trit_it == trits_below.end() || trit_it->second != 0) continue;
            const GroupElement& c1 = t.center;
            bool knowable = true;
            for (const auto& g : layer.uhat_order)
                if (!known.count(spec.multiply(g, c1))) {
                    knowable = false;
                    break;
                }
            if (!knowable) continue;  // companions outside the decoded region
            std::vector<GroupElement> cs{c1};
            for (const auto& g : layer.uhat_order) {
                if (static_cast<int>(cs.size()) >= layer.m) break;
                GroupElement cand = spec.multiply(g, c1);
                if (cand == c1 || !below_centers.count(cand)) continue;
                cs.push_back(cand);
            }
            if (static_cast<int>(cs.size()) < layer.m)
                throw DataError("too few companion centers near " + spec.format(c1));
            std::vector<int> word;
            for (const auto& c : cs) word.push_back(trits_below.at(c));
            int u_idx, key, iprime;
            if (!layer.lookup(word, u_idx, key, iprime))
                throw DataError("unknown index word at " + spec.format(c1));
            GroupElement c0 = spec.multiply(spec.invert(layer.U[u_idx]), c1);
            if (!emitted.insert(c0).second)
                throw DataError("duplicate decoded center at " + spec.format(c0));
            lvl.tiles.push_back(Tile{layer.keys[key].first, c0, std::nullopt,
                                     layer.keys[key].second, std::nullopt});
            next_trits[c0] = iprime;
        }
        std::sort(lvl.tiles.begin(), lvl.tiles.end(), [&spec](const Tile& a, const Tile& b) {
            return spec.canonical_less(a.center, b.center);
        });
        res.levels.push_back(std::move(lvl));
        res.safe_core.push_back(Window{W.carrier, layer.horizon}.core());
        trits_below = std::move(next_trits);
    }

    for (const auto& [c, v] : trits_below) res.trits[c] = v;
    return res;
}

// ---- marker density ---------------------------------------------------------

std::vector<std::pair<Rational, Rational>> marker_density_bound(
    const std::vector<Quasitiling>& levels, const ShapeCodebook& book, const Window& W) {
    const GroupSpec& spec = book.spec;
    std::vector<std::pair<Rational, Rational>> out;
    for (std::size_t l = 1; l <= levels.size(); ++l) {
        const FiniteSubset& U = book.horizon(static_cast<int>(l));
        FiniteSubset C = levels[l - 1].centers();
        std::vector<GroupElement> cells;
        cells.reserve(C.size() * U.size());
        for (const auto& c : C)
            for (const auto& u : U) cells.push_back(spec.multiply(u, c));
        FiniteSubset marked = set_intersection(FiniteSubset(spec, std::move(cells)), W.carrier);
        Rational measured(static_cast<long>(marked.size()), static_cast<long>(W.carrier.size()));

        // largest separating ball: V c are pairwise disjoint iff no center
        // quotient lies in V^-1 V = ball(2r)
        ElemSet diffs;
        for (const auto& c : C)
            for (const auto& c2 : C)
                if (!(c == c2)) diffs.insert(spec.multiply(c2, spec.invert(c)));
        FiniteSubset V = ball(spec, 0);
        for (int r = 1; r <= 4000; ++r) {
            bool hit = false;
            for (const auto& q : ball(spec, 2 * r))
                if (diffs.count(q)) {
                    hit = true;
                    break;
                }
            if (hit) break;
            V = ball(spec, r);
            if (V.size() >= W.carrier.size()) break;
        }
        out.emplace_back(measured,
                         Rational(static_cast<long>(U.size()), static_cast<long>(V.size())));
    }
    return out;
}

}  // namespace tilekit
