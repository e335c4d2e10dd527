#include "tilekit/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <queue>
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

// ---- PartialBijection -------------------------------------------------------

const GroupElement& PartialBijection::image(const GroupElement& a) const {
    auto it = fwd_.find(a);
    if (it == fwd_.end()) throw UsageError("image of an unmatched point");
    return it->second;
}

const GroupElement& PartialBijection::preimage(const GroupElement& b) const {
    auto it = rev_.find(b);
    if (it == rev_.end()) throw UsageError("preimage of an unreached point");
    return it->second;
}

void PartialBijection::bind(const GroupElement& a, const GroupElement& b) {
    auto rit = rev_.find(b);
    if (rit != rev_.end() && !(rit->second == a))
        throw InternalError("bind would break injectivity");
    auto fit = fwd_.find(a);
    if (fit != fwd_.end()) rev_.erase(fit->second);
    fwd_[a] = b;
    rev_[b] = a;
}

FiniteSubset PartialBijection::domain() const {
    std::vector<GroupElement> v;
    v.reserve(fwd_.size());
    for (const auto& [a, b] : fwd_) v.push_back(a);
    return FiniteSubset(spec_, std::move(v));
}

FiniteSubset PartialBijection::range() const {
    std::vector<GroupElement> v;
    v.reserve(rev_.size());
    for (const auto& [b, a] : rev_) v.push_back(b);
    return FiniteSubset(spec_, std::move(v));
}

GroupElement PartialBijection::multiplier(const GroupElement& a) const {
    return spec_.multiply(image(a), spec_.invert(a));
}

// ---- instance ---------------------------------------------------------------

FiniteSubset ComparisonInstance::effective_E() const {
    if (multipliers) return *multipliers;
    FiniteSubset E = singleton(spec, spec.identity());
    for (const auto& S : tiling.shapes) E = set_union(E, product_set(S, inverse_set(S)));
    return E;
}

void ComparisonInstance::validate() const {
    if (!set_intersection(A, B).empty()) throw UsageError("A and B must be disjoint");
    if (set_difference(A, W.carrier).size() || set_difference(B, W.carrier).size())
        throw UsageError("A and B must live inside the carrier");
    tiling.validate();
}

bool ComparisonInstance::advantage_holds(std::string* diagnostic) const {
    FiniteSubset core = W.core();
    for (const auto& t : tiling.tiles) {
        FiniteSubset cells = tiling.tile_cells(t);
        if (set_difference(cells, core).size()) continue;  // boundary tile
        auto nb = static_cast<std::int64_t>(set_intersection(B, cells).size());
        auto na = static_cast<std::int64_t>(set_intersection(A, cells).size());
        if (Rational(nb - na) <= eps * Rational(static_cast<long>(cells.size()))) {
            if (diagnostic)
                *diagnostic = "tile at " + spec.format(t.center) + " has advantage " +
                              std::to_string(nb - na) + "/" + std::to_string(cells.size());
            return false;
        }
    }
    return true;
}

// ---- chain names ------------------------------------------------------------

bool name_less(const std::vector<int>& x, const std::vector<int>& y) {
    if (x.size() != y.size()) return x.size() < y.size();
    return x < y;
}

// ---- greedy first stage -----------------------------------------------------

PartialBijection greedy_initial(const ComparisonInstance& inst) {
    inst.validate();
    PartialBijection phi(inst.spec);
    FiniteSubset E = inst.effective_E();
    ElemSet bset = to_hash_set(inst.B);
    for (const auto& g : E) {
        for (const auto& a : inst.A) {
            if (phi.defined(a)) continue;
            GroupElement b = inst.spec.multiply(g, a);
            if (bset.count(b) && !phi.hits(b)) phi.bind(a, b);
        }
    }
    return phi;
}

// ---- chain search -----------------------------------------------------------

namespace {

struct SearchState {
    std::vector<int> name;
    GroupElement b;
    GroupElement from;  // the a-point this move started at
};

struct StateOrder {
    bool operator()(const SearchState& x, const SearchState& y) const {
        return name_less(y.name, x.name);  // min-heap by name
    }
};

// rebuild the chain ending at b_n, walking phi backwards to a1
CorrectionChain rebuild(const GroupSpec& spec, const PartialBijection& phi, const FiniteSubset& E,
                        const GroupElement& a1, const GroupElement& bn,
                        const std::unordered_map<GroupElement, GroupElement, GroupElementHash>& came_from) {
    std::vector<GroupElement> as, bs;
    GroupElement b = bn;
    while (true) {
        GroupElement a = came_from.at(b);
        as.push_back(a);
        bs.push_back(b);
        if (a == a1) break;
        b = phi.image(a);
    }
    std::reverse(as.begin(), as.end());
    std::reverse(bs.begin(), bs.end());
    CorrectionChain c;
    c.a = as;
    c.b = bs;
    auto index_of = [&](const GroupElement& m) {
        for (std::size_t i = 0; i < E.size(); ++i)
            if (E[i] == m) return static_cast<int>(i);
        throw InternalError("multiplier escaped E");
    };
    for (std::size_t i = 0; i < as.size(); ++i) {
        c.name.push_back(index_of(spec.multiply(bs[i], spec.invert(as[i]))));
        if (i + 1 < as.size())
            c.name.push_back(index_of(spec.multiply(bs[i], spec.invert(as[i + 1]))));
    }
    return c;
}

}  // namespace

FindChainResult find_chain(const PartialBijection& phi, const GroupElement& a1,
                           const ComparisonInstance& inst, int N) {
    if (phi.defined(a1)) throw UsageError("find_chain needs an unmatched start");
    const GroupSpec& spec = inst.spec;
    FiniteSubset E = inst.effective_E();
    ElemSet bset = to_hash_set(inst.B);
    ElemSet carrier = to_hash_set(inst.W.carrier);

    FindChainResult res;
    std::priority_queue<SearchState, std::vector<SearchState>, StateOrder> queue;
    std::unordered_map<GroupElement, GroupElement, GroupElementHash> came_from;
    ElemSet done;
    ElemSet reached_a{a1};
    bool truncated = false;

    auto push_moves = [&](const GroupElement& a, std::vector<int> name) {
        for (std::size_t p = 0; p < E.size(); ++p) {
            GroupElement b = spec.multiply(E[p], a);
            if (!bset.count(b) || done.count(b)) continue;
            SearchState st;
            st.name = name;
            st.name.push_back(static_cast<int>(p));
            st.b = b;
            st.from = a;
            queue.push(std::move(st));
        }
    };
    push_moves(a1, {});

    while (!queue.empty()) {
        SearchState st = queue.top();
        queue.pop();
        if (done.count(st.b)) continue;
        done.insert(st.b);
        came_from.emplace(st.b, st.from);
        ++res.explored;
        if (!phi.hits(st.b)) {
            res.chain = rebuild(spec, phi, E, a1, st.b, came_from);
            return res;
        }
        GroupElement a2 = phi.preimage(st.b);
        if (reached_a.count(a2)) continue;
        reached_a.insert(a2);
        if (static_cast<int>(st.name.size()) + 2 > 2 * N - 1) {
            truncated = true;
            continue;
        }
        // forced backward step through phi: append q = idx(b * a2^-1)
        GroupElement q = spec.multiply(st.b, spec.invert(a2));
        int qi = -1;
        for (std::size_t i = 0; i < E.size(); ++i)
            if (E[i] == q) {
                qi = static_cast<int>(i);
                break;
            }
        if (qi < 0) throw InternalError("matched multiplier escaped E");
        auto name = st.name;
        name.push_back(qi);
        push_moves(a2, std::move(name));
    }
    res.exhausted = !truncated;
    // exhaustion is only meaningful when the reachable region never touches
    // the carrier boundary (outside cells could hide usable B points)
    res.margin_ok = res.exhausted;
    for (const auto& a : reached_a) {
        for (const auto& g : E)
            if (!carrier.count(spec.multiply(g, a))) {
                res.margin_ok = false;
                break;
            }
        if (!res.margin_ok) break;
    }
    return res;
}

// ---- chain_bound ------------------------------------------------------------

ChainBoundReport chain_bound_N(const GroupSpec& spec, const FiniteSubset& E, const Rational& eps,
                               int cap, std::size_t budget) {
    if (E.empty() || !E.contains(spec.identity()))
        throw UsageError("multiplier set must contain the identity");
    if (eps <= 0) throw UsageError("eps must be positive");
    ChainBoundReport rep;
    const Rational growth = Rational(1) + eps;

    std::vector<BigInt> sizes;  // sizes[n-1] = |(E^2)^n|
    auto ebox = as_box(E);
    if (cap == 0) cap = ebox ? 600 : 40;
    if (ebox) {
        // (E^2)^n stays a box; sizes come from closed-form range sums
        for (int n = 1; n <= cap; ++n) {
            BigInt s = 1;
            for (auto [lo, hi] : *ebox) s *= BigInt(2) * n * (hi - lo) + 1;
            sizes.push_back(s);
        }
    } else {
        FiniteSubset E2 = product_set(E, E);
        FiniteSubset P = E2;
        sizes.push_back(BigInt(P.size()));
        for (int n = 2; n <= cap; ++n) {
            if (P.size() * E2.size() > budget * 4) break;
            P = product_set(E2, P);
            if (P.size() > budget) break;
            sizes.push_back(BigInt(P.size()));
        }
    }
    rep.explored = static_cast<int>(sizes.size());
    rep.sizes = sizes;
    if (rep.explored < 2) throw ResourceError("chain bound: growth range too small to classify");

    // incremental integer powers of growth = p/q; recomputing exact rational
    // powers per comparison dominates the runtime otherwise
    const BigInt gp = numerator(growth), gq = denominator(growth);
    std::vector<BigInt> pn(rep.explored + 1, 1), qn(rep.explored + 1, 1);
    for (int n = 1; n <= rep.explored; ++n) {
        pn[n] = pn[n - 1] * gp;
        qn[n] = qn[n - 1] * gq;
    }
    auto cond = [&](int n) { return sizes[n - 1] * qn[n] < pn[n]; };

    // growth classification by the doubling test |P_2m| >= |P_m|^(3/2)
    int m = rep.explored / 2;
    bool exponential = false;
    if (m >= 4) {
        BigInt lhs = sizes[2 * m - 1] * sizes[2 * m - 1];
        BigInt rhs = sizes[m - 1] * sizes[m - 1] * sizes[m - 1];
        exponential = lhs >= rhs;
    }
    if (!cond(rep.explored)) {
        if (exponential)
            throw HypothesisError(
                "multiplier growth is (super)exponential: |(E^2)^n| = " + sizes.back().str() +
                " at n = " + std::to_string(rep.explored) + " outruns (1+eps)^n");
        throw ResourceError("chain bound: condition still false at the end of the explored range");
    }

    int N = rep.explored;
    while (N > 1 && cond(N - 1)) --N;
    rep.N = N;

    // submultiplicative tail certificate:
    //   |P_(q*c+r)| <= |P_c|^q |P_r| <= (1+eps)^(qc+r) whenever |P_c| * M <= (1+eps)^c,
    //   M = max_r |P_r| / (1+eps)^r  over 0 <= r < c.
    Rational M = 1;
    for (int r = 1; r < rep.explored; ++r) {
        Rational v(sizes[r - 1] * qn[r], pn[r]);
        if (v > M) M = v;
    }
    rep.tail_certified = Rational(sizes[rep.explored - 1]) * M <=
                         Rational(pn[rep.explored], qn[rep.explored]);
    if (!rep.tail_certified)
        throw ResourceError("chain bound: explored range too short to certify the tail");

    // reported polynomial envelope |P_n| <= C * n^d on the explored range
    double slope = (std::log(static_cast<double>(sizes[2 * m - 1])) -
                    std::log(static_cast<double>(sizes[m - 1]))) /
                   std::log(2.0);
    rep.poly_degree = std::max(1, static_cast<int>(std::ceil(slope - 1e-9)));
    rep.poly_C = 0;
    for (int n = 1; n <= rep.explored; ++n) {
        BigInt nd = 1;
        for (int i = 0; i < rep.poly_degree; ++i) nd *= n;
        Rational v = Rational(sizes[n - 1]) / Rational(nd);
        if (v > rep.poly_C) rep.poly_C = v;
    }
    return rep;
}

// ---- minimal chains ---------------------------------------------------------

namespace {

struct ChainEnumerator {
    const GroupSpec& spec;
    const PartialBijection& phi;
    const FiniteSubset& E;
    const ElemSet& bset;
    std::size_t max_steps;
    std::size_t budget;
    std::vector<CorrectionChain>* out;

    std::vector<GroupElement> as, bs;
    std::vector<int> name;
    ElemSet on_path;

    void run(const GroupElement& a1) {
        as = {a1};
        bs.clear();
        name.clear();
        on_path = {a1};
        extend();
        }

    void extend() {
        if (out->size() >= budget)
            throw ResourceError("correction chain enumeration budget exceeded");
        const GroupElement a = as.back();  // copy: recursion reallocates `as`
        for (std::size_t p = 0; p < E.size(); ++p) {
            GroupElement b = spec.multiply(E[p], a);
            if (!bset.count(b) || on_path.count(b)) continue;
            name.push_back(static_cast<int>(p));
            bs.push_back(b);
            if (!phi.hits(b)) {
                CorrectionChain c;
                c.a = as;
                c.b = bs;
                c.name = name;
                out->push_back(std::move(c));
            } else if (as.size() < max_steps) {
                const GroupElement& a2 = phi.preimage(b);
                if (!on_path.count(a2)) {
                    int qi = index_of(spec.multiply(b, spec.invert(a2)));
                    on_path.insert(b);
                    on_path.insert(a2);
                    name.push_back(qi);
                    as.push_back(a2);
                    extend();
                    as.pop_back();
                    name.pop_back();
                    on_path.erase(b);
                    on_path.erase(a2);
                }
            }
            bs.pop_back();
            name.pop_back();
        }
    }

    int index_of(const GroupElement& m) const {
        for (std::size_t i = 0; i < E.size(); ++i)
            if (E[i] == m) return static_cast<int>(i);
        throw InternalError("multiplier escaped E");
    }
};

}  // namespace

std::vector<CorrectionChain> minimal_chains(const PartialBijection& phi,
                                            const ComparisonInstance& inst, int N,
                                            std::size_t chain_budget) {
    const GroupSpec& spec = inst.spec;
    FiniteSubset E = inst.effective_E();
    FiniteSubset unmatched = set_difference(inst.A, phi.domain());

    // shortest chain length per start; fixes the enumeration depth
    std::size_t s_max = 0;
    for (const auto& a : unmatched) {
        auto r = find_chain(phi, a, inst, N);
        if (r.chain) s_max = std::max(s_max, r.chain->steps());
    }
    if (s_max == 0) return {};

    std::vector<CorrectionChain> all;
    ElemSet bset = to_hash_set(inst.B);
    ChainEnumerator en{spec, phi, E, bset, s_max, chain_budget, &all};
    for (const auto& a : unmatched) en.run(a);

    std::stable_sort(all.begin(), all.end(), [](const CorrectionChain& x, const CorrectionChain& y) {
        return name_less(x.name, y.name);
    });

    // smallest chain name through every point
    std::unordered_map<GroupElement, const std::vector<int>*, GroupElementHash> min_name;
    for (const auto& c : all) {
        for (const auto& x : c.a)
            if (!min_name.count(x)) min_name.emplace(x, &c.name);
        for (const auto& x : c.b)
            if (!min_name.count(x)) min_name.emplace(x, &c.name);
    }

    std::vector<CorrectionChain> minimal;
    for (const auto& c : all) {
        bool ok = true;
        for (const auto& x : c.a)
            if (name_less(*min_name.at(x), c.name)) {
                ok = false;
                break;
            }
        if (ok)
            for (const auto& x : c.b)
                if (name_less(*min_name.at(x), c.name)) {
                    ok = false;
                    break;
                }
        if (ok) minimal.push_back(c);
    }

    // minimal chains never collide (pairwise); anything else is a bug
    ElemSet touched;
    for (const auto& c : minimal) {
        for (const auto& x : c.a)
            if (!touched.insert(x).second) throw InternalError("minimal chains collide");
        for (const auto& x : c.b)
            if (!touched.insert(x).second) throw InternalError("minimal chains collide");
    }
    return minimal;
}

void correct_along(PartialBijection& phi, const CorrectionChain& chain) {
    const std::size_t n = chain.a.size();
    if (n == 0 || chain.b.size() != n) throw UsageError("malformed chain");
    ElemSet pts;
    for (const auto& x : chain.a)
        if (!pts.insert(x).second) throw UsageError("chain points must be distinct");
    for (const auto& x : chain.b)
        if (!pts.insert(x).second) throw UsageError("chain points must be distinct");
    if (phi.defined(chain.a[0])) throw UsageError("chain must start outside the domain");
    if (phi.hits(chain.b[n - 1])) throw UsageError("chain must end outside the range");
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!phi.defined(chain.a[i + 1]) || !(phi.image(chain.a[i + 1]) == chain.b[i]))
            throw UsageError("chain disagrees with the bijection");
    // rebinding backwards keeps every intermediate state injective
    for (std::size_t i = n; i-- > 0;) phi.bind(chain.a[i], chain.b[i]);
}

// ---- full pipeline ----------------------------------------------------------

std::unordered_map<GroupElement, int, GroupElementHash> exit_distance(const FiniteSubset& E,
                                                                      const Window& W, int cutoff) {
    const GroupSpec& spec = W.carrier.spec();
    ElemSet carrier = to_hash_set(W.carrier);
    std::unordered_map<GroupElement, int, GroupElementHash> dist;
    std::deque<GroupElement> queue;
    for (const auto& x : W.carrier) {
        for (const auto& g : E) {
            if (!carrier.count(spec.multiply(g, x))) {
                dist.emplace(x, 1);
                queue.push_back(x);
                break;
            }
        }
    }
    while (!queue.empty()) {
        GroupElement x = queue.front();
        queue.pop_front();
        int d = dist.at(x);
        if (d > cutoff) continue;
        for (const auto& g : E) {
            GroupElement y = spec.multiply(g, x);
            if (carrier.count(y) && !dist.count(y)) {
                dist.emplace(y, d + 1);
                queue.push_back(y);
            }
        }
    }
    return dist;
}

std::pair<PartialBijection, SolveReport> comparison_solve(const ComparisonInstance& inst) {
    inst.validate();
    SolveReport rep;
    const GroupSpec& spec = inst.spec;
    FiniteSubset E = inst.effective_E();
    ChainBoundReport nb = chain_bound_N(spec, E, inst.eps);
    rep.N = nb.N;
    std::string adv_diag;
    rep.advantage_ok = inst.advantage_holds(&adv_diag);
    if (!rep.advantage_ok) rep.diagnostic = "advantage hypothesis violated: " + adv_diag;

    PartialBijection phi = greedy_initial(inst);
    FiniteSubset targets = set_intersection(inst.A, inst.W.core());
    rep.trace.push_back("greedy: matched " + std::to_string(phi.size()) + " of " +
                        std::to_string(inst.A.size()));

    const int hard_round_cap = 10'000;  // the theoretical |E^(s(N))|+1 bound is astronomically larger
    while (true) {
        FiniteSubset free = set_difference(targets, phi.domain());
        if (free.empty()) {
            rep.success = true;
            break;
        }
        if (rep.rounds >= hard_round_cap) {
            rep.diagnostic += "; round cap reached";
            break;
        }
        std::vector<CorrectionChain> chains = minimal_chains(phi, inst, rep.N);
        if (chains.empty()) {
            // no progress possible: classify each stuck core point
            for (const auto& a : free) {
                rep.unmatched.push_back(a);
                auto r = find_chain(phi, a, inst, rep.N);
                if (r.exhausted && r.margin_ok)
                    rep.diagnostic += "; no chain from " + spec.format(a) +
                                      " (region exhausted: hypothesis violation)";
                else
                    rep.diagnostic += "; no chain from " + spec.format(a) + " (window margin too small)";
            }
            break;
        }
        std::size_t longest = 0;
        for (const auto& c : chains) {
            correct_along(phi, c);
            longest = std::max(longest, c.steps());
        }
        ++rep.rounds;
        rep.trace.push_back("round " + std::to_string(rep.rounds) + ": " +
                            std::to_string(chains.size()) + " minimal chains (longest " +
                            std::to_string(longest) + " steps), domain " +
                            std::to_string(phi.size()));
    }

    rep.horizon_words = E.size() + 4 * static_cast<std::size_t>(rep.N) *
                                        static_cast<std::size_t>(std::max(rep.rounds, 1));
    auto dist = exit_distance(E, inst.W, static_cast<int>(rep.horizon_words));
    for (const auto& a : targets) {
        if (!phi.defined(a)) continue;
        auto it = dist.find(a);
        if (it != dist.end() && it->second <= static_cast<int>(rep.horizon_words))
            rep.margin_indeterminate.push_back(a);
    }
    return {std::move(phi), std::move(rep)};
}

bool matching_oracle_saturates(const ComparisonInstance& inst) {
    inst.validate();
    const GroupSpec& spec = inst.spec;
    FiniteSubset E = inst.effective_E();
    FiniteSubset left = set_intersection(inst.A, inst.W.core());
    ElemSet bset = to_hash_set(inst.B);

    // index B points
    std::unordered_map<GroupElement, int, GroupElementHash> bidx;
    for (const auto& b : inst.B) bidx.emplace(b, static_cast<int>(bidx.size()));
    std::vector<std::vector<int>> adj(left.size());
    for (std::size_t i = 0; i < left.size(); ++i)
        for (const auto& g : E) {
            GroupElement b = spec.multiply(g, left[i]);
            auto it = bidx.find(b);
            if (it != bidx.end()) adj[i].push_back(it->second);
        }

    std::vector<int> match_b(bidx.size(), -1);
    std::vector<char> seen;
    std::function<bool(int)> augment = [&](int u) -> bool {
        for (int v : adj[u]) {
            if (seen[v]) continue;
            seen[v] = 1;
            if (match_b[v] < 0 || augment(match_b[v])) {
                match_b[v] = u;
                return true;
            }
        }
        return false;
    };
    std::size_t matched = 0;
    for (std::size_t i = 0; i < left.size(); ++i) {
        seen.assign(bidx.size(), 0);
        if (augment(static_cast<int>(i))) ++matched;
    }
    return matched == left.size();
}

BlockCodeReport verify_block_code(const std::vector<std::pair<SymbolicArray, PartialBijection>>& cases,
                                  const FiniteSubset& F) {
    BlockCodeReport rep;
    if (cases.empty()) throw UsageError("no cases");
    const GroupSpec& spec = cases[0].first.spec;

    // shared multiplier alphabet
    std::vector<GroupElement> mults;
    for (const auto& [x, phi] : cases)
        for (const auto& a : phi.domain()) mults.push_back(phi.multiplier(a));
    FiniteSubset multset(spec, std::move(mults));
    for (const auto& m : multset) rep.multiplier_names.push_back(spec.format(m));

    struct Seen {
        int mult;
        int case_idx;
        GroupElement pos;
    };
    std::map<std::vector<int>, Seen> table;
    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
        const auto& [x, phi] = cases[ci];
        for (const auto& a : phi.domain()) {
            if (!x.pattern_defined(F, a)) continue;
            std::vector<int> pat = x.pattern(F, a);
            GroupElement m = phi.multiplier(a);
            int mi = -1;
            for (std::size_t k = 0; k < multset.size(); ++k)
                if (multset[k] == m) {
                    mi = static_cast<int>(k);
                    break;
                }
            auto [it, fresh] = table.emplace(std::move(pat), Seen{mi, static_cast<int>(ci), a});
            if (!fresh && it->second.mult != mi) {
                rep.deterministic = false;
                rep.case1 = it->second.case_idx;
                rep.pos1 = it->second.pos;
                rep.case2 = static_cast<int>(ci);
                rep.pos2 = a;
                return rep;
            }
        }
    }
    rep.code.horizon = F;
    rep.code.out_alphabet = rep.multiplier_names;
    for (const auto& [pat, seen] : table) rep.code.rule.emplace(pat, seen.mult);
    return rep;
}

}  // namespace tilekit
