#include "tilekit/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

namespace tilekit {

namespace {

double xlog2x_sum(const std::vector<double>& probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log2(p);
    return h;
}

FiniteSubset shapes_union(const std::vector<FiniteSubset>& shapes) {
    if (shapes.empty()) throw UsageError("no shapes");
    FiniteSubset u = shapes[0];
    for (std::size_t i = 1; i < shapes.size(); ++i) u = set_union(u, shapes[i]);
    return u;
}

FiniteSubset through_partition(const FiniteSubset& F, const FiniteSubset* P) {
    return P ? product_set(*P, F) : F;
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

std::string rect_key(const Rectangle& r) {
    std::ostringstream os;
    os << r.level << '#' << r.shape;
    for (const auto& layer : r.layers) {
        os << '|';
        for (int v : layer) os << v << ',';
    }
    return os.str();
}

}  // namespace

double shannon_entropy(const std::vector<double>& probs) {
    double sum = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw UsageError("negative probability mass");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw UsageError("probabilities do not sum to 1");
    return xlog2x_sum(probs);
}

void EmpiricalMeasure::add(const std::vector<int>& key, std::int64_t n) {
    counts[key] += n;
    total += n;
}

std::vector<double> EmpiricalMeasure::probabilities() const {
    std::vector<double> out;
    out.reserve(counts.size());
    for (const auto& [k, c] : counts) out.push_back(static_cast<double>(c) / static_cast<double>(total));
    return out;
}

double EmpiricalMeasure::entropy() const {
    if (total == 0) return 0.0;
    return xlog2x_sum(probabilities());
}

double pattern_entropy(const SymbolicArray& x, const FiniteSubset& F, const FiniteSubset& positions) {
    EmpiricalMeasure m;
    for (const auto& g : positions) {
        if (!x.pattern_defined(F, g)) throw MarginError("pattern not defined at a requested position");
        m.add(x.pattern(F, g));
    }
    if (m.total == 0) throw MarginError("no positions to read");
    return m.entropy();
}

double pattern_entropy(const SymbolicArray& x, const FiniteSubset& F) {
    std::vector<GroupElement> pos;
    for (const auto& g : x.window.carrier)
        if (x.pattern_defined(F, g)) pos.push_back(g);
    if (pos.empty()) throw MarginError("no position admits the full pattern");
    return pattern_entropy(x, F, FiniteSubset(x.spec, std::move(pos)));
}

DynamicalEntropyReport dynamical_entropy_estimate(const SymbolicArray& x,
                                                  const std::vector<FiniteSubset>& folner_terms,
                                                  const FiniteSubset* partition_horizon) {
    if (folner_terms.empty()) throw UsageError("need at least one term");
    DynamicalEntropyReport rep;
    for (const auto& F : folner_terms) {
        const FiniteSubset G = through_partition(F, partition_horizon);
        double h = pattern_entropy(x, G) / static_cast<double>(F.size());
        rep.per_term.push_back(h);
        rep.running_min.push_back(rep.running_min.empty() ? h : std::min(rep.running_min.back(), h));
    }
    rep.estimate = rep.running_min.back();
    return rep;
}

TiledEntropyReport tiled_entropy(const SymbolicArray& x, const Quasitiling& T, const Window& W,
                                 const FiniteSubset* partition_horizon) {
    T.validate();
    FiniteSubset K = through_partition(shapes_union(T.shapes), partition_horizon);
    K = set_union(K, singleton(T.spec, T.spec.identity()));
    const FiniteSubset core = k_core(W.carrier, K);

    TiledEntropyReport rep;
    rep.core_size = static_cast<std::int64_t>(core.size());
    rep.per_shape.assign(T.shapes.size(), 0.0);
    rep.weights.assign(T.shapes.size(), Rational(0));
    if (core.empty()) throw MarginError("window core is empty for these shapes");

    std::vector<EmpiricalMeasure> per_shape(T.shapes.size());
    std::vector<FiniteSubset> horizons;
    horizons.reserve(T.shapes.size());
    for (const auto& S : T.shapes) horizons.push_back(through_partition(S, partition_horizon));

    for (const auto& t : T.tiles) {
        if (!core.contains(t.center)) continue;
        if (!x.pattern_defined(horizons[t.shape], t.center)) continue;
        per_shape[t.shape].add(x.pattern(horizons[t.shape], t.center));
    }
    for (std::size_t s = 0; s < T.shapes.size(); ++s) {
        if (per_shape[s].total == 0) {
            rep.zero_mass_shapes.push_back(static_cast<int>(s));
            continue;
        }
        rep.weights[s] = Rational(per_shape[s].total, rep.core_size);
        rep.per_shape[s] = to_double(rep.weights[s]) * per_shape[s].entropy();
        rep.value += rep.per_shape[s];
    }
    return rep;
}

double tiled_entropy_conditional(const SymbolicArray& x, const Quasitiling& T, const Window& W,
                                 const FiniteSubset& P, const FiniteSubset& Q) {
    const FiniteSubset PQ = set_union(P, Q);
    return tiled_entropy(x, T, W, &PQ).value - tiled_entropy(x, T, W, &Q).value;
}

TiledMonotonicityReport check_tiled_monotonicity(const SymbolicArray& x,
                                                 const TilingSystemWindow& system, const Window& W,
                                                 const std::vector<FiniteSubset>& folner_terms,
                                                 const FiniteSubset* partition_horizon) {
    TiledMonotonicityReport rep;
    const double log2P = static_cast<double>(partition_horizon ? partition_horizon->size() : 1) *
                         std::log2(static_cast<double>(x.alphabet.size()));
    for (const auto& level : system.levels) {
        const TiledEntropyReport t = tiled_entropy(x, level, W, partition_horizon);
        rep.per_level.push_back(t.value);
        const QuasitilingProperties props = check_properties(level, Rational(1), W);
        const Rational uncovered = Rational(1) - props.covering_alpha;
        const Rational defect(static_cast<std::int64_t>(W.carrier.size()) - t.core_size,
                              static_cast<std::int64_t>(W.carrier.size()));
        rep.tolerance.push_back(to_double(uncovered + defect) * log2P);
    }
    rep.estimate = dynamical_entropy_estimate(x, folner_terms, partition_horizon).estimate;

    rep.decreasing_ok = true;
    for (std::size_t k = 0; k + 1 < rep.per_level.size(); ++k)
        if (rep.per_level[k + 1] >
            rep.per_level[k] + rep.tolerance[k] + rep.tolerance[k + 1] + 1e-9)
            rep.decreasing_ok = false;
    rep.dominates_estimate_ok = true;
    for (std::size_t k = 0; k < rep.per_level.size(); ++k)
        if (rep.per_level[k] < rep.estimate - rep.tolerance[k] - 1e-9)
            rep.dominates_estimate_ok = false;
    return rep;
}

// ---- rectangles ------------------------------------------------------------

bool Rectangle::operator<(const Rectangle& o) const {
    return std::tie(level, shape, layers) < std::tie(o.level, o.shape, o.layers);
}
bool Rectangle::operator==(const Rectangle& o) const {
    return level == o.level && shape == o.shape && layers == o.layers;
}

std::vector<std::unordered_map<GroupElement, int, GroupElementHash>> tiling_layers(
    const TilingSystemWindow& system) {
    std::vector<std::unordered_map<GroupElement, int, GroupElementHash>> out;
    out.reserve(system.levels.size());
    for (const auto& level : system.levels) {
        std::unordered_map<GroupElement, int, GroupElementHash> layer;
        for (const auto& t : level.tiles) layer[t.center] = 1 + t.shape;
        out.push_back(std::move(layer));
    }
    return out;
}

Rectangle rectangle_at(const TilingSystemWindow& system,
                       const std::vector<std::unordered_map<GroupElement, int, GroupElementHash>>& layers,
                       int level, const Tile& t, bool extended) {
    if (level < 1 || static_cast<std::size_t>(level) > system.levels.size())
        throw UsageError("level out of range");
    const int top = extended ? level + 1 : level;
    if (static_cast<std::size_t>(top) > system.levels.size())
        throw UsageError("extended rectangle needs a coarser level");
    const FiniteSubset& S = system.levels[level - 1].shapes[t.shape];
    Rectangle r;
    r.level = level;
    r.shape = t.shape;
    for (int j = 1; j <= top; ++j) {
        std::vector<int> pat;
        pat.reserve(S.size());
        for (const auto& s : S) {
            const GroupElement g = system.spec.multiply(s, t.center);
            auto it = layers[j - 1].find(g);
            pat.push_back(it == layers[j - 1].end() ? 0 : it->second);
        }
        r.layers.push_back(std::move(pat));
    }
    return r;
}

std::map<Rectangle, std::int64_t> collect_rectangles(const TilingSystemWindow& system, int level,
                                                     bool extended, const Window& W) {
    const auto layers = tiling_layers(system);
    const Quasitiling& T = system.levels[level - 1];
    const FiniteSubset core = k_core(W.carrier, shapes_union(T.shapes));
    std::map<Rectangle, std::int64_t> out;
    for (const auto& t : T.tiles) {
        if (!core.contains(t.center)) continue;
        out[rectangle_at(system, layers, level, t, extended)] += 1;
    }
    return out;
}

EmpiricalMeasure rectangle_measure(const TilingSystemWindow& system, int level, const Tile& t,
                                   bool extended) {
    const auto layers = tiling_layers(system);
    const int top = extended ? level + 1 : level;
    if (static_cast<std::size_t>(top) > system.levels.size())
        throw UsageError("extended rectangle needs a coarser level");
    const FiniteSubset& S = system.levels[level - 1].shapes[t.shape];
    EmpiricalMeasure m;
    for (const auto& s : S) {
        const GroupElement g = system.spec.multiply(s, t.center);
        std::vector<int> column;
        column.reserve(top);
        for (int j = 1; j <= top; ++j) {
            auto it = layers[j - 1].find(g);
            column.push_back(it == layers[j - 1].end() ? 0 : it->second);
        }
        m.add(column);
    }
    return m;
}

ConditionalIdentityReport check_conditional_identity(const TilingSystemWindow& system, int level,
                                                     const Window& W, double tol) {
    if (level < 1 || static_cast<std::size_t>(level + 1) > system.levels.size())
        throw UsageError("need a level with a coarser level above it");
    const auto layers = tiling_layers(system);
    const Quasitiling& T = system.levels[level - 1];
    const FiniteSubset core = k_core(W.carrier, shapes_union(T.shapes));
    if (core.empty()) throw MarginError("empty core");

    // Path one: per shape, conditional entropy of the layer stack extended by
    // level+1 given the stack up to level, weighted by the shape's center
    // frequency.
    std::vector<EmpiricalMeasure> base_by_shape(T.shapes.size()), ext_by_shape(T.shapes.size());
    // Path two: one global table of whole rectangles.
    EmpiricalMeasure base_all, ext_all;
    std::int64_t n = 0;

    for (const auto& t : T.tiles) {
        if (!core.contains(t.center)) continue;
        const Rectangle rb = rectangle_at(system, layers, level, t, false);
        const Rectangle re = rectangle_at(system, layers, level, t, true);
        std::vector<int> kb, ke;
        for (const auto& layer : rb.layers) kb.insert(kb.end(), layer.begin(), layer.end());
        for (const auto& layer : re.layers) ke.insert(ke.end(), layer.begin(), layer.end());
        base_by_shape[t.shape].add(kb);
        ext_by_shape[t.shape].add(ke);
        // rectangles carry the shape id, so the global keys prepend it
        kb.insert(kb.begin(), rb.shape);
        ke.insert(ke.begin(), re.shape);
        base_all.add(kb);
        ext_all.add(ke);
        ++n;
    }
    if (n == 0) throw MarginError("no tile centers in the core");

    ConditionalIdentityReport rep;
    const double denom = static_cast<double>(core.size());
    for (std::size_t s = 0; s < T.shapes.size(); ++s) {
        if (base_by_shape[s].total == 0) continue;
        const double w = static_cast<double>(base_by_shape[s].total) / denom;
        rep.lhs += w * (ext_by_shape[s].entropy() - base_by_shape[s].entropy());
    }
    rep.rhs = (static_cast<double>(n) / denom) * (ext_all.entropy() - base_all.entropy());
    rep.ok = std::abs(rep.lhs - rep.rhs) <= tol;
    return rep;
}

// ---- oracles ---------------------------------------------------------------

BigInt oracle_value(std::int64_t cells, const Rational& g) {
    if (cells <= 0) throw UsageError("rectangle has no cells");
    if (g < 0) throw UsageError("negative oracle exponent");
    const Rational t = Rational(cells) * g;
    const BigInt p = numerator(t);
    const BigInt q = denominator(t);
    if (p > 4'000'000) throw ResourceError("oracle exponent too large");
    const auto pu = p.convert_to<unsigned>();
    const auto qu = q.convert_to<unsigned>();
    const BigInt target = BigInt(1) << pu;  // 2^p
    if (qu == 1) return target;
    // least v with v^q >= 2^p, i.e. v = ceil(2^(p/q))
    BigInt lo = 1, hi = BigInt(1) << ((pu + qu - 1) / qu);
    while (lo < hi) {
        const BigInt mid = (lo + hi) / 2;
        if (boost::multiprecision::pow(mid, qu) >= target)
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

Oracle build_oracle(const TilingSystemWindow& system,
                    const std::vector<std::pair<Rectangle, Rational>>& g_values) {
    Oracle O;
    for (const auto& [r, g] : g_values) {
        const auto cells =
            static_cast<std::int64_t>(system.levels[r.level - 1].shapes[r.shape].size());
        O[r] = oracle_value(cells, g);
    }
    return O;
}

OracleCheckReport check_oracle_condition(const Oracle& O, const TilingSystemWindow& system,
                                         int level, const Window& W) {
    if (level < 1 || static_cast<std::size_t>(level + 1) > system.levels.size())
        throw UsageError("need a level with a coarser level above it");
    const auto layers = tiling_layers(system);
    const Quasitiling& parent = system.levels[level];
    const Quasitiling& child = system.levels[level - 1];

    auto oracle_of = [&](const Rectangle& r) -> const BigInt& {
        auto it = O.find(r);
        if (it == O.end()) throw UsageError("oracle has no value for an observed rectangle");
        return it->second;
    };

    struct Concat {
        std::vector<Rectangle> children;
        std::map<Rectangle, bool> parents;  // distinct level-(k+1) rectangles seen
    };
    std::map<std::string, Concat> concats;

    for (std::size_t ti = 0; ti < parent.tiles.size(); ++ti) {
        const Tile& pt = parent.tiles[ti];
        const Rectangle pr = rectangle_at(system, layers, level + 1, pt, false);
        // key the child tuple by (relative position, rectangle), sorted
        std::vector<std::pair<std::string, Rectangle>> parts;
        for (int ci : system.children[level - 1][ti]) {
            const Tile& ct = child.tiles[ci];
            const GroupElement rel = system.spec.multiply(ct.center, system.spec.invert(pt.center));
            parts.emplace_back(system.spec.format(rel),
                               rectangle_at(system, layers, level, ct, false));
        }
        std::sort(parts.begin(), parts.end(), [](const auto& a, const auto& b) {
            return std::tie(a.first, a.second) < std::tie(b.first, b.second);
        });
        std::ostringstream key;
        for (const auto& [rel, r] : parts) key << rel << '@' << rect_key(r) << ';';
        Concat& c = concats[key.str()];
        if (c.children.empty())
            for (const auto& [rel, r] : parts) c.children.push_back(r);
        c.parents[pr] = true;
    }

    OracleCheckReport rep;
    rep.worst_ratio = Rational(0);
    for (const auto& [key, c] : concats) {
        BigInt sum = 0, prod = 1;
        for (const auto& [pr, seen] : c.parents) sum += oracle_of(pr);
        for (const auto& r : c.children) prod *= oracle_of(r);
        const Rational ratio(sum, prod);
        if (ratio > rep.worst_ratio) {
            rep.worst_ratio = ratio;
            if (ratio > 1) {
                rep.holds = false;
                rep.witness_children = c.children;
                rep.witness_parents.clear();
                for (const auto& [pr, seen] : c.parents) rep.witness_parents.push_back(pr);
            }
        }
    }
    return rep;
}

AlphabetAssignment min_alphabet(const std::vector<FiniteSubset>& shapes,
                                const std::vector<Rectangle>& rects, const Oracle& O,
                                std::int64_t materialize_cap) {
    std::vector<BigInt> need(shapes.size(), 0);
    for (const auto& r : rects) {
        auto it = O.find(r);
        if (it == O.end()) throw UsageError("oracle has no value for a listed rectangle");
        if (r.shape < 0 || static_cast<std::size_t>(r.shape) >= shapes.size())
            throw UsageError("rectangle shape index out of range");
        need[r.shape] += it->second;
    }

    int l = 1;
    for (;;) {
        bool ok = true;
        for (std::size_t s = 0; s < shapes.size(); ++s)
            if (boost::multiprecision::pow(BigInt(l), static_cast<unsigned>(shapes[s].size())) <
                need[s]) {
                ok = false;
                break;
            }
        if (ok) break;
        ++l;
    }

    AlphabetAssignment out;
    out.l = l;
    std::vector<Rectangle> sorted = rects;
    std::sort(sorted.begin(), sorted.end());
    std::vector<BigInt> next(shapes.size(), 0);
    for (const auto& r : sorted) {
        const BigInt count = O.at(r);
        const BigInt start = next[r.shape];
        next[r.shape] += count;
        out.ranges[r] = {start, start + count};
        if (count <= materialize_cap) {
            std::vector<std::vector<int>> fam;
            const std::size_t cells = shapes[r.shape].size();
            for (BigInt idx = start; idx < start + count; ++idx) {
                std::vector<int> digits(cells, 0);
                BigInt rem = idx;
                for (std::size_t d = cells; d-- > 0;) {
                    digits[d] = (rem % l).convert_to<int>();
                    rem /= l;
                }
                fam.push_back(std::move(digits));
            }
            out.families[r] = std::move(fam);
        }
    }
    return out;
}

}  // namespace tilekit
