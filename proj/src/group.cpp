#include "tilekit/group.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <sstream>
#include <unordered_set>

namespace tilekit {

namespace {

// Scalar rank used by the lexicographic tie-break: 0 < 1 < -1 < 2 < -2 < ...
bool scalar_less(std::int64_t a, std::int64_t b) {
    std::int64_t aa = std::llabs(a), ab = std::llabs(b);
    if (aa != ab) return aa < ab;
    return a > b;  // positive before negative at equal magnitude
}

std::int64_t checked_parse_i64(std::string_view s) {
    std::int64_t out = 0;
    auto first = s.data();
    auto last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last)
        throw ConfigError("bad integer literal: '" + std::string(s) + "'");
    return out;
}

}  // namespace

GroupSpec GroupSpec::parse(std::string_view d) {
    GroupSpec s;
    if (d == "heis3") {
        s.family = Family::Heisenberg3;
        s.dim = 3;
        return s;
    }
    if (d == "lamplighter") {
        s.family = Family::Lamplighter;
        s.dim = 0;
        return s;
    }
    if (d.rfind("zd:", 0) == 0) {
        s.family = Family::FreeAbelian;
        s.dim = static_cast<int>(checked_parse_i64(d.substr(3)));
        if (s.dim < 1 || s.dim > 8) throw ConfigError("free-abelian rank out of range: " + std::string(d));
        return s;
    }
    throw ConfigError("unknown group descriptor: '" + std::string(d) + "'");
}

std::string GroupSpec::descriptor() const {
    switch (family) {
        case Family::FreeAbelian: return "zd:" + std::to_string(dim);
        case Family::Heisenberg3: return "heis3";
        case Family::Lamplighter: return "lamplighter";
    }
    throw InternalError("bad family");
}

GroupElement GroupSpec::identity() const {
    switch (family) {
        case Family::FreeAbelian: return GroupElement(std::vector<std::int64_t>(dim, 0));
        case Family::Heisenberg3: return GroupElement({0, 0, 0});
        case Family::Lamplighter: return GroupElement({0});
    }
    throw InternalError("bad family");
}

bool GroupSpec::is_identity(const GroupElement& g) const { return g == identity(); }

std::vector<GroupElement> GroupSpec::generators() const {
    std::vector<GroupElement> out;
    switch (family) {
        case Family::FreeAbelian:
            for (int i = 0; i < dim; ++i) {
                std::vector<std::int64_t> v(dim, 0);
                v[i] = 1;
                out.emplace_back(v);
                v[i] = -1;
                out.emplace_back(v);
            }
            break;
        case Family::Heisenberg3:
            out.emplace_back(std::vector<std::int64_t>{1, 0, 0});
            out.emplace_back(std::vector<std::int64_t>{-1, 0, 0});
            out.emplace_back(std::vector<std::int64_t>{0, 1, 0});
            out.emplace_back(std::vector<std::int64_t>{0, -1, 0});
            break;
        case Family::Lamplighter:
            out.emplace_back(std::vector<std::int64_t>{1});       // cursor +1
            out.emplace_back(std::vector<std::int64_t>{-1});      // cursor -1
            out.emplace_back(std::vector<std::int64_t>{0, 0});    // toggle lamp at cursor
            break;
    }
    std::sort(out.begin(), out.end(),
              [this](const GroupElement& a, const GroupElement& b) { return canonical_less(a, b); });
    return out;
}

void GroupSpec::validate(const GroupElement& g) const {
    switch (family) {
        case Family::FreeAbelian:
            if (static_cast<int>(g.v.size()) != dim)
                throw UsageError("element arity mismatch for " + descriptor());
            return;
        case Family::Heisenberg3:
            if (g.v.size() != 3) throw UsageError("heis3 element needs 3 coordinates");
            return;
        case Family::Lamplighter:
            if (g.v.empty()) throw UsageError("lamplighter element needs a cursor");
            for (std::size_t i = 2; i < g.v.size(); ++i)
                if (g.v[i - 1] >= g.v[i]) throw UsageError("lamplighter lamp list must be strictly increasing");
            return;
    }
}

GroupElement GroupSpec::multiply(const GroupElement& a, const GroupElement& b) const {
    switch (family) {
        case Family::FreeAbelian: {
            std::vector<std::int64_t> v(dim);
            for (int i = 0; i < dim; ++i) v[i] = a.v[i] + b.v[i];
            return GroupElement(std::move(v));
        }
        case Family::Heisenberg3:
            return GroupElement({a.v[0] + b.v[0], a.v[1] + b.v[1], a.v[2] + b.v[2] + a.v[0] * b.v[1]});
        case Family::Lamplighter: {
            // (S, t)(S', t') = (S xor (t + S'), t + t')
            std::vector<std::int64_t> lamps(a.v.begin() + 1, a.v.end());
            std::vector<std::int64_t> shifted;
            shifted.reserve(b.v.size() - 1);
            for (std::size_t i = 1; i < b.v.size(); ++i) shifted.push_back(b.v[i] + a.v[0]);
            std::vector<std::int64_t> sym;
            std::set_symmetric_difference(lamps.begin(), lamps.end(), shifted.begin(), shifted.end(),
                                          std::back_inserter(sym));
            std::vector<std::int64_t> v;
            v.reserve(sym.size() + 1);
            v.push_back(a.v[0] + b.v[0]);
            v.insert(v.end(), sym.begin(), sym.end());
            return GroupElement(std::move(v));
        }
    }
    throw InternalError("bad family");
}

GroupElement GroupSpec::invert(const GroupElement& a) const {
    switch (family) {
        case Family::FreeAbelian: {
            std::vector<std::int64_t> v(dim);
            for (int i = 0; i < dim; ++i) v[i] = -a.v[i];
            return GroupElement(std::move(v));
        }
        case Family::Heisenberg3:
            return GroupElement({-a.v[0], -a.v[1], -a.v[2] + a.v[0] * a.v[1]});
        case Family::Lamplighter: {
            std::vector<std::int64_t> v;
            v.reserve(a.v.size());
            v.push_back(-a.v[0]);
            for (std::size_t i = 1; i < a.v.size(); ++i) v.push_back(a.v[i] - a.v[0]);
            std::sort(v.begin() + 1, v.end());
            return GroupElement(std::move(v));
        }
    }
    throw InternalError("bad family");
}

std::int64_t GroupSpec::norm(const GroupElement& g) const {
    switch (family) {
        case Family::FreeAbelian: {
            std::int64_t n = 0;
            for (auto c : g.v) n += std::llabs(c);
            return n;
        }
        case Family::Heisenberg3:
            // Surrogate length: exact word length on the Heisenberg group is
            // awkward to evaluate; any fixed proper weight keeps the order
            // total and run-stable, which is all the toolkit relies on.
            return std::llabs(g.v[0]) + std::llabs(g.v[1]) + std::llabs(g.v[2]);
        case Family::Lamplighter: {
            std::int64_t n = std::llabs(g.v[0]);
            for (std::size_t i = 1; i < g.v.size(); ++i) n += std::llabs(g.v[i]) + 1;
            return n;
        }
    }
    throw InternalError("bad family");
}

bool GroupSpec::canonical_less(const GroupElement& a, const GroupElement& b) const {
    std::int64_t na = norm(a), nb = norm(b);
    if (na != nb) return na < nb;
    if (a.v.size() != b.v.size()) return a.v.size() < b.v.size();
    for (std::size_t i = 0; i < a.v.size(); ++i)
        if (a.v[i] != b.v[i]) return scalar_less(a.v[i], b.v[i]);
    return false;
}

std::string GroupSpec::format(const GroupElement& g) const {
    std::string out;
    for (std::size_t i = 0; i < g.v.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(g.v[i]);
    }
    return out;
}

GroupElement GroupSpec::parse_element(std::string_view text) const {
    std::vector<std::int64_t> v;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && text[pos] == ' ') ++pos;
        std::size_t end = pos;
        while (end < text.size() && text[end] != ' ') ++end;
        if (end > pos) v.push_back(checked_parse_i64(text.substr(pos, end - pos)));
        pos = end;
    }
    GroupElement g(std::move(v));
    validate(g);
    return g;
}

// ---- FiniteSubset ----------------------------------------------------------

FiniteSubset::FiniteSubset(GroupSpec spec, std::vector<GroupElement> elems)
    : spec_(spec), elems_(std::move(elems)) {
    for (const auto& g : elems_) spec_.validate(g);
    std::sort(elems_.begin(), elems_.end(),
              [this](const GroupElement& a, const GroupElement& b) { return spec_.canonical_less(a, b); });
    elems_.erase(std::unique(elems_.begin(), elems_.end()), elems_.end());
}

bool FiniteSubset::contains(const GroupElement& g) const {
    auto it = std::lower_bound(elems_.begin(), elems_.end(), g,
                               [this](const GroupElement& a, const GroupElement& b) {
                                   return spec_.canonical_less(a, b);
                               });
    return it != elems_.end() && *it == g;
}

bool FiniteSubset::set_less(const FiniteSubset& o) const {
    if (elems_.size() != o.elems_.size()) return elems_.size() < o.elems_.size();
    for (std::size_t i = 0; i < elems_.size(); ++i) {
        if (elems_[i] != o.elems_[i]) return spec_.canonical_less(elems_[i], o.elems_[i]);
    }
    return false;
}

std::string FiniteSubset::serialize() const {
    std::string out;
    for (const auto& g : elems_) {
        out += spec_.format(g);
        out += '\n';
    }
    return out;
}

FiniteSubset FiniteSubset::deserialize(const GroupSpec& spec, std::string_view text) {
    std::vector<GroupElement> elems;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        if (!line.empty()) elems.push_back(spec.parse_element(line));
        pos = nl + 1;
    }
    return FiniteSubset(spec, std::move(elems));
}

// ---- set operations --------------------------------------------------------

namespace {
void check_same_spec(const FiniteSubset& a, const FiniteSubset& b) {
    if (!a.empty() && !b.empty() && !(a.spec() == b.spec()))
        throw UsageError("set operation across different groups");
}
const GroupSpec& pick_spec(const FiniteSubset& a, const FiniteSubset& b) {
    return a.empty() ? b.spec() : a.spec();
}
}  // namespace

FiniteSubset set_union(const FiniteSubset& a, const FiniteSubset& b) {
    check_same_spec(a, b);
    std::vector<GroupElement> v(a.begin(), a.end());
    v.insert(v.end(), b.begin(), b.end());
    return FiniteSubset(pick_spec(a, b), std::move(v));
}

FiniteSubset set_intersection(const FiniteSubset& a, const FiniteSubset& b) {
    check_same_spec(a, b);
    std::vector<GroupElement> v;
    for (const auto& g : a)
        if (b.contains(g)) v.push_back(g);
    return FiniteSubset(pick_spec(a, b), std::move(v));
}

FiniteSubset set_difference(const FiniteSubset& a, const FiniteSubset& b) {
    check_same_spec(a, b);
    std::vector<GroupElement> v;
    for (const auto& g : a)
        if (!b.contains(g)) v.push_back(g);
    return FiniteSubset(pick_spec(a, b), std::move(v));
}

FiniteSubset symmetric_difference(const FiniteSubset& a, const FiniteSubset& b) {
    return set_union(set_difference(a, b), set_difference(b, a));
}

FiniteSubset product_set(const FiniteSubset& K, const FiniteSubset& F) {
    check_same_spec(K, F);
    const GroupSpec& spec = pick_spec(K, F);
    std::vector<GroupElement> v;
    v.reserve(K.size() * F.size());
    for (const auto& k : K)
        for (const auto& f : F) v.push_back(spec.multiply(k, f));
    return FiniteSubset(spec, std::move(v));
}

FiniteSubset translate(const FiniteSubset& F, const GroupElement& g) {
    std::vector<GroupElement> v;
    v.reserve(F.size());
    for (const auto& f : F) v.push_back(F.spec().multiply(f, g));
    return FiniteSubset(F.spec(), std::move(v));
}

FiniteSubset translate_left(const GroupElement& g, const FiniteSubset& F) {
    std::vector<GroupElement> v;
    v.reserve(F.size());
    for (const auto& f : F) v.push_back(F.spec().multiply(g, f));
    return FiniteSubset(F.spec(), std::move(v));
}

FiniteSubset inverse_set(const FiniteSubset& F) {
    std::vector<GroupElement> v;
    v.reserve(F.size());
    for (const auto& f : F) v.push_back(F.spec().invert(f));
    return FiniteSubset(F.spec(), std::move(v));
}

FiniteSubset singleton(const GroupSpec& spec, const GroupElement& g) {
    return FiniteSubset(spec, {g});
}

FiniteSubset k_core(const FiniteSubset& F, const FiniteSubset& K) {
    check_same_spec(F, K);
    const GroupSpec& spec = pick_spec(F, K);
    std::vector<GroupElement> v;
    for (const auto& f : F) {
        bool inside = true;
        for (const auto& k : K) {
            if (!F.contains(spec.multiply(k, f))) {
                inside = false;
                break;
            }
        }
        if (inside) v.push_back(f);
    }
    return FiniteSubset(spec, std::move(v));
}

Rational invariance_defect(const FiniteSubset& F, const FiniteSubset& K) {
    if (F.empty()) throw MarginError("invariance defect of the empty set is undefined");
    FiniteSubset KF = product_set(K, F);
    FiniteSubset sym = symmetric_difference(KF, F);
    return Rational(static_cast<long>(sym.size()), static_cast<long>(F.size()));
}

bool is_invariant(const FiniteSubset& F, const FiniteSubset& K, const Rational& eps) {
    return invariance_defect(F, K) < eps;
}

FiniteSubset ball(const GroupSpec& spec, int n, std::size_t element_budget) {
    if (n < 0) throw UsageError("negative ball radius");
    std::vector<GroupElement> gens = spec.generators();
    std::unordered_set<GroupElement, GroupElementHash> seen;
    std::vector<GroupElement> frontier{spec.identity()};
    seen.insert(spec.identity());
    for (int step = 0; step < n; ++step) {
        std::vector<GroupElement> next;
        for (const auto& g : frontier) {
            for (const auto& s : gens) {
                GroupElement h = spec.multiply(s, g);
                if (seen.insert(h).second) {
                    next.push_back(h);
                    if (seen.size() > element_budget)
                        throw ResourceError("ball(" + std::to_string(n) + ") exceeds element budget at radius " +
                                            std::to_string(step + 1));
                }
            }
        }
        frontier = std::move(next);
    }
    return FiniteSubset(spec, std::vector<GroupElement>(seen.begin(), seen.end()));
}

FiniteSubset box(const GroupSpec& spec,
                 const std::vector<std::pair<std::int64_t, std::int64_t>>& ranges) {
    if (spec.family != Family::FreeAbelian) throw UsageError("box shapes need a free-abelian group");
    if (static_cast<int>(ranges.size()) != spec.dim) throw UsageError("box arity mismatch");
    std::size_t total = 1;
    for (auto [lo, hi] : ranges) {
        if (lo > hi) throw UsageError("empty box range");
        total *= static_cast<std::size_t>(hi - lo + 1);
        if (total > 50'000'000) throw ResourceError("box too large");
    }
    std::vector<GroupElement> elems;
    elems.reserve(total);
    std::vector<std::int64_t> cur(spec.dim);
    std::function<void(int)> rec = [&](int i) {
        if (i == spec.dim) {
            elems.emplace_back(cur);
            return;
        }
        for (std::int64_t c = ranges[i].first; c <= ranges[i].second; ++c) {
            cur[i] = c;
            rec(i + 1);
        }
    };
    rec(0);
    return FiniteSubset(spec, std::move(elems));
}

std::optional<std::vector<std::pair<std::int64_t, std::int64_t>>> as_box(const FiniteSubset& F) {
    if (F.empty() || F.spec().family != Family::FreeAbelian) return std::nullopt;
    int d = F.spec().dim;
    std::vector<std::pair<std::int64_t, std::int64_t>> r(d, {INT64_MAX, INT64_MIN});
    for (const auto& g : F)
        for (int i = 0; i < d; ++i) {
            r[i].first = std::min(r[i].first, g.v[i]);
            r[i].second = std::max(r[i].second, g.v[i]);
        }
    std::size_t total = 1;
    for (auto [lo, hi] : r) total *= static_cast<std::size_t>(hi - lo + 1);
    if (total != F.size()) return std::nullopt;
    return r;
}

}  // namespace tilekit
