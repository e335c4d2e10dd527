#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <random>

#include "tilekit/encoding.hpp"

using namespace tilekit;

namespace {

GroupElement z(std::int64_t x) { return GroupElement({x}); }

FiniteSubset pts(const GroupSpec& g, std::initializer_list<std::int64_t> xs) {
    std::vector<GroupElement> v;
    for (auto x : xs) v.push_back(z(x));
    return FiniteSubset(g, std::move(v));
}

// periodic one-dimensional level: one length-`len` shape, centers at
// phase + k*period inside [0, limit)
Quasitiling periodic_level(const GroupSpec& g, std::int64_t len, std::int64_t period,
                           std::int64_t phase, std::int64_t limit,
                           std::function<bool(int)> primary = nullptr) {
    Quasitiling T;
    T.spec = g;
    T.shapes = {box(g, {{0, len - 1}})};
    int k = 0;
    for (std::int64_t c = phase; c < limit; c += period, ++k)
        T.tiles.push_back(Tile{0, z(c), std::nullopt, primary ? primary(k) : true, std::nullopt});
    return T;
}

int smallest_covering_radius(const GroupSpec& g, const std::vector<FiniteSubset>& sets) {
    for (int r = 0;; ++r) {
        FiniteSubset b = ball(g, r);
        bool all = true;
        for (const auto& s : sets)
            for (const auto& x : s)
                if (!b.contains(x)) {
                    all = false;
                    break;
                }
        if (all) return r;
    }
}

void check_round_trip(const std::vector<Quasitiling>& levels, const Window& W, SymbolMode mode,
                      const TritChoices& choices) {
    ShapeCodebook book = build_codebook(levels, W, mode);
    SymbolicArray zz = encode_tiling(levels, book, W, choices);
    DecodeResult dec = decode_tiling(zz, book);
    REQUIRE(dec.levels.size() == levels.size());
    for (std::size_t l = 0; l < levels.size(); ++l) {
        // decoded tiles = original tiles whose centers sit in the safe region
        std::size_t expected = 0;
        for (const auto& t : levels[l].tiles) {
            if (!dec.safe_core[l].contains(t.center)) continue;
            ++expected;
            bool found = false;
            for (const auto& d : dec.levels[l].tiles)
                if (d.center == t.center) {
                    CHECK(d.shape == t.shape);
                    CHECK(d.primary == t.primary);
                    found = true;
                }
            CHECK(found);
        }
        CHECK(dec.levels[l].tiles.size() == expected);
    }
    // top-level trits round-trip wherever decoded
    const auto& top = levels.back();
    for (const auto& t : top.tiles) {
        auto it = dec.trits.find(t.center);
        if (it == dec.trits.end()) continue;
        auto ch = choices.find(t.center);
        CHECK(it->second == (ch == choices.end() ? 1 : ch->second));
    }
}

}  // namespace

TEST_CASE("recognizable origin on Z") {
    auto g = GroupSpec::parse("zd:1");
    CHECK(make_recognizable_origin(g, pts(g, {0})) == pts(g, {0}));
    // AA^-1A = {-1,0,1,2}; first excluded in canonical order is -2
    CHECK(make_recognizable_origin(g, pts(g, {0, 1})) == pts(g, {-2, 0, 1}));
    CHECK(make_recognizable_origin(g, pts(g, {0, 2})) == pts(g, {0, 1, 2}));
    for (auto A : {pts(g, {0, 1}), pts(g, {0, 2}), pts(g, {0, 1, 5})}) {
        FiniteSubset B = make_recognizable_origin(g, A);
        int r = smallest_covering_radius(g, {B});
        CHECK(verify_recognizable(g, {B}, 2 * r));
    }
}

TEST_CASE("recognizable family construction and brute force") {
    auto g = GroupSpec::parse("zd:1");
    auto fam = make_recognizable_family(g, {pts(g, {0, 1}), pts(g, {0, 2})});
    REQUIRE(fam.sets.size() == 2);
    CHECK(verify_recognizable(g, fam.sets, 12));
    CHECK(fam.margin.contains(g.identity()));
    // each member sits inside the margin
    for (const auto& B : fam.sets)
        for (const auto& x : B) CHECK(fam.margin.contains(x));

    // a single-set family reduces to the origin construction
    auto single = make_recognizable_family(g, {pts(g, {0, 1})});
    CHECK(single.sets[0] == make_recognizable_origin(g, pts(g, {0, 1})));

    // the six-member family used by the two-symbol markers
    std::vector<FiniteSubset> as;
    for (std::int64_t h : {1, -1, 2, -2, 3, -3}) as.push_back(pts(g, {0, h}));
    auto six = make_recognizable_family(g, as);
    int r = smallest_covering_radius(g, six.sets);
    CHECK(verify_recognizable(g, six.sets, 2 * r));

    CHECK_THROWS_AS(make_recognizable_family(g, {pts(g, {0, 1}), pts(g, {0, 1, 2})}), UsageError);
    CHECK_THROWS_AS(make_recognizable_family(g, {pts(g, {1, 2})}), UsageError);
}

TEST_CASE("seeded families verify in Z and Heisenberg") {
    for (const char* name : {"zd:1", "heis3"}) {
        auto g = GroupSpec::parse(name);
        std::mt19937_64 rng(7);
        FiniteSubset pool = ball(g, 2);
        for (int it = 0; it < 8; ++it) {
            std::vector<FiniteSubset> as;
            for (int i = 0; i < 3; ++i) {
                std::vector<GroupElement> v{g.identity()};
                while (v.size() < 3) {
                    GroupElement cand = pool[rng() % pool.size()];
                    bool dup = false;
                    for (const auto& x : v) dup |= (x == cand);
                    if (!dup) v.push_back(cand);
                }
                as.push_back(FiniteSubset(g, std::move(v)));
            }
            auto fam = make_recognizable_family(g, as);
            int r = smallest_covering_radius(g, fam.sets);
            CHECK(verify_recognizable(g, fam.sets, 2 * r));
        }
    }
}

TEST_CASE("full recognizability of placements") {
    auto g = GroupSpec::parse("zd:1");
    std::vector<FiniteSubset> as;
    for (std::int64_t h : {1, -1, 2}) as.push_back(pts(g, {0, h}));
    auto fam = make_recognizable_family(g, as);

    CHECK(check_fully_recognizable(fam, {{0, z(10)}}));
    // margin-violating pair: quotient taken straight from the margin
    GroupElement q;
    for (const auto& x : fam.margin)
        if (!(x == g.identity())) {
            q = x;
            break;
        }
    CHECK(!check_fully_recognizable(fam, {{0, z(0)}, {0, q}}));
    // far-apart placements pass, including the brute-force property check
    Window W{box(g, {{-100, 400}}), singleton(g, g.identity())};
    std::vector<std::pair<int, GroupElement>> far{{0, z(0)}, {1, z(100)}, {2, z(200)}, {0, z(300)}};
    CHECK(check_fully_recognizable(fam, far, &W));
}

TEST_CASE("three-symbol codebook layout") {
    auto g = GroupSpec::parse("zd:1");
    auto levels = std::vector<Quasitiling>{periodic_level(g, 5, 5, 0, 100)};
    Window W{box(g, {{0, 99}}), box(g, {{0, 4}})};
    ShapeCodebook book = build_codebook(levels, W, SymbolMode::Three);
    CHECK(book.keys1.size() == 2);
    // 6 blocks need ceil(log2 6)+1 = 4 marker cells
    CHECK(book.U2 == pts(g, {-1, 0, 1, 2}));
    REQUIRE(book.blocks.size() == 6);
    for (std::size_t a = 0; a < book.blocks.size(); ++a) {
        CHECK(book.blocks[a].size() == 3);
        for (std::size_t b = a + 1; b < book.blocks.size(); ++b)
            CHECK(book.blocks[a] != book.blocks[b]);
    }
    CHECK(!book.serialize().empty());
}

TEST_CASE("word table round-trips and has one leading zero") {
    auto g = GroupSpec::parse("zd:1");
    std::vector<Quasitiling> levels{periodic_level(g, 5, 5, 0, 1000),
                                    periodic_level(g, 5, 125, 0, 1000)};
    Window W{box(g, {{0, 999}}), box(g, {{0, 4}})};
    ShapeCodebook book = build_codebook(levels, W, SymbolMode::Three);
    REQUIRE(book.layers.size() == 1);
    const auto& L = book.layers[0];
    CHECK(L.m == static_cast<int>(std::ceil(std::log2(3.0 * L.U.size() * L.keys.size()))) + 1);
    for (int u = 0; u < static_cast<int>(L.U.size()); ++u)
        for (int k = 0; k < static_cast<int>(L.keys.size()); ++k)
            for (int i = -1; i <= 1; ++i) {
                auto w = L.word_of(u, k, i);
                REQUIRE(static_cast<int>(w.size()) == L.m);
                CHECK(w[0] == 0);
                for (int j = 1; j < L.m; ++j) CHECK(w[j] != 0);
                int u2, k2, i2;
                REQUIRE(L.lookup(w, u2, k2, i2));
                CHECK(u2 == u);
                CHECK(k2 == k);
                CHECK(i2 == i);
            }
}

TEST_CASE("one-level three-symbol round trip") {
    auto g = GroupSpec::parse("zd:1");
    std::mt19937_64 rng(3);
    auto levels = std::vector<Quasitiling>{
        periodic_level(g, 5, 5, 2, 100, [&](int k) { return k % 3 != 0; })};
    Window W{box(g, {{0, 99}}), box(g, {{0, 4}})};
    TritChoices choices;
    for (const auto& t : levels[0].tiles) choices[t.center] = static_cast<int>(rng() % 3) - 1;
    check_round_trip(levels, W, SymbolMode::Three, choices);
}

TEST_CASE("two-level three-symbol round trip") {
    auto g = GroupSpec::parse("zd:1");
    std::mt19937_64 rng(11);
    std::vector<Quasitiling> levels{
        periodic_level(g, 5, 5, 0, 1000, [](int k) { return k % 2 == 0; }),
        periodic_level(g, 25, 125, 0, 1000, [](int k) { return k == 0; })};
    Window W{box(g, {{0, 999}}), box(g, {{0, 24}})};
    TritChoices choices;
    for (const auto& t : levels[1].tiles) choices[t.center] = static_cast<int>(rng() % 3) - 1;
    check_round_trip(levels, W, SymbolMode::Three, choices);

    // the coarse tile at 0 is horizon-unsafe, the other seven decode
    ShapeCodebook book = build_codebook(levels, W, SymbolMode::Three);
    auto dec = decode_tiling(encode_tiling(levels, book, W, choices), book);
    CHECK(dec.levels[1].tiles.size() == 7);
}

TEST_CASE("two-level two-symbol round trip") {
    auto g = GroupSpec::parse("zd:1");
    std::mt19937_64 rng(5);
    std::vector<Quasitiling> levels{
        periodic_level(g, 5, 60, 0, 7000, [](int k) { return k % 2 == 0; }),
        periodic_level(g, 25, 2000, 1000, 7000, [](int k) { return k == 1; })};
    Window W{box(g, {{0, 6999}}), box(g, {{0, 24}})};
    TritChoices choices;
    for (const auto& t : levels[1].tiles) choices[t.center] = static_cast<int>(rng() % 3) - 1;
    check_round_trip(levels, W, SymbolMode::Two, choices);
}

TEST_CASE("marker density stays under the separation bound") {
    auto g = GroupSpec::parse("zd:1");
    std::vector<Quasitiling> levels{periodic_level(g, 5, 5, 0, 1000),
                                    periodic_level(g, 25, 125, 0, 1000)};
    Window W{box(g, {{0, 999}}), box(g, {{0, 24}})};
    ShapeCodebook book = build_codebook(levels, W, SymbolMode::Three);
    auto dens = marker_density_bound(levels, book, W);
    REQUIRE(dens.size() == 2);
    for (const auto& [measured, bound] : dens) CHECK(measured <= bound);
    // coarser levels constrain a thinner fraction of the window
    CHECK(dens[1].first < dens[0].first);
    CHECK(dens[1].second == Rational(static_cast<long>(book.layers[0].horizon.size()), 125));
}

TEST_CASE("encode rejects separation violations") {
    auto g = GroupSpec::parse("zd:1");
    std::vector<Quasitiling> good{periodic_level(g, 5, 5, 0, 100)};
    Window W{box(g, {{0, 99}}), box(g, {{0, 4}})};
    ShapeCodebook book = build_codebook(good, W, SymbolMode::Three);
    // markers need 4 cells; period-2 centers overlap
    Quasitiling tight = periodic_level(g, 5, 2, 0, 100);
    CHECK_THROWS_AS(encode_tiling({tight}, book, W), UsageError);
}

TEST_CASE("corrupted arrays fail loudly or locally") {
    auto g = GroupSpec::parse("zd:1");
    std::vector<Quasitiling> levels{periodic_level(g, 5, 5, 0, 1000),
                                    periodic_level(g, 25, 125, 0, 1000)};
    Window W{box(g, {{0, 999}}), box(g, {{0, 24}})};
    ShapeCodebook book = build_codebook(levels, W, SymbolMode::Three);
    SymbolicArray clean = encode_tiling(levels, book, W);
    DecodeResult base = decode_tiling(clean, book);

    // single-cell fuzz: any change to the decode stays within one coding
    // horizon of the corrupted cell
    const FiniteSubset& hor = book.horizon(2);
    std::mt19937_64 rng(17);
    int checked = 0;
    for (int it = 0; it < 60; ++it) {
        GroupElement cell = W.carrier[rng() % W.carrier.size()];
        int old = clean.at(cell);
        int alt = (old + 1 + static_cast<int>(rng() % 2)) % 3;
        SymbolicArray fuzz = clean;
        fuzz.set(cell, alt);
        DecodeResult dec;
        try {
            dec = decode_tiling(fuzz, book);
        } catch (const DataError&) {
            ++checked;  // loud failure is acceptable
            continue;
        }
        for (std::size_t l = 0; l < 2; ++l) {
            // symmetric difference of decoded centers, as sets
            std::vector<GroupElement> before, after;
            for (const auto& t : base.levels[l].tiles) before.push_back(t.center);
            for (const auto& t : dec.levels[l].tiles) after.push_back(t.center);
            FiniteSubset diff = symmetric_difference(FiniteSubset(g, before), FiniteSubset(g, after));
            for (const auto& c : diff) {
                // c must be within horizon^-1 * horizon of the corrupted cell
                FiniteSubset reach = product_set(inverse_set(hor), hor);
                CHECK(reach.contains(g.multiply(c, g.invert(cell))));
            }
        }
        ++checked;
    }
    CHECK(checked == 60);
}
