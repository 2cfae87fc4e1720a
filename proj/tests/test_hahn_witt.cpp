#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "hw/hahn_witt.hpp"

using namespace hw;

namespace {

HWElem random_elem(std::mt19937_64& rng, const HWContextPtr& ctx, int terms) {
    const auto& F = ctx->residue_field();
    long top = Int(floor(ctx->N() * ctx->d())).get_si();
    std::uniform_int_distribution<long> e(0, top - 1);
    std::uniform_int_distribution<std::uint32_t> a(0, F->size() - 1);
    std::vector<std::pair<Rat, FqElem>> d;
    for (int i = 0; i < terms; ++i) d.emplace_back(frac(e(rng), ctx->d()), F->element_at(a(rng)));
    return hw_from_digits(ctx, d);
}

std::vector<LocalElem> poly(const TowerPtr& T, const std::vector<long>& c) {
    std::vector<LocalElem> out;
    for (long v : c) out.push_back(T->from_int(v));
    return out;
}

}  // namespace

TEST_CASE("normalization examples") {
    auto c2 = HWContext::mixed(2, 1, 1, 6);
    auto x = hw_normalize(c2, c2->tower()->pi_K());
    REQUIRE(x.expansion().digits.size() == 1);
    CHECK(x.expansion().digits[0].first == 1);
    CHECK(x.expansion().digits[0].second.is_one());

    auto c3 = HWContext::mixed(3, 1, 1, 5);
    auto y = hw_from_int(c3, 12);
    REQUIRE(y.expansion().digits.size() == 2);
    CHECK(y.expansion().digits[0].first == 1);
    CHECK(y.expansion().digits[1].first == 2);
    CHECK(y.str() == "[1]*pi^(1) + [1]*pi^(2) + O(pi^(5))");

    auto m1 = hw_from_int(c2, -1);
    REQUIRE(m1.expansion().digits.size() == 6);
    for (int i = 0; i < 6; ++i) CHECK(m1.expansion().digits[i].first == i);
    CHECK(hw_from_int(c2, 0).expansion().digits.empty());
}

TEST_CASE("round trip between digits and the tower mirror") {
    std::mt19937_64 rng(11);
    std::vector<HWContextPtr> ctxs = {HWContext::mixed(2, 2, 4, 3), HWContext::mixed(3, 1, 3, 2),
                                      HWContext::equal(4, 1, 2, 3), HWContext::mixed(5, 2, 2, Rat(5, 2))};
    for (int i = 0; i < 500; ++i) {
        const auto& ctx = ctxs[i % ctxs.size()];
        auto x = random_elem(rng, ctx, 5);
        auto again = hw_from_digits(ctx, x.expansion().digits);
        CHECK(again.equals(x));
        CHECK(hw_normalize(ctx, again.mirror()).expansion().digits == x.expansion().digits);
        auto v = x.valuation();
        if (v.exact) CHECK(v.value == x.expansion().digits.front().first);
        else CHECK(x.expansion().digits.empty());
    }
}

TEST_CASE("field axioms at matching caps") {
    std::mt19937_64 rng(12);
    auto ctx = HWContext::mixed(2, 2, 4, 3);
    for (int i = 0; i < 200; ++i) {
        auto a = random_elem(rng, ctx, 4), b = random_elem(rng, ctx, 4), c = random_elem(rng, ctx, 4);
        CHECK((a + b).equals(b + a));
        CHECK(((a * b) * c).equals(a * (b * c)));
        CHECK((a * (b + c)).equals(a * b + a * c));
        CHECK((a - a).is_zero());
        if (a.valuation().exact) {
            auto [u, k] = hw_inv(a);
            // a * a^{-1} = pi^{k/d} * pi^{-k/d}
            CHECK((a * u).equals(hw_pi_power(ctx, frac(k, ctx->d()))));
        }
    }
}

TEST_CASE("arithmetic examples") {
    auto ctx = HWContext::mixed(2, 1, 2, 3);
    auto h = hw_pi_power(ctx, Rat(1, 2));
    CHECK((h * h).str() == "[1]*pi^(1) + O(pi^(3))");

    // s = sqrt(2 + sqrt 2): (2 + s)(-2 + s) = sqrt2 - 2 = -sqrt2 (1 + sqrt2)^{-1}.
    auto ks = TowerSpec::mixed(2, 1).radical(2).eisenstein({{"-2 - s0", 0}, {"1", 2}});
    auto c = HWContext::make(ks, 1, 1, 4);
    auto s = HWElem(c, c->tower()->generator(1));
    auto r2 = HWElem(c, c->tower()->generator(0));
    auto two = hw_from_int(c, 2);
    auto lhs = (two + s) * (s - two);
    CHECK(lhs.equals(r2 - two));
    CHECK(lhs.equals(hw_div(-r2, hw_from_int(c, 1) + r2)));
    CHECK(hw_val(s).value == 1);
    CHECK(s.mirror().valuation_abs().value == Rat(1, 4));
}

TEST_CASE("parsing") {
    auto ctx = HWContext::mixed(2, 2, 4, 3);
    auto x = hw_parse(ctx, "[g]*pi^(1/2) + 3*pi^(3/4)");
    CHECK(x.str() == "[g]*pi^(1/2) + [1]*pi^(3/4) + [1]*pi^(7/4) + O(pi^(3))");
    CHECK_THROWS_AS(hw_parse(ctx, "pi^(1/3)"), DomainError);
    CHECK(x.to_json() == R"({"q":2,"m":2,"d":4,"prec":"3","digits":[{"exp":"1/2","coeff":"g"},{"exp":"3/4","coeff":"1"},{"exp":"7/4","coeff":"1"}]})");
}

TEST_CASE("Frobenius") {
    std::mt19937_64 rng(13);
    auto ctx = HWContext::mixed(2, 2, 2, 3);
    const auto& F = ctx->residue_field();
    auto a = F->gen();
    auto x = hw_from_digits(ctx, {{Rat(1, 2), a}});
    CHECK(hw_frobenius(x).expansion().digits[0].second == a * a);

    auto fixed = hw_from_digits(ctx, {{Rat(0), F->one()}, {Rat(3, 2), F->one()}});
    CHECK(hw_frobenius(fixed).equals(fixed));
    for (int i = 0; i < 100; ++i) {
        auto y = random_elem(rng, ctx, 5), z = random_elem(rng, ctx, 5);
        CHECK(hw_frobenius(hw_frobenius(y)).equals(y));
        CHECK(hw_frobenius(y).equals(hw_frobenius_tower(y)));
        CHECK(hw_frobenius(y * z).equals(hw_frobenius(y) * hw_frobenius(z)));
        CHECK(hw_frobenius(y + z).equals(hw_frobenius(y) + hw_frobenius(z)));
        CHECK(hw_in_subfield(y, 1) == hw_frobenius(y).equals(y));
    }

    // m = 3 over F_3: three-fold iteration is the identity; fixed points are exactly F_3-digit elements.
    auto c3 = HWContext::mixed(3, 3, 1, 2);
    for (int i = 0; i < 30; ++i) {
        auto y = random_elem(rng, c3, 3);
        CHECK(hw_frobenius(hw_frobenius(hw_frobenius(y))).equals(y));
    }
    for (const auto& b : c3->residue_field()->elements()) {
        auto y = hw_from_digits(c3, {{Rat(1), b}});
        CHECK(hw_frobenius(y).equals(y) == c3->residue_field()->in_subfield(b, 1));
    }
}

TEST_CASE("subfield membership") {
    auto ctx = HWContext::mixed(2, 2, 2, 3);
    const auto& F = ctx->residue_field();
    CHECK(hw_in_subfield(hw_pi_power(ctx, Rat(1, 2)), 1));
    CHECK_FALSE(hw_in_subfield(hw_from_digits(ctx, {{Rat(1), F->gen()}}), 1));
    CHECK(hw_in_subfield(hw_from_digits(ctx, {{Rat(1), F->gen()}}), 2));
    CHECK_THROWS_AS(hw_in_subfield(hw_pi_power(ctx, 1), 3), DomainError);
}

TEST_CASE("rescaling") {
    std::mt19937_64 rng(14);
    for (int n : {2, 3}) {
        auto src = HWContext::mixed(2, 2, 6, 2);
        auto dst = src->rescaled_target(n);
        CHECK(dst->d() == 6 / n);
        auto pi = hw_pi_power(src, 1);
        auto img = hw_rescale(pi, dst, n);
        CHECK(img.equals(HWElem(dst, dst->tower()->pi_K().pow(n))));
        for (int i = 0; i < 100; ++i) {
            auto x = random_elem(rng, src, 4), y = random_elem(rng, src, 4);
            auto rx = hw_rescale(x, dst, n), ry = hw_rescale(y, dst, n);
            CHECK(hw_rescale(x + y, dst, n).equals(rx + ry));
            CHECK(hw_rescale(x * y, dst, n).equals(rx * ry));
            CHECK(hw_rescale(hw_frobenius(x), dst, n).equals(hw_frobenius(rx)));
            REQUIRE(rx.expansion().digits.size() == x.expansion().digits.size());
            for (std::size_t j = 0; j < rx.expansion().digits.size(); ++j) {
                CHECK(rx.expansion().digits[j].second == x.expansion().digits[j].second);
                CHECK(rx.expansion().digits[j].first == x.expansion().digits[j].first * n);
            }
        }
    }
    auto src = HWContext::mixed(2, 1, 4, 2);
    CHECK_THROWS_AS(hw_rescale(hw_pi_power(src, 1), HWContext::mixed(2, 1, 2, 4), 2), DomainError);
}

TEST_CASE("Newton polygons") {
    for (long q : {2, 3, 5}) {
        auto T = LocalTower::build(TowerSpec::mixed(q, 6));
        std::vector<long> c(q, 0);
        c[0] = -q;
        c.back() = 1;
        auto np = newton_polygon(poly(T, c));
        REQUIRE(np.size() == 1);
        CHECK(np[0] == std::pair<Rat, long>(frac(1, q - 1), q - 1));
    }
    auto T = LocalTower::build(TowerSpec::mixed(2, 6));
    auto np = newton_polygon(poly(T, {-2, -2, 1}));
    REQUIRE(np.size() == 1);
    CHECK(np[0] == std::pair<Rat, long>(Rat(1, 2), 2));
    // Two slopes, ascending root valuations: X^2 - 3X + 2*... with roots of valuation 0 and 2.
    auto np2 = newton_polygon(poly(T, {4, -3, 1}));
    REQUIRE(np2.size() == 2);
    CHECK(np2[0] == std::pair<Rat, long>(0, 1));
    CHECK(np2[1] == std::pair<Rat, long>(2, 1));

    std::vector<PolyVal> bad = {{Rat(4), Rat(6)}, {std::nullopt, Rat(1)}, {Rat(0), Rat(6)}};
    CHECK_THROWS_AS(newton_polygon(bad), DomainError);
    std::vector<PolyVal> ok = {{Rat(4), Rat(6)}, {std::nullopt, Rat(3)}, {Rat(0), Rat(6)}};
    CHECK(newton_polygon(ok).size() == 1);
}

TEST_CASE("root finding: radicals and unramified square roots") {
    auto ctx = HWContext::mixed(3, 1, 2, 3);
    const auto& L = ctx->tower();
    auto roots = hw_find_roots(ctx, {-L->pi_K(), L->zero(), L->one()});
    REQUIRE(roots.size() == 2);
    for (const auto& r : roots) {
        CHECK(r.complete);
        CHECK(r.element(ctx).valuation().value == Rat(1, 2));
        CHECK(r.value.pow(2).with_cap(ctx->cap_abs()).equals(L->pi_K()));
    }
    // Digit order: [1]pi^(1/2) precedes [2]pi^(1/2).
    CHECK(roots[0].element(ctx).expansion().digits[0].second.is_one());

    // -3 is a square over Q_4 but not over Q_2.
    auto c1 = HWContext::mixed(2, 1, 1, 6);
    CHECK(hw_find_roots(c1, poly(c1->tower(), {3, 0, 1})).empty());
    auto c2 = HWContext::mixed(2, 2, 1, 6);
    auto r2 = hw_find_roots(c2, poly(c2->tower(), {3, 0, 1}));
    REQUIRE(r2.size() == 2);
    const auto& F4 = c2->residue_field();
    for (const auto& r : r2) {
        CHECK(r.complete);
        auto e = r.element(c2);
        CHECK(e.pow(2).equals(hw_from_int(c2, -3)));
        CHECK_FALSE(hw_in_subfield(e, 1));
        CHECK_FALSE(F4->in_subfield(e.expansion().digit_at(1, F4), 1));
    }
    CHECK_FALSE(r2[0].element(c2).equals(r2[1].element(c2)));
}

TEST_CASE("root finding: torsion of the model X^2 - 2X") {
    // g_2 = X^2 - 2X - 2 has roots 1 +- sqrt3; they live in Q_2(sqrt3), outside every Q_2(2^{1/d}).
    auto k = TowerSpec::mixed(2, 1).eisenstein({{"-2", 0}, {"-2", 1}, {"1", 2}});
    auto ctx = HWContext::make(k, 1, 1, 4);
    const auto& L = ctx->tower();
    auto g2 = poly(L, {-2, -2, 1});
    auto roots = hw_find_roots(ctx, g2);
    REQUIRE(roots.size() == 2);
    auto s0 = L->generator(0);
    auto two = L->from_int(2);
    bool a = roots[0].value.equals(s0) || roots[1].value.equals(s0);
    bool b = roots[0].value.equals(two - s0) || roots[1].value.equals(two - s0);
    CHECK(a);
    CHECK(b);
    for (const auto& r : roots) {
        CHECK(r.value.valuation_abs().value == Rat(1, 2));
        CHECK(r.residual.value >= r.agreement);
    }

    auto c4 = HWContext::mixed(2, 1, 4, 3);
    auto part = hw_find_roots(c4, poly(c4->tower(), {-2, -2, 1}));
    REQUIRE(part.size() == 1);
    CHECK_FALSE(part[0].complete);
    CHECK(part[0].cluster == 2);
    RootOptions strict;
    strict.allow_partial = false;
    CHECK_THROWS_AS(hw_find_roots(c4, poly(c4->tower(), {-2, -2, 1}), strict), DomainError);
}

TEST_CASE("equal characteristic roots") {
    // Over F_2((t)): X^2 + X + t^... Artin-Schreier X^2 + X = t has two roots in F_2[[t]].
    auto ctx = HWContext::equal(2, 1, 1, 8);
    const auto& L = ctx->tower();
    auto t = L->parse("t");
    auto roots = hw_find_roots(ctx, {-t, L->one(), L->one()});
    REQUIRE(roots.size() == 2);
    for (const auto& r : roots) CHECK(poly_eval({-t, L->one(), L->one()}, r.value).is_zero());
}
