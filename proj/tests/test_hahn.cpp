#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "hw/hahn.hpp"

using namespace hw;

namespace {

using ZS = HahnSeries<IntRing>;
using PS = HahnSeries<ZmodRing>;

auto Zr = std::make_shared<const IntRing>();

ZS zs(std::vector<std::pair<Rat, Int>> terms, Order order = std::nullopt) {
    std::vector<ZS::Term> t(terms.begin(), terms.end());
    return ZS::from_terms(Zr, t, order);
}

ZS random_series(std::mt19937_64& rng, int n, int den, int span) {
    std::vector<ZS::Term> t;
    std::uniform_int_distribution<int> c(-9, 9), e(0, span * den);
    for (int i = 0; i < n; ++i) t.emplace_back(frac(e(rng), den), Int(c(rng)));
    return ZS::from_terms(Zr, t);
}

}  // namespace

TEST_CASE("identities and basic products") {
    std::mt19937_64 rng(1);
    auto f = random_series(rng, 6, 4, 3);
    CHECK((f + ZS(Zr)).equals(f));
    CHECK((f * zs({{0, 1}})).equals(f));

    auto F2 = std::make_shared<const FqRing>(FqField::make(2, 1));
    auto one = F2->one();
    auto g = HahnSeries<FqRing>::from_terms(F2, {{Rat(1, 2), one}, {Rat(3, 4), one}});
    auto sq = g * g;
    REQUIRE(sq.terms().size() == 2);
    CHECK(sq.terms()[0].first == 1);
    CHECK(sq.terms()[1].first == Rat(3, 2));

    for (int k = 0; k < 6; ++k) {
        std::vector<std::pair<Rat, Int>> geo;
        for (int i = 0; i <= k; ++i) geo.emplace_back(i, 1);
        auto prod = zs({{0, 1}, {1, -1}}) * zs(geo);
        CHECK(prod.equals(zs({{0, 1}, {k + 1, -1}})));
    }
    // Truncated version of the telescoping product keeps the propagation rule.
    auto trunc = zs({{0, 1}, {1, -1}}, Rat(5)) * zs({{0, 1}, {1, 1}, {2, 1}}, Rat(3));
    CHECK(trunc.order() == Order(Rat(3)));
    CHECK(trunc.equals(zs({{0, 1}}, Rat(3))));
}

TEST_CASE("null series") {
    Int p = 5;
    CHECK(is_null_series(zs({{0, p}, {1, -1}}), p));
    CHECK_FALSE(is_null_series(zs({{0, 1}}), p));
    CHECK(is_null_series(zs({{0, p * p}, {2, -1}}), p));
    CHECK(is_null_series(ZS(Zr), p));
    // Classes are tested separately.
    CHECK_FALSE(is_null_series(zs({{0, p}, {1, -1}, {Rat(1, 2), 1}}), p));

    // Precision-limited rings report undecidable tests.
    auto R = std::make_shared<const ZmodRing>(5, 4);
    auto f = PS::from_terms(R, {{Rat(0), Int(5)}, {Rat(1), Int(-1)}});
    CHECK(is_null_series(f, Int(5)));
    CHECK_THROWS_AS(is_null_series(f, Int(5), 7), BudgetError);
    auto g = ZS::from_terms(Zr, {{Rat(0), p}}, Rat(1));
    CHECK(is_null_series(g, p));  // p = p * t^0 is null modulo p^1
    CHECK_THROWS_AS(is_null_series(g, p, 3), BudgetError);
}

TEST_CASE("division by t - r") {
    Int p = 3;
    auto q = divide_by_t_minus_r(zs({{0, p}, {1, -1}}), p);
    CHECK(q.equals(zs({{0, -1}})));
    CHECK(divide_by_t_minus_r(ZS(Zr), p).is_zero());
    auto q2 = divide_by_t_minus_r(zs({{0, p * p}, {2, -1}}), p);
    CHECK(q2.equals(zs({{1, -1}, {0, -p}})));
    CHECK((zs({{1, 1}, {0, -p}}) * q2).equals(zs({{0, p * p}, {2, -1}})));
    CHECK_THROWS_AS(divide_by_t_minus_r(zs({{0, 1}}), p), DomainError);
}

TEST_CASE("division inverts multiplication by t - r on random series") {
    std::mt19937_64 rng(2);
    for (Int r : {Int(2), Int(3), Int(-7)}) {
        auto tr = zs({{1, 1}, {0, -r}});
        for (int i = 0; i < 34; ++i) {
            auto g = random_series(rng, 5, 3, 4);
            auto f = tr * g;
            CHECK(is_null_series(f, r));
            auto back = divide_by_t_minus_r(f, r);
            CHECK(back.equals(g));
            CHECK((tr * back).equals(f));
        }
    }
}

TEST_CASE("null series form an ideal") {
    std::mt19937_64 rng(3);
    Int r = 2;
    auto tr = zs({{1, 1}, {0, -r}});
    for (int i = 0; i < 100; ++i) {
        auto f = tr * random_series(rng, 4, 2, 3);
        auto g = random_series(rng, 4, 6, 2);
        CHECK(is_null_series(f * g, r));
    }
}

TEST_CASE("multiplication is commutative and associative") {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 200; ++i) {
        auto a = random_series(rng, 4, 4, 2), b = random_series(rng, 4, 3, 2), c = random_series(rng, 3, 2, 2);
        CHECK((a * b).equals(b * a));
        CHECK(((a * b) * c).equals(a * (b * c)));
        auto at = a.truncated(Rat(3, 2)), bt = b.truncated(Rat(2));
        CHECK((at * bt).equals(bt * at));
        CHECK((at * bt).order() == (bt * at).order());
    }
}

TEST_CASE("rendering and tower coefficients") {
    auto s = zs({{Rat(1, 2), 3}, {2, -1}}, Rat(5, 2));
    CHECK(s.str() == "[3]*t^(1/2) + [-1]*t^(2) + O(t^(5/2))");
    auto T = LocalTower::build(TowerSpec::mixed(2, 8));
    auto R = std::make_shared<const TowerRing>(T);
    auto f = HahnSeries<TowerRing>::from_terms(R, {{Rat(0), T->from_int(2)}, {Rat(1), T->from_int(-1)}});
    CHECK(is_null_series(f, T->from_int(2)));
    CHECK(divide_by_t_minus_r(f, T->from_int(2)).coeff(0).equals(T->from_int(-1)));
    auto R4 = std::make_shared<const ZmodRing>(5, 4), R3 = std::make_shared<const ZmodRing>(5, 3);
    CHECK_THROWS_AS(PS::monomial(R4, 1, 0) + PS::monomial(R3, 1, 0), DomainError);
}
