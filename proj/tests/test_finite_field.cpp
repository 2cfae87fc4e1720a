#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>

#include "hw/errors.hpp"
#include "hw/finite_field.hpp"

using namespace hw;

namespace {

// Independent oracle: a monic quadratic over F_p is irreducible iff it has no root.
std::vector<std::vector<long>> irreducible_quadratics(long p) {
    std::vector<std::vector<long>> out;
    for (long c0 = 0; c0 < p; ++c0)
        for (long c1 = 0; c1 < p; ++c1) {
            bool root = false;
            for (long x = 0; x < p; ++x)
                if ((x * x + c1 * x + c0) % p == 0) root = true;
            if (!root) out.push_back({c0, c1, 1});
        }
    return out;
}

}  // namespace

TEST_CASE("construction is deterministic and picks the minimal modulus") {
    auto f2 = FqField::make(2, 1);
    CHECK(f2->modulus().empty());
    CHECK(f2->size() == 2);

    auto f4 = FqField::make(2, 2);
    CHECK(f4->modulus() == std::vector<long>{1, 1, 1});
    CHECK(FqField::make(2, 2).get() == f4.get());

    auto quads = irreducible_quadratics(3);
    CHECK(quads.size() == 3);
    std::sort(quads.begin(), quads.end());  // constant term compared first
    CHECK(FqField::make(3, 2)->modulus() == quads.front());
    CHECK(quads.front() == std::vector<long>{1, 0, 1});

    CHECK_THROWS_AS(FqField::make(4, 1), DomainError);
    CHECK_THROWS_AS(FqField::make(2, 0), DomainError);
}

TEST_CASE("higher-degree moduli are irreducible") {
    for (auto [p, d] : std::vector<std::pair<long, int>>{{2, 3}, {2, 4}, {2, 6}, {3, 3}, {3, 4}, {5, 2}, {7, 3}}) {
        auto F = FqField::make(p, d);
        CHECK(is_irreducible_mod_p(F->modulus(), p));
        // Every element satisfies a^{p^D} = a.
        for (auto a : F->elements()) CHECK(F->pow(a, ipow(p, d)) == a);
    }
}

TEST_CASE("frobenius") {
    auto F4 = FqField::make(2, 2);
    FqElem a = F4->gen();
    CHECK(a * a + a + F4->one() == F4->zero());
    CHECK(F4->frobenius(a, 1, 1) == a + F4->one());
    auto F8 = FqField::make(2, 3);
    for (auto x : F8->elements()) CHECK(F8->frobenius(x, 1, 3) == x);
    CHECK_THROWS_AS(F8->frobenius(F8->gen(), 1, 2), DomainError);

    // F_9: frobenius of a generator is its cube, cross-checked by a power table.
    auto F9 = FqField::make(3, 2);
    FqElem g = F9->primitive();
    std::vector<FqElem> table{F9->one()};
    for (int k = 1; k < 8; ++k) table.push_back(table.back() * g);
    std::set<std::uint32_t> codes;
    for (auto& t : table) codes.insert(t.code());
    CHECK(codes.size() == 8);
    CHECK(F9->frobenius(g, 1, 1) == table[3]);
    CHECK(F9->frobenius(g, -1, 1) == table[3]);  // order-2 automorphism
}

TEST_CASE("subfield membership") {
    auto F4 = FqField::make(2, 2);
    CHECK(F4->in_subfield(F4->one(), 1));
    CHECK_FALSE(F4->in_subfield(F4->gen(), 1));
    auto F9 = FqField::make(3, 2);
    int count = 0;
    for (auto x : F9->elements()) count += F9->in_subfield(x, 1) ? 1 : 0;
    CHECK(count == 3);
    CHECK_THROWS_AS(F9->in_subfield(F9->one(), 3), DomainError);
}

TEST_CASE("embeddings are injective homomorphisms matching subfield membership") {
    for (auto [p, D] : std::vector<std::pair<long, int>>{{2, 4}, {3, 4}, {2, 2}, {5, 2}}) {
        auto F = FqField::make(p, D);
        for (int d = 1; d <= D; ++d) {
            if (D % d) continue;
            auto S = FqField::make(p, d);
            std::set<std::uint32_t> image;
            for (auto x : S->elements()) {
                image.insert(F->embed(x).code());
                for (auto y : S->elements()) {
                    CHECK(F->embed(x + y) == F->embed(x) + F->embed(y));
                    CHECK(F->embed(x * y) == F->embed(x) * F->embed(y));
                }
            }
            CHECK(image.size() == S->size());
            for (auto a : F->elements()) CHECK(F->in_subfield(a, d) == (image.count(a.code()) == 1));
            FqElem r = F->embed(S->element_at(S->size() - 1));
            CHECK(F->restrict_to(r, *S) == S->element_at(S->size() - 1));
        }
    }
}

TEST_CASE("frobenius is additive on random samples") {
    std::mt19937_64 rng(7);
    for (auto [p, D] : std::vector<std::pair<long, int>>{{2, 2}, {3, 2}, {2, 4}, {5, 3}}) {
        auto F = FqField::make(p, D);
        std::uniform_int_distribution<std::uint32_t> pick(0, F->size() - 1);
        for (int i = 0; i < 500; ++i) {
            FqElem a = F->element_at(pick(rng)), b = F->element_at(pick(rng));
            CHECK(F->pow(a + b, p) == F->pow(a, p) + F->pow(b, p));
        }
    }
}

TEST_CASE("rendering and parsing round-trip") {
    auto F9 = FqField::make(3, 2);
    for (auto x : F9->elements()) CHECK(F9->parse(x.str()) == x);
    auto F8 = FqField::make(2, 3);
    CHECK(F8->to_string(F8->gen() * F8->gen() + F8->one()) == "g^2+1");
    CHECK(F8->parse("g^2+1") == F8->gen() * F8->gen() + F8->one());
    CHECK(F8->parse("g^-1") * F8->gen() == F8->one());
    auto F5 = FqField::make(5, 1);
    CHECK(F5->parse("7") == F5->from_int(2));
    CHECK_THROWS_AS(F5->parse("g"), DomainError);
}

TEST_CASE("roots with multiplicities") {
    auto F4 = FqField::make(2, 2);
    auto one = F4->one();
    // X^2 + X + 1 splits as (X - g)(X - g^2)
    auto r = F4->roots({one, one, one});
    REQUIRE(r.size() == 2);
    CHECK(r[0].second == 1);
    CHECK((r[0].first == F4->gen() || r[1].first == F4->gen()));
    // (X-1)^3 over F_3
    auto F3 = FqField::make(3, 1);
    auto r3 = F3->roots({F3->from_int(-1), F3->from_int(3), F3->from_int(-3), F3->one()});
    REQUIRE(r3.size() == 1);
    CHECK(r3[0].second == 3);
}
