#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <functional>

#include "hw/family.hpp"
#include "hw/hahn_witt.hpp"

using namespace hw;
using namespace hw::family;

namespace {

TowerPtr coeff_tower(const TowerSpec& k, int m, long prec) {
    TowerSpec s = k;
    s.prec = prec;
    int kst = static_cast<int>(s.stages.size());
    if (m > 1) s.unramified(m);
    s.designate_k(kst);
    return LocalTower::build(s);
}

// Finite truncation of c * pi^alpha * F_1(w): chains with k_r <= kmax.
HWElem truncated_family(const HWContextPtr& ctx, const Rat& alpha, const Word& w, int kmax) {
    long q = ctx->q().get_si();
    HWElem acc = hw_from_int(ctx, 0);
    std::function<void(std::size_t, int, Rat)> rec = [&](std::size_t i, int lo, Rat e) {
        if (i == w.size()) {
            acc = acc + hw_pi_power(ctx, e);
            return;
        }
        for (int k = lo; k <= kmax; ++k) rec(i + 1, k + 1, e - w[i] * frac(1, ipow(q, k)));
    };
    rec(0, 1, alpha);
    return acc;
}

std::vector<std::string> digit_strs(const std::vector<std::pair<Rat, FqElem>>& d, const Rat& below) {
    std::vector<std::string> out;
    for (const auto& [e, c] : d)
        if (e < below) out.push_back(to_string(e) + ":" + c.str());
    return out;
}

}  // namespace

TEST_CASE("quasi-shuffle products") {
    const auto& a = quasi_shuffle({1}, {1});
    REQUIRE(a.size() == 2);
    CHECK(a.at({2}) == 1);
    CHECK(a.at({1, 1}) == 2);
    const auto& b = quasi_shuffle({1, 2}, {3});
    CHECK(b.size() == 5);
    CHECK(b.at({1, 2, 3}) == 1);
    CHECK(b.at({1, 3, 2}) == 1);
    CHECK(b.at({3, 1, 2}) == 1);
    CHECK(b.at({4, 2}) == 1);
    CHECK(b.at({1, 5}) == 1);
    // Delannoy count of distinct quasi-shuffles of two words of length 2 (no collisions).
    CHECK(quasi_shuffle({1, 2}, {4, 8}).size() == 13);
}

TEST_CASE("canonical form: Frobenius shift and start alignment") {
    auto T = coeff_tower(TowerSpec::mixed(2, 1), 1, 12);
    Rat B = 6;
    // F_1(2; (2)) = F_0(2; (1)) = pi + pi * F_1(1; (1)).
    auto a = Series::family(T, B, T->one(), 2, 1, {2});
    auto b = Series::monomial(T, B, T->one(), 1) + Series::family(T, B, T->pi_K(), 1, 1, {1});
    CHECK((a - b).is_zero());
    // A family started later equals the early one minus its heads.
    auto c = Series::family(T, B, T->one(), 1, 3, {1});
    auto d = Series::family(T, B, T->one(), 1, 1, {1}) - Series::monomial(T, B, T->one(), frac(1, 2)) -
             Series::monomial(T, B, T->one(), frac(3, 4));
    CHECK((c - d).is_zero());
}

TEST_CASE("digits of a family and of its powers agree with finite truncations") {
    struct Case {
        long p;
        Rat alpha;
        Word w;
        int kmax;
        int d;
    };
    for (const auto& cs : {Case{2, 1, {1}, 6, 64}, Case{2, 1, {1, 1}, 6, 64}, Case{3, frac(1, 2), {1}, 4, 162},
                           Case{2, 2, {3}, 6, 64}}) {
        auto T = coeff_tower(TowerSpec::mixed(cs.p, 1), 1, 8);
        Rat B = 4;
        auto x = Series::family(T, B, T->one(), cs.alpha, 1, cs.w);
        auto ctx = HWContext::mixed(cs.p, 1, cs.d, 4);
        auto xt = truncated_family(ctx, cs.alpha, cs.w, cs.kmax);
        // The omitted tail starts at the first chain with k_r = kmax + 1.
        Rat tail = cs.alpha;
        for (std::size_t i = 0; i < cs.w.size(); ++i) {
            long k = static_cast<long>(i) + 1;
            if (i + 1 == cs.w.size()) k = cs.kmax + 1;
            tail -= cs.w[i] * frac(1, ipow(cs.p, static_cast<unsigned long>(k)));
        }
        CAPTURE(cs.p);
        CAPTURE(x.str());
        auto xd = digit_strs(x.digits(tail, 200), tail);
        CHECK(xd.size() >= 3);
        CHECK(xd == digit_strs(xt.expansion().digits, tail));
        Rat v = x.valuation_lower_bound();
        // x^2 - t^2 = (x - t)(2t + (x - t)) with v(x - t) >= tail.
        auto sq = x * x;
        Rat sq_ok = tail + std::min<Rat>(v + (cs.p == 2 ? 1 : 0), tail);
        auto sd = digit_strs(sq.digits(sq_ok, 400), sq_ok);
        CHECK(sd.size() >= 3);
        CHECK(sd == digit_strs((xt * xt).expansion().digits, sq_ok));
        auto cube = sq * x;
        Rat cube_ok = tail + 2 * v;
        CHECK(digit_strs(cube.digits(cube_ok, 400), cube_ok) ==
              digit_strs((xt * xt * xt).expansion().digits, cube_ok));
    }
}

TEST_CASE("equal characteristic torsion witnesses satisfy f(y_n) = y_{n-1} exactly") {
    for (long q : {2L, 3L, 4L}) {
        auto T = coeff_tower(TowerSpec::equal(q, 1), 1, 8);
        Rat B = 5;
        for (int n = 2; n <= 4; ++n) {
            auto y = torsion_witness(T, B, n);
            auto fy = y.pow(static_cast<unsigned long>(q)) - y.scaled(T->pi_K());
            CAPTURE(q);
            CAPTURE(n);
            CHECK((fy - torsion_witness(T, B, n - 1)).is_zero());
        }
    }
}

TEST_CASE("square root of -1 near its structured prefix") {
    auto T = coeff_tower(TowerSpec::mixed(2, 1), 2, 12);
    Rat B = 6;
    auto s = Series::monomial(T, B, T->one(), 0) + Series::family(T, B, T->one(), 1, 1, {1});
    auto nr = near_root({T->one(), T->zero(), T->one()}, s);
    CHECK(nr.exact);
    CHECK(nr.lambda == 1);
    CHECK(nr.cluster == 2);
    REQUIRE(nr.digits.size() == 2);
    for (const auto& [z, mult] : nr.digits) {
        CHECK(mult == 1);
        CHECK((z * z + z).is_one());
    }
}
