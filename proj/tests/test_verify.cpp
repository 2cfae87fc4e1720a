#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>

#include "hw/errors.hpp"
#include "hw/verify.hpp"

using namespace hw;
using namespace hw::verify;

TEST_CASE("the element a of F_{p^2}") {
    auto a2 = section3_a(2);
    CHECK((a2 * a2 + a2).is_one());
    for (long p : {3L, 5L}) {
        auto a = section3_a(p);
        auto F = FqField::make(p, 2);
        CHECK(F->pow(a, p - 1) == -F->one());
        // Lexicographically minimal among the solutions.
        for (const auto& b : F->elements()) {
            if (F->lex_index(b) >= F->lex_index(a) || b.is_zero()) continue;
            CHECK_FALSE(F->pow(b, p - 1) == -F->one());
        }
    }
}

TEST_CASE("witness lists round-trip") {
    auto T = coefficient_tower(TowerSpec::mixed(2, 1), 1, 8);
    Rat B = 4;
    auto y = family::torsion_witness(T, B, 3);
    auto j = witness_json(y);
    CHECK((witness_series(T, B, j) - y).is_zero());
    CHECK(witness_json(witness_series(T, B, j)) == j);
}

TEST_CASE("certificates for small n validate from their JSON alone") {
    struct Case {
        long p;
        int n;
        const char* method;
    };
    for (const auto& cs : {Case{2, 1, "exact-root"}, Case{2, 2, "digit-family"}, Case{2, 3, "norm-descent"},
                           Case{3, 1, "exact-root"}, Case{3, 2, "digit-family"}}) {
        CAPTURE(cs.p);
        CAPTURE(cs.n);
        auto cert = certify_can(cs.p, cs.n);
        REQUIRE(cert.ok);
        CHECK(cert.body["method"] == cs.method);
        CHECK(cert.body["n"] == cs.n);
        CHECK(cert.body["K"] == "Q_" + std::to_string(cs.p));
        std::string detail;
        auto reparsed = json::parse(cert.body.dump());
        CHECK(validate_certificate(reparsed, &detail));
    }
}

TEST_CASE("the p = 2, n = 2 certificate has the exact bound 9/4") {
    auto cert = certify_can(2, 2);
    REQUIRE(cert.ok);
    CHECK(cert.body["v_gn"] == "9/4");
    CHECK(cert.body.contains("remark"));
}

TEST_CASE("tampered certificates are rejected") {
    auto cert = certify_can(2, 2);
    REQUIRE(cert.ok);
    std::string why;
    auto raised = cert.body;
    raised["n"] = 3;
    CHECK_FALSE(validate_certificate(raised, &why));
    auto zeroed = cert.body;
    zeroed["witness"][0]["coeff"] = "0";
    CHECK_FALSE(validate_certificate(zeroed, &why));
    auto wrong_bound = cert.body;
    wrong_bound["v_gn"] = "5/2";
    CHECK_FALSE(validate_certificate(wrong_bound, &why));

    auto descent = certify_can(2, 3);
    REQUIRE(descent.ok);
    auto overreach = descent.body;
    overreach["n"] = 5;
    CHECK_FALSE(validate_certificate(overreach, &why));
    auto bad_step = descent.body;
    bad_step["descent"][0]["n"] = 6;
    CHECK_FALSE(validate_certificate(bad_step, &why));
    auto other_witness = descent.body;
    other_witness["witness"][0]["family"]["word"] = json::array({1, 1});
    CHECK_FALSE(validate_certificate(other_witness, &why));
}

TEST_CASE("z_m instances and their control") {
    auto r2 = lemma72_check(TowerSpec::mixed(2, 1).radical(2));
    CHECK(r2.ok());
    auto r3 = lemma72_check(TowerSpec::mixed(3, 1).radical(3));
    CHECK(r3.ok());
    // Digitwise Frobenius evaluation reaches the same conclusion.
    CHECK(lemma72_check(TowerSpec::mixed(2, 1).radical(2).radical(2), false).ok());
    CHECK_THROWS_AS(lemma72_check(TowerSpec::mixed(2, 1).unramified(2)), DomainError);
}

TEST_CASE("characteristic p roots") {
    for (long q : {2L, 3L}) {
        auto r = char_p_roots(q, 3);
        CAPTURE(r.text());
        CHECK(r.ok());
    }
}

TEST_CASE("norm checks") {
    CHECK(norm_checks(TowerSpec::mixed(2, 1), 3, 4, 20, 5).ok());
    CHECK(norm_checks(TowerSpec::mixed(3, 1), 2, 3, 20, 5).ok());
    // (n - k/p) v(pi) > v(p): hypotheses fail and nothing is claimed.
    auto off = norm_checks(TowerSpec::mixed(2, 1), 3, 3, 20, 5);
    CHECK_FALSE(off.ok());
    CHECK(off.checks.size() == 1);
}

TEST_CASE("reproduction of the odd p displays") {
    auto r = reproduce_section3(3);
    CAPTURE(r.text());
    CHECK(r.ok());
    CHECK(r.data["a"].is_string());
}

TEST_CASE("report serialization") {
    Report r;
    r.title = "t";
    CHECK_FALSE(r.ok());
    r.add("x", true, "d");
    CHECK(r.ok());
    auto j = r.to_json();
    CHECK(j["checks"][0]["name"] == "x");
    CHECK(j["ok"] == true);
    r.add("y", false);
    CHECK_FALSE(r.ok());
    CHECK(r.text().find("FAIL y") != std::string::npos);
}

TEST_CASE("budget from the environment") {
    setenv("HWSERIES_BUDGET", "40", 1);
    CHECK(Budget::from_env().prec_ceiling == 40);
    setenv("HWSERIES_BUDGET", "junk", 1);
    CHECK(Budget::from_env().prec_ceiling == 64);
    unsetenv("HWSERIES_BUDGET");
}
