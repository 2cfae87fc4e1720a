#pragma once

// Reproduction checks and certificates for can_K(pi) = -pi modulo pi^{n+1}.
//
// A certificate records a witness y with digits in F_q and a bound
// v(g_n(y)) > n (K-normalized), which by the torsion-root criterion is
// equivalent to the congruence. Witnesses are finite digit lists or digit
// families (structured sums with accumulating support); for K = Q_p a
// certificate may instead descend a witness from K_J = Q_p(p^{1/p^J}) through
// norm containments. Every certificate re-validates from its JSON alone.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "hw/family.hpp"
#include "hw/local_tower.hpp"
#include "hw/rational.hpp"

namespace hw::verify {

using nlohmann::json;

/// Ceilings for automatic budget growth; overridable from the environment.
struct Budget {
    long prec_ceiling = 64;
    int denom_ceiling = 64;
    int peel_levels = 200;
    /// Reads HWSERIES_BUDGET (a precision ceiling) when set.
    static Budget from_env();
};

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct Report {
    std::string title;
    std::vector<Check> checks;
    json data = json::object();

    bool ok() const;
    void add(std::string name, bool pass, std::string detail = "");
    std::string text() const;
    json to_json() const;
};

/// The element a of F_{p^2} used by the displays: lexicographically minimal
/// with a^{p-1} = -1 (odd p) or a^2 + a = 1 (p = 2).
FqElem section3_a(long p);

/// Coefficient tower: K's stages plus an unramified stage of degree m, K designated.
TowerPtr coefficient_tower(const TowerSpec& k, int m, long prec);

/// Family series from a witness list [{"exp","coeff"} | {"family":{"alpha","start","word"},"coeff"}].
family::Series witness_series(const TowerPtr& T, const Rat& bound, const json& witness);
json witness_json(const family::Series& s);

struct CanCertificate {
    json body;  // the serialized certificate
    bool ok = false;
    std::string failure;  // why no certificate was produced
};

/// certify_can for K = Q_p (mixed characteristic, pi = p) or any TowerSpec K.
CanCertificate certify_can(long p, int n, const Budget& budget = {});
CanCertificate certify_can(const TowerSpec& K, int n, const Budget& budget = {});

/// Re-validates a certificate from its serialized form; detail explains a rejection.
bool validate_certificate(const json& cert, std::string* detail = nullptr);

/// The z_m check: z_m for K with e(K/Q_p) = m, checks v(g_m(z_m)) > m (K-normalized).
/// `direct` multiplies out every power; otherwise q-th powers use the digitwise
/// Frobenius, exact modulo p * pi^{q v(x)}.
Report lemma72_check(const TowerSpec& K, bool direct = true);

/// The displayed expansions, one report per display; reproduce_section3 runs
/// the ones for p (odd p: p-th and p^2-th roots; p = 2: sqrt(-1) and the radicals).
Report section3_pth_root(long p);
Report section3_p2_root(long p);
Report section3_sqrt_minus_one(const Budget& budget = {});
Report section3_radicals(const Budget& budget = {});
Report reproduce_section3(long p, const Budget& budget = {});
Report char_p_roots(long q, int n, const Budget& budget = {});
/// Norm containment Nm(1 + pi^{k/p} O_{K'}) in 1 + pi^n O_K for K' = K(pi^{1/p}).
Report norm_checks(const TowerSpec& K, long n, long k, int samples, std::uint64_t seed);

}  // namespace hw::verify
