#include "hw/verify.hpp"

#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "hw/errors.hpp"
#include "hw/hahn_witt.hpp"
#include "hw/lubin_tate.hpp"

namespace hw::verify {

using family::Series;
using family::Word;

Budget Budget::from_env() {
    Budget b;
    if (const char* s = std::getenv("HWSERIES_BUDGET")) {
        long v = std::strtol(s, nullptr, 10);
        if (v > 0) b.prec_ceiling = v;
    }
    return b;
}

bool Report::ok() const {
    if (checks.empty()) return false;
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

void Report::add(std::string name, bool pass, std::string detail) {
    checks.push_back({std::move(name), pass, std::move(detail)});
}

std::string Report::text() const {
    std::ostringstream os;
    os << title << (ok() ? " [ok]" : " [FAILED]") << "\n";
    for (const auto& c : checks) {
        os << "  " << (c.pass ? "PASS " : "FAIL ") << c.name;
        if (!c.detail.empty()) os << ": " << c.detail;
        os << "\n";
    }
    return os.str();
}

json Report::to_json() const {
    json cs = json::array();
    for (const auto& c : checks) cs.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    return {{"title", title}, {"ok", ok()}, {"checks", cs}, {"data", data}};
}

namespace {

FqElem fq_pow(FqElem a, long e) {
    FqElem r = a.field().one();
    while (e) {
        if (e & 1) r = r * a;
        a = a * a;
        e >>= 1;
    }
    return r;
}

long base_prec_for(const Rat& bound, int e_K) { return Int(ceil(bound / e_K)).get_si() + 3; }

int k_ramification(const TowerSpec& k) {
    int e = 1;
    for (const auto& st : k.stages)
        if (!st.unramified) e *= st.degree;
    return e;
}

// Q_p(p^{1/p^J}) as J successive radical stages of degree p.
TowerSpec radical_chain(long p, int J, long prec) {
    TowerSpec s = TowerSpec::mixed(p, prec);
    for (int j = 0; j < J; ++j) s.radical(static_cast<int>(p));
    return s;
}

std::string radical_name(long p, int J) {
    if (J == 0) return "Q_" + std::to_string(p);
    return "Q_" + std::to_string(p) + "(" + std::to_string(p) + "^(1/" + to_string(ipow(p, J)) + "))";
}

std::string k_name(const TowerSpec& k) {
    if (k.stages.empty()) return k.equal_char ? "F_" + to_string(ipow(k.p, static_cast<unsigned long>(k.base_f))) + "((t))" : "Q_" + std::to_string(k.p);
    return k.describe();
}

}  // namespace

FqElem section3_a(long p) {
    auto F = FqField::make(p, 2);
    for (const auto& a : F->elements()) {
        if (a.is_zero()) continue;
        bool ok = p == 2 ? (a * a + a).is_one() : fq_pow(a, p - 1) == -F->one();
        if (ok) return a;
    }
    throw VerificationError("no element a of F_{p^2} with the required equation");
}

TowerPtr coefficient_tower(const TowerSpec& k, int m, long prec) {
    TowerSpec s = k;
    s.prec = prec;
    int kst = s.k_stages();
    s.k_level = -1;
    s.stages.resize(static_cast<std::size_t>(kst));
    if (m > 1) s.unramified(m);
    s.designate_k(kst);
    return LocalTower::build(s);
}

json witness_json(const Series& s) {
    json out = json::array();
    const auto& T = s.tower();
    for (const auto& t : s.terms()) {
        FqElem r = t.coeff.residue();
        if (!t.coeff.equals(T->teichmuller(r))) throw VerificationError("witness coefficient is not a Teichmuller digit");
        std::string coeff = T->residue_field()->to_string(r);
        if (t.word.empty())
            out.push_back({{"exp", to_string(t.alpha)}, {"coeff", coeff}});
        else
            out.push_back({{"family", {{"alpha", to_string(t.alpha)}, {"start", s.start()}, {"word", t.word}}},
                           {"coeff", coeff}});
    }
    return out;
}

Series witness_series(const TowerPtr& T, const Rat& bound, const json& witness) {
    Series s(T, bound);
    for (const auto& item : witness) {
        LocalElem c = T->teichmuller(T->residue_field()->parse(item.at("coeff").get<std::string>()));
        if (item.contains("exp")) {
            s = s + Series::monomial(T, bound, c, parse_rat(item.at("exp").get<std::string>()));
        } else {
            const auto& f = item.at("family");
            s = s + Series::family(T, bound, c, parse_rat(f.at("alpha").get<std::string>()), f.at("start").get<int>(),
                                   f.at("word").get<Word>());
        }
    }
    return s;
}

namespace {

// f(x) = x^q - pi x, either multiplied out or through the termwise Frobenius.
Series model_map(const Series& x, const std::vector<LocalElem>& f, bool direct) {
    if (direct) return family::evaluate(f, x);
    return x.frobenius_power() - x.scaled(x.tower()->pi_K());
}

// g_n(y) = (f^{[n-1]}(y))^{q-1} - pi.
Series torsion_value(const Series& y, int n, bool direct) {
    const auto& T = y.tower();
    long q = T->q().get_si();
    auto f = lt::model_poly(T, q, -1);
    Series x = y;
    for (int i = 0; i < n - 1; ++i) x = model_map(x, f, direct);
    return x.pow(static_cast<unsigned long>(q - 1)) - Series::monomial(T, y.bound() + 1000, T->pi_K(), 0);
}

struct ValResult {
    Rat v;             // exact valuation, or the bound below which the value vanishes
    bool exact = false;
    std::string error;  // budget exhaustion
};

ValResult valuation_of(const Series& g, int levels) {
    try {
        auto ld = g.leading(levels);
        if (ld) return {ld->v, true, ""};
        return {g.bound(), false, ""};
    } catch (const BudgetError& e) {
        return {g.valuation_lower_bound(), false, e.what()};
    }
}

std::string val_str(const ValResult& r) { return (r.exact ? "" : ">= ") + to_string(r.v); }

// Descent bookkeeping for K = Q_p from level J: returns per-step (k, n) pairs,
// where a congruence modulo pi_j^{k+1} at level j gives n at level j - 1.
std::vector<std::pair<long, long>> descent_chain(long p, int J) {
    std::vector<std::pair<long, long>> steps;
    long k = ipow(p, J).get_si();
    for (int j = J; j >= 1; --j) {
        // Largest n with n <= k and (n - k/p) v(pi_{j-1}) <= 1, v(pi_{j-1}) = p^{-(j-1)}.
        Rat vpi = frac(1, ipow(p, j - 1));
        long n = k;
        while (n > 0 && (Rat(n) - frac(k, p)) * vpi > 1) --n;
        steps.emplace_back(k, n);
        k = n;
    }
    return steps;
}

json zm_json(long p, int J, bool direct, const Budget& budget, bool* ok, std::string* why) {
    long m = ipow(p, J).get_si();
    long q = p;
    Rat B = Rat(m) + frac(1, ipow(q, m) - ipow(q, m - 1));
    TowerSpec ks = radical_chain(p, J, base_prec_for(B, static_cast<int>(m)));
    auto T = coefficient_tower(ks, 1, ks.prec);
    Series z = family::torsion_witness(T, B, static_cast<int>(m));
    auto r = valuation_of(torsion_value(z, static_cast<int>(m), direct), budget.peel_levels);
    *ok = r.error.empty() && r.v > m;
    if (!*ok) *why = r.error.empty() ? "v(g_m(z_m)) = " + val_str(r) + " does not exceed m" : r.error;
    return {{"field", radical_name(p, J)},
            {"tower", json::parse(ks.to_json())},
            {"m", m},
            {"evaluation", direct ? "direct" : "frobenius"},
            {"witness", witness_json(z)},
            {"v_gm", val_str(r)}};
}

}  // namespace

CanCertificate certify_can(long p, int n, const Budget& budget) {
    return certify_can(TowerSpec::mixed(p, 1), n, budget);
}

CanCertificate certify_can(const TowerSpec& K, int n, const Budget& budget) {
    if (n < 1) throw DomainError("n must be >= 1");
    CanCertificate out;
    int eK = k_ramification(K);
    Rat B = Rat(n) + 2;
    long prec = base_prec_for(B, eK);
    if (prec > budget.prec_ceiling) throw BudgetError("precision ceiling below the certificate's needs");
    auto T = coefficient_tower(K, 1, prec);
    long q = T->q().get_si();
    TowerSpec kspec = K;
    kspec.prec = prec;
    json body = {{"K", k_name(K)},
                 {"pi", K.stages.empty() ? (K.equal_char ? "t" : std::to_string(K.p)) : "pi"},
                 {"q", q},
                 {"n", n},
                 {"tower", json::parse(kspec.to_json())},
                 {"conclusion", "can_K(pi) = -pi mod pi^" + std::to_string(n + 1)}};
    if (!K.equal_char && K.stages.empty())
        body["u_p"] = "u_" + std::to_string(K.p) + " = -1 mod " + std::to_string(K.p) + "^" + std::to_string(n + 1);

    bool base_field = !K.equal_char && K.stages.empty();
    long p = K.p;

    // Norm descent from Q_p(p^{1/p^J}); J is kept small so z_{p^J} stays cheap.
    auto try_descent = [&](const std::string& note) -> bool {
        for (int J = 1; J <= 3 && ipow(p, J) <= 9; ++J) {
            auto steps = descent_chain(p, J);
            if (steps.back().second < n) continue;
            long m = ipow(p, J).get_si();
            bool direct = ipow(p, m) <= 256;
            bool ok = false;
            std::string why;
            json zm = zm_json(p, J, direct, budget, &ok, &why);
            if (!ok) {
                out.failure = "descent from " + radical_name(p, J) + ": " + why;
                return false;
            }
            json chain = json::array();
            for (std::size_t i = 0; i < steps.size(); ++i) {
                int j = J - static_cast<int>(i);
                chain.push_back({{"from", radical_name(p, j)},
                                 {"to", radical_name(p, j - 1)},
                                 {"k", steps[i].first},
                                 {"n", steps[i].second},
                                 {"v_pi", to_string(frac(1, ipow(p, j - 1)))}});
            }
            body["method"] = "norm-descent";
            body["witness"] = zm["witness"];
            body["witness_field"] = zm["field"];
            body["v_gn"] = zm["v_gm"];
            body["top_check"] = zm;
            body["descent"] = chain;
            if (!note.empty()) body["note"] = note;
            out.body = body;
            out.ok = true;
            return true;
        }
        if (out.failure.empty()) out.failure = "no descent chain within budget";
        return false;
    };

    // Over Q_p direct evaluation of z_n is inconclusive from n = 3 on and its
    // evaluation grows quickly, so descent goes first there.
    if (base_field && n >= 3 && try_descent("direct evaluation of the digit family z_n is inconclusive over Q_p for n >= 3"))
        return out;

    // Exact root for n = 1, the digit family z_n otherwise.
    Series y = family::torsion_witness(T, B, n);
    ValResult r;
    try {
        r = valuation_of(torsion_value(y, n, true), budget.peel_levels);
    } catch (const BudgetError& e) {
        r = {0, false, e.what()};
    }
    if (r.error.empty() && r.v > n) {
        body["method"] = n == 1 ? "exact-root" : "digit-family";
        body["witness"] = witness_json(y);
        body["v_gn"] = val_str(r);
        if (n == 2 && q == 2 && base_field) body["remark"] = "also certifies sqrt(2+sqrt(2)) in HW(F_2)";
        out.body = body;
        out.ok = true;
        out.failure.clear();
        return out;
    }
    std::string direct_failure = "digit family z_" + std::to_string(n) + ": v(g_n) " +
                                 (r.error.empty() ? val_str(r) : "undetermined (" + r.error + ")");
    std::string earlier = out.failure;
    out.failure = direct_failure + (earlier.empty() ? "" : "; " + earlier);
    return out;
}

bool validate_certificate(const json& cert, std::string* detail) {
    auto fail = [&](const std::string& why) {
        if (detail) *detail = why;
        return false;
    };
    try {
        int n = cert.at("n").get<int>();
        TowerSpec K = TowerSpec::from_json(cert.at("tower").dump());
        std::string method = cert.at("method").get<std::string>();
        Budget budget;
        if (method == "exact-root" || method == "digit-family") {
            int eK = k_ramification(K);
            Rat B = Rat(n) + 2;
            auto T = coefficient_tower(K, 1, std::max<long>(K.prec, base_prec_for(B, eK)));
            if (T->q().get_si() != cert.at("q").get<long>()) return fail("residue cardinality mismatch");
            Series y = witness_series(T, B, cert.at("witness"));
            auto r = valuation_of(torsion_value(y, n, true), budget.peel_levels);
            if (!r.error.empty()) return fail(r.error);
            if (!(r.v > n)) return fail("v(g_n(y)) = " + val_str(r) + " is not above n");
            if (val_str(r) != cert.at("v_gn").get<std::string>()) return fail("recorded bound differs: " + val_str(r));
            if (detail) *detail = "v(g_n(y)) " + val_str(r) + " > " + std::to_string(n);
            return true;
        }
        if (method == "norm-descent") {
            const auto& zm = cert.at("top_check");
            long p = K.p;
            long m = zm.at("m").get<long>();
            int J = 0;
            while (ipow(p, J) < m) ++J;
            if (ipow(p, J) != m) return fail("descent field degree is not a power of p");
            TowerSpec ks = TowerSpec::from_json(zm.at("tower").dump());
            Rat B = Rat(m) + frac(1, ipow(p, m) - ipow(p, m - 1));
            auto T = coefficient_tower(ks, 1, ks.prec);
            Series z = witness_series(T, B, cert.at("witness"));
            // The witness must be the digit family z_m.
            if (!(z - family::torsion_witness(T, B, static_cast<int>(m))).is_zero()) return fail("witness is not z_m");
            bool direct = zm.at("evaluation").get<std::string>() == "direct";
            auto r = valuation_of(torsion_value(z, static_cast<int>(m), direct), budget.peel_levels);
            if (!r.error.empty() || !(r.v > m)) return fail("z_m bound fails: " + val_str(r));
            // Each step: norm containment hypotheses in exact arithmetic and Nm(-pi_j) = -pi_{j-1}.
            long k = m;
            const auto& steps = cert.at("descent");
            if (static_cast<int>(steps.size()) != J) return fail("descent chain length");
            auto top = LocalTower::build(radical_chain(p, J, ks.prec));
            for (int i = 0; i < J; ++i) {
                const auto& st = steps[static_cast<std::size_t>(i)];
                int j = J - i;
                long sk = st.at("k").get<long>(), sn = st.at("n").get<long>();
                Rat vpi = frac(1, ipow(p, j - 1));
                if (sk != k) return fail("descent step starts from the wrong exponent");
                if (!(sn <= sk && (Rat(sn) - frac(sk, p)) * vpi <= 1)) return fail("norm containment hypotheses fail");
                auto parent = top->parent();
                if (!top->norm_down(-top->pi_K()).equals(-parent->pi_K())) return fail("Nm(-pi') != -pi");
                top = parent;
                k = sn;
            }
            if (k < n) return fail("descent does not reach n");
            if (detail) *detail = "v(g_m(z_m)) " + val_str(r) + " > " + std::to_string(m) + ", descent reaches n = " +
                                  std::to_string(k);
            return true;
        }
        return fail("unknown method " + method);
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

Report lemma72_check(const TowerSpec& K, bool direct) {
    Report rep;
    int m = k_ramification(K);
    rep.title = "z_m check for " + k_name(K) + " (m = " + std::to_string(m) + ")";
    if (K.equal_char) throw DomainError("the z_m check needs mixed characteristic");
    for (const auto& st : K.stages)
        if (st.unramified) throw DomainError("the z_m check needs K totally ramified over Q_p");
    long p = K.p;
    long q = p;
    Rat B = Rat(m) + frac(1, ipow(q, m) - ipow(q, m - 1));
    auto T = coefficient_tower(K, 1, base_prec_for(B, m));
    Series z = family::torsion_witness(T, B, m);
    Budget budget;
    auto r = valuation_of(torsion_value(z, m, direct), budget.peel_levels);
    bool pass = r.error.empty() && r.v > m;
    rep.add("v(g_m(z_m)) > m v(pi)", pass,
            "v " + std::string(r.exact ? "= " : "") + val_str(r) + " (v(pi) = 1); in v(p) = 1 units " + (r.exact ? "" : ">= ") + to_string(r.v / m) +
                " > 1" + (r.error.empty() ? "" : "; " + r.error));
    // Control: the first digit of z_m alone stays at the generic bound.
    Series first = Series::monomial(T, B, T->one(), frac(1, ipow(q, m) - ipow(q, m - 1)));
    auto rc = valuation_of(torsion_value(first, m, direct), budget.peel_levels);
    rep.add("control: leading digit alone does not pass", rc.error.empty() && rc.exact && rc.v <= m,
            "v " + std::string(rc.exact ? "= " : "") + val_str(rc));
    rep.data = {{"K", k_name(K)}, {"m", m}, {"evaluation", direct ? "direct" : "frobenius"}, {"v_gm", val_str(r)},
                {"witness", witness_json(z)}};
    return rep;
}


namespace {

using DigitList = std::vector<std::pair<Rat, FqElem>>;

std::string digits_str(const DigitList& d, const FqFieldPtr& F) {
    std::string s;
    for (const auto& [e, c] : d) s += (s.empty() ? "" : " ") + to_string(e) + ":" + F->to_string(c);
    return s.empty() ? "(none)" : s;
}

// Mismatches between actual and expected digits on exponents accepted by `in_range`;
// an exponent missing from either side counts as the digit 0.
std::string digit_diff(const DigitList& actual, const DigitList& expected, const FqFieldPtr& F,
                       const std::function<bool(const Rat&)>& in_range) {
    std::map<Rat, FqElem> a, b;
    for (const auto& [e, c] : actual)
        if (in_range(e) && !c.is_zero()) a.emplace(e, c);
    for (const auto& [e, c] : expected)
        if (in_range(e) && !c.is_zero()) b.emplace(e, c);
    std::string diff;
    auto note = [&](const Rat& e, const std::string& got, const std::string& want) {
        diff += (diff.empty() ? "" : "; ") + to_string(e) + ": got " + got + ", expected " + want;
    };
    for (const auto& [e, c] : a) {
        auto it = b.find(e);
        if (it == b.end()) note(e, F->to_string(c), "0");
        else if (!(it->second == c)) note(e, F->to_string(c), F->to_string(it->second));
    }
    for (const auto& [e, c] : b)
        if (!a.count(e)) note(e, "0", F->to_string(c));
    return diff;
}

FqElem find_a(const FqFieldPtr& F, long p) {
    for (const auto& a : F->elements()) {
        if (a.is_zero()) continue;
        if (p == 2 ? (a * a + a).is_one() : F->pow(a, p - 1) == -F->one()) return a;
    }
    throw VerificationError("no element a with the required equation");
}

long factorial_mod(long n, long p) {
    long r = 1;
    for (long i = 2; i <= n; ++i) r = r * i % p;
    return r;
}

std::string near_root_str(const family::NearRoot& nr, const FqFieldPtr& F) {
    std::string s = "lambda " + std::string(nr.exact ? "= " : ">= ") + to_string(nr.lambda) +
                    ", cluster " + std::to_string(nr.cluster) + ", digits at lambda {";
    for (std::size_t i = 0; i < nr.digits.size(); ++i)
        s += (i ? ", " : "") + F->to_string(nr.digits[i].first);
    return s + "}";
}

}  // namespace

Report section3_pth_root(long p) {
    if (p < 3) throw DomainError("the p-th root display is for odd p");
    Report rep;
    rep.title = "Primitive p-th root of unity, p = " + std::to_string(p);
    rep.data["p"] = p;
    // The display covers exponents i/(p-1) through p/(p-1).
    {
        auto ctx = HWContext::mixed(p, 2, static_cast<int>(p - 1), 4);
        const auto& T = ctx->tower();
        const auto& F = ctx->residue_field();
        FqElem a = find_a(F, p);
        rep.data["a"] = F->to_string(a);
        DigitList expected;
        for (long i = 0; i < p; ++i)
            expected.emplace_back(frac(i, p - 1), F->pow(a, i) / F->from_int(factorial_mod(i, p)));
        Int c = (Int(1) + [&] { Int f = 1; for (long i = 2; i < p; ++i) f *= i; return f; }()) / p;
        expected.emplace_back(frac(p, p - 1), a * F->from_int(c));
        std::vector<LocalElem> phi(static_cast<std::size_t>(p), T->one());
        auto roots = hw_find_roots(ctx, phi);
        rep.add("Phi_p has p-1 roots", static_cast<long>(roots.size()) == p - 1,
                std::to_string(roots.size()) + " roots found");
        const HWRoot* chosen = nullptr;
        for (const auto& r : roots)
            if (r.element(ctx).expansion().digit_at(frac(1, p - 1), F) == a) chosen = &r;
        if (!chosen) {
            rep.add("a root with digit a at 1/(p-1)", false);
            return rep;
        }
        HWElem z = chosen->element(ctx);
        Rat upto = frac(p, p - 1);
        std::string diff = digit_diff(z.expansion().digits, expected, F, [&](const Rat& e) { return e <= upto; });
        rep.add("p-th root digits through p/(p-1) match the display", diff.empty() && chosen->agreement > upto,
                diff.empty() ? digits_str(expected, F) : diff);
        rep.add("digit at p/(p-1) is a(1+(p-1)!)/p",
                z.expansion().digit_at(upto, F) == expected.back().second,
                F->to_string(expected.back().second));
        Val v = (z.pow(static_cast<unsigned long>(p)) - hw_from_int(ctx, 1)).valuation();
        rep.add("root^p = 1 to precision 3", !v.exact && v.value >= 3, "v(root^p - 1) " + v.str());
        rep.data["pth_root"] = z.str();
    }
    return rep;
}

Report section3_p2_root(long p) {
    if (p < 3) throw DomainError("the p^2-th root display is for odd p");
    Report rep;
    rep.title = "Primitive p^2-th root of unity, p = " + std::to_string(p);
    rep.data["p"] = p;
    // Finite partial roots, then the structured prefix.
    Rat top = frac(1, p - 1);
    auto expected_p2 = [&](const FqFieldPtr& F, const FqElem& a, const Rat& below) {
        DigitList e;
        for (long i = 0; i < p; ++i)
            e.emplace_back(frac(i, p * (p - 1)), F->pow(-a, i) / F->from_int(factorial_mod(i, p)));
        for (int n = 2; top - frac(1, ipow(p, n)) < below; ++n) e.emplace_back(top - frac(1, ipow(p, n)), -a);
        return e;
    };
    {
        int j = 2;
        while ((p - 1) * ipow(p, j + 1) <= 128) ++j;
        int d = static_cast<int>((p - 1) * ipow(p, j).get_si());
        auto ctx = HWContext::mixed(p, 2, d, 1);
        const auto& T = ctx->tower();
        const auto& F = ctx->residue_field();
        FqElem a = find_a(F, p);
        std::vector<LocalElem> phi(static_cast<std::size_t>(p * (p - 1) + 1), T->zero());
        for (long i = 0; i < p; ++i) phi[static_cast<std::size_t>(i * p)] = T->one();
        auto roots = hw_find_roots(ctx, phi);
        long total = 0;
        json listing = json::array();
        std::vector<std::string> matched;
        for (std::size_t i = 0; i < roots.size(); ++i) {
            const auto& r = roots[i];
            total += r.cluster;
            auto ex = r.element(ctx).expansion();
            auto diff = digit_diff(ex.digits, expected_p2(F, a, r.agreement), F,
                                   [&](const Rat& e) { return e < r.agreement && e <= top; });
            bool shows_tail = r.agreement > top - frac(1, ipow(p, 2));
            if (diff.empty() && shows_tail) matched.push_back(std::to_string(i));
            listing.push_back({{"digits", ex.str()}, {"agreement", to_string(r.agreement)}, {"cluster", r.cluster},
                               {"matches", diff.empty() && shows_tail}});
        }
        rep.data["p2_roots_denominator"] = d;
        rep.data["p2_roots"] = listing;
        rep.add("all p(p-1) primitive p^2-th roots accounted for", total == p * (p - 1),
                std::to_string(total) + " roots in " + std::to_string(roots.size()) + " clusters at denominator " +
                    std::to_string(d));
        std::string m;
        for (const auto& s : matched) m += (m.empty() ? "" : ", ") + s;
        rep.add("a p^2-th root matches the display below its agreement (tail truncated at the cap)",
                !matched.empty(), "matching clusters: " + (m.empty() ? std::string("none") : m));
    }
    {
        auto T = coefficient_tower(TowerSpec::mixed(p, 1), 2, 10);
        const auto& F = T->residue_field();
        FqElem a = find_a(F, p);
        Rat B = 4;
        Series s(T, B);
        for (long i = 0; i < p; ++i) {
            FqElem c = F->pow(-a, i) / F->from_int(factorial_mod(i, p));
            s = s + Series::monomial(T, B, T->teichmuller(c), frac(i, p * (p - 1)));
        }
        s = s + Series::family(T, B, T->teichmuller(-a), top, 2, {1});
        std::vector<LocalElem> phi(static_cast<std::size_t>(p * (p - 1) + 1), T->zero());
        for (long i = 0; i < p; ++i) phi[static_cast<std::size_t>(i * p)] = T->one();
        try {
            auto nr = family::near_root(phi, s, 200);
            rep.add("structured p^2-th root: display prefix (with 0 at 1/(p-1)) is within lambda > 1/(p-1) of a root",
                    nr.lambda > top && nr.cluster >= 1, near_root_str(nr, F));
        } catch (const BudgetError& e) {
            rep.add("structured p^2-th root: display prefix is within lambda > 1/(p-1) of a root", false, e.what());
        }
        rep.data["p2_prefix"] = s.str();
    }
    rep.data["a"] = FqField::make(p, 2)->to_string(find_a(FqField::make(p, 2), p));
    return rep;
}

Report section3_sqrt_minus_one(const Budget& budget) {
    Report rep;
    rep.title = "Square root of -1 in HW(F_4), p = 2";
    // Structured prefix 1 + sum_k 2^{1 - 2^{-k}}, residual digits at 1.
    {
        auto T = coefficient_tower(TowerSpec::mixed(2, 1), 2, 12);
        const auto& F = T->residue_field();
        FqElem a = find_a(F, 2);
        rep.data["a"] = F->to_string(a);
        Rat B = 6;
        auto s = Series::monomial(T, B, T->one(), 0) + Series::family(T, B, T->one(), 1, 1, {1});
        auto nr = family::near_root({T->one(), T->zero(), T->one()}, s, budget.peel_levels);
        bool digits_ok = nr.digits.size() == 2;
        for (const auto& [z, mult] : nr.digits) digits_ok = digits_ok && mult == 1 && (z * z + z).is_one();
        rep.add("sqrt(-1): prefix agrees with both roots below 1, digit at 1 solves a^2 + a = 1",
                nr.exact && nr.lambda == 1 && nr.cluster == 2 && digits_ok, near_root_str(nr, F));
        auto sd = s.digits(1, 16);
        DigitList want{{0, F->one()}, {frac(1, 2), F->one()}, {frac(3, 4), F->one()}, {frac(7, 8), F->one()},
                       {frac(15, 16), F->one()}};
        std::string diff = digit_diff(sd, want, F, [](const Rat& e) { return e <= frac(15, 16); });
        rep.add("sqrt(-1): digits 1 at 1/2, 3/4, 7/8, 15/16 (and 1 at 0)", diff.empty(), diff.empty() ? digits_str(want, F) : diff);

        // Finite cross-check at denominator 16.
        auto ctx = HWContext::mixed(2, 2, 16, 2);
        const auto& L = ctx->tower();
        auto roots = hw_find_roots(ctx, {L->one(), L->zero(), L->one()});
        bool agree = !roots.empty();
        std::string detail;
        for (const auto& r : roots) {
            auto ex = r.element(ctx).expansion();
            auto d = digit_diff(ex.digits, sd, ctx->residue_field(), [&](const Rat& e) { return e < r.agreement; });
            agree = agree && d.empty() && r.agreement >= frac(15, 16);
            detail += (detail.empty() ? "" : "; ") + ex.str() + " (agreement " + to_string(r.agreement) + ")";
        }
        rep.add("sqrt(-1): finite roots at denominator 16 agree with the prefix", agree, detail);
    }
    return rep;
}

Report section3_radicals(const Budget& budget) {
    Report rep;
    rep.title = "Nested square roots of 2 in HW(F_2)";
    // sqrt(1 + 2^{1/2}) = 1 + sum_{n>=2} 2^{1-3/2^n} + sum_{n>=4} 2^{1-1/2^n} + 0 * 2.
    auto T = coefficient_tower(TowerSpec::mixed(2, 1), 1, 12);
    const auto& F = T->residue_field();
    Rat B = 6;
    auto s = Series::monomial(T, B, T->one(), 0) + Series::family(T, B, T->one(), 1, 2, {3}) +
             Series::family(T, B, T->one(), 1, 4, {1});
    auto c = [&](const Rat& e) { return Series::monomial(T, B, T->one(), e); };
    Series zero(T, B);
    std::vector<Series> P{-(c(0) + c(frac(1, 2))), zero, c(0)};
    family::NearRoot nr;
    try {
        nr = family::near_root(P, s, budget.peel_levels);
    } catch (const BudgetError& e) {
        rep.add("sqrt(1+2^(1/2)) near its prefix", false, e.what());
        return rep;
    }
    // The two roots differ by 2r with v(2r) = 1; lambda > 1 isolates one of them.
    rep.add("sqrt(1+2^(1/2)): prefix within lambda > 1 of exactly one root (F_2 digits by Krasner)",
            nr.lambda > 1 && nr.cluster == 1, near_root_str(nr, F));
    auto sd = s.digits(std::min<Rat>(nr.lambda, 2), 64);
    DigitList want{{0, F->one()}, {frac(1, 4), F->one()}, {frac(5, 8), F->one()}, {frac(13, 16), F->one()},
                   {frac(15, 16), F->one()}};
    std::string diff = digit_diff(sd, want, F, [&](const Rat& e) {
        for (const auto& w : want)
            if (w.first == e) return true;
        return false;
    });
    bool zero_at_1 = nr.lambda > 1;
    for (const auto& [e, d] : sd) zero_at_1 = zero_at_1 && e != 1;
    rep.add("sqrt(1+2^(1/2)): digits 1 at 0, 1/4, 5/8, 13/16, 15/16", diff.empty(), diff.empty() ? digits_str(want, F) : diff);
    rep.add("sqrt(1+2^(1/2)): digit 0 at 1", zero_at_1);
    {
        auto ctx = HWContext::mixed(2, 1, 32, 2);
        const auto& L = ctx->tower();
        auto rhs = (hw_from_int(ctx, 1) + hw_pi_power(ctx, frac(1, 2))).mirror();
        auto roots = hw_find_roots(ctx, {-rhs, L->zero(), L->one()});
        bool agree = !roots.empty();
        std::string detail;
        for (const auto& r : roots) {
            auto ex = r.element(ctx).expansion();
            auto d = digit_diff(ex.digits, sd, ctx->residue_field(), [&](const Rat& e) { return e < r.agreement; });
            agree = agree && d.empty();
            detail += (detail.empty() ? "" : "; ") + ex.str() + " (agreement " + to_string(r.agreement) + ")";
        }
        rep.add("sqrt(1+2^(1/2)): finite roots at denominator 32 agree with the prefix", agree, detail);
    }

    // sqrt(2 + sqrt(2)) = 2^{1/4} sqrt(1 + sqrt(2)).
    {
        auto s2 = c(frac(1, 4)) * s;
        std::vector<Series> P2{-(c(1) + c(frac(1, 2))), zero, c(0)};
        try {
            auto nr2 = family::near_root(P2, s2, budget.peel_levels);
            rep.add("sqrt(2+sqrt(2)) = 2^(1/4) sqrt(1+sqrt(2)) has F_2 digits", nr2.lambda > frac(5, 4) && nr2.cluster == 1,
                    near_root_str(nr2, F) + " (roots 2r apart: 5/4)");
        } catch (const BudgetError& e) {
            rep.add("sqrt(2+sqrt(2)) has F_2 digits", false, e.what());
        }
    }
    // Depth 3: a square root in HW(F_2) exactly when u_2 = -1 mod 32.
    {
        auto cert = certify_can(2, 4, budget);
        std::string detail;
        bool valid = cert.ok && validate_certificate(cert.body, &detail);
        rep.add("sqrt(2+sqrt(2+sqrt(2))) has F_2 digits (via can = -pi mod 2^5)", valid,
                cert.ok ? cert.body.value("method", "") + "; " + detail : cert.failure);
    }
    rep.data["sqrt_1_plus_sqrt2_prefix"] = s.str();
    return rep;
}

Report reproduce_section3(long p, const Budget& budget) {
    if (p != 2 && p != 3 && p != 5) throw DomainError("reproduce section3 supports p in {2, 3, 5}");
    Report rep;
    rep.title = "Hahn-Witt expansions of roots of unity and radicals, p = " + std::to_string(p);
    rep.data["p"] = p;
    auto parts = p == 2 ? std::vector<Report>{section3_sqrt_minus_one(budget), section3_radicals(budget)}
                        : std::vector<Report>{section3_pth_root(p), section3_p2_root(p)};
    for (auto& part : parts) {
        for (auto& c : part.checks) rep.checks.push_back(std::move(c));
        rep.data.update(part.data);
    }
    return rep;
}

Report char_p_roots(long q, int n, const Budget& budget) {
    if (n < 1) throw DomainError("n must be >= 1");
    Report rep;
    rep.title = "Torsion roots y_k in F_" + std::to_string(q) + "((t)), k <= " + std::to_string(n);
    Rat B = Rat(n) + 2;
    auto T = coefficient_tower(TowerSpec::equal(q, 1), 1, n + 5);
    auto f = lt::model_poly(T, q, -1);
    // Finite oracle: truncations T_K(y_k) over chains with k_i <= K at denominator (q-1) q^K.
    int K = std::max(n, 1);
    while ((q - 1) * ipow(q, K + 1) <= 256) ++K;
    int d = static_cast<int>((q - 1) * ipow(q, K).get_si());
    auto ctx = HWContext::equal(q, 1, d, 2);
    auto truncation = [&](int k, int kmax) {
        HWElem acc = hw_from_int(ctx, 0);
        std::function<void(int, int, Rat)> rec = [&](int depth, int lo, Rat e) {
            if (depth == k - 1) {
                acc = acc + hw_pi_power(ctx, e);
                return;
            }
            for (int j = lo; j <= kmax; ++j) rec(depth + 1, j + 1, e - frac(1, ipow(q, j)));
        };
        rec(0, 1, frac(1, q - 1));
        return acc;
    };
    rep.data["oracle_denominator"] = d;
    Series prev;
    for (int k = 1; k <= n; ++k) {
        Series y = family::torsion_witness(T, B, k);
        std::string tag = "k = " + std::to_string(k);
        auto g = torsion_value(y, k, true);
        bool g_zero = false;
        std::string g_detail;
        try {
            g_zero = !g.leading(budget.peel_levels).has_value();
            g_detail = "zero modulo pi^" + to_string(g.bound());
        } catch (const BudgetError& e) {
            g_detail = e.what();
        }
        rep.add(tag + ": g_k(y_k) = 0", g_zero, g_detail);
        if (k >= 2) {
            auto fy = family::evaluate(f, y);
            rep.add(tag + ": f(y_k) = y_{k-1}", (fy - prev).is_zero(), "modulo pi^" + to_string(fy.bound()));
        }
        Rat want = frac(1, ipow(q, k) - ipow(q, k - 1));
        auto ld = y.leading(budget.peel_levels);
        rep.add(tag + ": leading exponent 1/(q^k - q^(k-1))", ld && ld->v == want && ld->digit.is_one(),
                ld ? to_string(ld->v) : "none");
        // Finite truncation oracle.
        HWElem Y = truncation(k, K);
        HWElem fY = Y.pow(static_cast<unsigned long>(q)) - hw_pi_power(ctx, 1) * Y;
        if (k == 1) {
            Val v = (Y.pow(static_cast<unsigned long>(q - 1)) - hw_pi_power(ctx, 1)).valuation();
            rep.add(tag + ": finite oracle, y_1^(q-1) = pi", !v.exact, "v " + v.str());
        } else {
            HWElem want_prev = truncation(k - 1, K - 1);
            auto diff = digit_diff(fY.expansion().digits, want_prev.expansion().digits, ctx->residue_field(),
                                   [](const Rat& e) { return e < 1; });
            rep.add(tag + ": finite oracle, f(T_K y_k) = T_{K-1} y_{k-1} below 1", diff.empty(),
                    diff.empty() ? "K = " + std::to_string(K) : diff);
        }
        prev = y;
    }
    return rep;
}

Report norm_checks(const TowerSpec& K, long n, long k, int samples, std::uint64_t seed) {
    if (K.equal_char) throw DomainError("norm checks need mixed characteristic");
    Report rep;
    long p = K.p;
    int eK = k_ramification(K);
    rep.title = "Norms from " + k_name(K) + "(pi^(1/" + std::to_string(p) + ")), n = " + std::to_string(n) +
                ", k = " + std::to_string(k);
    Rat vpi = frac(1, eK);
    bool hyp = n >= 1 && k >= 1 && n <= k && (Rat(n) - frac(k, p)) * vpi <= 1;
    rep.add("hypotheses n <= k and (n - k/p) v(pi) <= v(p)", hyp);
    if (!hyp) return rep;
    TowerSpec top = K;
    top.prec = std::max<long>(K.prec, Int(ceil(Rat(n + 2) * vpi)).get_si() + 2);
    top.k_level = -1;
    top.radical(static_cast<int>(p));
    auto Tp = LocalTower::build(top);
    auto Tk = Tp->parent();
    // pi_K and pi' = pi_K^{1/p} as the top and next-to-top uniformizers.
    LocalElem pi_k = Tk->uniformizer();
    LocalElem pi_p = Tp->uniformizer();
    rep.add("Nm(-pi') = -pi", Tp->norm_down(-pi_p).equals(-pi_k));
    const auto& F = Tp->residue_field();
    bool teich_ok = true;
    std::string teich_detail;
    for (long m = 1; m <= k; ++m) {
        if (m % p == 0) continue;
        for (const auto& a : F->elements()) {
            if (a.is_zero()) continue;
            auto lhs = Tp->norm_down(Tp->one() - Tp->teichmuller(a) * pi_p.pow(static_cast<unsigned long>(m)));
            auto rhs = Tk->one() - Tk->teichmuller(F->pow(a, p)) * pi_k.pow(static_cast<unsigned long>(m));
            if (!lhs.equals(rhs)) {
                teich_ok = false;
                teich_detail = "m = " + std::to_string(m) + ", a = " + F->to_string(a);
            }
        }
    }
    rep.add("Nm(1 - [a] pi'^m) = 1 - [a^p] pi^m for p not dividing m", teich_ok, teich_detail);
    std::mt19937_64 rng(seed);
    int bad = 0;
    Rat worst = -1;
    for (int i = 0; i < samples; ++i) {
        Coeffs c(Tp->dim());
        for (auto& x : c) {
            Int r = 0;
            for (int w = 0; w < 4; ++w) r = r * Int(static_cast<unsigned long>(rng() >> 1)) + Int(static_cast<unsigned long>(rng() >> 1));
            x = r % Tp->modulus();
        }
        LocalElem u = Tp->one() + LocalElem(Tp, c, Tp->max_cap()).mul_unif(k);
        Val v = (Tp->norm_down(u) - Tk->one()).valuation();
        Rat vk = v.value;  // K-normalized on Tk
        if (worst < 0 || vk < worst) worst = vk;
        if (vk < n) ++bad;
    }
    rep.add(std::to_string(samples) + " samples of 1 + pi'^k O land in 1 + pi^n O", bad == 0,
            std::to_string(bad) + " failures, smallest v(Nm(u) - 1) = " + to_string(worst) + ", seed " + std::to_string(seed));
    rep.data = {{"K", k_name(K)}, {"p", p}, {"n", n}, {"k", k}, {"samples", samples}, {"seed", seed}};
    return rep;
}

}  // namespace hw::verify
