// One line per acceptance criterion; exit status 0 only when all pass.

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "hw/hahn_witt.hpp"
#include "hw/lubin_tate.hpp"
#include "hw/verify.hpp"
#include "hw/witt.hpp"

using namespace hw;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
        r = body();
    } catch (const std::exception& e) {
        r = {false, std::string("exception: ") + e.what()};
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = s < limit_s;
    bool ok = r.pass && in_time;
    if (!ok) ++failures;
    std::ostringstream os;
    os.precision(3);
    os << (ok ? "PASS" : "FAIL") << "  " << id << ". " << name << ": " << r.detail << " [" << std::fixed << s
       << " s, limit " << limit_s << " s" << (in_time ? "" : ", TOO SLOW") << "]";
    std::cout << os.str() << std::endl;
}

Outcome from_reports(const std::vector<verify::Report>& reports) {
    Outcome o{true, ""};
    for (const auto& r : reports) {
        o.pass = o.pass && r.ok();
        int passed = 0;
        std::string first_fail;
        for (const auto& c : r.checks) {
            if (c.pass) ++passed;
            else if (first_fail.empty()) first_fail = c.name + " (" + c.detail + ")";
        }
        o.detail += (o.detail.empty() ? "" : "; ") + r.title + " " + std::to_string(passed) + "/" +
                    std::to_string(r.checks.size()) + (first_fail.empty() ? "" : ", failed: " + first_fail);
    }
    return o;
}

witt::WittVec random_vec(const FqFieldPtr& F, long q, int n, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::uint32_t> d(0, F->size() - 1);
    auto w = witt::zero(F, q, n);
    for (auto& c : w.x) c = F->element_at(d(rng));
    return w;
}

HWElem random_hw(const HWContextPtr& ctx, std::mt19937_64& rng, int terms) {
    const auto& F = ctx->residue_field();
    std::uniform_int_distribution<std::uint32_t> dc(0, F->size() - 1);
    long top = Int(floor(ctx->N() * ctx->d())).get_si();
    std::uniform_int_distribution<long> de(0, top - 1);
    std::map<Rat, FqElem> digits;
    for (int i = 0; i < terms; ++i) digits[frac(de(rng), ctx->d())] = F->element_at(dc(rng));
    return hw_from_digits(ctx, {digits.begin(), digits.end()});
}

struct WittConfig {
    long q;
    long p;
    int field_degree;
};

}  // namespace

int main() {
    std::cout << "Acceptance criteria" << std::endl;

    criterion(1, "odd p: primitive p-th root of unity matches its display through p/(p-1), root^p = 1", 10, [] {
        return from_reports({verify::section3_pth_root(3), verify::section3_pth_root(5)});
    });

    criterion(2, "p = 3: a primitive 9th root of unity matches its display through 1/2", 30,
              [] { return from_reports({verify::section3_p2_root(3)}); });

    criterion(3, "p = 2: sqrt(-1) digits 1 at 1/2, 3/4, 7/8, 15/16 and a at 1", 10,
              [] { return from_reports({verify::section3_sqrt_minus_one()}); });

    criterion(4, "p = 2: sqrt(1+2^(1/2)) digits 1 at 0, 1/4, 5/8, 13/16, 15/16 and 0 at 1", 10,
              [] { return from_reports({verify::section3_radicals()}); });

    criterion(5, "certificates can(pi) = -pi mod pi^(n+1) for p = 2, n <= 3 and p = 3, n <= 2", 300, [] {
        Outcome o{true, ""};
        for (auto [p, n] : std::vector<std::pair<long, int>>{{2, 1}, {2, 2}, {2, 3}, {3, 1}, {3, 2}}) {
            auto cert = verify::certify_can(p, n);
            std::string why;
            bool ok = cert.ok && verify::validate_certificate(verify::json::parse(cert.body.dump()), &why);
            if (ok && p == 2 && n == 2) ok = cert.body.contains("remark");
            o.pass = o.pass && ok;
            o.detail += (o.detail.empty() ? "" : ", ") + std::string("(") + std::to_string(p) + "," +
                        std::to_string(n) + ") " +
                        (cert.ok ? cert.body["method"].get<std::string>() + " v " + cert.body["v_gn"].get<std::string>()
                                 : "none: " + cert.failure) +
                        (ok ? "" : " INVALID " + why);
        }
        return o;
    });

    criterion(6, "characteristic p: y_n roots of g_n, f(y_n) = y_(n-1), leading exponents, q in {2,3,4}, n <= 4", 30,
              [] {
                  return from_reports(
                      {verify::char_p_roots(2, 4), verify::char_p_roots(3, 4), verify::char_p_roots(4, 4)});
              });

    criterion(7, "v(g_m(z_m)) > 1 in v(p) = 1 units for Q_2(2^(1/2)) and Q_3(3^(1/3))", 60, [] {
        return from_reports({verify::lemma72_check(TowerSpec::mixed(2, 1).radical(2)),
                             verify::lemma72_check(TowerSpec::mixed(3, 1).radical(3))});
    });

    criterion(8, "Witt vectors: tower backend equals universal polynomials, n <= 3, 500 pairs; integrality", 60, [] {
        std::mt19937_64 rng(8);
        long checked = 0, bad = 0;
        bool integral = true;
        for (auto cfg : {WittConfig{2, 2, 1}, WittConfig{3, 3, 1}, WittConfig{2, 2, 2}, WittConfig{4, 2, 2}}) {
            auto F = FqField::make(cfg.p, cfg.field_degree);
            for (int n = 1; n <= 3; ++n) {
                for (auto op : {witt::Op::Add, witt::Op::Mul})
                    for (const auto& P : witt::universal_polys(n, op, cfg.q)) integral = integral && P.integral_at(cfg.p);
                for (int i = 0; i < 500; ++i) {
                    auto a = random_vec(F, cfg.q, n, rng), b = random_vec(F, cfg.q, n, rng);
                    bad += !(witt::add(a, b) == witt::add(a, b, witt::Backend::Universal));
                    bad += !(witt::mul(a, b) == witt::mul(a, b, witt::Backend::Universal));
                    checked += 2;
                }
            }
        }
        return Outcome{bad == 0 && integral, std::to_string(checked) + " comparisons over F_2, F_3, F_4 (q = 2, 4), " +
                                                 std::to_string(bad) + " mismatches, universal polynomials " +
                                                 (integral ? "integral" : "NOT integral")};
    });

    criterion(9, "ghost homomorphism, Teichmuller multiplicativity, psi, norm containment: 100 samples each", 120, [] {
        std::mt19937_64 rng(9);
        int ghost_bad = 0, teich_bad = 0, psi_bad = 0;
        // Ghost map on lifted coordinates.
        {
            const int n = 3;
            auto F = FqField::make(2, 2);
            auto T = witt::tower_for(2, 2, 1, 12);
            LocalElem pi = T->from_int(2);
            const auto& S = witt::universal_polys(n, witt::Op::Add, 2);
            const auto& P = witt::universal_polys(n, witt::Op::Mul, 2);
            for (int i = 0; i < 100; ++i) {
                auto a = random_vec(F, 2, n, rng), b = random_vec(F, 2, n, rng);
                std::vector<LocalElem> xa, xb, s, m;
                for (int k = 0; k < n; ++k) {
                    xa.push_back(T->teichmuller(a.x[k]));
                    xb.push_back(T->teichmuller(b.x[k]));
                }
                for (int k = 0; k < n; ++k) {
                    s.push_back(witt::eval_tower(S[k], xa, xb));
                    m.push_back(witt::eval_tower(P[k], xa, xb));
                }
                auto ga = witt::ghost(xa, 2, pi), gb = witt::ghost(xb, 2, pi);
                auto gs = witt::ghost(s, 2, pi), gm = witt::ghost(m, 2, pi);
                for (int k = 0; k < n; ++k)
                    ghost_bad += !gs[k].equals(ga[k] + gb[k]) || !gm[k].equals(ga[k] * gb[k]);
            }
        }
        // Teichmuller lifts in the unramified tower of degree 2 over Q_3.
        {
            auto T = LocalTower::build(TowerSpec::mixed(3, 6).unramified(2));
            const auto& F = T->residue_field();
            std::uniform_int_distribution<std::uint32_t> d(0, F->size() - 1);
            for (int i = 0; i < 100; ++i) {
                auto a = F->element_at(d(rng)), b = F->element_at(d(rng));
                teich_bad += !(T->teichmuller(a) * T->teichmuller(b)).equals(T->teichmuller(a * b));
            }
        }
        // psi: HW_(K,pi) -> HW_(K',pi^(1/2)) is a ring map commuting with Frobenius.
        {
            auto src = HWContext::mixed(2, 2, 6, 2);
            auto dst = src->rescaled_target(2);
            for (int i = 0; i < 100; ++i) {
                auto x = random_hw(src, rng, 4), y = random_hw(src, rng, 4);
                auto rx = hw_rescale(x, dst, 2), ry = hw_rescale(y, dst, 2);
                psi_bad += !hw_rescale(x + y, dst, 2).equals(rx + ry) || !hw_rescale(x * y, dst, 2).equals(rx * ry) ||
                           !hw_rescale(hw_frobenius(x), dst, 2).equals(hw_frobenius(rx));
            }
        }
        auto n1 = verify::norm_checks(TowerSpec::mixed(2, 1), 3, 4, 100, 9);
        auto n2 = verify::norm_checks(TowerSpec::mixed(3, 1).radical(3), 4, 6, 100, 9);
        bool pass = ghost_bad == 0 && teich_bad == 0 && psi_bad == 0 && n1.ok() && n2.ok();
        return Outcome{pass, "ghost " + std::to_string(ghost_bad) + ", Teichmuller " + std::to_string(teich_bad) +
                                 ", psi " + std::to_string(psi_bad) + " failures; norms " + (n1.ok() ? "ok" : "FAILED") +
                                 " / " + (n2.ok() ? "ok" : "FAILED")};
    });

    criterion(10, "Newton polygon of g_n: slope 1/(q^n - q^(n-1)) with full multiplicity, q in {2,3}, n <= 3", 60, [] {
        Outcome o{true, ""};
        for (long q : {2L, 3L}) {
            auto T = LocalTower::build(TowerSpec::mixed(q, 8));
            auto f = lt::model_poly(T, q, -1);
            for (int n = 1; n <= 3; ++n) {
                auto poly = lt::torsion_poly(f, n);
                auto np = newton_polygon(poly);
                long deg = Int(ipow(q, n) - ipow(q, n - 1)).get_si();
                bool ok = np.size() == 1 && np[0].first == frac(1, deg) && np[0].second == deg;
                o.pass = o.pass && ok;
                std::string got;
                for (const auto& [s, k] : np) got += (got.empty() ? "" : " ") + to_string(s) + "x" + std::to_string(k);
                o.detail += (o.detail.empty() ? "" : ", ") + std::string("q=") + std::to_string(q) +
                            " n=" + std::to_string(n) + ": " + got;
            }
        }
        return o;
    });

    criterion(11, "logarithm zeros: smallest positive valuation zero of truncated H (q = 2, pi = 2) has F_2 digits", 60,
              [] {
                  Outcome o{true, ""};
                  for (int D : {4, 8}) {
                      auto ctx = HWContext::mixed(2, 2, 16, 3);
                      auto H = lt::log_series(ctx->tower(), 2, D);
                      auto roots = hw_find_roots(ctx, H.scaled);
                      const HWRoot* best = nullptr;
                      Rat best_v;
                      for (const auto& r : roots) {
                          Val v = r.element(ctx).valuation();
                          if (!v.exact || v.value <= 0) continue;
                          if (!best || v.value < best_v) best = &r, best_v = v.value;
                      }
                      if (!best) {
                          o.pass = false;
                          o.detail += "D=" + std::to_string(D) + ": no nonzero zero; ";
                          continue;
                      }
                      auto ex = best->element(ctx).expansion();
                      bool in_f2 = !ex.digits.empty();
                      for (const auto& [e, c] : ex.digits) in_f2 = in_f2 && ctx->residue_field()->in_subfield(c, 1);
                      o.pass = o.pass && in_f2;
                      o.detail += (o.detail.empty() ? "" : "; ") + std::string("D=") + std::to_string(D) + ": v " +
                                  to_string(best_v) + ", " + ex.str() + (in_f2 ? "" : " NOT in F_2");
                  }
                  return o;
              });

    std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << std::endl;
    return failures ? 1 : 0;
}
