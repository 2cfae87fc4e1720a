// hwseries: command-line front end for Hahn-Witt arithmetic, root finding,
// Witt vectors, Lubin-Tate series and the verification suite.
//
// Exit codes: 0 success, 1 verification failure, 2 usage error, 3 budget exhausted.

#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "hw/errors.hpp"
#include "hw/hahn_witt.hpp"
#include "hw/kernels.hpp"
#include "hw/lubin_tate.hpp"
#include "hw/verify.hpp"
#include "hw/witt.hpp"

using namespace hw;
using nlohmann::json;

namespace {

constexpr int kOk = 0, kFailed = 1, kUsage = 2, kBudget = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    long p = 0;
    long q = 0;
    int m = 1;
    int denom = 1;
    std::string prec = "4";
    std::string tower;
    bool json = false;
    int threads = 0;
};

std::vector<std::string> split(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

std::string read_text(const std::string& arg) {
    if (!arg.empty() && (arg.front() == '{' || arg.front() == '[')) return arg;
    std::ifstream in(arg);
    if (!in) throw UsageError("cannot read " + arg);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

long tower_prec(const Options& o) { return Int(ceil(parse_rat(o.prec))).get_si() + 2; }

TowerSpec k_spec(const Options& o) {
    if (!o.tower.empty()) {
        TowerSpec s = TowerSpec::from_json(read_text(o.tower));
        if (s.prec <= 0) s.prec = tower_prec(o);
        return s;
    }
    if (o.p && o.q) throw UsageError("give --p (mixed characteristic) or --q (equal characteristic), not both");
    if (o.p) return TowerSpec::mixed(o.p, tower_prec(o));
    if (o.q) return TowerSpec::equal(o.q, tower_prec(o));
    throw UsageError("a field is needed: --p, --q or --tower");
}

HWContextPtr hw_context(const Options& o) { return HWContext::make(k_spec(o), o.m, o.denom, parse_rat(o.prec)); }

// q = p^f.
std::pair<long, int> prime_power(long q) {
    if (q < 2) throw UsageError("q must be a prime power");
    long p = 2;
    while (q % p) ++p;
    int f = 0;
    for (long r = q; r > 1; r /= p, ++f)
        if (r % p) throw UsageError("q must be a prime power");
    return {p, f};
}

void emit(const Options& o, const json& j, const std::string& text) {
    if (o.json)
        std::cout << j.dump(2) << "\n";
    else
        std::cout << text;
}

int emit_report(const Options& o, const verify::Report& r) {
    emit(o, r.to_json(), r.text());
    return r.ok() ? kOk : kFailed;
}

// --- expand / roots ---------------------------------------------------------

int run_expand(const Options& o, const std::string& text) {
    auto ctx = hw_context(o);
    HWElem x = hw_parse(ctx, text);
    emit(o, json::parse(x.to_json()), x.str() + "\n");
    return kOk;
}

int run_roots(const Options& o, const std::vector<std::string>& coeffs, const std::string& target) {
    if (coeffs.size() < 2) throw UsageError("a polynomial needs at least two coefficients (lowest degree first)");
    auto ctx = hw_context(o);
    std::vector<LocalElem> poly;
    for (const auto& c : coeffs) poly.push_back(hw_parse(ctx, c).mirror());
    RootOptions opt;
    if (!target.empty()) opt.target = parse_rat(target);
    auto roots = hw_find_roots(ctx, poly, opt);
    json arr = json::array();
    std::ostringstream os;
    os << ctx->describe() << ": " << roots.size() << " root cluster(s)\n";
    for (std::size_t i = 0; i < roots.size(); ++i) {
        const auto& r = roots[i];
        HWElem e = r.element(ctx);
        arr.push_back({{"digits", json::parse(e.to_json())},
                       {"agreement", to_string(r.agreement)},
                       {"complete", r.complete},
                       {"cluster", r.cluster},
                       {"residual", r.residual.str()}});
        os << "  [" << i << "] " << e.str() << "  agreement " << to_string(r.agreement)
           << (r.complete ? "" : " (partial)") << (r.cluster > 1 ? ", cluster " + std::to_string(r.cluster) : "")
           << "\n";
    }
    emit(o, {{"context", ctx->describe()}, {"roots", arr}}, os.str());
    return kOk;
}

// --- witt -------------------------------------------------------------------

witt::Op parse_op(const std::string& s) {
    if (s == "add") return witt::Op::Add;
    if (s == "mul") return witt::Op::Mul;
    throw UsageError("--op must be add or mul");
}

int run_witt_universal(const Options& o, int n, const std::string& op) {
    if (!o.q) throw UsageError("--q is required");
    const auto& polys = witt::universal_polys(n, parse_op(op), o.q);
    json arr = json::array();
    std::ostringstream os;
    auto [p, f] = prime_power(o.q);
    (void)f;
    bool integral = true;
    for (std::size_t i = 0; i < polys.size(); ++i) {
        arr.push_back(polys[i].str());
        integral = integral && polys[i].integral_at(p);
        os << "S_" << i << " = " << polys[i].str() << "\n";
    }
    emit(o, {{"op", op}, {"q", o.q}, {"n", n}, {"polys", arr}, {"integral", integral}}, os.str());
    return integral ? kOk : kFailed;
}

int run_witt_arith(const Options& o, bool is_mul, const std::string& xs, const std::string& ys,
                   const std::string& backend) {
    if (!o.q) throw UsageError("--q is required");
    auto [p, f] = prime_power(o.q);
    auto F = FqField::make(p, f * o.m);
    auto vec = [&](const std::string& s) {
        witt::WittVec w{F, o.q, {}};
        for (const auto& c : split(s)) w.x.push_back(F->parse(c));
        return w;
    };
    auto a = vec(xs), b = vec(ys);
    if (a.length() != b.length()) throw UsageError("--x and --y need the same length");
    witt::Backend be;
    if (backend == "tower")
        be = witt::Backend::Tower;
    else if (backend == "universal")
        be = witt::Backend::Universal;
    else
        throw UsageError("--backend must be tower or universal");
    auto r = is_mul ? witt::mul(a, b, be) : witt::add(a, b, be);
    json arr = json::array();
    for (const auto& c : r.x) arr.push_back(F->to_string(c));
    emit(o, {{"op", is_mul ? "mul" : "add"}, {"q", o.q}, {"field", "F_" + std::to_string(F->size())}, {"result", arr}},
         r.str() + "\n");
    return kOk;
}

int run_witt_ghost(const Options& o, const std::string& xs, const std::string& pi) {
    if (!o.q) throw UsageError("--q is required");
    auto [p, f] = prime_power(o.q);
    (void)f;
    std::vector<Int> x;
    for (const auto& c : split(xs)) x.emplace_back(c);
    Int piv = pi.empty() ? Int(p) : Int(pi);
    auto g = witt::ghost(x, o.q, piv);
    json arr = json::array();
    std::string text;
    for (std::size_t i = 0; i < g.size(); ++i) {
        arr.push_back(g[i].get_str());
        text += "w_" + std::to_string(i) + " = " + g[i].get_str() + "\n";
    }
    emit(o, {{"q", o.q}, {"pi", piv.get_str()}, {"ghost", arr}}, text);
    return kOk;
}

// --- lt ---------------------------------------------------------------------

struct LtArgs {
    std::string model = "minus";
    int degree = 4;
    std::string r;
    int n = 1;
};

TowerPtr lt_tower(const Options& o) {
    TowerSpec s = k_spec(o);
    return LocalTower::build(s);
}

long lt_q(const TowerPtr& K) { return K->q().get_si(); }

// Polynomial model f with f = pi X + X^q mod pi X^2 (up to the sign of pi).
std::vector<LocalElem> lt_model(const TowerPtr& K, const std::string& model) {
    long q = lt_q(K);
    if (model == "plus") return lt::model_poly(K, q, 1);
    if (model == "minus") return lt::model_poly(K, q, -1);
    if (model == "mult") {
        if (K->equal_char() || !K->spec().stages.empty()) throw UsageError("the multiplicative model needs K = Q_p");
        std::vector<LocalElem> f(static_cast<std::size_t>(q + 1), K->zero());
        Int binom = 1;
        for (long i = 1; i <= q; ++i) {
            binom = binom * (q - i + 1) / i;
            f[static_cast<std::size_t>(i)] = K->from_int(binom);
        }
        return f;
    }
    throw UsageError("--model must be plus, minus or mult");
}

std::string render_law(const lt::Series2& F) {
    std::ostringstream os;
    bool first = true;
    for (int t = 1; t <= F.degree(); ++t)
        for (int i = t; i >= 0; --i) {
            int j = t - i;
            const auto& c = F.at(i, j);
            if (c.is_zero()) continue;
            os << (first ? "" : " + ") << "(" << c.str() << ")";
            if (i) os << "*X" << (i > 1 ? "^" + std::to_string(i) : "");
            if (j) os << "*Y" << (j > 1 ? "^" + std::to_string(j) : "");
            first = false;
        }
    if (first) os << "0";
    os << " + O(deg " << F.degree() + 1 << ")";
    return os.str();
}

json series_json(const lt::Series1& s) {
    json arr = json::array();
    for (const auto& c : s) arr.push_back(c.str());
    return arr;
}

int run_lt(const Options& o, const std::string& what, const LtArgs& a) {
    auto K = lt_tower(o);
    auto f = lt_model(K, a.model);
    json j = {{"K", K->spec().describe()}, {"model", a.model}, {"f", series_json(f)}};
    std::string text;
    if (what == "group-law") {
        auto G = lt::FormalGroup::make(K, lt::truncate(f, K, a.degree), a.degree);
        json law = json::array();
        for (int t = 1; t <= a.degree; ++t)
            for (int i = t; i >= 0; --i)
                if (!G->law().at(i, t - i).is_zero())
                    law.push_back({{"i", i}, {"j", t - i}, {"coeff", G->law().at(i, t - i).str()}});
        j["degree"] = a.degree;
        j["law"] = law;
        text = "F(X,Y) = " + render_law(G->law()) + "\n";
    } else if (what == "scalar") {
        if (a.r.empty()) throw UsageError("--r is required");
        auto G = lt::FormalGroup::make(K, lt::truncate(f, K, a.degree), a.degree);
        const auto& s = G->scalar(K->parse(a.r));
        j["r"] = a.r;
        j["degree"] = a.degree;
        j["series"] = series_json(s);
        text = "[" + a.r + "]_F = " + lt::render(s) + "\n";
    } else if (what == "g") {
        auto g = lt::torsion_poly(f, a.n);
        j["n"] = a.n;
        j["g"] = series_json(g);
        text = "g_" + std::to_string(a.n) + " = " + lt::render(g) + "\n";
    } else if (what == "log") {
        auto H = lt::log_series(K, lt_q(K), a.degree);
        j["degree"] = a.degree;
        j["k_max"] = H.k_max;
        j["scaled"] = series_json(H.scaled);
        text = "H(x) = " + H.str() + "\npi^" + std::to_string(H.k_max) + " H = " + lt::render(H.scaled) + "\n";
    } else {
        throw UsageError("unknown lt computation " + what);
    }
    emit(o, j, text);
    return kOk;
}

// --- certify-can / reproduce --------------------------------------------------

int run_certify(const Options& o, int n, const std::string& check) {
    if (!check.empty()) {
        json cert = json::parse(read_text(check));
        std::string detail;
        bool ok = verify::validate_certificate(cert, &detail);
        emit(o, {{"valid", ok}, {"detail", detail}}, std::string(ok ? "valid: " : "invalid: ") + detail + "\n");
        return ok ? kOk : kFailed;
    }
    auto budget = verify::Budget::from_env();
    auto cert = verify::certify_can(k_spec(o), n, budget);
    if (!cert.ok) {
        emit(o, {{"ok", false}, {"failure", cert.failure}}, "no certificate: " + cert.failure + "\n");
        return cert.failure.find("budget") != std::string::npos ? kBudget : kFailed;
    }
    const auto& b = cert.body;
    std::ostringstream os;
    os << "K = " << b["K"].get<std::string>() << ", pi = " << b["pi"].get<std::string>() << ", q = " << b["q"] << "\n"
       << "method: " << b["method"].get<std::string>() << "\n"
       << "v(g_n(y)) " << b["v_gn"].get<std::string>() << " > n = " << n << "\n"
       << "conclusion: " << b["conclusion"].get<std::string>() << "\n";
    if (b.contains("u_p")) os << "            " << b["u_p"].get<std::string>() << "\n";
    emit(o, b, os.str());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hahn-Witt series, Lubin-Tate torsion and canonical-uniformizer certificates"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--p", o.p, "residue characteristic, K = Q_p");
    app.add_option("--q", o.q, "residue cardinality (equal characteristic K = F_q((t)), or Witt vectors)");
    app.add_option("--m", o.m, "degree of the residue field over F_q")->check(CLI::PositiveNumber);
    app.add_option("--denom", o.denom, "exponent denominator d")->check(CLI::PositiveNumber);
    app.add_option("--prec", o.prec, "precision N (rational, K-normalized)");
    app.add_option("--tower", o.tower, "K as tower JSON (inline or a file)");
    app.add_flag("--json", o.json, "machine-readable output");
    app.add_option("--threads", o.threads, "worker threads (1 = serial kernels)")->check(CLI::NonNegativeNumber);

    std::function<int()> action;

    auto* expand = app.add_subcommand("expand", "normalize an expression to its digit expansion");
    std::string expr;
    expand->add_option("expr", expr, "expression in p, t, pi, pi^(a/b), [x]")->required();
    expand->callback([&] { action = [&] { return run_expand(o, expr); }; });

    auto* roots = app.add_subcommand("roots", "roots of a polynomial (coefficients lowest degree first)");
    std::vector<std::string> coeffs;
    std::string target;
    roots->add_option("coeffs", coeffs, "coefficients as expressions")->required();
    roots->add_option("--target", target, "requested precision");
    roots->callback([&] { action = [&] { return run_roots(o, coeffs, target); }; });

    auto* witt_cmd = app.add_subcommand("witt", "Witt vector arithmetic");
    witt_cmd->require_subcommand(1);
    int witt_n = 2;
    std::string op = "add", xs, ys, backend = "tower", pi;
    auto* wu = witt_cmd->add_subcommand("universal", "universal addition or multiplication polynomials");
    wu->add_option("--n", witt_n, "length")->check(CLI::PositiveNumber);
    wu->add_option("--op", op, "add or mul");
    wu->callback([&] { action = [&] { return run_witt_universal(o, witt_n, op); }; });
    for (const char* name : {"add", "mul"}) {
        auto* w = witt_cmd->add_subcommand(name, std::string("Witt vector ") + name);
        w->add_option("--x", xs, "comma-separated coordinates")->required();
        w->add_option("--y", ys, "comma-separated coordinates")->required();
        w->add_option("--backend", backend, "tower or universal");
        bool is_mul = std::string(name) == "mul";
        w->callback([&, is_mul] { action = [&, is_mul] { return run_witt_arith(o, is_mul, xs, ys, backend); }; });
    }
    auto* wg = witt_cmd->add_subcommand("ghost", "ghost coordinates of an integer vector");
    wg->add_option("--x", xs, "comma-separated integers")->required();
    wg->add_option("--pi", pi, "uniformizer (default p)");
    wg->callback([&] { action = [&] { return run_witt_ghost(o, xs, pi); }; });

    auto* lt_cmd = app.add_subcommand("lt", "Lubin-Tate series");
    lt_cmd->require_subcommand(1);
    LtArgs lt_args;
    for (const char* name : {"group-law", "scalar", "g", "log"}) {
        auto* s = lt_cmd->add_subcommand(name);
        s->add_option("--model", lt_args.model, "plus (X^q + pi X), minus (X^q - pi X) or mult ((1+X)^p - 1)");
        s->add_option("--degree", lt_args.degree, "truncation degree")->check(CLI::PositiveNumber);
        s->add_option("--r", lt_args.r, "scalar r in O_K");
        s->add_option("--n", lt_args.n, "torsion level")->check(CLI::PositiveNumber);
        std::string what = name;
        s->callback([&, what] { action = [&, what] { return run_lt(o, what, lt_args); }; });
    }

    auto* cert_cmd = app.add_subcommand("certify-can", "certificate for can_K(pi) = -pi mod pi^{n+1}");
    int cert_n = 1;
    std::string check;
    cert_cmd->add_option("--n", cert_n, "congruence level")->check(CLI::PositiveNumber);
    cert_cmd->add_option("--check", check, "re-validate a certificate (inline JSON or a file) instead");
    cert_cmd->callback([&] { action = [&] { return run_certify(o, cert_n, check); }; });

    auto* rep = app.add_subcommand("reproduce", "verification reports");
    rep->require_subcommand(1);
    auto* s3 = rep->add_subcommand("section3", "roots of unity and radical expansions");
    s3->callback([&] {
        action = [&] {
            if (!o.p) throw UsageError("--p is required");
            return emit_report(o, verify::reproduce_section3(o.p, verify::Budget::from_env()));
        };
    });
    int cp_n = 4;
    auto* cp = rep->add_subcommand("char-p", "torsion roots in equal characteristic");
    cp->add_option("--n", cp_n, "largest level")->check(CLI::PositiveNumber);
    cp->callback([&] {
        action = [&] {
            if (!o.q) throw UsageError("--q is required");
            return emit_report(o, verify::char_p_roots(o.q, cp_n, verify::Budget::from_env()));
        };
    });
    int l72_m = 2;
    bool frob = false;
    auto* zm = rep->add_subcommand("lemma72", "z_m check for K = Q_p(p^(1/m)) or --tower");
    zm->add_option("--e", l72_m, "ramification index m of K over Q_p")->check(CLI::PositiveNumber);
    zm->add_flag("--frobenius", frob, "evaluate q-th powers digitwise");
    zm->callback([&] {
        action = [&] {
            TowerSpec K = o.tower.empty() ? TowerSpec::mixed(o.p ? o.p : 2, 1) : k_spec(o);
            if (o.tower.empty() && l72_m > 1) K.radical(l72_m);
            return emit_report(o, verify::lemma72_check(K, !frob));
        };
    });
    long nn = 2, kk = 3;
    int samples = 100;
    std::uint64_t seed = 1;
    auto* nc = rep->add_subcommand("norms", "norm containment from K(pi^(1/p))");
    nc->add_option("--n", nn, "target level n")->check(CLI::PositiveNumber);
    nc->add_option("--k", kk, "source level k")->check(CLI::PositiveNumber);
    nc->add_option("--samples", samples, "random samples")->check(CLI::NonNegativeNumber);
    nc->add_option("--seed", seed, "random seed");
    nc->callback([&] { action = [&] { return emit_report(o, verify::norm_checks(k_spec(o), nn, kk, samples, seed)); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }
    if (o.threads) kernels::set_threads(o.threads);
    try {
        return action ? action() : kUsage;
    } catch (const BudgetError& e) {
        std::cerr << "budget exhausted: " << e.what() << "\n";
        return kBudget;
    } catch (const VerificationError& e) {
        std::cerr << "verification failed: " << e.what() << "\n";
        return kFailed;
    } catch (const UsageError& e) {
        std::cerr << "usage: " << e.what() << "\n";
        return kUsage;
    } catch (const DomainError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kUsage;
    } catch (const json::exception& e) {
        std::cerr << "invalid JSON: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailed;
    }
}
