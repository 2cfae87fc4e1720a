#include "hw/hahn_witt.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

#include "hw/errors.hpp"
#include "hw/expr.hpp"

namespace hw {

// ---------------------------------------------------------------- context

HWContextPtr HWContext::make(const TowerSpec& k_spec, int m, int d, const Rat& N, long base_prec) {
    if (m < 1) throw DomainError("residue degree m must be >= 1");
    if (d < 1) throw DomainError("denominator budget d must be >= 1");
    if (N <= 0) throw DomainError("precision N must be positive");
    TowerSpec ks = k_spec;
    ks.k_level = -1;
    int eK = 1;
    for (const auto& st : ks.stages)
        if (!st.unramified) eK *= st.degree;
    // N is K-normalized; the base measures v(p) (or v(t)) = 1.
    long need = static_cast<long>(Int(ceil(N / eK)).get_si());
    if (base_prec == 0) base_prec = need + 2;
    if (base_prec < need) throw DomainError("base precision too small for the requested cap");
    ks.prec = base_prec;

    auto ctx = std::shared_ptr<HWContext>(new HWContext());
    ctx->k_spec_ = ks;
    ctx->m_ = m;
    ctx->d_ = d;
    ctx->N_ = N;
    ctx->K_ = LocalTower::build(ks);
    TowerSpec ls = ks;
    int kst = static_cast<int>(ks.stages.size());
    if (m > 1) ls.unramified(m);
    if (d > 1) ls.radical(d);
    ls.designate_k(kst);
    ctx->L_ = LocalTower::build(ls);
    return ctx;
}

HWContextPtr HWContext::mixed(long p, int m, int d, const Rat& N) {
    return make(TowerSpec::mixed(p, 1), m, d, N);
}

HWContextPtr HWContext::equal(long q, int m, int d, const Rat& N) {
    return make(TowerSpec::equal(q, 1), m, d, N);
}

HWContextPtr HWContext::rescaled_target(int n) const {
    if (n < 1 || d_ % n != 0) throw DomainError("rescaling degree must divide the denominator budget");
    TowerSpec ks = k_spec_;
    ks.radical(n);
    return make(ks, m_, d_ / n, N_ * n, k_spec_.prec);
}

std::string HWContext::describe() const {
    std::ostringstream os;
    os << "HW(" << k_spec_.describe() << ", F_" << L_->residue_field()->size() << ") d=" << d_ << " N=" << to_string(N_);
    return os.str();
}

// ---------------------------------------------------------------- expansion

FqElem Expansion::digit_at(const Rat& e, const FqFieldPtr& F) const {
    for (const auto& [x, a] : digits)
        if (x == e) return a;
    if (e >= cap) throw BudgetError("digit at exponent " + to_string(e) + " lies beyond the cap " + to_string(cap));
    return F->zero();
}

std::string Expansion::str() const {
    std::ostringstream os;
    for (const auto& [e, a] : digits) os << "[" << a.str() << "]*pi^(" << to_string(e) << ") + ";
    os << "O(pi^(" << to_string(cap) << "))";
    return os.str();
}

HahnSeries<FqRing> Expansion::as_series(const FqFieldPtr& F) const {
    auto R = std::make_shared<const FqRing>(F);
    std::vector<HahnSeries<FqRing>::Term> t(digits.begin(), digits.end());
    return HahnSeries<FqRing>::from_terms(R, t, cap);
}

bool digit_less(const Expansion& a, const Expansion& b) {
    std::size_t i = 0, j = 0;
    while (i < a.digits.size() || j < b.digits.size()) {
        if (j == b.digits.size()) return false;
        if (i == a.digits.size()) return true;
        const auto& [ea, da] = a.digits[i];
        const auto& [eb, db] = b.digits[j];
        // An absent digit is 0, the smallest element.
        if (ea < eb) return false;
        if (eb < ea) return true;
        if (da != db) return da < db;
        ++i;
        ++j;
    }
    return false;
}

// ---------------------------------------------------------------- elements

HWElem::HWElem(HWContextPtr ctx, LocalElem mirror) : ctx_(std::move(ctx)), x_(std::move(mirror)) {
    if (x_.tower() != ctx_->tower()) throw DomainError("element does not belong to the context's working tower");
    x_ = x_.with_cap(ctx_->cap_abs());
}

const Expansion& HWElem::expansion() const {
    if (!exp_) {
        auto e = std::make_shared<Expansion>();
        const auto& L = ctx_->tower();
        for (const auto& [k, a] : L->digits(x_)) e->digits.emplace_back(frac(k * L->e_K(), Int(L->E())), a);
        e->cap = x_.cap();
        exp_ = e;
    }
    return *exp_;
}

namespace {

void same_context(const HWElem& a, const HWElem& b) {
    if (a.context() != b.context()) throw DomainError("Hahn-Witt elements from different contexts");
}

long exponent_units(const HWContextPtr& ctx, const Rat& e) {
    Rat k = e * ctx->d();
    if (k.get_den() != 1) throw DomainError("exponent " + to_string(e) + " is outside (1/" + std::to_string(ctx->d()) + ")Z");
    if (k < 0) throw DomainError("negative exponent " + to_string(e));
    return k.get_num().get_si();
}

}  // namespace

HWElem HWElem::operator+(const HWElem& b) const { same_context(*this, b); return {ctx_, x_ + b.x_}; }
HWElem HWElem::operator-(const HWElem& b) const { same_context(*this, b); return {ctx_, x_ - b.x_}; }
HWElem HWElem::operator-() const { return {ctx_, -x_}; }
HWElem HWElem::operator*(const HWElem& b) const { same_context(*this, b); return {ctx_, x_ * b.x_}; }
HWElem HWElem::pow(unsigned long e) const { return {ctx_, x_.pow(e)}; }
Val HWElem::valuation() const { return x_.valuation(); }

std::string HWElem::to_json() const {
    nlohmann::ordered_json j;
    j["q"] = ctx_->q().get_str();
    j["m"] = ctx_->m();
    j["d"] = ctx_->d();
    j["prec"] = to_string(cap());
    auto arr = nlohmann::ordered_json::array();
    for (const auto& [e, a] : expansion().digits) arr.push_back({{"exp", to_string(e)}, {"coeff", a.str()}});
    j["digits"] = arr;
    // q is numeric in the exchange format when it fits.
    if (ctx_->q().fits_slong_p()) j["q"] = ctx_->q().get_si();
    return j.dump();
}

HWElem hw_normalize(const HWContextPtr& ctx, const LocalElem& x) {
    HWElem r(ctx, x);
    r.expansion();
    return r;
}

HWElem hw_from_digits(const HWContextPtr& ctx, const std::vector<std::pair<Rat, FqElem>>& digits) {
    const auto& L = ctx->tower();
    LocalElem acc = L->zero();
    for (const auto& [e, a] : digits) {
        long k = exponent_units(ctx, e);
        if (a.field_ptr() != L->residue_field().get()) throw DomainError("digit from a different residue field");
        if (!a.is_zero()) acc += L->teichmuller(a).mul_unif(k);
    }
    return {ctx, acc};
}

HWElem hw_from_int(const HWContextPtr& ctx, const Int& v) { return {ctx, ctx->tower()->from_int(v)}; }

HWElem hw_pi_power(const HWContextPtr& ctx, const Rat& e) {
    return {ctx, ctx->tower()->one().mul_unif(exponent_units(ctx, e))};
}

namespace {

LocalElem parse_node(const HWContextPtr& ctx, const expr::Node& n) {
    using K = expr::Node::Kind;
    const auto& L = ctx->tower();
    if (n.kind == K::Pow && n.kids[0]->kind == K::Sym && n.kids[0]->name == "pi")
        return hw_pi_power(ctx, n.exponent).mirror();
    switch (n.kind) {
        case K::Neg: return -parse_node(ctx, *n.kids[0]);
        case K::Add: return parse_node(ctx, *n.kids[0]) + parse_node(ctx, *n.kids[1]);
        case K::Sub: return parse_node(ctx, *n.kids[0]) - parse_node(ctx, *n.kids[1]);
        case K::Mul: return parse_node(ctx, *n.kids[0]) * parse_node(ctx, *n.kids[1]);
        case K::Div: return parse_node(ctx, *n.kids[0]).div_exact(parse_node(ctx, *n.kids[1]));
        case K::Pow: {
            if (n.exponent.get_den() != 1 || n.exponent < 0)
                throw DomainError("only pi admits fractional or negative powers here");
            return parse_node(ctx, *n.kids[0]).pow(n.exponent.get_num().get_ui());
        }
        default: return L->parse(expr::render(n));
    }
}

}  // namespace

HWElem hw_parse(const HWContextPtr& ctx, const std::string& text) {
    return {ctx, parse_node(ctx, *expr::parse(text))};
}

std::pair<HWElem, long> hw_inv(const HWElem& x) {
    auto v = x.mirror().valuation_abs();
    if (!v.exact) throw DomainError("inverse of an element indistinguishable from 0 at the cap");
    const auto& L = x.context()->tower();
    long k = Rat(v.value * L->E()).get_num().get_si();
    LocalElem u = x.mirror().div_unif(k);
    return {HWElem(x.context(), u.inv()), k};
}

HWElem hw_div(const HWElem& a, const HWElem& b) {
    same_context(a, b);
    return {a.context(), a.mirror().div_exact(b.mirror())};
}

Val hw_val(const HWElem& x) { return x.valuation(); }

HWElem hw_frobenius_tower(const HWElem& x) {
    const auto& L = x.context()->tower();
    if (!L->frob_available()) throw DomainError("Frobenius lift unavailable on this tower");
    return {x.context(), L->frob_lift(x.mirror())};
}

HWElem hw_frobenius(const HWElem& x) {
    const auto& ctx = x.context();
    const auto& F = ctx->residue_field();
    int fK = ctx->f_K();
    std::vector<std::pair<Rat, FqElem>> out;
    for (const auto& [e, a] : x.expansion().digits) out.emplace_back(e, F->frobenius(a, 1, fK));
    HWElem r = hw_from_digits(ctx, out);
    r = HWElem(ctx, r.mirror().with_cap(x.mirror().cap_abs()));
#ifndef NDEBUG
    if (ctx->tower()->frob_available() && !r.equals(hw_frobenius_tower(x)))
        throw VerificationError("digit-wise Frobenius disagrees with the tower Frobenius");
#endif
    return r;
}

bool hw_in_subfield(const HWElem& x, int m_sub) {
    const auto& ctx = x.context();
    if (m_sub < 1 || ctx->m() % m_sub != 0) throw DomainError("subfield degree must divide m");
    const auto& F = ctx->residue_field();
    for (const auto& [e, a] : x.expansion().digits)
        if (!F->in_subfield(a, m_sub * ctx->f_K())) return false;
    return true;
}

HWElem hw_rescale(const HWElem& x, const HWContextPtr& target, int n) {
    const auto& src = x.context();
    TowerSpec expect = src->k_spec();
    expect.radical(n);
    TowerSpec got = target->k_spec();
    expect.prec = got.prec = 0;
    expect.k_level = got.k_level = -1;
    if (expect.to_json() != got.to_json() || target->m() != src->m() || target->d() * n != src->d())
        throw DomainError("incompatible contexts for rescaling");
    if (target->residue_field() != src->residue_field()) throw DomainError("rescaling changes the residue field");
    std::vector<std::pair<Rat, FqElem>> out;
    for (const auto& [e, a] : x.expansion().digits) out.emplace_back(e * n, a);
    HWElem r = hw_from_digits(target, out);
    Rat cap = x.cap() * n;
    return {target, r.mirror().with_cap(cap / target->tower()->e_K())};
}

// ---------------------------------------------------------------- Newton polygon

std::vector<std::pair<Rat, long>> newton_polygon(const std::vector<PolyVal>& vals) {
    if (vals.empty() || !vals.back().value) throw DomainError("leading coefficient vanishes at the cap");
    if (!vals.front().value) throw DomainError("constant coefficient vanishes at the cap");
    std::vector<std::pair<long, Rat>> pts;
    for (std::size_t i = 0; i < vals.size(); ++i)
        if (vals[i].value) pts.emplace_back(static_cast<long>(i), *vals[i].value);
    // Lower convex hull, left to right; collinear points are dropped.
    std::vector<std::pair<long, Rat>> hull;
    for (const auto& pt : pts) {
        while (hull.size() >= 2) {
            const auto& a = hull[hull.size() - 2];
            const auto& b = hull.back();
            Rat cross = (b.second - a.second) * (pt.first - a.first) - (pt.second - a.second) * (b.first - a.first);
            if (cross >= 0) hull.pop_back();
            else break;
        }
        hull.push_back(pt);
    }
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (vals[i].value) continue;
        long ii = static_cast<long>(i);
        for (std::size_t h = 1; h < hull.size(); ++h) {
            if (hull[h].first < ii) continue;
            const auto& a = hull[h - 1];
            const auto& b = hull[h];
            Rat line = a.second + (b.second - a.second) * (ii - a.first) / (b.first - a.first);
            if (vals[i].cap < line)
                throw DomainError("coefficient " + std::to_string(i) + " is needed below its precision cap");
            break;
        }
    }
    std::vector<std::pair<Rat, long>> out;
    for (std::size_t h = hull.size(); h-- > 1;) {
        const auto& a = hull[h - 1];
        const auto& b = hull[h];
        out.emplace_back(Rat((a.second - b.second) / (b.first - a.first)), b.first - a.first);
    }
    return out;
}

namespace {

PolyVal poly_val(const LocalElem& c) {
    auto v = c.valuation();
    PolyVal pv;
    if (v.exact) pv.value = v.value;
    pv.cap = c.cap();
    return pv;
}

}  // namespace

std::vector<std::pair<Rat, long>> newton_polygon(const std::vector<LocalElem>& coeffs) {
    std::vector<PolyVal> vals;
    for (const auto& c : coeffs) vals.push_back(poly_val(c));
    return newton_polygon(vals);
}

// ---------------------------------------------------------------- polynomials

LocalElem poly_eval(const std::vector<LocalElem>& coeffs, const LocalElem& x) {
    if (coeffs.empty()) return x.tower()->zero();
    LocalElem acc = coeffs.back();
    for (std::size_t i = coeffs.size() - 1; i-- > 0;) acc = acc * x + coeffs[i];
    return acc;
}

std::vector<LocalElem> poly_derivative(const std::vector<LocalElem>& coeffs) {
    std::vector<LocalElem> out;
    for (std::size_t i = 1; i < coeffs.size(); ++i) out.push_back(coeffs[i].scaled(Int(static_cast<unsigned long>(i))));
    if (out.empty() && !coeffs.empty()) out.push_back(coeffs[0].tower()->zero());
    return out;
}

std::vector<LocalElem> taylor_shift(const std::vector<LocalElem>& coeffs, const LocalElem& a) {
    std::vector<LocalElem> b = coeffs;
    const std::size_t n = b.size();
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = n - 1; j-- > i;) b[j] += a * b[j + 1];
    return b;
}

// ---------------------------------------------------------------- root finding

namespace {

struct Finder {
    HWContextPtr ctx;
    const std::vector<LocalElem>& P;
    std::vector<LocalElem> dP;
    RootOptions opt;
    Rat target_units;  // in top-uniformizer units
    std::vector<HWRoot> out;

    Rat units(const Rat& abs) const { return abs * ctx->tower()->E(); }
    Rat knorm(const Rat& u) const { return u / ctx->d(); }

    void emit(const LocalElem& y, const Rat& agree_units, bool complete, int cluster) {
        HWRoot r;
        Rat a = std::min(agree_units, target_units);
        r.value = y.with_cap(a / ctx->tower()->E());
        r.agreement = knorm(a);
        r.complete = complete;
        r.cluster = cluster;
        r.residual = poly_eval(P, y).valuation();
        out.push_back(std::move(r));
    }

    // Newton iteration from y; returns the approximation and a lower bound on v(root - x) in units.
    std::pair<LocalElem, Rat> newton(LocalElem x) {
        Rat bound;
        for (int it = 0; it < 200; ++it) {
            LocalElem px = poly_eval(P, x), dx = poly_eval(dP, x);
            auto vp = px.valuation_abs(), vd = dx.valuation_abs();
            if (!vd.exact) throw BudgetError("derivative vanishes at the cap during Newton refinement");
            bound = units(vp.value - vd.value);
            if (!vp.exact || bound >= target_units) return {x, bound};
            LocalElem nx = x - px.div_exact(dx);
            if (nx.equals(x)) return {x, bound};
            x = nx;
        }
        throw BudgetError("Newton refinement did not converge");
    }

    void node(const LocalElem& y, const std::vector<LocalElem>& Q, std::optional<long> kmin, int mult) {
        const auto& L = ctx->tower();
        const std::size_t n = Q.size();
        std::vector<std::optional<Rat>> v(n);
        std::vector<Rat> caps(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto vi = Q[i].valuation_abs();
            if (vi.exact) v[i] = units(vi.value);
            caps[i] = units(Q[i].cap_abs());
        }
        std::size_t j0 = 0;
        while (j0 < n && !v[j0]) ++j0;
        if (j0 == n) throw BudgetError("polynomial vanishes at the cap");

        // Newton/Hensel criterion on a single-root cluster.
        if (mult == 1 && opt.newton && j0 == 0 && n > 1 && v[1] && *v[0] > 2 * *v[1]) {
            Rat dist = *v[0] - *v[1];
            if (!kmin || dist > *kmin) {
                auto [x, bound] = newton(y);
                emit(x, bound, bound >= target_units, 1);
                return;
            }
        }
        if (j0 >= 1) {
            if (j0 >= 2) {
                emit(y, caps[0], true, static_cast<int>(j0));
            } else {
                Rat a = caps[0] - (v[1] ? *v[1] : caps[1]);
                emit(y, a, a >= target_units, 1);
            }
        }
        std::vector<PolyVal> pv;
        for (std::size_t i = j0; i < n; ++i) pv.push_back({v[i], caps[i]});
        if (pv.size() < 2) return;
        auto segs = newton_polygon(pv);
        for (const auto& [s, len] : segs) {
            if (kmin ? s <= *kmin : s < 0) continue;
            if (s >= target_units) {
                emit(y, target_units, true, static_cast<int>(len));
                continue;
            }
            if (s.get_den() != 1) {
                if (!opt.allow_partial)
                    throw DomainError("slope " + to_string(knorm(s)) + " needs a denominator beyond d = " + std::to_string(ctx->d()));
                emit(y, s, false, static_cast<int>(len));
                continue;
            }
            long k = s.get_num().get_si();
            // Residual polynomial on the segment.
            std::optional<Rat> V;
            for (std::size_t i = j0; i < n; ++i)
                if (v[i]) {
                    Rat w = *v[i] + Rat(static_cast<long>(i)) * k;
                    if (!V || w < *V) V = w;
                }
            std::vector<FqElem> R;
            long start = -1;
            for (std::size_t i = j0; i < n; ++i) {
                if (!v[i] || *v[i] + Rat(static_cast<long>(i)) * k != *V) continue;
                if (start < 0) start = static_cast<long>(i);
                R.resize(i - start + 1, L->residue_field()->zero());
                R[i - start] = Q[i].lead()->second;
            }
            for (const auto& [z, mu] : L->residue_field()->roots(R)) {
                if (z.is_zero()) continue;
                LocalElem step = L->teichmuller(z).mul_unif(k);
                node(y + step, taylor_shift(Q, step), k, mu);
            }
        }
    }
};

}  // namespace

std::vector<HWRoot> hw_find_roots(const HWContextPtr& ctx, const std::vector<LocalElem>& coeffs, const RootOptions& opt) {
    if (coeffs.size() < 2) throw DomainError("root finding needs a polynomial of degree >= 1");
    for (const auto& c : coeffs)
        if (c.tower() != ctx->tower()) throw DomainError("coefficients must lie in the context's working tower");
    Finder f{ctx, coeffs, poly_derivative(coeffs), opt, {}, {}};
    Rat target = opt.target > 0 ? std::min(opt.target, ctx->N()) : ctx->N();
    f.target_units = target * ctx->d();
    f.node(ctx->tower()->zero(), coeffs, std::nullopt, static_cast<int>(coeffs.size()) - 1);
    std::vector<std::pair<Expansion, HWRoot>> keyed;
    for (auto& r : f.out) keyed.emplace_back(r.element(ctx).expansion(), std::move(r));
    std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return digit_less(a.first, b.first); });
    std::vector<HWRoot> out;
    for (auto& [e, r] : keyed) out.push_back(std::move(r));
    return out;
}

}  // namespace hw
