#include "hw/local_tower.hpp"

#include <algorithm>
#include <functional>

#include "hw/errors.hpp"
#include "hw/expr.hpp"
#include "hw/kernels.hpp"

namespace hw {

namespace {

bool all_zero(const Coeffs& a, std::size_t from, std::size_t len) {
    for (std::size_t i = from; i < from + len; ++i)
        if (a[i] != 0) return false;
    return true;
}

Coeffs slice(const Coeffs& a, std::size_t from, std::size_t len) {
    return Coeffs(a.begin() + static_cast<std::ptrdiff_t>(from), a.begin() + static_cast<std::ptrdiff_t>(from + len));
}

}  // namespace

// ---------------------------------------------------------------- raw levels

void LocalTower::reduce_mod(Coeffs& a) const {
    for (auto& x : a) mpz_fdiv_r(x.get_mpz_t(), x.get_mpz_t(), mod_.get_mpz_t());
}

void LocalTower::raw_reduce(Coeffs& a) const { reduce_mod(a); }

Coeffs LocalTower::raw_mul(int level, const Coeffs& a, const Coeffs& b) const {
    return mul_level(level, a, b, kernels::parallel_enabled());
}

Coeffs LocalTower::raw_mul_serial(int level, const Coeffs& a, const Coeffs& b) const {
    return mul_level(level, a, b, false);
}

Coeffs LocalTower::mul_level(int level, const Coeffs& a, const Coeffs& b, bool parallel) const {
    if (level == 0) {
        Coeffs r(1);
        r[0] = a[0] * b[0];
        mpz_fdiv_r(r[0].get_mpz_t(), r[0].get_mpz_t(), mod_.get_mpz_t());
        return r;
    }
    const Level& lv = levels_[level];
    const std::size_t sub = levels_[level - 1].dim;
    const int deg = lv.deg;
    const bool trunc = lv.kind == Kind::Truncation;
    const int out_len = trunc ? deg : 2 * deg - 1;

    std::vector<char> za(deg), zb(deg);
    for (int i = 0; i < deg; ++i) {
        za[i] = all_zero(a, i * sub, sub);
        zb[i] = all_zero(b, i * sub, sub);
    }
    auto block = [&](int k) {
        Coeffs acc(sub);
        int lo = std::max(0, k - deg + 1), hi = std::min(k, deg - 1);
        for (int i = lo; i <= hi; ++i) {
            int j = k - i;
            if (za[i] || zb[j]) continue;
            Coeffs pr = mul_level(level - 1, slice(a, i * sub, sub), slice(b, j * sub, sub), false);
            for (std::size_t s = 0; s < sub; ++s) acc[s] += pr[s];
        }
        return acc;
    };
    std::vector<Coeffs> prod(out_len);
    kernels::for_each_index(out_len, parallel && deg >= 8, [&](int k) { prod[k] = block(k); });

    if (!trunc) {
        for (int k = 2 * deg - 2; k >= deg; --k) {
            Coeffs& top = prod[k];
            for (auto& x : top) mpz_fdiv_r(x.get_mpz_t(), x.get_mpz_t(), mod_.get_mpz_t());
            bool zero = std::all_of(top.begin(), top.end(), [](const Int& x) { return x == 0; });
            if (zero) continue;
            for (int j : lv.nonzero) {
                Coeffs pr = mul_level(level - 1, top, lv.poly[j], false);
                Coeffs& dst = prod[k - deg + j];
                for (std::size_t s = 0; s < sub; ++s) dst[s] -= pr[s];
            }
        }
    }
    Coeffs out(lv.dim);
    for (int k = 0; k < deg; ++k)
        for (std::size_t s = 0; s < sub; ++s) {
            Int& x = out[k * sub + s];
            x = prod[k][s];
            mpz_fdiv_r(x.get_mpz_t(), x.get_mpz_t(), mod_.get_mpz_t());
        }
    return out;
}

std::optional<std::pair<Int, FqElem>> LocalTower::lead_level(int level, const Coeffs& a) const {
    const Level& lv = levels_[level];
    switch (lv.kind) {
        case Kind::Base: {
            if (a[0] == 0) return std::nullopt;
            if (equal_) return std::make_pair(Int(0), rf_->from_int(a[0]));
            long k = vp(a[0], p_);
            Int w = a[0] / ipow(p_, static_cast<unsigned long>(k));
            return std::make_pair(Int(k), rf_->from_int(w));
        }
        case Kind::Unramified: {
            std::optional<Int> best;
            FqElem r = rf_->zero();
            FqElem g = rf_->gen(), gp = rf_->one();
            std::vector<std::pair<Int, FqElem>> leads;
            for (int j = 0; j < lv.deg; ++j) {
                auto l = lead_level(level - 1, Coeffs{a[j]});
                if (l && (!best || l->first < *best)) best = l->first;
                leads.emplace_back(l ? l->first : Int(-1), l ? l->second : rf_->zero());
            }
            if (!best) return std::nullopt;
            for (int j = 0; j < lv.deg; ++j, gp = gp * g)
                if (leads[j].first == *best) r += leads[j].second * gp;
            return std::make_pair(*best, r);
        }
        case Kind::Truncation: {
            const std::size_t sub = levels_[level - 1].dim;
            for (int j = 0; j < lv.deg; ++j) {
                if (all_zero(a, j * sub, sub)) continue;
                auto l = lead_level(level - 1, slice(a, j * sub, sub));
                return std::make_pair(Int(j), l->second);
            }
            return std::nullopt;
        }
        case Kind::Eisenstein: {
            const std::size_t sub = levels_[level - 1].dim;
            std::optional<std::pair<Int, FqElem>> best;
            for (int j = 0; j < lv.deg; ++j) {
                if (all_zero(a, j * sub, sub)) continue;
                auto l = lead_level(level - 1, slice(a, j * sub, sub));
                if (!l) continue;
                Int k = Int(lv.deg) * l->first + j;
                if (!best || k < best->first)
                    best = std::make_pair(k, l->second * rf_->pow(lv.rho, l->first));
            }
            return best;
        }
    }
    return std::nullopt;
}

std::optional<Rat> LocalTower::val_level(int level, const Coeffs& a) const {
    auto l = lead_level(level, a);
    if (!l) return std::nullopt;
    const Level& lv = levels_[level];
    if (lv.kind == Kind::Unramified || lv.kind == Kind::Base) {
        if (equal_) return Rat(0);
        return Rat(l->first);
    }
    return Rat(l->first) * lv.v_unif;
}

Coeffs LocalTower::div_unif_level(int level, const Coeffs& a) const {
    const Level& lv = levels_[level];
    switch (lv.kind) {
        case Kind::Base: {
            if (equal_) throw DomainError("division by a uniformizer of the residue field");
            if (!mpz_divisible_ui_p(a[0].get_mpz_t(), static_cast<unsigned long>(p_)))
                throw DomainError("inexact division by p");
            Coeffs r(1);
            mpz_divexact_ui(r[0].get_mpz_t(), a[0].get_mpz_t(), static_cast<unsigned long>(p_));
            return r;
        }
        case Kind::Unramified: {
            Coeffs r(lv.dim);
            for (int j = 0; j < lv.deg; ++j) r[j] = div_unif_level(level - 1, Coeffs{a[j]})[0];
            return r;
        }
        case Kind::Truncation: {
            const std::size_t sub = levels_[level - 1].dim;
            if (!all_zero(a, 0, sub)) throw DomainError("inexact division by t");
            Coeffs r(lv.dim);
            for (std::size_t i = sub; i < lv.dim; ++i) r[i - sub] = a[i];
            return r;
        }
        case Kind::Eisenstein: {
            const std::size_t sub = levels_[level - 1].dim;
            const int e = lv.deg;
            Coeffs c0 = slice(a, 0, sub);
            Coeffs r(lv.dim);
            for (std::size_t i = sub; i < lv.dim; ++i) r[i - sub] = a[i];
            bool z = std::all_of(c0.begin(), c0.end(), [](const Int& x) { return x == 0; });
            if (!z) {
                Coeffs t = mul_level(level - 1, div_unif_level(level - 1, c0), lv.unit_inv, false);
                // c0 / gen = -t * (gen^{e-1} + E_{e-1} gen^{e-2} + ... + E_1)
                for (std::size_t s = 0; s < sub; ++s) r[(e - 1) * sub + s] -= t[s];
                for (int j : lv.nonzero) {
                    if (j == 0) continue;
                    Coeffs pr = mul_level(level - 1, t, lv.poly[j], false);
                    for (std::size_t s = 0; s < sub; ++s) r[(j - 1) * sub + s] -= pr[s];
                }
                reduce_mod(r);
            }
            return r;
        }
    }
    return {};
}

Coeffs LocalTower::mul_unif_level(int level, const Coeffs& a) const {
    const Level& lv = levels_[level];
    switch (lv.kind) {
        case Kind::Base: {
            if (equal_) throw DomainError("multiplication by a uniformizer of the residue field");
            Coeffs r{a[0] * p_};
            reduce_mod(r);
            return r;
        }
        case Kind::Unramified: {
            Coeffs r(lv.dim);
            for (int j = 0; j < lv.deg; ++j) r[j] = mul_unif_level(level - 1, Coeffs{a[j]})[0];
            return r;
        }
        case Kind::Truncation: {
            const std::size_t sub = levels_[level - 1].dim;
            Coeffs r(lv.dim);
            for (std::size_t i = 0; i + sub < lv.dim; ++i) r[i + sub] = a[i];
            return r;
        }
        case Kind::Eisenstein: {
            const std::size_t sub = levels_[level - 1].dim;
            const int e = lv.deg;
            Coeffs r(lv.dim);
            for (std::size_t i = 0; i + sub < lv.dim; ++i) r[i + sub] = a[i];
            Coeffs top = slice(a, (e - 1) * sub, sub);
            if (!std::all_of(top.begin(), top.end(), [](const Int& x) { return x == 0; })) {
                for (int j : lv.nonzero) {
                    Coeffs pr = mul_level(level - 1, top, lv.poly[j], false);
                    for (std::size_t s = 0; s < sub; ++s) r[j * sub + s] -= pr[s];
                }
            }
            reduce_mod(r);
            return r;
        }
    }
    return {};
}

Coeffs LocalTower::embed_raw(int level, const Coeffs& a) const {
    Coeffs r(levels_.back().dim);
    (void)level;
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i];
    return r;
}

Coeffs LocalTower::lift_residue_raw(const FqElem& r) const {
    std::size_t n = levels_[unram_level_].dim;
    Coeffs c(n);
    FqElem rr = r.field_ptr() == rf_.get() ? r : rf_->embed(r);
    auto digits = rf_->coeffs(rr);
    for (std::size_t i = 0; i < n; ++i) c[i] = digits[i];
    return c;
}

Coeffs LocalTower::unit_inv_level(int level, const Coeffs& u) const {
    auto l = lead_level(level, u);
    if (!l || l->first != 0) throw DomainError("inverse of a non-unit");
    Coeffs y(levels_[level].dim);
    Coeffs r0 = lift_residue_raw(rf_->inv(l->second));
    // The residue lift sits in the leading block; for a unit, divide out rho-twists are not needed
    // because the residue of u is read at generator-index 0 of every stage.
    for (std::size_t i = 0; i < r0.size(); ++i) y[i] = r0[i];
    if (equal_ && levels_[level].kind != Kind::Truncation && levels_[level].kind != Kind::Eisenstein) return y;
    Coeffs one(levels_[level].dim);
    one[0] = 1;
    for (int it = 0; it < 200; ++it) {
        Coeffs uy = mul_level(level, u, y, false);
        Coeffs err(one.size());
        bool zero = true;
        for (std::size_t i = 0; i < one.size(); ++i) {
            err[i] = one[i] - uy[i];
            mpz_fdiv_r(err[i].get_mpz_t(), err[i].get_mpz_t(), mod_.get_mpz_t());
            if (err[i] != 0) zero = false;
        }
        if (zero) return y;
        Coeffs corr = mul_level(level, y, err, false);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += corr[i];
        reduce_mod(y);
    }
    throw VerificationError("unit inversion did not converge");
}

Coeffs LocalTower::teich_raw(const FqElem& r0) const {
    FqElem r = r0.field_ptr() == rf_.get() ? r0 : rf_->embed(r0);
    if (!teich_table_.empty()) return teich_table_[r.code()];
    Coeffs x = lift_residue_raw(r);
    if (equal_ || r.is_zero()) return x;
    const int L = unram_level_;
    Int size = ipow(p_, static_cast<unsigned long>(F_));
    for (long it = 0; it < prec_; ++it) {
        Coeffs acc(levels_[L].dim);
        acc[0] = 1;
        Coeffs base = x;
        Int e = size;
        while (e > 0) {
            if (mpz_odd_p(e.get_mpz_t())) acc = mul_level(L, acc, base, false);
            e >>= 1;
            if (e > 0) base = mul_level(L, base, base, false);
        }
        if (acc == x) break;
        x = acc;
    }
    return x;
}

Coeffs LocalTower::apply_unram_map(const Coeffs& x, const Coeffs& pows) const {
    const int L = unram_level_;
    const std::size_t f = levels_[L].dim;
    if (f == 1) return x;
    Coeffs out(x.size());
    for (std::size_t blk = 0; blk < x.size(); blk += f) {
        for (std::size_t i = 0; i < f; ++i) {
            const Int& c = x[blk + i];
            if (c == 0) continue;
            for (std::size_t s = 0; s < f; ++s) out[blk + s] += c * pows[i * f + s];
        }
    }
    reduce_mod(out);
    return out;
}

// ---------------------------------------------------------------- building

struct TowerBuilder {
    LocalTower& T;

    Coeffs top_zero() const { return Coeffs(T.levels_.back().dim); }

    // Environment for stage-coefficient expressions at the current top level.
    struct Env {
        TowerBuilder& B;
        const std::vector<Coeffs>& gens;  // user generators so far, sized at their own level
        int F_here;
        int top() const { return static_cast<int>(B.T.levels_.size()) - 1; }
        Coeffs lift(const Coeffs& c) const {
            Coeffs r(B.T.levels_.back().dim);
            for (std::size_t i = 0; i < c.size(); ++i) r[i] = c[i];
            return r;
        }
        Coeffs from_int(const Int& v) {
            Coeffs r(B.T.levels_.back().dim);
            r[0] = v;
            B.T.reduce_mod(r);
            return r;
        }
        Coeffs symbol(const std::string& n) {
            if (n == "p") return from_int(Int(B.T.p_));
            if (n == "t") {
                if (!B.T.equal_) throw DomainError("symbol t requires an equal-characteristic base");
                Coeffs r(B.T.levels_.back().dim);
                r[B.T.levels_[B.T.unram_level_].dim] = 1;
                return r;
            }
            if (n == "pi") return lift(B.uniformizer_here());
            if (n.size() > 1 && n[0] == 's') {
                std::size_t idx = std::stoul(n.substr(1));
                if (idx >= gens.size()) throw DomainError("stage generator " + n + " is not yet defined");
                return lift(gens[idx]);
            }
            throw DomainError("unknown symbol '" + n + "' in stage coefficient");
        }
        Coeffs add(Coeffs a, const Coeffs& b) {
            for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
            B.T.reduce_mod(a);
            return a;
        }
        Coeffs sub(Coeffs a, const Coeffs& b) {
            for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
            B.T.reduce_mod(a);
            return a;
        }
        Coeffs neg(Coeffs a) {
            for (auto& x : a) x = -x;
            B.T.reduce_mod(a);
            return a;
        }
        Coeffs mul(const Coeffs& a, const Coeffs& b) { return B.T.mul_level(top(), a, b, false); }
        Coeffs div(const Coeffs&, const Coeffs&) { throw DomainError("division is not allowed in stage coefficients"); }
        Coeffs pow(Coeffs a, const Rat& e) {
            if (e.get_den() != 1 || e < 0) throw DomainError("stage coefficients allow non-negative integer powers only");
            Coeffs r = from_int(Int(1));
            for (unsigned long k = 0; k < Int(e.get_num()).get_ui(); ++k) r = mul(r, a);
            return r;
        }
        Coeffs teich(const expr::Node& n) {
            auto sub = FqField::make(B.T.p_, F_here);
            FqElem r = sub->parse(expr::render(n));
            return lift(B.T.teich_raw(B.T.rf_->embed(r)));
        }
    };

    Coeffs uniformizer_here() const {
        int top = static_cast<int>(T.levels_.size()) - 1;
        const auto& lv = T.levels_[top];
        Coeffs r(lv.dim);
        if (lv.kind == LocalTower::Kind::Eisenstein || lv.kind == LocalTower::Kind::Truncation) {
            r[T.levels_[top - 1].dim] = 1;
        } else {
            if (T.equal_) throw DomainError("no uniformizer below the t-stage");
            r[0] = T.p_;
        }
        return r;
    }
};

TowerSpec TowerSpec::mixed(long p, long prec) {
    TowerSpec s;
    s.p = p;
    s.prec = prec;
    return s;
}

TowerSpec TowerSpec::equal(long q, long prec) {
    TowerSpec s;
    s.equal_char = true;
    long p = 0;
    for (long d = 2; d <= q; ++d)
        if (q % d == 0) {
            p = d;
            break;
        }
    long r = q;
    int f = 0;
    while (p > 1 && r % p == 0) {
        r /= p;
        ++f;
    }
    if (p == 0 || r != 1) throw DomainError("q = " + std::to_string(q) + " is not a prime power");
    s.p = p;
    s.base_f = f;
    s.prec = prec;
    return s;
}

TowerSpec& TowerSpec::unramified(int m) {
    Stage st;
    st.unramified = true;
    st.degree = m;
    stages.push_back(st);
    return *this;
}

TowerSpec& TowerSpec::eisenstein(std::vector<std::pair<std::string, int>> terms) {
    Stage st;
    st.terms = std::move(terms);
    for (auto& t : st.terms) st.degree = std::max(st.degree, t.second);
    stages.push_back(st);
    return *this;
}

TowerSpec& TowerSpec::radical(int d) { return eisenstein({{"-pi", 0}, {"1", d}}); }

TowerSpec& TowerSpec::designate_k(int n) {
    k_level = n;
    return *this;
}

TowerPtr LocalTower::build(const TowerSpec& spec) {
    if (!is_prime(spec.p)) throw DomainError("base characteristic " + std::to_string(spec.p) + " is not prime");
    if (spec.prec <= 0) throw DomainError("base precision must be positive");
    // The t-stage needs a coordinate for t itself.
    if (spec.equal_char && spec.prec < 2) throw DomainError("equal-characteristic truncation must be at least 2");
    if (spec.k_level > static_cast<int>(spec.stages.size())) throw DomainError("K-level exceeds the number of stages");
    std::shared_ptr<LocalTower> T(new LocalTower());
    T->spec_ = spec;
    T->p_ = spec.p;
    T->equal_ = spec.equal_char;
    T->prec_ = spec.prec;
    T->mod_ = T->equal_ ? Int(spec.p) : ipow(spec.p, static_cast<unsigned long>(spec.prec));
    int F = spec.equal_char ? spec.base_f : 1;
    for (auto& st : spec.stages) {
        if (st.degree < 1) throw DomainError("stage degree must be positive");
        if (st.unramified) F *= st.degree;
    }
    if (F > 24) throw DomainError("total residue degree too large");
    T->F_ = F;
    T->rf_ = FqField::make(spec.p, F);

    Level base;
    base.kind = Kind::Base;
    base.dim = 1;
    base.v_unif = 1;
    T->levels_.push_back(base);
    if (F > 1) {
        Level u;
        u.kind = Kind::Unramified;
        u.deg = F;
        u.dim = static_cast<std::size_t>(F);
        u.v_unif = 1;
        const auto& m = T->rf_->modulus();
        for (int j = 0; j < F; ++j) {
            u.poly.push_back(Coeffs{Int(m[j])});
            if (m[j] != 0) u.nonzero.push_back(j);
        }
        T->levels_.push_back(u);
    }
    T->unram_level_ = static_cast<int>(T->levels_.size()) - 1;
    if (T->equal_) {
        Level t;
        t.kind = Kind::Truncation;
        t.deg = static_cast<int>(spec.prec);
        t.dim = T->levels_.back().dim * static_cast<std::size_t>(t.deg);
        t.v_gen = 1;
        t.v_unif = 1;
        t.poly.assign(t.deg, Coeffs(T->levels_.back().dim));
        T->levels_.push_back(t);
        if (t.dim > 100000) throw DomainError("equal-characteristic truncation too large");
    }

    // Teichmuller table for small residue fields (needed while parsing stage coefficients).
    if (T->rf_->size() <= 1024) {
        T->teich_table_.clear();
        std::vector<Coeffs> table(T->rf_->size());
        for (std::uint32_t c = 0; c < T->rf_->size(); ++c) table[c] = T->teich_raw(FqElem(T->rf_.get(), c));
        T->teich_table_ = std::move(table);
    }

    TowerBuilder B{*T};
    std::vector<Coeffs> gens;  // at their own level
    int F_here = spec.equal_char ? spec.base_f : 1;
    int eK = 1, fK = spec.equal_char ? spec.base_f : 1;
    Coeffs piK;
    bool piK_set = false;
    for (std::size_t si = 0; si < spec.stages.size(); ++si) {
        const auto& st = spec.stages[si];
        const bool in_K = static_cast<int>(si) < spec.k_stages();
        if (st.unramified) {
            F_here *= st.degree;
            if (in_K) fK *= st.degree;
            auto sub = FqField::make(spec.p, F_here);
            Coeffs g;
            if (st.degree == 1)
                g = Coeffs{Int(1)};
            else
                g = T->teich_raw(T->rf_->embed(sub->gen()));
            gens.push_back(g);
            continue;
        }
        TowerBuilder::Env env{B, gens, F_here};
        const int top = static_cast<int>(T->levels_.size()) - 1;
        const std::size_t sub = T->levels_[top].dim;
        const int e = st.degree;
        std::vector<Coeffs> coeffs(e + 1, Coeffs(sub));
        for (auto& [text, power] : st.terms) {
            if (power < 0 || power > e) throw DomainError("bad Eisenstein term power");
            Coeffs v = expr::eval<Coeffs>(*expr::parse(text), env);
            for (std::size_t i = 0; i < sub; ++i) coeffs[power][i] += v[i];
        }
        for (auto& c : coeffs) T->reduce_mod(c);
        Coeffs one(sub);
        one[0] = 1;
        if (coeffs[e] != one) throw DomainError("Eisenstein polynomial must be monic");
        Rat vu = T->levels_[top].v_unif;
        if (T->equal_ && T->levels_[top].kind != Kind::Truncation && T->levels_[top].kind != Kind::Eisenstein)
            throw DomainError("internal: Eisenstein stage below the t-stage");
        auto v0 = T->val_level(top, coeffs[0]);
        if (!v0 || *v0 != vu) throw DomainError("stage " + std::to_string(si) + " is not Eisenstein: constant term is not a uniformizer");
        for (int j = 1; j < e; ++j) {
            auto vj = T->val_level(top, coeffs[j]);
            if (vj && *vj < vu) throw DomainError("stage " + std::to_string(si) + " is not Eisenstein: coefficient of X^" + std::to_string(j) + " is a unit");
        }
        Level lv;
        lv.kind = Kind::Eisenstein;
        lv.deg = e;
        lv.dim = sub * static_cast<std::size_t>(e);
        lv.v_gen = vu / e;
        lv.v_unif = lv.v_gen;
        for (int j = 0; j < e; ++j) {
            lv.poly.push_back(coeffs[j]);
            if (!std::all_of(coeffs[j].begin(), coeffs[j].end(), [](const Int& x) { return x == 0; })) lv.nonzero.push_back(j);
        }
        Coeffs u = T->div_unif_level(top, coeffs[0]);
        lv.unit_inv = T->unit_inv_level(top, u);
        Coeffs neg_inv = lv.unit_inv;
        for (auto& x : neg_inv) x = -x;
        T->reduce_mod(neg_inv);
        lv.rho = T->lead_level(top, neg_inv)->second;
        T->levels_.push_back(lv);
        Coeffs g(lv.dim);
        g[sub] = 1;
        gens.push_back(g);
        if (in_K) {
            eK *= e;
            piK = g;
            piK_set = true;
        }
    }
    T->E_ = 1;
    for (auto& lv : T->levels_)
        if (lv.kind == Kind::Eisenstein) T->E_ *= lv.deg;
    T->eK_ = eK;
    T->fK_ = fK;
    const std::size_t D = T->levels_.back().dim;
    for (auto& g : gens) T->stage_gens_.push_back(T->embed_raw(0, g));
    if (piK_set)
        T->pi_K_ = T->embed_raw(0, piK);
    else {
        T->pi_K_ = Coeffs(D);
        if (T->equal_)
            T->pi_K_[T->levels_[T->unram_level_].dim] = 1;
        else
            T->pi_K_[0] = T->p_;
        T->reduce_mod(T->pi_K_);
    }

    // Frobenius lift on the unramified level.
    const int L = T->unram_level_;
    const std::size_t f = T->levels_[L].dim;
    Coeffs alpha(f);
    if (f > 1) alpha[1] = 1;
    else alpha[0] = 1;
    auto powp = [&](const Coeffs& x) {
        Coeffs acc(f);
        acc[0] = 1;
        for (long i = 0; i < T->p_; ++i) acc = T->mul_level(L, acc, x, false);
        return acc;
    };
    Coeffs s_alpha = powp(alpha);
    if (!T->equal_ && f > 1) {
        // Newton iteration to the root of the stage polynomial congruent to alpha^p.
        const auto& m = T->rf_->modulus();
        for (int it = 0; it < 200; ++it) {
            Coeffs h(f), dh(f);
            for (int j = static_cast<int>(m.size()) - 1; j >= 0; --j) {
                h = T->mul_level(L, h, s_alpha, false);
                h[0] += m[j];
                if (j >= 1) {
                    dh = T->mul_level(L, dh, s_alpha, false);
                    dh[0] += Int(m[j]) * j;
                }
            }
            T->reduce_mod(h);
            T->reduce_mod(dh);
            if (std::all_of(h.begin(), h.end(), [](const Int& x) { return x == 0; })) break;
            Coeffs step = T->mul_level(L, h, T->unit_inv_level(L, dh), false);
            for (std::size_t i = 0; i < f; ++i) s_alpha[i] -= step[i];
            T->reduce_mod(s_alpha);
        }
    }
    auto pows_of = [&](const Coeffs& a) {
        Coeffs out(f * f);
        Coeffs cur(f);
        cur[0] = 1;
        for (std::size_t i = 0; i < f; ++i) {
            for (std::size_t s = 0; s < f; ++s) out[i * f + s] = cur[s];
            cur = T->mul_level(L, cur, a, false);
        }
        return out;
    };
    T->sigma_alpha_pows_ = pows_of(s_alpha);
    Coeffs fa = alpha;
    for (int k = 0; k < T->fK_; ++k) fa = T->apply_unram_map(fa, T->sigma_alpha_pows_);
    T->frobK_alpha_pows_ = pows_of(fa);
    for (std::size_t li = 0; li < T->levels_.size(); ++li) {
        const auto& lv = T->levels_[li];
        if (lv.kind != Kind::Eisenstein) continue;
        for (const auto& c : lv.poly)
            if (T->apply_unram_map(c, T->frobK_alpha_pows_) != c) T->frob_ok_ = false;
    }
    return T;
}

// ---------------------------------------------------------------- tower API

LocalElem LocalTower::zero() const { return LocalElem(shared_from_this(), Coeffs(dim()), max_cap()); }

LocalElem LocalTower::one() const { return from_int(Int(1)); }

LocalElem LocalTower::from_int(const Int& v) const {
    Coeffs c(dim());
    c[0] = v;
    reduce_mod(c);
    return LocalElem(shared_from_this(), std::move(c), max_cap());
}

LocalElem LocalTower::from_rat(const Rat& r) const {
    Int num = r.get_num(), den = r.get_den();
    Int inv;
    if (mpz_invert(inv.get_mpz_t(), den.get_mpz_t(), mod_.get_mpz_t()) == 0)
        throw DomainError("denominator of " + to_string(r) + " is divisible by p");
    return from_int(num * inv);
}

LocalElem LocalTower::uniformizer() const {
    Coeffs c(dim());
    int top = static_cast<int>(levels_.size()) - 1;
    const auto& lv = levels_[top];
    if (lv.kind == Kind::Eisenstein || lv.kind == Kind::Truncation)
        c[levels_[top - 1].dim] = 1;
    else
        c[0] = p_;
    reduce_mod(c);
    return LocalElem(shared_from_this(), std::move(c), max_cap());
}

LocalElem LocalTower::pi_K() const { return LocalElem(shared_from_this(), pi_K_, max_cap()); }

LocalElem LocalTower::generator(int stage) const {
    if (stage < 0 || stage >= static_cast<int>(stage_gens_.size())) throw DomainError("no such stage");
    return LocalElem(shared_from_this(), stage_gens_[stage], max_cap());
}

LocalElem LocalTower::teichmuller(const FqElem& r) const {
    if (r.field().p() != p_ || F_ % r.field().degree() != 0)
        throw DomainError("residue field mismatch: " + r.str() + " is not in F_" + std::to_string(rf_->size()));
    return LocalElem(shared_from_this(), embed_raw(unram_level_, teich_raw(r)), max_cap());
}

LocalElem LocalTower::lift_residue(const FqElem& r) const {
    return LocalElem(shared_from_this(), embed_raw(unram_level_, lift_residue_raw(r)), max_cap());
}

LocalElem LocalTower::frob_lift(const LocalElem& x) const {
    if (!frob_ok_) throw DomainError("Frobenius lift unavailable: Eisenstein coefficients are not Frobenius-fixed");
    return LocalElem(shared_from_this(), apply_unram_map(x.coeffs(), frobK_alpha_pows_), x.cap_abs());
}

LocalElem LocalTower::sigma(const LocalElem& x, long k) const {
    Coeffs c = x.coeffs();
    long kk = ((k % F_) + F_) % F_;
    for (long i = 0; i < kk; ++i) c = apply_unram_map(c, sigma_alpha_pows_);
    return LocalElem(shared_from_this(), std::move(c), x.cap_abs());
}

TowerPtr LocalTower::parent() const {
    if (spec_.stages.empty()) throw DomainError("the base has no parent");
    if (!parent_) {
        TowerSpec s = spec_;
        s.stages.pop_back();
        if (s.k_level > static_cast<int>(s.stages.size())) s.k_level = -1;
        parent_ = build(s);
    }
    return parent_;
}

namespace {

// Division-free characteristic polynomial (Samuelson-Berkowitz); returns c_0..c_n of
// X^n + c_1 X^{n-1} + ... with c_0 = 1.
std::vector<Coeffs> berkowitz(const std::vector<std::vector<Coeffs>>& A,
                              const std::function<Coeffs(const Coeffs&, const Coeffs&)>& mul,
                              const std::function<Coeffs(const Coeffs&, const Coeffs&)>& add,
                              const std::function<Coeffs(const Coeffs&)>& neg, const Coeffs& one) {
    const std::size_t n = A.size();
    if (n == 1) return {one, neg(A[0][0])};
    std::vector<std::vector<Coeffs>> A1(n - 1, std::vector<Coeffs>(n - 1));
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 1; j < n; ++j) A1[i - 1][j - 1] = A[i][j];
    std::vector<Coeffs> t(n + 1);
    t[0] = one;
    t[1] = neg(A[0][0]);
    std::vector<Coeffs> v(n - 1);
    for (std::size_t i = 1; i < n; ++i) v[i - 1] = A[i][0];
    Coeffs zero(one.size());
    for (std::size_t k = 0; k + 2 <= n; ++k) {
        Coeffs rv = zero;
        for (std::size_t j = 1; j < n; ++j) rv = add(rv, mul(A[0][j], v[j - 1]));
        t[k + 2] = neg(rv);
        std::vector<Coeffs> nv(n - 1, zero);
        for (std::size_t i = 0; i + 1 < n; ++i)
            for (std::size_t j = 0; j + 1 < n; ++j) nv[i] = add(nv[i], mul(A1[i][j], v[j]));
        v = std::move(nv);
    }
    auto p1 = berkowitz(A1, mul, add, neg, one);
    std::vector<Coeffs> res(n + 1, zero);
    for (std::size_t i = 0; i <= n; ++i)
        for (std::size_t j = 0; j <= std::min(i, n - 1); ++j) res[i] = add(res[i], mul(t[i - j], p1[j]));
    return res;
}

}  // namespace

LocalElem LocalTower::norm_down(const LocalElem& x) const {
    if (spec_.stages.empty()) throw DomainError("norm_down on the base tower");
    if (spec_.stages.back().unramified)
        throw DomainError("norm_down across an unramified top stage is not supported by the canonical layout");
    TowerPtr P = parent();
    const int top = static_cast<int>(levels_.size()) - 1;
    const int e = levels_[top].deg;
    const std::size_t sub = levels_[top - 1].dim;
    if (P->dim() != sub) throw VerificationError("parent layout mismatch");
    std::vector<std::vector<Coeffs>> M(e, std::vector<Coeffs>(e));
    Coeffs col = x.coeffs();
    for (int j = 0; j < e; ++j) {
        for (int i = 0; i < e; ++i) M[i][j] = slice(col, i * sub, sub);
        col = mul_unif_level(top, col);
    }
    auto mul = [&](const Coeffs& a, const Coeffs& b) { return mul_level(top - 1, a, b, false); };
    auto add = [&](const Coeffs& a, const Coeffs& b) {
        Coeffs r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
        reduce_mod(r);
        return r;
    };
    auto neg = [&](const Coeffs& a) {
        Coeffs r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = -a[i];
        reduce_mod(r);
        return r;
    };
    Coeffs one(sub);
    one[0] = 1;
    auto cp = berkowitz(M, mul, add, neg, one);
    Coeffs det = e % 2 == 0 ? cp[e] : neg(cp[e]);
    Val v = x.valuation_abs();
    Rat cap = x.cap_abs() + Rat(e - 1) * v.value;
    cap = std::min(cap, P->max_cap());
    return LocalElem(P, std::move(det), cap);
}

LocalElem LocalTower::lift_from(const LocalElem& x) const {
    const LocalTower& S = *x.tower();
    if (&S == this) return x;
    if (S.p_ != p_ || S.equal_ != equal_ || F_ % S.F_ != 0)
        throw DomainError("lift_from: incompatible towers");
    // Eisenstein levels of S must be a prefix of ours.
    std::vector<int> ours, theirs;
    for (std::size_t i = 0; i < levels_.size(); ++i)
        if (levels_[i].kind == Kind::Eisenstein) ours.push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < S.levels_.size(); ++i)
        if (S.levels_[i].kind == Kind::Eisenstein) theirs.push_back(static_cast<int>(i));
    if (theirs.size() > ours.size()) throw DomainError("lift_from: source has more Eisenstein stages");
    for (std::size_t i = 0; i < theirs.size(); ++i)
        if (S.levels_[theirs[i]].deg != levels_[ours[i]].deg) throw DomainError("lift_from: Eisenstein degree mismatch");
    const int topL = static_cast<int>(levels_.size()) - 1;
    const std::size_t D = dim();
    auto lift_int = [&](const Int& v) {
        Coeffs r(D);
        r[0] = v;
        reduce_mod(r);
        return r;
    };
    // Image of the source unramified generator: root of its modulus in our unramified level.
    const int L = unram_level_;
    const std::size_t f = levels_[L].dim;
    Coeffs alpha_img(f);
    if (S.F_ > 1) {
        FqElem r = rf_->embed(S.rf_->gen());
        alpha_img = lift_residue_raw(r);
        const auto& m = S.rf_->modulus();
        for (int it = 0; it < 200 && !equal_; ++it) {
            Coeffs h(f), dh(f);
            for (int j = static_cast<int>(m.size()) - 1; j >= 0; --j) {
                h = mul_level(L, h, alpha_img, false);
                h[0] += m[j];
                if (j >= 1) {
                    dh = mul_level(L, dh, alpha_img, false);
                    dh[0] += Int(m[j]) * j;
                }
            }
            reduce_mod(h);
            reduce_mod(dh);
            if (std::all_of(h.begin(), h.end(), [](const Int& z) { return z == 0; })) break;
            Coeffs step = mul_level(L, h, unit_inv_level(L, dh), false);
            for (std::size_t i = 0; i < f; ++i) alpha_img[i] -= step[i];
            reduce_mod(alpha_img);
        }
    }
    std::function<Coeffs(int, const Coeffs&)> rec = [&](int lvl, const Coeffs& a) -> Coeffs {
        const Level& sl = S.levels_[lvl];
        if (sl.kind == Kind::Base) return lift_int(a[0]);
        const std::size_t sub = S.levels_[lvl - 1].dim;
        Coeffs gen(D);
        if (sl.kind == Kind::Unramified) {
            for (std::size_t i = 0; i < f; ++i) gen[i] = alpha_img[i];
        } else if (sl.kind == Kind::Truncation) {
            gen[levels_[L].dim] = 1;
        } else {
            std::size_t idx = std::find(theirs.begin(), theirs.end(), lvl) - theirs.begin();
            gen[levels_[ours[idx] - 1].dim] = 1;
        }
        Coeffs acc(D);
        for (int j = sl.deg - 1; j >= 0; --j) {
            acc = mul_level(topL, acc, gen, false);
            Coeffs c = rec(lvl - 1, slice(a, j * sub, sub));
            for (std::size_t i = 0; i < D; ++i) acc[i] += c[i];
            reduce_mod(acc);
        }
        return acc;
    };
    Coeffs img = rec(static_cast<int>(S.levels_.size()) - 1, x.coeffs());
    Rat cap = std::min(x.cap_abs(), max_cap());
    return LocalElem(shared_from_this(), std::move(img), cap);
}

std::vector<std::pair<Int, FqElem>> LocalTower::digits(const LocalElem& x) const {
    std::vector<std::pair<Int, FqElem>> out;
    Coeffs z = x.coeffs();
    const std::size_t f = levels_[unram_level_].dim;
    const int top = static_cast<int>(levels_.size()) - 1;
    Rat vt = v_top_abs();
    for (long k = 0; Rat(k) * vt < x.cap_abs(); ++k) {
        std::vector<long> dig(f);
        for (std::size_t i = 0; i < f; ++i) {
            Int r;
            mpz_fdiv_r_ui(r.get_mpz_t(), z[i].get_mpz_t(), static_cast<unsigned long>(p_));
            dig[i] = static_cast<long>(r.get_si());
        }
        FqElem res = rf_->from_coeffs(dig);
        if (!res.is_zero()) {
            out.emplace_back(Int(k), res);
            Coeffs t = teich_raw(res);
            for (std::size_t i = 0; i < t.size(); ++i) z[i] -= t[i];
            reduce_mod(z);
        }
        if (Rat(k + 1) * vt >= x.cap_abs()) break;
        if (levels_[top].kind == Kind::Base || levels_[top].kind == Kind::Unramified) {
            if (equal_) break;
        }
        z = div_unif_level(top, z);
    }
    return out;
}

namespace {

struct ElemEnv {
    const LocalTower& T;
    LocalElem from_int(const Int& v) { return T.from_int(v); }
    LocalElem symbol(const std::string& n) {
        if (n == "p") return T.from_int(T.p());
        if (n == "pi") return T.pi_K();
        if (n == "varpi") return T.uniformizer();
        if (n == "t") {
            if (!T.equal_char()) throw DomainError("symbol t requires an equal-characteristic base");
            // t is pi of the base in equal characteristic.
            TowerSpec base = T.spec();
            base.stages.clear();
            base.k_level = -1;
            return T.lift_from(LocalTower::build(base)->uniformizer());
        }
        if (n.size() > 1 && n[0] == 's') return T.generator(std::stoi(n.substr(1)));
        throw DomainError("unknown symbol '" + n + "'");
    }
    LocalElem add(const LocalElem& a, const LocalElem& b) { return a + b; }
    LocalElem sub(const LocalElem& a, const LocalElem& b) { return a - b; }
    LocalElem mul(const LocalElem& a, const LocalElem& b) { return a * b; }
    LocalElem neg(const LocalElem& a) { return -a; }
    LocalElem div(const LocalElem& a, const LocalElem& b) { return a.div_exact(b); }
    LocalElem pow(const LocalElem& a, const Rat& e) {
        if (e.get_den() != 1) throw DomainError("fractional powers are not elements of the tower");
        Int n = e.get_num();
        if (n >= 0) return a.pow(n.get_ui());
        return a.inv().pow(Int(-n).get_ui());
    }
    LocalElem teich(const expr::Node& n) { return T.teichmuller(T.residue_field()->parse(expr::render(n))); }
};

}  // namespace

LocalElem LocalTower::parse(const std::string& text) const {
    ElemEnv env{*this};
    return expr::eval<LocalElem>(*expr::parse(text), env);
}

// ---------------------------------------------------------------- LocalElem

LocalElem::LocalElem(TowerPtr t, Coeffs c, Rat cap_abs) : tower_(std::move(t)), c_(std::move(c)), cap_(std::move(cap_abs)) {}

Rat LocalElem::cap() const { return cap_ * tower_->e_K(); }

static void same_tower(const LocalElem& a, const LocalElem& b) {
    if (a.tower().get() != b.tower().get()) throw DomainError("elements belong to different towers");
}

LocalElem LocalElem::operator+(const LocalElem& b) const {
    same_tower(*this, b);
    Coeffs r(c_.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = c_[i] + b.c_[i];
    tower_->reduce_mod(r);
    return LocalElem(tower_, std::move(r), std::min(cap_, b.cap_));
}

LocalElem LocalElem::operator-(const LocalElem& b) const {
    same_tower(*this, b);
    Coeffs r(c_.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = c_[i] - b.c_[i];
    tower_->reduce_mod(r);
    return LocalElem(tower_, std::move(r), std::min(cap_, b.cap_));
}

LocalElem LocalElem::operator-() const {
    Coeffs r(c_.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = -c_[i];
    tower_->reduce_mod(r);
    return LocalElem(tower_, std::move(r), cap_);
}

LocalElem LocalElem::operator*(const LocalElem& b) const {
    same_tower(*this, b);
    const int top = static_cast<int>(tower_->levels().size()) - 1;
    Coeffs r = tower_->raw_mul(top, c_, b.c_);
    Rat va = valuation_abs().value, vb = b.valuation_abs().value;
    Rat cap = std::min({Rat(cap_ + vb), Rat(b.cap_ + va), tower_->max_cap()});
    return LocalElem(tower_, std::move(r), cap);
}

LocalElem LocalElem::scaled(const Int& k) const {
    Coeffs r(c_.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = c_[i] * k;
    tower_->reduce_mod(r);
    Rat cap = cap_;
    if (!tower_->equal_char() && k != 0) cap = std::min(Rat(cap + vp(k, tower_->p())), tower_->max_cap());
    return LocalElem(tower_, std::move(r), cap);
}

LocalElem LocalElem::pow(unsigned long e) const {
    LocalElem acc = tower_->one();
    LocalElem base = *this;
    while (e > 0) {
        if (e & 1) acc = acc * base;
        e >>= 1;
        if (e) base = base * base;
    }
    return acc;
}

Val LocalElem::valuation_abs() const {
    const int top = static_cast<int>(tower_->levels().size()) - 1;
    auto v = tower_->val_level(top, c_);
    if (!v || *v >= cap_) return Val::at_least(cap_);
    return Val::exactly(*v);
}

Val LocalElem::valuation() const {
    Val v = valuation_abs();
    v.value *= tower_->e_K();
    return v;
}

std::optional<std::pair<Int, FqElem>> LocalElem::lead() const {
    if (is_zero()) return std::nullopt;
    const int top = static_cast<int>(tower_->levels().size()) - 1;
    return tower_->lead_level(top, c_);
}

FqElem LocalElem::residue() const {
    auto l = lead();
    if (!l) {
        if (cap_ <= 0) throw BudgetError("residue of an element with no precision");
        return tower_->residue_field()->zero();
    }
    if (l->first > 0) return tower_->residue_field()->zero();
    return l->second;
}

LocalElem LocalElem::mul_unif(long k) const {
    const int top = static_cast<int>(tower_->levels().size()) - 1;
    Coeffs r = c_;
    for (long i = 0; i < k; ++i) r = tower_->mul_unif_level(top, r);
    Rat cap = std::min(Rat(cap_ + Rat(k) * tower_->v_top_abs()), tower_->max_cap());
    return LocalElem(tower_, std::move(r), cap);
}

LocalElem LocalElem::div_unif(long k) const {
    if (k == 0) return *this;
    const int top = static_cast<int>(tower_->levels().size()) - 1;
    Rat need = Rat(k) * tower_->v_top_abs();
    Rat cap = cap_ - need;
    if (cap <= 0) throw BudgetError("division by varpi^" + std::to_string(k) + " exhausts the precision cap");
    Val v = valuation_abs();
    if (!v.exact) return LocalElem(tower_, Coeffs(c_.size()), cap);
    if (v.value < need) throw DomainError("inexact division by a uniformizer power");
    Coeffs r = c_;
    for (long i = 0; i < k; ++i) r = tower_->div_unif_level(top, r);
    return LocalElem(tower_, std::move(r), cap);
}

LocalElem LocalElem::inv() const {
    Val v = valuation_abs();
    if (!v.exact) throw BudgetError("inverse of an element indistinguishable from zero");
    if (v.value != 0) throw DomainError("inverse of a non-unit in the integral tower");
    const int top = static_cast<int>(tower_->levels().size()) - 1;
    return LocalElem(tower_, tower_->unit_inv_level(top, c_), cap_);
}

LocalElem LocalElem::div_exact(const LocalElem& b) const {
    Val vb = b.valuation_abs();
    if (!vb.exact) throw BudgetError("division by an element indistinguishable from zero");
    Rat kq = vb.value / tower_->v_top_abs();
    long k = Int(kq.get_num()).get_si();
    LocalElem u = b.div_unif(k);
    return div_unif(k) * u.inv();
}

LocalElem LocalElem::with_cap(const Rat& cap_abs) const { return LocalElem(tower_, c_, std::min(cap_, cap_abs)); }

std::string LocalElem::str() const {
    auto d = tower_->digits(*this);
    std::string out;
    Rat scale = tower_->v_top_abs() * tower_->e_K();
    for (auto& [k, a] : d) {
        if (!out.empty()) out += " + ";
        Rat e = Rat(k) * scale;
        out += "[" + a.str() + "]*pi^(" + to_string(e) + ")";
    }
    if (out.empty()) out = "0";
    return out + " + O(pi^(" + to_string(cap()) + "))";
}

// ---------------------------------------------------------------- FieldElem

FieldElem FieldElem::operator+(const FieldElem& b) const {
    long s = std::min(shift_, b.shift_);
    LocalElem x = u_.mul_unif(shift_ - s);
    LocalElem y = b.u_.mul_unif(b.shift_ - s);
    return {x + y, s};
}

FieldElem FieldElem::operator-(const FieldElem& b) const { return *this + (-b); }

FieldElem FieldElem::inv() const {
    Val v = u_.valuation_abs();
    if (!v.exact) throw BudgetError("inverse of an element indistinguishable from zero");
    long k = Int(Rat(v.value / u_.tower()->v_top_abs()).get_num()).get_si();
    LocalElem unit = u_.div_unif(k);
    return {unit.inv(), -shift_ - k};
}

Val FieldElem::valuation_abs() const {
    Val v = u_.valuation_abs();
    v.value += Rat(shift_) * u_.tower()->v_top_abs();
    return v;
}

Val FieldElem::valuation() const {
    Val v = valuation_abs();
    v.value *= u_.tower()->e_K();
    return v;
}

Rat FieldElem::cap_abs() const { return u_.cap_abs() + Rat(shift_) * u_.tower()->v_top_abs(); }

LocalElem FieldElem::to_integral() const {
    if (shift_ >= 0) return u_.mul_unif(shift_);
    return u_.div_unif(-shift_);
}

std::optional<std::pair<Int, FqElem>> FieldElem::lead() const {
    auto l = u_.lead();
    if (!l) return std::nullopt;
    return std::make_pair(l->first + shift_, l->second);
}

}  // namespace hw
