#include "hw/witt.hpp"

#include <algorithm>
#include <mutex>
#include <tuple>

namespace hw::witt {

namespace {

constexpr std::size_t kTermBudget = 400000;

long char_of(long q) {
    for (long d = 2; d <= q; ++d)
        if (q % d == 0) return d;
    throw DomainError("q must be a prime power");
}

int log_p(long q, long p) {
    int f = 0;
    while (q % p == 0) {
        q /= p;
        ++f;
    }
    if (q != 1) throw DomainError("q must be a prime power");
    return f;
}

void add_laurent(Laurent& into, const Laurent& b, bool negate) {
    for (const auto& [j, c] : b) {
        Int& slot = into[j];
        if (negate)
            slot -= c;
        else
            slot += c;
        if (slot == 0) into.erase(j);
    }
}

}  // namespace

Poly Poly::constant(int n, const Int& c, int pi_exp) {
    Poly P(n);
    if (c != 0) P.add_term(Monomial(2 * n, 0), pi_exp, c);
    return P;
}

Poly Poly::var(int n, bool is_y, int index) {
    Poly P(n);
    Monomial m(2 * n, 0);
    m[(is_y ? n : 0) + index] = 1;
    P.add_term(m, 0, 1);
    return P;
}

void Poly::add_term(const Monomial& m, int j, const Int& c) {
    Laurent& L = terms_[m];
    Int& slot = L[j];
    slot += c;
    if (slot == 0) L.erase(j);
    if (L.empty()) terms_.erase(m);
}

Poly Poly::operator+(const Poly& b) const {
    Poly r = *this;
    for (const auto& [m, L] : b.terms_) {
        add_laurent(r.terms_[m], L, false);
        if (r.terms_[m].empty()) r.terms_.erase(m);
    }
    return r;
}

Poly Poly::operator-(const Poly& b) const {
    Poly r = *this;
    for (const auto& [m, L] : b.terms_) {
        add_laurent(r.terms_[m], L, true);
        if (r.terms_[m].empty()) r.terms_.erase(m);
    }
    return r;
}

Poly Poly::operator*(const Poly& b) const {
    Poly r(n_);
    Monomial m(2 * n_);
    for (const auto& [ma, La] : terms_)
        for (const auto& [mb, Lb] : b.terms_) {
            for (std::size_t i = 0; i < m.size(); ++i) m[i] = ma[i] + mb[i];
            for (const auto& [ja, ca] : La)
                for (const auto& [jb, cb] : Lb) r.add_term(m, ja + jb, ca * cb);
            if (r.terms_.size() > kTermBudget) throw BudgetError("Witt polynomial expansion exceeds the term budget");
        }
    return r;
}

Poly Poly::pow(unsigned long e) const {
    Poly acc = constant(n_, 1);
    Poly base = *this;
    while (e > 0) {
        if (e & 1) acc = acc * base;
        e >>= 1;
        if (e) base = base * base;
    }
    return acc;
}

Poly Poly::shift_pi(int k) const {
    Poly r(n_);
    for (const auto& [m, L] : terms_) {
        Laurent& dst = r.terms_[m];
        for (const auto& [j, c] : L) dst[j + k] = c;
    }
    return r;
}

std::map<Monomial, Rat> Poly::at_pi_equals(long p) const {
    std::map<Monomial, Rat> out;
    for (const auto& [m, L] : terms_) {
        Rat v = 0;
        for (const auto& [j, c] : L) {
            if (j >= 0)
                v += Rat(c * ipow(p, static_cast<unsigned long>(j)));
            else
                v += frac(c, ipow(p, static_cast<unsigned long>(-j)));
        }
        if (v != 0) out.emplace(m, v);
    }
    return out;
}

bool Poly::integral_at(long p) const {
    for (const auto& [m, v] : at_pi_equals(p))
        if (vp(v, p) < 0) return false;
    return true;
}

std::string Poly::str() const {
    std::vector<std::pair<Monomial, const Laurent*>> items;
    for (const auto& [m, L] : terms_) items.emplace_back(m, &L);
    auto deg = [](const Monomial& m) {
        unsigned d = 0;
        for (unsigned e : m) d += e;
        return d;
    };
    std::stable_sort(items.begin(), items.end(), [&](const auto& a, const auto& b) {
        unsigned da = deg(a.first), db = deg(b.first);
        if (da != db) return da < db;
        return a.first > b.first;
    });
    std::string out;
    for (const auto& [m, L] : items) {
        std::string mono;
        for (int i = 0; i < 2 * n_; ++i) {
            if (m[i] == 0) continue;
            if (!mono.empty()) mono += "*";
            mono += (i < n_ ? "x" : "y") + std::to_string(i % n_);
            if (m[i] > 1) mono += "^" + std::to_string(m[i]);
        }
        for (const auto& [j, c] : *L) {
            std::string coef = to_string(c);
            std::string body;
            if (j != 0) body = j == 1 ? "pi" : "pi^" + (j < 0 ? "(" + std::to_string(j) + ")" : std::to_string(j));
            if (!mono.empty()) body = body.empty() ? mono : body + "*" + mono;
            std::string term;
            if (body.empty())
                term = coef;
            else if (c == 1)
                term = body;
            else if (c == -1)
                term = "-" + body;
            else
                term = coef + "*" + body;
            if (out.empty())
                out = term;
            else if (term[0] == '-')
                out += " - " + term.substr(1);
            else
                out += " + " + term;
        }
    }
    return out.empty() ? "0" : out;
}

const std::vector<Poly>& universal_polys(int n, Op op, long q) {
    if (n < 1 || n > 4) throw DomainError("universal Witt polynomials are supported for 1 <= n <= 4");
    long p = char_of(q);
    log_p(q, p);
    static std::mutex mu;
    static std::map<std::tuple<int, int, long>, std::vector<Poly>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(n, static_cast<int>(op), q);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    auto ghost_poly = [&](bool is_y, int k) {
        Poly w(n);
        for (int i = 0; i <= k; ++i)
            w = w + Poly::var(n, is_y, i).pow(static_cast<unsigned long>(ipow(q, k - i).get_ui())).shift_pi(i);
        return w;
    };
    std::vector<Poly> S;
    for (int k = 0; k < n; ++k) {
        Poly g = op == Op::Add ? ghost_poly(false, k) + ghost_poly(true, k) : ghost_poly(false, k) * ghost_poly(true, k);
        for (int i = 0; i < k; ++i)
            g = g - S[i].pow(static_cast<unsigned long>(ipow(q, k - i).get_ui())).shift_pi(i);
        Poly Sk = g.shift_pi(-k);
        if (!Sk.integral_at(p)) throw VerificationError("non-integral universal Witt polynomial at index " + std::to_string(k));
        S.push_back(std::move(Sk));
    }
    return cache.emplace(key, std::move(S)).first->second;
}

std::vector<Int> ghost(const std::vector<Int>& x, long q, const Int& pi) {
    std::vector<Int> w;
    for (std::size_t k = 0; k < x.size(); ++k) {
        Int s = 0, pk = 1;
        for (std::size_t i = 0; i <= k; ++i) {
            Int t;
            mpz_pow_ui(t.get_mpz_t(), x[i].get_mpz_t(), ipow(q, k - i).get_ui());
            s += pk * t;
            pk *= pi;
        }
        w.push_back(s);
    }
    return w;
}

std::vector<Int> ghost_inverse(const std::vector<Int>& g, long q, const Int& pi) {
    std::vector<Int> x;
    for (std::size_t k = 0; k < g.size(); ++k) {
        Int s = g[k], pk = 1;
        for (std::size_t i = 0; i < k; ++i) {
            Int t;
            mpz_pow_ui(t.get_mpz_t(), x[i].get_mpz_t(), ipow(q, k - i).get_ui());
            s -= pk * t;
            pk *= pi;
        }
        if (pk == 0 || !mpz_divisible_p(s.get_mpz_t(), pk.get_mpz_t()))
            throw DomainError("ghost_inverse: component " + std::to_string(k) + " is not divisible by pi^" + std::to_string(k));
        x.push_back(s / pk);
    }
    return x;
}

std::vector<LocalElem> ghost(const std::vector<LocalElem>& x, long q, const LocalElem& pi) {
    std::vector<LocalElem> w;
    for (std::size_t k = 0; k < x.size(); ++k) {
        LocalElem s = pi.tower()->zero(), pk = pi.tower()->one();
        for (std::size_t i = 0; i <= k; ++i) {
            s += pk * x[i].pow(ipow(q, k - i).get_ui());
            pk *= pi;
        }
        w.push_back(s);
    }
    return w;
}

std::vector<LocalElem> ghost_inverse(const std::vector<LocalElem>& g, long q, const LocalElem& pi) {
    std::vector<LocalElem> x;
    for (std::size_t k = 0; k < g.size(); ++k) {
        LocalElem s = g[k], pk = pi.tower()->one();
        for (std::size_t i = 0; i < k; ++i) {
            s -= pk * x[i].pow(ipow(q, k - i).get_ui());
            pk *= pi;
        }
        x.push_back(k == 0 ? s : s.div_exact(pk));
    }
    return x;
}

std::string WittVec::str() const {
    std::string out = "(";
    for (std::size_t i = 0; i < x.size(); ++i) out += (i ? ", " : "") + x[i].str();
    return out + ")";
}

WittVec zero(const FqFieldPtr& field, long q, int n) { return {field, q, std::vector<FqElem>(n, field->zero())}; }

WittVec one(const FqFieldPtr& field, long q, int n) {
    WittVec w = zero(field, q, n);
    if (n > 0) w.x[0] = field->one();
    return w;
}

TowerPtr tower_for(long p, int field_degree, int f_K, long prec) {
    static std::mutex mu;
    static std::map<std::tuple<long, int, int, long>, TowerPtr> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(p, field_degree, f_K, prec);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    if (field_degree % f_K != 0) throw DomainError("residue field does not contain F_q");
    TowerSpec s = TowerSpec::mixed(p, prec);
    if (f_K > 1) s.unramified(f_K);
    int k = static_cast<int>(s.stages.size());
    if (field_degree / f_K > 1) s.unramified(field_degree / f_K);
    s.designate_k(k);
    TowerPtr T = LocalTower::build(s);
    cache.emplace(key, T);
    return T;
}

namespace {

void check_pair(const WittVec& a, const WittVec& b) {
    if (a.field.get() != b.field.get()) throw DomainError("Witt vectors over different fields");
    if (a.q != b.q) throw DomainError("Witt vectors for different q");
    if (a.x.size() != b.x.size()) throw DomainError("Witt vectors of different lengths");
}

int f_of(const WittVec& a) {
    long p = a.field->p();
    if (char_of(a.q) != p) throw DomainError("q is not a power of the field characteristic");
    int f = log_p(a.q, p);
    if (a.field->degree() % f != 0) throw DomainError("field does not contain F_q");
    return f;
}

WittVec via_tower(const WittVec& a, const WittVec& b, bool multiply) {
    check_pair(a, b);
    int f = f_of(a);
    int n = a.length();
    TowerPtr T = tower_for(a.field->p(), a.field->degree(), f, n);
    LocalElem X = to_tower(a, T), Y = to_tower(b, T);
    return from_tower(multiply ? X * Y : X + Y, a.field, a.q, n);
}

WittVec via_polys(const WittVec& a, const WittVec& b, Op op) {
    check_pair(a, b);
    f_of(a);
    const auto& P = universal_polys(a.length(), op, a.q);
    WittVec r = zero(a.field, a.q, a.length());
    for (int k = 0; k < a.length(); ++k) r.x[k] = eval_reduced(P[k], a.x, b.x);
    return r;
}

}  // namespace

WittVec add(const WittVec& a, const WittVec& b, Backend backend) {
    return backend == Backend::Tower ? via_tower(a, b, false) : via_polys(a, b, Op::Add);
}

WittVec mul(const WittVec& a, const WittVec& b, Backend backend) {
    return backend == Backend::Tower ? via_tower(a, b, true) : via_polys(a, b, Op::Mul);
}

LocalElem to_tower(const WittVec& a, const TowerPtr& T, bool twisted) {
    int f = f_of(a);
    const auto& k = T->residue_field();
    if (k->degree() != a.field->degree()) throw DomainError("tower residue field does not match the Witt field");
    LocalElem acc = T->zero();
    LocalElem pk = T->one();
    LocalElem p = T->from_int(T->p());
    for (int i = 0; i < a.length(); ++i) {
        FqElem c = twisted ? a.field->frobenius(a.x[i], -i, f) : a.x[i];
        acc += T->teichmuller(c) * pk;
        pk *= p;
    }
    return acc;
}

WittVec from_tower(const LocalElem& x, const FqFieldPtr& field, long q, int n, bool twisted) {
    WittVec w = zero(field, q, n);
    int f = f_of(w);
    const auto& T = x.tower();
    if (T->E() != 1) throw DomainError("Witt digits require an unramified tower");
    for (auto& [k, r] : T->digits(x)) {
        long i = k.get_si();
        if (i >= n) break;
        w.x[i] = twisted ? field->frobenius(r, i, f) : r;
    }
    return w;
}

FqElem eval_reduced(const Poly& P, const std::vector<FqElem>& x, const std::vector<FqElem>& y) {
    const FqField& F = x.at(0).field();
    long p = F.p();
    int n = P.n();
    FqElem acc = F.zero();
    for (const auto& [m, v] : P.at_pi_equals(p)) {
        Int num = v.get_num(), den = v.get_den();
        Int inv;
        Int pp(p);
        mpz_invert(inv.get_mpz_t(), den.get_mpz_t(), pp.get_mpz_t());
        FqElem c = F.from_int(Int(num * inv));
        if (c.is_zero()) continue;
        for (int i = 0; i < 2 * n; ++i)
            if (m[i]) c *= F.pow(i < n ? x[i] : y[i - n], static_cast<long>(m[i]));
        acc += c;
    }
    return acc;
}

LocalElem eval_tower(const Poly& P, const std::vector<LocalElem>& x, const std::vector<LocalElem>& y) {
    const TowerPtr& T = x.at(0).tower();
    int n = P.n();
    LocalElem acc = T->zero();
    for (const auto& [m, v] : P.at_pi_equals(T->p())) {
        LocalElem c = T->from_rat(v);
        for (int i = 0; i < 2 * n; ++i)
            if (m[i]) c *= (i < n ? x[i] : y[i - n]).pow(m[i]);
        acc += c;
    }
    return acc;
}

}  // namespace hw::witt
