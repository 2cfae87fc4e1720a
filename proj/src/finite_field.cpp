#include "hw/finite_field.hpp"

#include <algorithm>
#include <mutex>

#include "hw/errors.hpp"
#include "hw/expr.hpp"

namespace hw {

namespace {

using Poly = std::vector<long>;  // c_0..c_n over F_p

void trim(Poly& a) {
    while (!a.empty() && a.back() == 0) a.pop_back();
}

long mod(long a, long p) {
    long r = a % p;
    return r < 0 ? r + p : r;
}

long inv_mod(long a, long p) {
    long t = 0, nt = 1, r = p, nr = mod(a, p);
    while (nr != 0) {
        long q = r / nr;
        std::tie(t, nt) = std::make_pair(nt, t - q * nt);
        std::tie(r, nr) = std::make_pair(nr, r - q * nr);
    }
    return mod(t, p);
}

Poly poly_rem(Poly a, const Poly& f, long p) {
    trim(a);
    Poly g = f;
    trim(g);
    long lead_inv = inv_mod(g.back(), p);
    while (a.size() >= g.size()) {
        long c = a.back() * lead_inv % p;
        std::size_t shift = a.size() - g.size();
        for (std::size_t i = 0; i < g.size(); ++i) a[shift + i] = mod(a[shift + i] - c * g[i], p);
        trim(a);
    }
    return a;
}

Poly poly_mulmod(const Poly& a, const Poly& b, const Poly& f, long p) {
    if (a.empty() || b.empty()) return {};
    Poly c(a.size() + b.size() - 1, 0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) c[i + j] = (c[i + j] + a[i] * b[j]) % p;
    return poly_rem(c, f, p);
}

Poly poly_gcd(Poly a, Poly b, long p) {
    trim(a);
    trim(b);
    while (!b.empty()) {
        Poly r = poly_rem(a, b, p);
        a = std::move(b);
        b = std::move(r);
    }
    return a;
}

Poly frob_power_of_x(const Poly& f, long p, int k) {
    // x^{p^k} mod f
    Poly x = poly_rem({0, 1}, f, p);
    for (int i = 0; i < k; ++i) {
        Poly r = {1};
        Poly base = x;
        long e = p;
        while (e > 0) {
            if (e & 1) r = poly_mulmod(r, base, f, p);
            base = poly_mulmod(base, base, f, p);
            e >>= 1;
        }
        x = r;
    }
    return x;
}

std::vector<int> prime_factors(long n) {
    std::vector<int> out;
    for (long d = 2; d * d <= n; ++d) {
        if (n % d == 0) {
            out.push_back(static_cast<int>(d));
            while (n % d == 0) n /= d;
        }
    }
    if (n > 1) out.push_back(static_cast<int>(n));
    return out;
}

}  // namespace

bool is_irreducible_mod_p(const std::vector<long>& f_in, long p) {
    Poly f = f_in;
    trim(f);
    int n = static_cast<int>(f.size()) - 1;
    if (n < 1) return false;
    if (n == 1) return true;
    Poly xq = frob_power_of_x(f, p, n);
    Poly diff = xq;
    diff.resize(std::max<std::size_t>(diff.size(), 2), 0);
    diff[1] = mod(diff[1] - 1, p);
    trim(diff);
    if (!diff.empty()) return false;
    for (int r : prime_factors(n)) {
        Poly h = frob_power_of_x(f, p, n / r);
        h.resize(std::max<std::size_t>(h.size(), 2), 0);
        h[1] = mod(h[1] - 1, p);
        trim(h);
        Poly g = poly_gcd(f, h, p);
        if (g.size() != 1) return false;
    }
    return true;
}

std::vector<long> min_irreducible(long p, int D) {
    if (D == 1) return {0, 1};
    // Enumerate c_0..c_{D-1} with c_0 most significant.
    std::uint64_t total = 1;
    for (int i = 0; i < D; ++i) total *= static_cast<std::uint64_t>(p);
    for (std::uint64_t k = 0; k < total; ++k) {
        Poly f(D + 1, 0);
        std::uint64_t r = k;
        for (int i = D - 1; i >= 0; --i) {
            f[i] = static_cast<long>(r % p);
            r /= p;
        }
        f[D] = 1;
        if (is_irreducible_mod_p(f, p)) return f;
    }
    throw DomainError("no irreducible polynomial found");
}

FqField::FqField(long p, int degree) : p_(p), degree_(degree) {
    std::uint64_t sz = 1;
    for (int i = 0; i < degree; ++i) {
        sz *= static_cast<std::uint64_t>(p);
        if (sz > (1u << 24)) throw DomainError("finite field too large (p^D must stay below 2^24)");
    }
    size_ = static_cast<std::uint32_t>(sz);
    pow_p_.resize(degree + 1);
    pow_p_[0] = 1;
    for (int i = 1; i <= degree; ++i) pow_p_[i] = pow_p_[i - 1] * static_cast<std::uint32_t>(p);
    Poly internal = min_irreducible(p, degree);
    if (degree > 1) modulus_ = internal;

    // Primitive element search in lexicographic order, then exp/log tables.
    std::uint32_t n1 = size_ - 1;
    log_.assign(size_, 0);
    exp_.assign(std::max<std::uint32_t>(n1, 1), 1);
    if (n1 == 0) return;
    auto slow_pow = [&](std::uint32_t g, std::uint64_t e) {
        std::uint32_t r = 1;
        std::uint32_t b = g;
        while (e > 0) {
            if (e & 1) r = poly_mul_code(r, b);
            b = poly_mul_code(b, b);
            e >>= 1;
        }
        return r;
    };
    auto factors = prime_factors(n1);
    std::uint32_t prim = 0;
    for (std::uint32_t k = 1; k < size_ && prim == 0; ++k) {
        std::uint32_t code = element_at(k).code();
        if (code == 0) continue;
        bool ok = true;
        for (int r : factors) {
            if (slow_pow(code, n1 / static_cast<std::uint32_t>(r)) == 1) {
                ok = false;
                break;
            }
        }
        if (ok) prim = code;
    }
    std::uint32_t cur = 1;
    for (std::uint32_t k = 0; k < n1; ++k) {
        exp_[k] = cur;
        log_[cur] = k;
        cur = poly_mul_code(cur, prim);
    }
}

std::vector<long> FqField::digits(std::uint32_t code) const {
    std::vector<long> c(degree_);
    for (int i = 0; i < degree_; ++i) {
        c[i] = code % p_;
        code /= static_cast<std::uint32_t>(p_);
    }
    return c;
}

std::uint32_t FqField::encode(const std::vector<long>& c) const {
    std::uint32_t code = 0;
    for (int i = degree_ - 1; i >= 0; --i) {
        long v = i < static_cast<int>(c.size()) ? mod(c[i], p_) : 0;
        code = code * static_cast<std::uint32_t>(p_) + static_cast<std::uint32_t>(v);
    }
    return code;
}

std::uint32_t FqField::poly_mul_code(std::uint32_t a, std::uint32_t b) const {
    Poly internal = degree_ > 1 ? modulus_ : Poly{0, 1};
    Poly pa = digits(a), pb = digits(b);
    trim(pa);
    trim(pb);
    return encode(poly_mulmod(pa, pb, internal, p_));
}

std::shared_ptr<const FqField> FqField::make(long p, int degree) {
    if (!is_prime(p)) throw DomainError("characteristic " + std::to_string(p) + " is not prime");
    if (degree < 1) throw DomainError("field degree must be positive");
    static std::mutex mu;
    static std::map<std::pair<long, int>, std::shared_ptr<const FqField>> cache;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find({p, degree});
        if (it != cache.end()) return it->second;
    }
    // Subfields first (outside the lock, since make recurses).
    std::map<int, std::shared_ptr<const FqField>> subs;
    for (int d = 2; d < degree; ++d)
        if (degree % d == 0) subs[d] = make(p, d);
    std::shared_ptr<FqField> f(new FqField(p, degree));
    f->embed_gen_[1] = 0;
    f->embed_gen_[degree] = degree > 1 ? f->gen().code() : 0;
    for (auto& [d, sub] : subs) {
        const auto& m = sub->modulus();
        for (std::uint32_t k = 0; k < f->size_; ++k) {
            FqElem r = f->element_at(k);
            FqElem acc = f->zero();
            for (int i = static_cast<int>(m.size()) - 1; i >= 0; --i) acc = acc * r + f->from_int(m[i]);
            if (acc.is_zero()) {
                f->embed_gen_[d] = r.code();
                break;
            }
        }
    }
    std::lock_guard<std::mutex> lock(mu);
    auto [it, inserted] = cache.emplace(std::make_pair(p, degree), f);
    return it->second;
}

FqElem FqField::gen() const { return degree_ > 1 ? FqElem(this, static_cast<std::uint32_t>(p_)) : zero(); }

FqElem FqField::from_int(long v) const { return {this, static_cast<std::uint32_t>(mod(v, p_))}; }

FqElem FqField::from_int(const Int& v) const {
    Int r;
    mpz_fdiv_r_ui(r.get_mpz_t(), v.get_mpz_t(), static_cast<unsigned long>(p_));
    return {this, static_cast<std::uint32_t>(r.get_ui())};
}

FqElem FqField::from_coeffs(const std::vector<long>& c) const {
    if (static_cast<int>(c.size()) > degree_) {
        Poly internal = degree_ > 1 ? modulus_ : Poly{0, 1};
        Poly r(c.begin(), c.end());
        for (auto& x : r) x = mod(x, p_);
        return {this, encode(poly_rem(r, internal, p_))};
    }
    return {this, encode(c)};
}

std::vector<long> FqField::coeffs(const FqElem& a) const { return digits(a.code()); }

FqElem FqField::element_at(std::uint32_t k) const {
    // k = sum c_i p^{D-1-i}
    std::vector<long> c(degree_);
    for (int i = degree_ - 1; i >= 0; --i) {
        c[i] = k % p_;
        k /= static_cast<std::uint32_t>(p_);
    }
    return {this, encode(c)};
}

std::uint32_t FqField::lex_index(const FqElem& a) const {
    auto c = digits(a.code());
    std::uint32_t k = 0;
    for (int i = 0; i < degree_; ++i) k = k * static_cast<std::uint32_t>(p_) + static_cast<std::uint32_t>(c[i]);
    return k;
}

std::vector<FqElem> FqField::elements() const {
    std::vector<FqElem> out;
    out.reserve(size_);
    for (std::uint32_t k = 0; k < size_; ++k) out.push_back(element_at(k));
    return out;
}

FqElem FqField::add(const FqElem& a, const FqElem& b) const {
    if (p_ == 2) return {this, a.code() ^ b.code()};
    std::uint32_t x = a.code(), y = b.code(), out = 0;
    for (int i = 0; i < degree_; ++i) {
        std::uint32_t s = (x % p_ + y % p_) % p_;
        out += s * pow_p_[i];
        x /= static_cast<std::uint32_t>(p_);
        y /= static_cast<std::uint32_t>(p_);
    }
    return {this, out};
}

FqElem FqField::neg(const FqElem& a) const {
    if (p_ == 2) return a;
    std::uint32_t x = a.code(), out = 0;
    for (int i = 0; i < degree_; ++i) {
        std::uint32_t d = x % p_;
        out += ((p_ - d) % p_) * pow_p_[i];
        x /= static_cast<std::uint32_t>(p_);
    }
    return {this, out};
}

FqElem FqField::sub(const FqElem& a, const FqElem& b) const { return add(a, neg(b)); }

FqElem FqField::mul(const FqElem& a, const FqElem& b) const {
    if (a.is_zero() || b.is_zero()) return zero();
    std::uint32_t n1 = size_ - 1;
    return {this, exp_[(static_cast<std::uint64_t>(log_[a.code()]) + log_[b.code()]) % n1]};
}

FqElem FqField::inv(const FqElem& a) const {
    if (a.is_zero()) throw DomainError("inverse of zero in F_" + std::to_string(size_));
    std::uint32_t n1 = size_ - 1;
    return {this, exp_[(n1 - log_[a.code()]) % n1]};
}

FqElem FqField::pow(const FqElem& a, const Int& e) const {
    if (a.is_zero()) {
        if (e == 0) return one();
        if (e < 0) throw DomainError("negative power of zero");
        return zero();
    }
    std::uint32_t n1 = size_ - 1;
    Int k = e * Int(log_[a.code()]);
    Int r;
    mpz_fdiv_r_ui(r.get_mpz_t(), k.get_mpz_t(), n1);
    return {this, exp_[r.get_ui()]};
}

FqElem FqField::frobenius(const FqElem& a, long k, int base_degree) const {
    if (base_degree <= 0 || degree_ % base_degree != 0)
        throw DomainError("frobenius: base degree " + std::to_string(base_degree) + " does not divide " +
                          std::to_string(degree_));
    long steps = mod(k * base_degree, degree_);
    return pow(a, ipow(p_, static_cast<unsigned long>(steps)));
}

bool FqField::in_subfield(const FqElem& a, int d) const {
    if (d <= 0 || degree_ % d != 0)
        throw DomainError("in_subfield: " + std::to_string(d) + " does not divide " + std::to_string(degree_));
    return pow(a, ipow(p_, static_cast<unsigned long>(d))) == a;
}

FqElem FqField::embed(const FqElem& x) const {
    const FqField& sub = x.field();
    if (&sub == this) return x;
    if (sub.p() != p_ || degree_ % sub.degree() != 0)
        throw DomainError("no embedding of F_" + std::to_string(sub.size()) + " into F_" + std::to_string(size_));
    auto c = sub.coeffs(x);
    if (sub.degree() == 1) return from_int(c[0]);
    FqElem r(this, embed_gen_.at(sub.degree()));
    FqElem acc = zero();
    for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i) acc = acc * r + from_int(c[i]);
    return acc;
}

FqElem FqField::restrict_to(const FqElem& a, const FqField& sub) const {
    if (&sub == this) return a;
    for (std::uint32_t k = 0; k < sub.size(); ++k) {
        FqElem s = sub.element_at(k);
        if (embed(s) == a) return s;
    }
    throw DomainError(to_string(a) + " does not lie in the subfield F_" + std::to_string(sub.size()));
}

std::string FqField::to_string(const FqElem& a) const {
    auto c = coeffs(a);
    if (degree_ == 1) return std::to_string(c[0]);
    std::string out;
    for (int i = degree_ - 1; i >= 0; --i) {
        if (c[i] == 0) continue;
        if (!out.empty()) out += "+";
        std::string coef = std::to_string(c[i]);
        if (i == 0)
            out += coef;
        else {
            if (c[i] != 1) out += coef + "*";
            out += "g";
            if (i > 1) out += "^" + std::to_string(i);
        }
    }
    return out.empty() ? "0" : out;
}

namespace {

struct FqEnv {
    const FqField& F;
    FqElem from_int(const Int& v) { return F.from_int(v); }
    FqElem symbol(const std::string& name) {
        if (name == "g" && F.degree() > 1) return F.gen();
        throw DomainError("unknown symbol '" + name + "' in F_" + std::to_string(F.size()) + " element");
    }
    FqElem add(FqElem a, FqElem b) { return a + b; }
    FqElem sub(FqElem a, FqElem b) { return a - b; }
    FqElem mul(FqElem a, FqElem b) { return a * b; }
    FqElem neg(FqElem a) { return -a; }
    FqElem div(FqElem a, FqElem b) { return a / b; }
    FqElem pow(FqElem a, const Rat& e) {
        if (e.get_den() != 1) throw DomainError("fractional power of a finite-field element");
        return F.pow(a, Int(e.get_num()));
    }
    FqElem teich(const expr::Node&) { throw DomainError("Teichmuller brackets are not allowed in F_q elements"); }
};

}  // namespace

FqElem FqField::parse(const std::string& s) const {
    FqEnv env{*this};
    return expr::eval<FqElem>(*expr::parse(s), env);
}

std::vector<std::pair<FqElem, int>> FqField::roots(std::vector<FqElem> poly) const {
    while (!poly.empty() && poly.back().is_zero()) poly.pop_back();
    if (poly.empty()) throw DomainError("roots of the zero polynomial");
    std::vector<std::pair<FqElem, int>> out;
    for (std::uint32_t k = 0; k < size_ && poly.size() > 1; ++k) {
        FqElem x = element_at(k);
        int mult = 0;
        for (;;) {
            // Synthetic division by (X - x).
            std::vector<FqElem> q(poly.size() - 1, zero());
            FqElem acc = zero();
            for (int i = static_cast<int>(poly.size()) - 1; i >= 1; --i) {
                acc = acc * x + poly[i];
                q[i - 1] = acc;
            }
            FqElem rem = acc * x + poly[0];
            if (!rem.is_zero()) break;
            poly = std::move(q);
            ++mult;
            if (poly.size() <= 1) break;
        }
        if (mult > 0) out.emplace_back(x, mult);
    }
    return out;
}

bool FqElem::is_one() const { return code_ == 1; }
FqElem FqElem::operator+(const FqElem& b) const { return field_->add(*this, b); }
FqElem FqElem::operator-(const FqElem& b) const { return field_->sub(*this, b); }
FqElem FqElem::operator-() const { return field_->neg(*this); }
FqElem FqElem::operator*(const FqElem& b) const { return field_->mul(*this, b); }
FqElem FqElem::operator/(const FqElem& b) const { return field_->mul(*this, field_->inv(b)); }
bool FqElem::operator<(const FqElem& b) const { return field_->lex_index(*this) < field_->lex_index(b); }
std::string FqElem::str() const { return field_->to_string(*this); }

}  // namespace hw
