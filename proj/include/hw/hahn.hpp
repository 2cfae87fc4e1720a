#pragma once

// Truncated Hahn series sum a_i t^i with finitely many rational exponents.
//
// Invariant: exponents strictly increase, sit strictly below the truncation
// order (when finite) and carry nonzero coefficients. The coefficient ring is
// a small policy object; see the rings at the end of this header.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hw/errors.hpp"
#include "hw/finite_field.hpp"
#include "hw/local_tower.hpp"
#include "hw/rational.hpp"

namespace hw {

/// Truncation order; nullopt stands for +infinity.
using Order = std::optional<Rat>;

inline Order order_min(const Order& a, const Order& b) {
    if (!a) return b;
    if (!b) return a;
    return *a < *b ? a : b;
}

inline Order order_add(const Order& a, const Order& b) {
    if (!a || !b) return std::nullopt;
    return Rat(*a + *b);
}

template <class Ring>
class HahnSeries {
public:
    using Elem = typename Ring::Elem;
    using Term = std::pair<Rat, Elem>;

    HahnSeries() = default;
    explicit HahnSeries(std::shared_ptr<const Ring> ring, Order order = std::nullopt)
        : ring_(std::move(ring)), order_(std::move(order)) {}

    static HahnSeries monomial(std::shared_ptr<const Ring> ring, const Elem& c, const Rat& e, Order order = std::nullopt) {
        HahnSeries s(std::move(ring), std::move(order));
        s.set(e, c);
        return s;
    }

    /// Builds from arbitrary terms: sorts, merges equal exponents and drops zeros.
    static HahnSeries from_terms(std::shared_ptr<const Ring> ring, std::vector<Term> terms, Order order = std::nullopt) {
        HahnSeries s(std::move(ring), std::move(order));
        std::map<Rat, Elem> acc;
        for (auto& [e, c] : terms) {
            e.canonicalize();
            auto it = acc.find(e);
            if (it == acc.end())
                acc.emplace(e, c);
            else
                it->second = s.ring_->add(it->second, c);
        }
        s.assign(acc);
        return s;
    }

    const Ring& ring() const { return *ring_; }
    const std::shared_ptr<const Ring>& ring_ptr() const { return ring_; }
    const std::vector<Term>& terms() const { return terms_; }
    const Order& order() const { return order_; }
    bool is_zero() const { return terms_.empty(); }

    /// Smallest exponent, or the truncation order for the zero series.
    Order min_exponent() const {
        if (terms_.empty()) return order_;
        return terms_.front().first;
    }

    Elem coeff(const Rat& e) const {
        for (const auto& [x, c] : terms_)
            if (x == e) return c;
        return ring_->zero();
    }

    HahnSeries truncated(const Rat& order) const {
        HahnSeries s(ring_, order_min(order_, Order(order)));
        for (const auto& t : terms_)
            if (!s.order_ || t.first < *s.order_) s.terms_.push_back(t);
        return s;
    }

    HahnSeries operator+(const HahnSeries& b) const { return combine(b, false); }
    HahnSeries operator-(const HahnSeries& b) const { return combine(b, true); }
    HahnSeries operator-() const {
        HahnSeries s(ring_, order_);
        for (const auto& [e, c] : terms_) s.terms_.emplace_back(e, ring_->neg(c));
        return s;
    }

    HahnSeries operator*(const HahnSeries& b) const {
        check_ring(b);
        Order order = order_min(order_add(order_, b.min_exponent()), order_add(b.order_, min_exponent()));
        std::map<Rat, Elem> acc;
        for (const auto& [ea, ca] : terms_)
            for (const auto& [eb, cb] : b.terms_) {
                Rat e = ea + eb;
                if (order && e >= *order) continue;
                Elem pr = ring_->mul(ca, cb);
                auto it = acc.find(e);
                if (it == acc.end())
                    acc.emplace(e, pr);
                else
                    it->second = ring_->add(it->second, pr);
            }
        HahnSeries s(ring_, order);
        s.assign(acc);
        return s;
    }

    HahnSeries scaled(const Elem& c) const {
        HahnSeries s(ring_, order_);
        std::map<Rat, Elem> acc;
        for (const auto& [e, x] : terms_) acc.emplace(e, ring_->mul(c, x));
        s.assign(acc);
        return s;
    }

    HahnSeries shifted(const Rat& by) const {
        HahnSeries s(ring_, order_ ? Order(Rat(*order_ + by)) : std::nullopt);
        for (const auto& [e, c] : terms_) s.terms_.emplace_back(e + by, c);
        return s;
    }

    /// Equal as truncated series (compared below the smaller order).
    bool equals(const HahnSeries& b) const { return (*this - b).is_zero(); }

    std::string str() const {
        std::string out;
        for (const auto& [e, c] : terms_) {
            if (!out.empty()) out += " + ";
            out += "[" + ring_->str(c) + "]*t^(" + to_string(e) + ")";
        }
        if (out.empty()) out = "0";
        if (order_) out += " + O(t^(" + to_string(*order_) + "))";
        return out;
    }

private:
    std::shared_ptr<const Ring> ring_;
    std::vector<Term> terms_;
    Order order_;

    void check_ring(const HahnSeries& b) const {
        if (ring_->id() != b.ring_->id()) throw DomainError("Hahn series over different rings: " + ring_->id() + " vs " + b.ring_->id());
    }

    void set(const Rat& e, const Elem& c) {
        Rat ec = e;
        ec.canonicalize();
        std::map<Rat, Elem> acc{{ec, c}};
        assign(acc);
    }

    void assign(const std::map<Rat, Elem>& acc) {
        terms_.clear();
        for (const auto& [e, c] : acc) {
            if (order_ && e >= *order_) continue;
            if (ring_->is_zero(c)) continue;
            terms_.emplace_back(e, c);
        }
    }

    HahnSeries combine(const HahnSeries& b, bool subtract) const {
        check_ring(b);
        std::map<Rat, Elem> acc;
        for (const auto& [e, c] : terms_) acc.emplace(e, c);
        for (const auto& [e, c] : b.terms_) {
            Elem v = subtract ? ring_->neg(c) : c;
            auto it = acc.find(e);
            if (it == acc.end())
                acc.emplace(e, v);
            else
                it->second = ring_->add(it->second, v);
        }
        HahnSeries s(ring_, order_min(order_, b.order_));
        s.assign(acc);
        return s;
    }
};

namespace hahn_detail {

// Exponents grouped by class modulo 1, each group ascending.
template <class Ring>
std::vector<std::vector<typename HahnSeries<Ring>::Term>> classes(const HahnSeries<Ring>& f) {
    std::map<Rat, std::vector<typename HahnSeries<Ring>::Term>> by;
    for (const auto& t : f.terms()) {
        Rat key = t.first - Rat(floor(t.first));
        by[key].push_back(t);
    }
    std::vector<std::vector<typename HahnSeries<Ring>::Term>> out;
    for (auto& [k, v] : by) out.push_back(std::move(v));
    return out;
}

}  // namespace hahn_detail

/// True iff every exponent class mod 1 satisfies sum_n a_{i+n} r^n == 0 modulo r^k.
/// With k unset the ring's full precision (and the truncation order) decide.
/// Throws BudgetError when the data cannot determine the answer to precision k.
template <class Ring>
bool is_null_series(const HahnSeries<Ring>& f, const typename Ring::Elem& r, std::optional<long> k = std::nullopt) {
    const Ring& R = f.ring();
    for (const auto& cls : hahn_detail::classes(f)) {
        const Rat& i0 = cls.front().first;
        std::optional<long> need = k;
        if (f.order()) {
            // Unknown terms at exponents >= order contribute multiples of r^{ceil(order - i0)}.
            long known = ceil(Rat(*f.order() - i0)).get_si();
            if (need && *need > known) throw BudgetError("null-series test needs more terms than the truncation keeps");
            if (!need) need = known;
        }
        typename Ring::Elem sum = R.zero();
        for (auto it = cls.rbegin(); it != cls.rend(); ++it) {
            // Horner over consecutive integer offsets.
            long gap = 0;
            auto nx = std::next(it);
            if (nx != cls.rend()) gap = Int(floor(it->first - nx->first)).get_si();
            sum = R.add(sum, it->second);
            if (nx != cls.rend()) sum = R.mul(sum, R.pow(r, static_cast<unsigned long>(gap)));
        }
        std::optional<bool> z = R.vanishes_mod_r_pow(sum, r, need);
        if (!z) throw BudgetError("null-series test: insufficient coefficient precision");
        if (!*z) return false;
    }
    return true;
}

/// f/(t - r) = sum_i (sum_{n>=0} a_{i+n+1} r^n) t^i for a null series f.
template <class Ring>
HahnSeries<Ring> divide_by_t_minus_r(const HahnSeries<Ring>& f, const typename Ring::Elem& r, std::optional<long> k = std::nullopt) {
    if (!is_null_series(f, r, k)) throw DomainError("divide_by_t_minus_r: series is not null");
    const Ring& R = f.ring();
    std::vector<typename HahnSeries<Ring>::Term> out;
    for (const auto& cls : hahn_detail::classes(f)) {
        const Rat& lo = cls.front().first;
        const Rat& hi = cls.back().first;
        long span = Int(floor(hi - lo)).get_si();
        // b_{hi-1} = a_hi, b_{i} = a_{i+1} + r b_{i+1}, for lo <= i <= hi - 1.
        std::map<Rat, typename Ring::Elem> a(cls.begin(), cls.end());
        typename Ring::Elem b = R.zero();
        for (long j = span - 1; j >= 0; --j) {
            Rat e = lo + j;
            auto it = a.find(e + 1);
            b = R.mul(b, r);
            if (it != a.end()) b = R.add(b, it->second);
            out.emplace_back(e, b);
        }
    }
    Order order = f.order() ? Order(Rat(*f.order() - 1)) : std::nullopt;
    return HahnSeries<Ring>::from_terms(f.ring_ptr(), std::move(out), order);
}

// ---------------------------------------------------------------- rings

/// Exact integers.
struct IntRing {
    using Elem = Int;
    std::string id() const { return "Z"; }
    Int zero() const { return 0; }
    Int one() const { return 1; }
    bool is_zero(const Int& a) const { return a == 0; }
    Int add(const Int& a, const Int& b) const { return a + b; }
    Int neg(const Int& a) const { return -a; }
    Int mul(const Int& a, const Int& b) const { return a * b; }
    Int pow(const Int& a, unsigned long e) const {
        Int r;
        mpz_pow_ui(r.get_mpz_t(), a.get_mpz_t(), e);
        return r;
    }
    std::string str(const Int& a) const { return to_string(a); }
    std::optional<bool> vanishes_mod_r_pow(const Int& a, const Int& r, std::optional<long> k) const {
        if (!k) return a == 0;
        Int m = pow(r, static_cast<unsigned long>(*k));
        return mpz_divisible_p(a.get_mpz_t(), m.get_mpz_t()) != 0;
    }
};

/// Z / p^N.
struct ZmodRing {
    using Elem = Int;
    long p;
    long N;
    Int M;
    ZmodRing(long p_, long N_) : p(p_), N(N_), M(ipow(p_, static_cast<unsigned long>(N_))) {}
    std::string id() const { return "Z/" + std::to_string(p) + "^" + std::to_string(N); }
    Int red(Int a) const {
        mpz_fdiv_r(a.get_mpz_t(), a.get_mpz_t(), M.get_mpz_t());
        return a;
    }
    Int zero() const { return 0; }
    Int one() const { return 1; }
    bool is_zero(const Int& a) const { return red(a) == 0; }
    Int add(const Int& a, const Int& b) const { return red(a + b); }
    Int neg(const Int& a) const { return red(-a); }
    Int mul(const Int& a, const Int& b) const { return red(a * b); }
    Int pow(const Int& a, unsigned long e) const {
        Int r;
        mpz_powm_ui(r.get_mpz_t(), a.get_mpz_t(), e, M.get_mpz_t());
        return r;
    }
    std::string str(const Int& a) const { return to_string(red(a)); }
    /// Valid for r = p^j * unit with j >= 1.
    std::optional<bool> vanishes_mod_r_pow(const Int& a, const Int& r, std::optional<long> k) const {
        Int rr = red(r);
        if (rr == 0) return std::nullopt;
        long j = vp(rr, p);
        if (j == 0) return std::nullopt;
        long kk = k ? *k : N / j;
        if (kk * j > N) return std::nullopt;
        Int m = ipow(p, static_cast<unsigned long>(kk * j));
        return mpz_divisible_p(red(a).get_mpz_t(), m.get_mpz_t()) != 0;
    }
};

/// A finite field; no null-series support (no non-unit non-zero-divisors).
struct FqRing {
    using Elem = FqElem;
    FqFieldPtr F;
    explicit FqRing(FqFieldPtr f) : F(std::move(f)) {}
    std::string id() const { return "F_" + std::to_string(F->size()); }
    FqElem zero() const { return F->zero(); }
    FqElem one() const { return F->one(); }
    bool is_zero(const FqElem& a) const { return a.is_zero(); }
    FqElem add(const FqElem& a, const FqElem& b) const { return a + b; }
    FqElem neg(const FqElem& a) const { return -a; }
    FqElem mul(const FqElem& a, const FqElem& b) const { return a * b; }
    FqElem pow(const FqElem& a, unsigned long e) const { return F->pow(a, static_cast<long>(e)); }
    std::string str(const FqElem& a) const { return a.str(); }
};

/// Integers of a local tower, with precision caps.
struct TowerRing {
    using Elem = LocalElem;
    TowerPtr T;
    explicit TowerRing(TowerPtr t) : T(std::move(t)) {}
    std::string id() const { return T->spec().to_json(); }
    LocalElem zero() const { return T->zero(); }
    LocalElem one() const { return T->one(); }
    bool is_zero(const LocalElem& a) const { return a.is_zero(); }
    LocalElem add(const LocalElem& a, const LocalElem& b) const { return a + b; }
    LocalElem neg(const LocalElem& a) const { return -a; }
    LocalElem mul(const LocalElem& a, const LocalElem& b) const { return a * b; }
    LocalElem pow(const LocalElem& a, unsigned long e) const { return a.pow(e); }
    std::string str(const LocalElem& a) const { return a.str(); }
    std::optional<bool> vanishes_mod_r_pow(const LocalElem& a, const LocalElem& r, std::optional<long> k) const {
        Val vr = r.valuation_abs();
        if (!vr.exact || vr.value <= 0) return std::nullopt;
        Val va = a.valuation_abs();
        Rat need = k ? Rat(Rat(*k) * vr.value) : a.cap_abs();
        if (va.exact) return va.value >= need;
        return a.cap_abs() >= need ? std::optional<bool>(true) : std::nullopt;
    }
};

}  // namespace hw
