#include "hw/family.hpp"

#include <algorithm>
#include <sstream>

#include "hw/errors.hpp"

namespace hw::family {

namespace {

Rat qpow_neg(long q, long k) {
    // q^{-k}
    if (k >= 0) return frac(1, ipow(q, static_cast<unsigned long>(k)));
    return Rat(ipow(q, static_cast<unsigned long>(-k)));
}

Rat frac_part(const Rat& a) { return a - Rat(floor(a)); }

std::string word_str(const Word& w) {
    std::string s = "(";
    for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
    return s + ")";
}

}  // namespace

const std::map<Word, Int>& quasi_shuffle(const Word& u, const Word& v) {
    static std::map<std::pair<Word, Word>, std::map<Word, Int>> cache;
    auto key = std::make_pair(u, v);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    std::map<Word, Int> out;
    if (u.empty()) {
        out[v] = 1;
    } else if (v.empty()) {
        out[u] = 1;
    } else {
        Word ut(u.begin() + 1, u.end()), vt(v.begin() + 1, v.end());
        auto prepend = [&](int letter, const std::map<Word, Int>& m) {
            for (const auto& [w, c] : m) {
                Word x;
                x.reserve(w.size() + 1);
                x.push_back(letter);
                x.insert(x.end(), w.begin(), w.end());
                out[x] += c;
            }
        };
        auto a = quasi_shuffle(ut, v);
        auto b = quasi_shuffle(u, vt);
        auto c = quasi_shuffle(ut, vt);
        prepend(u[0], a);
        prepend(v[0], b);
        prepend(u[0] + v[0], c);
    }
    return cache.emplace(key, std::move(out)).first->second;
}

Series::Series(TowerPtr T, Rat bound, int start) : T_(std::move(T)), B_(std::move(bound)), S_(start) {
    if (T_->E() != T_->e_K()) throw DomainError("family series need an unramified coefficient extension of K");
    q_ = T_->q().get_si();
}

Series Series::monomial(const TowerPtr& T, const Rat& bound, const LocalElem& c, const Rat& alpha) {
    Series s(T, bound);
    s.insert(alpha, s.S_, {}, c);
    s.clean();
    return s;
}

Series Series::family(const TowerPtr& T, const Rat& bound, const LocalElem& c, const Rat& alpha, int start, Word w) {
    for (int x : w)
        if (x <= 0) throw DomainError("family letters must be positive");
    Series s(T, bound);
    s.insert(alpha, start, std::move(w), c);
    s.clean();
    return s;
}

std::vector<Term> Series::terms() const {
    std::vector<Term> out;
    for (const auto& [k, e] : terms_) out.push_back({e.alpha, k.word, e.c});
    return out;
}

Rat Series::min_exponent(const Rat& alpha, const Word& w) const {
    Rat r = alpha;
    for (std::size_t i = 0; i < w.size(); ++i) r -= w[i] * qpow_neg(q_, S_ + static_cast<long>(i));
    return r;
}

Rat Series::term_valuation(const Term& t) const { return t.coeff.valuation().value + min_exponent(t.alpha, t.word); }

Rat Series::valuation_lower_bound() const {
    Rat m = B_;
    for (const auto& [k, e] : terms_) m = std::min<Rat>(m, e.c.valuation().value + min_exponent(e.alpha, k.word));
    return m;
}

void Series::insert(const Rat& alpha, int s, Word w, const LocalElem& c) {
    if (!w.empty()) {
        while (std::all_of(w.begin(), w.end(), [&](int x) { return x % q_ == 0; })) {
            for (int& x : w) x = static_cast<int>(x / q_);
            --s;
        }
        if (s < S_) {
            Word tail(w.begin() + 1, w.end());
            insert(alpha - w[0] * qpow_neg(q_, s), s + 1, std::move(tail), c);
            insert(alpha, s + 1, std::move(w), c);
            return;
        }
        if (s > S_) {
            Word tail(w.begin() + 1, w.end());
            insert(alpha - w[0] * qpow_neg(q_, s - 1), s, std::move(tail), -c);
            insert(alpha, s - 1, std::move(w), c);
            return;
        }
    }
    add_canonical(alpha, w, c);
}

void Series::add_canonical(const Rat& alpha, const Word& w, const LocalElem& c) {
    Key key{w, frac_part(alpha)};
    auto it = terms_.find(key);
    if (it == terms_.end()) {
        terms_.emplace(std::move(key), Entry{alpha, c});
        return;
    }
    Entry& e = it->second;
    if (alpha >= e.alpha) {
        e.c += c * T_->pi_K().pow(Int(alpha - e.alpha).get_ui());
    } else {
        e.c = e.c * T_->pi_K().pow(Int(e.alpha - alpha).get_ui()) + c;
        e.alpha = alpha;
    }
}

void Series::clean() {
    for (auto it = terms_.begin(); it != terms_.end();) {
        Rat me = min_exponent(it->second.alpha, it->first.word);
        Val v = it->second.c.valuation();
        B_ = std::min<Rat>(B_, it->second.c.cap() + me);
        if (!v.exact)
            it = terms_.erase(it);
        else
            ++it;
    }
    for (auto it = terms_.begin(); it != terms_.end();) {
        Rat tv = it->second.c.valuation().value + min_exponent(it->second.alpha, it->first.word);
        if (tv >= B_)
            it = terms_.erase(it);
        else
            ++it;
    }
}

Series Series::peeled() const {
    Series out(T_, B_, S_ + 1);
    for (const auto& [k, e] : terms_) out.insert(e.alpha, S_, k.word, e.c);
    out.clean();
    return out;
}

Series Series::aligned(int S) const {
    if (S < S_) throw DomainError("cannot lower the start of a family series");
    Series x = *this;
    while (x.S_ < S) x = x.peeled();
    return x;
}

Series Series::operator+(const Series& b) const {
    int S = std::max(S_, b.S_);
    Series x = aligned(S), y = b.aligned(S);
    x.B_ = std::min<Rat>(x.B_, y.B_);
    for (const auto& [k, e] : y.terms_) x.insert(e.alpha, S, k.word, e.c);
    x.clean();
    return x;
}

Series Series::operator-() const {
    Series x = *this;
    for (auto& [k, e] : x.terms_) e.c = -e.c;
    return x;
}

Series Series::operator-(const Series& b) const { return *this + (-b); }

Series Series::operator*(const Series& b) const {
    int S = std::max(S_, b.S_);
    Series x = aligned(S), y = b.aligned(S);
    Rat bound = std::min<Rat>(x.B_ + y.valuation_lower_bound(), y.B_ + x.valuation_lower_bound());
    Series out(T_, bound, S);
    for (const auto& [ka, ea] : x.terms_) {
        Rat va = ea.c.valuation().value + x.min_exponent(ea.alpha, ka.word);
        for (const auto& [kb, eb] : y.terms_) {
            Rat vb = eb.c.valuation().value + y.min_exponent(eb.alpha, kb.word);
            if (va + vb >= out.B_) continue;
            LocalElem c = ea.c * eb.c;
            Rat alpha = ea.alpha + eb.alpha;
            for (const auto& [w, mult] : quasi_shuffle(ka.word, kb.word)) out.insert(alpha, S, w, c.scaled(mult));
        }
    }
    out.clean();
    return out;
}

Series Series::scaled(const LocalElem& c) const {
    Series out(T_, B_ + c.valuation().value, S_);
    for (const auto& [k, e] : terms_) out.insert(e.alpha, S_, k.word, e.c * c);
    out.clean();
    return out;
}

Series Series::pow(unsigned long e) const {
    if (e == 0) return monomial(T_, B_ + 1000, T_->one(), 0);
    Series base = *this;
    std::optional<Series> result;
    while (e) {
        if (e & 1) result = result ? *result * base : base;
        e >>= 1;
        if (e) base = base * base;
    }
    return *result;
}

Series Series::frobenius_power() const {
    Rat vx = valuation_lower_bound();
    Rat vp = T_->from_int(T_->p()).valuation().value;
    Series out(T_, std::min<Rat>(B_ + (q_ - 1) * vx, vp + q_ * vx), S_);
    for (const auto& [k, e] : terms_) {
        Word w = k.word;
        for (int& x : w) x *= static_cast<int>(q_);
        out.insert(q_ * e.alpha, S_, std::move(w), e.c.pow(static_cast<unsigned long>(q_)));
    }
    out.clean();
    return out;
}

Series Series::truncated(const Rat& b) const {
    Series x = *this;
    x.B_ = std::min<Rat>(x.B_, b);
    x.clean();
    return x;
}

std::optional<Series::Lead> Series::lead_inplace(int max_levels) {
    for (int level = 0; level <= max_levels; ++level) {
        clean();
        if (terms_.empty()) return std::nullopt;
        Rat V = B_;
        for (const auto& [k, e] : terms_) V = std::min<Rat>(V, e.c.valuation().value + min_exponent(e.alpha, k.word));
        if (V >= B_) return std::nullopt;
        bool family_attains = false;
        const Entry* mono = nullptr;
        int monos = 0;
        for (const auto& [k, e] : terms_) {
            if (e.c.valuation().value + min_exponent(e.alpha, k.word) != V) continue;
            if (!k.word.empty()) family_attains = true;
            else {
                mono = &e;
                ++monos;
            }
        }
        if (family_attains) {
            *this = peeled();
            continue;
        }
        if (monos != 1) throw VerificationError("family series: ambiguous leading monomial");
        auto ld = mono->c.lead();
        return Lead{V, ld->second};
    }
    throw BudgetError("family series: peeling budget exhausted before the leading term separated");
}

std::optional<Series::Lead> Series::leading(int max_levels) const {
    // Peeling multiplies terms, so search in widening windows above the
    // smallest term valuation; dropping terms beyond a window cannot change
    // a lead found inside it.
    Rat V0 = valuation_lower_bound();
    for (Rat delta : {frac(1, 16), frac(1, 4), Rat(1), Rat(4)}) {
        Rat b = std::min<Rat>(B_, V0 + delta);
        Series x = truncated(b);
        if (auto ld = x.lead_inplace(max_levels)) return ld;
        if (b == B_) return std::nullopt;
    }
    Series x = *this;
    return x.lead_inplace(max_levels);
}

std::vector<std::pair<Rat, FqElem>> Series::digits(const Rat& below, std::size_t max_digits, int max_levels) const {
    std::vector<std::pair<Rat, FqElem>> out;
    Series x = *this;
    while (out.size() < max_digits) {
        auto ld = x.lead_inplace(max_levels);
        if (!ld || ld->v >= below) break;
        out.emplace_back(ld->v, ld->digit);
        x.insert(ld->v, x.S_, {}, -T_->teichmuller(ld->digit));
        x.clean();
    }
    return out;
}

std::string Series::str() const {
    if (terms_.empty()) return "O(pi^(" + to_string(B_) + "))";
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, e] : terms_) {
        if (!first) os << " + ";
        first = false;
        os << "(" << e.c.str() << ")*pi^(" << to_string(e.alpha) << ")";
        if (!k.word.empty()) os << "*F_" << S_ << word_str(k.word);
    }
    os << " + O(pi^(" << to_string(B_) << "))";
    return os.str();
}

Series torsion_witness(const TowerPtr& T, const Rat& bound, int n) {
    if (n < 1) throw DomainError("torsion level must be >= 1");
    long q = T->q().get_si();
    Rat alpha = frac(1, q - 1);
    if (n == 1) return Series::monomial(T, bound, T->one(), alpha);
    return Series::family(T, bound, T->one(), alpha, 1, Word(static_cast<std::size_t>(n - 1), 1));
}

std::vector<Series> constant_poly(const std::vector<LocalElem>& poly, const Series& x) {
    std::vector<Series> out;
    for (const auto& c : poly) out.push_back(Series::monomial(x.tower(), x.bound() + 1000, c, 0));
    return out;
}

Series evaluate(const std::vector<Series>& poly, const Series& x) {
    if (poly.empty()) return Series(x.tower(), x.bound());
    Series r = poly.back();
    for (std::size_t i = poly.size() - 1; i-- > 0;) r = r * x + poly[i];
    return r;
}

Series evaluate(const std::vector<LocalElem>& poly, const Series& x) { return evaluate(constant_poly(poly, x), x); }

std::vector<Series> taylor_coefficients(const std::vector<Series>& poly, const Series& s) {
    const auto& T = s.tower();
    std::size_t n = poly.size();
    Rat big = s.bound() + 1000;
    std::vector<Series> pw{Series::monomial(T, big, T->one(), 0)};
    for (std::size_t i = 1; i < n; ++i) pw.push_back(pw.back() * s);
    std::vector<Series> out;
    for (std::size_t j = 0; j < n; ++j) {
        Series q(T, big);
        Int binom = 1;  // C(i, j), starting at i = j
        for (std::size_t i = j; i < n; ++i) {
            if (i > j) binom = binom * Int(static_cast<long>(i)) / Int(static_cast<long>(i - j));
            q = q + (pw[i - j] * poly[i]).scaled(T->from_int(binom));
        }
        out.push_back(q);
    }
    return out;
}

namespace {

// Roots of sum c_j Z^j over a finite field with multiplicities, by search.
std::vector<std::pair<FqElem, int>> field_roots(std::vector<FqElem> c) {
    std::vector<std::pair<FqElem, int>> out;
    if (c.empty()) return out;
    const FqField& F = c[0].field();
    for (const auto& z : F.elements()) {
        if (z.is_zero()) continue;
        std::vector<FqElem> a = c;
        int mult = 0;
        while (a.size() > 1) {
            // synthetic division by (Z - z)
            std::vector<FqElem> qd(a.size() - 1, F.zero());
            FqElem acc = F.zero();
            for (std::size_t i = a.size(); i-- > 0;) {
                acc = acc * z + a[i];
                if (i > 0) qd[i - 1] = acc;
            }
            if (!acc.is_zero()) break;
            ++mult;
            a = qd;
        }
        if (mult) out.emplace_back(z, mult);
    }
    return out;
}

}  // namespace

NearRoot near_root(const std::vector<LocalElem>& poly, const Series& s, int max_levels) {
    return near_root(constant_poly(poly, s), s, max_levels);
}

NearRoot near_root(const std::vector<Series>& poly, const Series& s, int max_levels) {
    auto Q = taylor_coefficients(poly, s);
    NearRoot nr;
    for (const auto& c : Q) nr.coefficient_leads.push_back(c.leading(max_levels));
    const auto& L = nr.coefficient_leads;
    std::size_t n = L.size();
    if (n < 2) throw DomainError("polynomial must have degree >= 1");
    Rat v0 = L[0] ? L[0]->v : Q[0].bound();
    nr.exact = static_cast<bool>(L[0]);
    std::optional<Rat> best;
    for (std::size_t j = 1; j < n; ++j) {
        if (!L[j]) continue;
        Rat sl = (v0 - L[j]->v) / Rat(static_cast<long>(j));
        if (!best || sl > *best) best = sl;
    }
    if (!best) throw BudgetError("no coefficient of P(s + X) has a determined valuation");
    nr.lambda = *best;
    const FqField& F = *s.tower()->residue_field();
    std::vector<FqElem> res(n, F.zero());
    if (L[0]) res[0] = L[0]->digit;
    for (std::size_t j = 1; j < n; ++j)
        if (L[j] && (v0 - L[j]->v) / Rat(static_cast<long>(j)) == nr.lambda) {
            nr.cluster = static_cast<long>(j);
            res[j] = L[j]->digit;
        }
    res.resize(static_cast<std::size_t>(nr.cluster) + 1);
    // X = [z] pi^lambda puts every segment term at exponent v0, so the digit
    // z solves the residual polynomial over the residue field.
    if (nr.exact) nr.digits = field_roots(res);
    return nr;
}

}  // namespace hw::family
