#include "hw/lubin_tate.hpp"

#include <sstream>

#include "hw/errors.hpp"

namespace hw::lt {

// ---------------------------------------------------------------- series

Series2::Series2(const TowerPtr& T, int D) : D_(D), c_(static_cast<std::size_t>(D + 1) * (D + 1), T->zero()) {}

Series2 Series2::operator+(const Series2& b) const {
    Series2 r = *this;
    for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] += b.c_[i];
    return r;
}

Series2 Series2::operator-(const Series2& b) const {
    Series2 r = *this;
    for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] -= b.c_[i];
    return r;
}

Series2 Series2::operator*(const Series2& b) const {
    Series2 r(c_.front().tower(), D_);
    for (int i = 0; i <= D_; ++i)
        for (int j = 0; i + j <= D_; ++j) {
            if (at(i, j).is_zero()) continue;
            for (int k = 0; i + j + k <= D_; ++k)
                for (int l = 0; i + j + k + l <= D_; ++l)
                    if (!b.at(k, l).is_zero()) r.at(i + k, j + l) += at(i, j) * b.at(k, l);
        }
    return r;
}

bool Series2::equals(const Series2& b) const {
    if (D_ != b.D_) return false;
    for (int i = 0; i <= D_; ++i)
        for (int j = 0; i + j <= D_; ++j)
            if (!at(i, j).equals(b.at(i, j))) return false;
    return true;
}

Series2 Series2::swapped() const {
    Series2 r = *this;
    for (int i = 0; i <= D_; ++i)
        for (int j = 0; i + j <= D_; ++j) r.at(i, j) = at(j, i);
    return r;
}

Series1 truncate(const Series1& a, const TowerPtr& T, int D) {
    Series1 r(static_cast<std::size_t>(D + 1), T->zero());
    for (std::size_t i = 0; i < a.size() && i <= static_cast<std::size_t>(D); ++i) r[i] = a[i];
    return r;
}

Series1 series_mul(const Series1& a, const Series1& b, int D) {
    const TowerPtr& T = a.front().tower();
    Series1 r(static_cast<std::size_t>(D + 1), T->zero());
    for (std::size_t i = 0; i < a.size() && static_cast<int>(i) <= D; ++i) {
        if (a[i].is_zero()) continue;
        for (std::size_t j = 0; j < b.size() && static_cast<int>(i + j) <= D; ++j)
            if (!b[j].is_zero()) r[i + j] += a[i] * b[j];
    }
    return r;
}

Series1 compose(const Series1& g, const Series1& h, int D) {
    const TowerPtr& T = g.front().tower();
    if (!h.empty() && !h[0].is_zero()) throw DomainError("composition needs a series without constant term");
    Series1 r = truncate({g.size() > 0 ? g[0] : T->zero()}, T, D);
    Series1 hp = truncate(h, T, D);
    for (std::size_t j = 1; j < g.size() && static_cast<int>(j) <= D; ++j) {
        if (j > 1) hp = series_mul(hp, h, D);
        if (g[j].is_zero()) continue;
        for (int i = 0; i <= D; ++i) r[i] += g[j] * hp[i];
    }
    return r;
}

bool series_equal(const Series1& a, const Series1& b) {
    std::size_t n = std::max(a.size(), b.size());
    const TowerPtr& T = (a.empty() ? b : a).front().tower();
    for (std::size_t i = 0; i < n; ++i) {
        const LocalElem& x = i < a.size() ? a[i] : T->zero();
        const LocalElem& y = i < b.size() ? b[i] : T->zero();
        if (!x.equals(y)) return false;
    }
    return true;
}

namespace {

// sum_{i+j<=D} F_ij a^i b^j for one-variable a, b.
Series1 eval2(const Series2& F, const Series1& a, const Series1& b, int D) {
    const TowerPtr& T = a.front().tower();
    std::vector<Series1> ap{truncate({T->one()}, T, D)}, bp{truncate({T->one()}, T, D)};
    for (int i = 1; i <= D; ++i) {
        ap.push_back(series_mul(ap.back(), a, D));
        bp.push_back(series_mul(bp.back(), b, D));
    }
    Series1 r = truncate({}, T, D);
    for (int i = 0; i <= std::min(D, F.degree()); ++i)
        for (int j = 0; i + j <= std::min(D, F.degree()); ++j) {
            if (F.at(i, j).is_zero()) continue;
            Series1 t = series_mul(ap[i], bp[j], D);
            for (int k = 0; k <= D; ++k) r[k] += F.at(i, j) * t[k];
        }
    return r;
}

// g(X) and g(Y) as two-variable series.
Series2 in_x(const Series1& g, int D) {
    Series2 r(g.front().tower(), D);
    for (int i = 0; i <= D && i < static_cast<int>(g.size()); ++i) r.at(i, 0) = g[i];
    return r;
}

Series2 in_y(const Series1& g, int D) { return in_x(g, D).swapped(); }

// f(F(X, Y)) truncated at total degree D.
Series2 outer(const Series1& f, const Series2& F, int D) {
    const TowerPtr& T = f.front().tower();
    Series2 r(T, D), pw(T, D);
    pw.at(0, 0) = T->one();
    for (int j = 1; j <= D && j < static_cast<int>(f.size()); ++j) {
        pw = pw * F;
        if (f[j].is_zero()) continue;
        for (int a = 0; a <= D; ++a)
            for (int b = 0; a + b <= D; ++b) r.at(a, b) += f[j] * pw.at(a, b);
    }
    return r;
}

// F(g(X), g(Y)) truncated at total degree D.
Series2 inner(const Series2& F, const Series1& g, int D) {
    const TowerPtr& T = g.front().tower();
    Series2 gx = in_x(g, D), gy = in_y(g, D);
    std::vector<Series2> xp, yp;
    Series2 one(T, D);
    one.at(0, 0) = T->one();
    xp.push_back(one);
    yp.push_back(one);
    for (int i = 1; i <= D; ++i) {
        xp.push_back(xp.back() * gx);
        yp.push_back(yp.back() * gy);
    }
    Series2 r(T, D);
    for (int i = 0; i <= D; ++i)
        for (int j = 0; i + j <= D; ++j) {
            if (F.at(i, j).is_zero()) continue;
            Series2 t = xp[i] * yp[j];
            for (int a = 0; a <= D; ++a)
                for (int b = 0; a + b <= D; ++b)
                    if (!t.at(a, b).is_zero()) r.at(a, b) += F.at(i, j) * t.at(a, b);
        }
    return r;
}

// (A - B) / (u^k - u), where the numerator must be divisible by u.
LocalElem solve_step(const LocalElem& diff, const LocalElem& u, int k) {
    LocalElem den = u.pow(static_cast<unsigned long>(k)) - u;
    auto vd = diff.valuation(), vden = den.valuation();
    if (vd.exact && vd.value < vden.value)
        throw VerificationError("functional equation residue not divisible by the uniformizer at degree " + std::to_string(k));
    return diff.div_exact(den);
}

}  // namespace

// ---------------------------------------------------------------- formal group

FormalGroupPtr FormalGroup::make(const TowerPtr& K, Series1 f, int D) {
    if (D < 1) throw DomainError("truncation degree must be >= 1");
    f = truncate(f, K, D);
    for (auto& c : f)
        if (c.tower() != K) throw DomainError("model coefficients must lie in the given tower");
    long q = K->q().get_si();
    if (!f[0].is_zero()) throw DomainError("not a Lubin-Tate series: nonzero constant term");
    auto v1 = f[1].valuation();
    if (!v1.exact || v1.value != 1) throw DomainError("not a Lubin-Tate series: linear coefficient is not a uniformizer");
    for (int i = 2; i <= D; ++i) {
        LocalElem c = i == q ? f[i] - K->one() : f[i];
        auto v = c.valuation();
        if (v.exact && v.value < 1)
            throw DomainError("not a Lubin-Tate series: coefficient of X^" + std::to_string(i) + " violates f = X^q mod pi");
    }
    auto G = std::shared_ptr<FormalGroup>(new FormalGroup());
    G->K_ = K;
    G->q_ = q;
    G->D_ = D;
    G->f_ = f;
    Series2 F(K, D);
    F.at(1, 0) = K->one();
    F.at(0, 1) = K->one();
    const LocalElem& u = f[1];
    for (int k = 2; k <= D; ++k) {
        Series2 A = outer(f, F, k), B = inner(F, f, k);
        for (int i = 0; i <= k; ++i) F.at(i, k - i) = solve_step(A.at(i, k - i) - B.at(i, k - i), u, k);
    }
    G->F_ = F;
    return G;
}

FormalGroupPtr FormalGroup::model(const TowerPtr& K, int sign, int D) {
    return make(K, model_poly(K, K->q().get_si(), sign), D);
}

const Series1& FormalGroup::scalar(const LocalElem& r) const {
    std::ostringstream key;
    for (const auto& c : r.coeffs()) key << c.get_str() << ",";
    key << to_string(r.cap_abs());
    auto it = scalars_.find(key.str());
    if (it != scalars_.end()) return it->second;
    Series1 G = truncate({K_->zero(), r}, K_, D_);
    const LocalElem& u = f_[1];
    for (int k = 2; k <= D_; ++k) {
        Series1 A = compose(f_, G, k), B = compose(G, truncate(f_, K_, k), k);
        G[k] = solve_step(A[k] - B[k], u, k);
    }
    return scalars_.emplace(key.str(), G).first->second;
}

Series1 FormalGroup::add(const Series1& a, const Series1& b) const { return eval2(F_, a, b, D_); }

// ---------------------------------------------------------------- polynomials

namespace {

std::vector<LocalElem> trim(std::vector<LocalElem> a) {
    while (a.size() > 1 && a.back().is_zero()) a.pop_back();
    return a;
}

std::vector<LocalElem> poly_mul(const std::vector<LocalElem>& a, const std::vector<LocalElem>& b) {
    std::vector<LocalElem> r(a.size() + b.size() - 1, a.front().tower()->zero());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].is_zero()) continue;
        for (std::size_t j = 0; j < b.size(); ++j)
            if (!b[j].is_zero()) r[i + j] += a[i] * b[j];
    }
    return r;
}

}  // namespace

std::vector<LocalElem> model_poly(const TowerPtr& T, long q, int sign) {
    if (sign != 1 && sign != -1) throw DomainError("model sign must be +1 or -1");
    std::vector<LocalElem> f(static_cast<std::size_t>(q + 1), T->zero());
    f[1] = sign > 0 ? T->pi_K() : -T->pi_K();
    f[q] = T->one();
    return f;
}

std::vector<LocalElem> iterate(const std::vector<LocalElem>& f, int n) {
    if (f.empty()) throw DomainError("empty polynomial");
    const TowerPtr& T = f.front().tower();
    std::vector<LocalElem> h{T->zero(), T->one()};
    for (int s = 0; s < n; ++s) {
        std::vector<LocalElem> acc{f.back()};
        for (std::size_t i = f.size() - 1; i-- > 0;) {
            acc = poly_mul(acc, h);
            acc[0] += f[i];
        }
        h = trim(acc);
    }
    return h;
}

std::vector<LocalElem> poly_divide_exact(const std::vector<LocalElem>& a0, const std::vector<LocalElem>& b0) {
    auto a = trim(a0), b = trim(b0);
    auto lv = b.back().valuation();
    if (!lv.exact || lv.value != 0) throw DomainError("divisor's leading coefficient is not a unit");
    if (a.size() < b.size()) throw DomainError("inexact polynomial division");
    LocalElem inv = b.back().inv();
    std::vector<LocalElem> qt(a.size() - b.size() + 1, a.front().tower()->zero());
    for (std::size_t i = qt.size(); i-- > 0;) {
        LocalElem c = a[i + b.size() - 1] * inv;
        qt[i] = c;
        for (std::size_t j = 0; j < b.size(); ++j) a[i + j] -= c * b[j];
    }
    for (std::size_t i = 0; i + 1 < b.size(); ++i)
        if (!a[i].is_zero()) throw DomainError("inexact polynomial division");
    return qt;
}

std::vector<LocalElem> torsion_poly(const std::vector<LocalElem>& f, int n) {
    if (n < 1) throw DomainError("torsion level must be >= 1");
    auto fn = iterate(f, n), fm = iterate(f, n - 1);
    auto g = poly_divide_exact(fn, fm);
    auto back = poly_mul(g, fm);
    for (std::size_t i = 0; i < std::max(back.size(), fn.size()); ++i) {
        const auto& T = f.front().tower();
        LocalElem x = i < back.size() ? back[i] : T->zero(), y = i < fn.size() ? fn[i] : T->zero();
        if (!x.equals(y)) throw VerificationError("g_n * f^[n-1] != f^[n]");
    }
    // Eisenstein: unit leading coefficient, divisible middle, constant of valuation 1.
    auto v0 = g.front().valuation();
    bool eis = v0.exact && v0.value == 1 && g.back().valuation().exact && g.back().valuation().value == 0;
    for (std::size_t i = 1; i + 1 < g.size() && eis; ++i) {
        auto v = g[i].valuation();
        eis = !v.exact || v.value >= 1;
    }
    if (!eis) throw VerificationError("g_" + std::to_string(n) + " is not Eisenstein");
    return g;
}

// ---------------------------------------------------------------- logarithm

LogSeries log_series(const TowerPtr& T, long q, int D) {
    if (q < 2) throw DomainError("q must be >= 2");
    LogSeries H;
    H.q = q;
    H.D = D;
    H.k_max = 0;
    for (Int pk = q; pk <= D; pk *= q) ++H.k_max;
    if (Rat(H.k_max) >= T->max_cap() * T->e_K())
        throw BudgetError("precision insufficient for the pi^-" + std::to_string(H.k_max) + " denominators at degree " + std::to_string(D));
    H.scaled.assign(static_cast<std::size_t>(D + 1), T->zero());
    Int pk = 1;
    for (int k = 0; k <= H.k_max; ++k, pk *= q) {
        LocalElem c = T->pi_K().pow(static_cast<unsigned long>(H.k_max - k));
        H.scaled[pk.get_ui()] = k % 2 ? -c : c;
    }
    return H;
}

std::string LogSeries::str() const {
    std::ostringstream os;
    Int pk = 1;
    for (int k = 0; k <= k_max; ++k, pk *= q) {
        if (k == 0) os << "x";
        else os << (k % 2 ? " - " : " + ") << "x^" << pk.get_str() << "/pi" << (k > 1 ? "^" + std::to_string(k) : "");
    }
    return os.str();
}

std::string render(const Series1& s) {
    std::ostringstream os;
    bool first = true;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i].is_zero()) continue;
        if (!first) os << " + ";
        first = false;
        os << "(" << s[i].str() << ")*X^" << i;
    }
    if (first) os << "0";
    os << " + O(X^" << s.size() << ")";
    return os.str();
}

}  // namespace hw::lt
