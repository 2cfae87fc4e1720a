#pragma once

// Lubin-Tate formal groups over O_K / pi^N, truncated at total degree D.
//
// A model f must satisfy f = u X + X^q + (terms divisible by pi) with v(u) = 1;
// u is the model's uniformizer. Both X^q + pi X and X^q - pi X are models, the
// latter for the uniformizer -pi. Series are dense; two-variable series keep
// every coefficient with i + j <= D.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hw/local_tower.hpp"
#include "hw/rational.hpp"

namespace hw::lt {

/// One-variable truncated series: index = degree.
using Series1 = std::vector<LocalElem>;

/// Two-variable truncated series sum c_{ij} X^i Y^j, i + j <= D.
class Series2 {
public:
    Series2() = default;
    Series2(const TowerPtr& T, int D);

    int degree() const { return D_; }
    const LocalElem& at(int i, int j) const { return c_[idx(i, j)]; }
    LocalElem& at(int i, int j) { return c_[idx(i, j)]; }

    Series2 operator+(const Series2& b) const;
    Series2 operator-(const Series2& b) const;
    Series2 operator*(const Series2& b) const;
    /// Equal coefficientwise at the caps.
    bool equals(const Series2& b) const;
    /// F(Y, X).
    Series2 swapped() const;

private:
    int D_ = 0;
    std::vector<LocalElem> c_;
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * (D_ + 1) + j; }
};

Series1 series_mul(const Series1& a, const Series1& b, int D);
/// g(h(X)) truncated at degree D; requires h(0) = 0.
Series1 compose(const Series1& g, const Series1& h, int D);
bool series_equal(const Series1& a, const Series1& b);
/// The series sum coeffs[i] X^i padded or cut to degree D.
Series1 truncate(const Series1& a, const TowerPtr& T, int D);

class FormalGroup;
using FormalGroupPtr = std::shared_ptr<const FormalGroup>;

class FormalGroup {
public:
    /// Checks the Lubin-Tate condition and solves for F eagerly.
    static FormalGroupPtr make(const TowerPtr& K, Series1 f, int D);
    /// f = X^q + pi X (sign = +1) or X^q - pi X (sign = -1), pi = pi_K.
    static FormalGroupPtr model(const TowerPtr& K, int sign, int D);

    const TowerPtr& tower() const { return K_; }
    long q() const { return q_; }
    int degree() const { return D_; }
    const Series1& f() const { return f_; }
    /// The linear coefficient of f.
    const LocalElem& uniformizer() const { return f_[1]; }
    const Series2& law() const { return F_; }
    /// [r]_F, cached per r.
    const Series1& scalar(const LocalElem& r) const;

    /// F(a(X), b(X)) truncated at D.
    Series1 add(const Series1& a, const Series1& b) const;

private:
    FormalGroup() = default;
    TowerPtr K_;
    long q_ = 2;
    int D_ = 1;
    Series1 f_;
    Series2 F_;
    mutable std::map<std::string, Series1> scalars_;
};

/// Polynomial f^{[n]} (f composed n times, f^{[0]} = X); f must be a polynomial.
std::vector<LocalElem> iterate(const std::vector<LocalElem>& f, int n);
/// g_n = f^{[n]} / f^{[n-1]}, computed by exact division (verified), degree q^n - q^{n-1}.
std::vector<LocalElem> torsion_poly(const std::vector<LocalElem>& f, int n);
/// Exact quotient of polynomials when the divisor's leading coefficient is a unit.
std::vector<LocalElem> poly_divide_exact(const std::vector<LocalElem>& a, const std::vector<LocalElem>& b);

/// Model polynomial X^q + sign * pi X over T, pi = pi_K.
std::vector<LocalElem> model_poly(const TowerPtr& T, long q, int sign);

/// H(x) = sum_{k >= 0} (-1)^k x^{q^k} / pi^k over terms with q^k <= D, as
/// (exponent k of the largest pi-denominator, coefficients of pi^k H).
struct LogSeries {
    long q = 2;
    int D = 1;
    int k_max = 0;
    std::vector<LocalElem> scaled;  // pi^{k_max} H, integral
    std::string str() const;
};
LogSeries log_series(const TowerPtr& T, long q, int D);

/// Series rendered with coefficients as tower elements, lowest degree first.
std::string render(const Series1& s);

}  // namespace hw::lt
