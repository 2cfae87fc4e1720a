#pragma once

// pi-typical Witt vectors of finite length for K unramified over Q_p with
// uniformizer pi = p and residue field F_q.
//
// Two independent backends:
//   * universal structure polynomials, obtained by inverting the ghost map
//     symbolically over Z[pi, 1/pi] and then specialised at pi = p;
//   * the tower isomorphism W(F_{q^m}) / V^n = O_{K_m} / p^n, with the
//     coordinate twist x_i <-> teichmuller(x_i^{q^{-i}}) p^i.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hw/errors.hpp"
#include "hw/finite_field.hpp"
#include "hw/local_tower.hpp"
#include "hw/rational.hpp"

namespace hw::witt {

/// Laurent polynomial in the symbol pi with integer coefficients, keyed by the pi-exponent.
using Laurent = std::map<int, Int>;

/// Exponent vector over x_0..x_{n-1}, y_0..y_{n-1}.
using Monomial = std::vector<unsigned>;

class Poly {
public:
    explicit Poly(int n = 0) : n_(n) {}
    static Poly constant(int n, const Int& c, int pi_exp = 0);
    static Poly var(int n, bool is_y, int index);

    int n() const { return n_; }
    const std::map<Monomial, Laurent>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    Poly operator+(const Poly& b) const;
    Poly operator-(const Poly& b) const;
    Poly operator*(const Poly& b) const;
    Poly pow(unsigned long e) const;
    /// Multiplies by pi^k (k may be negative).
    Poly shift_pi(int k) const;

    /// The coefficient of each monomial at pi = p, as a rational.
    std::map<Monomial, Rat> at_pi_equals(long p) const;
    /// All specialised coefficients are p-integral.
    bool integral_at(long p) const;

    /// Graded lexicographic order: total degree ascending, then x_0 > x_1 > ... > y_0 > ... .
    std::string str() const;

private:
    int n_;
    std::map<Monomial, Laurent> terms_;
    void add_term(const Monomial& m, int j, const Int& c);
};

enum class Op { Add, Mul };

/// S_0..S_{n-1} (Add) or P_0..P_{n-1} (Mul) for the given q, computed by symbolic ghost inversion.
/// Cached; throws BudgetError when the expansion exceeds the term budget.
const std::vector<Poly>& universal_polys(int n, Op op, long q);

/// Ghost components w_k = sum_{i<=k} pi^i x_i^{q^{k-i}} over the integers.
std::vector<Int> ghost(const std::vector<Int>& x, long q, const Int& pi);
/// Inverse of ghost over the integers; DomainError when a division is inexact.
std::vector<Int> ghost_inverse(const std::vector<Int>& g, long q, const Int& pi);

/// Ghost components over the integers of a local tower.
std::vector<LocalElem> ghost(const std::vector<LocalElem>& x, long q, const LocalElem& pi);
std::vector<LocalElem> ghost_inverse(const std::vector<LocalElem>& g, long q, const LocalElem& pi);

/// Witt vector over the perfect field F_{q^m}.
struct WittVec {
    FqFieldPtr field;
    long q = 2;
    std::vector<FqElem> x;

    int length() const { return static_cast<int>(x.size()); }
    bool operator==(const WittVec& o) const { return field.get() == o.field.get() && q == o.q && x == o.x; }
    std::string str() const;
};

WittVec zero(const FqFieldPtr& field, long q, int n);
WittVec one(const FqFieldPtr& field, long q, int n);

enum class Backend { Tower, Universal };

WittVec add(const WittVec& a, const WittVec& b, Backend backend = Backend::Tower);
WittVec mul(const WittVec& a, const WittVec& b, Backend backend = Backend::Tower);

/// The bijection with O_{K_m} / p^n. `twisted` selects the q^{-i} coordinate twist
/// (the correct convention); the untwisted map exists for comparison tests only.
LocalElem to_tower(const WittVec& a, const TowerPtr& T, bool twisted = true);
WittVec from_tower(const LocalElem& x, const FqFieldPtr& field, long q, int n, bool twisted = true);

/// Tower O_{K_m} / p^prec with K = Q_q, shared by the digit arithmetic.
TowerPtr tower_for(long p, int field_degree, int f_K, long prec);

/// Evaluates a universal polynomial on residue-field inputs (coefficients reduced mod p).
FqElem eval_reduced(const Poly& P, const std::vector<FqElem>& x, const std::vector<FqElem>& y);
/// Evaluates a universal polynomial on tower inputs (coefficients specialised at pi = p).
LocalElem eval_tower(const Poly& P, const std::vector<LocalElem>& x, const std::vector<LocalElem>& y);

}  // namespace hw::witt
