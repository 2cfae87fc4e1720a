#pragma once

// Structured Hahn-Witt series with accumulating supports.
//
// A term c * pi^alpha * F_S(w) stands for
//   c * sum_{S <= k_1 < ... < k_r} pi^{alpha - w_1 q^{-k_1} - ... - w_r q^{-k_r}},
// with c in a finite coefficient tower (K plus an unramified stage), letters
// w_i > 0 and q the residue cardinality of K. All families of a series share
// the start S. Such sums are exact Hahn-Witt elements whose supports
// accumulate below alpha, so digits at or beyond an accumulation point become
// reachable. A series is known modulo pi^B; terms whose valuation reaches B are
// dropped.
//
// Canonical form: a word whose letters are all divisible by q is rewritten by
// F_S(alpha; q w) = F_{S-1}(alpha; w), and starts are aligned through the peel
// identity F_S(alpha; w) = F_{S+1}(alpha - w_1 q^{-S}; w_2..w_r) + F_{S+1}(alpha; w).
// Terms with equal words and alphas differing by an integer are merged.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hw/finite_field.hpp"
#include "hw/local_tower.hpp"
#include "hw/rational.hpp"

namespace hw::family {

using Word = std::vector<int>;

struct Term {
    Rat alpha;
    Word word;
    LocalElem coeff;
};

/// Quasi-shuffle product of two words with multiplicities.
const std::map<Word, Int>& quasi_shuffle(const Word& u, const Word& v);

class Series {
public:
    Series() = default;
    /// The zero series over T known modulo pi^bound (K-normalized).
    Series(TowerPtr T, Rat bound, int start = 1);

    static Series monomial(const TowerPtr& T, const Rat& bound, const LocalElem& c, const Rat& alpha);
    static Series family(const TowerPtr& T, const Rat& bound, const LocalElem& c, const Rat& alpha, int start, Word w);

    const TowerPtr& tower() const { return T_; }
    long q() const { return q_; }
    const Rat& bound() const { return B_; }
    int start() const { return S_; }
    std::vector<Term> terms() const;
    std::size_t size() const { return terms_.size(); }
    bool is_zero() const { return terms_.empty(); }

    Series operator+(const Series& b) const;
    Series operator-(const Series& b) const;
    Series operator-() const;
    Series operator*(const Series& b) const;
    Series scaled(const LocalElem& c) const;
    Series pow(unsigned long e) const;
    /// Termwise q-th power c^q pi^{q alpha} F(q w). It equals x^q modulo
    /// p * pi^{q v(x)} (cross terms come in cyclic orbits), and the bound says so.
    Series frobenius_power() const;
    /// A copy known only modulo pi^b (b <= bound).
    Series truncated(const Rat& b) const;

    /// Lower bound of the valuation of a term: v(c) + its smallest exponent.
    Rat term_valuation(const Term& t) const;
    /// Smallest term valuation, or the bound when the series is zero.
    Rat valuation_lower_bound() const;

    struct Lead {
        Rat v;
        FqElem digit;
    };
    /// Exact valuation and leading digit, found by peeling; nullopt when the
    /// series vanishes modulo pi^bound. BudgetError after max_levels peels.
    std::optional<Lead> leading(int max_levels = 64) const;
    /// Digits below the exponent `below` (and the bound), at most max_digits of them.
    std::vector<std::pair<Rat, FqElem>> digits(const Rat& below, std::size_t max_digits, int max_levels = 64) const;

    /// Every family moved to start + 1.
    Series peeled() const;

    std::string str() const;

private:
    TowerPtr T_;
    long q_ = 2;
    Rat B_;
    int S_ = 1;
    struct Key {
        Word word;
        Rat frac;  // alpha mod 1
        bool operator<(const Key& o) const { return word != o.word ? word < o.word : frac < o.frac; }
    };
    struct Entry {
        Rat alpha;
        LocalElem c;
    };
    std::map<Key, Entry> terms_;

    Rat min_exponent(const Rat& alpha, const Word& w) const;
    void insert(const Rat& alpha, int s, Word w, const LocalElem& c);
    void add_canonical(const Rat& alpha, const Word& w, const LocalElem& c);
    void clean();
    Series aligned(int S) const;
    std::optional<Lead> lead_inplace(int max_levels);
};

/// y = sum_{0<k_1<...<k_{n-1}} pi^{1/(q-1) - q^{-k_1} - ... - q^{-k_{n-1}}} with coefficient 1.
Series torsion_witness(const TowerPtr& T, const Rat& bound, int n);

/// Polynomial evaluated at a structured series (Horner).
Series evaluate(const std::vector<Series>& poly, const Series& x);
Series evaluate(const std::vector<LocalElem>& poly, const Series& x);

/// Coefficients of P(s + X), each a structured series.
std::vector<Series> taylor_coefficients(const std::vector<Series>& poly, const Series& s);

/// Tower constants as monomial series over the tower of x.
std::vector<Series> constant_poly(const std::vector<LocalElem>& poly, const Series& x);

/// Newton-polygon analysis of P(s + X) near a structured prefix s.
struct NearRoot {
    Rat lambda;        // valuation of r - s for the roots r closest to s
    bool exact;        // lambda is exact (else a lower bound)
    long cluster = 0;  // number of roots at that distance
    std::vector<std::pair<FqElem, int>> digits;  // residual roots: the digit of r at lambda
    std::vector<std::optional<Series::Lead>> coefficient_leads;
};
NearRoot near_root(const std::vector<Series>& poly, const Series& s, int max_levels = 64);
NearRoot near_root(const std::vector<LocalElem>& poly, const Series& s, int max_levels = 64);

}  // namespace hw::family
