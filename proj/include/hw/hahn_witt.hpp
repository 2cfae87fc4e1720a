#pragma once

// Truncated Hahn-Witt series HW_{(K,pi)}(F_{q^m}).
//
// An element with exponent denominators dividing d, known below precision N,
// is an element of O_L / pi^N for the working tower
//   L = K + Unramified(m) + Eisenstein(X^d - pi),
// whose top uniformizer is pi^{1/d}. The Teichmuller digits of that element
// in powers of pi^{1/d} are exactly its Hahn-Witt digits. Exponents and caps
// are K-normalized (v(pi) = 1) throughout this header.

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hw/finite_field.hpp"
#include "hw/hahn.hpp"
#include "hw/local_tower.hpp"
#include "hw/rational.hpp"

namespace hw {

class HWContext;
using HWContextPtr = std::shared_ptr<const HWContext>;

class HWContext : public std::enable_shared_from_this<HWContext> {
public:
    /// k_spec describes K (all of its stages form K). base_prec = 0 picks a default guard band.
    static HWContextPtr make(const TowerSpec& k_spec, int m, int d, const Rat& N, long base_prec = 0);
    /// K = Q_p (mixed) or F_q((t)) (equal characteristic, q given), pi = p or t.
    static HWContextPtr mixed(long p, int m, int d, const Rat& N);
    static HWContextPtr equal(long q, int m, int d, const Rat& N);

    const TowerSpec& k_spec() const { return k_spec_; }
    const TowerPtr& tower() const { return L_; }
    /// K's own tower at the same base precision.
    const TowerPtr& k_tower() const { return K_; }
    int m() const { return m_; }
    int d() const { return d_; }
    const Rat& N() const { return N_; }
    /// The cap in absolute tower units.
    Rat cap_abs() const { return N_ / L_->e_K(); }
    Int q() const { return L_->q(); }
    int f_K() const { return L_->f_K(); }
    const FqFieldPtr& residue_field() const { return L_->residue_field(); }

    /// The context for K' = K(pi^{1/n}) with pi' = pi^{1/n}, same m, denominators d/n.
    HWContextPtr rescaled_target(int n) const;

    std::string describe() const;

private:
    HWContext() = default;
    TowerSpec k_spec_;
    TowerPtr L_, K_;
    int m_ = 1, d_ = 1;
    Rat N_;
};

/// Digit expansion: ascending exponents with nonzero digits, plus the cap.
struct Expansion {
    std::vector<std::pair<Rat, FqElem>> digits;
    Rat cap;

    FqElem digit_at(const Rat& e, const FqFieldPtr& F) const;
    std::string str() const;
    HahnSeries<FqRing> as_series(const FqFieldPtr& F) const;
};

class HWElem {
public:
    HWElem() = default;
    HWElem(HWContextPtr ctx, LocalElem mirror);

    const HWContextPtr& context() const { return ctx_; }
    /// The internal tower representative.
    const LocalElem& mirror() const { return x_; }
    /// Cap in K-normalized units.
    Rat cap() const { return x_.cap(); }

    const Expansion& expansion() const;

    HWElem operator+(const HWElem& b) const;
    HWElem operator-(const HWElem& b) const;
    HWElem operator-() const;
    HWElem operator*(const HWElem& b) const;
    HWElem pow(unsigned long e) const;
    /// Exact valuation; at_least(cap) for an element indistinguishable from 0.
    Val valuation() const;
    bool is_zero() const { return !valuation().exact; }
    bool equals(const HWElem& b) const { return (*this - b).is_zero(); }

    std::string str() const { return expansion().str(); }
    std::string to_json() const;

private:
    HWContextPtr ctx_;
    LocalElem x_;
    mutable std::shared_ptr<const Expansion> exp_;
};

/// Digit extraction from a tower element of the working tower.
HWElem hw_normalize(const HWContextPtr& ctx, const LocalElem& x);
/// Builds the element sum [a_i] pi^{e_i}; exponents must lie in (1/d)Z and be non-negative.
HWElem hw_from_digits(const HWContextPtr& ctx, const std::vector<std::pair<Rat, FqElem>>& digits);
HWElem hw_from_int(const HWContextPtr& ctx, const Int& v);
/// pi^{e} for e in (1/d)Z, e >= 0.
HWElem hw_pi_power(const HWContextPtr& ctx, const Rat& e);
/// Parses an expression in p, t, pi, [residue] and pi^(a/b).
HWElem hw_parse(const HWContextPtr& ctx, const std::string& text);

/// Inverse in the fraction field, returned with the power of pi^{1/d} split off:
/// x^{-1} = result.first * pi^{-result.second / d}.
std::pair<HWElem, long> hw_inv(const HWElem& x);
/// a / b for v(a) >= v(b).
HWElem hw_div(const HWElem& a, const HWElem& b);
Val hw_val(const HWElem& x);

/// Digit-wise a -> a^q; cross-checked against the tower Frobenius lift in debug builds.
HWElem hw_frobenius(const HWElem& x);
/// Frobenius computed only through the tower (for cross-checks).
HWElem hw_frobenius_tower(const HWElem& x);
bool hw_in_subfield(const HWElem& x, int m_sub);

/// psi: sum [a_i] pi^i -> sum [a_i] (pi^{1/n})^{n i}, into target = source->rescaled_target(n).
HWElem hw_rescale(const HWElem& x, const HWContextPtr& target, int n);

/// Newton polygon from coefficient valuations (nullopt = zero at the given cap).
/// Returns (root valuation, number of roots), root valuations ascending, in the
/// same units as the inputs. Throws DomainError when a zero-at-cap coefficient
/// could lie below the hull.
struct PolyVal {
    std::optional<Rat> value;  // exact valuation, or nullopt when zero at cap
    Rat cap;
};
std::vector<std::pair<Rat, long>> newton_polygon(const std::vector<PolyVal>& vals);
/// Convenience: polygon of a polynomial with tower coefficients, K-normalized slopes.
std::vector<std::pair<Rat, long>> newton_polygon(const std::vector<LocalElem>& coeffs);

struct HWRoot {
    LocalElem value;     // approximation in the working tower
    Rat agreement;       // v(root - value) >= agreement (K-normalized)
    bool complete;       // agreement reached the requested precision
    int cluster = 1;     // roots of P sharing this approximation
    Val residual;        // v(P(value)), K-normalized
    HWElem element(const HWContextPtr& ctx) const { return HWElem(ctx, value.with_cap(agreement / value.tower()->e_K())); }
};

struct RootOptions {
    Rat target;               // requested precision (K-normalized); 0 means the context cap
    bool allow_partial = true;  // otherwise a slope outside (1/d)Z is an error
    bool newton = true;         // quadratic refinement of simple clusters
};

/// All roots in L of P = sum coeffs[i] X^i (integral coefficients in the working tower)
/// with non-negative valuation, ordered lexicographically by digit sequence.
std::vector<HWRoot> hw_find_roots(const HWContextPtr& ctx, const std::vector<LocalElem>& coeffs, const RootOptions& opt = {});

/// Evaluates sum coeffs[i] x^i by Horner's rule.
LocalElem poly_eval(const std::vector<LocalElem>& coeffs, const LocalElem& x);
std::vector<LocalElem> poly_derivative(const std::vector<LocalElem>& coeffs);
/// Coefficients of P(a + X).
std::vector<LocalElem> taylor_shift(const std::vector<LocalElem>& coeffs, const LocalElem& a);

/// Lexicographic order of digit sequences (absent digits count as 0, the smallest).
bool digit_less(const Expansion& a, const Expansion& b);

}  // namespace hw
