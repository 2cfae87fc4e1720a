#pragma once

// Finite towers over Z_p (mod p^N) or F_q[[t]] (mod t^N).
//
// Canonical layout, whatever the order of the user's stages:
//   base -> unramified stage of total residue degree F -> [t-stage] -> Eisenstein stages.
// Elements are flat dense coefficient arrays; the top stage's generator index is
// outermost. Valuations and precision caps are stored in absolute units
// (v(p) = 1, or v(t) = 1); public accessors also offer the K-normalized scale
// v(pi_K) = 1, whose factor e_K is exposed.

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hw/finite_field.hpp"
#include "hw/rational.hpp"

namespace hw {

struct TowerSpec {
    struct Stage {
        bool unramified = false;
        int degree = 0;                                   // unramified degree m
        std::vector<std::pair<std::string, int>> terms;   // Eisenstein: (coefficient, power)
    };

    bool equal_char = false;
    long p = 2;
    int base_f = 1;  // equal characteristic: q = p^base_f
    long prec = 0;   // p-adic precision, or t-adic truncation
    std::vector<Stage> stages;
    int k_level = -1;  // number of stages forming K; -1 means all

    static TowerSpec mixed(long p, long prec);
    static TowerSpec equal(long q, long prec);
    TowerSpec& unramified(int m);
    TowerSpec& eisenstein(std::vector<std::pair<std::string, int>> terms);
    /// Appends X^d - (pi of the tower so far).
    TowerSpec& radical(int d);
    TowerSpec& designate_k(int stages_in_k);

    int k_stages() const { return k_level < 0 ? static_cast<int>(stages.size()) : k_level; }

    static TowerSpec from_json(const std::string& text);
    std::string to_json() const;
    /// Short human-readable name such as Q_2(2^(1/2)).
    std::string describe() const;
};

class LocalTower;
using TowerPtr = std::shared_ptr<const LocalTower>;

using Coeffs = std::vector<Int>;

class LocalElem {
public:
    LocalElem() = default;
    LocalElem(TowerPtr t, Coeffs c, Rat cap_abs);

    const TowerPtr& tower() const { return tower_; }
    const Coeffs& coeffs() const { return c_; }
    const Rat& cap_abs() const { return cap_; }
    Rat cap() const;  // K-normalized

    LocalElem operator+(const LocalElem& b) const;
    LocalElem operator-(const LocalElem& b) const;
    LocalElem operator-() const;
    LocalElem operator*(const LocalElem& b) const;
    LocalElem& operator+=(const LocalElem& b) { return *this = *this + b; }
    LocalElem& operator-=(const LocalElem& b) { return *this = *this - b; }
    LocalElem& operator*=(const LocalElem& b) { return *this = *this * b; }
    LocalElem pow(unsigned long e) const;
    LocalElem scaled(const Int& k) const;

    /// Valuation in absolute units; at_least(cap) when zero at the cap.
    Val valuation_abs() const;
    /// Valuation normalized so that v(pi_K) = 1.
    Val valuation() const;
    bool is_zero() const { return !valuation_abs().exact; }
    /// Equal at the smaller of the two caps.
    bool equals(const LocalElem& b) const { return (*this - b).is_zero(); }

    /// Leading term: x = teichmuller(r) * varpi^k + (higher), varpi the top uniformizer.
    std::optional<std::pair<Int, FqElem>> lead() const;
    FqElem residue() const;

    LocalElem mul_unif(long k = 1) const;
    /// Exact division by varpi^k; the cap drops by k * v(varpi).
    LocalElem div_unif(long k = 1) const;
    /// Inverse of a unit.
    LocalElem inv() const;
    /// Exact quotient a/b for v(a) >= v(b), with v(b) known exactly.
    LocalElem div_exact(const LocalElem& b) const;

    LocalElem with_cap(const Rat& cap_abs) const;

    std::string str() const;

private:
    TowerPtr tower_;
    Coeffs c_;
    Rat cap_;
};

/// Element of the fraction field: unit-free part u times varpi^shift.
class FieldElem {
public:
    FieldElem() = default;
    FieldElem(LocalElem u, long shift = 0) : u_(std::move(u)), shift_(shift) {}

    const LocalElem& body() const { return u_; }
    long shift() const { return shift_; }
    const TowerPtr& tower() const { return u_.tower(); }

    FieldElem operator+(const FieldElem& b) const;
    FieldElem operator-(const FieldElem& b) const;
    FieldElem operator-() const { return {-u_, shift_}; }
    FieldElem operator*(const FieldElem& b) const { return {u_ * b.u_, shift_ + b.shift_}; }
    FieldElem& operator+=(const FieldElem& b) { return *this = *this + b; }
    FieldElem& operator*=(const FieldElem& b) { return *this = *this * b; }
    FieldElem inv() const;

    Val valuation_abs() const;
    Val valuation() const;
    Rat cap_abs() const;
    bool is_zero() const { return !valuation_abs().exact; }
    /// Integral representative; throws if the valuation is negative.
    LocalElem to_integral() const;
    std::optional<std::pair<Int, FqElem>> lead() const;

private:
    LocalElem u_;
    long shift_ = 0;
};

class LocalTower : public std::enable_shared_from_this<LocalTower> {
public:
    enum class Kind { Base, Unramified, Truncation, Eisenstein };

    struct Level {
        Kind kind = Kind::Base;
        int deg = 1;
        std::size_t dim = 1;  // cumulative dimension over the base
        std::vector<Coeffs> poly;  // lower coefficients of the monic stage polynomial
        std::vector<int> nonzero;  // indices j with poly[j] != 0
        Rat v_gen;   // absolute valuation of the generator
        Rat v_unif;  // absolute valuation of this level's uniformizer
        Coeffs unit_inv;   // Eisenstein: (poly[0] / prev uniformizer)^{-1}
        FqElem rho;        // Eisenstein: residue of prev_unif / gen^deg
    };

    static TowerPtr build(const TowerSpec& spec);

    const TowerSpec& spec() const { return spec_; }
    long p() const { return p_; }
    bool equal_char() const { return equal_; }
    long base_prec() const { return prec_; }
    const Int& modulus() const { return mod_; }
    int F() const { return F_; }
    int E() const { return E_; }
    int e_K() const { return eK_; }
    int f_K() const { return fK_; }
    Int q() const { return ipow(p_, static_cast<unsigned long>(fK_)); }
    const FqFieldPtr& residue_field() const { return rf_; }
    Rat v_top_abs() const { return Rat(1, E_); }
    std::size_t dim() const { return levels_.back().dim; }
    const std::vector<Level>& levels() const { return levels_; }
    /// Level index of the unramified stage (or the base when F = 1).
    int unram_level() const { return unram_level_; }
    Rat max_cap() const { return Rat(prec_); }

    LocalElem zero() const;
    LocalElem one() const;
    LocalElem from_int(const Int& v) const;
    LocalElem from_int(long v) const { return from_int(Int(v)); }
    /// Rational with denominator prime to p.
    LocalElem from_rat(const Rat& r) const;
    LocalElem uniformizer() const;
    LocalElem pi_K() const;
    /// Generator attached to user stage i.
    LocalElem generator(int stage) const;
    LocalElem teichmuller(const FqElem& r) const;
    /// Canonical coordinates of an element of the residue field lifted digit-wise.
    LocalElem lift_residue(const FqElem& r) const;

    bool frob_available() const { return frob_ok_; }
    /// q-power Frobenius lift, q = p^{f_K}.
    LocalElem frob_lift(const LocalElem& x) const;
    /// Arithmetic Frobenius sigma (p-power) applied k times.
    LocalElem sigma(const LocalElem& x, long k = 1) const;

    /// The tower with the last user stage removed.
    TowerPtr parent() const;
    LocalElem norm_down(const LocalElem& x) const;

    /// Maps an element of a compatible subtower (same base, Eisenstein stages a prefix).
    LocalElem lift_from(const LocalElem& x) const;

    /// Parses an expression in symbols p, t, pi, s0, s1, ... and [residue].
    LocalElem parse(const std::string& text) const;

    /// Teichmuller expansion sum [a_k] varpi^k for k below the cap, in varpi-units.
    std::vector<std::pair<Int, FqElem>> digits(const LocalElem& x) const;

    // Raw level arithmetic (exposed for the kernels and tests).
    Coeffs raw_mul(int level, const Coeffs& a, const Coeffs& b) const;
    Coeffs raw_mul_serial(int level, const Coeffs& a, const Coeffs& b) const;
    void raw_reduce(Coeffs& a) const;

    LocalTower(const LocalTower&) = delete;
    LocalTower& operator=(const LocalTower&) = delete;

private:
    LocalTower() = default;
    friend class LocalElem;
    friend class FieldElem;
    friend struct TowerBuilder;

    TowerSpec spec_;
    long p_ = 2;
    bool equal_ = false;
    long prec_ = 0;
    Int mod_;
    int F_ = 1, E_ = 1, eK_ = 1, fK_ = 1;
    FqFieldPtr rf_;
    std::vector<Level> levels_;
    int unram_level_ = 0;
    std::vector<Coeffs> stage_gens_;  // user stage generators at the top level
    Coeffs pi_K_;
    Coeffs sigma_alpha_pows_;  // flattened: sigma(alpha)^i for i < F, each of size F
    Coeffs frobK_alpha_pows_;
    bool frob_ok_ = true;
    std::vector<Coeffs> teich_table_;  // by residue code, empty when the field is large
    mutable std::shared_ptr<const LocalTower> parent_;

    Coeffs mul_level(int level, const Coeffs& a, const Coeffs& b, bool parallel) const;
    std::optional<Rat> val_level(int level, const Coeffs& a) const;
    std::optional<std::pair<Int, FqElem>> lead_level(int level, const Coeffs& a) const;
    Coeffs div_unif_level(int level, const Coeffs& a) const;
    Coeffs mul_unif_level(int level, const Coeffs& a) const;
    Coeffs unit_inv_level(int level, const Coeffs& a) const;
    Coeffs teich_raw(const FqElem& r) const;
    Coeffs apply_unram_map(const Coeffs& x, const Coeffs& alpha_pows) const;
    Coeffs lift_residue_raw(const FqElem& r) const;
    void reduce_mod(Coeffs& a) const;
    Coeffs embed_raw(int level, const Coeffs& a) const;
};

}  // namespace hw
