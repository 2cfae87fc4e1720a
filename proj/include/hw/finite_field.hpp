#pragma once

// Finite fields F_{p^D} = F_p[g]/(modulus) with table-driven arithmetic.
//
// The modulus is the lexicographically minimal monic irreducible polynomial,
// coefficients compared from the constant term upward. The same order ranks
// elements: element_at(k) enumerates the field in that order.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hw/rational.hpp"

namespace hw {

class FqField;

/// Element of a finite field; a value type referencing its (immortal) field.
class FqElem {
public:
    FqElem() = default;
    FqElem(const FqField* f, std::uint32_t code) : field_(f), code_(code) {}

    const FqField& field() const { return *field_; }
    const FqField* field_ptr() const { return field_; }
    std::uint32_t code() const { return code_; }

    bool is_zero() const { return code_ == 0; }
    bool is_one() const;

    FqElem operator+(const FqElem& b) const;
    FqElem operator-(const FqElem& b) const;
    FqElem operator-() const;
    FqElem operator*(const FqElem& b) const;
    FqElem operator/(const FqElem& b) const;
    FqElem& operator+=(const FqElem& b) { return *this = *this + b; }
    FqElem& operator-=(const FqElem& b) { return *this = *this - b; }
    FqElem& operator*=(const FqElem& b) { return *this = *this * b; }

    bool operator==(const FqElem& b) const { return field_ == b.field_ && code_ == b.code_; }
    bool operator!=(const FqElem& b) const { return !(*this == b); }
    /// Lexicographic order (constant coefficient most significant).
    bool operator<(const FqElem& b) const;

    std::string str() const;

private:
    const FqField* field_ = nullptr;
    std::uint32_t code_ = 0;  // sum c_i p^i
};

class FqField {
public:
    /// Cached: repeated calls return the same field object.
    static std::shared_ptr<const FqField> make(long p, int degree);

    long p() const { return p_; }
    int degree() const { return degree_; }
    std::uint32_t size() const { return size_; }
    /// Monic modulus coefficients c_0..c_D; empty for the prime field.
    const std::vector<long>& modulus() const { return modulus_; }

    FqElem zero() const { return {this, 0}; }
    FqElem one() const { return {this, 1}; }
    /// The class of g (for prime fields: 0 is returned since g is undefined).
    FqElem gen() const;
    FqElem from_int(long v) const;
    FqElem from_int(const Int& v) const;
    FqElem from_coeffs(const std::vector<long>& c) const;
    std::vector<long> coeffs(const FqElem& a) const;

    /// k-th element in lexicographic order, 0 <= k < size.
    FqElem element_at(std::uint32_t k) const;
    std::uint32_t lex_index(const FqElem& a) const;
    std::vector<FqElem> elements() const;

    FqElem add(const FqElem& a, const FqElem& b) const;
    FqElem sub(const FqElem& a, const FqElem& b) const;
    FqElem neg(const FqElem& a) const;
    FqElem mul(const FqElem& a, const FqElem& b) const;
    FqElem inv(const FqElem& a) const;
    FqElem pow(const FqElem& a, const Int& e) const;
    FqElem pow(const FqElem& a, long e) const { return pow(a, Int(e)); }

    /// a^{q^k} with q = p^{base_degree}; negative k uses the inverse automorphism.
    FqElem frobenius(const FqElem& a, long k, int base_degree) const;
    /// a^{p^d} == a.
    bool in_subfield(const FqElem& a, int d) const;

    /// Image of x (an element of the subfield F_{p^d}, d | D) under the lex-minimal embedding.
    FqElem embed(const FqElem& x) const;
    /// Inverse of embed on its image; throws if a is not in the image.
    FqElem restrict_to(const FqElem& a, const FqField& sub) const;

    std::string to_string(const FqElem& a) const;
    FqElem parse(const std::string& s) const;

    /// Roots of sum c_i X^i in this field with multiplicities, ascending lexicographically.
    std::vector<std::pair<FqElem, int>> roots(std::vector<FqElem> poly) const;

    /// A multiplicative generator of the unit group.
    FqElem primitive() const { return {this, exp_[size_ > 2 ? 1 : 0]}; }

    FqField(const FqField&) = delete;
    FqField& operator=(const FqField&) = delete;

private:
    FqField(long p, int degree);

    long p_;
    int degree_;
    std::uint32_t size_;
    std::vector<long> modulus_;
    std::vector<std::uint32_t> log_;  // log_[code], log_[0] unused
    std::vector<std::uint32_t> exp_;  // exp_[k] = code of prim^k, k < size-1
    std::vector<std::uint32_t> pow_p_;  // p^i
    std::map<int, std::uint32_t> embed_gen_;  // d -> code of the image of the degree-d generator

    std::vector<long> digits(std::uint32_t code) const;
    std::uint32_t encode(const std::vector<long>& c) const;
    std::uint32_t poly_mul_code(std::uint32_t a, std::uint32_t b) const;
};

using FqFieldPtr = std::shared_ptr<const FqField>;

/// Lexicographically minimal monic irreducible polynomial of degree D over F_p (c_0..c_D).
std::vector<long> min_irreducible(long p, int D);

/// Rabin irreducibility test of a monic polynomial over F_p (coefficients c_0..c_n).
bool is_irreducible_mod_p(const std::vector<long>& f, long p);

}  // namespace hw
