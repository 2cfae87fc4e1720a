#include "hw/rational.hpp"

#include "hw/errors.hpp"

#include <cctype>

namespace hw {

Rat parse_rat(std::string_view s) {
    std::string t(s);
    while (!t.empty() && t.front() == ' ') t.erase(t.begin());
    while (!t.empty() && t.back() == ' ') t.pop_back();
    if (t.empty()) throw DomainError("empty rational literal");
    for (char c : t) {
        if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '/' || c == '+'))
            throw DomainError("malformed rational literal '" + t + "'");
    }
    if (t.front() == '+') t.erase(t.begin());
    Rat r;
    if (r.set_str(t, 10) != 0 || r.get_den() == 0) throw DomainError("malformed rational literal '" + t + "'");
    r.canonicalize();
    return r;
}

std::string to_string(const Int& x) { return x.get_str(); }

std::string to_string(const Rat& x) {
    Rat y = x;
    y.canonicalize();
    if (y.get_den() == 1) return y.get_num().get_str();
    return y.get_num().get_str() + "/" + y.get_den().get_str();
}

Int floor(const Rat& x) {
    Int q;
    mpz_fdiv_q(q.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
    return q;
}

Int ceil(const Rat& x) {
    Int q;
    mpz_cdiv_q(q.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
    return q;
}

long vp(const Int& x, long p) {
    if (x == 0) throw DomainError("valuation of zero");
    Int y = abs(x);
    long v = 0;
    while (mpz_divisible_ui_p(y.get_mpz_t(), static_cast<unsigned long>(p))) {
        mpz_divexact_ui(y.get_mpz_t(), y.get_mpz_t(), static_cast<unsigned long>(p));
        ++v;
    }
    return v;
}

long vp(const Rat& x, long p) { return vp(Int(x.get_num()), p) - vp(Int(x.get_den()), p); }

Int ipow(long base, unsigned long e) {
    Int r;
    mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(base), e);
    return r;
}

Int lcm(const Int& a, const Int& b) {
    Int r;
    mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return r;
}

bool is_prime(long p) {
    if (p < 2) return false;
    for (long d = 2; d * d <= p; ++d)
        if (p % d == 0) return false;
    return true;
}

std::string Val::str() const { return exact ? to_string(value) : "at-least(" + to_string(value) + ")"; }

}  // namespace hw
