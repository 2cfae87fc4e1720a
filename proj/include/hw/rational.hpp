#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace hw {

using Int = mpz_class;
using Rat = mpq_class;

Rat parse_rat(std::string_view s);

/// n/d in canonical form (the two-argument mpq_class constructor does not reduce).
inline Rat frac(const Int& n, const Int& d) {
    Rat r(n, d);
    r.canonicalize();
    return r;
}
std::string to_string(const Int& x);
std::string to_string(const Rat& x);

Int floor(const Rat& x);
Int ceil(const Rat& x);

/// Exponent of p in x; x must be nonzero.
long vp(const Int& x, long p);
long vp(const Rat& x, long p);

Int ipow(long base, unsigned long e);
Int lcm(const Int& a, const Int& b);

bool is_prime(long p);

/// A valuation that is either exact or only a lower bound (element zero at its cap).
struct Val {
    Rat value;
    bool exact = true;

    static Val exactly(Rat v) { return {std::move(v), true}; }
    static Val at_least(Rat v) { return {std::move(v), false}; }

    std::string str() const;
    bool operator==(const Val& o) const { return exact == o.exact && value == o.value; }
};

}  // namespace hw
