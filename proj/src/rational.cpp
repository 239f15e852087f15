#include "forcedmech/rational.hpp"

#include "forcedmech/errors.hpp"

#include <cmath>
#include <limits>

namespace fm {

Rational rational_from_double(double x) {
    if (!std::isfinite(x)) throw EvalError("cannot convert non-finite double to rational");
    if (x == 0.0) return Rational(0);
    int exp2 = 0;
    double mant = std::frexp(x, &exp2); // x = mant * 2^exp2, 0.5 <= |mant| < 1
    // 53 bits of mantissa make mant * 2^53 an exact integer.
    auto scaled = static_cast<long long>(std::ldexp(mant, 53));
    exp2 -= 53;
    Rational r(scaled);
    if (exp2 >= 0) {
        r *= Rational(BigInt(1) << exp2);
    } else {
        r /= Rational(BigInt(1) << -exp2);
    }
    return r;
}

double rational_to_double(const Rational& r) { return static_cast<double>(r); }

bool rational_is_integer(const Rational& r) { return denominator(r) == 1; }

std::int64_t rational_to_int(const Rational& r) {
    if (!rational_is_integer(r)) throw EvalError("rational " + rational_to_string(r) + " is not an integer");
    const BigInt& n = numerator(r);
    if (n > std::numeric_limits<std::int64_t>::max() || n < std::numeric_limits<std::int64_t>::min())
        throw EvalError("integer " + n.str() + " out of int64 range");
    return static_cast<std::int64_t>(n);
}

std::string rational_to_string(const Rational& r) {
    if (rational_is_integer(r)) return numerator(r).str();
    return numerator(r).str() + "/" + denominator(r).str();
}

bool exact_integer_root(const BigInt& x, unsigned n, BigInt& out) {
    if (n == 0) return false;
    if (x < 0) {
        if (n % 2 == 0) return false;
        BigInt pos;
        if (!exact_integer_root(-x, n, pos)) return false;
        out = -pos;
        return true;
    }
    if (x == 0 || x == 1) {
        out = x;
        return true;
    }
    // Binary search for the n-th root.
    BigInt lo = 1, hi = x;
    while (lo <= hi) {
        BigInt mid = (lo + hi) / 2;
        BigInt p = boost::multiprecision::pow(mid, n);
        if (p == x) {
            out = mid;
            return true;
        }
        if (p < x)
            lo = mid + 1;
        else
            hi = mid - 1;
    }
    return false;
}

} // namespace fm
