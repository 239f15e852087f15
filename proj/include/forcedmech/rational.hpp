#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>

namespace fm {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Exact conversion: every finite double is mantissa * 2^exponent.
Rational rational_from_double(double x);

double rational_to_double(const Rational& r);

bool rational_is_integer(const Rational& r);

// Requires rational_is_integer and a value that fits in int64.
std::int64_t rational_to_int(const Rational& r);

// "3", "-1/2", ...
std::string rational_to_string(const Rational& r);

// Exact n-th root of a non-negative integer if one exists.
bool exact_integer_root(const BigInt& x, unsigned n, BigInt& out);

} // namespace fm
