#pragma once
#include <boost/multiprecision/cpp_int.hpp>
#include <string>

namespace ratsim {

// Exact rational arithmetic for probabilities and expected utilities.
using BigInt = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

inline Rat rat(long long num, long long den = 1) { return Rat(BigInt(num), BigInt(den)); }

inline std::string rat_str(const Rat& r) {
    std::string s = numerator(r).str();
    if (denominator(r) != 1) s += "/" + denominator(r).str();
    return s;
}

inline double rat_double(const Rat& r) { return static_cast<double>(r); }

}  // namespace ratsim
