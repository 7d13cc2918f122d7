#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace kms {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Parse "p/q", an integer, or a plain decimal ("0.25", "-3.5") exactly.
/// Throws std::invalid_argument on malformed input.
inline Rational parse_rational(const std::string& text) {
    auto bad = [&]() -> Rational {
        throw std::invalid_argument("malformed number: '" + text + "'");
    };
    if (text.empty()) return bad();
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        std::string num = text.substr(0, slash);
        std::string den = text.substr(slash + 1);
        if (num.empty() || den.empty()) return bad();
        try {
            BigInt p(num), q(den);
            if (q == 0) throw std::invalid_argument("zero denominator: '" + text + "'");
            return Rational(p, q);
        } catch (const std::runtime_error&) {
            return bad();
        }
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) {
        try {
            return Rational(BigInt(text));
        } catch (const std::runtime_error&) {
            return bad();
        }
    }
    std::string whole = text.substr(0, dot);
    std::string frac = text.substr(dot + 1);
    if (frac.empty() || frac.find_first_not_of("0123456789") != std::string::npos) return bad();
    bool neg = !whole.empty() && whole[0] == '-';
    if (whole == "-" || whole == "+") whole += "0";
    if (whole.empty()) whole = "0";
    try {
        BigInt w(whole);
        BigInt scale = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
        BigInt f(frac);
        BigInt p = boost::multiprecision::abs(w) * scale + f;
        Rational r(p, scale);
        return neg ? -r : r;
    } catch (const std::runtime_error&) {
        return bad();
    }
}

inline std::string rational_to_string(const Rational& r) {
    std::ostringstream os;
    os << r;
    return os.str();
}

/// Exact binary expansion of a finite double.
inline Rational rational_from_double(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("cannot convert non-finite double");
    return Rational(x);
}

/// Exact square root of a non-negative rational, when one exists.
inline std::optional<Rational> exact_sqrt(const Rational& r) {
    if (r < 0) return std::nullopt;
    if (r == 0) return Rational(0);
    BigInt p = boost::multiprecision::numerator(r);
    BigInt q = boost::multiprecision::denominator(r);
    BigInt sp = boost::multiprecision::sqrt(p);
    BigInt sq = boost::multiprecision::sqrt(q);
    if (sp * sp != p || sq * sq != q) return std::nullopt;
    return Rational(sp, sq);
}

// Scalar helpers shared by the double and Rational instantiations of the
// numeric kernels. Rational arithmetic is exact; double carries the usual
// rounding.
namespace num {

template <typename T>
inline constexpr bool is_exact_v = false;
template <>
inline constexpr bool is_exact_v<Rational> = true;

inline double to_double(double x) { return x; }
inline double to_double(const Rational& x) { return x.template convert_to<double>(); }

template <typename T>
T from_rational(const Rational& r);
template <>
inline double from_rational<double>(const Rational& r) {
    return r.template convert_to<double>();
}
template <>
inline Rational from_rational<Rational>(const Rational& r) {
    return r;
}

template <typename T>
T abs_val(const T& x) {
    return x < T(0) ? T(-x) : x;
}

/// base^n for integer n (n < 0 uses exact/float division).
template <typename T>
T pow_int(const T& base, long long n) {
    if (n < 0) return T(1) / pow_int(base, -n);
    T acc(1);
    T b = base;
    long long e = n;
    while (e > 0) {
        if (e & 1) acc = acc * b;
        b = b * b;
        e >>= 1;
    }
    return acc;
}

inline std::string to_display(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}
inline std::string to_display(const Rational& x) { return rational_to_string(x); }

}  // namespace num

}  // namespace kms
