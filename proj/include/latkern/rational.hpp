#pragma once

// Exact rational scalars used by the polynomial and series layers.
// Real computations (quadrature, kernel evaluation) convert to double at
// the last moment; everything combinatorial stays exact.

#include <boost/multiprecision/cpp_int.hpp>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace latkern {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline BigInt factorial(int n) {
    if (n < 0) throw std::invalid_argument("factorial: negative argument");
    BigInt f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

inline BigInt binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    BigInt b = 1;
    for (int i = 0; i < k; ++i) {
        b *= (n - i);
        b /= (i + 1);
    }
    return b;
}

inline BigInt ipow(BigInt base, int e) {
    BigInt r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

// "p/q" or "p"; used by the JSON stencil/polynomial formats.
inline Rational parse_rational(const std::string& s) {
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) return Rational(BigInt(s));
        BigInt p(s.substr(0, slash)), q(s.substr(slash + 1));
        if (q == 0) throw std::invalid_argument("zero denominator");
        return Rational(p, q);
    } catch (const std::exception&) {
        throw std::invalid_argument("parse_rational: bad literal '" + s + "'");
    }
}

inline std::string rational_str(const Rational& r) {
    const BigInt num = numerator(r), den = denominator(r);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

// Complex number with exact rational real/imaginary parts.
struct RatC {
    Rational re{};
    Rational im{};

    RatC() = default;
    RatC(Rational r) : re(std::move(r)) {}
    RatC(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}
    RatC(long n) : re(n) {}

    bool is_zero() const { return re == 0 && im == 0; }
    bool is_real() const { return im == 0; }

    friend RatC operator+(const RatC& a, const RatC& b) { return {a.re + b.re, a.im + b.im}; }
    friend RatC operator-(const RatC& a, const RatC& b) { return {a.re - b.re, a.im - b.im}; }
    friend RatC operator-(const RatC& a) { return {-a.re, -a.im}; }
    friend RatC operator*(const RatC& a, const RatC& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    RatC& operator+=(const RatC& o) { re += o.re; im += o.im; return *this; }
    RatC& operator-=(const RatC& o) { re -= o.re; im -= o.im; return *this; }
    RatC& operator*=(const RatC& o) { *this = *this * o; return *this; }
    friend bool operator==(const RatC& a, const RatC& b) { return a.re == b.re && a.im == b.im; }
    friend bool operator!=(const RatC& a, const RatC& b) { return !(a == b); }

    RatC operator/(const Rational& q) const { return {re / q, im / q}; }

    std::complex<double> to_complex() const { return {to_double(re), to_double(im)}; }
};

// i^e cycles with period 4.
inline RatC i_power(int e) {
    switch (((e % 4) + 4) % 4) {
        case 0: return RatC(Rational(1));
        case 1: return RatC(Rational(0), Rational(1));
        case 2: return RatC(Rational(-1));
        default: return RatC(Rational(0), Rational(-1));
    }
}

// Scalar adaptors so the polynomial templates work for both RatC and
// std::complex<double>.
template <class S> struct scalar_traits;

template <> struct scalar_traits<RatC> {
    static RatC zero() { return {}; }
    static RatC one() { return RatC(Rational(1)); }
    static bool is_zero(const RatC& v) { return v.is_zero(); }
    static std::complex<double> to_complex(const RatC& v) { return v.to_complex(); }
};

template <> struct scalar_traits<std::complex<double>> {
    static std::complex<double> zero() { return {0.0, 0.0}; }
    static std::complex<double> one() { return {1.0, 0.0}; }
    static bool is_zero(const std::complex<double>& v) { return v.real() == 0.0 && v.imag() == 0.0; }
    static std::complex<double> to_complex(const std::complex<double>& v) { return v; }
};

}  // namespace latkern
