#pragma once

#include <cmath>
#include <utility>

#include "spraymet/errors.hpp"

namespace spraymet {

// Forward-mode dual number. Nesting Dual<Dual<...>> gives exact mixed
// partials: depth d supports derivatives of total order d. The library
// caps nesting at depth 3 (Dual3); see field.hpp for the budget checks.
template <class T>
struct Dual {
    T a{}; // value
    T b{}; // derivative

    constexpr Dual() = default;
    constexpr Dual(double value) : a(value) {} // NOLINT: implicit lift of constants
    constexpr Dual(T value, T deriv) : a(std::move(value)), b(std::move(deriv)) {}
};

using Dual1 = Dual<double>;
using Dual2 = Dual<Dual1>;
using Dual3 = Dual<Dual2>;

template <class T>
inline constexpr int dual_depth_v = 0;

template <class T>
inline constexpr int dual_depth_v<Dual<T>> = dual_depth_v<T> + 1;

constexpr double real_part(double x) { return x; }

template <class T>
constexpr double real_part(const Dual<T>& x) {
    return real_part(x.a);
}

template <class T>
constexpr Dual<T> operator+(const Dual<T>& x, const Dual<T>& y) {
    return {x.a + y.a, x.b + y.b};
}

template <class T>
constexpr Dual<T> operator-(const Dual<T>& x, const Dual<T>& y) {
    return {x.a - y.a, x.b - y.b};
}

template <class T>
constexpr Dual<T> operator-(const Dual<T>& x) {
    return {-x.a, -x.b};
}

template <class T>
constexpr Dual<T> operator+(const Dual<T>& x) {
    return x;
}

template <class T>
constexpr Dual<T> operator*(const Dual<T>& x, const Dual<T>& y) {
    return {x.a * y.a, x.a * y.b + x.b * y.a};
}

template <class T>
constexpr Dual<T> operator/(const Dual<T>& x, const Dual<T>& y) {
    if (real_part(y.a) == 0.0)
        throw DomainError("division by zero");
    T q = x.a / y.a;
    return {q, (x.b - q * y.b) / y.a};
}

template <class T> constexpr Dual<T> operator+(const Dual<T>& x, double c) { return x + Dual<T>(c); }
template <class T> constexpr Dual<T> operator+(double c, const Dual<T>& x) { return Dual<T>(c) + x; }
template <class T> constexpr Dual<T> operator-(const Dual<T>& x, double c) { return x - Dual<T>(c); }
template <class T> constexpr Dual<T> operator-(double c, const Dual<T>& x) { return Dual<T>(c) - x; }
template <class T> constexpr Dual<T> operator*(const Dual<T>& x, double c) { return x * Dual<T>(c); }
template <class T> constexpr Dual<T> operator*(double c, const Dual<T>& x) { return Dual<T>(c) * x; }
template <class T> constexpr Dual<T> operator/(const Dual<T>& x, double c) { return x / Dual<T>(c); }
template <class T> constexpr Dual<T> operator/(double c, const Dual<T>& x) { return Dual<T>(c) / x; }

// Domain-checked scalar overloads so the double specialization of any
// templated evaluation behaves exactly like the dual one.
inline double sqrt(double x) {
    if (!(x > 0.0))
        throw DomainError("sqrt of a non-positive value");
    return std::sqrt(x);
}

inline double exp(double x) { return std::exp(x); }

inline double log(double x) {
    if (!(x > 0.0))
        throw DomainError("log of a non-positive value");
    return std::log(x);
}

inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }

template <class T>
Dual<T> sqrt(const Dual<T>& x) {
    if (!(real_part(x.a) > 0.0))
        throw DomainError("sqrt of a non-positive value");
    using std::sqrt;
    T s = sqrt(x.a);
    return {s, x.b / (s + s)};
}

template <class T>
Dual<T> exp(const Dual<T>& x) {
    using std::exp;
    T e = exp(x.a);
    return {e, e * x.b};
}

template <class T>
Dual<T> log(const Dual<T>& x) {
    if (!(real_part(x.a) > 0.0))
        throw DomainError("log of a non-positive value");
    using std::log;
    return {log(x.a), x.b / x.a};
}

template <class T>
Dual<T> sin(const Dual<T>& x) {
    using std::cos;
    using std::sin;
    return {sin(x.a), cos(x.a) * x.b};
}

template <class T>
Dual<T> cos(const Dual<T>& x) {
    using std::cos;
    using std::sin;
    return {cos(x.a), -sin(x.a) * x.b};
}

namespace detail {

// Non-negative integer power by repeated squaring; exact for duals.
template <class T>
T ipow(T base, unsigned n) {
    T result(1.0);
    while (n != 0) {
        if (n & 1u)
            result = result * base;
        base = base * base;
        n >>= 1;
    }
    return result;
}

} // namespace detail

inline double pow(double x, double c) {
    double n = std::nearbyint(c);
    if (n == c && std::abs(c) <= 1024.0) {
        if (c >= 0.0)
            return detail::ipow(x, static_cast<unsigned>(n));
        if (x == 0.0)
            throw DomainError("zero raised to a negative power");
        return 1.0 / detail::ipow(x, static_cast<unsigned>(-n));
    }
    if (!(x > 0.0))
        throw DomainError("non-integer power of a non-positive base");
    return std::pow(x, c);
}

// Power with a constant exponent (the only exponent form the expression
// grammar admits). Integer exponents reduce to multiplication, so they
// stay exact and keep the full domain x <= 0.
template <class T>
Dual<T> pow(const Dual<T>& x, double c) {
    if (c == 0.0)
        return Dual<T>(1.0);
    if (c == 1.0)
        return x;
    double n = std::nearbyint(c);
    if (n == c && std::abs(c) <= 1024.0) {
        if (c >= 0.0)
            return detail::ipow(x, static_cast<unsigned>(n));
        if (real_part(x.a) == 0.0)
            throw DomainError("zero raised to a negative power");
        return Dual<T>(1.0) / detail::ipow(x, static_cast<unsigned>(-n));
    }
    if (!(real_part(x.a) > 0.0))
        throw DomainError("non-integer power of a non-positive base");
    T va = pow(x.a, c);
    T da = pow(x.a, c - 1.0) * T(c);
    return {va, da * x.b};
}

} // namespace spraymet
