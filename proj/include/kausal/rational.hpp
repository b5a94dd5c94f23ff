#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "kausal/bigint.hpp"

namespace kausal {

// Exact rational scalar. Always normalized: gcd(num, den) = 1, den > 0.
class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(std::int64_t v) : num_(v), den_(1) {}
    Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) { normalize(); }
    Rational(BigInt n, BigInt d) : num_(std::move(n)), den_(std::move(d)) { normalize(); }

    // Exact value of a finite double (dyadic rational).
    static Rational from_double(double v) {
        if (!std::isfinite(v)) throw std::invalid_argument("Rational: non-finite double");
        if (v == 0.0) return Rational();
        int exp = 0;
        double m = std::frexp(v, &exp);  // v = m * 2^exp, |m| in [0.5, 1)
        for (int i = 0; i < 64 && m != std::floor(m); ++i) {
            m *= 2.0;
            --exp;
        }
        Rational r(static_cast<std::int64_t>(m), 1);
        BigInt two(2);
        if (exp >= 0) {
            for (int i = 0; i < exp; ++i) r.num_ = r.num_ * two;
        } else {
            for (int i = 0; i < -exp; ++i) r.den_ = r.den_ * two;
        }
        r.normalize();
        return r;
    }

    // "p/q", "p", or a decimal "-1.25".
    static Rational from_string(const std::string& s) {
        auto slash = s.find('/');
        if (slash != std::string::npos) {
            return Rational(BigInt::from_string(s.substr(0, slash)),
                            BigInt::from_string(s.substr(slash + 1)));
        }
        auto dot = s.find('.');
        if (dot == std::string::npos) return Rational(BigInt::from_string(s), BigInt(1));
        std::string digits = s.substr(0, dot) + s.substr(dot + 1);
        BigInt den(1);
        const BigInt ten(10);
        for (std::size_t i = dot + 1; i < s.size(); ++i) den = den * ten;
        return Rational(BigInt::from_string(digits), den);
    }

    const BigInt& num() const { return num_; }
    const BigInt& den() const { return den_; }
    bool is_zero() const { return num_.is_zero(); }
    int sign() const { return num_.sign(); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.num_, a.den_ * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.is_zero()) throw std::domain_error("Rational: division by zero");
        return Rational(a.num_ * b.den_, a.den_ * b.num_);
    }
    friend Rational operator-(const Rational& a) { return Rational(-a.num_, a.den_, norm_tag{}); }

    Rational& operator+=(const Rational& b) { return *this = *this + b; }
    Rational& operator-=(const Rational& b) { return *this = *this - b; }
    Rational& operator*=(const Rational& b) { return *this = *this * b; }
    Rational& operator/=(const Rational& b) { return *this = *this / b; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return a.num_ * b.den_ < b.num_ * a.den_;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

    Rational abs() const { return sign() < 0 ? -*this : *this; }

    double to_double() const {
        // Scale so the quotient stays in double range for big operands.
        double n = num_.to_double();
        double d = den_.to_double();
        if (std::isfinite(n) && std::isfinite(d) && d != 0.0) return n / d;
        BigInt q, r;
        BigInt::divmod(num_, den_, q, r);
        return q.to_double();
    }

    std::string to_string() const {
        if (den_ == BigInt(1)) return num_.to_string();
        return num_.to_string() + "/" + den_.to_string();
    }

private:
    struct norm_tag {};
    Rational(BigInt n, BigInt d, norm_tag) : num_(std::move(n)), den_(std::move(d)) {}

    void normalize() {
        if (den_.is_zero()) throw std::domain_error("Rational: zero denominator");
        if (den_.is_negative()) {
            num_ = -num_;
            den_ = -den_;
        }
        if (num_.is_zero()) {
            den_ = BigInt(1);
            return;
        }
        BigInt g = BigInt::gcd(num_, den_);
        if (g != BigInt(1)) {
            num_ = num_ / g;
            den_ = den_ / g;
        }
    }

    BigInt num_;
    BigInt den_;
};

// Uniform access to the two weight modes: exact rationals and doubles.
template <class S>
struct scalar_traits;

template <>
struct scalar_traits<double> {
    static constexpr bool exact = false;
    static double zero() { return 0.0; }
    static double one() { return 1.0; }
    static double from_int(long v) { return static_cast<double>(v); }
    static double abs(double v) { return std::fabs(v); }
    static double to_double(double v) { return v; }
    static bool is_zero(double v, double tol = 1e-12) { return std::fabs(v) <= tol; }
};

template <>
struct scalar_traits<Rational> {
    static constexpr bool exact = true;
    static Rational zero() { return Rational(); }
    static Rational one() { return Rational(1); }
    static Rational from_int(long v) { return Rational(v); }
    static Rational abs(const Rational& v) { return v.abs(); }
    static double to_double(const Rational& v) { return v.to_double(); }
    static bool is_zero(const Rational& v, double = 0.0) { return v.is_zero(); }
};

}  // namespace kausal
