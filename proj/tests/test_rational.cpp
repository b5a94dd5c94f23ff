#include "doctest.h"

#include <cstdint>
#include <random>

#include "kausal/rational.hpp"

using kausal::BigInt;
using kausal::Rational;

TEST_CASE("bigint arithmetic agrees with int64 on random small operands") {
    std::mt19937_64 gen(7);
    std::uniform_int_distribution<std::int64_t> dist(-1000000, 1000000);
    for (int iter = 0; iter < 2000; ++iter) {
        std::int64_t a = dist(gen), b = dist(gen);
        CHECK((BigInt(a) + BigInt(b)).to_int64() == a + b);
        CHECK((BigInt(a) - BigInt(b)).to_int64() == a - b);
        CHECK((BigInt(a) * BigInt(b)).to_int64() == a * b);
        if (b != 0) {
            CHECK((BigInt(a) / BigInt(b)).to_int64() == a / b);
            CHECK((BigInt(a) % BigInt(b)).to_int64() == a % b);
        }
        CHECK((BigInt(a) < BigInt(b)) == (a < b));
    }
}

TEST_CASE("bigint handles growth past 64 bits") {
    BigInt x(1);
    const BigInt big(1000000007);
    for (int i = 0; i < 12; ++i) x = x * big;
    CHECK(x.to_string() == "1000000084000003234000075460001188495013311144108707676"
                           "652246058853576503877793558643366457727920929841287201");
    CHECK(BigInt::from_string(x.to_string()) == x);
    CHECK((x - x).is_zero());
    CHECK((x / big * big) == x);
}

TEST_CASE("bigint gcd") {
    CHECK(BigInt::gcd(BigInt(12), BigInt(18)).to_int64() == 6);
    CHECK(BigInt::gcd(BigInt(-12), BigInt(18)).to_int64() == 6);
    CHECK(BigInt::gcd(BigInt(0), BigInt(5)).to_int64() == 5);
    CHECK(BigInt::gcd(BigInt(17), BigInt(13)).to_int64() == 1);
}

TEST_CASE("rational normalization and field ops") {
    Rational half(1, 2);
    Rational quarter(2, 8);
    CHECK(quarter == Rational(1, 4));
    CHECK(half + quarter == Rational(3, 4));
    CHECK(half * quarter == Rational(1, 8));
    CHECK(half - half == Rational());
    CHECK(half / quarter == Rational(2));
    CHECK(Rational(-2, -4) == half);
    CHECK(Rational(2, -4) == -half);
    CHECK(Rational(3, 7) < Rational(4, 7));
    CHECK(Rational(-1, 2) < Rational(1, 3));
    CHECK(half.to_double() == doctest::Approx(0.5));
}

TEST_CASE("rational random field laws against double arithmetic") {
    std::mt19937_64 gen(11);
    std::uniform_int_distribution<int> num(-40, 40), den(1, 40);
    for (int iter = 0; iter < 500; ++iter) {
        Rational a(num(gen), den(gen)), b(num(gen), den(gen)), c(num(gen), den(gen));
        CHECK(a + b == b + a);
        CHECK((a + b) + c == a + (b + c));
        CHECK(a * (b + c) == a * b + a * c);
        CHECK(((a + b).to_double()) == doctest::Approx(a.to_double() + b.to_double()).epsilon(1e-12));
        if (!b.is_zero()) CHECK(a / b * b == a);
    }
}

TEST_CASE("rational exact parse from doubles and strings") {
    CHECK(Rational::from_double(0.25) == Rational(1, 4));
    CHECK(Rational::from_double(-1.5) == Rational(-3, 2));
    CHECK(Rational::from_double(0.0) == Rational());
    CHECK(Rational::from_string("3/4") == Rational(3, 4));
    CHECK(Rational::from_string("-7/2") == Rational(-7, 2));
    CHECK(Rational::from_string("0.125") == Rational(1, 8));
    CHECK(Rational::from_string("-2.5") == Rational(-5, 2));
    CHECK(Rational::from_string("42") == Rational(42));
    // a dyadic double round-trips exactly
    double v = 0x1.3abcp-7;
    CHECK(Rational::from_double(v).to_double() == v);
}
