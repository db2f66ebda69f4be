#ifndef SANWEAVE_RATIONAL_HPP
#define SANWEAVE_RATIONAL_HPP

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sanweave {

/// Exact rational on 64-bit numerator/denominator, always normalized
/// (gcd 1, denominator > 0). Durations and probabilities stay exact until
/// the Markov engine converts to binary64.
class Rational {
public:
    constexpr Rational() : num_(0), den_(1) {}
    Rational(std::int64_t n) : num_(n), den_(1) {}
    Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) { normalize(); }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    double to_double() const {
        return static_cast<double>(num_) / static_cast<double>(den_);
    }

    bool is_integer() const { return den_ == 1; }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return from128(i128(a.num_) * b.den_ + i128(b.num_) * a.den_,
                       i128(a.den_) * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return from128(i128(a.num_) * b.den_ - i128(b.num_) * a.den_,
                       i128(a.den_) * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return from128(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw std::domain_error("rational division by zero");
        return from128(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
    }

    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return i128(a.num_) * b.den_ < i128(b.num_) * a.den_;
    }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

    /// "7", "-3/4". Reparses through the expression grammar (n/d is a
    /// constant division of two literals).
    std::string str() const {
        std::string s = std::to_string(num_);
        if (den_ != 1) s += "/" + std::to_string(den_);
        return s;
    }

    /// Exact value of a decimal literal, e.g. "0.5" -> 1/2, "2" -> 2.
    /// Digits and at most one '.'; anything else is a std::invalid_argument.
    static Rational from_decimal(const std::string& text) {
        std::size_t dot = text.find('.');
        if (text.empty() || text.find_first_not_of("0123456789.") != std::string::npos ||
            dot != text.rfind('.') || text == ".")
            throw std::invalid_argument("bad decimal literal: " + text);
        if (dot == std::string::npos) return Rational(parse_digits(text), 1);
        std::string whole = text.substr(0, dot), frac = text.substr(dot + 1);
        std::int64_t den = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) {
            if (den > 900'000'000'000'000'000LL / 10)
                throw std::invalid_argument("decimal literal too precise: " + text);
            den *= 10;
        }
        std::int64_t w = whole.empty() ? 0 : parse_digits(whole);
        std::int64_t f = frac.empty() ? 0 : parse_digits(frac);
        return Rational(w, 1) + Rational(f, den);
    }

private:
    using i128 = __int128;

    static std::int64_t parse_digits(const std::string& s) {
        std::int64_t v = 0;
        for (char c : s) {
            if (v > (INT64_MAX - 9) / 10) throw std::invalid_argument("integer literal overflow");
            v = v * 10 + (c - '0');
        }
        return v;
    }

    static Rational from128(i128 n, i128 d) {
        if (d == 0) throw std::domain_error("rational with zero denominator");
        if (d < 0) { n = -n; d = -d; }
        i128 g = gcd128(n < 0 ? -n : n, d);
        if (g > 1) { n /= g; d /= g; }
        if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
            throw std::overflow_error("rational overflow");
        Rational r;
        r.num_ = static_cast<std::int64_t>(n);
        r.den_ = static_cast<std::int64_t>(d);
        return r;
    }

    static i128 gcd128(i128 a, i128 b) {
        while (b != 0) { i128 t = a % b; a = b; b = t; }
        return a == 0 ? 1 : a;
    }

    void normalize() {
        Rational r = from128(num_, den_);
        num_ = r.num_;
        den_ = r.den_;
    }

    std::int64_t num_;
    std::int64_t den_;
};

} // namespace sanweave

#endif
