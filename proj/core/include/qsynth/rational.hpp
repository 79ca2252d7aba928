#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace qsynth {

/// Exact rational number backed by GMP. Expression templates are disabled so
/// intermediate results are always materialized and canonical.
using Rat = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                          boost::multiprecision::et_off>;
using Int = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                          boost::multiprecision::et_off>;

/// A rational extended with a top element used for unsafe values. Finite
/// values only arise when bad states are unreachable.
class ExtValue {
public:
    ExtValue() : finite_(true), v_(0) {}
    explicit ExtValue(Rat v) : finite_(true), v_(std::move(v)) {}
    static ExtValue infinity() {
        ExtValue e;
        e.finite_ = false;
        return e;
    }

    bool is_finite() const { return finite_; }
    const Rat& value() const {
        if (!finite_) throw std::logic_error("ExtValue: value() on infinity");
        return v_;
    }

    friend bool operator==(const ExtValue& a, const ExtValue& b) {
        if (a.finite_ != b.finite_) return false;
        return !a.finite_ || a.v_ == b.v_;
    }
    friend bool operator!=(const ExtValue& a, const ExtValue& b) { return !(a == b); }
    friend bool operator<(const ExtValue& a, const ExtValue& b) {
        if (!a.finite_) return false;
        if (!b.finite_) return true;
        return a.v_ < b.v_;
    }
    friend bool operator<=(const ExtValue& a, const ExtValue& b) { return a < b || a == b; }
    friend bool operator>(const ExtValue& a, const ExtValue& b) { return b < a; }
    friend bool operator>=(const ExtValue& a, const ExtValue& b) { return b <= a; }

    std::string str() const;

private:
    bool finite_;
    Rat v_;
};

/// Renders p/q (or an integer when q == 1); "inf" for the top element.
std::string rat_str(const Rat& r);

/// Decimal rendering with round-half-even at the given number of places.
std::string rat_decimal(const Rat& r, int places);

inline std::string ExtValue::str() const {
    return finite_ ? rat_str(v_) : std::string("inf");
}

inline std::string rat_str(const Rat& r) {
    std::string s = numerator(r).str();
    if (denominator(r) != 1) s += "/" + denominator(r).str();
    return s;
}

inline std::string rat_decimal(const Rat& r, int places) {
    Int scale = 1;
    for (int i = 0; i < places; ++i) scale *= 10;
    Rat scaled = r * Rat(scale);
    Int num = numerator(scaled), den = denominator(scaled);
    bool neg = num < 0;
    if (neg) num = -num;
    Int q = num / den, rem = num % den;
    // round half to even
    Int twice = rem * 2;
    if (twice > den || (twice == den && q % 2 != 0)) q += 1;
    std::string digits = q.str();
    while ((int)digits.size() <= places) digits.insert(digits.begin(), '0');
    std::string out = digits.substr(0, digits.size() - places) + "." +
                      digits.substr(digits.size() - places);
    return neg && q != 0 ? "-" + out : out;
}

}  // namespace qsynth
