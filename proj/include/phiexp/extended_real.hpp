#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "phiexp/errors.hpp"

namespace phiexp {

/// Extended real number: finite value, +inf or -inf, kept as an explicit tag
/// so that arithmetic paths never operate on sentinel floats by accident.
class ExtReal {
public:
    enum class Tag { Finite, PosInf, NegInf };

    ExtReal() : tag_(Tag::Finite), value_(0.0) {}
    explicit ExtReal(double v) : tag_(Tag::Finite), value_(v) {
        if (!std::isfinite(v)) throw DomainError("ExtReal: finite constructor given non-finite value");
    }

    static ExtReal pos_inf() { return ExtReal(Tag::PosInf); }
    static ExtReal neg_inf() { return ExtReal(Tag::NegInf); }

    bool is_finite() const { return tag_ == Tag::Finite; }
    bool is_pos_inf() const { return tag_ == Tag::PosInf; }
    bool is_neg_inf() const { return tag_ == Tag::NegInf; }

    /// Finite value; throws if the tag is infinite.
    double value() const {
        if (!is_finite()) throw DomainError("ExtReal: value() on infinite");
        return value_;
    }

    /// Lossy conversion for reporting only (+-HUGE_VAL for the infinite tags).
    double as_double() const {
        switch (tag_) {
            case Tag::PosInf: return std::numeric_limits<double>::infinity();
            case Tag::NegInf: return -std::numeric_limits<double>::infinity();
            default: return value_;
        }
    }

    ExtReal operator-() const {
        switch (tag_) {
            case Tag::PosInf: return neg_inf();
            case Tag::NegInf: return pos_inf();
            default: return ExtReal(-value_);
        }
    }

    /// Scaling by a positive constant preserves the tag.
    ExtReal scaled(double alpha) const {
        if (!(alpha > 0.0)) throw DomainError("ExtReal: scale factor must be positive");
        if (is_finite()) return ExtReal(value_ * alpha);
        return *this;
    }

    friend bool operator<(const ExtReal& a, const ExtReal& b) {
        if (a.tag_ == b.tag_ && a.tag_ != Tag::Finite) return false;
        return a.as_double() < b.as_double();
    }
    friend bool operator<(const ExtReal& a, double b) { return a.is_neg_inf() || (a.is_finite() && a.value_ < b); }
    friend bool operator<(double a, const ExtReal& b) { return b.is_pos_inf() || (b.is_finite() && a < b.value_); }
    friend bool operator<=(const ExtReal& a, double b) { return a.is_neg_inf() || (a.is_finite() && a.value_ <= b); }
    friend bool operator<=(double a, const ExtReal& b) { return b.is_pos_inf() || (b.is_finite() && a <= b.value_); }
    friend bool operator==(const ExtReal& a, const ExtReal& b) {
        if (a.tag_ != b.tag_) return false;
        return a.tag_ != Tag::Finite || a.value_ == b.value_;
    }

    std::string str() const {
        if (is_pos_inf()) return "+inf";
        if (is_neg_inf()) return "-inf";
        return std::to_string(value_);
    }

    friend std::ostream& operator<<(std::ostream& os, const ExtReal& x) { return os << x.str(); }

private:
    explicit ExtReal(Tag t) : tag_(t), value_(0.0) {}
    Tag tag_;
    double value_;
};

}  // namespace phiexp
