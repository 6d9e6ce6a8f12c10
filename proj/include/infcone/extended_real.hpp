#pragma once

#include <cmath>
#include <compare>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>

namespace infcone {

/// Raised for operations the extended-real conventions leave undefined
/// (currently only 0 * (+-inf)).
class UndefinedOperation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/**
 * @brief A real number or one of +inf / -inf.
 *
 * Arithmetic follows the optimization conventions used throughout the
 * library:
 *  - addition is total and (+inf) + (-inf) = +inf,
 *  - lambda * (+-inf) = +-inf for lambda > 0 and -+inf for lambda < 0,
 *  - 0 * (+-inf) is rejected with UndefinedOperation,
 *  - inf over nothing is +inf, sup over nothing is -inf.
 *
 * NaN is never stored; constructing from NaN throws.
 */
class ExtendedReal {
 public:
  enum class Kind { NegInf, Finite, PosInf };

  constexpr ExtendedReal() = default;
  ExtendedReal(double v) {  // NOLINT(google-explicit-constructor)
    if (std::isnan(v)) throw UndefinedOperation("ExtendedReal: NaN is not an extended real");
    if (v == std::numeric_limits<double>::infinity()) {
      kind_ = Kind::PosInf;
    } else if (v == -std::numeric_limits<double>::infinity()) {
      kind_ = Kind::NegInf;
    } else {
      value_ = v;
    }
  }

  static ExtendedReal pos_inf() { return ExtendedReal(Kind::PosInf); }
  static ExtendedReal neg_inf() { return ExtendedReal(Kind::NegInf); }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] bool is_finite() const { return kind_ == Kind::Finite; }
  [[nodiscard]] bool is_pos_inf() const { return kind_ == Kind::PosInf; }
  [[nodiscard]] bool is_neg_inf() const { return kind_ == Kind::NegInf; }

  /// Finite value; throws for infinities.
  [[nodiscard]] double value() const {
    if (!is_finite()) throw std::logic_error("ExtendedReal::value() on an infinite value");
    return value_;
  }

  /// IEEE double view (+-inf mapped to the IEEE infinities).
  [[nodiscard]] double to_double() const {
    switch (kind_) {
      case Kind::PosInf: return std::numeric_limits<double>::infinity();
      case Kind::NegInf: return -std::numeric_limits<double>::infinity();
      default: return value_;
    }
  }

  [[nodiscard]] std::string to_string() const {
    if (is_pos_inf()) return "+inf";
    if (is_neg_inf()) return "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value_);
    return buf;
  }

  friend ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
    if (a.is_pos_inf() || b.is_pos_inf()) return pos_inf();
    if (a.is_neg_inf() || b.is_neg_inf()) return neg_inf();
    return ExtendedReal(a.value_ + b.value_);
  }

  friend ExtendedReal operator-(ExtendedReal a) {
    switch (a.kind_) {
      case Kind::PosInf: return neg_inf();
      case Kind::NegInf: return pos_inf();
      default: return ExtendedReal(-a.value_);
    }
  }

  // a - b is a + (-b), so (+inf) - (+inf) = +inf.
  friend ExtendedReal operator-(ExtendedReal a, ExtendedReal b) { return a + (-b); }

  friend ExtendedReal operator*(ExtendedReal a, ExtendedReal b) {
    if (a.is_finite() && b.is_finite()) return ExtendedReal(a.value_ * b.value_);
    const int sa = a.sign();
    const int sb = b.sign();
    if (sa == 0 || sb == 0) throw UndefinedOperation("ExtendedReal: 0 * inf is undefined");
    return sa * sb > 0 ? pos_inf() : neg_inf();
  }

  /// -1, 0 or +1.
  [[nodiscard]] int sign() const {
    if (is_pos_inf()) return 1;
    if (is_neg_inf()) return -1;
    return (value_ > 0) - (value_ < 0);
  }

  friend std::strong_ordering operator<=>(ExtendedReal a, ExtendedReal b) {
    if (a.kind_ != b.kind_) return static_cast<int>(a.kind_) <=> static_cast<int>(b.kind_);
    if (!a.is_finite()) return std::strong_ordering::equal;
    if (a.value_ < b.value_) return std::strong_ordering::less;
    if (a.value_ > b.value_) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }
  friend bool operator==(ExtendedReal a, ExtendedReal b) { return (a <=> b) == 0; }

  friend std::ostream& operator<<(std::ostream& os, ExtendedReal a) { return os << a.to_string(); }

 private:
  explicit ExtendedReal(Kind k) : kind_(k) {}

  Kind kind_ = Kind::Finite;
  double value_ = 0.0;
};

inline ExtendedReal ext_add(ExtendedReal a, ExtendedReal b) { return a + b; }

/// Infimum of a collection; +inf when empty.
inline ExtendedReal ext_inf(std::span<const ExtendedReal> xs) {
  ExtendedReal best = ExtendedReal::pos_inf();
  for (auto x : xs) {
    if (x < best) best = x;
  }
  return best;
}

/// Supremum of a collection; -inf when empty.
inline ExtendedReal ext_sup(std::span<const ExtendedReal> xs) {
  ExtendedReal best = ExtendedReal::neg_inf();
  for (auto x : xs) {
    if (x > best) best = x;
  }
  return best;
}

inline ExtendedReal ext_max(ExtendedReal a, ExtendedReal b) { return a < b ? b : a; }
inline ExtendedReal ext_min(ExtendedReal a, ExtendedReal b) { return b < a ? b : a; }

}  // namespace infcone
