#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <string>

namespace triage {

// Decimal fixed point with six fractional digits. All money and budget
// arithmetic goes through this type so that sums are exact and independent
// of evaluation order.
template <class Tag>
class Fixed {
 public:
  static constexpr std::int64_t kScale = 1'000'000;

  constexpr Fixed() = default;

  static constexpr Fixed from_units(std::int64_t units) {
    Fixed f;
    f.units_ = units;
    return f;
  }
  static constexpr Fixed whole(std::int64_t value) { return from_units(value * kScale); }
  static Fixed from_double(double value) {
    return from_units(static_cast<std::int64_t>(std::llround(value * static_cast<double>(kScale))));
  }

  constexpr std::int64_t units() const { return units_; }
  double to_double() const { return static_cast<double>(units_) / static_cast<double>(kScale); }

  Fixed scaled(double factor) const { return from_double(to_double() * factor); }

  // Shortest decimal rendering: "210", "-0.5", "90.333333".
  std::string to_string() const {
    std::int64_t magnitude = units_ < 0 ? -units_ : units_;
    std::string out = units_ < 0 ? "-" : "";
    out += std::to_string(magnitude / kScale);
    std::int64_t frac = magnitude % kScale;
    if (frac != 0) {
      std::string digits = std::to_string(frac);
      digits.insert(0, 6 - digits.size(), '0');
      while (!digits.empty() && digits.back() == '0') digits.pop_back();
      out += "." + digits;
    }
    return out;
  }

  constexpr Fixed operator-() const { return from_units(-units_); }
  constexpr Fixed& operator+=(Fixed rhs) {
    units_ += rhs.units_;
    return *this;
  }
  constexpr Fixed& operator-=(Fixed rhs) {
    units_ -= rhs.units_;
    return *this;
  }
  friend constexpr Fixed operator+(Fixed a, Fixed b) { return a += b; }
  friend constexpr Fixed operator-(Fixed a, Fixed b) { return a -= b; }
  friend constexpr auto operator<=>(Fixed, Fixed) = default;
  friend constexpr bool operator==(Fixed, Fixed) = default;

 private:
  std::int64_t units_ = 0;
};

struct MoneyTag {};
struct QuantityTag {};

using Money = Fixed<MoneyTag>;
// Minutes, labour units, fixture counts and similar budgeted amounts.
using Quantity = Fixed<QuantityTag>;

}  // namespace triage
