#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace extremal {

/// One numerical check: a measured quantity compared against a bound.
struct CheckItem {
  std::string name;
  double value = 0.0;      // measured margin or residual
  double threshold = 0.0;  // bound the value is compared against
  bool passed = false;
  double stderr_ = 0.0;    // statistical uncertainty of value, 0 if exact
  std::string note;
};

/// A named collection of checks. Failures are entries, never exceptions.
struct CheckReport {
  CheckReport() = default;
  explicit CheckReport(std::string report_name) : name(std::move(report_name)) {}

  std::string name;
  std::vector<CheckItem> items;
  bool inconclusive = false;
  std::string note;

  bool passed() const {
    return std::all_of(items.begin(), items.end(), [](const CheckItem& c) { return c.passed; });
  }

  /// Passes iff value >= lower (NaN fails).
  CheckItem& at_least(std::string item, double value, double lower, double err = 0.0) {
    items.push_back({std::move(item), value, lower, value >= lower, err, {}});
    return items.back();
  }

  /// Passes iff value <= upper (NaN fails).
  CheckItem& at_most(std::string item, double value, double upper, double err = 0.0) {
    items.push_back({std::move(item), value, upper, value <= upper, err, {}});
    return items.back();
  }

  void append(const CheckReport& other) {
    for (const auto& c : other.items) {
      items.push_back(c);
      items.back().name = other.name + "/" + c.name;
    }
    inconclusive = inconclusive || other.inconclusive;
  }

  /// Smallest value among items whose name starts with prefix (NaN if none).
  double min_value(const std::string& prefix = "") const {
    double m = std::nan("");
    for (const auto& c : items) {
      if (c.name.rfind(prefix, 0) != 0) continue;
      if (std::isnan(m) || c.value < m) m = c.value;
    }
    return m;
  }
};

}  // namespace extremal
