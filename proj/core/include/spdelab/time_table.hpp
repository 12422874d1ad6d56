#pragma once

#include <stdexcept>
#include <vector>

namespace spdelab {

/// Piecewise-constant, right-continuous function of time with a finite
/// number of breakpoints. Used for the integrable time envelopes that
/// enter drift/noise bounds and exponential weights.
class TimeTable {
public:
  /// Constant table.
  explicit TimeTable(double value = 0.0) : breaks_{0.0}, values_{value} {}

  /// breaks[0] must be 0 and breaks strictly increasing; values[i] holds
  /// on [breaks[i], breaks[i+1]) and values.back() from breaks.back() on.
  TimeTable(std::vector<double> breaks, std::vector<double> values)
      : breaks_(std::move(breaks)), values_(std::move(values)) {
    if (breaks_.empty() || breaks_.size() != values_.size())
      throw std::invalid_argument("TimeTable: breaks/values size mismatch");
    if (breaks_.front() != 0.0)
      throw std::invalid_argument("TimeTable: first break must be 0");
    for (size_t i = 1; i < breaks_.size(); ++i)
      if (!(breaks_[i] > breaks_[i - 1]))
        throw std::invalid_argument("TimeTable: breaks must be strictly increasing");
  }

  double operator()(double t) const {
    size_t i = breaks_.size() - 1;
    while (i > 0 && t < breaks_[i]) --i;
    return values_[i];
  }

  /// Exact integral over [0, t], t >= 0.
  double integral(double t) const {
    if (t <= 0.0) return 0.0;
    double acc = 0.0;
    for (size_t i = 0; i < breaks_.size(); ++i) {
      double lo = breaks_[i];
      double hi = (i + 1 < breaks_.size()) ? breaks_[i + 1] : t;
      if (lo >= t) break;
      if (hi > t) hi = t;
      acc += values_[i] * (hi - lo);
    }
    return acc;
  }

  bool is_constant() const { return breaks_.size() == 1; }
  double max_value() const {
    double m = values_[0];
    for (double v : values_) m = v > m ? v : m;
    return m;
  }

  const std::vector<double>& breaks() const { return breaks_; }
  const std::vector<double>& values() const { return values_; }

private:
  std::vector<double> breaks_;
  std::vector<double> values_;
};

} // namespace spdelab
