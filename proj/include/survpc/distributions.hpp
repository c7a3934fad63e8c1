#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace survpc {

// Event times beyond a curve's support are reported as this sentinel so that
// downstream min/compare logic stays exact.
inline constexpr double kInfiniteTime = std::numeric_limits<double>::infinity();

inline void check_time_arg(double t) {
  if (!(t >= 0.0)) throw std::domain_error("time argument must be >= 0");
}

inline void check_uniform_arg(double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("uniform draw must lie in (0,1)");
}

struct ExponentialDist {
  double rate;  // hazard per unit time

  explicit ExponentialDist(double rate_) : rate(rate_) {
    if (!(std::isfinite(rate) && rate > 0.0))
      throw std::invalid_argument("ExponentialDist: rate must be positive and finite");
  }
};

struct WeibullDist {
  double scale;
  double shape;

  WeibullDist(double scale_, double shape_) : scale(scale_), shape(shape_) {
    if (!(std::isfinite(scale) && scale > 0.0))
      throw std::invalid_argument("WeibullDist: scale must be positive and finite");
    if (!(std::isfinite(shape) && shape > 0.0))
      throw std::invalid_argument("WeibullDist: shape must be positive and finite");
  }
};

// Right-continuous non-increasing step function on [0, inf):
// S(t) = 1 for t < knots[0], S(t) = values[r] for knots[r] <= t < knots[r+1].
// An empty knot list is the constant curve S = 1.
class StepSurvival {
public:
  StepSurvival() = default;

  StepSurvival(std::vector<double> knots, std::vector<double> values)
      : knots_(std::move(knots)), values_(std::move(values)) {
    if (knots_.size() != values_.size())
      throw std::invalid_argument("StepSurvival: knots and values differ in length");
    double prev_knot = -1.0;
    double prev_value = 1.0;
    for (std::size_t r = 0; r < knots_.size(); ++r) {
      if (!(knots_[r] >= 0.0 && knots_[r] > prev_knot) || !std::isfinite(knots_[r]))
        throw std::invalid_argument("StepSurvival: knots must be finite, >= 0, strictly increasing");
      if (!(values_[r] >= 0.0 && values_[r] <= prev_value))
        throw std::invalid_argument("StepSurvival: values must be non-increasing within [0,1]");
      prev_knot = knots_[r];
      prev_value = values_[r];
    }
  }

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  bool empty() const { return knots_.empty(); }

  double at(double t) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    if (it == knots_.begin()) return 1.0;
    return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
  }

  // Value past the last knot (1 when there are no knots).
  double final_value() const { return values_.empty() ? 1.0 : values_.back(); }

private:
  std::vector<double> knots_;
  std::vector<double> values_;
};

inline double survival_at(const ExponentialDist& d, double t) {
  check_time_arg(t);
  return std::exp(-d.rate * t);
}

inline double survival_at(const WeibullDist& d, double t) {
  check_time_arg(t);
  return std::exp(-std::pow(t / d.scale, d.shape));
}

inline double survival_at(const StepSurvival& s, double t) {
  check_time_arg(t);
  return s.at(t);
}

// Inverse-transform sampling: T = inf{ t : S(t) <= u }.
inline double sample_event_time(const ExponentialDist& d, double u) {
  check_uniform_arg(u);
  return -std::log(u) / d.rate;
}

inline double sample_event_time(const WeibullDist& d, double u) {
  check_uniform_arg(u);
  return d.scale * std::pow(-std::log(u), 1.0 / d.shape);
}

inline double sample_event_time(const StepSurvival& s, double u) {
  check_uniform_arg(u);
  const auto& v = s.values();
  auto it = std::partition_point(v.begin(), v.end(), [u](double x) { return x > u; });
  if (it == v.end()) return kInfiniteTime;  // u below the curve's final mass
  return s.knots()[static_cast<std::size_t>(it - v.begin())];
}

template <class Dist>
concept survival_distribution = requires(const Dist& d, double x) {
  { survival_at(d, x) } -> std::convertible_to<double>;
  { sample_event_time(d, x) } -> std::convertible_to<double>;
};

static_assert(survival_distribution<ExponentialDist>);
static_assert(survival_distribution<WeibullDist>);
static_assert(survival_distribution<StepSurvival>);

}  // namespace survpc
