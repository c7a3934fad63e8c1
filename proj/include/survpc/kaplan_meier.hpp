#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "survpc/data.hpp"
#include "survpc/distributions.hpp"
#include "survpc/errors.hpp"

namespace survpc {

// Weight evaluator W_i(t); must be positive and finite wherever it is queried.
using WeightFn = std::function<double(const StudyRecord&, double)>;

inline WeightFn unit_weights() {
  return [](const StudyRecord&, double) { return 1.0; };
}

struct KmCurve {
  std::vector<double> event_times;  // distinct times with at least one event
  std::vector<double> increments;   // 1 - d_r / Y_r per event time
  std::vector<double> at_risk;      // Y_r (weighted sum under weighted fits)
  std::vector<double> events;       // d_r (weighted sum under weighted fits)
  StepSurvival survival;            // cumulative products of the increments
};

namespace detail {

// Ascending time; events before censorings inside a tie group (grouping only;
// censored subjects at an event time stay in that time's risk set either way).
inline std::vector<std::size_t> km_order(const std::vector<StudyRecord>& records) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].time != records[b].time) return records[a].time < records[b].time;
    return records[a].event > records[b].event;
  });
  return order;
}

}  // namespace detail

// Standard Kaplan-Meier.  Risk set at an event time counts every subject with
// time >= that event time, so ties are pooled and censorings at an event time
// are processed after the events.
inline KmCurve km_fit(const std::vector<StudyRecord>& records) {
  validate_records(records);
  const auto order = detail::km_order(records);
  const std::size_t n = order.size();

  KmCurve curve;
  std::vector<double> values;
  std::size_t at_risk = n;
  double surv = 1.0;
  std::size_t k = 0;
  while (k < n) {
    const double t = records[order[k]].time;
    std::size_t d = 0;
    std::size_t group = 0;
    while (k < n && records[order[k]].time == t) {
      if (records[order[k]].event) ++d;
      ++group;
      ++k;
    }
    if (d > 0) {
      const double inc = 1.0 - double(d) / double(at_risk);
      surv *= inc;
      curve.event_times.push_back(t);
      curve.increments.push_back(inc);
      curve.at_risk.push_back(double(at_risk));
      curve.events.push_back(double(d));
      values.push_back(surv);
    }
    at_risk -= group;
  }
  curve.survival = StepSurvival(curve.event_times, values);
  return curve;
}

// Weighted Kaplan-Meier: at each distinct event time t the increment is
// 1 - sum of weights of subjects with an event at t over the sum of weights
// across the risk set {time >= t}, weights evaluated exactly at t.
inline KmCurve weighted_km_fit(const std::vector<StudyRecord>& records, const WeightFn& weight) {
  validate_records(records);
  const auto order = detail::km_order(records);
  const std::size_t n = order.size();

  auto eval = [&](const StudyRecord& rec, double t) {
    const double w = weight(rec, t);
    if (!std::isfinite(w) || !(w > 0.0)) throw weight_error(rec.subject_id, t, w);
    return w;
  };

  KmCurve curve;
  std::vector<double> values;
  double surv = 1.0;
  std::size_t k = 0;
  while (k < n) {
    const double t = records[order[k]].time;
    std::size_t group_end = k;
    std::size_t d = 0;
    while (group_end < n && records[order[group_end]].time == t) {
      if (records[order[group_end]].event) ++d;
      ++group_end;
    }
    if (d > 0) {
      double num = 0.0;
      for (std::size_t i = k; i < group_end; ++i) {
        const auto& rec = records[order[i]];
        if (rec.event) num += eval(rec, t);
      }
      double den = 0.0;
      for (std::size_t i = k; i < n; ++i) den += eval(records[order[i]], t);
      double inc = 1.0 - num / den;
      if (inc < 0.0) inc = 0.0;  // fp guard when the whole risk set has events
      surv *= inc;
      curve.event_times.push_back(t);
      curve.increments.push_back(inc);
      curve.at_risk.push_back(den);
      curve.events.push_back(num);
      values.push_back(surv);
    }
    k = group_end;
  }
  curve.survival = StepSurvival(curve.event_times, values);
  return curve;
}

// Censoring-time survival S0C(t): Kaplan-Meier with the roles of event and
// censoring exchanged.  An event at t keeps its subject in the censoring risk
// set at t (events precede censorings at ties).
inline StepSurvival censoring_fit(const std::vector<StudyRecord>& records) {
  validate_records(records);
  std::vector<StudyRecord> flipped(records);
  for (auto& r : flipped) r.event = !r.event;
  return km_fit(flipped).survival;
}

}  // namespace survpc
