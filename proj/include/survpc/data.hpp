#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace survpc {

// One subject: observed follow-up time, event flag (true = event at `time`,
// false = censored at `time`) and covariate row.
struct StudyRecord {
  std::string subject_id;
  double time = 0.0;
  bool event = false;
  std::vector<double> covariates;
};

inline void validate_records(const std::vector<StudyRecord>& records) {
  if (records.empty()) throw std::invalid_argument("record set must not be empty");
  const std::size_t p = records.front().covariates.size();
  for (const auto& r : records) {
    if (!(r.time >= 0.0) || !std::isfinite(r.time))
      throw std::invalid_argument("subject '" + r.subject_id + "': time must be finite and >= 0");
    if (r.covariates.size() != p)
      throw std::invalid_argument("subject '" + r.subject_id + "': covariate length mismatch");
  }
}

struct Dataset {
  std::vector<std::string> covariate_names;
  std::vector<StudyRecord> records;

  std::size_t covariate_index(const std::string& name) const {
    auto it = std::find(covariate_names.begin(), covariate_names.end(), name);
    if (it == covariate_names.end())
      throw std::invalid_argument("unknown covariate column '" + name + "'");
    return static_cast<std::size_t>(it - covariate_names.begin());
  }

  // New dataset whose covariate rows are restricted to `names`, in that order.
  Dataset select_covariates(const std::vector<std::string>& names) const {
    std::vector<std::size_t> idx;
    idx.reserve(names.size());
    for (const auto& n : names) idx.push_back(covariate_index(n));
    Dataset out;
    out.covariate_names = names;
    out.records.reserve(records.size());
    for (const auto& r : records) {
      StudyRecord s{r.subject_id, r.time, r.event, {}};
      s.covariates.reserve(idx.size());
      for (std::size_t j : idx) s.covariates.push_back(r.covariates[j]);
      out.records.push_back(std::move(s));
    }
    return out;
  }
};

inline double study_horizon(const std::vector<StudyRecord>& records) {
  double h = 0.0;
  for (const auto& r : records) h = std::max(h, r.time);
  return h;
}

}  // namespace survpc
