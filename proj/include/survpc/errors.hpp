#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace survpc {

// Raised for malformed input files, config values and CLI arguments.
// The CLI maps this to exit code 2; other runtime failures map to 1.
struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A weight evaluator produced a non-finite or non-positive value.
struct weight_error : std::runtime_error {
  weight_error(std::string subject, double t, double value)
      : std::runtime_error("invalid weight " + std::to_string(value) + " for subject '" +
                           subject + "' at time " + std::to_string(t)),
        subject_id(std::move(subject)),
        time(t) {}

  std::string subject_id;
  double time;
};

// Monotone partial likelihood: the data are separable and the hazard-ratio
// estimate diverges.
struct separation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CoxIterTrace {
  int iteration;
  double log_likelihood;
  double max_score;
  double step_scale;
};

// Newton iterations failed to converge; carries the per-iteration trace.
struct convergence_error : std::runtime_error {
  convergence_error(const std::string& msg, std::vector<CoxIterTrace> trace_)
      : std::runtime_error(format(msg, trace_)), trace(std::move(trace_)) {}

  std::vector<CoxIterTrace> trace;

private:
  static std::string format(const std::string& msg, const std::vector<CoxIterTrace>& trace) {
    std::string out = msg;
    for (const auto& it : trace) {
      out += "\n  iter " + std::to_string(it.iteration) +
             ": loglik=" + std::to_string(it.log_likelihood) +
             " max|score|=" + std::to_string(it.max_score) +
             " step=" + std::to_string(it.step_scale);
    }
    return out;
  }
};

}  // namespace survpc
