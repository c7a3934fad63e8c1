#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "survpc/data.hpp"
#include "survpc/distributions.hpp"
#include "survpc/errors.hpp"

namespace survpc {

struct CoxFitOptions {
  double tol = 1e-8;         // convergence: max |score component|
  int max_iterations = 50;
  double beta_bound = 50.0;  // |beta| beyond this is treated as separation
};

// Cumulative baseline hazard: non-decreasing step function, 0 before the
// first event time and constant beyond the last one.
struct BaselineHazard {
  std::vector<double> times;
  std::vector<double> cumhaz;

  double at(double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 0.0;
    return cumhaz[static_cast<std::size_t>(it - times.begin()) - 1];
  }
};

struct CoxModel {
  std::vector<std::string> covariate_names;
  std::vector<double> beta;
  BaselineHazard baseline;

  double linear_predictor(const std::vector<double>& y) const {
    if (y.size() != beta.size())
      throw std::invalid_argument("covariate vector length does not match the model");
    return std::inner_product(beta.begin(), beta.end(), y.begin(), 0.0);
  }
};

// S0(t, y) = exp(-Lambda0(t) * exp(beta' y)), right-continuous in t.
inline double cond_survival(const CoxModel& m, const std::vector<double>& y, double t) {
  check_time_arg(t);
  return std::exp(-m.baseline.at(t) * std::exp(m.linear_predictor(y)));
}

// Covariate-averaged survival over the given rows.
inline double marginal_survival(const CoxModel& m, const std::vector<std::vector<double>>& rows,
                                double t) {
  if (rows.empty()) throw std::invalid_argument("marginal_survival: no covariate rows");
  double sum = 0.0;
  for (const auto& y : rows) sum += cond_survival(m, y, t);
  return sum / double(rows.size());
}

// Inverse-transform draw from S0(., y): the smallest baseline knot where the
// conditional survival reaches u or below, kInfiniteTime when it never does.
inline double sample_cond_event_time(const CoxModel& m, double linear_predictor, double u) {
  check_uniform_arg(u);
  const double target = -std::log(u) * std::exp(-linear_predictor);
  const auto& ch = m.baseline.cumhaz;
  auto it = std::lower_bound(ch.begin(), ch.end(), target);
  if (it == ch.end()) return kInfiniteTime;
  return m.baseline.times[static_cast<std::size_t>(it - ch.begin())];
}

namespace detail {

struct CoxData {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<double> time;      // ascending
  std::vector<std::uint8_t> status;
  std::vector<double> x;         // n*p, row-major in sorted order
  std::size_t n_events = 0;
};

inline CoxData prepare_cox_data(const std::vector<StudyRecord>& records,
                                const std::vector<std::string>& names) {
  validate_records(records);
  CoxData d;
  d.n = records.size();
  d.p = records.front().covariates.size();
  if (!names.empty() && names.size() != d.p)
    throw std::invalid_argument("cox_fit: covariate name count does not match the data");

  std::vector<std::size_t> order(d.n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].time < records[b].time;
  });

  d.time.resize(d.n);
  d.status.resize(d.n);
  d.x.resize(d.n * d.p);
  for (std::size_t i = 0; i < d.n; ++i) {
    const auto& r = records[order[i]];
    d.time[i] = r.time;
    d.status[i] = r.event ? 1 : 0;
    if (r.event) ++d.n_events;
    std::copy(r.covariates.begin(), r.covariates.end(), d.x.begin() + std::ptrdiff_t(i * d.p));
  }
  if (d.n_events == 0) throw std::invalid_argument("cox_fit: no events in the data");

  // constant columns are inestimable in a partial likelihood
  for (std::size_t j = 0; j < d.p; ++j) {
    double lo = d.x[j], hi = d.x[j];
    for (std::size_t i = 1; i < d.n; ++i) {
      lo = std::min(lo, d.x[i * d.p + j]);
      hi = std::max(hi, d.x[i * d.p + j]);
    }
    if (lo == hi) {
      const std::string label = names.empty() ? std::to_string(j) : "'" + names[j] + "'";
      throw std::invalid_argument("cox_fit: covariate " + label + " is constant");
    }
  }
  return d;
}

struct CoxEval {
  double loglik = 0.0;
  std::vector<double> score;
  std::vector<double> info;  // negative Hessian (observed information), p*p
};

// One descending sweep over the risk sets; Breslow handling pools tied events.
inline CoxEval evaluate_partial_likelihood(const CoxData& d, const std::vector<double>& beta,
                                           bool need_info) {
  const std::size_t p = d.p;
  CoxEval ev;
  ev.score.assign(p, 0.0);
  if (need_info) ev.info.assign(p * p, 0.0);

  double s0 = 0.0;
  std::vector<double> s1(p, 0.0);
  std::vector<double> s2(need_info ? p * p : 0, 0.0);

  std::size_t i = d.n;
  while (i > 0) {
    const double t = d.time[i - 1];
    std::size_t g = i;
    while (g > 0 && d.time[g - 1] == t) --g;

    std::size_t d_r = 0;
    for (std::size_t k = g; k < i; ++k) {
      const double* row = d.x.data() + k * p;
      double eta = 0.0;
      for (std::size_t j = 0; j < p; ++j) eta += beta[j] * row[j];
      const double w = std::exp(eta);
      s0 += w;
      for (std::size_t j = 0; j < p; ++j) {
        s1[j] += w * row[j];
        if (need_info)
          for (std::size_t l = 0; l < p; ++l) s2[j * p + l] += w * row[j] * row[l];
      }
      if (d.status[k]) {
        ++d_r;
        ev.loglik += eta;
        for (std::size_t j = 0; j < p; ++j) ev.score[j] += row[j];
      }
    }
    if (d_r > 0) {
      const double dr = double(d_r);
      ev.loglik -= dr * std::log(s0);
      for (std::size_t j = 0; j < p; ++j) {
        const double mj = s1[j] / s0;
        ev.score[j] -= dr * mj;
        if (need_info)
          for (std::size_t l = 0; l < p; ++l)
            ev.info[j * p + l] += dr * (s2[j * p + l] / s0 - mj * (s1[l] / s0));
      }
    }
    i = g;
  }
  return ev;
}

// Solve A x = b for symmetric positive-definite A via Cholesky.
// Returns false when A is numerically singular (collinear covariates).
inline bool spd_solve(std::vector<double> a, std::vector<double>& b, std::size_t p) {
  if (p == 0) return true;
  double max_diag = 0.0;
  for (std::size_t j = 0; j < p; ++j) max_diag = std::max(max_diag, a[j * p + j]);
  if (!(max_diag > 0.0) || !std::isfinite(max_diag)) return false;

  for (std::size_t j = 0; j < p; ++j) {
    double diag = a[j * p + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * p + k] * a[j * p + k];
    if (!(diag > max_diag * 1e-12) || !std::isfinite(diag)) return false;
    const double ljj = std::sqrt(diag);
    a[j * p + j] = ljj;
    for (std::size_t i2 = j + 1; i2 < p; ++i2) {
      double v = a[i2 * p + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i2 * p + k] * a[j * p + k];
      a[i2 * p + j] = v / ljj;
    }
  }
  for (std::size_t i2 = 0; i2 < p; ++i2) {
    double v = b[i2];
    for (std::size_t k = 0; k < i2; ++k) v -= a[i2 * p + k] * b[k];
    b[i2] = v / a[i2 * p + i2];
  }
  for (std::size_t i2 = p; i2-- > 0;) {
    double v = b[i2];
    for (std::size_t k = i2 + 1; k < p; ++k) v -= a[k * p + i2] * b[k];
    b[i2] = v / a[i2 * p + i2];
  }
  return true;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

// Breslow estimator: dLambda0(t_r) = d_r / sum_{k in R_r} exp(beta' y_k).
inline BaselineHazard breslow_baseline(const CoxData& d, const std::vector<double>& beta) {
  const std::size_t p = d.p;
  std::vector<double> rev_times, rev_increments;
  double s0 = 0.0;
  std::size_t i = d.n;
  while (i > 0) {
    const double t = d.time[i - 1];
    std::size_t g = i;
    while (g > 0 && d.time[g - 1] == t) --g;
    std::size_t d_r = 0;
    for (std::size_t k = g; k < i; ++k) {
      const double* row = d.x.data() + k * p;
      double eta = 0.0;
      for (std::size_t j = 0; j < p; ++j) eta += beta[j] * row[j];
      s0 += std::exp(eta);
      if (d.status[k]) ++d_r;
    }
    if (d_r > 0) {
      rev_times.push_back(t);
      rev_increments.push_back(double(d_r) / s0);
    }
    i = g;
  }
  BaselineHazard h;
  h.times.assign(rev_times.rbegin(), rev_times.rend());
  h.cumhaz.resize(h.times.size());
  double acc = 0.0;
  for (std::size_t r = 0; r < h.times.size(); ++r) {
    acc += rev_increments[rev_increments.size() - 1 - r];
    h.cumhaz[r] = acc;
  }
  return h;
}

}  // namespace detail

// Breslow-tie log partial likelihood and score at an arbitrary beta
// (diagnostics and test oracles).
inline double cox_log_likelihood(const std::vector<StudyRecord>& records,
                                 const std::vector<double>& beta) {
  auto d = detail::prepare_cox_data(records, {});
  if (beta.size() != d.p) throw std::invalid_argument("beta length does not match the data");
  return detail::evaluate_partial_likelihood(d, beta, false).loglik;
}

inline std::vector<double> cox_score(const std::vector<StudyRecord>& records,
                                     const std::vector<double>& beta) {
  auto d = detail::prepare_cox_data(records, {});
  if (beta.size() != d.p) throw std::invalid_argument("beta length does not match the data");
  return detail::evaluate_partial_likelihood(d, beta, false).score;
}

// Breslow cumulative baseline hazard at a fixed beta; with beta = 0 this is
// the Nelson-Aalen estimator.
inline BaselineHazard breslow_baseline(const std::vector<StudyRecord>& records,
                                       const std::vector<double>& beta) {
  auto d = detail::prepare_cox_data(records, {});
  if (beta.size() != d.p) throw std::invalid_argument("beta length does not match the data");
  return detail::breslow_baseline(d, beta);
}

// Damped Newton maximization of the Breslow-tie partial likelihood from
// beta = 0, with step halving on likelihood decrease.
inline CoxModel cox_fit(const std::vector<StudyRecord>& records,
                        std::vector<std::string> covariate_names,
                        const CoxFitOptions& options = {}) {
  auto d = detail::prepare_cox_data(records, covariate_names);

  std::vector<double> beta(d.p, 0.0);
  std::vector<CoxIterTrace> trace;
  auto ev = detail::evaluate_partial_likelihood(d, beta, true);
  trace.push_back({0, ev.loglik, detail::max_abs(ev.score), 1.0});

  int iter = 0;
  while (detail::max_abs(ev.score) >= options.tol) {
    if (++iter > options.max_iterations)
      throw convergence_error("cox_fit: no convergence after " +
                                  std::to_string(options.max_iterations) + " iterations",
                              trace);
    std::vector<double> delta = ev.score;
    if (!detail::spd_solve(ev.info, delta, d.p))
      throw std::invalid_argument("cox_fit: collinear covariates (singular information matrix)");

    // likelihood comparisons below the fp resolution of |loglik| are noise
    const double slack = 1e-10 * (1.0 + std::fabs(ev.loglik));
    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h < 30 && !accepted; ++h) {
      std::vector<double> cand(d.p);
      for (std::size_t j = 0; j < d.p; ++j) cand[j] = beta[j] + step * delta[j];
      auto cev = detail::evaluate_partial_likelihood(d, cand, true);
      if (std::isfinite(cev.loglik) && cev.loglik >= ev.loglik - slack) {
        beta = std::move(cand);
        ev = std::move(cev);
        accepted = true;
      } else {
        step *= 0.5;
      }
    }
    if (!accepted)
      throw convergence_error("cox_fit: step halving failed to improve the partial likelihood",
                              trace);
    trace.push_back({iter, ev.loglik, detail::max_abs(ev.score), step});
    if (detail::max_abs(beta) > options.beta_bound)
      throw separation_error("cox_fit: |beta| exceeded " + std::to_string(options.beta_bound) +
                             " (monotone likelihood, data are separable)");
  }

  CoxModel m;
  m.covariate_names = std::move(covariate_names);
  m.beta = std::move(beta);
  m.baseline = detail::breslow_baseline(d, m.beta);
  return m;
}

inline CoxModel cox_fit(const Dataset& data, const CoxFitOptions& options = {}) {
  return cox_fit(data.records, data.covariate_names, options);
}

}  // namespace survpc
