#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "survpc/cox.hpp"
#include "survpc/data.hpp"
#include "survpc/distributions.hpp"
#include "survpc/kaplan_meier.hpp"
#include "survpc/random.hpp"

namespace survpc {

// One subject in one simulated study: the raw censoring/event draws plus the
// resolved (time, event-flag) outcome.
struct SimRecord {
  std::string subject_id;
  double c_sim = 0.0;            // simulated censoring time
  double t_sim = 0.0;            // simulated event time (kInfiniteTime allowed)
  double x = 0.0;                // resolved follow-up time
  bool delta = false;            // true = event at x
};

enum class WeightForm { full, simplified };

struct MarginalCurve {
  StepSurvival survival;     // pointwise mean of weighted replicate curves
  std::vector<double> grid;  // grid the mean was taken on
};

struct VpcBand {
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
  std::size_t replicate_count = 0;
};

struct FittedModels {
  CoxModel event_model;
  StepSurvival censoring_survival;
};

namespace detail {

inline SimRecord resolve_open_ended(std::string subject_id, double c, double t, double horizon) {
  SimRecord s;
  s.subject_id = std::move(subject_id);
  s.c_sim = c;
  s.t_sim = t;
  if (t == kInfiniteTime) {       // no event mass left: censor at the study end
    s.x = std::min(c, horizon);
    s.delta = false;
  } else if (c < t) {
    s.x = c;
    s.delta = false;
  } else {                        // ties resolve to the event
    s.x = t;
    s.delta = true;
  }
  return s;
}

// Run fn(j) for j in [0, count); rethrows the first worker failure.
template <class Fn>
void parallel_for_index(std::size_t count, unsigned threads, Fn&& fn) {
  unsigned n_threads = threads == 0 ? std::thread::hardware_concurrency() : threads;
  if (n_threads == 0) n_threads = 1;
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, count));

  if (n_threads <= 1) {
    for (std::size_t j = 0; j < count; ++j) fn(j);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= count) return;
      try {
        fn(j);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (unsigned w = 0; w < n_threads; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

// Full simulation: draw censoring from the fitted censoring model and the event
// from the subject's conditional survival; the earlier one wins, ties go to
// the event.
inline std::vector<SimRecord> simulate_replicate_standard(const std::vector<StudyRecord>& records,
                                                          const CoxModel& event_model,
                                                          const StepSurvival& cens_model,
                                                          const CounterRng& rng) {
  validate_records(records);
  const double horizon = study_horizon(records);
  std::vector<SimRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const std::uint64_t key = fnv1a64(r.subject_id);
    const double c = sample_event_time(cens_model, rng.uniform(key, 0));
    const double eta = event_model.linear_predictor(r.covariates);
    const double t = sample_cond_event_time(event_model, eta, rng.uniform(key, 1));
    out.push_back(detail::resolve_open_ended(r.subject_id, c, t, horizon));
  }
  return out;
}

// Follow-up-censored simulation: as above but no subject can be followed past its
// end of follow-up; when both draws land beyond it the subject is censored
// there.  Every resolved time satisfies x <= x_obs.
inline std::vector<SimRecord> simulate_replicate_ipoc(const std::vector<StudyRecord>& records,
                                                      const CoxModel& event_model,
                                                      const StepSurvival& cens_model,
                                                      const CounterRng& rng) {
  validate_records(records);
  std::vector<SimRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const std::uint64_t key = fnv1a64(r.subject_id);
    const double c = sample_event_time(cens_model, rng.uniform(key, 0));
    const double eta = event_model.linear_predictor(r.covariates);
    const double t = sample_cond_event_time(event_model, eta, rng.uniform(key, 1));

    SimRecord s;
    s.subject_id = r.subject_id;
    s.c_sim = c;
    s.t_sim = t;
    if (c > r.time && t > r.time) {  // both draws beyond x_obs
      s.x = r.time;
      s.delta = false;
    } else if (c < t) {              // here c <= x_obs necessarily
      s.x = c;
      s.delta = false;
    } else {                         // c >= t and t <= x_obs; ties go to the event
      s.x = t;
      s.delta = true;
    }
    out.push_back(std::move(s));
  }
  return out;
}

// Marginal simulation: event times drawn from the marginal curve for every subject
// regardless of covariates; censoring as in the full simulation.
inline std::vector<SimRecord> simulate_replicate_marginal(const std::vector<StudyRecord>& records,
                                                          const MarginalCurve& marginal,
                                                          const StepSurvival& cens_model,
                                                          const CounterRng& rng) {
  validate_records(records);
  const double horizon = study_horizon(records);
  std::vector<SimRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const std::uint64_t key = fnv1a64(r.subject_id);
    const double c = sample_event_time(cens_model, rng.uniform(key, 0));
    const double t = sample_event_time(marginal.survival, rng.uniform(key, 1));
    out.push_back(detail::resolve_open_ended(r.subject_id, c, t, horizon));
  }
  return out;
}

// Replicate outcomes as analyzable records; covariates and ids carry over
// from the index-aligned originals.
inline std::vector<StudyRecord> as_study_records(const std::vector<SimRecord>& sims,
                                                 const std::vector<StudyRecord>& originals) {
  if (sims.size() != originals.size())
    throw std::invalid_argument("as_study_records: replicate/original size mismatch");
  std::vector<StudyRecord> out;
  out.reserve(sims.size());
  for (std::size_t i = 0; i < sims.size(); ++i)
    out.push_back({originals[i].subject_id, sims[i].x, sims[i].delta, originals[i].covariates});
  return out;
}

// Inverse-probability-of-censoring weights.
//   full:       W_i(t) = 1 / (S0(t, y_i) * S0C(t)^2)
//   simplified: W_i(t) = 1 / S0(t, y_i)
// Both give identical weighted-KM increments because the censoring factor is
// common to every subject at a fixed event time.
inline WeightFn ipoc_weights(const CoxModel& event_model, const StepSurvival& cens_model,
                             WeightForm form, std::optional<double> max_weight = std::nullopt) {
  return [event_model, cens_model, form, max_weight](const StudyRecord& rec, double t) {
    const double eta = event_model.linear_predictor(rec.covariates);
    double w = std::exp(event_model.baseline.at(t) * std::exp(eta));  // 1 / S0(t, y)
    if (form == WeightForm::full) {
      const double s0c = cens_model.at(t);
      w /= s0c * s0c;
    }
    if (max_weight && !(w <= *max_weight)) w = *max_weight;
    if (!std::isfinite(w) || !(w > 0.0)) throw weight_error(rec.subject_id, t, w);
    return w;
  };
}

// Marginal survival under the event model, approximated by averaging
// weighted-KM curves from `replicates` IPoC replicates on the grid.
inline MarginalCurve build_marginal(const std::vector<StudyRecord>& records,
                                    const CoxModel& event_model, const StepSurvival& cens_model,
                                    std::size_t replicates, const std::vector<double>& grid,
                                    std::uint64_t master_seed, unsigned threads = 0,
                                    std::optional<double> max_weight = std::nullopt) {
  if (replicates < 1) throw std::invalid_argument("build_marginal: replicates must be >= 1");
  if (grid.empty()) throw std::invalid_argument("build_marginal: empty grid");
  validate_records(records);

  const WeightFn weights =
      ipoc_weights(event_model, cens_model, WeightForm::simplified, max_weight);
  std::vector<std::vector<double>> rows(replicates);
  detail::parallel_for_index(replicates, threads, [&](std::size_t j) {
    try {
      const CounterRng rng(master_seed, RngStream::marginal_build, j);
      const auto sims = simulate_replicate_ipoc(records, event_model, cens_model, rng);
      const auto curve = weighted_km_fit(as_study_records(sims, records), weights).survival;
      auto& row = rows[j];
      row.reserve(grid.size());
      for (double t : grid) row.push_back(curve.at(t));
    } catch (const weight_error& e) {
      throw std::runtime_error("build_marginal: replicate " + std::to_string(j) + ": " + e.what());
    }
  });

  std::vector<double> mean(grid.size(), 0.0);
  for (const auto& row : rows)
    for (std::size_t i = 0; i < grid.size(); ++i) mean[i] += row[i];
  for (double& v : mean) v /= double(replicates);

  // the mean of non-increasing curves is non-increasing; clamp only fp noise
  for (std::size_t i = 1; i < mean.size(); ++i) {
    if (mean[i] > mean[i - 1]) {
      if (mean[i] - mean[i - 1] > 1e-9)
        throw std::logic_error("build_marginal: non-monotone mean curve");
      mean[i] = mean[i - 1];
    }
  }
  return MarginalCurve{StepSurvival(grid, mean), grid};
}

namespace detail {

inline std::size_t nearest_rank(double q, std::size_t n) {
  // ceil(q*n) in exact arithmetic; the epsilon absorbs fp excess like
  // 0.95 * 500 = 475.0000000000000x
  auto r = static_cast<std::size_t>(std::ceil(q * double(n) - 1e-9));
  if (r < 1) r = 1;
  if (r > n) r = n;
  return r;
}

}  // namespace detail

// Pointwise mean plus nearest-rank quantile envelope of replicate curves on a
// grid.  The envelope is widened where needed so lower <= mean <= upper holds
// even at grid times where almost all replicates share one value.
inline VpcBand aggregate_bands(const std::vector<StepSurvival>& curves,
                               const std::vector<double>& grid,
                               std::pair<double, double> quantiles = {0.05, 0.95}) {
  if (curves.empty()) throw std::invalid_argument("aggregate_bands: no curves");
  if (grid.empty()) throw std::invalid_argument("aggregate_bands: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw std::invalid_argument("aggregate_bands: grid must be strictly increasing");
  if (!(quantiles.first > 0.0 && quantiles.first < quantiles.second && quantiles.second < 1.0))
    throw std::invalid_argument("aggregate_bands: quantiles must satisfy 0 < lo < hi < 1");

  const std::size_t j_count = curves.size();
  const std::size_t lo_rank = detail::nearest_rank(quantiles.first, j_count);
  const std::size_t hi_rank = detail::nearest_rank(quantiles.second, j_count);

  VpcBand band;
  band.grid = grid;
  band.replicate_count = j_count;
  band.mean.reserve(grid.size());
  band.lower.reserve(grid.size());
  band.upper.reserve(grid.size());

  std::vector<double> vals(j_count);
  for (double t : grid) {
    double sum = 0.0;
    for (std::size_t j = 0; j < j_count; ++j) {
      vals[j] = curves[j].at(t);
      sum += vals[j];
    }
    const double mean = sum / double(j_count);
    std::sort(vals.begin(), vals.end());
    const double lower = std::min(vals[lo_rank - 1], mean);
    const double upper = std::max(vals[hi_rank - 1], mean);
    band.mean.push_back(mean);
    band.lower.push_back(lower);
    band.upper.push_back(upper);
  }
  return band;
}

enum class VpcAlgorithm {
  standard,           // full simulation, standard KM
  standard_censored,  // follow-up-censored draws with the standard KM: the
                      // intentionally biased diagnostic
  ipoc,               // follow-up-censored draws, IPoC-weighted KM
  marginal,           // draws from the averaged marginal model, standard KM
};

struct VpcRunConfig {
  VpcAlgorithm algorithm = VpcAlgorithm::standard;
  std::size_t replicates = 500;
  std::uint64_t seed = kDefaultSeed;
  std::size_t grid_size = 200;
  std::pair<double, double> quantiles{0.05, 0.95};
  std::string stratify_by;  // covariate column; empty = one stratum
  WeightForm weight_form = WeightForm::full;
  std::optional<double> max_weight;
  unsigned threads = 0;     // 0 = hardware concurrency
};

struct StratumVpc {
  std::string label;
  KmCurve observed;
  VpcBand band;
};

struct VpcResult {
  std::vector<double> grid;
  CoxModel event_model;
  StepSurvival censoring_survival;
  std::vector<StratumVpc> strata;
};

namespace detail {

inline std::vector<double> make_grid(double t_max, std::size_t size) {
  if (size < 2) throw std::invalid_argument("grid size must be >= 2");
  if (!(t_max > 0.0)) throw std::invalid_argument("cannot build a grid: max observed time is 0");
  std::vector<double> grid(size);
  for (std::size_t i = 0; i < size; ++i) grid[i] = t_max * double(i) / double(size - 1);
  return grid;
}

inline std::vector<StepSurvival> simulate_stratum_curves(const std::vector<StudyRecord>& records,
                                                         const CoxModel& event_model,
                                                         const StepSurvival& cens_model,
                                                         const std::vector<double>& grid,
                                                         const VpcRunConfig& config) {
  const std::size_t j_count = config.replicates;
  std::vector<StepSurvival> curves(j_count);

  WeightFn weights;
  MarginalCurve marginal;
  if (config.algorithm == VpcAlgorithm::ipoc)
    weights = ipoc_weights(event_model, cens_model, config.weight_form, config.max_weight);
  if (config.algorithm == VpcAlgorithm::marginal)
    marginal = build_marginal(records, event_model, cens_model, j_count, grid, config.seed,
                              config.threads, config.max_weight);

  parallel_for_index(j_count, config.threads, [&](std::size_t j) {
    const CounterRng rng(config.seed, RngStream::replicate, j);
    try {
      switch (config.algorithm) {
        case VpcAlgorithm::standard: {
          const auto sims = simulate_replicate_standard(records, event_model, cens_model, rng);
          curves[j] = km_fit(as_study_records(sims, records)).survival;
          break;
        }
        case VpcAlgorithm::standard_censored: {
          const auto sims = simulate_replicate_ipoc(records, event_model, cens_model, rng);
          curves[j] = km_fit(as_study_records(sims, records)).survival;
          break;
        }
        case VpcAlgorithm::ipoc: {
          const auto sims = simulate_replicate_ipoc(records, event_model, cens_model, rng);
          curves[j] = weighted_km_fit(as_study_records(sims, records), weights).survival;
          break;
        }
        case VpcAlgorithm::marginal: {
          const auto sims = simulate_replicate_marginal(records, marginal, cens_model, rng);
          curves[j] = km_fit(as_study_records(sims, records)).survival;
          break;
        }
      }
    } catch (const weight_error& e) {
      throw std::runtime_error("replicate " + std::to_string(j) + ": " + e.what());
    }
  });
  return curves;
}

}  // namespace detail

// Full VPC pipeline: models fitted once on the whole dataset, replicate
// simulation and band aggregation per stratum, every stratum paired with its
// observed KM on a common grid.
inline VpcResult run_vpc(const Dataset& data, const VpcRunConfig& config,
                         const FittedModels& models) {
  validate_records(data.records);
  if (config.replicates < 1) throw std::invalid_argument("run_vpc: replicates must be >= 1");

  VpcResult result;
  result.event_model = models.event_model;
  result.censoring_survival = models.censoring_survival;
  result.grid = detail::make_grid(study_horizon(data.records), config.grid_size);

  // partition into strata (single stratum "all" when no column is requested)
  std::vector<std::pair<std::string, std::vector<StudyRecord>>> strata;
  if (config.stratify_by.empty()) {
    strata.emplace_back("all", data.records);
  } else {
    const std::size_t col = data.covariate_index(config.stratify_by);
    std::vector<double> levels;
    for (const auto& r : data.records) levels.push_back(r.covariates[col]);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    for (double level : levels) {
      std::vector<StudyRecord> members;
      for (const auto& r : data.records)
        if (r.covariates[col] == level) members.push_back(r);
      char buf[64];
      const int len = std::snprintf(buf, sizeof buf, "%g", level);
      strata.emplace_back(config.stratify_by + "=" + std::string(buf, std::size_t(len)),
                          std::move(members));
    }
  }

  for (auto& [label, records] : strata) {
    StratumVpc s;
    s.label = label;
    s.observed = km_fit(records);
    const auto curves = detail::simulate_stratum_curves(records, models.event_model,
                                                        models.censoring_survival, result.grid,
                                                        config);
    s.band = aggregate_bands(curves, result.grid, config.quantiles);
    result.strata.push_back(std::move(s));
  }
  return result;
}

inline VpcResult run_vpc(const Dataset& data, const VpcRunConfig& config) {
  FittedModels models{cox_fit(data), censoring_fit(data.records)};
  return run_vpc(data, config, models);
}

}  // namespace survpc
