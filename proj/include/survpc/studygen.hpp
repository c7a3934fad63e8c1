#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "survpc/data.hpp"
#include "survpc/distributions.hpp"
#include "survpc/errors.hpp"
#include "survpc/keyvalue.hpp"
#include "survpc/random.hpp"

namespace survpc {

// Two-group by two-arm synthetic study: per-cell exponential event hazards
// and one Weibull censoring process shared by all subjects.  The first group
// and first arm form the reference cell of the emitted covariate coding
// {group indicator, arm indicator, interaction}.
struct StudySpec {
  std::array<std::string, 2> groups{"highrisk", "lowrisk"};
  std::array<std::string, 2> arms{"active", "placebo"};
  std::array<std::array<std::size_t, 2>, 2> cell_sizes{{{0, 0}, {0, 0}}};    // [group][arm]
  std::array<std::array<double, 2>, 2> cell_hazards{{{1.0, 1.0}, {1.0, 1.0}}};
  double censoring_scale = 2.0;
  double censoring_shape = 5.0;
  std::uint64_t seed = kDefaultSeed;
};

inline StudySpec default_study_spec() {
  StudySpec spec;
  spec.cell_sizes = {{{500, 500}, {500, 500}}};
  spec.cell_hazards = {{{2.0, 2.0}, {0.05, 0.2}}};
  return spec;
}

inline void validate_study_spec(const StudySpec& spec) {
  if (spec.groups[0].empty() || spec.groups[1].empty() || spec.groups[0] == spec.groups[1])
    throw std::invalid_argument("study spec: group labels must be distinct and non-empty");
  if (spec.arms[0].empty() || spec.arms[1].empty() || spec.arms[0] == spec.arms[1])
    throw std::invalid_argument("study spec: arm labels must be distinct and non-empty");
  if (!(spec.censoring_scale > 0.0) || !(spec.censoring_shape > 0.0))
    throw std::invalid_argument("study spec: censoring scale and shape must be positive");
  for (std::size_t g = 0; g < 2; ++g)
    for (std::size_t a = 0; a < 2; ++a)
      if (spec.cell_sizes[g][a] > 0 &&
          !(std::isfinite(spec.cell_hazards[g][a]) && spec.cell_hazards[g][a] > 0.0))
        throw std::invalid_argument("study spec: hazard for " + spec.groups[g] + "." +
                                    spec.arms[a] + " must be positive");
}

// Event time ~ Exponential(cell hazard), censoring ~ Weibull; the record
// keeps the earlier one.  Deterministic given the seed: subject s always
// consumes draws (s, 0) and (s, 1) of the study_gen stream.
inline Dataset generate_study(const StudySpec& spec) {
  validate_study_spec(spec);
  Dataset data;
  data.covariate_names = {spec.groups[1], spec.arms[1], spec.groups[1] + "_" + spec.arms[1]};

  const WeibullDist censoring(spec.censoring_scale, spec.censoring_shape);
  const CounterRng rng(spec.seed, RngStream::study_gen, 0);

  std::uint64_t idx = 0;
  for (std::size_t g = 0; g < 2; ++g) {
    for (std::size_t a = 0; a < 2; ++a) {
      const std::size_t size = spec.cell_sizes[g][a];
      if (size == 0) continue;
      const ExponentialDist event_dist(spec.cell_hazards[g][a]);
      for (std::size_t s = 0; s < size; ++s, ++idx) {
        const double t = sample_event_time(event_dist, rng.uniform(idx, 0));
        const double c = sample_event_time(censoring, rng.uniform(idx, 1));
        StudyRecord r;
        r.subject_id = std::to_string(idx + 1);
        r.event = t <= c;
        r.time = r.event ? t : c;
        r.covariates = {g == 1 ? 1.0 : 0.0, a == 1 ? 1.0 : 0.0, (g == 1 && a == 1) ? 1.0 : 0.0};
        data.records.push_back(std::move(r));
      }
    }
  }
  return data;
}

// Group-size-weighted exponential mixture for one arm: the data-generating
// marginal survival used as the acceptance oracle.
inline double true_marginal_survival(const StudySpec& spec, const std::string& arm, double t) {
  check_time_arg(t);
  std::size_t a = 2;
  if (arm == spec.arms[0]) a = 0;
  else if (arm == spec.arms[1]) a = 1;
  else throw std::invalid_argument("unknown arm '" + arm + "'");

  const double n0 = double(spec.cell_sizes[0][a]);
  const double n1 = double(spec.cell_sizes[1][a]);
  const double total = n0 + n1;
  if (total == 0.0) throw std::invalid_argument("arm '" + arm + "' has no subjects");
  return (n0 * std::exp(-spec.cell_hazards[0][a] * t) +
          n1 * std::exp(-spec.cell_hazards[1][a] * t)) /
         total;
}

// Study-spec file: flat key=value.  Recognized keys:
//   groups=<ref>,<other>      arms=<ref>,<other>      seed=<u64>
//   count.<group>.<arm>=<n>   hazard.<group>.<arm>=<rate>
//   censoring_scale=<x>       censoring_shape=<x>
// An empty file yields the empty study (all cell counts zero).
inline StudySpec parse_study_spec(std::istream& in, const std::string& source) {
  auto kv = parse_key_values(in, source);
  StudySpec spec;  // counts 0, labels defaulted

  auto split_pair = [&](const std::string& value, const std::string& key) {
    const auto comma = value.find(',');
    if (comma == std::string::npos || value.find(',', comma + 1) != std::string::npos)
      throw parse_error("key '" + key + "' expects exactly two comma-separated labels");
    return std::array<std::string, 2>{value.substr(0, comma), value.substr(comma + 1)};
  };
  if (auto it = kv.find("groups"); it != kv.end()) spec.groups = split_pair(it->second, "groups");
  if (auto it = kv.find("arms"); it != kv.end()) spec.arms = split_pair(it->second, "arms");

  std::array<std::array<bool, 2>, 2> hazard_set{{{false, false}, {false, false}}};
  auto cell_of = [&](const std::string& key, const std::string& prefix,
                     std::size_t& g, std::size_t& a) {
    const std::string rest = key.substr(prefix.size());
    const auto dot = rest.find('.');
    if (dot == std::string::npos) throw parse_error("malformed key '" + key + "'");
    const std::string group = rest.substr(0, dot);
    const std::string arm = rest.substr(dot + 1);
    if (group == spec.groups[0]) g = 0;
    else if (group == spec.groups[1]) g = 1;
    else throw parse_error("key '" + key + "' names unknown group '" + group + "'");
    if (arm == spec.arms[0]) a = 0;
    else if (arm == spec.arms[1]) a = 1;
    else throw parse_error("key '" + key + "' names unknown arm '" + arm + "'");
  };

  for (const auto& [key, value] : kv) {
    if (key == "groups" || key == "arms") continue;
    if (key == "seed") {
      spec.seed = parse_u64_value(value, key);
    } else if (key == "censoring_scale") {
      spec.censoring_scale = parse_double_value(value, key);
    } else if (key == "censoring_shape") {
      spec.censoring_shape = parse_double_value(value, key);
    } else if (key.rfind("count.", 0) == 0) {
      std::size_t g = 0, a = 0;
      cell_of(key, "count.", g, a);
      spec.cell_sizes[g][a] = static_cast<std::size_t>(parse_u64_value(value, key));
    } else if (key.rfind("hazard.", 0) == 0) {
      std::size_t g = 0, a = 0;
      cell_of(key, "hazard.", g, a);
      spec.cell_hazards[g][a] = parse_double_value(value, key);
      hazard_set[g][a] = true;
    } else {
      throw parse_error(source + ": unknown key '" + key + "'");
    }
  }

  for (std::size_t g = 0; g < 2; ++g)
    for (std::size_t a = 0; a < 2; ++a)
      if (spec.cell_sizes[g][a] > 0 && !hazard_set[g][a])
        throw parse_error(source + ": missing key 'hazard." + spec.groups[g] + "." +
                          spec.arms[a] + "'");
  try {
    validate_study_spec(spec);
  } catch (const std::invalid_argument& e) {
    throw parse_error(source + ": " + e.what());
  }
  return spec;
}

}  // namespace survpc
