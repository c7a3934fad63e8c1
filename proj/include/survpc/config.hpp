#pragma once

#include <cstdlib>
#include <map>
#include <optional>
#include <string>

#include "survpc/errors.hpp"
#include "survpc/keyvalue.hpp"
#include "survpc/vpc.hpp"

namespace survpc {

inline VpcAlgorithm parse_algorithm(const std::string& name) {
  if (name == "standard") return VpcAlgorithm::standard;
  if (name == "standard-censored") return VpcAlgorithm::standard_censored;
  if (name == "ipoc") return VpcAlgorithm::ipoc;
  if (name == "marginal") return VpcAlgorithm::marginal;
  throw parse_error("unknown algorithm '" + name +
                    "' (expected standard|standard-censored|ipoc|marginal)");
}

inline WeightForm parse_weight_form(const std::string& name) {
  if (name == "full") return WeightForm::full;
  if (name == "simplified") return WeightForm::simplified;
  throw parse_error("unknown weight form '" + name + "' (expected full|simplified)");
}

inline std::pair<double, double> parse_quantiles(const std::string& value) {
  const auto comma = value.find(',');
  if (comma == std::string::npos || value.find(',', comma + 1) != std::string::npos)
    throw parse_error("quantiles expect two comma-separated values, e.g. 0.05,0.95");
  const double lo = parse_double_value(value.substr(0, comma), "quantiles");
  const double hi = parse_double_value(value.substr(comma + 1), "quantiles");
  if (!(lo > 0.0 && lo < hi && hi < 1.0))
    throw parse_error("quantiles must satisfy 0 < lower < upper < 1");
  return {lo, hi};
}

// CLI flag values; unset fields fall back to the config file, then (for the
// seed) the VPC_IPOC_SEED environment variable, then built-in defaults.
struct RunOverrides {
  std::optional<std::string> algorithm;
  std::optional<std::size_t> replicates;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> grid_size;
  std::optional<std::string> quantiles;
  std::optional<std::string> stratify_by;
  std::optional<std::string> weight_form;
  std::optional<double> max_weight;
  std::optional<unsigned> threads;
};

inline VpcRunConfig resolve_run_config(const RunOverrides& flags,
                                       const std::map<std::string, std::string>& file) {
  for (const auto& [key, value] : file) {
    (void)value;
    if (key != "algorithm" && key != "replicates" && key != "seed" && key != "grid" &&
        key != "quantiles" && key != "stratify_by" && key != "weight_form" &&
        key != "max_weight" && key != "threads")
      throw parse_error("config: unknown key '" + key + "'");
  }

  auto file_value = [&](const char* key) -> std::optional<std::string> {
    auto it = file.find(key);
    if (it == file.end()) return std::nullopt;
    return it->second;
  };

  VpcRunConfig config;

  if (flags.algorithm) config.algorithm = parse_algorithm(*flags.algorithm);
  else if (auto v = file_value("algorithm")) config.algorithm = parse_algorithm(*v);

  if (flags.replicates) config.replicates = *flags.replicates;
  else if (auto v = file_value("replicates"))
    config.replicates = static_cast<std::size_t>(parse_u64_value(*v, "replicates"));
  if (config.replicates < 1) throw parse_error("replicates must be >= 1");

  if (flags.seed) config.seed = *flags.seed;
  else if (auto v = file_value("seed")) config.seed = parse_u64_value(*v, "seed");
  else if (const char* env = std::getenv("VPC_IPOC_SEED"))
    config.seed = parse_u64_value(env, "VPC_IPOC_SEED");

  if (flags.grid_size) config.grid_size = *flags.grid_size;
  else if (auto v = file_value("grid"))
    config.grid_size = static_cast<std::size_t>(parse_u64_value(*v, "grid"));
  if (config.grid_size < 2) throw parse_error("grid size must be >= 2");

  if (flags.quantiles) config.quantiles = parse_quantiles(*flags.quantiles);
  else if (auto v = file_value("quantiles")) config.quantiles = parse_quantiles(*v);

  if (flags.stratify_by) config.stratify_by = *flags.stratify_by;
  else if (auto v = file_value("stratify_by")) config.stratify_by = *v;

  if (flags.weight_form) config.weight_form = parse_weight_form(*flags.weight_form);
  else if (auto v = file_value("weight_form")) config.weight_form = parse_weight_form(*v);

  if (flags.max_weight) config.max_weight = *flags.max_weight;
  else if (auto v = file_value("max_weight"))
    config.max_weight = parse_double_value(*v, "max_weight");
  if (config.max_weight && !(*config.max_weight > 0.0))
    throw parse_error("max_weight must be positive");

  if (flags.threads) config.threads = *flags.threads;
  else if (auto v = file_value("threads"))
    config.threads = static_cast<unsigned>(parse_u64_value(*v, "threads"));

  return config;
}

}  // namespace survpc
