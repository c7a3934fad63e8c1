#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include <json.hpp>

#include "survpc/cox.hpp"
#include "survpc/data.hpp"
#include "survpc/errors.hpp"
#include "survpc/vpc.hpp"

namespace survpc {

// Shortest representation that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double_field(const std::string& field, const std::string& context) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw parse_error(context + ": invalid number '" + field + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r')
    fields.back().pop_back();
  return fields;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open '" + path + "' for reading");
  return in;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("failed to write '" + path + "'");
}

// ---------------------------------------------------------------------------
// Dataset CSV: subject_id,time,event,<covariate columns...>, event in {0,1}.

inline std::string dataset_csv(const Dataset& data) {
  std::string out = "subject_id,time,event";
  for (const auto& name : data.covariate_names) out += "," + name;
  out += "\n";
  for (const auto& r : data.records) {
    out += r.subject_id + "," + format_double(r.time) + "," + (r.event ? "1" : "0");
    for (double v : r.covariates) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

inline Dataset read_dataset_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw parse_error(source + ": empty file");
  auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "subject_id" || header[1] != "time" ||
      header[2] != "event")
    throw parse_error(source + ": header must start with subject_id,time,event");

  Dataset data;
  data.covariate_names.assign(header.begin() + 3, header.end());

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    const std::string context = source + ":" + std::to_string(lineno);
    if (fields.size() != header.size())
      throw parse_error(context + ": expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    StudyRecord r;
    r.subject_id = fields[0];
    r.time = parse_double_field(fields[1], context);
    if (!(r.time >= 0.0)) throw parse_error(context + ": time must be >= 0");
    if (fields[2] == "1") r.event = true;
    else if (fields[2] == "0") r.event = false;
    else throw parse_error(context + ": event must be 0 or 1");
    r.covariates.reserve(header.size() - 3);
    for (std::size_t j = 3; j < fields.size(); ++j)
      r.covariates.push_back(parse_double_field(fields[j], context));
    data.records.push_back(std::move(r));
  }
  return data;
}

inline Dataset read_dataset_csv_file(const std::string& path) {
  auto in = open_input(path);
  return read_dataset_csv(in, path);
}

// ---------------------------------------------------------------------------
// Fitted-model JSON: event Cox model plus censoring survival in one document.
// nlohmann::json emits shortest round-trip doubles, so re-reading restores
// every coefficient and knot bit-exactly.

inline nlohmann::json to_json(const StepSurvival& s) {
  return {{"knots", s.knots()}, {"values", s.values()}};
}

inline StepSurvival step_survival_from_json(const nlohmann::json& j) {
  return StepSurvival(j.at("knots").get<std::vector<double>>(),
                      j.at("values").get<std::vector<double>>());
}

inline nlohmann::json to_json(const CoxModel& m) {
  return {{"covariate_names", m.covariate_names},
          {"beta", m.beta},
          {"baseline_cumhaz", {{"times", m.baseline.times}, {"values", m.baseline.cumhaz}}}};
}

inline CoxModel cox_model_from_json(const nlohmann::json& j) {
  CoxModel m;
  m.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
  m.beta = j.at("beta").get<std::vector<double>>();
  m.baseline.times = j.at("baseline_cumhaz").at("times").get<std::vector<double>>();
  m.baseline.cumhaz = j.at("baseline_cumhaz").at("values").get<std::vector<double>>();
  if (m.beta.size() != m.covariate_names.size())
    throw parse_error("model document: beta and covariate_names differ in length");
  if (m.baseline.times.size() != m.baseline.cumhaz.size())
    throw parse_error("model document: baseline times and values differ in length");
  return m;
}

inline std::string models_json(const FittedModels& models) {
  nlohmann::json j{{"event_model", to_json(models.event_model)},
                   {"censoring_survival", to_json(models.censoring_survival)}};
  return j.dump(2) + "\n";
}

inline FittedModels read_models_json(std::istream& in, const std::string& source) {
  nlohmann::json j;
  try {
    in >> j;
    return FittedModels{cox_model_from_json(j.at("event_model")),
                        step_survival_from_json(j.at("censoring_survival"))};
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(source + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw parse_error(source + ": " + e.what());
  }
}

inline FittedModels read_models_json_file(const std::string& path) {
  auto in = open_input(path);
  return read_models_json(in, path);
}

// ---------------------------------------------------------------------------
// Band CSV: long format, one row per stratum and grid time.

struct BandPanel {
  std::string label;
  std::vector<double> time;
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> observed;
};

inline std::vector<BandPanel> panels_from_result(const VpcResult& result) {
  std::vector<BandPanel> panels;
  for (const auto& s : result.strata) {
    BandPanel p;
    p.label = s.label;
    p.time = result.grid;
    p.mean = s.band.mean;
    p.lower = s.band.lower;
    p.upper = s.band.upper;
    p.observed.reserve(result.grid.size());
    for (double t : result.grid) p.observed.push_back(s.observed.survival.at(t));
    panels.push_back(std::move(p));
  }
  return panels;
}

inline std::string band_csv(const VpcResult& result) {
  std::string out = "stratum,time,mean,lower,upper,observed_km\n";
  for (const auto& p : panels_from_result(result)) {
    for (std::size_t i = 0; i < p.time.size(); ++i) {
      out += p.label + "," + format_double(p.time[i]) + "," + format_double(p.mean[i]) + "," +
             format_double(p.lower[i]) + "," + format_double(p.upper[i]) + "," +
             format_double(p.observed[i]) + "\n";
    }
  }
  return out;
}

inline std::vector<BandPanel> parse_band_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw parse_error(source + ": empty file");
  if (split_csv_line(line) !=
      std::vector<std::string>{"stratum", "time", "mean", "lower", "upper", "observed_km"})
    throw parse_error(source + ": expected header stratum,time,mean,lower,upper,observed_km");

  std::vector<BandPanel> panels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    const std::string context = source + ":" + std::to_string(lineno);
    if (fields.size() != 6) throw parse_error(context + ": expected 6 fields");
    if (panels.empty() || panels.back().label != fields[0]) {
      BandPanel p;
      p.label = fields[0];
      panels.push_back(std::move(p));
    }
    auto& p = panels.back();
    p.time.push_back(parse_double_field(fields[1], context));
    p.mean.push_back(parse_double_field(fields[2], context));
    p.lower.push_back(parse_double_field(fields[3], context));
    p.upper.push_back(parse_double_field(fields[4], context));
    p.observed.push_back(parse_double_field(fields[5], context));
  }
  if (panels.empty()) throw parse_error(source + ": no band rows");
  return panels;
}

}  // namespace survpc
