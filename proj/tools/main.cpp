// survpc: Kaplan-Meier visual predictive checks for time-to-event models,
// with censoring-weighted corrections for models that cannot simulate past
// each subject's observed follow-up.

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "survpc/config.hpp"
#include "survpc/io.hpp"
#include "survpc/kaplan_meier.hpp"
#include "survpc/studygen.hpp"
#include "survpc/svg.hpp"
#include "survpc/vpc.hpp"

namespace {

std::vector<std::string> split_names(const std::string& csv) {
  std::vector<std::string> names;
  std::string::size_type start = 0;
  while (start <= csv.size()) {
    const auto comma = csv.find(',', start);
    if (comma == std::string::npos) {
      names.push_back(csv.substr(start));
      break;
    }
    names.push_back(csv.substr(start, comma - start));
    start = comma + 1;
  }
  return names;
}

struct SimulateStudyCmd {
  std::string spec_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;

  void run() const {
    survpc::StudySpec spec;
    if (spec_path.empty()) {
      spec = survpc::default_study_spec();
    } else {
      auto in = survpc::open_input(spec_path);
      spec = survpc::parse_study_spec(in, spec_path);
    }
    if (seed) spec.seed = *seed;
    const auto data = survpc::generate_study(spec);
    survpc::write_text_file(out_path, survpc::dataset_csv(data));
  }
};

struct FitCmd {
  std::string data_path;
  std::string covariates;
  std::string out_path;

  void run() const {
    survpc::Dataset data = survpc::read_dataset_csv_file(data_path);
    if (!covariates.empty()) {
      try {
        data = data.select_covariates(split_names(covariates));
      } catch (const std::invalid_argument& e) {
        throw survpc::parse_error(e.what());
      }
    }
    survpc::FittedModels models{survpc::cox_fit(data),
                                survpc::censoring_fit(data.records)};
    survpc::write_text_file(out_path, survpc::models_json(models));
  }
};

struct VpcCmd {
  std::string data_path;
  std::string model_path;
  std::string config_path;
  std::string out_path;
  std::string svg_path;
  survpc::RunOverrides overrides;

  void run() const {
    const survpc::Dataset data = survpc::read_dataset_csv_file(data_path);

    std::map<std::string, std::string> file_config;
    if (!config_path.empty()) {
      auto in = survpc::open_input(config_path);
      file_config = survpc::parse_key_values(in, config_path);
    }
    const survpc::VpcRunConfig config = survpc::resolve_run_config(overrides, file_config);
    if (!config.stratify_by.empty()) {
      try {
        data.covariate_index(config.stratify_by);
      } catch (const std::invalid_argument& e) {
        throw survpc::parse_error(e.what());
      }
    }

    survpc::VpcResult result;
    if (!model_path.empty()) {
      result = survpc::run_vpc(data, config, survpc::read_models_json_file(model_path));
    } else {
      result = survpc::run_vpc(data, config);
    }
    survpc::write_text_file(out_path, survpc::band_csv(result));
    if (!svg_path.empty())
      survpc::write_text_file(svg_path, survpc::render_band_svg(survpc::panels_from_result(result)));
  }
};

struct PlotCmd {
  std::string band_path;
  std::string out_path;

  void run() const {
    auto in = survpc::open_input(band_path);
    const auto panels = survpc::parse_band_csv(in, band_path);
    survpc::write_text_file(out_path, survpc::render_band_svg(panels));
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"visual predictive checks for time-to-event models"};
  app.require_subcommand(1);

  SimulateStudyCmd sim;
  auto* sim_cmd = app.add_subcommand("simulate-study",
                                     "generate a synthetic two-group, two-arm study dataset");
  sim_cmd->add_option("--spec", sim.spec_path, "study spec file (key=value); built-in defaults when omitted");
  sim_cmd->add_option("--out", sim.out_path, "output dataset CSV")->required();
  sim_cmd->add_option("--seed", sim.seed, "override the spec seed");
  sim_cmd->callback([&] { sim.run(); });

  FitCmd fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit the Cox event model and the censoring survival");
  fit_cmd->add_option("--data", fit.data_path, "dataset CSV")->required();
  fit_cmd->add_option("--covariates", fit.covariates,
                      "comma-separated covariate columns (default: all)");
  fit_cmd->add_option("--out", fit.out_path, "output model JSON")->required();
  fit_cmd->callback([&] { fit.run(); });

  VpcCmd vpc;
  auto* vpc_cmd = app.add_subcommand("vpc", "simulate replicates and write the band CSV");
  vpc_cmd->add_option("--data", vpc.data_path, "dataset CSV")->required();
  vpc_cmd->add_option("--model", vpc.model_path, "model JSON from 'fit' (default: fit in-process)");
  vpc_cmd->add_option("--config", vpc.config_path, "key=value config file; flags take precedence");
  vpc_cmd->add_option("--algorithm", vpc.overrides.algorithm,
                      "standard|standard-censored|ipoc|marginal");
  vpc_cmd->add_option("--replicates", vpc.overrides.replicates, "number of simulated studies");
  vpc_cmd->add_option("--seed", vpc.overrides.seed, "master seed (env VPC_IPOC_SEED as fallback)");
  vpc_cmd->add_option("--grid", vpc.overrides.grid_size, "number of evaluation grid points");
  vpc_cmd->add_option("--quantiles", vpc.overrides.quantiles, "band quantiles, e.g. 0.05,0.95");
  vpc_cmd->add_option("--stratify-by", vpc.overrides.stratify_by, "covariate column for strata");
  vpc_cmd->add_option("--weight-form", vpc.overrides.weight_form, "full|simplified");
  vpc_cmd->add_option("--max-weight", vpc.overrides.max_weight, "optional weight truncation cap");
  vpc_cmd->add_option("--threads", vpc.overrides.threads, "worker threads (0 = hardware)");
  vpc_cmd->add_option("--out", vpc.out_path, "output band CSV")->required();
  vpc_cmd->add_option("--svg", vpc.svg_path, "also render the band plot to this SVG path");
  vpc_cmd->callback([&] { vpc.run(); });

  PlotCmd plot;
  auto* plot_cmd = app.add_subcommand("plot", "render a band CSV as an SVG plot");
  plot_cmd->add_option("--band", plot.band_path, "band CSV from 'vpc'")->required();
  plot_cmd->add_option("--out", plot.out_path, "output SVG path")->required();
  plot_cmd->callback([&] { plot.run(); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const survpc::parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
