#include "raregraph_cli/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "manifest.hpp"
#include "raregraph/errors.hpp"
#include "raregraph/evaluation.hpp"
#include "raregraph/graph_engine.hpp"
#include "raregraph/learning.hpp"
#include "raregraph/synthgen.hpp"

namespace raregraph::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Settings bound to command-line flags and config-file keys.
struct RunConfig {
  std::string command;
  std::string in;
  std::string out = ".";
  std::uint64_t seed = 0;
  double prior_eta = kDefaultPriorEta;
  double smoothing = kDefaultSmoothing;
  InferenceConfig inference;
  std::size_t folds = 10;
  std::vector<double> grid = kDefaultSensitivityGrid;

  // generate
  std::size_t physicians = 68898;
  std::size_t patients = 247833;
  std::optional<std::size_t> edges;
  std::optional<double> positive_physician_rate;
  double signal = 1.0;
  double physician_signal = 1.0;
  std::string degree_model = "class_conditional";
  std::size_t codes = kDefaultNumCodes;
  std::size_t specialties = kDefaultNumSpecialties;

  // fit
  std::optional<double> test_fraction;

  // score
  std::string params;
  bool clamp_labels = false;

  // eval
  std::string scores;
  std::string labels;
  std::string entity = "physician";
};

// A run-time condition that the flags alone could not rule out.
struct UsageError : Error {
  using Error::Error;
};

json inference_json(const InferenceConfig& c) {
  return {{"damping", c.damping}, {"tol", c.tol}, {"max_iters", c.max_iters}, {"threads", c.threads}};
}

std::vector<FileEntry> cohort_files(const fs::path& dir, const std::string& label) {
  std::vector<FileEntry> out;
  for (const char* name : {"patients.csv", "physicians.csv", "edges.csv", "schema.json"}) {
    if (fs::exists(dir / name)) out.push_back({label + "/" + name, dir / name});
  }
  return out;
}

std::vector<FileEntry> cohort_outputs(const fs::path& dir, const std::string& prefix = "") {
  std::vector<FileEntry> out;
  for (const char* name : {"patients.csv", "physicians.csv", "edges.csv", "schema.json"}) {
    out.push_back({prefix + name, dir / name});
  }
  return out;
}

// Refuses to overwrite any input.
void guard_inputs(const std::vector<FileEntry>& inputs, const std::vector<fs::path>& outputs) {
  for (const auto& o : outputs) {
    if (!fs::exists(o)) continue;
    for (const auto& i : inputs) {
      if (fs::equivalent(o, i.path)) throw UsageError("output " + o.filename().string() + " would overwrite an input");
    }
  }
}

std::vector<fs::path> paths_of(const std::vector<FileEntry>& files) {
  std::vector<fs::path> out;
  for (const auto& f : files) out.push_back(f.path);
  return out;
}

fs::path require_dir(const std::string& dir, const char* flag) {
  if (dir.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::is_directory(dir)) throw Error(std::string(flag) + ": not a directory: " + dir);
  return dir;
}

fs::path require_file(const std::string& file, const char* flag) {
  if (file.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::is_regular_file(file)) throw Error(std::string(flag) + ": no such file: " + file);
  return file;
}

Cohort load_with_claims(const fs::path& dir) {
  Cohort cohort = load_cohort(dir);
  if (!cohort.has_claims_features) cohort = derive_physician_claims_features(std::move(cohort));
  return cohort;
}

FitOptions fit_options(const RunConfig& rc) {
  FitOptions opt;
  opt.smoothing = rc.smoothing;
  opt.prior_eta = rc.prior_eta;
  return opt;
}

// ------------------------------------------------------------- commands

void cmd_generate(const RunConfig& rc, Manifest& m) {
  GenConfig cfg;
  cfg.num_physicians = rc.physicians;
  cfg.num_patients = rc.patients;
  cfg.num_edges = rc.edges;
  cfg.prior_eta = rc.prior_eta;
  cfg.positive_physician_rate = rc.positive_physician_rate;
  cfg.signal = rc.signal;
  cfg.physician_signal = rc.physician_signal;
  cfg.degree_model = rc.degree_model == "patient_uniform" ? DegreeModel::PatientUniform : DegreeModel::ClassConditional;
  cfg.params = reference_parameters(rc.codes, rc.specialties);
  cfg.seed = rc.seed;
  try {
    cfg.validate();
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
  m.settings.update({{"physicians", rc.physicians},
                     {"patients", rc.patients},
                     {"edges", rc.edges ? json(*rc.edges) : json(nullptr)},
                     {"positive_physician_rate",
                      cfg.positive_physician_rate.value_or(default_positive_physician_rate(cfg.prior_eta))},
                     {"signal", rc.signal},
                     {"physician_signal", rc.physician_signal},
                     {"degree_model", rc.degree_model},
                     {"codes", rc.codes},
                     {"specialties", rc.specialties}});

  const fs::path out = rc.out;
  m.outputs = cohort_outputs(out);
  m.outputs.push_back({"gentruth.json", out / "gentruth.json"});
  guard_inputs(m.inputs, paths_of(m.outputs));

  const Cohort cohort = sample_cohort(cfg);
  save_cohort(cohort, out);
  std::ofstream(out / "gentruth.json", std::ios::binary | std::ios::trunc) << gentruth_json(cfg, cohort);
  std::printf("generated %zu physicians, %zu patients, %zu edges -> %s\n", cohort.physicians.size(),
              cohort.patients.size(), cohort.edges.size(), rc.out.c_str());
}

void cmd_fit(const RunConfig& rc, Manifest& m) {
  const fs::path in = require_dir(rc.in, "--in");
  const fs::path out = rc.out;
  m.inputs = cohort_files(in, "cohort");
  m.settings.update({{"test_fraction", rc.test_fraction ? json(*rc.test_fraction) : json(nullptr)}});
  m.outputs = {{"params.json", out / "params.json"}};
  if (rc.test_fraction) {
    const auto test = cohort_outputs(out / "test", "test/");
    m.outputs.insert(m.outputs.end(), test.begin(), test.end());
  }
  guard_inputs(m.inputs, paths_of(m.outputs));

  Cohort cohort = load_with_claims(in);
  std::optional<CohortSplit> split;
  if (rc.test_fraction) split = split_train_test(cohort, *rc.test_fraction, rc.seed);
  const Cohort& train = split ? split->train : cohort;
  const ModelParams params = fit(train, fit_options(rc));
  save_params(params, out / "params.json");
  if (split) save_cohort(split->test, out / "test");
  std::printf("fitted on %zu physicians, %zu patients -> %s\n", train.physicians.size(), train.patients.size(),
              (out / "params.json").string().c_str());
  if (split) {
    std::printf("held out %zu physicians, %zu patients -> %s\n", split->test.physicians.size(),
                split->test.patients.size(), (out / "test").string().c_str());
  }
}

void cmd_score(const RunConfig& rc, Manifest& m) {
  const fs::path in = require_dir(rc.in, "--in");
  const fs::path params_path = require_file(rc.params, "--params");
  const fs::path out = rc.out;
  m.inputs = cohort_files(in, "cohort");
  m.inputs.push_back({"params/" + params_path.filename().string(), params_path});
  m.settings.update({{"clamp_labels", rc.clamp_labels}});
  m.outputs = {{"scores.csv", out / "scores.csv"}, {"components.csv", out / "components.csv"}};
  guard_inputs(m.inputs, paths_of(m.outputs));

  const Cohort cohort = load_cohort(in);
  const ModelParams params = load_params(params_path);
  BuildOptions options;
  options.clamp_observed_labels = rc.clamp_labels;
  const FactorGraph graph = build(cohort, params, options);
  const InferenceResult result = run_inference(graph, rc.inference);
  write_scores_csv(out / "scores.csv", score_rows(graph, result));
  write_components_csv(out / "components.csv", graph, result);

  const auto not_converged = static_cast<std::size_t>(std::count_if(
      result.diagnostics.begin(), result.diagnostics.end(), [](const auto& d) { return !d.converged; }));
  if (not_converged > 0) {
    spdlog::warn("{} of {} components did not converge within {} iterations", not_converged,
                 result.diagnostics.size(), rc.inference.max_iters);
  }
  std::printf("scored %zu physicians, %zu patients in %zu components -> %s\n", graph.num_physicians(),
              graph.num_patients(), result.diagnostics.size(), (out / "scores.csv").string().c_str());
}

// Labels from a cohort directory or from an entity_id,label CSV.
std::unordered_map<std::string, bool> read_labels(const fs::path& path, EntityKind kind) {
  std::unordered_map<std::string, bool> labels;
  if (fs::is_directory(path)) {
    const Cohort cohort = load_cohort(path);
    auto add = [&](const auto& records) {
      for (const auto& r : records) {
        if (r.label) labels.emplace(r.id, *r.label);
      }
    };
    if (kind == EntityKind::Physician) {
      add(cohort.physicians);
    } else {
      add(cohort.patients);
    }
    return labels;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw ParseError(path.string(), line_no, "expected two columns entity_id,label");
    }
    const std::string id = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    if (line_no == 1 && id == "entity_id") continue;
    if (value != "0" && value != "1") throw ParseError(path.string(), line_no, "label must be 0 or 1");
    if (!labels.emplace(id, value == "1").second) throw ParseError(path.string(), line_no, "duplicate id " + id);
  }
  return labels;
}

void cmd_eval(const RunConfig& rc, Manifest& m) {
  const fs::path scores_path = require_file(rc.scores, "--scores");
  if (rc.labels.empty()) throw UsageError("--labels is required");
  const fs::path labels_path = rc.labels;
  if (!fs::exists(labels_path)) throw Error("--labels: no such file or directory: " + rc.labels);
  const fs::path out = rc.out;
  const EntityKind kind = rc.entity == "patient" ? EntityKind::Patient : EntityKind::Physician;
  m.inputs = {{"scores/" + scores_path.filename().string(), scores_path}};
  if (fs::is_directory(labels_path)) {
    const auto files = cohort_files(labels_path, "labels");
    m.inputs.insert(m.inputs.end(), files.begin(), files.end());
  } else {
    m.inputs.push_back({"labels/" + labels_path.filename().string(), labels_path});
  }
  m.settings.update({{"entity", rc.entity}});
  m.outputs = {{"metrics.json", out / "metrics.json"}, {"curve.csv", out / "curve.csv"}};
  guard_inputs(m.inputs, paths_of(m.outputs));

  const auto rows = read_scores_csv(scores_path);
  const auto labels = read_labels(labels_path, kind);
  std::vector<double> scores;
  std::vector<std::uint8_t> truth;
  for (const auto& r : rows) {
    if (r.kind != kind) continue;
    const auto it = labels.find(r.id);
    if (it == labels.end()) throw Error(rc.labels + ": no label for " + r.id);
    scores.push_back(r.posterior_positive);
    truth.push_back(it->second ? 1 : 0);
  }
  if (scores.empty()) throw Error(rc.scores + ": no " + rc.entity + " rows");
  const MetricsReport report = curve_and_auc(scores, truth, rc.grid);
  write_metrics_json(out / "metrics.json", report);
  write_curve_csv(out / "curve.csv", report);
  std::printf("%zu %ss (%zu positive), AUC %.6f -> %s\n", scores.size(), rc.entity.c_str(), report.positives,
              report.auc, (out / "metrics.json").string().c_str());
}

void cmd_crossval(const RunConfig& rc, Manifest& m) {
  const fs::path in = require_dir(rc.in, "--in");
  const fs::path out = rc.out;
  m.inputs = cohort_files(in, "cohort");
  m.outputs = {{"folds.csv", out / "folds.csv"}, {"crossval.json", out / "crossval.json"}};
  guard_inputs(m.inputs, paths_of(m.outputs));

  const Cohort cohort = load_with_claims(in);
  if (rc.folds > cohort.physicians.size()) throw UsageError("--folds exceeds the number of physicians");
  ExperimentConfig cfg;
  cfg.fit = fit_options(rc);
  cfg.inference = rc.inference;
  cfg.sensitivity_grid = rc.grid;
  const CrossvalReport report = crossval(cohort, rc.folds, rc.seed, cfg);
  write_folds_csv(out / "folds.csv", report);
  std::ofstream(out / "crossval.json", std::ios::binary | std::ios::trunc) << crossval_to_json(report);
  std::printf("%zu of %zu folds used; mean AUC graph %.6f baseline %.6f -> %s\n", report.included, report.folds,
              report.graph.auc, report.baseline.auc, (out / "folds.csv").string().c_str());
}

// ---------------------------------------------------------------- parser

struct Unit01 : CLI::Validator {
  Unit01(bool open_low, bool open_high) {
    name_ = "UNIT";
    func_ = [=](const std::string& s) -> std::string {
      double v = 0.0;
      if (!CLI::detail::lexical_cast(s, v)) return "not a number: " + s;
      const bool ok = (open_low ? v > 0.0 : v >= 0.0) && (open_high ? v < 1.0 : v <= 1.0);
      return ok ? std::string() : "value " + s + " out of range";
    };
  }
};

const CLI::Validator kPositive = CLI::Validator(
    [](const std::string& s) -> std::string {
      double v = 0.0;
      if (!CLI::detail::lexical_cast(s, v) || !(v > 0.0)) return "must be positive: " + s;
      return {};
    },
    "POSITIVE");

void build_parser(CLI::App& app, RunConfig& rc) {
  app.set_config("--config", "", "Key-value config file; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();

  app.add_option("--seed", rc.seed, "Random seed");
  app.add_option("--in", rc.in, "Input cohort directory");
  app.add_option("--out", rc.out, "Output directory");
  app.add_option("--prior-eta", rc.prior_eta, "Patient prior p(x = 1)")->check(Unit01(true, true));
  app.add_option("--smoothing", rc.smoothing, "Additive smoothing for categorical/Bernoulli fits")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--damping", rc.inference.damping, "Weight on the previous message in loopy updates")
      ->check(Unit01(false, true));
  app.add_option("--tol", rc.inference.tol, "Convergence tolerance on message log-odds")->check(kPositive);
  app.add_option("--max-iters", rc.inference.max_iters, "Iteration cap for cyclic components")
      ->check(CLI::PositiveNumber);
  app.add_option("--threads", rc.inference.threads, "Inference threads (0 = runtime default)");
  app.add_option("--folds", rc.folds, "Cross-validation folds")->check(CLI::Range(std::size_t{2}, std::size_t{1000}));
  app.add_option("--sensitivity-grid", rc.grid, "Comma-separated target sensitivities")
      ->delimiter(',')
      ->check(Unit01(true, false));

  auto* gen = app.add_subcommand("generate", "Sample a synthetic cohort");
  gen->add_option("--physicians", rc.physicians, "Number of physicians")->check(CLI::PositiveNumber);
  gen->add_option("--patients", rc.patients, "Number of patients")->check(CLI::PositiveNumber);
  gen->add_option("--edges", rc.edges, "Exact number of physician-patient links");
  gen->add_option("--positive-physician-rate", rc.positive_physician_rate, "Share of positive physicians")
      ->check(Unit01(false, false));
  gen->add_option("--signal", rc.signal, "Fraction of patient-feature class separation")->check(Unit01(false, false));
  gen->add_option("--physician-signal", rc.physician_signal, "Fraction of physician-feature class separation")
      ->check(Unit01(false, false));
  gen->add_option("--degree-model", rc.degree_model, "Link model")
      ->check(CLI::IsMember({"class_conditional", "patient_uniform"}));
  gen->add_option("--codes", rc.codes, "Clinical codes per patient")->check(CLI::PositiveNumber);
  gen->add_option("--specialties", rc.specialties, "Physician specialties")->check(CLI::PositiveNumber);

  auto* fit_cmd = app.add_subcommand("fit", "Fit model parameters on a labeled cohort");
  fit_cmd->add_option("--test-fraction", rc.test_fraction, "Hold out this share of physicians before fitting")
      ->check(Unit01(true, true));

  auto* score = app.add_subcommand("score", "Posterior physician and patient scores");
  score->add_option("--params", rc.params, "params.json from fit");
  score->add_flag("--clamp-labels", rc.clamp_labels, "Use observed labels as evidence");

  auto* eval = app.add_subcommand("eval", "Metrics and sensitivity-PPV curve for a scores file");
  eval->add_option("--scores", rc.scores, "scores.csv from score");
  eval->add_option("--labels", rc.labels, "Cohort directory or entity_id,label CSV");
  eval->add_option("--entity", rc.entity, "Entity to evaluate")->check(CLI::IsMember({"physician", "patient"}));

  app.add_subcommand("crossval", "Physician-level k-fold evaluation against the features-only baseline");

}

}  // namespace

int run(std::vector<std::string> args) {
  CLI::App app{"Physician and patient label inference on linked claims cohorts", "raregraph"};
  RunConfig rc;
  build_parser(app, rc);
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::Success& e) {
    app.exit(e);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  rc.command = app.get_subcommands().front()->get_name();

  Manifest manifest;
  manifest.command = rc.command;
  manifest.settings = {{"seed", rc.seed},
                       {"prior_eta", rc.prior_eta},
                       {"smoothing", rc.smoothing},
                       {"inference", inference_json(rc.inference)},
                       {"folds", rc.folds},
                       {"sensitivity_grid", rc.grid}};
  const auto* config_opt = app.get_config_ptr();
  const std::string config_file = config_opt->count() > 0 ? config_opt->as<std::string>() : std::string();

  try {
    try {
      rc.inference.validate();
    } catch (const ArgumentError& e) {
      throw UsageError(e.what());
    }
    fs::create_directories(rc.out);
    if (rc.command == "generate") cmd_generate(rc, manifest);
    if (rc.command == "fit") cmd_fit(rc, manifest);
    if (rc.command == "score") cmd_score(rc, manifest);
    if (rc.command == "eval") cmd_eval(rc, manifest);
    if (rc.command == "crossval") cmd_crossval(rc, manifest);
    if (!config_file.empty()) {
      manifest.inputs.insert(manifest.inputs.begin(),
                             {"config/" + fs::path(config_file).filename().string(), config_file});
    }
    write_manifest(rc.out, manifest);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "raregraph %s: %s\n", rc.command.c_str(), e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "raregraph %s: %s\n", rc.command.c_str(), e.what());
    return kExitDataError;
  }
  return kExitOk;
}

}  // namespace raregraph::cli
