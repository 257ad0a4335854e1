#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "io_util.hpp"
#include "raregraph/distributions.hpp"
#include "raregraph/errors.hpp"
#include "raregraph/evaluation.hpp"

namespace raregraph {

namespace {

std::size_t count_positive(std::span<const std::uint8_t> labels) {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

FoldAverages average(const std::vector<const MetricsReport*>& reports, std::span<const double> grid) {
  FoldAverages avg;
  avg.grid.resize(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) avg.grid[g].target_sensitivity = grid[g];
  if (reports.empty()) return avg;
  const double w = 1.0 / static_cast<double>(reports.size());
  for (const auto* r : reports) {
    avg.auc += w * r->auc;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      avg.grid[g].threshold += w * r->grid[g].threshold;
      avg.grid[g].ppv += w * r->grid[g].ppv;
      avg.grid[g].f1 += w * r->grid[g].f1;
      avg.grid[g].mcc += w * r->grid[g].mcc;
    }
  }
  return avg;
}

}  // namespace

HoldoutReport evaluate_split(const CohortSplit& split, const ExperimentConfig& config) {
  HoldoutReport report;
  report.train_physicians = split.train.physicians.size();
  report.train_patients = split.train.patients.size();
  report.test_physicians = split.test.physicians.size();
  report.test_patients = split.test.patients.size();
  const auto labels = physician_labels(split.test);
  report.test_positive_physicians = count_positive(labels);

  const ModelParams params = fit(split.train, config.fit);
  const FactorGraph graph = build(split.test, params);
  const InferenceResult result = run_inference(graph, config.inference);
  report.all_converged = result.all_converged();
  report.result.graph = curve_and_auc(result.physician_posterior, labels, config.sensitivity_grid);
  report.result.baseline = curve_and_auc(baseline_score(split.test, params), labels, config.sensitivity_grid);
  return report;
}

HoldoutReport holdout(const Cohort& cohort, double physician_test_fraction, std::uint64_t seed,
                      const ExperimentConfig& config) {
  return evaluate_split(split_train_test(cohort, physician_test_fraction, seed), config);
}

std::vector<std::uint32_t> assign_folds(std::size_t num_physicians, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ArgumentError("crossval needs at least 2 folds");
  if (folds > num_physicians) throw ArgumentError("more folds than physicians");
  std::vector<std::uint32_t> perm(num_physicians);
  std::iota(perm.begin(), perm.end(), 0U);
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::uint32_t> fold_of(num_physicians);
  for (std::size_t k = 0; k < perm.size(); ++k) fold_of[perm[k]] = static_cast<std::uint32_t>(k % folds);
  return fold_of;
}

CrossvalReport crossval(const Cohort& cohort, std::size_t folds, std::uint64_t seed, const ExperimentConfig& config) {
  if (!labels_complete(cohort)) throw ArgumentError("crossval requires complete labels");
  config.inference.validate();
  CrossvalReport report;
  report.folds = folds;
  report.fold_of_physician = assign_folds(cohort.physicians.size(), folds, seed);

  std::vector<const MetricsReport*> graph_reports;
  std::vector<const MetricsReport*> baseline_reports;
  report.results.resize(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    auto& fr = report.results[f];
    fr.fold = f;
    std::vector<std::uint8_t> mask(cohort.physicians.size());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = report.fold_of_physician[i] == f ? 1 : 0;
    const CohortSplit split = split_by_test_physicians(cohort, mask);
    const auto labels = physician_labels(split.test);
    fr.report.train_physicians = split.train.physicians.size();
    fr.report.train_patients = split.train.patients.size();
    fr.report.test_physicians = split.test.physicians.size();
    fr.report.test_patients = split.test.patients.size();
    fr.report.test_positive_physicians = count_positive(labels);
    if (fr.report.test_positive_physicians == 0 || fr.report.test_positive_physicians == labels.size()) {
      fr.excluded = true;
      fr.reason = "test physicians are single-class";
      spdlog::warn("fold {}: {}; excluded from averages", f, fr.reason);
      continue;
    }
    try {
      fr.report = evaluate_split(split, config);
    } catch (const FitError& e) {
      fr.excluded = true;
      fr.reason = e.what();
      spdlog::warn("fold {}: {}; excluded from averages", f, fr.reason);
      continue;
    }
    graph_reports.push_back(&fr.report.result.graph);
    baseline_reports.push_back(&fr.report.result.baseline);
  }
  report.included = graph_reports.size();
  if (report.included == 0) spdlog::warn("crossval: every fold was excluded");
  report.graph = average(graph_reports, config.sensitivity_grid);
  report.baseline = average(baseline_reports, config.sensitivity_grid);
  return report;
}

void write_folds_csv(const std::filesystem::path& path, const CrossvalReport& report) {
  std::string buf = "fold,model,excluded,test_physicians,test_positives,auc,target_sensitivity,threshold,ppv,f1,mcc\n";
  auto rows = [&buf](const std::string& fold, const char* model, bool excluded, std::size_t n, std::size_t pos,
                     double auc, const std::vector<GridRow>& grid) {
    for (const auto& g : grid) {
      buf += fold;
      buf += ',';
      buf += model;
      buf += excluded ? ",1," : ",0,";
      detail::append_int(buf, n);
      buf += ',';
      detail::append_int(buf, pos);
      buf += ',';
      detail::append_double(buf, auc);
      for (double v : {g.target_sensitivity, g.threshold, g.ppv, g.f1, g.mcc}) {
        buf += ',';
        detail::append_double(buf, v);
      }
      buf += '\n';
    }
  };
  for (const auto& fr : report.results) {
    const auto& r = fr.report;
    if (fr.excluded) {
      std::vector<GridRow> empty_grid(report.graph.grid.size());
      for (std::size_t g = 0; g < empty_grid.size(); ++g) {
        empty_grid[g].target_sensitivity = report.graph.grid[g].target_sensitivity;
      }
      rows(std::to_string(fr.fold), "graph", true, r.test_physicians, r.test_positive_physicians, 0.0, empty_grid);
      rows(std::to_string(fr.fold), "baseline", true, r.test_physicians, r.test_positive_physicians, 0.0, empty_grid);
      continue;
    }
    rows(std::to_string(fr.fold), "graph", false, r.test_physicians, r.test_positive_physicians, r.result.graph.auc,
         r.result.graph.grid);
    rows(std::to_string(fr.fold), "baseline", false, r.test_physicians, r.test_positive_physicians,
         r.result.baseline.auc, r.result.baseline.grid);
  }
  rows("mean", "graph", false, 0, 0, report.graph.auc, report.graph.grid);
  rows("mean", "baseline", false, 0, 0, report.baseline.auc, report.baseline.grid);
  detail::write_file(path, buf);
}

std::string crossval_to_json(const CrossvalReport& report) {
  using nlohmann::json;
  auto grid = [](const std::vector<GridRow>& rows) {
    auto out = json::array();
    for (const auto& g : rows) {
      out.push_back({{"target_sensitivity", g.target_sensitivity},
                     {"threshold", g.threshold},
                     {"ppv", g.ppv},
                     {"f1", g.f1},
                     {"mcc", g.mcc}});
    }
    return out;
  };
  json j;
  j["folds"] = report.folds;
  j["included"] = report.included;
  auto folds = json::array();
  for (const auto& fr : report.results) {
    json f = {{"fold", fr.fold},
              {"excluded", fr.excluded},
              {"test_physicians", fr.report.test_physicians},
              {"test_positives", fr.report.test_positive_physicians},
              {"train_physicians", fr.report.train_physicians},
              {"train_patients", fr.report.train_patients},
              {"test_patients", fr.report.test_patients}};
    if (fr.excluded) {
      f["reason"] = fr.reason;
    } else {
      f["all_converged"] = fr.report.all_converged;
      f["graph"] = {{"auc", fr.report.result.graph.auc}, {"grid", grid(fr.report.result.graph.grid)}};
      f["baseline"] = {{"auc", fr.report.result.baseline.auc}, {"grid", grid(fr.report.result.baseline.grid)}};
    }
    folds.push_back(std::move(f));
  }
  j["per_fold"] = std::move(folds);
  j["mean"] = {{"graph", {{"auc", report.graph.auc}, {"grid", grid(report.graph.grid)}}},
               {"baseline", {{"auc", report.baseline.auc}, {"grid", grid(report.baseline.grid)}}}};
  return j.dump(2) + "\n";
}

}  // namespace raregraph
