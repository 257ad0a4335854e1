#pragma once

// Imbalance-aware metrics, sensitivity-PPV curves and the held-out
// experiment harnesses.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "raregraph/cohort.hpp"
#include "raregraph/graph_engine.hpp"
#include "raregraph/learning.hpp"

namespace raregraph {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct Metrics {
  double ppv = 0.0;
  double sensitivity = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
};

struct CurvePoint {
  double threshold = 0.0;
  double sensitivity = 0.0;
  double ppv = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
};

// Metrics linearly interpolated at a target sensitivity.
struct GridRow {
  double target_sensitivity = 0.0;
  double threshold = 0.0;
  double ppv = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
};

struct MetricsReport {
  std::vector<CurvePoint> curve;  // thresholds strictly decreasing
  double auc = 0.0;
  std::vector<GridRow> grid;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

inline const std::vector<double> kDefaultSensitivityGrid = {0.20, 0.25, 0.30, 0.35, 0.40, 0.45};

// Predict positive iff score >= threshold. Scores must lie in [0, 1].
ConfusionCounts confusion_at(std::span<const double> scores, std::span<const std::uint8_t> labels, double threshold);
// Keyed form; throws ArgumentError when the key sets differ.
ConfusionCounts confusion_at(const std::map<std::string, double>& scores, const std::map<std::string, bool>& labels,
                             double threshold);

// ppv = tp/(tp+fp), sensitivity = tp/(tp+fn); every 0/0 is 0.
Metrics metrics(const ConfusionCounts& counts);

// One curve point per distinct score; AUC is the trapezoid rule over
// (sensitivity, ppv) starting from (0, ppv of the highest threshold).
// Throws ArgumentError unless both classes are present.
MetricsReport curve_and_auc(std::span<const double> scores, std::span<const std::uint8_t> labels,
                            std::span<const double> sensitivity_grid = kDefaultSensitivityGrid);

std::string metrics_to_json(const MetricsReport& report);
void write_metrics_json(const std::filesystem::path& path, const MetricsReport& report);
// Columns: threshold,sensitivity,ppv,f1,mcc
void write_curve_csv(const std::filesystem::path& path, const MetricsReport& report);

// Features-only control: p(y=1) from physician evidence and the prior
// 1 - (1-eta)^patient_count, with no message passing.
std::vector<double> baseline_score(const Cohort& cohort, const ModelParams& params);

// Physician labels as 0/1; throws ArgumentError if any is missing.
std::vector<std::uint8_t> physician_labels(const Cohort& cohort);

// ---------------------------------------------------------- experiments

struct ExperimentConfig {
  FitOptions fit;
  InferenceConfig inference;
  std::vector<double> sensitivity_grid = kDefaultSensitivityGrid;
};

struct ModelComparison {
  MetricsReport graph;
  MetricsReport baseline;
};

struct HoldoutReport {
  std::size_t train_physicians = 0;
  std::size_t train_patients = 0;
  std::size_t test_physicians = 0;
  std::size_t test_patients = 0;
  std::size_t test_positive_physicians = 0;
  bool all_converged = true;
  ModelComparison result;
};

// Leakage-safe split, fit on the train side, score the test side.
HoldoutReport holdout(const Cohort& cohort, double physician_test_fraction, std::uint64_t seed,
                      const ExperimentConfig& config = {});
// Same for an explicit split.
HoldoutReport evaluate_split(const CohortSplit& split, const ExperimentConfig& config = {});

struct FoldResult {
  std::size_t fold = 0;
  bool excluded = false;
  std::string reason;  // why the fold was excluded
  HoldoutReport report;
};

struct FoldAverages {
  double auc = 0.0;
  std::vector<GridRow> grid;
};

struct CrossvalReport {
  std::size_t folds = 0;
  std::vector<FoldResult> results;
  std::vector<std::uint32_t> fold_of_physician;
  std::size_t included = 0;
  FoldAverages graph;
  FoldAverages baseline;
};

// Physicians are shuffled by seed and dealt into `folds` groups of equal
// size (+-1). Folds whose test side is single-class are excluded from the
// averages with a warning.
std::vector<std::uint32_t> assign_folds(std::size_t num_physicians, std::size_t folds, std::uint64_t seed);
CrossvalReport crossval(const Cohort& cohort, std::size_t folds, std::uint64_t seed,
                        const ExperimentConfig& config = {});

// Columns: fold,model,excluded,test_physicians,test_positives,auc,
// target_sensitivity,threshold,ppv,f1,mcc. The averages use fold "mean".
void write_folds_csv(const std::filesystem::path& path, const CrossvalReport& report);
std::string crossval_to_json(const CrossvalReport& report);

}  // namespace raregraph
