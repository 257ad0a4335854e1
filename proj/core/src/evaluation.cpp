#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

#include "io_util.hpp"
#include "raregraph/errors.hpp"
#include "raregraph/evaluation.hpp"
#include "raregraph/logmath.hpp"

namespace raregraph {

namespace {

void check_score(double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw ArgumentError("score outside [0, 1]: " + detail::format_double(s));
}

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

CurvePoint point_from(double threshold, const ConfusionCounts& c) {
  const auto m = metrics(c);
  return {threshold, m.sensitivity, m.ppv, m.f1, m.mcc};
}

GridRow interpolate(const std::vector<CurvePoint>& curve, double target) {
  GridRow row;
  row.target_sensitivity = target;
  auto fill = [&](const CurvePoint& p) {
    row.threshold = p.threshold;
    row.ppv = p.ppv;
    row.f1 = p.f1;
    row.mcc = p.mcc;
  };
  const auto it =
      std::find_if(curve.begin(), curve.end(), [&](const CurvePoint& p) { return p.sensitivity >= target; });
  if (it == curve.end()) {
    fill(curve.back());
    return row;
  }
  if (it == curve.begin() || it->sensitivity == target) {
    fill(*it);
    return row;
  }
  const CurvePoint& lo = *(it - 1);
  const CurvePoint& hi = *it;
  const double t = (target - lo.sensitivity) / (hi.sensitivity - lo.sensitivity);
  auto lerp = [t](double a, double b) { return a + t * (b - a); };
  row.threshold = lerp(lo.threshold, hi.threshold);
  row.ppv = lerp(lo.ppv, hi.ppv);
  row.f1 = lerp(lo.f1, hi.f1);
  row.mcc = lerp(lo.mcc, hi.mcc);
  return row;
}

}  // namespace

ConfusionCounts confusion_at(std::span<const double> scores, std::span<const std::uint8_t> labels, double threshold) {
  if (scores.size() != labels.size()) throw ArgumentError("scores and labels differ in length");
  ConfusionCounts c;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    check_score(scores[k]);
    const bool predicted = scores[k] >= threshold;
    if (labels[k]) {
      ++(predicted ? c.tp : c.fn);
    } else {
      ++(predicted ? c.fp : c.tn);
    }
  }
  return c;
}

ConfusionCounts confusion_at(const std::map<std::string, double>& scores, const std::map<std::string, bool>& labels,
                             double threshold) {
  if (scores.size() != labels.size()) throw ArgumentError("scores and labels have different key sets");
  std::vector<double> s;
  std::vector<std::uint8_t> l;
  s.reserve(scores.size());
  l.reserve(scores.size());
  auto li = labels.begin();
  for (const auto& [key, value] : scores) {
    if (li->first != key) throw ArgumentError("key '" + key + "' has a score but no label");
    s.push_back(value);
    l.push_back(li->second ? 1 : 0);
    ++li;
  }
  return confusion_at(s, l, threshold);
}

Metrics metrics(const ConfusionCounts& c) {
  const double tp = static_cast<double>(c.tp);
  const double fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn);
  const double fn = static_cast<double>(c.fn);
  Metrics m;
  m.ppv = ratio(tp, tp + fp);
  m.sensitivity = ratio(tp, tp + fn);
  m.f1 = ratio(2.0 * m.ppv * m.sensitivity, m.ppv + m.sensitivity);
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  m.mcc = den == 0.0 ? 0.0 : (tp * tn - fp * fn) / std::sqrt(den);
  return m;
}

MetricsReport curve_and_auc(std::span<const double> scores, std::span<const std::uint8_t> labels,
                            std::span<const double> sensitivity_grid) {
  if (scores.size() != labels.size()) throw ArgumentError("scores and labels differ in length");
  MetricsReport report;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    check_score(scores[k]);
    ++(labels[k] ? report.positives : report.negatives);
  }
  if (report.positives == 0 || report.negatives == 0) {
    throw ArgumentError("curve needs both positive and negative labels");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  ConfusionCounts c;
  c.fn = report.positives;
  c.tn = report.negatives;
  for (std::size_t k = 0; k < order.size();) {
    const double threshold = scores[order[k]];
    for (; k < order.size() && scores[order[k]] == threshold; ++k) {
      if (labels[order[k]]) {
        ++c.tp;
        --c.fn;
      } else {
        ++c.fp;
        --c.tn;
      }
    }
    report.curve.push_back(point_from(threshold, c));
  }

  double area = 0.0;
  double prev_sens = 0.0;
  double prev_ppv = report.curve.front().ppv;
  for (const auto& p : report.curve) {
    area += 0.5 * (p.ppv + prev_ppv) * (p.sensitivity - prev_sens);
    prev_sens = p.sensitivity;
    prev_ppv = p.ppv;
  }
  report.auc = area;

  for (double target : sensitivity_grid) report.grid.push_back(interpolate(report.curve, target));
  return report;
}

namespace {

nlohmann::json grid_json(const std::vector<GridRow>& grid) {
  auto out = nlohmann::json::array();
  for (const auto& g : grid) {
    out.push_back({{"target_sensitivity", g.target_sensitivity},
                   {"threshold", g.threshold},
                   {"ppv", g.ppv},
                   {"f1", g.f1},
                   {"mcc", g.mcc}});
  }
  return out;
}

nlohmann::json report_json(const MetricsReport& report) {
  nlohmann::json j;
  j["auc"] = report.auc;
  j["positives"] = report.positives;
  j["negatives"] = report.negatives;
  j["grid"] = grid_json(report.grid);
  auto curve = nlohmann::json::array();
  for (const auto& p : report.curve) {
    curve.push_back({{"threshold", p.threshold},
                     {"sensitivity", p.sensitivity},
                     {"ppv", p.ppv},
                     {"f1", p.f1},
                     {"mcc", p.mcc}});
  }
  j["curve"] = std::move(curve);
  return j;
}

}  // namespace

std::string metrics_to_json(const MetricsReport& report) { return report_json(report).dump(2) + "\n"; }

void write_metrics_json(const std::filesystem::path& path, const MetricsReport& report) {
  detail::write_file(path, metrics_to_json(report));
}

void write_curve_csv(const std::filesystem::path& path, const MetricsReport& report) {
  std::string buf = "threshold,sensitivity,ppv,f1,mcc\n";
  for (const auto& p : report.curve) {
    for (double v : {p.threshold, p.sensitivity, p.ppv, p.f1}) {
      detail::append_double(buf, v);
      buf += ',';
    }
    detail::append_double(buf, p.mcc);
    buf += '\n';
  }
  detail::write_file(path, buf);
}

std::vector<double> baseline_score(const Cohort& cohort, const ModelParams& params) {
  const Cohort* source = &cohort;
  Cohort derived;
  if (!cohort.has_claims_features) {
    derived = derive_physician_claims_features(cohort, params.schema.standardization);
    source = &derived;
  }
  check_schema(params, source->schema);
  const PhysicianLikelihood ll(params.physician);
  const double log_not_eta = std::log1p(-params.patient.prior_eta);
  std::vector<double> out;
  out.reserve(source->physicians.size());
  for (const auto& d : source->physicians) {
    const auto l = ll(d);
    const double log_prior0 = static_cast<double>(d.patient_count) * log_not_eta;
    const double log_prior1 = logmath::log1mexp(log_prior0);
    const double a1 = l[1] + log_prior1;
    const double a0 = l[0] + log_prior0;
    out.push_back(a1 == logmath::kNegInf ? 0.0 : logmath::logistic(a1 - a0));
  }
  return out;
}

std::vector<std::uint8_t> physician_labels(const Cohort& cohort) {
  std::vector<std::uint8_t> out;
  out.reserve(cohort.physicians.size());
  for (const auto& d : cohort.physicians) {
    if (!d.label) throw ArgumentError("physician " + d.id + " has no label");
    out.push_back(*d.label ? 1 : 0);
  }
  return out;
}

}  // namespace raregraph
