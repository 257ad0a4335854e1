#include <algorithm>
#include <cmath>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "io_util.hpp"
#include "raregraph/errors.hpp"
#include "raregraph/graph_engine.hpp"
#include "raregraph/logmath.hpp"

namespace raregraph {

using logmath::kPosInf;

namespace {

// Components with at least this many edges are swept with an inner parallel
// loop; smaller ones are distributed whole across threads.
constexpr std::size_t kLargeComponentEdges = 4096;

enum class Targets { Only, AllBut, All };

inline bool wanted(Targets t, std::uint32_t edge, std::uint32_t special) {
  switch (t) {
    case Targets::Only:
      return edge == special;
    case Targets::AllBut:
      return edge != special;
    case Targets::All:
      return true;
  }
  return true;
}

inline double damp(double old_value, double fresh, double d) {
  if (d == 0.0 || !std::isfinite(old_value) || !std::isfinite(fresh)) return fresh;
  return d * old_value + (1.0 - d) * fresh;
}

inline double change(double a, double b) {
  if (a == b) return 0.0;
  const double c = std::abs(a - b);
  return std::isnan(c) ? kPosInf : c;
}

inline double evidence_log_odds(const LogMessage& e) { return e[1] - e[0]; }

// Sum of all entries except one, via a suffix array. Returns NaN-free sums:
// +inf + -inf (contradictory incoming messages) is reported as 0.
struct Exclusions {
  std::vector<double> suffix;

  void load(const double* v, std::size_t d) {
    suffix.resize(d + 1);
    suffix[d] = 0.0;
    for (std::size_t k = d; k-- > 0;) suffix[k] = suffix[k + 1] + v[k];
  }
  double total() const { return suffix[0]; }
};

inline double sanitize(double v) { return std::isnan(v) ? 0.0 : v; }

class Engine {
 public:
  Engine(const FactorGraph& g, InferenceResult& r) : g_(g), r_(r) {
    phys_lo_.resize(g.num_physicians());
    side_.resize(g.num_physicians());
    for (std::size_t i = 0; i < phys_lo_.size(); ++i) {
      phys_lo_[i] = evidence_log_odds(g.physician_evidence(i));
      side_[i] = or_factor::physician_side(phys_lo_[i]);
    }
    pat_lo_.resize(g.num_patients());
    for (std::size_t j = 0; j < pat_lo_.size(); ++j) pat_lo_[j] = evidence_log_odds(g.patient_evidence(j));
  }

  // Messages x_j -> phi_b for the selected edges of patient j.
  double update_patient(std::uint32_t j, Targets t, std::uint32_t special, double damping) {
    thread_local std::vector<double> in;
    thread_local Exclusions ex;
    const auto edges = g_.patient_edges(j);
    const std::size_t d = edges.size();
    in.resize(d);
    for (std::size_t k = 0; k < d; ++k) in[k] = r_.factor_to_patient[edges[k]];
    ex.load(in.data(), d);
    double delta = 0.0;
    double prefix = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const std::uint32_t e = edges[k];
      if (wanted(t, e, special)) {
        const double fresh = sanitize(pat_lo_[j] + sanitize(prefix + ex.suffix[k + 1]));
        double& slot = r_.patient_to_factor[e];
        const double next = damp(slot, fresh, damping);
        delta = std::max(delta, change(slot, next));
        slot = next;
      }
      prefix += in[k];
    }
    return delta;
  }

  // Messages phi_b,i -> x_j for the selected edges, and phi_b,i -> y_i.
  double update_physician(std::uint32_t i, Targets t, std::uint32_t special, double damping, bool to_physician) {
    thread_local std::vector<double> lmu0;
    thread_local Exclusions ex;
    const std::uint32_t begin = g_.physician_edge_begin(i);
    const std::uint32_t end = g_.physician_edge_end(i);
    const std::size_t d = end - begin;
    lmu0.resize(d);
    for (std::size_t k = 0; k < d; ++k) lmu0[k] = or_factor::log_prob_negative(r_.patient_to_factor[begin + k]);
    ex.load(lmu0.data(), d);
    if (to_physician) r_.factor_to_physician[i] = or_factor::to_physician_log_odds(ex.total());
    double delta = 0.0;
    double prefix = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const std::uint32_t e = begin + static_cast<std::uint32_t>(k);
      if (wanted(t, e, special)) {
        const double fresh = or_factor::to_patient_log_odds(side_[i], prefix + ex.suffix[k + 1]);
        double& slot = r_.factor_to_patient[e];
        const double next = damp(slot, fresh, damping);
        delta = std::max(delta, change(slot, next));
        slot = next;
      }
      prefix += lmu0[k];
    }
    return delta;
  }

  // Exact schedule: leaves-to-root, then root-to-leaves.
  void run_tree(const ComponentInfo& c, ComponentDiagnostics& diag) {
    const auto n = static_cast<std::uint32_t>(g_.num_physicians());
    for (std::size_t idx = c.order.size(); idx-- > 1;) {
      const std::uint32_t v = c.order[idx];
      if (v < n) {
        update_physician(v, Targets::Only, c.parent_edge[idx], 0.0, false);
      } else {
        update_patient(v - n, Targets::Only, c.parent_edge[idx], 0.0);
      }
    }
    for (std::size_t idx = 0; idx < c.order.size(); ++idx) {
      const std::uint32_t v = c.order[idx];
      if (v < n) {
        update_physician(v, Targets::AllBut, c.parent_edge[idx], 0.0, true);
      } else {
        update_patient(v - n, Targets::AllBut, c.parent_edge[idx], 0.0);
      }
    }
    diag.iterations = 1;
    diag.converged = true;
    diag.final_delta = 0.0;
  }

  // Flooding: all patient messages from the previous factor messages, then
  // all factor messages from the new patient messages.
  void run_loopy(const ComponentInfo& c, const InferenceConfig& cfg, ComponentDiagnostics& diag, bool parallel) {
    const auto np = static_cast<std::ptrdiff_t>(c.patients.size());
    const auto nd = static_cast<std::ptrdiff_t>(c.physicians.size());
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
      double delta = 0.0;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 512) reduction(max : delta) if (parallel)
#endif
      for (std::ptrdiff_t k = 0; k < np; ++k) {
        delta = std::max(delta, update_patient(c.patients[static_cast<std::size_t>(k)], Targets::All, kNoEdge,
                                               cfg.damping));
      }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 256) reduction(max : delta) if (parallel)
#endif
      for (std::ptrdiff_t k = 0; k < nd; ++k) {
        delta = std::max(delta, update_physician(c.physicians[static_cast<std::size_t>(k)], Targets::All, kNoEdge,
                                                 cfg.damping, true));
      }
      diag.iterations = it + 1;
      diag.final_delta = delta;
      if (delta < cfg.tol) {
        diag.converged = true;
        return;
      }
    }
    diag.converged = false;
  }

  void beliefs(const ComponentInfo& c, ComponentDiagnostics& diag) {
    for (std::uint32_t i : c.physicians) {
      const double lo = phys_lo_[i] + r_.factor_to_physician[i];
      if (std::isnan(lo)) diag.inconsistent = true;
      r_.physician_posterior[i] = std::isnan(lo) ? std::nan("") : logmath::logistic(lo);
    }
    for (std::uint32_t j : c.patients) {
      double lo = pat_lo_[j];
      for (std::uint32_t e : g_.patient_edges(j)) lo += r_.factor_to_patient[e];
      if (std::isnan(lo)) diag.inconsistent = true;
      r_.patient_posterior[j] = std::isnan(lo) ? std::nan("") : logmath::logistic(lo);
    }
  }

 private:
  const FactorGraph& g_;
  InferenceResult& r_;
  std::vector<double> phys_lo_;
  std::vector<or_factor::PhysicianSide> side_;
  std::vector<double> pat_lo_;
};

const char* kind_name(EntityKind k) { return k == EntityKind::Physician ? "physician" : "patient"; }

}  // namespace

void InferenceConfig::validate() const {
  if (!(damping >= 0.0 && damping < 1.0)) throw ArgumentError("damping must be in [0, 1)");
  if (!(tol > 0.0)) throw ArgumentError("tolerance must be positive");
  if (max_iters == 0) throw ArgumentError("max_iters must be at least 1");
}

LogMessage InferenceResult::message(std::uint32_t edge, MessageDirection direction) const {
  const auto& v = direction == MessageDirection::PatientToFactor ? patient_to_factor : factor_to_patient;
  if (edge >= v.size()) throw LookupError("edge " + std::to_string(edge) + " out of range");
  return log_message_from_log_odds(v[edge]);
}

bool InferenceResult::all_converged() const {
  return std::all_of(diagnostics.begin(), diagnostics.end(), [](const auto& d) { return d.converged; });
}

InferenceResult run_inference(const FactorGraph& graph, const InferenceConfig& config) {
  config.validate();
  InferenceResult result;
  result.physician_posterior.assign(graph.num_physicians(), 0.0);
  result.patient_posterior.assign(graph.num_patients(), 0.0);
  result.patient_to_factor.assign(graph.num_edges(), 0.0);
  result.factor_to_patient.assign(graph.num_edges(), 0.0);
  result.factor_to_physician.assign(graph.num_physicians(), 0.0);

  const auto& comps = graph.components();
  result.diagnostics.resize(comps.size());
  for (std::size_t c = 0; c < comps.size(); ++c) {
    result.diagnostics[c].component = comps[c].id;
    result.diagnostics[c].is_tree = comps[c].is_tree;
  }

  Engine engine(graph, result);
#ifdef _OPENMP
  const int saved_threads = omp_get_max_threads();
  if (config.threads > 0) omp_set_num_threads(static_cast<int>(config.threads));
#endif

  std::vector<std::size_t> small;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const auto& comp = comps[c];
    if (comp.is_tree || comp.num_edges < kLargeComponentEdges) {
      small.push_back(c);
      continue;
    }
    engine.run_loopy(comp, config, result.diagnostics[c], true);
    engine.beliefs(comp, result.diagnostics[c]);
  }

  const auto ns = static_cast<std::ptrdiff_t>(small.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 64)
#endif
  for (std::ptrdiff_t k = 0; k < ns; ++k) {
    const std::size_t c = small[static_cast<std::size_t>(k)];
    const auto& comp = comps[c];
    if (comp.is_tree) {
      engine.run_tree(comp, result.diagnostics[c]);
    } else {
      engine.run_loopy(comp, config, result.diagnostics[c], false);
    }
    engine.beliefs(comp, result.diagnostics[c]);
  }

#ifdef _OPENMP
  if (config.threads > 0) omp_set_num_threads(saved_threads);
#endif
  return result;
}

double posterior_mean(const FactorGraph& graph, const InferenceResult& result, EntityKind kind, std::string_view id) {
  const auto& ids = kind == EntityKind::Physician ? graph.physician_ids : graph.patient_ids;
  const auto& post = kind == EntityKind::Physician ? result.physician_posterior : result.patient_posterior;
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw LookupError(std::string("unknown ") + kind_name(kind) + " id '" + std::string(id) + "'");
  return post.at(static_cast<std::size_t>(it - ids.begin()));
}

double posterior_mean(const Belief& belief) { return belief.posterior_positive; }

std::vector<ScoreRow> score_rows(const FactorGraph& graph, const InferenceResult& result) {
  std::vector<ScoreRow> rows;
  rows.reserve(graph.num_physicians() + graph.num_patients());
  auto id_of = [](const std::vector<std::string>& ids, std::size_t k) {
    return k < ids.size() ? ids[k] : std::to_string(k);
  };
  for (std::size_t i = 0; i < graph.num_physicians(); ++i) {
    const auto c = graph.physician_component(i);
    rows.push_back({EntityKind::Physician, id_of(graph.physician_ids, i), result.physician_posterior[i], c,
                    result.diagnostics[c].converged});
  }
  for (std::size_t j = 0; j < graph.num_patients(); ++j) {
    const auto c = graph.patient_component(j);
    rows.push_back({EntityKind::Patient, id_of(graph.patient_ids, j), result.patient_posterior[j], c,
                    result.diagnostics[c].converged});
  }
  return rows;
}

void write_scores_csv(const std::filesystem::path& path, std::span<const ScoreRow> rows) {
  std::string buf;
  buf.reserve(rows.size() * 48 + 64);
  buf += "entity_type,entity_id,posterior_positive,component_id,converged\n";
  for (const auto& r : rows) {
    buf += kind_name(r.kind);
    buf += ',';
    buf += r.id;
    buf += ',';
    detail::append_double(buf, r.posterior_positive);
    buf += ',';
    detail::append_int(buf, r.component);
    buf += r.converged ? ",1\n" : ",0\n";
  }
  detail::write_file(path, buf);
}

std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& path) {
  detail::CsvReader reader(path);
  std::vector<std::string_view> f;
  if (!reader.next(f)) reader.fail("missing header");
  if (f.size() != 5 || f[0] != "entity_type" || f[1] != "entity_id" || f[2] != "posterior_positive" ||
      f[3] != "component_id" || f[4] != "converged") {
    reader.fail("expected header entity_type,entity_id,posterior_positive,component_id,converged");
  }
  std::vector<ScoreRow> rows;
  while (reader.next(f)) {
    if (f.size() != 5) reader.fail("expected 5 fields, got " + std::to_string(f.size()));
    ScoreRow r;
    if (f[0] == "physician") {
      r.kind = EntityKind::Physician;
    } else if (f[0] == "patient") {
      r.kind = EntityKind::Patient;
    } else {
      reader.fail("entity_type must be physician or patient");
    }
    r.id = std::string(f[1]);
    r.posterior_positive = reader.parse_double(f[2], "posterior_positive");
    r.component = reader.parse_int<std::uint32_t>(f[3], "component_id");
    const auto conv = reader.parse_int<unsigned>(f[4], "converged");
    if (conv > 1) reader.fail("converged must be 0 or 1");
    r.converged = conv == 1;
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_components_csv(const std::filesystem::path& path, const FactorGraph& graph, const InferenceResult& result) {
  std::string buf = "component_id,is_tree,physicians,patients,edges,iterations,converged,final_delta\n";
  for (const auto& c : graph.components()) {
    const auto& d = result.diagnostics[c.id];
    detail::append_int(buf, c.id);
    buf += c.is_tree ? ",1," : ",0,";
    detail::append_int(buf, c.physicians.size());
    buf += ',';
    detail::append_int(buf, c.patients.size());
    buf += ',';
    detail::append_int(buf, c.num_edges);
    buf += ',';
    detail::append_int(buf, d.iterations);
    buf += d.converged ? ",1," : ",0,";
    detail::append_double(buf, d.final_delta);
    buf += '\n';
  }
  detail::write_file(path, buf);
}

}  // namespace raregraph
