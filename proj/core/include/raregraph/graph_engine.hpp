#pragma once

// Factor graph over physician labels y_i and patient labels x_j with three
// factor families:
//   phi_a,i(y_i)          physician evidence  p(z_i | y_i)
//   phi_c,j(x_j)          patient evidence    p(w_j | x_j) p(x_j)
//   phi_b,i(y_i, x_N(i))  label coupling      1[y_i == OR_j x_j]
// Sum-product runs in log space: exactly (two passes) on tree components and
// as damped flooding loopy BP elsewhere.
//
// Internally every binary message is stored as a single log-odds value
// r = log m(1) - log m(0); LogMessage is the equivalent normalized pair.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "raregraph/cohort.hpp"
#include "raregraph/learning.hpp"

namespace raregraph {

// {log m(0), log m(1)}, normalized so the larger entry is 0.
using LogMessage = std::array<double, 2>;
// {m(0), m(1)} in the linear domain.
using ProbPair = std::array<double, 2>;

LogMessage log_message_from_log_odds(double log_odds);
double log_odds_from_log_message(const LogMessage& m);

// ------------------------------------------------------------ OR factor

// Log-space kernels used by the inference engine.
namespace or_factor {

// log mu(0) of a normalized message with the given log-odds.
double log_prob_negative(double log_odds);

// Message phi_b -> y from log P0 = sum_j log mu_j(0). Returns log-odds.
double to_physician_log_odds(double log_p0);

// Unnormalized {log m(0), log m(1)} for phi_b -> x_j given the message from
// y (as log-odds) and log P0 over the other patients.
LogMessage to_patient_log(double physician_log_odds, double log_p0_others);

// Same, as a log-odds value. Contradictory inputs (both entries zero) yield 0.
double to_patient_log_odds(double physician_log_odds, double log_p0_others);

// log mu_y(0), log mu_y(1), hoisted out of the per-patient loop.
struct PhysicianSide {
  double log_mu0 = 0.0;
  double log_mu1 = 0.0;
};
PhysicianSide physician_side(double physician_log_odds);
double to_patient_log_odds(const PhysicianSide& side, double log_p0_others);

}  // namespace or_factor

// m(y=0) = prod_j mu_j(0), m(y=1) = 1 - prod_j mu_j(0), in O(|incoming|).
// Each incoming pair must sum to 1. Throws ArgumentError when empty.
ProbPair or_factor_message_to_physician(std::span<const ProbPair> incoming);

// With P0 = prod_{k != j} mu_k(0):
//   m(x_j=1) = mu_y(1),  m(x_j=0) = mu_y(1) (1 - P0) + mu_y(0) P0.
// Unnormalized.
ProbPair or_factor_message_to_patient(const ProbPair& physician_message, std::span<const ProbPair> others);

// ---------------------------------------------------------- factor graph

enum class EntityKind { Physician, Patient };

struct Link {
  std::uint32_t physician = 0;
  std::uint32_t patient = 0;
};

struct ComponentInfo {
  std::uint32_t id = 0;
  std::vector<std::uint32_t> physicians;
  std::vector<std::uint32_t> patients;
  std::size_t num_edges = 0;
  bool is_tree = false;

  // Breadth-first order over the physician/patient skeleton. Entries below
  // the physician count are physicians; the rest are patients offset by it.
  std::vector<std::uint32_t> order;
  // Edge to the BFS parent for each entry of order (root: kNoEdge).
  std::vector<std::uint32_t> parent_edge;

  // Factor-graph nodes: y_i, phi_a,i, phi_b,i per physician; x_j, phi_c,j per patient.
  std::size_t node_count() const noexcept { return 3 * physicians.size() + 2 * patients.size(); }
};

inline constexpr std::uint32_t kNoEdge = static_cast<std::uint32_t>(-1);

class FactorGraph {
 public:
  // physician_evidence[i] = {log p(z_i|y=0), log p(z_i|y=1)};
  // patient_evidence[j]   = {log p(w_j|x=0) + log(1-eta), log p(w_j|x=1) + log eta}.
  // Every physician needs at least one link; duplicate links are rejected.
  static FactorGraph from_evidence(std::vector<LogMessage> physician_evidence, std::vector<LogMessage> patient_evidence,
                                   std::span<const Link> links);

  std::size_t num_physicians() const noexcept { return physician_evidence_.size(); }
  std::size_t num_patients() const noexcept { return patient_evidence_.size(); }
  std::size_t num_edges() const noexcept { return edge_patient_.size(); }
  std::size_t num_variable_nodes() const noexcept { return num_physicians() + num_patients(); }
  std::size_t num_factor_nodes() const noexcept { return 2 * num_physicians() + num_patients(); }
  std::size_t num_nodes() const noexcept { return num_variable_nodes() + num_factor_nodes(); }

  const LogMessage& physician_evidence(std::size_t i) const { return physician_evidence_[i]; }
  const LogMessage& patient_evidence(std::size_t j) const { return patient_evidence_[j]; }

  // Edges are numbered physician-major: edges of physician i are
  // [physician_edge_begin(i), physician_edge_begin(i+1)).
  std::uint32_t physician_edge_begin(std::size_t i) const { return physician_offsets_[i]; }
  std::uint32_t physician_edge_end(std::size_t i) const { return physician_offsets_[i + 1]; }
  std::uint32_t edge_patient(std::uint32_t e) const { return edge_patient_[e]; }
  std::uint32_t edge_physician(std::uint32_t e) const { return edge_physician_[e]; }
  std::span<const std::uint32_t> patient_edges(std::size_t j) const {
    return {patient_edges_.data() + patient_offsets_[j], patient_edges_.data() + patient_offsets_[j + 1]};
  }

  const std::vector<ComponentInfo>& components() const noexcept { return components_; }
  std::uint32_t physician_component(std::size_t i) const { return physician_component_[i]; }
  std::uint32_t patient_component(std::size_t j) const { return patient_component_[j]; }

  // Entity ids, filled when built from a cohort.
  std::vector<std::string> physician_ids;
  std::vector<std::string> patient_ids;

 private:
  void compute_components();

  std::vector<LogMessage> physician_evidence_;
  std::vector<LogMessage> patient_evidence_;
  std::vector<std::uint32_t> physician_offsets_;
  std::vector<std::uint32_t> edge_patient_;
  std::vector<std::uint32_t> edge_physician_;
  std::vector<std::uint32_t> patient_offsets_;
  std::vector<std::uint32_t> patient_edges_;
  std::vector<ComponentInfo> components_;
  std::vector<std::uint32_t> physician_component_;
  std::vector<std::uint32_t> patient_component_;
};

struct BuildOptions {
  // Observed labels enter as delta evidence.
  bool clamp_observed_labels = false;
};

// Evidence is computed from the fitted class-conditional densities; the
// patient prior is folded into phi_c. Throws SchemaMismatch on schema drift.
FactorGraph build(const Cohort& cohort, const ModelParams& params, const BuildOptions& options = {});

// ------------------------------------------------------------ inference

struct InferenceConfig {
  double damping = 0.5;          // weight on the previous message, [0, 1)
  double tol = 1e-8;             // max |change in message log-odds| for convergence
  std::size_t max_iters = 100;   // flooding sweeps for cyclic components
  unsigned threads = 0;          // 0 = runtime default

  void validate() const;
};

struct ComponentDiagnostics {
  std::uint32_t component = 0;
  bool is_tree = false;
  bool converged = false;
  std::size_t iterations = 0;
  double final_delta = 0.0;
  // Some belief had zero mass under both labels (contradictory clamps).
  bool inconsistent = false;
};

enum class MessageDirection {
  PatientToFactor,  // x_j -> phi_b,i
  FactorToPatient,  // phi_b,i -> x_j
};

struct Belief {
  EntityKind kind = EntityKind::Physician;
  std::uint32_t index = 0;
  double posterior_positive = 0.0;
};

struct InferenceResult {
  std::vector<double> physician_posterior;
  std::vector<double> patient_posterior;
  std::vector<ComponentDiagnostics> diagnostics;  // indexed by component id

  // Final messages as log-odds, indexed by edge / physician.
  std::vector<double> patient_to_factor;
  std::vector<double> factor_to_patient;
  std::vector<double> factor_to_physician;

  LogMessage message(std::uint32_t edge, MessageDirection direction) const;
  bool all_converged() const;
};

InferenceResult run_inference(const FactorGraph& graph, const InferenceConfig& config = {});

// E[y | W, Z] = p(y = 1 | W, Z). Throws LookupError for an unknown id.
double posterior_mean(const FactorGraph& graph, const InferenceResult& result, EntityKind kind, std::string_view id);
double posterior_mean(const Belief& belief);

// ------------------------------------------------------------ scores.csv

struct ScoreRow {
  EntityKind kind = EntityKind::Physician;
  std::string id;
  double posterior_positive = 0.0;
  std::uint32_t component = 0;
  bool converged = true;
};

std::vector<ScoreRow> score_rows(const FactorGraph& graph, const InferenceResult& result);
// Columns: entity_type,entity_id,posterior_positive,component_id,converged
void write_scores_csv(const std::filesystem::path& path, std::span<const ScoreRow> rows);
std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& path);
// Columns: component_id,is_tree,physicians,patients,edges,iterations,converged,final_delta
void write_components_csv(const std::filesystem::path& path, const FactorGraph& graph, const InferenceResult& result);

}  // namespace raregraph
