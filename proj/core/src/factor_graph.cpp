#include <algorithm>
#include <cmath>
#include <string>

#include "raregraph/errors.hpp"
#include "raregraph/graph_engine.hpp"
#include "raregraph/logmath.hpp"

namespace raregraph {

using logmath::kNegInf;

FactorGraph FactorGraph::from_evidence(std::vector<LogMessage> physician_evidence,
                                       std::vector<LogMessage> patient_evidence, std::span<const Link> links) {
  const std::size_t n = physician_evidence.size();
  const std::size_t m = patient_evidence.size();
  if (links.size() >= static_cast<std::size_t>(kNoEdge)) throw ArgumentError("too many links");
  for (const auto& e : physician_evidence) {
    if (std::isnan(e[0]) || std::isnan(e[1]) || e[0] == logmath::kPosInf || e[1] == logmath::kPosInf) {
      throw ArgumentError("physician evidence must be finite or -inf");
    }
  }
  for (const auto& e : patient_evidence) {
    if (std::isnan(e[0]) || std::isnan(e[1]) || e[0] == logmath::kPosInf || e[1] == logmath::kPosInf) {
      throw ArgumentError("patient evidence must be finite or -inf");
    }
  }

  std::vector<Link> sorted(links.begin(), links.end());
  for (const auto& l : sorted) {
    if (l.physician >= n || l.patient >= m) throw ArgumentError("link endpoint out of range");
  }
  std::sort(sorted.begin(), sorted.end(), [](const Link& a, const Link& b) {
    return a.physician != b.physician ? a.physician < b.physician : a.patient < b.patient;
  });
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    if (sorted[k].physician == sorted[k - 1].physician && sorted[k].patient == sorted[k - 1].patient) {
      throw ArgumentError("duplicate link between physician " + std::to_string(sorted[k].physician) +
                          " and patient " + std::to_string(sorted[k].patient));
    }
  }

  FactorGraph g;
  g.physician_evidence_ = std::move(physician_evidence);
  g.patient_evidence_ = std::move(patient_evidence);
  g.physician_offsets_.assign(n + 1, 0);
  g.edge_patient_.resize(sorted.size());
  g.edge_physician_.resize(sorted.size());
  g.patient_offsets_.assign(m + 1, 0);
  for (std::size_t e = 0; e < sorted.size(); ++e) {
    g.edge_patient_[e] = sorted[e].patient;
    g.edge_physician_[e] = sorted[e].physician;
    ++g.physician_offsets_[sorted[e].physician + 1];
    ++g.patient_offsets_[sorted[e].patient + 1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (g.physician_offsets_[i + 1] == 0) {
      throw ArgumentError("physician " + std::to_string(i) + " has no linked patients");
    }
    g.physician_offsets_[i + 1] += g.physician_offsets_[i];
  }
  for (std::size_t j = 0; j < m; ++j) g.patient_offsets_[j + 1] += g.patient_offsets_[j];
  g.patient_edges_.resize(sorted.size());
  std::vector<std::uint32_t> cursor(g.patient_offsets_.begin(), g.patient_offsets_.end() - 1);
  for (std::uint32_t e = 0; e < sorted.size(); ++e) g.patient_edges_[cursor[g.edge_patient_[e]]++] = e;

  g.compute_components();
  return g;
}

void FactorGraph::compute_components() {
  const std::size_t n = num_physicians();
  const std::size_t m = num_patients();
  constexpr std::uint32_t kUnset = static_cast<std::uint32_t>(-1);
  physician_component_.assign(n, kUnset);
  patient_component_.assign(m, kUnset);
  components_.clear();

  auto grow = [&](std::uint32_t start) {
    ComponentInfo c;
    c.id = static_cast<std::uint32_t>(components_.size());
    c.order.push_back(start);
    c.parent_edge.push_back(kNoEdge);
    if (start < n) {
      physician_component_[start] = c.id;
    } else {
      patient_component_[start - n] = c.id;
    }
    std::size_t head = 0;
    while (head < c.order.size()) {
      const std::uint32_t v = c.order[head];
      const std::uint32_t via = c.parent_edge[head];
      ++head;
      if (v < n) {
        c.physicians.push_back(v);
        for (std::uint32_t e = physician_offsets_[v]; e < physician_offsets_[v + 1]; ++e) {
          ++c.num_edges;
          if (e == via) continue;
          const std::uint32_t j = edge_patient_[e];
          if (patient_component_[j] != kUnset) continue;
          patient_component_[j] = c.id;
          c.order.push_back(static_cast<std::uint32_t>(n + j));
          c.parent_edge.push_back(e);
        }
      } else {
        const std::uint32_t j = v - static_cast<std::uint32_t>(n);
        c.patients.push_back(j);
        for (std::uint32_t e : patient_edges(j)) {
          if (e == via) continue;
          const std::uint32_t i = edge_physician_[e];
          if (physician_component_[i] != kUnset) continue;
          physician_component_[i] = c.id;
          c.order.push_back(i);
          c.parent_edge.push_back(e);
        }
      }
    }
    std::sort(c.physicians.begin(), c.physicians.end());
    std::sort(c.patients.begin(), c.patients.end());
    c.is_tree = c.num_edges + 1 == c.physicians.size() + c.patients.size();
    components_.push_back(std::move(c));
  };

  for (std::uint32_t i = 0; i < n; ++i) {
    if (physician_component_[i] == kUnset) grow(i);
  }
  for (std::uint32_t j = 0; j < m; ++j) {
    if (patient_component_[j] == kUnset) grow(static_cast<std::uint32_t>(n + j));
  }
}

FactorGraph build(const Cohort& cohort, const ModelParams& params, const BuildOptions& options) {
  const Cohort* source = &cohort;
  Cohort derived;
  if (!cohort.has_claims_features) {
    derived = derive_physician_claims_features(cohort, params.schema.standardization);
    source = &derived;
  }
  check_schema(params, source->schema);

  std::vector<LogMessage> phys(source->physicians.size());
  {
    const PhysicianLikelihood ll(params.physician);
    for (std::size_t i = 0; i < phys.size(); ++i) {
      const auto& rec = source->physicians[i];
      try {
        phys[i] = ll(rec);
      } catch (const DomainError& e) {
        throw DomainError("physician " + rec.id + ": " + e.what());
      }
      if (options.clamp_observed_labels && rec.label) phys[i][*rec.label ? 0 : 1] = kNegInf;
    }
  }

  std::vector<LogMessage> pats(source->patients.size());
  {
    const PatientLikelihood ll(params.patient);
    const double log_eta = std::log(params.patient.prior_eta);
    const double log_not_eta = std::log1p(-params.patient.prior_eta);
    for (std::size_t j = 0; j < pats.size(); ++j) {
      const auto& rec = source->patients[j];
      std::array<double, 2> l{};
      try {
        l = ll(rec);
      } catch (const DomainError& e) {
        throw DomainError("patient " + rec.id + ": " + e.what());
      }
      pats[j] = {l[0] + log_not_eta, l[1] + log_eta};
      if (options.clamp_observed_labels && rec.label) pats[j][*rec.label ? 0 : 1] = kNegInf;
    }
  }

  std::vector<Link> links;
  links.reserve(source->edges.size());
  for (const auto& e : source->edges) links.push_back({e.physician, e.patient});

  std::vector<std::uint32_t> degree(source->physicians.size(), 0);
  for (const auto& e : source->edges) ++degree[e.physician];
  for (std::size_t i = 0; i < degree.size(); ++i) {
    if (degree[i] == 0) throw IntegrityError("physician " + source->physicians[i].id + " has no linked patients");
  }

  FactorGraph g = FactorGraph::from_evidence(std::move(phys), std::move(pats), links);
  g.physician_ids.reserve(source->physicians.size());
  for (const auto& d : source->physicians) g.physician_ids.push_back(d.id);
  g.patient_ids.reserve(source->patients.size());
  for (const auto& p : source->patients) g.patient_ids.push_back(p.id);
  return g;
}

}  // namespace raregraph
