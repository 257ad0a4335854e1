#pragma once

// Reference marginals by exhaustive enumeration of the joint
//   prod_i exp(ev_a,i(y_i)) prod_j exp(ev_c,j(x_j)) prod_i 1[y_i == OR_{j in N_i} x_j].
// Only patient assignments are enumerated; each y_i is then forced by the
// coupling factor. Independent of the message-passing code.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "raregraph/graph_engine.hpp"

namespace raregraph::testing {

struct Marginals {
  std::vector<double> physician;
  std::vector<double> patient;
};

inline Marginals brute_force_marginals(const FactorGraph& g) {
  const std::size_t n = g.num_physicians();
  const std::size_t m = g.num_patients();
  if (m > 24) throw std::invalid_argument("too many patients to enumerate");
  std::vector<std::vector<std::uint32_t>> nbrs(n);
  for (std::uint32_t e = 0; e < g.num_edges(); ++e) nbrs[g.edge_physician(e)].push_back(g.edge_patient(e));

  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> log_w(std::size_t{1} << m);
  double log_max = neg_inf;
  for (std::size_t a = 0; a < log_w.size(); ++a) {
    double lw = 0.0;
    for (std::size_t j = 0; j < m; ++j) lw += g.patient_evidence(j)[(a >> j) & 1U];
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t y = 0;
      for (auto j : nbrs[i]) y |= (a >> j) & 1U;
      lw += g.physician_evidence(i)[y];
    }
    log_w[a] = lw;
    if (lw > log_max) log_max = lw;
  }
  if (log_max == neg_inf) throw std::invalid_argument("joint has zero mass");

  double z = 0.0;
  std::vector<double> phys(n, 0.0), pats(m, 0.0);
  for (std::size_t a = 0; a < log_w.size(); ++a) {
    const double w = std::exp(log_w[a] - log_max);
    if (w == 0.0) continue;
    z += w;
    for (std::size_t j = 0; j < m; ++j) {
      if ((a >> j) & 1U) pats[j] += w;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (auto j : nbrs[i]) {
        if ((a >> j) & 1U) {
          phys[i] += w;
          break;
        }
      }
    }
  }
  for (auto& v : phys) v /= z;
  for (auto& v : pats) v /= z;
  return {phys, pats};
}

// Naive sum-product for the coupling factor: sums phi_b over all
// 2^(|others| + 1) assignments of y and the other patients.
inline ProbPair naive_message_to_physician(const std::vector<ProbPair>& incoming) {
  const std::size_t k = incoming.size();
  ProbPair out{0.0, 0.0};
  for (std::size_t a = 0; a < (std::size_t{1} << k); ++a) {
    double w = 1.0;
    for (std::size_t t = 0; t < k; ++t) w *= incoming[t][(a >> t) & 1U];
    out[a != 0 ? 1 : 0] += w;
  }
  return out;
}

inline ProbPair naive_message_to_patient(const ProbPair& physician, const std::vector<ProbPair>& others) {
  const std::size_t k = others.size();
  ProbPair out{0.0, 0.0};
  for (int xj = 0; xj < 2; ++xj) {
    for (std::size_t a = 0; a < (std::size_t{1} << k); ++a) {
      double w = 1.0;
      for (std::size_t t = 0; t < k; ++t) w *= others[t][(a >> t) & 1U];
      const int y = (xj != 0 || a != 0) ? 1 : 0;
      out[static_cast<std::size_t>(xj)] += w * physician[static_cast<std::size_t>(y)];
    }
  }
  return out;
}

}  // namespace raregraph::testing
