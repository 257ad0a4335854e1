#pragma once

// Seeded sampling of complete labelled cohorts from the generative model.
//
// The default generating parameters use reference estimates where they
// exist (patient gender and region, five clinical-code indicator rates,
// physician gender, patient-count rates, standardized claims Gaussians and
// the five most common specialties per class). Age profiles, the remaining
// code rates, all code frequencies and the specialty tail are synthetic.

#include <cstdint>
#include <optional>
#include <string>

#include "raregraph/cohort.hpp"
#include "raregraph/learning.hpp"

namespace raregraph {

enum class DegreeModel {
  // Physician labels first, then class-conditional physician degrees
  // 1 + Poisson(lambda_c^y - 1); positive physicians reserve one stub for a
  // positive patient and negative physicians link to negative patients only.
  ClassConditional,
  // Each patient links to 1 + Poisson(mean - 1) physicians chosen uniformly;
  // physician labels follow as the OR of their patients.
  PatientUniform,
};

// Number of independent patient draws whose OR gives the default positive
// physician rate: 1 - (1 - 1/201)^k = 8346 / 68898.
inline constexpr double kPositivePhysicianExponent = 25.889;

double default_positive_physician_rate(double prior_eta);

// Generating parameters for the given code and specialty counts. The prior
// is 1/201 and the claims standardization is the identity.
ModelParams reference_parameters(std::size_t num_codes = kDefaultNumCodes,
                             std::size_t num_specialties = kDefaultNumSpecialties);

struct GenConfig {
  std::size_t num_physicians = 68898;
  std::size_t num_patients = 247833;
  // Exact edge total; unset means degrees are sampled freely.
  std::optional<std::size_t> num_edges;
  double prior_eta = kDefaultPriorEta;
  // ClassConditional only; defaults to default_positive_physician_rate(prior_eta).
  std::optional<double> positive_physician_rate;
  // Fraction of the class separation kept in patient (signal) and physician
  // (physician_signal) parameters: 0 makes the classes identical.
  double signal = 1.0;
  double physician_signal = 1.0;
  DegreeModel degree_model = DegreeModel::ClassConditional;
  double mean_physicians_per_patient = 5.9;  // PatientUniform
  double claim_count_extra_mean = 3.0;       // claim_count = 1 + Poisson(.)
  ModelParams params = reference_parameters();
  std::uint64_t seed = 0;

  void validate() const;
};

// Parameters after applying the signal knobs.
ModelParams effective_parameters(const GenConfig& config);

// Every label is present, the OR coupling holds and each physician has at
// least one patient. Claims features are stored already standardized.
Cohort sample_cohort(const GenConfig& config);

// Echo of the generating configuration plus realized counts.
std::string gentruth_json(const GenConfig& config, const Cohort& cohort);

}  // namespace raregraph
