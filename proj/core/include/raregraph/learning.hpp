#pragma once

// Maximum-likelihood estimation of the class-conditional feature model and
// the matching log-likelihood evaluators.
//
// Patient features given label x:
//   gender ~ Ber, age decade ~ Cat(10), region ~ Cat(4),
//   per code q: indicator ~ Ber(eta_q); frequency == 0 if the indicator is 0,
//   otherwise frequency - 1 ~ Poisson(lambda_q).
// Physician features given label y:
//   gender ~ Ber, specialty ~ Cat(S), patient count ~ Poisson,
//   standardized claims (max, min, sum, mean) ~ N(mu, Sigma).

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "raregraph/cohort.hpp"
#include "raregraph/distributions.hpp"

namespace raregraph {

inline constexpr double kDefaultPriorEta = 1.0 / 201.0;
inline constexpr std::size_t kMinClassGaussianSamples = kClaimsDim + 1;
inline constexpr int kParamsFormatVersion = 1;

// Index 0 = negative class, 1 = positive class.
template <typename T>
using ClassPair = std::array<T, 2>;

struct PatientParams {
  double prior_eta = kDefaultPriorEta;
  ClassPair<BernoulliParam> gender;
  ClassPair<CategoricalParam> age;
  ClassPair<CategoricalParam> region;
  ClassPair<std::vector<BernoulliParam>> code_indicator;
  ClassPair<std::vector<PoissonParam>> code_frequency;  // rate of (frequency - 1)
};

struct PhysicianParams {
  ClassPair<BernoulliParam> gender;
  ClassPair<CategoricalParam> specialty;
  ClassPair<PoissonParam> patient_count;
  ClassPair<GaussianParam> claims;
};

struct ModelParams {
  FeatureSchema schema;
  PatientParams patient;
  PhysicianParams physician;

  // Throws ParameterError if a vector length disagrees with the schema or the
  // prior is outside (0,1).
  void validate() const;
};

// Throws SchemaMismatch if the cohort schema differs from the one the
// parameters were fitted on.
void check_schema(const ModelParams& params, const FeatureSchema& schema);

struct FitOptions {
  double smoothing = kDefaultSmoothing;
  double prior_eta = kDefaultPriorEta;
};

// The objective separates into a physician part and a patient part; each is
// fitted from its own records only.
PatientParams fit_patient_params(const Cohort& train, const FitOptions& options = {});
PhysicianParams fit_physician_params(const Cohort& train, const FitOptions& options = {});
ModelParams fit(const Cohort& train, const FitOptions& options = {});

// Precomputed log tables for fast repeated evaluation of log p(w | x).
class PatientLikelihood {
 public:
  explicit PatientLikelihood(const PatientParams& params);
  // {log p(w | x=0), log p(w | x=1)}. Throws DomainError naming the feature.
  std::array<double, 2> operator()(const PatientRecord& patient) const;

 private:
  std::size_t num_codes_;
  std::array<std::vector<double>, 2> log_gender_;  // [value]
  std::array<std::vector<double>, 2> log_age_;
  std::array<std::vector<double>, 2> log_region_;
  std::array<std::vector<double>, 2> log_on_;
  std::array<std::vector<double>, 2> log_off_;
  std::array<std::vector<double>, 2> log_rate_;
  std::array<std::vector<double>, 2> rate_;
};

class PhysicianLikelihood {
 public:
  explicit PhysicianLikelihood(const PhysicianParams& params);
  std::array<double, 2> operator()(const PhysicianRecord& physician) const;

 private:
  ClassPair<BernoulliParam> gender_;
  ClassPair<PoissonParam> patient_count_;
  ClassPair<GaussianParam> claims_;
  std::array<std::vector<double>, 2> log_specialty_;
};

std::array<double, 2> patient_log_likelihood(const PatientRecord& patient, const PatientParams& params);
std::array<double, 2> physician_log_likelihood(const PhysicianRecord& physician, const PhysicianParams& params);

// Sum over labelled records of log p(features | label) plus log p(x) for
// every patient. Requires complete labels.
double log_likelihood(const Cohort& cohort, const ModelParams& params);

// ---------------------------------------------------------------- params.json

std::string params_to_json(const ModelParams& params);
ModelParams params_from_json(const std::string& text);
void save_params(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_params(const std::filesystem::path& path);

}  // namespace raregraph
