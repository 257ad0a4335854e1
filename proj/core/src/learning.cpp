#include "raregraph/learning.hpp"

#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "raregraph/errors.hpp"

namespace raregraph {

namespace {

const char* class_name(int c) { return c == 1 ? "positive" : "negative"; }

void check_prior(double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw ArgumentError("prior_eta must lie in (0,1), got " + std::to_string(eta));
}

std::vector<double> logs_of(const std::vector<double>& probs) {
  std::vector<double> out(probs.size());
  for (std::size_t k = 0; k < probs.size(); ++k) out[k] = std::log(probs[k]);
  return out;
}

[[noreturn]] void out_of_support(const std::string& entity, const std::string& id, const char* feature, long long v) {
  throw DomainError(entity + " " + id + ": feature '" + feature + "' value " + std::to_string(v) + " out of support");
}

}  // namespace

void ModelParams::validate() const {
  check_prior(patient.prior_eta);
  schema.validate();
  for (int c = 0; c < 2; ++c) {
    if (patient.age[c].size() != schema.num_age_decades) throw ParameterError("age distribution length mismatch");
    if (patient.region[c].size() != schema.num_regions) throw ParameterError("region distribution length mismatch");
    if (patient.code_indicator[c].size() != schema.num_codes || patient.code_frequency[c].size() != schema.num_codes) {
      throw ParameterError("clinical code parameter length mismatch");
    }
    if (physician.specialty[c].size() != schema.num_specialties) {
      throw ParameterError("specialty distribution length mismatch");
    }
    if (physician.claims[c].dim() != kClaimsDim) throw ParameterError("claims Gaussian must be 4-dimensional");
  }
}

void check_schema(const ModelParams& params, const FeatureSchema& schema) {
  const auto& fitted = params.schema;
  auto mismatch = [](const char* what, std::size_t a, std::size_t b) {
    throw SchemaMismatch(std::string("schema mismatch on ") + what + ": parameters have " + std::to_string(a) +
                         ", cohort has " + std::to_string(b));
  };
  if (fitted.num_codes != schema.num_codes) mismatch("num_codes", fitted.num_codes, schema.num_codes);
  if (fitted.num_specialties != schema.num_specialties) {
    mismatch("num_specialties", fitted.num_specialties, schema.num_specialties);
  }
  if (fitted.num_regions != schema.num_regions) mismatch("num_regions", fitted.num_regions, schema.num_regions);
  if (fitted.num_age_decades != schema.num_age_decades) {
    mismatch("num_age_decades", fitted.num_age_decades, schema.num_age_decades);
  }
  if (!(fitted.standardization == schema.standardization)) {
    throw SchemaMismatch("schema mismatch: claims features were standardized with different statistics");
  }
}

// ------------------------------------------------------------------ fitting

PatientParams fit_patient_params(const Cohort& train, const FitOptions& options) {
  check_prior(options.prior_eta);
  const auto& schema = train.schema;
  const std::size_t q = schema.num_codes;
  const double s = options.smoothing;

  std::array<std::uint64_t, 2> n{};
  std::array<std::uint64_t, 2> male{};
  std::array<std::vector<std::uint64_t>, 2> age, region, on;
  std::array<std::vector<double>, 2> freq_sum;
  for (int c = 0; c < 2; ++c) {
    age[c].assign(schema.num_age_decades, 0);
    region[c].assign(schema.num_regions, 0);
    on[c].assign(q, 0);
    freq_sum[c].assign(q, 0.0);
  }
  for (const auto& p : train.patients) {
    if (!p.label) throw FitError("patient " + p.id + " has no label; fitting requires full supervision");
    const int c = *p.label ? 1 : 0;
    ++n[c];
    male[c] += static_cast<std::uint64_t>(p.gender);
    ++age[c][static_cast<std::size_t>(p.age_decade)];
    ++region[c][static_cast<std::size_t>(p.region - 1)];
    for (std::size_t k = 0; k < q; ++k) {
      if (p.code_indicators[k]) {
        ++on[c][k];
        freq_sum[c][k] += static_cast<double>(p.code_frequencies[k]) - 1.0;
      }
    }
  }
  for (int c = 0; c < 2; ++c) {
    if (n[c] == 0) throw FitError(std::string("no ") + class_name(c) + " patients in the training cohort");
  }

  PatientParams out;
  out.prior_eta = options.prior_eta;
  std::size_t pooled[2] = {0, 0};
  std::size_t floored[2] = {0, 0};
  for (int c = 0; c < 2; ++c) {
    out.gender[c] = BernoulliParam::from_counts(male[c], n[c], s);
    out.age[c] = CategoricalParam::from_counts(age[c], s);
    out.region[c] = CategoricalParam::from_counts(region[c], s);
    out.code_indicator[c].resize(q);
    out.code_frequency[c].resize(q);
    for (std::size_t k = 0; k < q; ++k) {
      out.code_indicator[c][k] = BernoulliParam::from_counts(on[c][k], n[c], s);
      if (on[c][k] > 0) {
        out.code_frequency[c][k] = PoissonParam::from_sum(freq_sum[c][k], on[c][k]);
        continue;
      }
      const std::uint64_t pooled_n = on[0][k] + on[1][k];
      if (pooled_n > 0) {
        ++pooled[c];
        out.code_frequency[c][k] = PoissonParam::from_sum(freq_sum[0][k] + freq_sum[1][k], pooled_n);
      } else {
        ++floored[c];
        out.code_frequency[c][k] = PoissonParam(kPoissonRateFloor);
      }
    }
    if (pooled[c] > 0) {
      spdlog::warn("{} of {} codes never set among {} patients; using pooled frequency rates", pooled[c], q,
                   class_name(c));
    }
    if (floored[c] > 0) {
      spdlog::warn("{} of {} codes never set in training data; frequency rates floored", floored[c], q);
    }
  }
  return out;
}

PhysicianParams fit_physician_params(const Cohort& train, const FitOptions& options) {
  const auto& schema = train.schema;
  const double s = options.smoothing;
  if (!train.has_claims_features) {
    throw FitError("physician claims features are missing; derive them before fitting");
  }

  std::array<std::uint64_t, 2> n{};
  std::array<std::uint64_t, 2> male{};
  std::array<std::vector<std::uint64_t>, 2> specialty;
  std::array<double, 2> count_sum{};
  std::array<std::vector<double>, 2> claims_rows;
  std::vector<double> all_rows;
  for (int c = 0; c < 2; ++c) specialty[c].assign(schema.num_specialties, 0);
  for (const auto& d : train.physicians) {
    if (!d.label) throw FitError("physician " + d.id + " has no label; fitting requires full supervision");
    const int c = *d.label ? 1 : 0;
    ++n[c];
    male[c] += static_cast<std::uint64_t>(d.gender);
    ++specialty[c][static_cast<std::size_t>(d.specialty)];
    count_sum[c] += static_cast<double>(d.patient_count);
    claims_rows[c].insert(claims_rows[c].end(), d.claims_features.begin(), d.claims_features.end());
    all_rows.insert(all_rows.end(), d.claims_features.begin(), d.claims_features.end());
  }
  for (int c = 0; c < 2; ++c) {
    if (n[c] == 0) throw FitError(std::string("no ") + class_name(c) + " physicians in the training cohort");
  }

  PhysicianParams out;
  for (int c = 0; c < 2; ++c) {
    out.gender[c] = BernoulliParam::from_counts(male[c], n[c], s);
    out.specialty[c] = CategoricalParam::from_counts(specialty[c], s);
    out.patient_count[c] = PoissonParam::from_sum(count_sum[c], n[c]);
    if (n[c] >= kMinClassGaussianSamples) {
      out.claims[c] = fit_gaussian(claims_rows[c], kClaimsDim);
    } else {
      spdlog::warn("only {} {} physicians; claims Gaussian uses the pooled covariance", n[c], class_name(c));
      auto own = sample_mean_cov(claims_rows[c], kClaimsDim);
      auto pooled = sample_mean_cov(all_rows, kClaimsDim);
      out.claims[c] = GaussianParam(std::move(own.mean), regularize_covariance(std::move(pooled.cov), kClaimsDim));
    }
  }
  return out;
}

ModelParams fit(const Cohort& train, const FitOptions& options) {
  ModelParams params;
  params.schema = train.schema;
  params.physician = fit_physician_params(train, options);
  params.patient = fit_patient_params(train, options);
  params.validate();
  return params;
}

// -------------------------------------------------------------- likelihoods

PatientLikelihood::PatientLikelihood(const PatientParams& params)
    : num_codes_(params.code_indicator[0].size()) {
  for (int c = 0; c < 2; ++c) {
    const double p = params.gender[c].p();
    log_gender_[c] = {std::log1p(-p), std::log(p)};
    log_age_[c] = logs_of(params.age[c].probs());
    log_region_[c] = logs_of(params.region[c].probs());
    log_on_[c].resize(num_codes_);
    log_off_[c].resize(num_codes_);
    log_rate_[c].resize(num_codes_);
    rate_[c].resize(num_codes_);
    for (std::size_t k = 0; k < num_codes_; ++k) {
      const double eta = params.code_indicator[c][k].p();
      log_on_[c][k] = std::log(eta);
      log_off_[c][k] = std::log1p(-eta);
      rate_[c][k] = params.code_frequency[c][k].lambda();
      log_rate_[c][k] = std::log(rate_[c][k]);
    }
  }
}

std::array<double, 2> PatientLikelihood::operator()(const PatientRecord& p) const {
  if (p.gender != 0 && p.gender != 1) out_of_support("patient", p.id, "gender", p.gender);
  if (p.age_decade < 0 || static_cast<std::size_t>(p.age_decade) >= log_age_[0].size()) {
    out_of_support("patient", p.id, "age_decade", p.age_decade);
  }
  if (p.region < 1 || static_cast<std::size_t>(p.region) > log_region_[0].size()) {
    out_of_support("patient", p.id, "region", p.region);
  }
  if (p.code_indicators.size() != num_codes_ || p.code_frequencies.size() != num_codes_) {
    throw DomainError("patient " + p.id + ": expected " + std::to_string(num_codes_) + " clinical codes");
  }
  std::array<double, 2> out{};
  for (int c = 0; c < 2; ++c) {
    out[c] = log_gender_[c][static_cast<std::size_t>(p.gender)] + log_age_[c][static_cast<std::size_t>(p.age_decade)] +
             log_region_[c][static_cast<std::size_t>(p.region - 1)];
  }
  for (std::size_t k = 0; k < num_codes_; ++k) {
    if (!p.code_indicators[k]) {
      if (p.code_frequencies[k] != 0) out_of_support("patient", p.id, "code frequency", p.code_frequencies[k]);
      out[0] += log_off_[0][k];
      out[1] += log_off_[1][k];
      continue;
    }
    if (p.code_frequencies[k] < 1) out_of_support("patient", p.id, "code frequency", p.code_frequencies[k]);
    const double extra = static_cast<double>(p.code_frequencies[k]) - 1.0;
    const double log_fact = std::lgamma(extra + 1.0);
    for (int c = 0; c < 2; ++c) {
      out[c] += log_on_[c][k] + extra * log_rate_[c][k] - rate_[c][k] - log_fact;
    }
  }
  return out;
}

PhysicianLikelihood::PhysicianLikelihood(const PhysicianParams& params)
    : gender_(params.gender), patient_count_(params.patient_count), claims_(params.claims) {
  for (int c = 0; c < 2; ++c) log_specialty_[c] = logs_of(params.specialty[c].probs());
}

std::array<double, 2> PhysicianLikelihood::operator()(const PhysicianRecord& d) const {
  if (d.gender != 0 && d.gender != 1) out_of_support("physician", d.id, "gender", d.gender);
  if (d.specialty < 0 || static_cast<std::size_t>(d.specialty) >= log_specialty_[0].size()) {
    out_of_support("physician", d.id, "specialty", d.specialty);
  }
  std::array<double, 2> out{};
  for (int c = 0; c < 2; ++c) {
    try {
      out[c] = gender_[c].log_density(d.gender) + log_specialty_[c][static_cast<std::size_t>(d.specialty)] +
               patient_count_[c].log_density(d.patient_count) + claims_[c].log_density(d.claims_features);
    } catch (const DomainError& e) {
      throw DomainError("physician " + d.id + ": " + e.what());
    }
  }
  return out;
}

std::array<double, 2> patient_log_likelihood(const PatientRecord& patient, const PatientParams& params) {
  return PatientLikelihood(params)(patient);
}

std::array<double, 2> physician_log_likelihood(const PhysicianRecord& physician, const PhysicianParams& params) {
  return PhysicianLikelihood(params)(physician);
}

double log_likelihood(const Cohort& cohort, const ModelParams& params) {
  check_schema(params, cohort.schema);
  double total = 0.0;
  if (!cohort.patients.empty()) {
    const PatientLikelihood patient_ll(params.patient);
    const double log_eta = std::log(params.patient.prior_eta);
    const double log_not_eta = std::log1p(-params.patient.prior_eta);
    for (const auto& p : cohort.patients) {
      if (!p.label) throw ArgumentError("log_likelihood requires labels; patient " + p.id + " has none");
      const int c = *p.label ? 1 : 0;
      total += patient_ll(p)[c] + (c ? log_eta : log_not_eta);
    }
  }
  if (!cohort.physicians.empty()) {
    const PhysicianLikelihood physician_ll(params.physician);
    for (const auto& d : cohort.physicians) {
      if (!d.label) throw ArgumentError("log_likelihood requires labels; physician " + d.id + " has none");
      total += physician_ll(d)[*d.label ? 1 : 0];
    }
  }
  return total;
}

}  // namespace raregraph
