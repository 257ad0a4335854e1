#include "raregraph/cohort.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_set>

#include "raregraph/errors.hpp"

namespace raregraph {

namespace {

bool valid_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

void validate_patient(const PatientRecord& p, const FeatureSchema& schema) {
  auto fail = [&](const std::string& what) { throw IntegrityError("patient " + p.id + ": " + what); };
  if (!valid_id(p.id)) fail("id must match [A-Za-z0-9_-]+");
  if (p.gender != 0 && p.gender != 1) fail("gender must be 0 or 1");
  if (p.age_decade < 0 || static_cast<std::size_t>(p.age_decade) >= schema.num_age_decades) {
    fail("age_decade out of range");
  }
  if (p.region < 1 || static_cast<std::size_t>(p.region) > schema.num_regions) fail("region out of range");
  if (p.code_indicators.size() != schema.num_codes || p.code_frequencies.size() != schema.num_codes) {
    fail("expected " + std::to_string(schema.num_codes) + " code indicators and frequencies");
  }
  for (std::size_t q = 0; q < schema.num_codes; ++q) {
    const auto ind = p.code_indicators[q];
    const auto freq = p.code_frequencies[q];
    if (ind > 1) fail("code indicator " + std::to_string(q) + " must be 0 or 1");
    if ((ind == 1) != (freq >= 1)) {
      fail("code " + std::to_string(q) + " indicator/frequency mismatch (ind=" + std::to_string(ind) +
           ", freq=" + std::to_string(freq) + ")");
    }
  }
}

void validate_physician(const PhysicianRecord& d, const FeatureSchema& schema) {
  auto fail = [&](const std::string& what) { throw IntegrityError("physician " + d.id + ": " + what); };
  if (!valid_id(d.id)) fail("id must match [A-Za-z0-9_-]+");
  if (d.gender != 0 && d.gender != 1) fail("gender must be 0 or 1");
  if (d.specialty < 0 || static_cast<std::size_t>(d.specialty) >= schema.num_specialties) {
    fail("specialty out of range");
  }
  for (double v : d.claims_features) {
    if (!std::isfinite(v)) fail("claims features must be finite");
  }
}

// Keeps the flagged records (order preserved) and every edge whose endpoints
// both survive.
Cohort subset(const Cohort& cohort, const std::vector<std::uint8_t>& keep_physician,
              const std::vector<std::uint8_t>& keep_patient) {
  Cohort out;
  out.schema = cohort.schema;
  out.has_claims_features = cohort.has_claims_features;
  constexpr auto kDropped = static_cast<std::uint32_t>(-1);
  std::vector<std::uint32_t> phys_map(cohort.physicians.size(), kDropped);
  std::vector<std::uint32_t> pat_map(cohort.patients.size(), kDropped);
  for (std::size_t i = 0; i < cohort.physicians.size(); ++i) {
    if (keep_physician[i]) {
      phys_map[i] = static_cast<std::uint32_t>(out.physicians.size());
      out.physicians.push_back(cohort.physicians[i]);
    }
  }
  for (std::size_t j = 0; j < cohort.patients.size(); ++j) {
    if (keep_patient[j]) {
      pat_map[j] = static_cast<std::uint32_t>(out.patients.size());
      out.patients.push_back(cohort.patients[j]);
    }
  }
  for (const auto& e : cohort.edges) {
    if (phys_map[e.physician] != kDropped && pat_map[e.patient] != kDropped) {
      out.edges.push_back(Edge{phys_map[e.physician], pat_map[e.patient], e.claim_count});
    }
  }
  return out;
}

}  // namespace

void FeatureSchema::validate() const {
  if (num_codes < 1) throw IntegrityError("schema: num_codes must be >= 1");
  if (num_specialties < 1) throw IntegrityError("schema: num_specialties must be >= 1");
  if (num_regions < 1 || num_age_decades < 1) throw IntegrityError("schema: region/age cardinalities must be >= 1");
  for (std::size_t k = 0; k < kClaimsDim; ++k) {
    if (!std::isfinite(standardization.mean[k])) throw IntegrityError("schema: standardization mean must be finite");
    if (!(standardization.stddev[k] > 0.0) || !std::isfinite(standardization.stddev[k])) {
      throw IntegrityError("schema: standardization std must be positive");
    }
  }
}

void validate_cohort(const Cohort& cohort, Validation level) {
  cohort.schema.validate();
  std::unordered_set<std::string_view> seen;
  seen.reserve(cohort.patients.size());
  for (const auto& p : cohort.patients) {
    validate_patient(p, cohort.schema);
    if (!seen.insert(p.id).second) throw IntegrityError("duplicate patient id " + p.id);
  }
  seen.clear();
  seen.reserve(cohort.physicians.size());
  for (const auto& d : cohort.physicians) {
    validate_physician(d, cohort.schema);
    if (!seen.insert(d.id).second) throw IntegrityError("duplicate physician id " + d.id);
  }

  const std::size_t num_patients = cohort.patients.size();
  std::unordered_set<std::uint64_t> pairs;
  pairs.reserve(cohort.edges.size());
  for (const auto& e : cohort.edges) {
    if (e.physician >= cohort.physicians.size() || e.patient >= num_patients) {
      throw IntegrityError("edge references a missing physician or patient");
    }
    if (e.claim_count < 1) {
      throw IntegrityError("edge " + cohort.physicians[e.physician].id + "-" + cohort.patients[e.patient].id +
                           ": claim_count must be >= 1");
    }
    const std::uint64_t key = static_cast<std::uint64_t>(e.physician) * num_patients + e.patient;
    if (!pairs.insert(key).second) {
      throw IntegrityError("duplicate edge " + cohort.physicians[e.physician].id + "-" +
                           cohort.patients[e.patient].id);
    }
  }

  if (level == Validation::Partial) return;

  const auto degree = physician_degrees(cohort);
  for (std::size_t i = 0; i < cohort.physicians.size(); ++i) {
    const auto& d = cohort.physicians[i];
    if (d.patient_count < 1) throw IntegrityError("physician " + d.id + ": patient_count must be >= 1");
    if (d.patient_count != degree[i]) {
      throw IntegrityError("physician " + d.id + ": patient_count " + std::to_string(d.patient_count) +
                           " differs from degree " + std::to_string(degree[i]) + " in the edge list");
    }
  }

  if (labels_complete(cohort)) {
    std::vector<std::uint8_t> any_positive(cohort.physicians.size(), 0);
    for (const auto& e : cohort.edges) {
      if (*cohort.patients[e.patient].label) any_positive[e.physician] = 1;
    }
    for (std::size_t i = 0; i < cohort.physicians.size(); ++i) {
      if (*cohort.physicians[i].label != static_cast<bool>(any_positive[i])) {
        throw IntegrityError("physician " + cohort.physicians[i].id +
                             ": label disagrees with the labels of linked patients");
      }
    }
  }
}

bool labels_complete(const Cohort& cohort) {
  return std::all_of(cohort.patients.begin(), cohort.patients.end(), [](const auto& p) { return p.label.has_value(); }) &&
         std::all_of(cohort.physicians.begin(), cohort.physicians.end(),
                     [](const auto& d) { return d.label.has_value(); });
}

std::vector<std::uint32_t> physician_degrees(const Cohort& cohort) {
  std::vector<std::uint32_t> degree(cohort.physicians.size(), 0);
  for (const auto& e : cohort.edges) ++degree[e.physician];
  return degree;
}

std::unordered_map<std::string, std::size_t> patient_index(const Cohort& cohort) {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(cohort.patients.size());
  for (std::size_t j = 0; j < cohort.patients.size(); ++j) index.emplace(cohort.patients[j].id, j);
  return index;
}

std::unordered_map<std::string, std::size_t> physician_index(const Cohort& cohort) {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(cohort.physicians.size());
  for (std::size_t i = 0; i < cohort.physicians.size(); ++i) index.emplace(cohort.physicians[i].id, i);
  return index;
}

std::vector<ClaimsVector> raw_claims_features(const Cohort& cohort) {
  const std::size_t n = cohort.physicians.size();
  std::vector<ClaimsVector> raw(n, ClaimsVector{-std::numeric_limits<double>::infinity(),
                                                std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::vector<std::uint32_t> degree(n, 0);
  for (const auto& e : cohort.edges) {
    auto& r = raw[e.physician];
    const auto c = static_cast<double>(e.claim_count);
    r[0] = std::max(r[0], c);
    r[1] = std::min(r[1], c);
    r[2] += c;
    ++degree[e.physician];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (degree[i] == 0) {
      throw IntegrityError("physician " + cohort.physicians[i].id + " has no edges; claims features undefined");
    }
    raw[i][3] = raw[i][2] / static_cast<double>(degree[i]);
  }
  return raw;
}

Standardization fit_standardization(std::span<const ClaimsVector> raw) {
  Standardization stats;
  if (raw.empty()) return stats;
  const auto n = static_cast<double>(raw.size());
  for (std::size_t k = 0; k < kClaimsDim; ++k) {
    double mean = 0.0;
    for (const auto& r : raw) mean += r[k];
    mean /= n;
    double var = 0.0;
    for (const auto& r : raw) var += (r[k] - mean) * (r[k] - mean);
    stats.mean[k] = mean;
    stats.stddev[k] = std::max(std::sqrt(var / n), kStdFloor);
  }
  return stats;
}

ClaimsVector standardize(const ClaimsVector& raw, const Standardization& stats) {
  ClaimsVector z{};
  for (std::size_t k = 0; k < kClaimsDim; ++k) z[k] = (raw[k] - stats.mean[k]) / stats.stddev[k];
  return z;
}

Cohort derive_physician_claims_features(Cohort cohort, std::optional<Standardization> stats) {
  const auto raw = raw_claims_features(cohort);
  const Standardization s = stats ? *stats : fit_standardization(raw);
  for (std::size_t i = 0; i < raw.size(); ++i) cohort.physicians[i].claims_features = standardize(raw[i], s);
  cohort.schema.standardization = s;
  cohort.has_claims_features = true;
  return cohort;
}

CohortSplit split_by_test_physicians(const Cohort& cohort, std::span<const std::uint8_t> is_test_physician) {
  if (is_test_physician.size() != cohort.physicians.size()) {
    throw ArgumentError("test-physician mask has the wrong length");
  }
  std::vector<std::uint8_t> test_patient(cohort.patients.size(), 0);
  for (const auto& e : cohort.edges) {
    if (is_test_physician[e.physician]) test_patient[e.patient] = 1;
  }
  std::vector<std::uint8_t> train_physician(cohort.physicians.size());
  std::vector<std::uint8_t> test_physician(is_test_physician.begin(), is_test_physician.end());
  for (std::size_t i = 0; i < train_physician.size(); ++i) train_physician[i] = test_physician[i] ? 0 : 1;
  std::vector<std::uint8_t> train_patient(cohort.patients.size());
  for (std::size_t j = 0; j < train_patient.size(); ++j) train_patient[j] = test_patient[j] ? 0 : 1;
  return CohortSplit{subset(cohort, train_physician, train_patient), subset(cohort, test_physician, test_patient)};
}

CohortSplit split_train_test(const Cohort& cohort, double physician_test_fraction, std::uint64_t seed) {
  if (!(physician_test_fraction > 0.0 && physician_test_fraction < 1.0)) {
    throw ArgumentError("physician test fraction must lie in (0,1)");
  }
  if (!labels_complete(cohort)) throw ArgumentError("train/test split requires labels on every record");
  const std::size_t n = cohort.physicians.size();
  const auto n_test = static_cast<std::size_t>(std::llround(physician_test_fraction * static_cast<double>(n)));
  if (n_test == 0 || n_test >= n) {
    throw ArgumentError("test fraction " + std::to_string(physician_test_fraction) + " leaves an empty side for " +
                        std::to_string(n) + " physicians");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::uint8_t> is_test(n, 0);
  for (std::size_t k = 0; k < n_test; ++k) is_test[order[k]] = 1;
  return split_by_test_physicians(cohort, is_test);
}

}  // namespace raregraph
