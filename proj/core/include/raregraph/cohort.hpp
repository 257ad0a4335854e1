#pragma once

// Linked physician/patient populations: records, the physician-patient edge
// list, CSV/JSON serialization, derived claims features and leakage-safe
// splitting.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace raregraph {

inline constexpr std::size_t kClaimsDim = 4;  // max, min, sum, mean
using ClaimsVector = std::array<double, kClaimsDim>;

inline constexpr std::size_t kDefaultNumCodes = 58;
inline constexpr std::size_t kDefaultNumSpecialties = 189;
inline constexpr std::size_t kNumRegions = 4;      // SOUTH, WEST, MIDWEST, NORTHEAST (1-based on disk)
inline constexpr std::size_t kNumAgeDecades = 10;  // 0-9, 10-19, ...
inline constexpr double kStdFloor = 1e-9;
inline constexpr int kCohortFormatVersion = 1;

// Per-dimension z-score statistics for the physician claims features.
struct Standardization {
  ClaimsVector mean{0.0, 0.0, 0.0, 0.0};
  ClaimsVector stddev{1.0, 1.0, 1.0, 1.0};

  bool operator==(const Standardization&) const = default;
};

struct FeatureSchema {
  std::size_t num_codes = kDefaultNumCodes;
  std::size_t num_specialties = kDefaultNumSpecialties;
  std::size_t num_regions = kNumRegions;
  std::size_t num_age_decades = kNumAgeDecades;
  Standardization standardization;

  void validate() const;
  bool operator==(const FeatureSchema&) const = default;
};

// Missing labels are std::nullopt; they are only legal at scoring time.
using Label = std::optional<bool>;

struct PatientRecord {
  std::string id;
  Label label;
  int gender = 0;      // 1 = male
  int age_decade = 0;  // [0, 9]
  int region = 1;      // [1, 4]
  std::vector<std::uint8_t> code_indicators;    // length Q
  std::vector<std::uint32_t> code_frequencies;  // length Q; >= 1 iff indicator set
};

struct PhysicianRecord {
  std::string id;
  Label label;
  int gender = 0;
  int specialty = 0;                // [0, S)
  std::uint32_t patient_count = 0;  // equals degree in the full edge list
  ClaimsVector claims_features{};   // standardized (max, min, sum, mean)
};

struct Edge {
  std::uint32_t physician = 0;  // index into Cohort::physicians
  std::uint32_t patient = 0;    // index into Cohort::patients
  std::uint32_t claim_count = 1;
};

struct Cohort {
  FeatureSchema schema;
  std::vector<PatientRecord> patients;
  std::vector<PhysicianRecord> physicians;
  std::vector<Edge> edges;
  // False when physicians.csv carried no claims columns and derive has not run.
  bool has_claims_features = false;
};

enum class Validation {
  // Record-level invariants plus edge integrity and patient_count == degree.
  Full,
  // Record-level invariants and edge integrity only. Used for split halves,
  // whose physicians keep the counts observed in the full cohort.
  Partial,
};

// Throws IntegrityError / DomainError describing the first violation.
void validate_cohort(const Cohort& cohort, Validation level = Validation::Full);

bool labels_complete(const Cohort& cohort);
std::vector<std::uint32_t> physician_degrees(const Cohort& cohort);
std::unordered_map<std::string, std::size_t> patient_index(const Cohort& cohort);
std::unordered_map<std::string, std::size_t> physician_index(const Cohort& cohort);

// ---------------------------------------------------------------- file IO

// Reads patients.csv, physicians.csv, edges.csv and (optionally) schema.json.
// Throws ParseError naming file and line, or IntegrityError.
Cohort load_cohort(const std::filesystem::path& dir);
void save_cohort(const Cohort& cohort, const std::filesystem::path& dir);

// ------------------------------------------------------- derived features

// Raw (max, min, sum, mean) of incident edge claim counts per physician.
// Throws IntegrityError for a physician without edges.
std::vector<ClaimsVector> raw_claims_features(const Cohort& cohort);

// Population mean and standard deviation (divide by n), std floored at kStdFloor.
Standardization fit_standardization(std::span<const ClaimsVector> raw);

ClaimsVector standardize(const ClaimsVector& raw, const Standardization& stats);

// Fills claims_features from the edge list. With no statistics given, the
// cohort's own physicians define the standardization, which is recorded in
// the schema.
Cohort derive_physician_claims_features(Cohort cohort, std::optional<Standardization> stats = std::nullopt);

// ------------------------------------------------------------------ split

struct CohortSplit {
  Cohort train;
  Cohort test;
};

// Physicians are shuffled by seed and round(test_fraction * N) of them form
// the test side. Any patient linked to a test physician is a test patient.
CohortSplit split_train_test(const Cohort& cohort, double physician_test_fraction, std::uint64_t seed);

// Same leakage rule for an explicit physician partition.
CohortSplit split_by_test_physicians(const Cohort& cohort, std::span<const std::uint8_t> is_test_physician);

}  // namespace raregraph
