#include <filesystem>
#include <string>
#include <unordered_map>

#include "io_util.hpp"
#include "raregraph/cohort.hpp"
#include "raregraph/errors.hpp"

namespace raregraph {

namespace fs = std::filesystem;
using detail::append_double;
using detail::append_int;
using detail::CsvReader;

namespace {

constexpr const char* kClaimsColumns[kClaimsDim] = {"claims_max", "claims_min", "claims_sum", "claims_avg"};

void append_label(std::string& out, const Label& label) {
  if (label) out.push_back(*label ? '1' : '0');
}

std::size_t read_patient_header(CsvReader& reader, const std::vector<std::string_view>& header) {
  static const char* fixed[] = {"patient_id", "label", "gender", "age_decade", "region"};
  if (header.size() < 5 || (header.size() - 5) % 2 != 0) reader.fail("unexpected patients.csv header");
  for (std::size_t k = 0; k < 5; ++k) {
    if (header[k] != fixed[k]) reader.fail("expected column '" + std::string(fixed[k]) + "'");
  }
  const std::size_t q = (header.size() - 5) / 2;
  for (std::size_t k = 0; k < q; ++k) {
    if (header[5 + k] != "ind_" + std::to_string(k)) reader.fail("expected column 'ind_" + std::to_string(k) + "'");
    if (header[5 + q + k] != "freq_" + std::to_string(k)) {
      reader.fail("expected column 'freq_" + std::to_string(k) + "'");
    }
  }
  if (q == 0) reader.fail("patients.csv has no clinical code columns");
  return q;
}

std::vector<PatientRecord> read_patients(const fs::path& path, std::size_t& num_codes) {
  CsvReader reader(path);
  std::vector<std::string_view> f;
  if (!reader.next(f)) reader.fail("missing header");
  const std::size_t q = read_patient_header(reader, f);
  num_codes = q;
  std::vector<PatientRecord> out;
  while (reader.next(f)) {
    if (f.size() != 5 + 2 * q) {
      reader.fail("expected " + std::to_string(5 + 2 * q) + " fields, got " + std::to_string(f.size()));
    }
    PatientRecord p;
    p.id = std::string(f[0]);
    p.label = reader.parse_label(f[1]);
    p.gender = reader.parse_int<int>(f[2], "gender");
    p.age_decade = reader.parse_int<int>(f[3], "age_decade");
    p.region = reader.parse_int<int>(f[4], "region");
    p.code_indicators.resize(q);
    p.code_frequencies.resize(q);
    for (std::size_t k = 0; k < q; ++k) {
      const auto ind = reader.parse_int<unsigned>(f[5 + k], "ind");
      if (ind > 1) reader.fail("code indicator must be 0 or 1");
      p.code_indicators[k] = static_cast<std::uint8_t>(ind);
      p.code_frequencies[k] = reader.parse_int<std::uint32_t>(f[5 + q + k], "freq");
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PhysicianRecord> read_physicians(const fs::path& path, bool& has_claims) {
  static const char* fixed[] = {"physician_id", "label", "gender", "specialty", "patient_count"};
  CsvReader reader(path);
  std::vector<std::string_view> f;
  if (!reader.next(f)) reader.fail("missing header");
  if (f.size() != 5 && f.size() != 5 + kClaimsDim) reader.fail("unexpected physicians.csv header");
  for (std::size_t k = 0; k < 5; ++k) {
    if (f[k] != fixed[k]) reader.fail("expected column '" + std::string(fixed[k]) + "'");
  }
  has_claims = f.size() == 5 + kClaimsDim;
  if (has_claims) {
    for (std::size_t k = 0; k < kClaimsDim; ++k) {
      if (f[5 + k] != kClaimsColumns[k]) reader.fail("expected column '" + std::string(kClaimsColumns[k]) + "'");
    }
  }
  const std::size_t width = f.size();
  std::vector<PhysicianRecord> out;
  while (reader.next(f)) {
    if (f.size() != width) {
      reader.fail("expected " + std::to_string(width) + " fields, got " + std::to_string(f.size()));
    }
    PhysicianRecord d;
    d.id = std::string(f[0]);
    d.label = reader.parse_label(f[1]);
    d.gender = reader.parse_int<int>(f[2], "gender");
    d.specialty = reader.parse_int<int>(f[3], "specialty");
    d.patient_count = reader.parse_int<std::uint32_t>(f[4], "patient_count");
    if (has_claims) {
      for (std::size_t k = 0; k < kClaimsDim; ++k) d.claims_features[k] = reader.parse_double(f[5 + k], kClaimsColumns[k]);
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Edge> read_edges(const fs::path& path, const std::unordered_map<std::string, std::size_t>& phys,
                             const std::unordered_map<std::string, std::size_t>& pats) {
  CsvReader reader(path);
  std::vector<std::string_view> f;
  if (!reader.next(f)) reader.fail("missing header");
  if (f.size() != 3 || f[0] != "physician_id" || f[1] != "patient_id" || f[2] != "claim_count") {
    reader.fail("expected header physician_id,patient_id,claim_count");
  }
  std::vector<Edge> out;
  std::string key;
  while (reader.next(f)) {
    if (f.size() != 3) reader.fail("expected 3 fields, got " + std::to_string(f.size()));
    key.assign(f[0]);
    auto d = phys.find(key);
    if (d == phys.end()) {
      throw IntegrityError(reader.path() + ":" + std::to_string(reader.line()) + ": unknown physician '" + key + "'");
    }
    key.assign(f[1]);
    auto p = pats.find(key);
    if (p == pats.end()) {
      throw IntegrityError(reader.path() + ":" + std::to_string(reader.line()) + ": unknown patient '" + key + "'");
    }
    out.push_back(Edge{static_cast<std::uint32_t>(d->second), static_cast<std::uint32_t>(p->second),
                       reader.parse_int<std::uint32_t>(f[2], "claim_count")});
  }
  return out;
}

}  // namespace

Cohort load_cohort(const fs::path& dir) {
  Cohort cohort;
  std::size_t num_codes = 0;
  cohort.patients = read_patients(dir / "patients.csv", num_codes);
  cohort.physicians = read_physicians(dir / "physicians.csv", cohort.has_claims_features);

  const auto schema_path = dir / "schema.json";
  if (fs::exists(schema_path)) {
    const auto j = detail::parse_json_file(schema_path);
    try {
      const int version = j.at("format_version").get<int>();
      if (version != kCohortFormatVersion) {
        throw ParseError(schema_path.string(), 0, "unsupported format_version " + std::to_string(version));
      }
      cohort.schema = detail::schema_from_json(j);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(schema_path.string(), 0, e.what());
    }
    if (cohort.schema.num_codes != num_codes) {
      throw ParseError((dir / "patients.csv").string(), 1,
                       "header has " + std::to_string(num_codes) + " codes but schema.json declares " +
                           std::to_string(cohort.schema.num_codes));
    }
  } else {
    cohort.schema.num_codes = num_codes;
  }

  const auto phys = physician_index(cohort);
  const auto pats = patient_index(cohort);
  if (phys.size() != cohort.physicians.size()) throw IntegrityError("physicians.csv contains duplicate ids");
  if (pats.size() != cohort.patients.size()) throw IntegrityError("patients.csv contains duplicate ids");
  cohort.edges = read_edges(dir / "edges.csv", phys, pats);
  validate_cohort(cohort, Validation::Full);
  return cohort;
}

void save_cohort(const Cohort& cohort, const fs::path& dir) {
  fs::create_directories(dir);
  const std::size_t q = cohort.schema.num_codes;

  std::string buf;
  buf.reserve(cohort.patients.size() * (12 + 4 * q) + 64);
  buf += "patient_id,label,gender,age_decade,region";
  for (std::size_t k = 0; k < q; ++k) (buf += ",ind_") += std::to_string(k);
  for (std::size_t k = 0; k < q; ++k) (buf += ",freq_") += std::to_string(k);
  buf += '\n';
  for (const auto& p : cohort.patients) {
    buf += p.id;
    buf += ',';
    append_label(buf, p.label);
    buf += ',';
    append_int(buf, p.gender);
    buf += ',';
    append_int(buf, p.age_decade);
    buf += ',';
    append_int(buf, p.region);
    for (auto v : p.code_indicators) {
      buf += ',';
      append_int(buf, static_cast<unsigned>(v));
    }
    for (auto v : p.code_frequencies) {
      buf += ',';
      append_int(buf, v);
    }
    buf += '\n';
  }
  detail::write_file(dir / "patients.csv", buf);

  buf.clear();
  buf += "physician_id,label,gender,specialty,patient_count";
  if (cohort.has_claims_features) {
    for (const char* c : kClaimsColumns) (buf += ',') += c;
  }
  buf += '\n';
  for (const auto& d : cohort.physicians) {
    buf += d.id;
    buf += ',';
    append_label(buf, d.label);
    buf += ',';
    append_int(buf, d.gender);
    buf += ',';
    append_int(buf, d.specialty);
    buf += ',';
    append_int(buf, d.patient_count);
    if (cohort.has_claims_features) {
      for (double v : d.claims_features) {
        buf += ',';
        append_double(buf, v);
      }
    }
    buf += '\n';
  }
  detail::write_file(dir / "physicians.csv", buf);

  buf.clear();
  buf += "physician_id,patient_id,claim_count\n";
  for (const auto& e : cohort.edges) {
    buf += cohort.physicians[e.physician].id;
    buf += ',';
    buf += cohort.patients[e.patient].id;
    buf += ',';
    append_int(buf, e.claim_count);
    buf += '\n';
  }
  detail::write_file(dir / "edges.csv", buf);

  auto j = detail::schema_to_json(cohort.schema);
  j["format_version"] = kCohortFormatVersion;
  detail::write_file(dir / "schema.json", j.dump(2) + "\n");
}

}  // namespace raregraph
