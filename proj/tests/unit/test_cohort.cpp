#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "generators.hpp"
#include "raregraph/cohort.hpp"
#include "raregraph/errors.hpp"
#include "raregraph/synthgen.hpp"

using namespace raregraph;
using namespace raregraph::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("raregraph_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

Cohort generated(std::size_t physicians, std::size_t patients, std::uint64_t seed) {
  GenConfig cfg;
  cfg.num_physicians = physicians;
  cfg.num_patients = patients;
  cfg.params = reference_parameters(6, 12);
  cfg.prior_eta = 0.02;
  cfg.seed = seed;
  return sample_cohort(cfg);
}

}  // namespace

TEST_SUITE("cohort") {
  TEST_CASE("hand fixture is valid") {
    const auto c = small_cohort();
    CHECK_NOTHROW(validate_cohort(c));
    CHECK(c.physicians.size() == 2);
    CHECK(c.patients.size() == 3);
    CHECK(labels_complete(c));
  }

  TEST_CASE("indicator and frequency must agree") {
    auto c = small_cohort();
    c.patients[0].code_frequencies[1] = 2;
    CHECK_THROWS_AS(validate_cohort(c), IntegrityError);
    c = small_cohort();
    c.patients[1].code_frequencies[0] = 0;
    CHECK_THROWS_AS(validate_cohort(c), IntegrityError);
  }

  TEST_CASE("record ranges are checked") {
    auto c = small_cohort();
    c.patients[0].region = 5;
    CHECK_THROWS(validate_cohort(c));
    c = small_cohort();
    c.patients[0].age_decade = 10;
    CHECK_THROWS(validate_cohort(c));
    c = small_cohort();
    c.physicians[0].specialty = 4;
    CHECK_THROWS(validate_cohort(c));
  }

  TEST_CASE("duplicate edges and wrong patient counts are rejected") {
    auto c = small_cohort();
    c.edges.push_back({0, 0, 1});
    CHECK_THROWS_AS(validate_cohort(c), IntegrityError);
    c = small_cohort();
    c.physicians[1].patient_count = 3;
    CHECK_THROWS_AS(validate_cohort(c), IntegrityError);
    CHECK_NOTHROW(validate_cohort(c, Validation::Partial));
  }

  TEST_CASE("labels must follow the OR rule") {
    auto c = small_cohort();
    c.physicians[0].label = false;
    CHECK_THROWS_AS(validate_cohort(c), IntegrityError);
  }

  TEST_CASE("raw claims features") {
    auto c = small_cohort();
    const auto raw = raw_claims_features(c);
    CHECK(raw[0] == ClaimsVector{5.0, 3.0, 8.0, 4.0});
    CHECK(raw[1] == ClaimsVector{4.0, 2.0, 6.0, 3.0});
  }

  TEST_CASE("single physician standardizes to zero") {
    Cohort c;
    c.schema.num_codes = 1;
    c.schema.num_specialties = 1;
    c.patients.push_back(make_patient("p", false, 1));
    c.physicians.push_back(make_physician("d", false, 1, 0, 0));
    c.edges = {{0, 0, 7}};
    const auto d = derive_physician_claims_features(c);
    for (double v : d.physicians[0].claims_features) CHECK(v == 0.0);
    CHECK(d.schema.standardization.stddev[0] == kStdFloor);
    CHECK(d.has_claims_features);
  }

  TEST_CASE("identical physicians standardize to zero") {
    Cohort c;
    c.schema.num_codes = 1;
    c.schema.num_specialties = 1;
    for (int k = 0; k < 4; ++k) {
      c.patients.push_back(make_patient("p" + std::to_string(k), false, 1));
      c.physicians.push_back(make_physician("d" + std::to_string(k), false, 1, 0, 0));
      c.edges.push_back({static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k), 2});
    }
    const auto d = derive_physician_claims_features(c);
    for (const auto& p : d.physicians) {
      for (double v : p.claims_features) CHECK(v == 0.0);
    }
  }

  TEST_CASE("derive is idempotent given fixed statistics") {
    const auto c = generated(50, 150, 1);
    const auto once = derive_physician_claims_features(c);
    const auto twice = derive_physician_claims_features(once, once.schema.standardization);
    for (std::size_t i = 0; i < c.physicians.size(); ++i) {
      CHECK(once.physicians[i].claims_features == twice.physicians[i].claims_features);
    }
  }

  TEST_CASE("physician without edges has no claims features") {
    auto c = small_cohort();
    c.physicians.push_back(make_physician("dr2", false, 1));
    CHECK_THROWS_AS(raw_claims_features(c), IntegrityError);
  }
}

TEST_SUITE("cohort io") {
  TEST_CASE("save then load round trip is byte-identical") {
    const auto c = generated(40, 120, 2);
    const auto a = scratch_dir("roundtrip_a");
    const auto b = scratch_dir("roundtrip_b");
    save_cohort(c, a);
    const auto loaded = load_cohort(a);
    CHECK(loaded.physicians.size() == c.physicians.size());
    CHECK(loaded.patients.size() == c.patients.size());
    CHECK(loaded.edges.size() == c.edges.size());
    CHECK(loaded.schema == c.schema);
    save_cohort(loaded, b);
    for (const char* f : {"patients.csv", "physicians.csv", "edges.csv", "schema.json"}) {
      CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
    }
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("two-physician fixture loads with N = 2, M = 3") {
    const auto dir = scratch_dir("fixture");
    write_text(dir / "patients.csv",
               "patient_id,label,gender,age_decade,region,ind_0,ind_1,freq_0,freq_1\n"
               "pt0,0,0,2,1,0,0,0,0\npt1,1,1,5,2,1,0,3,0\npt2,,1,3,4,0,1,0,1\n");
    write_text(dir / "physicians.csv",
               "physician_id,label,gender,specialty,patient_count\ndr0,1,1,0,2\ndr1,,0,1,2\n");
    write_text(dir / "edges.csv", "physician_id,patient_id,claim_count\ndr0,pt0,3\ndr0,pt1,5\ndr1,pt1,2\ndr1,pt2,4\n");
    const auto c = load_cohort(dir);
    CHECK(c.physicians.size() == 2);
    CHECK(c.patients.size() == 3);
    CHECK(c.schema.num_codes == 2);
    CHECK_FALSE(c.has_claims_features);
    CHECK_FALSE(c.patients[2].label.has_value());
    CHECK(c.edges[1].claim_count == 5);
    fs::remove_all(dir);
  }

  TEST_CASE("empty edge list with physicians is an integrity error") {
    const auto dir = scratch_dir("noedges");
    write_text(dir / "patients.csv", "patient_id,label,gender,age_decade,region,ind_0,freq_0\npt0,0,0,2,1,0,0\n");
    write_text(dir / "physicians.csv", "physician_id,label,gender,specialty,patient_count\ndr0,0,1,0,1\n");
    write_text(dir / "edges.csv", "physician_id,patient_id,claim_count\n");
    CHECK_THROWS_AS(load_cohort(dir), IntegrityError);
    fs::remove_all(dir);
  }

  TEST_CASE("parse errors name the file and line") {
    const auto dir = scratch_dir("badline");
    write_text(dir / "patients.csv",
               "patient_id,label,gender,age_decade,region,ind_0,freq_0\npt0,0,0,2,1,0,0\npt1,0,x,2,1,0,0\n");
    write_text(dir / "physicians.csv", "physician_id,label,gender,specialty,patient_count\ndr0,0,1,0,1\n");
    write_text(dir / "edges.csv", "physician_id,patient_id,claim_count\ndr0,pt0,1\n");
    try {
      load_cohort(dir);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
      CHECK(e.file().find("patients.csv") != std::string::npos);
    }
    fs::remove_all(dir);
  }

  TEST_CASE("dangling edge endpoint is an integrity error") {
    const auto dir = scratch_dir("dangling");
    write_text(dir / "patients.csv", "patient_id,label,gender,age_decade,region,ind_0,freq_0\npt0,0,0,2,1,0,0\n");
    write_text(dir / "physicians.csv", "physician_id,label,gender,specialty,patient_count\ndr0,0,1,0,1\n");
    write_text(dir / "edges.csv", "physician_id,patient_id,claim_count\ndr0,pt9,1\n");
    CHECK_THROWS_AS(load_cohort(dir), IntegrityError);
    fs::remove_all(dir);
  }
}

TEST_SUITE("split") {
  TEST_CASE("a patient shared across sides goes to test") {
    const auto c = small_cohort();
    const std::vector<std::uint8_t> test = {0, 1};
    const auto s = split_by_test_physicians(c, test);
    REQUIRE(s.train.physicians.size() == 1);
    CHECK(s.train.physicians[0].id == "dr0");
    REQUIRE(s.train.patients.size() == 1);
    CHECK(s.train.patients[0].id == "pt0");
    CHECK(s.test.patients.size() == 2);
    CHECK(s.train.edges.size() == 1);
  }

  TEST_CASE("disjoint components split exactly by component") {
    Cohort c;
    c.schema.num_codes = 1;
    c.schema.num_specialties = 1;
    for (int k = 0; k < 4; ++k) c.patients.push_back(make_patient("pt" + std::to_string(k), k == 0, 1));
    c.physicians.push_back(make_physician("dr0", true, 2, 0, 0));
    c.physicians.push_back(make_physician("dr1", false, 2, 0, 0));
    c.edges = {{0, 0, 1}, {0, 1, 1}, {1, 2, 1}, {1, 3, 1}};
    c = derive_physician_claims_features(c);
    const std::vector<std::uint8_t> test = {1, 0};
    const auto s = split_by_test_physicians(c, test);
    CHECK(s.test.patients.size() == 2);
    CHECK(s.test.patients[0].id == "pt0");
    CHECK(s.train.patients.size() == 2);
    CHECK(s.train.patients[0].id == "pt2");
  }

  TEST_CASE("split soundness on random cohorts") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto c = generated(120, 400, seed);
      const auto s = split_train_test(c, 0.25, seed);
      CHECK(s.test.physicians.size() == 30);
      std::set<std::string> train_ids, test_ids;
      for (const auto& p : s.train.patients) train_ids.insert(p.id);
      for (const auto& p : s.test.patients) test_ids.insert(p.id);
      CHECK(train_ids.size() + test_ids.size() == c.patients.size());
      for (const auto& id : test_ids) CHECK(train_ids.count(id) == 0);
      for (const auto& e : s.train.edges) CHECK(test_ids.count(s.train.patients[e.patient].id) == 0);
      CHECK_NOTHROW(validate_cohort(s.train, Validation::Partial));
      CHECK_NOTHROW(validate_cohort(s.test, Validation::Partial));
    }
  }

  TEST_CASE("split is reproducible under a fixed seed") {
    const auto c = generated(60, 200, 3);
    const auto a = split_train_test(c, 0.3, 11);
    const auto b = split_train_test(c, 0.3, 11);
    REQUIRE(a.test.physicians.size() == b.test.physicians.size());
    for (std::size_t i = 0; i < a.test.physicians.size(); ++i) CHECK(a.test.physicians[i].id == b.test.physicians[i].id);
  }

  TEST_CASE("bad fractions are rejected") {
    const auto c = small_cohort();
    CHECK_THROWS_AS(split_train_test(c, 0.0, 1), ArgumentError);
    CHECK_THROWS_AS(split_train_test(c, 1.0, 1), ArgumentError);
    CHECK_THROWS_AS(split_train_test(c, 0.01, 1), ArgumentError);
  }
}
