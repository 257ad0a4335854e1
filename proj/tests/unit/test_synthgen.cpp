#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "raregraph/errors.hpp"
#include "raregraph/learning.hpp"
#include "raregraph/synthgen.hpp"

using namespace raregraph;
namespace fs = std::filesystem;

namespace {

GenConfig small_config(std::uint64_t seed) {
  GenConfig cfg;
  cfg.num_physicians = 500;
  cfg.num_patients = 2000;
  cfg.params = reference_parameters(10, 30);
  cfg.prior_eta = 0.02;
  cfg.seed = seed;
  return cfg;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("synthgen") {
  TEST_CASE("generated cohorts pass validation") {
    for (auto model : {DegreeModel::ClassConditional, DegreeModel::PatientUniform}) {
      for (std::uint64_t seed = 0; seed < 4; ++seed) {
        auto cfg = small_config(seed);
        cfg.degree_model = model;
        const auto c = sample_cohort(cfg);
        CHECK_NOTHROW(validate_cohort(c));
        CHECK(labels_complete(c));
        for (const auto& d : c.physicians) CHECK(d.patient_count >= 1);
      }
    }
  }

  TEST_CASE("zero prior gives an all-negative cohort") {
    for (auto model : {DegreeModel::ClassConditional, DegreeModel::PatientUniform}) {
      auto cfg = small_config(1);
      cfg.prior_eta = 0.0;
      cfg.degree_model = model;
      const auto c = sample_cohort(cfg);
      for (const auto& p : c.patients) CHECK_FALSE(*p.label);
      for (const auto& d : c.physicians) CHECK_FALSE(*d.label);
    }
  }

  TEST_CASE("positive patient count concentrates at M * eta") {
    GenConfig cfg;
    cfg.num_physicians = 2000;
    cfg.num_patients = 247833;
    cfg.params = reference_parameters(5, 20);
    cfg.seed = 3;
    const auto c = sample_cohort(cfg);
    std::size_t positives = 0;
    for (const auto& p : c.patients) positives += *p.label ? 1 : 0;
    const double eta = cfg.prior_eta;
    const double mean = 247833.0 * eta;
    const double sd = std::sqrt(247833.0 * eta * (1.0 - eta));
    CHECK(mean == doctest::Approx(1233.0).epsilon(0.001));
    CHECK(std::abs(static_cast<double>(positives) - mean) <= 3.0 * sd);
  }

  TEST_CASE("same seed gives byte-identical files") {
    const auto a = fs::temp_directory_path() / "raregraph_gen_a";
    const auto b = fs::temp_directory_path() / "raregraph_gen_b";
    fs::remove_all(a);
    fs::remove_all(b);
    save_cohort(sample_cohort(small_config(7)), a);
    save_cohort(sample_cohort(small_config(7)), b);
    for (const char* f : {"patients.csv", "physicians.csv", "edges.csv", "schema.json"}) {
      CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
    }
    const auto other = sample_cohort(small_config(8));
    CHECK(other.edges.size() != sample_cohort(small_config(7)).edges.size());
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("requested edge total is met up to dropped duplicates") {
    auto cfg = small_config(2);
    cfg.num_edges = 12000;
    const auto c = sample_cohort(cfg);
    CHECK(c.edges.size() <= 12000);
    CHECK(c.edges.size() >= 11800);
    cfg.degree_model = DegreeModel::PatientUniform;
    const auto u = sample_cohort(cfg);
    CHECK(u.edges.size() <= 12000 + cfg.num_physicians);
    CHECK(u.edges.size() >= 11800);
  }

  TEST_CASE("patient-uniform degrees average the configured mean") {
    auto cfg = small_config(4);
    cfg.degree_model = DegreeModel::PatientUniform;
    cfg.num_patients = 5000;
    const auto c = sample_cohort(cfg);
    const double per_patient = static_cast<double>(c.edges.size()) / 5000.0;
    CHECK(per_patient == doctest::Approx(5.9).epsilon(0.05));
  }

  TEST_CASE("class-conditional degrees follow the patient-count rates") {
    auto cfg = small_config(5);
    cfg.num_physicians = 4000;
    cfg.num_patients = 20000;
    cfg.positive_physician_rate = 0.3;
    const auto c = sample_cohort(cfg);
    double sum[2] = {0, 0};
    double n[2] = {0, 0};
    for (const auto& d : c.physicians) {
      sum[*d.label] += d.patient_count;
      n[*d.label] += 1;
    }
    for (int k = 0; k < 2; ++k) {
      CHECK(sum[k] / n[k] == doctest::Approx(cfg.params.physician.patient_count[k].lambda()).epsilon(0.03));
    }
    CHECK(n[1] / 4000.0 == doctest::Approx(0.3).epsilon(0.1));
  }

  TEST_CASE("signal zero makes the classes identical") {
    auto cfg = small_config(6);
    cfg.signal = 0.0;
    cfg.physician_signal = 0.0;
    const auto p = effective_parameters(cfg);
    CHECK(p.patient.gender[0].p() == p.patient.gender[1].p());
    CHECK(p.patient.region[0].probs() == p.patient.region[1].probs());
    CHECK(p.physician.patient_count[0].lambda() == p.physician.patient_count[1].lambda());
    CHECK(p.physician.claims[0].mean() == p.physician.claims[1].mean());
    for (std::size_t q = 0; q < p.schema.num_codes; ++q) {
      CHECK(p.patient.code_indicator[0][q].p() == p.patient.code_indicator[1][q].p());
    }
  }

  TEST_CASE("reference values are used verbatim") {
    const auto p = reference_parameters();
    CHECK(p.schema.num_codes == 58);
    CHECK(p.schema.num_specialties == 189);
    CHECK(p.patient.gender[1].p() == 0.2689);
    CHECK(p.physician.patient_count[1].lambda() == 29.0939);
    // Reference region shares sum to 0.999 and are renormalized.
    const std::vector<double> region = {0.316, 0.303, 0.194, 0.186};
    for (std::size_t k = 0; k < 4; ++k) CHECK(p.patient.region[1].probs()[k] == doctest::Approx(region[k] / 0.999));
    CHECK(p.patient.prior_eta == kDefaultPriorEta);
    CHECK_NOTHROW(p.validate());
    CHECK(default_positive_physician_rate(kDefaultPriorEta) == doctest::Approx(8346.0 / 68898.0).epsilon(1e-3));
  }

  TEST_CASE("invalid configurations are rejected") {
    auto cfg = small_config(0);
    cfg.prior_eta = 1.0;
    CHECK_THROWS_AS(sample_cohort(cfg), ArgumentError);
    cfg = small_config(0);
    cfg.num_physicians = 0;
    CHECK_THROWS_AS(sample_cohort(cfg), ArgumentError);
    cfg = small_config(0);
    cfg.signal = 1.5;
    CHECK_THROWS_AS(sample_cohort(cfg), ArgumentError);
    cfg = small_config(0);
    cfg.num_edges = 10;
    CHECK_THROWS_AS(sample_cohort(cfg), ArgumentError);
    cfg = small_config(0);
    cfg.mean_physicians_per_patient = 0.5;
    CHECK_THROWS_AS(sample_cohort(cfg), ArgumentError);
  }

  TEST_CASE("gentruth echoes the configuration") {
    const auto cfg = small_config(9);
    const auto c = sample_cohort(cfg);
    const auto j = nlohmann::json::parse(gentruth_json(cfg, c));
    CHECK(j["config"]["seed"].get<std::uint64_t>() == 9);
    CHECK(j["realized"]["edges"].get<std::size_t>() == c.edges.size());
    CHECK(j["config"]["degree_model"] == "class_conditional");
    CHECK_NOTHROW(params_from_json(j["generating_params"].dump()));
  }
}
