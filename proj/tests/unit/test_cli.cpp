#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "raregraph/evaluation.hpp"
#include "raregraph/graph_engine.hpp"
#include "raregraph/learning.hpp"
#include "raregraph/synthgen.hpp"
#include "raregraph_cli/cli.hpp"

using namespace raregraph;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("raregraph_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int invoke(std::vector<std::string> args) { return cli::run(std::move(args)); }

std::vector<std::string> small_generate(const fs::path& out, const std::string& seed) {
  return {"generate", "--seed", seed, "--out", out.string(), "--physicians", "300", "--patients", "1500",
          "--codes", "8", "--specialties", "20", "--prior-eta", "0.03"};
}

// Keeps only each patient's first link, which leaves a forest of stars.
// Physicians left without patients are dropped and labels re-derived.
Cohort forest_of(const Cohort& c) {
  std::vector<std::uint32_t> first(c.patients.size(), static_cast<std::uint32_t>(-1));
  for (const auto& e : c.edges) first[e.patient] = std::min(first[e.patient], e.physician);
  Cohort out;
  out.schema = c.schema;
  out.patients = c.patients;
  std::vector<std::uint32_t> degree(c.physicians.size(), 0);
  for (const auto& e : c.edges) degree[e.physician] += first[e.patient] == e.physician ? 1 : 0;
  std::vector<std::uint32_t> remap(c.physicians.size(), 0);
  for (std::size_t i = 0; i < c.physicians.size(); ++i) {
    if (degree[i] == 0) continue;
    remap[i] = static_cast<std::uint32_t>(out.physicians.size());
    auto d = c.physicians[i];
    d.patient_count = degree[i];
    d.label = false;
    out.physicians.push_back(d);
  }
  for (const auto& e : c.edges) {
    if (first[e.patient] != e.physician) continue;
    out.edges.push_back({remap[e.physician], e.patient, e.claim_count});
    if (*c.patients[e.patient].label) out.physicians[remap[e.physician]].label = true;
  }
  return out;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("generate twice with one seed gives identical manifests and data") {
    const auto a = scratch("gen_a");
    const auto b = scratch("gen_b");
    REQUIRE(invoke(small_generate(a, "7")) == 0);
    REQUIRE(invoke(small_generate(b, "7")) == 0);
    for (const char* f : {"patients.csv", "physicians.csv", "edges.csv", "schema.json", "gentruth.json",
                          "manifest.json"}) {
      CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
    }
    const auto manifest = slurp(a / "manifest.json");
    CHECK(manifest.find(a.string()) == std::string::npos);
    const auto j = nlohmann::json::parse(manifest);
    CHECK(j["command"] == "generate");
    CHECK(j["settings"]["seed"] == 7);
    CHECK(j["outputs"].size() == 5);
    CHECK(j["outputs"][0]["sha256"].get<std::string>().size() == 64);
    CHECK_NOTHROW(load_cohort(a));
  }

  TEST_CASE("fit then score on a forest equals direct library calls") {
    const auto dir = scratch("pipeline");
    REQUIRE(invoke(small_generate(dir / "train", "3")) == 0);
    const Cohort train = load_cohort(dir / "train");
    const Cohort forest = forest_of(load_cohort(dir / "train"));
    save_cohort(forest, dir / "forest");

    const auto before = slurp(dir / "train" / "edges.csv");
    REQUIRE(invoke({"fit", "--in", (dir / "train").string(), "--out", (dir / "model").string()}) == 0);
    REQUIRE(invoke({"score", "--in", (dir / "forest").string(), "--params", (dir / "model" / "params.json").string(),
                 "--out", (dir / "scored").string()}) == 0);
    CHECK(slurp(dir / "train" / "edges.csv") == before);

    const ModelParams params = fit(train);
    save_params(params, dir / "direct_params.json");
    CHECK(slurp(dir / "model" / "params.json") == slurp(dir / "direct_params.json"));
    const FactorGraph graph = build(load_cohort(dir / "forest"), params);
    for (const auto& comp : graph.components()) CHECK(comp.is_tree);
    const auto direct = score_rows(graph, run_inference(graph));
    const auto piped = read_scores_csv(dir / "scored" / "scores.csv");
    REQUIRE(piped.size() == direct.size());
    for (std::size_t k = 0; k < direct.size(); ++k) {
      CHECK(piped[k].id == direct[k].id);
      CHECK(piped[k].posterior_positive == direct[k].posterior_positive);
      CHECK(piped[k].converged);
    }
    const auto manifest = nlohmann::json::parse(slurp(dir / "scored" / "manifest.json"));
    CHECK(manifest["inputs"].back()["name"] == "params/params.json");
  }

  TEST_CASE("fit with a held-out fraction writes a scorable test cohort") {
    const auto dir = scratch("holdout");
    REQUIRE(invoke(small_generate(dir / "cohort", "4")) == 0);
    REQUIRE(invoke({"fit", "--in", (dir / "cohort").string(), "--out", (dir / "model").string(), "--test-fraction",
                 "0.2", "--seed", "9"}) == 0);
    const Cohort test = load_cohort(dir / "model" / "test");
    CHECK(test.physicians.size() == 60);
    REQUIRE(invoke({"score", "--in", (dir / "model" / "test").string(), "--params",
                 (dir / "model" / "params.json").string(), "--out", (dir / "scored").string(), "--clamp-labels"}) == 0);
    REQUIRE(invoke({"eval", "--scores", (dir / "scored" / "scores.csv").string(), "--labels",
                 (dir / "model" / "test").string(), "--out", (dir / "eval").string()}) == 0);
    const auto m = nlohmann::json::parse(slurp(dir / "eval" / "metrics.json"));
    // Clamped labels score every physician exactly.
    CHECK(m["auc"].get<double>() == doctest::Approx(1.0));
  }

  TEST_CASE("eval on the four-point fixture matches the evaluation module") {
    const auto dir = scratch("eval");
    spit(dir / "scores.csv",
         "entity_type,entity_id,posterior_positive,component_id,converged\n"
         "physician,a,0.9,0,1\nphysician,b,0.4,1,1\nphysician,c,0.6,2,1\nphysician,d,0.1,3,1\npatient,p,0.5,0,1\n");
    spit(dir / "labels.csv", "entity_id,label\na,1\nb,1\nc,0\nd,0\n");
    REQUIRE(invoke({"eval", "--scores", (dir / "scores.csv").string(), "--labels", (dir / "labels.csv").string(),
                 "--out", (dir / "out").string(), "--sensitivity-grid", "0.5,0.75"}) == 0);
    const std::vector<double> scores = {0.9, 0.4, 0.6, 0.1};
    const std::vector<std::uint8_t> labels = {1, 1, 0, 0};
    const std::vector<double> grid = {0.5, 0.75};
    const auto expected = curve_and_auc(scores, labels, grid);
    CHECK(slurp(dir / "out" / "metrics.json") == slurp([&] {
            write_metrics_json(dir / "expected.json", expected);
            return dir / "expected.json";
          }()));
    const auto m = nlohmann::json::parse(slurp(dir / "out" / "metrics.json"));
    CHECK(m["auc"].get<double>() == doctest::Approx(19.0 / 24.0).epsilon(1e-15));
    CHECK(fs::exists(dir / "out" / "curve.csv"));
  }

  TEST_CASE("crossval writes folds and a summary") {
    const auto dir = scratch("crossval");
    REQUIRE(invoke(small_generate(dir / "cohort", "5")) == 0);
    REQUIRE(invoke({"crossval", "--in", (dir / "cohort").string(), "--out", (dir / "cv").string(), "--folds", "3",
                 "--seed", "2"}) == 0);
    const auto folds = slurp(dir / "cv" / "folds.csv");
    CHECK(folds.rfind("fold,model,excluded,", 0) == 0);
    CHECK(nlohmann::json::parse(slurp(dir / "cv" / "crossval.json")).is_object());
  }

  TEST_CASE("config file values apply and flags override them") {
    const auto dir = scratch("config");
    spit(dir / "run.toml", "seed = 11\ndamping = 0.25\n[generate]\nphysicians = 120\npatients = 600\ncodes = 6\n"
                           "specialties = 12\n");
    REQUIRE(invoke({"generate", "--config", (dir / "run.toml").string(), "--out", (dir / "a").string()}) == 0);
    auto j = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
    CHECK(j["settings"]["seed"] == 11);
    CHECK(j["settings"]["inference"]["damping"] == 0.25);
    CHECK(j["settings"]["physicians"] == 120);
    CHECK(j["inputs"][0]["name"] == "config/run.toml");
    REQUIRE(invoke({"generate", "--config", (dir / "run.toml").string(), "--out", (dir / "b").string(), "--seed", "12",
                 "--physicians", "130"}) == 0);
    j = nlohmann::json::parse(slurp(dir / "b" / "manifest.json"));
    CHECK(j["settings"]["seed"] == 12);
    CHECK(j["settings"]["physicians"] == 130);
  }

  TEST_CASE("usage errors exit with status 2") {
    const auto dir = scratch("usage");
    CHECK(invoke({}) == cli::kExitUsage);
    CHECK(invoke({"frobnicate"}) == cli::kExitUsage);
    CHECK(invoke({"generate", "--no-such-flag"}) == cli::kExitUsage);
    CHECK(invoke({"score", "--damping", "1.0", "--in", dir.string()}) == cli::kExitUsage);
    CHECK(invoke({"score", "--tol", "0", "--in", dir.string()}) == cli::kExitUsage);
    CHECK(invoke({"crossval", "--folds", "1", "--in", dir.string()}) == cli::kExitUsage);
    CHECK(invoke({"fit", "--test-fraction", "1.5", "--in", dir.string()}) == cli::kExitUsage);
    CHECK(invoke({"eval", "--sensitivity-grid", "0.2,abc"}) == cli::kExitUsage);
    CHECK(invoke({"fit", "--out", dir.string()}) == cli::kExitUsage);  // --in missing
    CHECK(invoke({"eval", "--out", dir.string()}) == cli::kExitUsage);  // --scores missing
    CHECK(invoke({"generate", "--degree-model", "random"}) == cli::kExitUsage);
  }

  TEST_CASE("data errors exit with status 1") {
    const auto dir = scratch("data");
    CHECK(invoke({"fit", "--in", (dir / "missing").string(), "--out", (dir / "o").string()}) == cli::kExitDataError);
    REQUIRE(invoke(small_generate(dir / "cohort", "6")) == 0);
    auto text = slurp(dir / "cohort" / "patients.csv");
    const auto second_line = text.find('\n', text.find('\n') + 1);
    text.insert(second_line + 1, "broken,row\n");
    spit(dir / "cohort" / "patients.csv", text);
    CHECK(invoke({"fit", "--in", (dir / "cohort").string(), "--out", (dir / "o").string()}) == cli::kExitDataError);
    CHECK(invoke({"eval", "--scores", (dir / "nope.csv").string(), "--labels", dir.string()}) == cli::kExitDataError);

    // The diagnostic names the file and line.
    const std::string cmd = std::string(RAREGRAPH_TOOL_PATH) + " fit --in " + (dir / "cohort").string() + " --out " +
                            (dir / "o").string() + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string output;
    char buf[256];
    while (std::fgets(buf, sizeof(buf), pipe)) output += buf;
    const int status = pclose(pipe);
    CHECK(WEXITSTATUS(status) == cli::kExitDataError);
    CHECK(output.find("patients.csv:3") != std::string::npos);
  }

  TEST_CASE("outputs never overwrite inputs") {
    const auto dir = scratch("guard");
    spit(dir / "scores.csv", "entity_type,entity_id,posterior_positive,component_id,converged\nphysician,a,0.9,0,1\n");
    spit(dir / "metrics.json", "{}");
    const auto before = slurp(dir / "metrics.json");
    CHECK(invoke({"eval", "--scores", (dir / "scores.csv").string(), "--labels", (dir / "metrics.json").string(),
               "--out", dir.string()}) == cli::kExitUsage);
    CHECK(slurp(dir / "metrics.json") == before);
  }
}
