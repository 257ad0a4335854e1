#include <string>

#include "io_util.hpp"
#include "raregraph/errors.hpp"
#include "raregraph/learning.hpp"

namespace raregraph {

using nlohmann::json;

namespace {

template <typename T, typename F>
json pair_json(const ClassPair<T>& pair, F&& f) {
  return json::array({f(pair[0]), f(pair[1])});
}

json bernoulli_vec(const std::vector<BernoulliParam>& v) {
  json out = json::array();
  for (const auto& b : v) out.push_back(b.p());
  return out;
}

json poisson_vec(const std::vector<PoissonParam>& v) {
  json out = json::array();
  for (const auto& b : v) out.push_back(b.lambda());
  return out;
}

json matrix_json(const std::vector<double>& m, std::size_t dim) {
  json out = json::array();
  for (std::size_t i = 0; i < dim; ++i) {
    out.push_back(std::vector<double>(m.begin() + static_cast<std::ptrdiff_t>(i * dim),
                                      m.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim)));
  }
  return out;
}

std::vector<double> matrix_from_json(const json& j) {
  std::vector<double> out;
  for (const auto& row : j) {
    for (const auto& v : row) out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

std::string params_to_json(const ModelParams& params) {
  const auto& pat = params.patient;
  const auto& phy = params.physician;
  json j;
  j["format"] = "raregraph-params";
  j["version"] = kParamsFormatVersion;
  j["schema"] = detail::schema_to_json(params.schema);
  j["patient"] = {
      {"prior_eta", pat.prior_eta},
      {"gender", pair_json(pat.gender, [](const auto& b) { return json(b.p()); })},
      {"age", pair_json(pat.age, [](const auto& c) { return json(c.probs()); })},
      {"region", pair_json(pat.region, [](const auto& c) { return json(c.probs()); })},
      {"code_indicator", pair_json(pat.code_indicator, bernoulli_vec)},
      {"code_frequency", pair_json(pat.code_frequency, poisson_vec)},
  };
  j["physician"] = {
      {"gender", pair_json(phy.gender, [](const auto& b) { return json(b.p()); })},
      {"specialty", pair_json(phy.specialty, [](const auto& c) { return json(c.probs()); })},
      {"patient_count", pair_json(phy.patient_count, [](const auto& p) { return json(p.lambda()); })},
      {"claims_mean", pair_json(phy.claims, [](const auto& g) { return json(g.mean()); })},
      {"claims_cov", pair_json(phy.claims, [](const auto& g) { return matrix_json(g.cov(), g.dim()); })},
  };
  return j.dump(2) + "\n";
}

namespace {

ModelParams parse_params(const std::string& text, const std::string& source) {
  ModelParams params;
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "raregraph-params") throw ParseError(source, 0, "not a params file");
    const int version = j.at("version").get<int>();
    if (version != kParamsFormatVersion) {
      throw ParseError(source, 0, "unsupported params version " + std::to_string(version));
    }
    params.schema = detail::schema_from_json(j.at("schema"));
    const auto& pat = j.at("patient");
    const auto& phy = j.at("physician");
    params.patient.prior_eta = pat.at("prior_eta").get<double>();
    for (std::size_t c = 0; c < 2; ++c) {
      params.patient.gender[c] = BernoulliParam(pat.at("gender").at(c).get<double>());
      params.patient.age[c] = CategoricalParam(pat.at("age").at(c).get<std::vector<double>>());
      params.patient.region[c] = CategoricalParam(pat.at("region").at(c).get<std::vector<double>>());
      for (const auto& v : pat.at("code_indicator").at(c)) {
        params.patient.code_indicator[c].emplace_back(v.get<double>());
      }
      for (const auto& v : pat.at("code_frequency").at(c)) {
        params.patient.code_frequency[c].emplace_back(v.get<double>());
      }
      params.physician.gender[c] = BernoulliParam(phy.at("gender").at(c).get<double>());
      params.physician.specialty[c] = CategoricalParam(phy.at("specialty").at(c).get<std::vector<double>>());
      params.physician.patient_count[c] = PoissonParam(phy.at("patient_count").at(c).get<double>());
      params.physician.claims[c] = GaussianParam(phy.at("claims_mean").at(c).get<std::vector<double>>(),
                                                 matrix_from_json(phy.at("claims_cov").at(c)));
    }
  } catch (const json::exception& e) {
    throw ParseError(source, 0, e.what());
  }
  params.validate();
  return params;
}

}  // namespace

ModelParams params_from_json(const std::string& text) { return parse_params(text, "params.json"); }

void save_params(const ModelParams& params, const std::filesystem::path& path) {
  detail::write_file(path, params_to_json(params));
}

ModelParams load_params(const std::filesystem::path& path) {
  return parse_params(detail::read_file(path), path.string());
}

}  // namespace raregraph
