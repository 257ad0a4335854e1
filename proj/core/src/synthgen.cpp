#include "raregraph/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "raregraph/distributions.hpp"
#include "raregraph/errors.hpp"

namespace raregraph {

namespace {

constexpr double kPatientGender[2] = {0.3812, 0.2689};
constexpr double kRegion[2][4] = {{0.394, 0.223, 0.217, 0.166}, {0.316, 0.303, 0.194, 0.186}};
constexpr double kTopCodes[5][2] = {
    {0.0031, 0.0592},  // chronic idiopathic urticaria
    {0.0280, 0.4184},  // epinephrine
    {0.0054, 0.0357},  // personal history of allergy
    {0.0482, 0.2685},  // allergy / anaphylaxis / urticaria
    {0.0152, 0.0414},  // laryngoscopy
};
constexpr double kPhysicianGender[2] = {0.8108, 0.7975};
constexpr double kPatientCount[2] = {20.1514, 29.0939};
constexpr double kTopSpecialties[2][5] = {{0.1563, 0.0778, 0.0857, 0.0851, 0.0297},
                                          {0.2518, 0.0991, 0.0602, 0.0583, 0.0418}};
constexpr double kClaimsMean[2][4] = {{0.001, 0.006, 0.013, -0.026}, {-0.007, -0.042, -0.097, 0.191}};
constexpr double kClaimsCov[2][16] = {
    {0.977, 0.098, 0.820, 0.727, 0.098, 1.108, 0.246, 0.136, 0.820, 0.246, 0.997, 0.727, 0.727, 0.136, 0.727, 0.897},
    {1.171, 0.066, 0.952, 1.011, 0.066, 0.216, 0.085, 0.055, 0.952, 0.085, 1.013, 0.919, 1.011, 0.055, 0.919, 1.704}};

// Synthetic age-decade profiles: negatives peak in the thirties, positives
// in the fifties.
constexpr double kAge[2][10] = {{0.06, 0.08, 0.12, 0.19, 0.17, 0.15, 0.11, 0.07, 0.04, 0.01},
                                {0.03, 0.05, 0.08, 0.12, 0.16, 0.21, 0.17, 0.11, 0.05, 0.02}};

double frac(double x) { return x - std::floor(x); }

std::vector<double> specialty_profile(std::size_t s, const double (&top)[5]) {
  std::vector<double> p(s, 0.0);
  const std::size_t head = std::min<std::size_t>(5, s);
  double head_mass = 0.0;
  for (std::size_t k = 0; k < head; ++k) head_mass += top[k];
  if (s <= 5) {
    for (std::size_t k = 0; k < head; ++k) p[k] = top[k] / head_mass;
    return p;
  }
  // Zipf tail over the remaining specialties.
  double tail_norm = 0.0;
  for (std::size_t k = 5; k < s; ++k) tail_norm += 1.0 / static_cast<double>(k - 3);
  for (std::size_t k = 0; k < 5; ++k) p[k] = top[k];
  for (std::size_t k = 5; k < s; ++k) p[k] = (1.0 - head_mass) / (static_cast<double>(k - 3) * tail_norm);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= total;
  return p;
}

template <std::size_t K>
std::vector<double> as_vector(const double (&a)[K]) {
  return std::vector<double>(a, a + K);
}

// Reference shares are rounded and may not sum to exactly one.
template <std::size_t K>
std::vector<double> normalized(const double (&a)[K]) {
  auto v = as_vector(a);
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  for (auto& x : v) x /= total;
  return v;
}

double mix(double neg, double pos, double s) { return neg + s * (pos - neg); }

std::vector<double> mix(const std::vector<double>& neg, const std::vector<double>& pos, double s) {
  std::vector<double> out(neg.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = mix(neg[k], pos[k], s);
  return out;
}

CategoricalParam mix(const CategoricalParam& neg, const CategoricalParam& pos, double s) {
  auto p = mix(neg.probs(), pos.probs(), s);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= total;
  return CategoricalParam(std::move(p));
}

std::int64_t poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<std::int64_t>(mean)(rng);
}

// Splits `total` across cells proportionally to `weights` by sequential
// binomial draws (a multinomial sample).
std::vector<std::int64_t> multinomial(Rng& rng, std::int64_t total, const std::vector<double>& weights) {
  std::vector<std::int64_t> out(weights.size(), 0);
  double remaining_weight = std::accumulate(weights.begin(), weights.end(), 0.0);
  const bool uniform = !(remaining_weight > 0.0);
  if (uniform) remaining_weight = static_cast<double>(weights.size());
  for (std::size_t k = 0; k < weights.size() && total > 0; ++k) {
    const double w = uniform ? 1.0 : weights[k];
    const double p = std::clamp(w / remaining_weight, 0.0, 1.0);
    const std::int64_t draw = k + 1 == weights.size() ? total : std::binomial_distribution<std::int64_t>(total, p)(rng);
    out[k] = draw;
    total -= draw;
    remaining_weight -= w;
  }
  return out;
}

std::string make_id(const char* prefix, std::size_t k, int width) {
  std::string digits = std::to_string(k);
  if (digits.size() < static_cast<std::size_t>(width)) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  return prefix + digits;
}

int id_width(std::size_t n) {
  int w = 1;
  for (std::size_t v = n; v >= 10; v /= 10) ++w;
  return w;
}

PatientRecord sample_patient(Rng& rng, const PatientParams& p, bool positive, std::size_t num_codes) {
  const std::size_t c = positive ? 1 : 0;
  PatientRecord r;
  r.label = positive;
  r.gender = p.gender[c].sample(rng);
  r.age_decade = static_cast<int>(p.age[c].sample(rng));
  r.region = static_cast<int>(p.region[c].sample(rng)) + 1;
  r.code_indicators.resize(num_codes);
  r.code_frequencies.resize(num_codes);
  for (std::size_t q = 0; q < num_codes; ++q) {
    const int on = p.code_indicator[c][q].sample(rng);
    r.code_indicators[q] = static_cast<std::uint8_t>(on);
    r.code_frequencies[q] = on ? static_cast<std::uint32_t>(1 + p.code_frequency[c][q].sample(rng)) : 0U;
  }
  return r;
}

class Wiring {
 public:
  Wiring(std::size_t n, std::size_t m) : adj_(n), degree_(m, 0) {}

  bool add(std::uint32_t i, std::uint32_t j) {
    auto& a = adj_[i];
    if (std::find(a.begin(), a.end(), j) != a.end()) return false;
    a.push_back(j);
    ++degree_[j];
    return true;
  }

  // Uniform draw from pool avoiding duplicates; gives up after a few tries.
  void add_random(Rng& rng, std::uint32_t i, const std::vector<std::uint32_t>& pool) {
    if (pool.empty()) return;
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (int attempt = 0; attempt < 16; ++attempt) {
      if (add(i, pool[pick(rng)])) return;
    }
  }

  std::size_t degree(std::uint32_t j) const { return degree_[j]; }
  std::vector<std::vector<std::uint32_t>>& adjacency() { return adj_; }

 private:
  std::vector<std::vector<std::uint32_t>> adj_;
  std::vector<std::uint32_t> degree_;
};

std::vector<std::uint32_t> uncovered(const Wiring& w, const std::vector<std::uint32_t>& pool, Rng& rng) {
  std::vector<std::uint32_t> out;
  for (auto j : pool) {
    if (w.degree(j) == 0) out.push_back(j);
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::vector<std::uint32_t> shuffled_stubs(const std::vector<std::uint32_t>& physicians,
                                          const std::vector<std::int64_t>& stubs, Rng& rng) {
  std::vector<std::uint32_t> out;
  for (auto i : physicians) out.insert(out.end(), static_cast<std::size_t>(std::max<std::int64_t>(stubs[i], 0)), i);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

void wire_class_conditional(const GenConfig& cfg, const ModelParams& params, Rng& rng,
                            const std::vector<std::uint8_t>& x, std::vector<std::uint8_t>& y, Wiring& w) {
  const std::size_t n = cfg.num_physicians;
  std::vector<std::uint32_t> pos_pat, neg_pat, all_pat(x.size());
  std::iota(all_pat.begin(), all_pat.end(), 0U);
  for (std::uint32_t j = 0; j < x.size(); ++j) (x[j] ? pos_pat : neg_pat).push_back(j);

  // Physician labels.
  const double pi = cfg.positive_physician_rate.value_or(default_positive_physician_rate(cfg.prior_eta));
  std::size_t n_pos = 0;
  if (!pos_pat.empty()) {
    n_pos = static_cast<std::size_t>(std::binomial_distribution<std::int64_t>(static_cast<std::int64_t>(n), pi)(rng));
    n_pos = std::max<std::size_t>(n_pos, 1);
    if (neg_pat.empty()) n_pos = n;
  }
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0U);
  std::shuffle(perm.begin(), perm.end(), rng);
  y.assign(n, 0);
  for (std::size_t k = 0; k < n_pos; ++k) y[perm[k]] = 1;
  std::vector<std::uint32_t> pos_phys, neg_phys;
  for (std::uint32_t i = 0; i < n; ++i) (y[i] ? pos_phys : neg_phys).push_back(i);

  // Degrees.
  std::vector<double> extra_mean(n);
  for (std::size_t i = 0; i < n; ++i) extra_mean[i] = std::max(0.0, params.physician.patient_count[y[i]].lambda() - 1.0);
  std::vector<std::int64_t> degree(n);
  if (cfg.num_edges) {
    const auto extra = multinomial(rng, static_cast<std::int64_t>(*cfg.num_edges - n), extra_mean);
    for (std::size_t i = 0; i < n; ++i) degree[i] = 1 + extra[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) degree[i] = 1 + poisson(rng, extra_mean[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto cap = static_cast<std::int64_t>(y[i] ? x.size() : neg_pat.size());
    degree[i] = std::min(degree[i], cap);
  }

  // One reserved stub per positive physician, dealing positive patients
  // round-robin so that each is covered when possible.
  std::vector<std::int64_t> left = degree;
  if (!pos_phys.empty()) {
    std::vector<std::uint32_t> order = pos_pat;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < pos_phys.size(); ++k) {
      w.add(pos_phys[k], order[k % order.size()]);
      --left[pos_phys[k]];
    }
  }

  // Positive stubs cover the remaining positive patients first.
  auto pos_stubs = shuffled_stubs(pos_phys, left, rng);
  std::size_t used = 0;
  for (auto j : uncovered(w, pos_pat, rng)) {
    for (; used < pos_stubs.size(); ++used) {
      if (w.add(pos_stubs[used], j)) {
        ++used;
        break;
      }
    }
  }

  // Negative stubs: uncovered negative patients, then uniform negatives.
  const auto neg_stubs = shuffled_stubs(neg_phys, left, rng);
  const auto open_neg = uncovered(w, neg_pat, rng);
  for (std::size_t k = 0; k < neg_stubs.size(); ++k) {
    if (k < open_neg.size()) {
      w.add(neg_stubs[k], open_neg[k]);
    } else {
      w.add_random(rng, neg_stubs[k], neg_pat);
    }
  }

  // Leftover positive stubs: anything still uncovered, then any patient.
  const auto open_any = uncovered(w, all_pat, rng);
  std::size_t next_open = 0;
  for (; used < pos_stubs.size(); ++used) {
    if (next_open < open_any.size() && w.add(pos_stubs[used], open_any[next_open])) {
      ++next_open;
    } else {
      w.add_random(rng, pos_stubs[used], all_pat);
    }
  }
}

void wire_patient_uniform(const GenConfig& cfg, Rng& rng, const std::vector<std::uint8_t>& x,
                          std::vector<std::uint8_t>& y, Wiring& w) {
  const std::size_t n = cfg.num_physicians;
  const std::size_t m = x.size();
  std::vector<std::int64_t> degree(m);
  if (cfg.num_edges) {
    const auto extra = multinomial(rng, static_cast<std::int64_t>(*cfg.num_edges) - static_cast<std::int64_t>(m),
                                   std::vector<double>(m, 1.0));
    for (std::size_t j = 0; j < m; ++j) degree[j] = 1 + extra[j];
  } else {
    for (std::size_t j = 0; j < m; ++j) degree[j] = 1 + poisson(rng, cfg.mean_physicians_per_patient - 1.0);
  }
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
  for (std::uint32_t j = 0; j < m; ++j) {
    const auto d = std::min<std::int64_t>(degree[j], static_cast<std::int64_t>(n));
    std::int64_t placed = 0;
    for (int attempt = 0; placed < d && attempt < 16 * d + 16; ++attempt) {
      if (w.add(pick(rng), j)) ++placed;
    }
  }
  // A physician left without patients draws one uniformly.
  std::uniform_int_distribution<std::uint32_t> pick_patient(0, static_cast<std::uint32_t>(m - 1));
  for (std::uint32_t i = 0; i < n; ++i) {
    if (w.adjacency()[i].empty()) w.add(i, pick_patient(rng));
  }
  y.assign(n, 0);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (auto j : w.adjacency()[i]) y[i] = static_cast<std::uint8_t>(y[i] | x[j]);
  }
}

}  // namespace

double default_positive_physician_rate(double prior_eta) {
  return -std::expm1(kPositivePhysicianExponent * std::log1p(-prior_eta));
}

ModelParams reference_parameters(std::size_t num_codes, std::size_t num_specialties) {
  if (num_codes == 0) throw ArgumentError("num_codes must be positive");
  if (num_specialties == 0) throw ArgumentError("num_specialties must be positive");
  ModelParams p;
  p.schema.num_codes = num_codes;
  p.schema.num_specialties = num_specialties;
  p.schema.num_regions = kNumRegions;
  p.schema.num_age_decades = kNumAgeDecades;
  p.schema.standardization = Standardization{};
  p.patient.prior_eta = kDefaultPriorEta;
  for (std::size_t c = 0; c < 2; ++c) {
    p.patient.gender[c] = BernoulliParam(kPatientGender[c]);
    p.patient.age[c] = CategoricalParam(normalized(kAge[c]));
    p.patient.region[c] = CategoricalParam(normalized(kRegion[c]));
    p.physician.gender[c] = BernoulliParam(kPhysicianGender[c]);
    p.physician.patient_count[c] = PoissonParam(kPatientCount[c]);
    p.physician.specialty[c] = CategoricalParam(specialty_profile(num_specialties, kTopSpecialties[c]));
    p.physician.claims[c] = GaussianParam(as_vector(kClaimsMean[c]), as_vector(kClaimsCov[c]));
  }
  for (std::size_t q = 0; q < num_codes; ++q) {
    double on0 = 0.0;
    double on1 = 0.0;
    if (q < 5) {
      on0 = kTopCodes[q][0];
      on1 = kTopCodes[q][1];
    } else {
      // Synthetic: rates spread over [0.02, 0.30], class ratio within [0.7, 1.3].
      on0 = 0.02 + 0.28 * frac(static_cast<double>(q) * 0.6180339887498949);
      on1 = on0 * (1.0 + 0.3 * std::sin(static_cast<double>(q)));
    }
    // Synthetic: mean frequency given the code is present in [1.5, 6],
    // nearly equal across classes.
    const double mean_freq = 1.5 + 4.5 * frac(static_cast<double>(q) * 0.7548776662466927);
    p.patient.code_indicator[0].emplace_back(on0);
    p.patient.code_indicator[1].emplace_back(on1);
    p.patient.code_frequency[0].emplace_back(mean_freq - 1.0);
    p.patient.code_frequency[1].emplace_back((mean_freq - 1.0) * (1.0 + 0.05 * std::cos(static_cast<double>(q))));
  }
  p.validate();
  return p;
}

void GenConfig::validate() const {
  if (num_physicians == 0) throw ArgumentError("num_physicians must be at least 1");
  if (num_patients == 0) throw ArgumentError("num_patients must be at least 1");
  if (!(prior_eta >= 0.0 && prior_eta < 1.0)) throw ArgumentError("prior_eta must be in [0, 1)");
  if (positive_physician_rate && !(*positive_physician_rate >= 0.0 && *positive_physician_rate <= 1.0)) {
    throw ArgumentError("positive_physician_rate must be in [0, 1]");
  }
  if (!(signal >= 0.0 && signal <= 1.0)) throw ArgumentError("signal must be in [0, 1]");
  if (!(physician_signal >= 0.0 && physician_signal <= 1.0)) throw ArgumentError("physician_signal must be in [0, 1]");
  if (!(mean_physicians_per_patient >= 1.0)) throw ArgumentError("mean_physicians_per_patient must be at least 1");
  if (!(claim_count_extra_mean >= 0.0)) throw ArgumentError("claim_count_extra_mean must be non-negative");
  if (num_edges) {
    const std::size_t floor = degree_model == DegreeModel::ClassConditional ? num_physicians : num_patients;
    if (*num_edges < floor) {
      throw ArgumentError("num_edges must be at least " + std::to_string(floor) + " for this degree model");
    }
    if (*num_edges > num_physicians * num_patients) throw ArgumentError("num_edges exceeds the complete graph");
  }
  params.validate();
}

ModelParams effective_parameters(const GenConfig& config) {
  ModelParams p = config.params;
  const double s = config.signal;
  auto& pat = p.patient;
  pat.gender[1] = BernoulliParam(mix(pat.gender[0].p(), pat.gender[1].p(), s));
  pat.age[1] = mix(pat.age[0], pat.age[1], s);
  pat.region[1] = mix(pat.region[0], pat.region[1], s);
  for (std::size_t q = 0; q < pat.code_indicator[1].size(); ++q) {
    pat.code_indicator[1][q] = BernoulliParam(mix(pat.code_indicator[0][q].p(), pat.code_indicator[1][q].p(), s));
    pat.code_frequency[1][q] =
        PoissonParam(mix(pat.code_frequency[0][q].lambda(), pat.code_frequency[1][q].lambda(), s));
  }
  const double t = config.physician_signal;
  auto& phy = p.physician;
  phy.gender[1] = BernoulliParam(mix(phy.gender[0].p(), phy.gender[1].p(), t));
  phy.specialty[1] = mix(phy.specialty[0], phy.specialty[1], t);
  phy.patient_count[1] = PoissonParam(mix(phy.patient_count[0].lambda(), phy.patient_count[1].lambda(), t));
  phy.claims[1] = GaussianParam(mix(phy.claims[0].mean(), phy.claims[1].mean(), t),
                                mix(phy.claims[0].cov(), phy.claims[1].cov(), t));
  return p;
}

Cohort sample_cohort(const GenConfig& config) {
  config.validate();
  const ModelParams params = effective_parameters(config);
  const std::size_t n = config.num_physicians;
  const std::size_t m = config.num_patients;
  const std::size_t q = params.schema.num_codes;
  Rng rng(config.seed);

  Cohort cohort;
  cohort.schema = params.schema;
  cohort.has_claims_features = true;

  std::bernoulli_distribution prior(config.prior_eta);
  std::vector<std::uint8_t> x(m);
  cohort.patients.reserve(m);
  const int pw = id_width(m);
  for (std::size_t j = 0; j < m; ++j) {
    x[j] = prior(rng) ? 1 : 0;
    cohort.patients.push_back(sample_patient(rng, params.patient, x[j] != 0, q));
    cohort.patients.back().id = make_id("pt", j, pw);
  }

  std::vector<std::uint8_t> y;
  Wiring wiring(n, m);
  if (config.degree_model == DegreeModel::ClassConditional) {
    wire_class_conditional(config, params, rng, x, y, wiring);
  } else {
    wire_patient_uniform(config, rng, x, y, wiring);
  }

  cohort.physicians.reserve(n);
  const int dw = id_width(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = y[i];
    auto& adj = wiring.adjacency()[i];
    std::sort(adj.begin(), adj.end());
    PhysicianRecord d;
    d.id = make_id("dr", i, dw);
    d.label = y[i] != 0;
    d.gender = params.physician.gender[c].sample(rng);
    d.specialty = static_cast<int>(params.physician.specialty[c].sample(rng));
    d.patient_count = static_cast<std::uint32_t>(adj.size());
    const auto z = params.physician.claims[c].sample(rng);
    std::copy(z.begin(), z.end(), d.claims_features.begin());
    cohort.physicians.push_back(std::move(d));
  }

  std::size_t total = 0;
  for (const auto& adj : wiring.adjacency()) total += adj.size();
  cohort.edges.reserve(total);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (auto j : wiring.adjacency()[i]) {
      cohort.edges.push_back(
          Edge{i, j, static_cast<std::uint32_t>(1 + poisson(rng, config.claim_count_extra_mean))});
    }
  }
  return cohort;
}

std::string gentruth_json(const GenConfig& config, const Cohort& cohort) {
  using nlohmann::json;
  std::size_t pos_pat = 0;
  std::size_t pos_phys = 0;
  for (const auto& p : cohort.patients) pos_pat += p.label.value_or(false) ? 1 : 0;
  for (const auto& d : cohort.physicians) pos_phys += d.label.value_or(false) ? 1 : 0;
  json j;
  j["config"] = {
      {"num_physicians", config.num_physicians},
      {"num_patients", config.num_patients},
      {"num_edges", config.num_edges ? json(*config.num_edges) : json(nullptr)},
      {"prior_eta", config.prior_eta},
      {"positive_physician_rate",
       config.positive_physician_rate.value_or(default_positive_physician_rate(config.prior_eta))},
      {"signal", config.signal},
      {"physician_signal", config.physician_signal},
      {"degree_model", config.degree_model == DegreeModel::ClassConditional ? "class_conditional" : "patient_uniform"},
      {"mean_physicians_per_patient", config.mean_physicians_per_patient},
      {"claim_count_extra_mean", config.claim_count_extra_mean},
      {"seed", config.seed},
  };
  j["generating_params"] = json::parse(params_to_json(effective_parameters(config)));
  j["realized"] = {{"physicians", cohort.physicians.size()},
                   {"patients", cohort.patients.size()},
                   {"edges", cohort.edges.size()},
                   {"positive_physicians", pos_phys},
                   {"positive_patients", pos_pat}};
  return j.dump(2) + "\n";
}

}  // namespace raregraph
