#include <cmath>

#include "raregraph/errors.hpp"
#include "raregraph/graph_engine.hpp"
#include "raregraph/logmath.hpp"

namespace raregraph {

using logmath::kNegInf;
using logmath::kPosInf;

LogMessage log_message_from_log_odds(double log_odds) {
  if (std::isnan(log_odds)) throw ArgumentError("log-odds is NaN");
  if (log_odds >= 0.0) return {-log_odds, 0.0};
  return {0.0, log_odds};
}

double log_odds_from_log_message(const LogMessage& m) {
  if (m[0] == kNegInf && m[1] == kNegInf) throw ArgumentError("message has zero mass");
  if (m[0] == kNegInf) return kPosInf;
  if (m[1] == kNegInf) return kNegInf;
  return m[1] - m[0];
}

namespace or_factor {

double log_prob_negative(double log_odds) { return -logmath::softplus(log_odds); }

double to_physician_log_odds(double log_p0) { return logmath::log1mexp(log_p0) - log_p0; }

PhysicianSide physician_side(double physician_log_odds) {
  // An inconsistent physician (NaN) sends an uninformative message.
  if (std::isnan(physician_log_odds)) physician_log_odds = 0.0;
  return {-logmath::softplus(physician_log_odds), -logmath::softplus(-physician_log_odds)};
}

namespace {

LogMessage to_patient_log(const PhysicianSide& side, double log_p0_others) {
  const double log_m0 =
      logmath::log_add(logmath::log1mexp(log_p0_others) + side.log_mu1, log_p0_others + side.log_mu0);
  return {log_m0, side.log_mu1};
}

}  // namespace

LogMessage to_patient_log(double physician_log_odds, double log_p0_others) {
  return to_patient_log(physician_side(physician_log_odds), log_p0_others);
}

double to_patient_log_odds(const PhysicianSide& side, double log_p0_others) {
  const auto m = to_patient_log(side, log_p0_others);
  if (m[0] == kNegInf && m[1] == kNegInf) return 0.0;
  if (m[0] == kNegInf) return kPosInf;
  return m[1] - m[0];
}

double to_patient_log_odds(double physician_log_odds, double log_p0_others) {
  return to_patient_log_odds(physician_side(physician_log_odds), log_p0_others);
}

}  // namespace or_factor

namespace {

double log_odds_of(const ProbPair& p) {
  if (!(p[0] >= 0.0 && p[1] >= 0.0) || std::abs(p[0] + p[1] - 1.0) > 1e-9) {
    throw ArgumentError("incoming message must be a probability pair");
  }
  return std::log(p[1]) - std::log(p[0]);
}

}  // namespace

ProbPair or_factor_message_to_physician(std::span<const ProbPair> incoming) {
  if (incoming.empty()) throw ArgumentError("OR factor needs at least one patient");
  double log_p0 = 0.0;
  for (const auto& m : incoming) log_p0 += or_factor::log_prob_negative(log_odds_of(m));
  return {std::exp(log_p0), -std::expm1(log_p0)};
}

ProbPair or_factor_message_to_patient(const ProbPair& physician_message, std::span<const ProbPair> others) {
  double log_p0 = 0.0;
  for (const auto& m : others) log_p0 += or_factor::log_prob_negative(log_odds_of(m));
  const auto m = or_factor::to_patient_log(log_odds_of(physician_message), log_p0);
  return {std::exp(m[0]), std::exp(m[1])};
}

}  // namespace raregraph
