#include "rankscale/laws.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rankscale/error.hpp"

namespace rankscale {

std::string_view to_string(LawVariable variable) {
  switch (variable) {
    case LawVariable::rank: return "rank";
    case LawVariable::data: return "data";
    case LawVariable::params: return "params";
    case LawVariable::compute: return "compute";
  }
  return "rank";
}

LawVariable parse_law_variable(std::string_view text) {
  if (text == "rank") return LawVariable::rank;
  if (text == "data") return LawVariable::data;
  if (text == "params") return LawVariable::params;
  if (text == "compute") return LawVariable::compute;
  throw Error(ErrorKind::invalid_input, "unknown law variable '" + std::string(text) + "'");
}

void SaturatingPowerLaw::validate() const {
  if (!(x_c > 0.0) || !std::isfinite(x_c)) {
    throw Error(ErrorKind::invalid_law, "x_c must be positive and finite");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorKind::invalid_law, "alpha must be positive and finite");
  }
  if (!(q_inf >= 0.0 && q_inf <= 1.0)) throw Error(ErrorKind::invalid_law, "q_inf must lie in [0, 1]");
}

void JointDataModelLaw::validate() const {
  const bool finite = std::isfinite(q_inf) && std::isfinite(alpha) && std::isfinite(n_c) &&
                      std::isfinite(alpha_n) && std::isfinite(d_c) && std::isfinite(alpha_d);
  if (!finite) throw Error(ErrorKind::invalid_law, "joint law parameters must be finite");
  if (!(q_inf > 0.0 && q_inf <= 1.0)) throw Error(ErrorKind::invalid_law, "q_inf must lie in (0, 1]");
  if (alpha == 0.0) throw Error(ErrorKind::invalid_law, "alpha must be non-zero");
  if (!(n_c > 0.0) || !(d_c > 0.0)) throw Error(ErrorKind::invalid_law, "n_c and d_c must be positive");
  if (!(alpha_n / alpha > 0.0) || !(alpha_d / alpha > 0.0)) {
    throw Error(ErrorKind::invalid_law,
                "alpha_n/alpha and alpha_d/alpha must be positive so corrections vanish at scale");
  }
}

double ratio_power(double numerator, double denominator, double exponent) {
  const double ratio = numerator / denominator;
  if (std::isfinite(ratio) && ratio >= 1e-6 && ratio <= 1e6) return std::pow(ratio, exponent);
  return std::exp(exponent * (std::log(numerator) - std::log(denominator)));
}

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || std::isnan(v)) {
    throw Error(ErrorKind::domain, std::string(name) + " must be positive");
  }
}

// Logs of the three bracket terms of the joint law.
std::array<double, 3> joint_log_terms(const JointDataModelLaw& law, double n, double d) {
  return {std::log(law.q_inf) / law.alpha,
          (law.alpha_n / law.alpha) * (std::log(law.n_c) - std::log(n)),
          (law.alpha_d / law.alpha) * (std::log(law.d_c) - std::log(d))};
}

double log_sum_exp(const std::array<double, 3>& t) {
  const double m = std::max({t[0], t[1], t[2]});
  return m + std::log(std::exp(t[0] - m) + std::exp(t[1] - m) + std::exp(t[2] - m));
}

}  // namespace

double evaluate(const SaturatingPowerLaw& law, double x) {
  require_positive(x, "x");
  return law.q_inf - ratio_power(law.x_c, x, law.alpha);
}

double evaluate_joint(const JointDataModelLaw& law, double n, double d) {
  require_positive(n, "n");
  require_positive(d, "d");
  law.validate();
  return std::exp(law.alpha * log_sum_exp(joint_log_terms(law, n, d)));
}

double invert(const SaturatingPowerLaw& law, double q_target) {
  if (!(q_target < law.q_inf)) {
    throw Error(ErrorKind::unreachable_target,
                "unreachable: exceeds fitted ceiling Q∞ (" + std::to_string(law.q_inf) + ")");
  }
  return law.x_c * std::exp(-std::log(law.q_inf - q_target) / law.alpha);
}

std::array<double, 3> param_gradient(const SaturatingPowerLaw& law, double x) {
  require_positive(x, "x");
  const double t = ratio_power(law.x_c, x, law.alpha);
  const double log_ratio = std::log(law.x_c) - std::log(x);
  return {-law.alpha * t / law.x_c, -t * log_ratio, 1.0};
}

std::array<double, 6> param_gradient(const JointDataModelLaw& law, double n, double d) {
  require_positive(n, "n");
  require_positive(d, "d");
  law.validate();
  const auto terms = joint_log_terms(law, n, d);
  const double lse = log_sum_exp(terms);
  const double q = std::exp(law.alpha * lse);
  // Softmax weights of the bracket terms.
  std::array<double, 3> w{};
  for (int i = 0; i < 3; ++i) w[i] = std::exp(terms[i] - lse);

  const double log_n = std::log(law.n_c) - std::log(n);
  const double log_d = std::log(law.d_c) - std::log(d);
  const double a2 = law.alpha * law.alpha;
  const double dlse_dalpha = w[0] * (-std::log(law.q_inf) / a2) +
                             w[1] * (-law.alpha_n / a2 * log_n) +
                             w[2] * (-law.alpha_d / a2 * log_d);
  return {
      q * w[0] / law.q_inf,
      q * (lse + law.alpha * dlse_dalpha),
      q * w[1] * law.alpha_n / law.n_c,
      q * w[1] * log_n,
      q * w[2] * law.alpha_d / law.d_c,
      q * w[2] * log_d,
  };
}

}  // namespace rankscale
