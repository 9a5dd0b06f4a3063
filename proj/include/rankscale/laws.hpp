#pragma once

#include <array>
#include <string_view>

namespace rankscale {

/// Which quantity a saturating law is expressed in.
enum class LawVariable { rank, data, params, compute };

std::string_view to_string(LawVariable variable);
LawVariable parse_law_variable(std::string_view text);

/// Q(x) = q_inf − (x_c / x)^alpha, rising toward the ceiling q_inf.
struct SaturatingPowerLaw {
  double x_c = 1.0;
  double alpha = 1.0;
  double q_inf = 1.0;
  LawVariable variable = LawVariable::rank;

  static constexpr std::array<std::string_view, 3> parameter_names{"x_c", "alpha", "q_inf"};

  void validate() const;
};

/// Q(N, D) = [q_inf^(1/α) + (n_c/N)^(α_n/α) + (d_c/D)^(α_d/α)]^α.
///
/// Fitted with α, α_n, α_d negative so that Q increases toward q_inf as N and
/// D grow; validate() requires α_n/α > 0 and α_d/α > 0.
struct JointDataModelLaw {
  double q_inf = 1.0;
  double alpha = -1.0;
  double n_c = 1.0;
  double alpha_n = -1.0;
  double d_c = 1.0;
  double alpha_d = -1.0;

  static constexpr std::array<std::string_view, 6> parameter_names{
      "q_inf", "alpha", "n_c", "alpha_n", "d_c", "alpha_d"};

  void validate() const;
};

double evaluate(const SaturatingPowerLaw& law, double x);
double evaluate_joint(const JointDataModelLaw& law, double n, double d);

/// x such that evaluate(law, x) == q_target. Throws unreachable_target when
/// q_target ≥ q_inf.
double invert(const SaturatingPowerLaw& law, double q_target);

/// ∂Q/∂(x_c, alpha, q_inf).
std::array<double, 3> param_gradient(const SaturatingPowerLaw& law, double x);

/// ∂Q/∂(q_inf, alpha, n_c, alpha_n, d_c, alpha_d).
std::array<double, 6> param_gradient(const JointDataModelLaw& law, double n, double d);

/// (base)^exponent for base > 0, evaluated through logarithms once the base
/// leaves [1e-6, 1e6].
double ratio_power(double numerator, double denominator, double exponent);

}  // namespace rankscale
