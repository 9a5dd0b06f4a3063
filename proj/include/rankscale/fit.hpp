#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rankscale/laws.hpp"

namespace rankscale {

/// One observed quality value at up to two inputs (x, or n and d).
struct Observation {
  std::array<double, 2> input{};
  double q = 0.0;
};

struct Sample {
  double x = 0.0;
  double q = 0.0;
  bool operator==(const Sample&) const = default;
};

struct JointSample {
  double n = 0.0;
  double d = 0.0;
  double q = 0.0;
};

/// Box constraint for one parameter. Infinite ends are allowed. With
/// `log_scale` a one-sided bound is mapped through exp() instead of softplus,
/// which suits scale constants spanning many decades.
struct ParameterBound {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool log_scale = false;
};

/// A law family as seen by the solver: value and parameter gradient at an
/// observation, plus default bounds.
struct LawModel {
  std::string family;
  std::vector<std::string> parameter_names;
  std::vector<ParameterBound> bounds;
  std::function<double(std::span<const double>, const Observation&)> value;
  std::function<void(std::span<const double>, const Observation&, std::span<double>)> gradient;
};

LawModel saturating_model(LawVariable variable);
LawModel joint_model();

struct FitConfig {
  std::size_t max_iterations = 5000;
  double rss_tolerance = 1e-10;       // relative RSS change on an accepted step
  double gradient_tolerance = 1e-10;  // ∞-norm of Jᵀr in internal coordinates
  std::size_t multi_start = 16;
  std::uint64_t seed = 0;
  std::vector<ParameterBound> bounds;  // empty: the model's defaults
  std::vector<bool> frozen;            // empty: every parameter is free
  bool check_identifiability = true;

  void validate(std::size_t parameter_count) const;
};

struct FitResult {
  std::string family;
  std::vector<std::string> parameter_names;
  std::vector<double> parameters;
  double rss = 0.0;
  std::optional<double> r_squared;  // absent when the observations have no variance
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> predictions;  // input order
  std::vector<double> residuals;    // observed − predicted, input order
  std::size_t starts_attempted = 0;
  std::vector<double> rss_trace;  // initial RSS, then RSS after each accepted step

  bool underdetermined = false;
  bool non_identifiable = false;
  bool frontier_violation = false;
  std::size_t points_used = 0;

  SaturatingPowerLaw saturating_law() const;
  JointDataModelLaw joint_law() const;
};

/// Levenberg–Marquardt on r_i = q_i − law(input_i; θ) with box constraints
/// enforced by smooth reparameterization (logistic for two-sided bounds,
/// softplus or exp for one-sided ones). Damping starts at 1e-3, halves on an
/// accepted step and quadruples on a rejected one. Accepted steps strictly
/// decrease the RSS.
FitResult solve_bounded_least_squares(const LawModel& model, std::span<const Observation> data,
                                      std::span<const double> init, const FitConfig& config);

/// Multi-start fit of Q = q_inf − (x_c/x)^α; the lowest-RSS start wins.
FitResult fit_saturating_power_law(std::span<const Sample> data, const FitConfig& config,
                                   LawVariable variable = LawVariable::rank);

/// Multi-start fit of the joint (N, D) law with negative exponents.
FitResult fit_joint_law(std::span<const JointSample> data, const FitConfig& config);

/// Non-dominated (cost, quality) points, ascending in cost and strictly
/// ascending in quality. Exact duplicates collapse to one point.
std::vector<Sample> pareto_frontier(std::span<const Sample> points);

/// Pareto filter followed by a saturating-law fit of the surviving points.
/// Sets frontier_violation when an input point rises above the fitted curve by
/// more than three times the residual scale.
FitResult fit_compute_frontier(std::span<const Sample> points, const FitConfig& config);

}  // namespace rankscale
