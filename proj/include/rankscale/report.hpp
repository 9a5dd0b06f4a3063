#pragma once

#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rankscale/fit.hpp"
#include "rankscale/laws.hpp"
#include "rankscale/rankme.hpp"
#include "rankscale/stats.hpp"

namespace rankscale {

/// Version stamped into every report as the top-level "schema" field.
inline constexpr int kReportSchema = 1;

using FittedLaw = std::variant<SaturatingPowerLaw, JointDataModelLaw>;

nlohmann::json to_json(const SaturatingPowerLaw& law);
nlohmann::json to_json(const JointDataModelLaw& law);
nlohmann::json to_json(const FitResult& fit);
nlohmann::json to_json(const StabilityReport& report);
nlohmann::json to_json(const CorrelationReport& report);
nlohmann::json to_json(const SelectionAgreement& agreement);

/// Reads the "family" and "parameters" members of a fit report.
FittedLaw law_from_report(const nlohmann::json& report);

/// Evaluates a fitted law at one input (second input used by the joint law).
double evaluate_law(const FittedLaw& law, double x, double d = 1.0);

/// True when the law predicts negative quality somewhere on the closed range
/// spanned by the inputs (log-spaced probe grid plus the endpoints).
bool predicts_negative(const SaturatingPowerLaw& law, double x_lo, double x_hi);
bool predicts_negative(const JointDataModelLaw& law, double n_lo, double n_hi, double d_lo,
                       double d_hi);

}  // namespace rankscale
