#include "rankscale/report.hpp"

#include <cmath>

#include "rankscale/error.hpp"

namespace rankscale {

using nlohmann::json;

json to_json(const SaturatingPowerLaw& law) {
  return {{"family", to_string(law.variable)},
          {"parameters", {{"x_c", law.x_c}, {"alpha", law.alpha}, {"q_inf", law.q_inf}}}};
}

json to_json(const JointDataModelLaw& law) {
  return {{"family", "joint"},
          {"parameters",
           {{"q_inf", law.q_inf},
            {"alpha", law.alpha},
            {"n_c", law.n_c},
            {"alpha_n", law.alpha_n},
            {"d_c", law.d_c},
            {"alpha_d", law.alpha_d}}}};
}

json to_json(const FitResult& fit) {
  json params = json::object();
  for (std::size_t i = 0; i < fit.parameters.size(); ++i) {
    params[fit.parameter_names[i]] = fit.parameters[i];
  }
  json warnings = json::array();
  if (fit.underdetermined) warnings.push_back("underdetermined");
  if (fit.non_identifiable) warnings.push_back("non-identifiable");
  if (fit.frontier_violation) warnings.push_back("frontier-violation");
  return {{"family", fit.family},
          {"parameters", params},
          {"rss", fit.rss},
          {"r_squared", fit.r_squared ? json(*fit.r_squared) : json(nullptr)},
          {"iterations", fit.iterations},
          {"converged", fit.converged},
          {"starts_attempted", fit.starts_attempted},
          {"points_used", fit.points_used},
          {"rss_trace", fit.rss_trace},
          {"underdetermined", fit.underdetermined},
          {"non_identifiable", fit.non_identifiable},
          {"frontier_violation", fit.frontier_violation},
          {"warnings", warnings}};
}

json to_json(const StabilityReport& report) {
  json entries = json::array();
  for (const auto& e : report.entries) {
    entries.push_back({{"size", e.size},
                       {"values", e.values},
                       {"mean", e.mean},
                       {"stddev", e.stddev},
                       {"relative_deviation", e.relative_deviation},
                       {"max_relative_deviation", e.max_relative_deviation}});
  }
  return {{"full_value", report.full_value},
          {"rows", report.rows},
          {"trials", report.trials},
          {"seed", report.seed},
          {"entries", entries}};
}

json to_json(const CorrelationReport& report) {
  json pairs = json::array();
  for (const auto& p : report.pairs) {
    pairs.push_back({{"configuration", p.configuration},
                     {"early_rankme", p.early_rankme},
                     {"late_quality", p.late_quality}});
  }
  return {{"early_step", report.early_step},
          {"late_step", report.late_step},
          {"pcc", report.pcc},
          {"n_pairs", report.n_pairs},
          {"pairs", pairs}};
}

json to_json(const SelectionAgreement& a) {
  return {{"agree", a.agree},
          {"best_by_rankme", a.best_by_rankme},
          {"best_by_quality", a.best_by_quality},
          {"rankme_order", a.rankme_order},
          {"quality_order", a.quality_order},
          {"extension",
           {{"note", "Spearman footrule distance between the two orderings"},
            {"spearman_footrule", a.footrule},
            {"max_footrule", a.max_footrule}}}};
}

FittedLaw law_from_report(const json& report) {
  try {
    const std::string family = report.at("family").get<std::string>();
    const json& p = report.at("parameters");
    if (family == "joint") {
      JointDataModelLaw law{p.at("q_inf").get<double>(),   p.at("alpha").get<double>(),
                            p.at("n_c").get<double>(),     p.at("alpha_n").get<double>(),
                            p.at("d_c").get<double>(),     p.at("alpha_d").get<double>()};
      law.validate();
      return law;
    }
    SaturatingPowerLaw law{p.at("x_c").get<double>(), p.at("alpha").get<double>(),
                           p.at("q_inf").get<double>(), parse_law_variable(family)};
    law.validate();
    return law;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed fit report: ") + e.what());
  }
}

double evaluate_law(const FittedLaw& law, double x, double d) {
  if (const auto* s = std::get_if<SaturatingPowerLaw>(&law)) return evaluate(*s, x);
  return evaluate_joint(std::get<JointDataModelLaw>(law), x, d);
}

namespace {

std::vector<double> probe_grid(double lo, double hi, int count) {
  std::vector<double> grid{lo, hi};
  if (hi > lo) {
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (int i = 1; i < count - 1; ++i) grid.push_back(std::exp(a + (b - a) * i / (count - 1)));
  }
  return grid;
}

}  // namespace

bool predicts_negative(const SaturatingPowerLaw& law, double x_lo, double x_hi) {
  for (double x : probe_grid(x_lo, x_hi, 256)) {
    if (evaluate(law, x) < 0.0) return true;
  }
  return false;
}

bool predicts_negative(const JointDataModelLaw& law, double n_lo, double n_hi, double d_lo,
                       double d_hi) {
  for (double n : probe_grid(n_lo, n_hi, 32)) {
    for (double d : probe_grid(d_lo, d_hi, 32)) {
      if (evaluate_joint(law, n, d) < 0.0) return true;
    }
  }
  return false;
}

}  // namespace rankscale
