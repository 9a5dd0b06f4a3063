#include "rankscale/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rankscale/error.hpp"
#include "rankscale/numerics.hpp"
#include "rankscale/random.hpp"
#include "rankscale/stats.hpp"

namespace rankscale {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Parameter transforms between bounded θ and unconstrained u.

enum class MapKind { free, two_sided, lower_log, lower_softplus, upper_log, upper_softplus };

struct ParameterMap {
  MapKind kind = MapKind::free;
  double lo = -kInf;
  double hi = kInf;

  static ParameterMap from(const ParameterBound& b) {
    ParameterMap m{MapKind::free, b.lo, b.hi};
    const bool has_lo = std::isfinite(b.lo);
    const bool has_hi = std::isfinite(b.hi);
    if (has_lo && has_hi) m.kind = MapKind::two_sided;
    else if (has_lo) m.kind = b.log_scale ? MapKind::lower_log : MapKind::lower_softplus;
    else if (has_hi) m.kind = b.log_scale ? MapKind::upper_log : MapKind::upper_softplus;
    return m;
  }

  double clamp(double u) const {
    switch (kind) {
      case MapKind::two_sided: return std::clamp(u, -30.0, 30.0);
      case MapKind::lower_log:
      case MapKind::upper_log: return std::clamp(u, -700.0, 700.0);
      case MapKind::lower_softplus:
      case MapKind::upper_softplus: return std::clamp(u, -700.0, 1e300);
      case MapKind::free: return u;
    }
    return u;
  }

  static double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }
  static double softplus(double u) { return u > 30.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }
  static double inverse_softplus(double t) { return t > 30.0 ? t + std::log(-std::expm1(-t)) : std::log(std::expm1(t)); }

  double forward(double u) const {
    switch (kind) {
      case MapKind::two_sided: return lo + (hi - lo) * sigmoid(u);
      case MapKind::lower_log: return lo + std::exp(u);
      case MapKind::lower_softplus: return lo + softplus(u);
      case MapKind::upper_log: return hi - std::exp(u);
      case MapKind::upper_softplus: return hi - softplus(u);
      case MapKind::free: return u;
    }
    return u;
  }

  double derivative(double u) const {
    switch (kind) {
      case MapKind::two_sided: {
        const double s = sigmoid(u);
        return (hi - lo) * s * (1.0 - s);
      }
      case MapKind::lower_log: return std::exp(u);
      case MapKind::lower_softplus: return sigmoid(u);
      case MapKind::upper_log: return -std::exp(u);
      case MapKind::upper_softplus: return -sigmoid(u);
      case MapKind::free: return 1.0;
    }
    return 1.0;
  }

  double inverse(double theta) const {
    switch (kind) {
      case MapKind::two_sided: {
        const double t = (theta - lo) / (hi - lo);
        return clamp(std::log(t / (1.0 - t)));
      }
      case MapKind::lower_log: return clamp(std::log(theta - lo));
      case MapKind::lower_softplus: return clamp(inverse_softplus(theta - lo));
      case MapKind::upper_log: return clamp(std::log(hi - theta));
      case MapKind::upper_softplus: return clamp(inverse_softplus(hi - theta));
      case MapKind::free: return theta;
    }
    return theta;
  }

  // Moves a value sitting exactly on a finite bound slightly inside.
  double interior(double theta) const {
    const double span = std::isfinite(hi - lo) ? hi - lo : std::max(1.0, std::fabs(theta));
    const double nudge = 1e-9 * span;
    if (std::isfinite(lo) && theta <= lo) theta = lo + nudge;
    if (std::isfinite(hi) && theta >= hi) theta = hi - nudge;
    return theta;
  }
};

// ---------------------------------------------------------------------------
// Small dense helpers for the p×p normal equations (p ≤ 6 in practice).

bool cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n,
                    std::vector<double>& x) {
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
    if (!(diag > 0.0) || !std::isfinite(diag)) return false;
    const double l = std::sqrt(diag);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = v / l;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= a[i * n + k] * b[k];
    b[i] = v / a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double v = b[i];
    for (std::size_t k = i + 1; k < n; ++k) v -= a[k * n + i] * b[k];
    b[i] = v / a[i * n + i];
  }
  x = std::move(b);
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

double sum_squares(std::span<const double> v) {
  KahanSum s;
  for (double x : v) s.add(x * x);
  return s.value();
}

// ---------------------------------------------------------------------------

struct Problem {
  const LawModel& model;
  std::span<const Observation> data;
  std::vector<ParameterMap> maps;
  std::vector<std::size_t> free;  // indices of free parameters
  std::vector<double> theta;      // full parameter vector (frozen values kept)

  void set_internal(std::span<const double> u) {
    for (std::size_t k = 0; k < free.size(); ++k) theta[free[k]] = maps[free[k]].forward(u[k]);
  }

  // Residuals q − f; returns RSS (NaN if any residual is non-finite).
  double residuals(std::vector<double>& r) const {
    r.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      r[i] = data[i].q - model.value(theta, data[i]);
      if (!std::isfinite(r[i])) return std::numeric_limits<double>::quiet_NaN();
    }
    return sum_squares(r);
  }

  // Jacobian of f with respect to the internal coordinates (row-major n×p).
  void jacobian(std::span<const double> u, std::vector<double>& jac) const {
    const std::size_t p = free.size();
    jac.assign(data.size() * p, 0.0);
    std::vector<double> grad(theta.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      model.gradient(theta, data[i], grad);
      for (std::size_t k = 0; k < p; ++k) {
        jac[i * p + k] = grad[free[k]] * maps[free[k]].derivative(u[k]);
      }
    }
  }
};

std::vector<ParameterBound> effective_bounds(const LawModel& model, const FitConfig& config) {
  return config.bounds.empty() ? model.bounds : config.bounds;
}

std::vector<Observation> canonical_order(std::span<const Observation> data) {
  std::vector<Observation> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end(), [](const Observation& a, const Observation& b) {
    if (a.input[0] != b.input[0]) return a.input[0] < b.input[0];
    if (a.input[1] != b.input[1]) return a.input[1] < b.input[1];
    return a.q < b.q;
  });
  return sorted;
}

double quantile(std::vector<double> values, double level) {
  std::sort(values.begin(), values.end());
  const double pos = level * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  // Geometric interpolation: inputs are positive and often span decades.
  const double frac = pos - static_cast<double>(lo);
  return std::exp((1.0 - frac) * std::log(values[lo]) + frac * std::log(values[hi]));
}

void fill_outputs(const LawModel& model, std::span<const Observation> data, FitResult& result) {
  result.predictions.resize(data.size());
  result.residuals.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    result.predictions[i] = model.value(result.parameters, data[i]);
    result.residuals[i] = data[i].q - result.predictions[i];
  }
  result.rss = sum_squares(result.residuals);
  result.r_squared.reset();
  if (data.size() >= 2) {
    std::vector<double> q(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) q[i] = data[i].q;
    const bool varied = std::any_of(q.begin(), q.end(), [&](double v) { return v != q.front(); });
    if (varied) result.r_squared = r_squared(q, result.predictions);
  }
  result.points_used = data.size();
}

std::size_t free_count(const FitConfig& config, std::size_t parameter_count) {
  if (config.frozen.empty()) return parameter_count;
  return static_cast<std::size_t>(std::count(config.frozen.begin(), config.frozen.end(), false));
}

using StartGenerator = std::function<std::vector<double>(std::size_t, Rng&)>;

// Best of config.multi_start solver runs over canonically ordered data.
FitResult multi_start_fit(const LawModel& model, std::span<const Observation> data,
                          const FitConfig& config, const StartGenerator& make_start) {
  const auto sorted = canonical_order(data);
  std::optional<FitResult> best;
  std::size_t attempted = 0;
  for (std::size_t s = 0; s < config.multi_start; ++s) {
    Rng rng(derive_seed(config.seed, s));
    const auto init = make_start(s, rng);
    ++attempted;
    try {
      FitResult r = solve_bounded_least_squares(model, sorted, init, config);
      const bool better = !best || r.rss < best->rss ||
                          (r.rss == best->rss && r.iterations < best->iterations);
      if (better) best = std::move(r);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::divergent_start) throw;
    }
  }
  if (!best) throw Error(ErrorKind::divergent_start, "every fit start produced non-finite residuals");
  best->starts_attempted = attempted;
  fill_outputs(model, data, *best);
  best->underdetermined = data.size() < free_count(config, model.parameter_names.size());
  return std::move(*best);
}

// Conditioning of the Jacobian with columns scaled by |θ| (relative sensitivities).
bool poorly_conditioned(const LawModel& model, std::span<const Observation> data,
                        const FitResult& fit, const FitConfig& config) {
  std::vector<std::size_t> free;
  for (std::size_t j = 0; j < fit.parameters.size(); ++j) {
    if (config.frozen.empty() || !config.frozen[j]) free.push_back(j);
  }
  if (data.size() < free.size()) return true;
  Matrix jac(data.size(), free.size());
  std::vector<double> grad(fit.parameters.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    model.gradient(fit.parameters, data[i], grad);
    for (std::size_t k = 0; k < free.size(); ++k) {
      const double scale = std::max(std::fabs(fit.parameters[free[k]]), 1e-300);
      jac(i, k) = grad[free[k]] * scale;
    }
  }
  if (!all_finite(jac)) return true;
  const Spectrum s = singular_values(jac);
  return s.front() == 0.0 || s.back() <= 1e-9 * s.front();
}

// Refits on a seeded 80% subset and reports whether any free parameter moved
// by more than half its magnitude.
bool unstable_under_subsampling(std::span<const Observation> data, const FitResult& fit,
                                const FitConfig& config,
                                const std::function<FitResult(std::span<const Observation>,
                                                              const FitConfig&)>& refit) {
  const std::size_t n = data.size();
  const std::size_t drop = std::max<std::size_t>(1, n / 5);
  const std::size_t p = free_count(config, fit.parameters.size());
  if (n < 5 || n - drop < p) return false;

  auto sorted = canonical_order(data);
  Rng rng(derive_seed(config.seed, 0x5b5e7ULL));
  for (std::size_t i = 0; i < drop; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(sorted[i], sorted[j]);
  }
  std::vector<Observation> subset(sorted.begin() + static_cast<std::ptrdiff_t>(drop), sorted.end());
  FitConfig sub_config = config;
  sub_config.check_identifiability = false;
  const FitResult sub = refit(subset, sub_config);
  for (std::size_t j = 0; j < fit.parameters.size(); ++j) {
    if (!config.frozen.empty() && config.frozen[j]) continue;
    const double base = std::fabs(fit.parameters[j]);
    if (std::fabs(sub.parameters[j] - fit.parameters[j]) > 0.5 * base) return true;
  }
  return false;
}

std::vector<Observation> to_observations(std::span<const Sample> data) {
  std::vector<Observation> obs;
  obs.reserve(data.size());
  for (const auto& s : data) {
    if (!(s.x > 0.0) || !std::isfinite(s.x)) {
      throw Error(ErrorKind::domain, "law inputs must be positive and finite");
    }
    if (!std::isfinite(s.q)) throw Error(ErrorKind::invalid_input, "observed quality is not finite");
    obs.push_back({{s.x, 1.0}, s.q});
  }
  return obs;
}

std::vector<Observation> to_observations(std::span<const JointSample> data) {
  std::vector<Observation> obs;
  obs.reserve(data.size());
  for (const auto& s : data) {
    if (!(s.n > 0.0) || !(s.d > 0.0) || !std::isfinite(s.n) || !std::isfinite(s.d)) {
      throw Error(ErrorKind::domain, "joint law inputs must be positive and finite");
    }
    if (!std::isfinite(s.q)) throw Error(ErrorKind::invalid_input, "observed quality is not finite");
    obs.push_back({{s.n, s.d}, s.q});
  }
  return obs;
}

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

constexpr std::array<double, 5> kQuantileLevels{0.5, 0.25, 0.75, 0.1, 0.9};

std::array<double, 3> ceiling_seeds(std::span<const Observation> data, const ParameterMap& map) {
  double q_max = -kInf;
  for (const auto& o : data) q_max = std::max(q_max, o.q);
  const double top = std::isfinite(map.hi) ? map.hi : 1.0;
  const double near = q_max + 0.02 * std::max(top - q_max, 0.0);
  return {map.interior(std::clamp(near, map.lo, top)),
          map.interior(std::clamp(0.5 * (q_max + top), map.lo, top)), map.interior(top)};
}

FitResult fit_saturating_observations(std::span<const Observation> obs, const FitConfig& config,
                                      LawVariable variable) {
  const LawModel model = saturating_model(variable);
  config.validate(model.parameter_names.size());
  if (obs.empty()) throw Error(ErrorKind::insufficient_data, "no data points to fit");
  const auto bounds = effective_bounds(model, config);
  const auto q_map = ParameterMap::from(bounds[2]);
  const auto q_seeds = ceiling_seeds(obs, q_map);
  std::vector<double> xs;
  for (const auto& o : obs) xs.push_back(o.input[0]);

  auto make_start = [&](std::size_t s, Rng& rng) {
    const double alpha = log_uniform(rng, 0.1, 2.0);
    const double x_c = quantile(xs, kQuantileLevels[(s / 3) % kQuantileLevels.size()]);
    return std::vector<double>{ParameterMap::from(bounds[0]).interior(x_c),
                               ParameterMap::from(bounds[1]).interior(alpha), q_seeds[s % 3]};
  };
  FitResult best = multi_start_fit(model, obs, config, make_start);
  if (config.check_identifiability) {
    best.non_identifiable =
        poorly_conditioned(model, obs, best, config) ||
        unstable_under_subsampling(obs, best, config, [&](auto subset, const FitConfig& c) {
          return fit_saturating_observations(subset, c, variable);
        });
  }
  return best;
}

FitResult fit_joint_observations(std::span<const Observation> obs, const FitConfig& base_config) {
  const LawModel model = joint_model();
  base_config.validate(model.parameter_names.size());
  if (obs.empty()) throw Error(ErrorKind::insufficient_data, "no data points to fit");
  FitConfig config = base_config;
  const auto bounds = effective_bounds(model, config);
  const auto q_seeds = ceiling_seeds(obs, ParameterMap::from(bounds[0]));
  std::vector<double> ns;
  std::vector<double> ds;
  for (const auto& o : obs) {
    ns.push_back(o.input[0]);
    ds.push_back(o.input[1]);
  }

  // A variable without spread cannot separate its correction term from q_inf;
  // pin that term far below resolution and report the fit as non-identifiable.
  const auto [n_min, n_max] = std::minmax_element(ns.begin(), ns.end());
  const auto [d_min, d_max] = std::minmax_element(ds.begin(), ds.end());
  const bool n_constant = *n_min == *n_max;
  const bool d_constant = *d_min == *d_max;
  if (config.frozen.empty()) config.frozen.assign(model.parameter_names.size(), false);
  if (n_constant) config.frozen[2] = config.frozen[3] = true;
  if (d_constant) config.frozen[4] = config.frozen[5] = true;

  auto make_start = [&](std::size_t s, Rng& rng) {
    std::vector<double> init(6);
    init[0] = q_seeds[s % 3];
    init[1] = -log_uniform(rng, 0.1, 2.0);
    init[2] = n_constant ? *n_min * 1e-250
                         : quantile(ns, kQuantileLevels[(s / 3) % kQuantileLevels.size()]);
    init[3] = n_constant ? -1.0 : -log_uniform(rng, 0.1, 2.0);
    init[4] = d_constant ? *d_min * 1e-250
                         : quantile(ds, kQuantileLevels[(s / 3 + s) % kQuantileLevels.size()]);
    init[5] = d_constant ? -1.0 : -log_uniform(rng, 0.1, 2.0);
    for (std::size_t j = 0; j < init.size(); ++j) {
      if (!config.frozen[j]) init[j] = ParameterMap::from(bounds[j]).interior(init[j]);
    }
    return init;
  };
  FitResult best = multi_start_fit(model, obs, config, make_start);
  if (config.check_identifiability) {
    best.non_identifiable =
        n_constant || d_constant || poorly_conditioned(model, obs, best, config) ||
        unstable_under_subsampling(obs, best, config, [&](auto subset, const FitConfig& c) {
          FitConfig sub = c;
          sub.frozen = base_config.frozen;
          return fit_joint_observations(subset, sub);
        });
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------

LawModel saturating_model(LawVariable variable) {
  LawModel m;
  m.family = std::string(to_string(variable));
  m.parameter_names = {"x_c", "alpha", "q_inf"};
  m.bounds = {{0.0, kInf, true}, {0.0, kInf, false}, {0.0, 1.0, false}};
  m.value = [variable](std::span<const double> t, const Observation& o) {
    return evaluate(SaturatingPowerLaw{t[0], t[1], t[2], variable}, o.input[0]);
  };
  m.gradient = [variable](std::span<const double> t, const Observation& o, std::span<double> g) {
    const auto d = param_gradient(SaturatingPowerLaw{t[0], t[1], t[2], variable}, o.input[0]);
    std::copy(d.begin(), d.end(), g.begin());
  };
  return m;
}

LawModel joint_model() {
  LawModel m;
  m.family = "joint";
  m.parameter_names = {"q_inf", "alpha", "n_c", "alpha_n", "d_c", "alpha_d"};
  m.bounds = {{0.0, 1.0, false},  {-kInf, 0.0, false}, {0.0, kInf, true},
              {-kInf, 0.0, false}, {0.0, kInf, true},   {-kInf, 0.0, false}};
  m.value = [](std::span<const double> t, const Observation& o) {
    return evaluate_joint(JointDataModelLaw{t[0], t[1], t[2], t[3], t[4], t[5]}, o.input[0],
                          o.input[1]);
  };
  m.gradient = [](std::span<const double> t, const Observation& o, std::span<double> g) {
    const auto d = param_gradient(JointDataModelLaw{t[0], t[1], t[2], t[3], t[4], t[5]},
                                  o.input[0], o.input[1]);
    std::copy(d.begin(), d.end(), g.begin());
  };
  return m;
}

void FitConfig::validate(std::size_t parameter_count) const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::invalid_config, msg); };
  if (max_iterations < 1) fail("max_iterations must be >= 1");
  if (!(rss_tolerance > 0.0) || !(gradient_tolerance > 0.0)) fail("tolerances must be positive");
  if (multi_start < 1) fail("multi_start must be >= 1");
  if (!bounds.empty()) {
    if (bounds.size() != parameter_count) fail("bounds must cover every parameter");
    for (const auto& b : bounds) {
      if (!(b.lo < b.hi)) fail("each bound needs lo < hi");
    }
  }
  if (!frozen.empty() && frozen.size() != parameter_count) {
    fail("frozen mask must cover every parameter");
  }
}

SaturatingPowerLaw FitResult::saturating_law() const {
  if (parameters.size() != 3) throw Error(ErrorKind::invalid_law, "not a saturating fit");
  return {parameters[0], parameters[1], parameters[2], parse_law_variable(family)};
}

JointDataModelLaw FitResult::joint_law() const {
  if (parameters.size() != 6) throw Error(ErrorKind::invalid_law, "not a joint fit");
  return {parameters[0], parameters[1], parameters[2], parameters[3], parameters[4], parameters[5]};
}

FitResult solve_bounded_least_squares(const LawModel& model, std::span<const Observation> data,
                                      std::span<const double> init, const FitConfig& config) {
  const std::size_t n_params = model.parameter_names.size();
  config.validate(n_params);
  if (data.empty()) throw Error(ErrorKind::insufficient_data, "no data points to fit");
  if (init.size() != n_params) throw Error(ErrorKind::invalid_config, "initial vector has wrong length");
  const auto bounds = effective_bounds(model, config);

  Problem problem{model, data, {}, {}, std::vector<double>(init.begin(), init.end())};
  std::vector<double> u;
  for (std::size_t j = 0; j < n_params; ++j) {
    const auto map = ParameterMap::from(bounds[j]);
    problem.maps.push_back(map);
    if (!config.frozen.empty() && config.frozen[j]) continue;
    if (!(init[j] >= map.lo && init[j] <= map.hi)) {
      throw Error(ErrorKind::invalid_config, "initial " + model.parameter_names[j] +
                                                 " lies outside its bounds");
    }
    problem.free.push_back(j);
    u.push_back(map.inverse(map.interior(init[j])));
  }
  problem.set_internal(u);

  FitResult result;
  result.family = model.family;
  result.parameter_names = model.parameter_names;

  std::vector<double> r;
  double rss = problem.residuals(r);
  if (!std::isfinite(rss)) {
    throw Error(ErrorKind::divergent_start, "residuals are not finite at the initial point");
  }
  result.rss_trace.push_back(rss);

  double q_scale = 0.0;
  for (const auto& o : data) q_scale += o.q * o.q;
  const double exact_fit = 1e-28 * std::max(q_scale, 1e-300);

  const std::size_t p = u.size();
  double lambda = 1e-3;
  std::vector<double> jac;
  std::vector<double> jtj(p * p);
  std::vector<double> jtr(p);
  std::vector<double> step;
  std::vector<double> trial_r;
  bool need_jacobian = true;

  for (std::size_t iter = 1; iter <= config.max_iterations; ++iter) {
    result.iterations = iter;
    if (p == 0 || rss <= exact_fit) {
      result.converged = true;
      break;
    }
    if (need_jacobian) {
      problem.jacobian(u, jac);
      std::fill(jtj.begin(), jtj.end(), 0.0);
      std::fill(jtr.begin(), jtr.end(), 0.0);
      for (std::size_t i = 0; i < data.size(); ++i) {
        const double* row = jac.data() + i * p;
        for (std::size_t a = 0; a < p; ++a) {
          jtr[a] += row[a] * r[i];
          for (std::size_t b = 0; b <= a; ++b) jtj[a * p + b] += row[a] * row[b];
        }
      }
      for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = 0; b < a; ++b) jtj[b * p + a] = jtj[a * p + b];
      }
      need_jacobian = false;
      double g_norm = 0.0;
      for (double g : jtr) g_norm = std::max(g_norm, std::fabs(g));
      if (!std::isfinite(g_norm)) break;
      if (g_norm <= config.gradient_tolerance) {
        result.converged = true;
        break;
      }
    }

    double max_diag = 0.0;
    for (std::size_t a = 0; a < p; ++a) max_diag = std::max(max_diag, jtj[a * p + a]);
    std::vector<double> damped = jtj;
    for (std::size_t a = 0; a < p; ++a) {
      const double d = std::max(jtj[a * p + a], 1e-12 * max_diag + 1e-300);
      damped[a * p + a] += lambda * d;
    }
    if (!cholesky_solve(damped, jtr, p, step)) {
      lambda *= 4.0;
      if (lambda > 1e16) {
        result.converged = true;
        break;
      }
      continue;
    }

    std::vector<double> u_trial(p);
    for (std::size_t k = 0; k < p; ++k) {
      u_trial[k] = problem.maps[problem.free[k]].clamp(u[k] + step[k]);
    }
    const std::vector<double> theta_saved = problem.theta;
    problem.set_internal(u_trial);
    double trial_rss = std::numeric_limits<double>::quiet_NaN();
    try {
      trial_rss = problem.residuals(trial_r);
    } catch (const Error&) {
      // Invalid trial parameters count as a rejected step.
    }

    if (std::isfinite(trial_rss) && trial_rss < rss) {
      const double relative_change = (rss - trial_rss) / rss;
      u = std::move(u_trial);
      r.swap(trial_r);
      rss = trial_rss;
      result.rss_trace.push_back(rss);
      lambda = std::max(lambda * 0.5, 1e-15);
      need_jacobian = true;
      if (relative_change <= config.rss_tolerance) {
        result.converged = true;
        break;
      }
    } else {
      problem.theta = theta_saved;
      lambda *= 4.0;
      // No descent even for tiny steps: numerically stationary.
      if (lambda > 1e16) {
        result.converged = true;
        break;
      }
    }
  }

  problem.set_internal(u);
  result.parameters = problem.theta;
  fill_outputs(model, data, result);
  result.starts_attempted = 1;
  result.underdetermined = data.size() < p;
  return result;
}

FitResult fit_saturating_power_law(std::span<const Sample> data, const FitConfig& config,
                                   LawVariable variable) {
  const auto obs = to_observations(data);
  return fit_saturating_observations(obs, config, variable);
}

FitResult fit_joint_law(std::span<const JointSample> data, const FitConfig& config) {
  const auto obs = to_observations(data);
  return fit_joint_observations(obs, config);
}

std::vector<Sample> pareto_frontier(std::span<const Sample> points) {
  std::vector<Sample> sorted(points.begin(), points.end());
  for (const auto& s : sorted) {
    if (!(s.x > 0.0) || !std::isfinite(s.q)) {
      throw Error(ErrorKind::domain, "frontier points need positive cost and finite quality");
    }
  }
  std::sort(sorted.begin(), sorted.end(), [](const Sample& a, const Sample& b) {
    return a.x != b.x ? a.x < b.x : a.q > b.q;
  });
  std::vector<Sample> frontier;
  for (const auto& s : sorted) {
    if (frontier.empty() || s.q > frontier.back().q) frontier.push_back(s);
  }
  return frontier;
}

FitResult fit_compute_frontier(std::span<const Sample> points, const FitConfig& config) {
  const auto frontier = pareto_frontier(points);
  if (frontier.size() < 3) {
    throw Error(ErrorKind::insufficient_data,
                "insufficient frontier data: " + std::to_string(frontier.size()) +
                    " non-dominated points, need at least 3");
  }
  FitResult fit = fit_saturating_power_law(frontier, config, LawVariable::compute);
  const auto law = fit.saturating_law();
  const double scale = std::sqrt(fit.rss / static_cast<double>(frontier.size()));
  double q_mag = 0.0;
  for (const auto& s : points) q_mag = std::max(q_mag, std::fabs(s.q));
  const double tolerance = 3.0 * scale + 1e-9 * std::max(q_mag, 1.0);
  for (const auto& s : points) {
    if (s.q > evaluate(law, s.x) + tolerance) fit.frontier_violation = true;
  }
  return fit;
}

}  // namespace rankscale
