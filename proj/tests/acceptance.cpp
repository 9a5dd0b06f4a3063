// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fixtures.hpp"
#include "planted.hpp"
#include "rankscale/cli.hpp"
#include "rankscale/embedding_io.hpp"
#include "rankscale/fit.hpp"
#include "rankscale/rankme.hpp"
#include "rankscale/registry.hpp"
#include "rankscale/report.hpp"
#include "rankscale/stats.hpp"
#include "rankscale/synth.hpp"
#include "support.hpp"

using namespace rankscale;
using namespace rankscale::testing;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "failed: " + what;
    }
  }
  void note(const std::string& text) {
    if (!detail.empty()) detail += "; ";
    detail += text;
  }
};

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome parameter_accounting() {
  Outcome o;
  const auto anchor = [](std::size_t depth, std::size_t embed) {
    for (const auto& row : kPublishedCounts) {
      if (row.depth == depth && row.embed == embed) return ParamAnchor{depth, embed, row.millions * 1e6};
    }
    return ParamAnchor{};
  };
  const auto overhead = calibrate_family_overhead(anchor(12, 128), anchor(12, 768));
  double worst = 0.0;
  std::size_t validated = 0;
  for (const auto& row : kPublishedCounts) {
    const double est = static_cast<double>(estimate_param_count(family_config(row.depth, row.embed), overhead));
    const double err = std::abs(est - row.millions * 1e6) / (row.millions * 1e6);
    worst = std::max(worst, err);
    const bool anchor_row = row.depth == 12 && (row.embed == 128 || row.embed == 768);
    if (!anchor_row) ++validated;
    o.require(err <= 0.03, "en" + std::to_string(row.embed) + "-" + std::to_string(row.depth));
  }
  o.require(validated == 14, "14 held-out rows");
  o.note("2 calibration rows, 14 held out, max rel err " + fmt("%.4f%%", 100 * worst));
  return o;
}

double brute_force_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<long double>(x.size());
  long double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const long double mx = sx / n, my = sy / n;
  long double cxy = 0, cxx = 0, cyy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cxy += (x[i] - mx) * (y[i] - my);
    cxx += (x[i] - mx) * (x[i] - mx);
    cyy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(cxy / std::sqrt(cxx * cyy));
}

Outcome score_analysis() {
  Outcome o;
  const auto records = published_score_records();
  const auto sel = selection_agreement(records, kEarlyStep, kLateStep);
  o.require(sel.agree, "selection agreement");
  o.require(sel.best_by_rankme == "en1024-12" && sel.best_by_quality == "en1024-12", "argmax en1024-12");
  const auto corr = early_late_correlation(records, kEarlyStep, kLateStep);
  std::vector<double> x, y;
  for (const auto& row : kPublishedScores) {
    x.push_back(row.rankme_early);
    y.push_back(row.quality_late);
  }
  const double oracle = brute_force_pearson(x, y);
  o.require(std::abs(corr.pcc - oracle) <= 1e-12, "pcc vs brute force");
  o.note("pcc " + fmt("%.12f", corr.pcc) + ", |diff| " + fmt("%.1e", std::abs(corr.pcc - oracle)) +
         ", best " + sel.best_by_rankme);
  return o;
}

Outcome rankme_suite() {
  Outcome o;
  o.require(std::abs(rankme_from_spectrum(std::vector<double>{5, 0, 0, 0}).value - 1.0) <= 1e-3, "rank-1");
  for (std::size_t k : {4u, 16u, 128u}) {
    const double v = rankme_from_spectrum(std::vector<double>(k, 1.0)).value;
    o.require(std::abs(v - static_cast<double>(k)) / static_cast<double>(k) <= 5e-3, "uniform K=" + std::to_string(k));
  }
  const double hand = rankme_from_spectrum(std::vector<double>{4, 2, 1, 1}).value;
  o.require(std::abs(hand - 3.3636) <= 1e-3, "(4,2,1,1)");
  double worst_scale = 0.0, worst_rot = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix z = gaussian_matrix(40 + seed, 8 + seed % 5, seed);
    const double base = rankme(z).value;
    worst_scale = std::max(worst_scale, rel_diff(rankme(scaled(z, 0.5 + seed)).value, base));
    const Matrix q = random_orthogonal(z.rows(), 1000 + seed);
    worst_rot = std::max(worst_rot, std::abs(rankme(multiply(q, z)).value - base));
  }
  o.require(worst_scale <= 1e-9, "scale invariance");
  o.require(worst_rot <= 1e-6, "orthogonal invariance");
  o.note("(4,2,1,1) -> " + fmt("%.6f", hand) + ", scale " + fmt("%.1e", worst_scale) + ", rotation " +
         fmt("%.1e", worst_rot));
  return o;
}

Outcome spectrum_round_trip() {
  Outcome o;
  struct Case {
    const char* spec;
    std::size_t rows;
  };
  // Dynamic range kept above 1e-6; see the README for the Gram-path limit.
  const Case cases[] = {{"explicit:4,2,1,1", 16},  {"uniform:32", 64},         {"geometric:0.8:64", 1000},
                        {"power:1.5:100", 500},    {"geometric:0.9:128", 2048}, {"power:2:256", 4096},
                        {"geometric:0.98:512", 8192}};
  double worst = 0.0;
  std::uint64_t seed = 0;
  for (const auto& c : cases) {
    const auto spec = SpectrumSpec::parse(c.spec);
    const double err = spectrum_mismatch(singular_values(synth_embeddings(spec, c.rows, ++seed)), spec.values());
    worst = std::max(worst, err);
    o.require(err <= 1e-8, c.spec);
  }
  double worst_oracle = 0.0;
  for (std::uint64_t s = 0; s < 30; ++s) {
    const std::size_t cols = 1 + (s * 11) % 64;
    const std::size_t rows = cols + (s * 37) % 200 + 1;
    const Matrix m = s % 3 == 0 ? synth_embeddings(SpectrumSpec::geometric(0.85, cols), rows, s)
                                : gaussian_matrix(rows, cols, s);
    worst_oracle = std::max(worst_oracle, spectrum_mismatch(singular_values(m), gram_eigenvalues_oracle(m)));
  }
  o.require(worst_oracle <= 1e-9, "jacobi oracle agreement");
  o.note("round trip " + fmt("%.1e", worst) + ", oracle " + fmt("%.1e", worst_oracle));
  return o;
}

Outcome saturating_recovery() {
  Outcome o;
  Rng rng(2024);
  const auto bounds = saturating_model(LawVariable::rank).bounds;
  double worst = 0.0, worst_r2 = 1.0;
  for (int t = 0; t < 50; ++t) {
    const auto law = random_saturating_law(rng);
    const auto data = sample_law(law, 20);
    FitConfig config;
    config.seed = static_cast<std::uint64_t>(t);
    const FitResult fit = fit_saturating_power_law(data, config);
    const double truth[3] = {law.x_c, law.alpha, law.q_inf};
    const double err = max_relative_error(fit.parameters, truth);
    worst = std::max(worst, err);
    worst_r2 = std::min(worst_r2, fit.r_squared.value_or(0.0));
    o.require(err <= 0.01, "law " + std::to_string(t) + " parameters");
    o.require(fit.r_squared.value_or(0.0) >= 0.9999, "law " + std::to_string(t) + " r2");
    o.require(trace_monotone(fit.rss_trace), "law " + std::to_string(t) + " rss trace");
    for (std::size_t j = 0; j < 3; ++j) {
      o.require(fit.parameters[j] > bounds[j].lo && fit.parameters[j] < bounds[j].hi,
                "law " + std::to_string(t) + " bounds");
    }
  }
  o.note("50 laws, max rel err " + fmt("%.1e", worst) + ", min R2 " + fmt("%.8f", worst_r2));
  return o;
}

Outcome joint_recovery() {
  Outcome o;
  Rng rng(7);
  double worst = 0.0, worst_r2 = 1.0;
  for (int t = 0; t < 10; ++t) {
    const auto law = random_joint_law(rng);
    const auto data = joint_grid(law);
    FitConfig config;
    config.seed = static_cast<std::uint64_t>(t);
    const FitResult fit = fit_joint_law(data, config);
    const double truth[6] = {law.q_inf, law.alpha, law.n_c, law.alpha_n, law.d_c, law.alpha_d};
    const double err = max_relative_error(fit.parameters, truth);
    worst = std::max(worst, err);
    worst_r2 = std::min(worst_r2, fit.r_squared.value_or(0.0));
    o.require(err <= 0.05, "instance " + std::to_string(t) + " parameters");
    o.require(fit.r_squared.value_or(0.0) >= 0.999, "instance " + std::to_string(t) + " r2");

    const auto fitted = fit.joint_law();
    const auto ns = log_grid(3e6, 7e8, 5), ds = log_grid(10.0, 1e4, 5);
    bool monotone = true;
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) {
        const double q = evaluate_joint(fitted, ns[i], ds[j]);
        if (i + 1 < 5 && evaluate_joint(fitted, ns[i + 1], ds[j]) < q) monotone = false;
        if (j + 1 < 5 && evaluate_joint(fitted, ns[i], ds[j + 1]) < q) monotone = false;
      }
    }
    o.require(monotone, "instance " + std::to_string(t) + " monotone");
  }
  o.note("10 grids, max rel err " + fmt("%.1e", worst) + ", min R2 " + fmt("%.10f", worst_r2));
  return o;
}

std::set<std::pair<double, double>> domination_oracle(const std::vector<Sample>& pts) {
  std::set<std::pair<double, double>> keep;
  for (const auto& p : pts) {
    bool dominated = false;
    for (const auto& q : pts) {
      if (q.x <= p.x && q.q >= p.q && (q.x < p.x || q.q > p.q)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) keep.insert({p.x, p.q});
  }
  return keep;
}

Outcome frontier() {
  Outcome o;
  Rng rng(55);
  std::size_t mismatches = 0;
  for (int cloud = 0; cloud < 100; ++cloud) {
    std::vector<Sample> pts(1 + rng.below(200));
    const bool coarse = cloud % 2 == 0;  // coarse grids force ties
    for (auto& p : pts) {
      p.x = coarse ? 1.0 + static_cast<double>(rng.below(30)) : log_uniform(rng, 1e15, 1e20);
      p.q = coarse ? static_cast<double>(rng.below(25)) / 25.0 : rng.uniform(0.2, 0.9);
    }
    const auto front = pareto_frontier(pts);
    std::set<std::pair<double, double>> got;
    for (const auto& f : front) got.insert({f.x, f.q});
    if (got != domination_oracle(pts) || got.size() != front.size()) ++mismatches;
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " clouds differ from the oracle");

  const SaturatingPowerLaw truth{3e16, 0.45, 0.83, LawVariable::compute};
  std::vector<Sample> pts;
  for (double c : log_grid(1e16, 1e20, 15)) {
    pts.push_back({c, evaluate(truth, c)});
    for (int k = 0; k < 4; ++k) {
      pts.push_back({c * rng.uniform(1.0, 4.0), evaluate(truth, c) - rng.uniform(0.005, 0.3)});
    }
  }
  const FitResult fit = fit_compute_frontier(pts, FitConfig{});
  const double expected[3] = {truth.x_c, truth.alpha, truth.q_inf};
  const double err = max_relative_error(fit.parameters, expected);
  o.require(err <= 0.02, "planted frontier recovery");
  o.require(!fit.frontier_violation, "no envelope violation");
  o.note("100 clouds match, planted frontier max rel err " + fmt("%.1e", err) + " with " +
         std::to_string(pts.size() - fit.points_used) + " decoys");
  return o;
}

Outcome r_squared_and_pearson() {
  Outcome o;
  const std::vector<double> y{1, 2, 3};
  o.require(r_squared(y, y) == 1.0, "perfect fit");
  o.require(r_squared(y, std::vector<double>{2, 2, 2}) == 0.0, "mean prediction");
  o.require(r_squared(y, std::vector<double>{1, 2, 4}) == 0.5, "(1,2,3)/(1,2,4)");
  Rng rng(8);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(3 + rng.below(60)), b(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = rng.normal();
      b[i] = rng.uniform(-1, 1) * a[i] + rng.normal();
    }
    const double base = pearson(a, b);
    const double scale = rng.uniform(0.01, 100), shift = rng.uniform(-50, 50);
    auto a2 = a;
    for (double& v : a2) v = scale * v + shift;
    worst = std::max({worst, std::abs(pearson(b, a) - base), std::abs(pearson(a2, b) - base)});
  }
  o.require(worst <= 1e-12, "pearson symmetry / affine invariance");
  o.note("max pearson drift " + fmt("%.1e", worst));
  return o;
}

Outcome subsample_stability() {
  Outcome o;
  const Matrix z = synth_embeddings(SpectrumSpec::geometric(0.98, 256), 50'000, 9);
  const std::vector<std::size_t> sizes{5'000, 8'000, 20'000};
  const auto report = subsample_stability_sweep(z, sizes, 3, 21);
  std::string summary = "full " + fmt("%.3f", report.full_value);
  for (const auto& e : report.entries) {
    o.require(e.max_relative_deviation < 0.02, "size " + std::to_string(e.size));
    summary += ", " + std::to_string(e.size) + ": " + fmt("%.3f%%", 100 * e.max_relative_deviation);
  }
  o.note(summary);
  return o;
}

struct CliRun {
  int code;
  std::string out;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str()};
}

bool stable_round_trip(const std::string& text) {
  const json parsed = json::parse(text);
  const std::string again = parsed.dump(2) + "\n";
  return again == text && json::parse(again) == parsed;
}

Outcome end_to_end() {
  Outcome o;
  const auto dir = std::filesystem::temp_directory_path() / "rankscale_acceptance";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto path = [&](const std::string& name) { return (dir / name).string(); };

  const SaturatingPowerLaw planted{2.0, 0.5, 0.9};
  std::vector<CheckpointRecord> records;
  bool stable = true;
  const auto ks = log_grid(4, 256, 20);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const auto k = static_cast<std::size_t>(std::lround(ks[i]));
    const std::string file = path("emb" + std::to_string(i) + ".embr");
    const auto s = cli({"synth", "--spec", "uniform:" + std::to_string(k), "--rows", std::to_string(2 * k + 8),
                        "--seed", std::to_string(i), "--out", file});
    const auto r = cli({"rank", file, "--seed", "1"});
    o.require(s.code == 0 && r.code == 0, "synth/rank " + std::to_string(i));
    if (s.code != 0 || r.code != 0) return o;
    stable = stable && stable_round_trip(s.out) && stable_round_trip(r.out);
    stable = stable && cli({"rank", file, "--seed", "1"}).out == r.out;

    CheckpointRecord rec;
    rec.config = family_config(12, 64 * (1 + i % 8));
    rec.data_hours = 100.0 + static_cast<double>(i);
    rec.steps = 50'000;
    rec.step_of_measurement = 50'000;
    rec.rankme = json::parse(r.out)["rankme"].get<double>();
    rec.quality = evaluate(planted, *rec.rankme);
    records.push_back(rec);
  }
  save_checkpoints(path("checkpoints.csv"), records);

  const auto fit = cli({"fit", path("checkpoints.csv"), "--law", "rank", "--seed", "3"});
  o.require(fit.code == 0, "fit exit code");
  if (fit.code != 0) return o;
  stable = stable && stable_round_trip(fit.out);
  stable = stable && cli({"fit", path("checkpoints.csv"), "--law", "rank", "--seed", "3"}).out == fit.out;
  const json report = json::parse(fit.out);
  const double got[3] = {report["parameters"]["x_c"].get<double>(), report["parameters"]["alpha"].get<double>(),
                         report["parameters"]["q_inf"].get<double>()};
  const double want[3] = {planted.x_c, planted.alpha, planted.q_inf};
  const double err = max_relative_error(got, want);
  o.require(err <= 0.01, "planted parameters within 1%");

  const FittedLaw law = law_from_report(report);
  double worst_pred = 0.0;
  for (const auto& p : report["points"]) {
    worst_pred = std::max(worst_pred, std::abs(evaluate_law(law, p["x"].get<double>()) - p["predicted"].get<double>()));
  }
  o.require(worst_pred <= 1e-12, "reports reproduce their predictions");

  std::ofstream(path("fit.json")) << fit.out;
  const auto fwd = cli({"predict", "--model", path("fit.json"), "--at", "50"});
  const auto inv = cli({"predict", "--model", path("fit.json"), "--target", "0.7"});
  const auto over = cli({"predict", "--model", path("fit.json"), "--target", "0.95"});
  o.require(fwd.code == 0 && inv.code == 0 && over.code == 5, "predict exit codes");
  if (fwd.code == 0 && inv.code == 0) {
    stable = stable && stable_round_trip(fwd.out) && stable_round_trip(inv.out) && stable_round_trip(over.out);
    const double q50 = json::parse(fwd.out)["value"].get<double>();
    const double x70 = json::parse(inv.out)["value"].get<double>();
    o.require(std::abs(q50 - evaluate(planted, 50)) <= 1e-3, "forward prediction");
    o.require(std::abs(x70 - invert(planted, 0.7)) / invert(planted, 0.7) <= 0.01, "inverse prediction");
  }
  o.require(stable, "bit-stable JSON");
  std::filesystem::remove_all(dir);
  o.note("20 synthetic files, planted params max rel err " + fmt("%.1e", err) + ", prediction drift " +
         fmt("%.1e", worst_pred));
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "parameter accounting", 1, parameter_accounting},
      {2, "early/late score analysis", 1, score_analysis},
      {3, "rankme analytic suite", 5, rankme_suite},
      {4, "spectrum round trip", 60, spectrum_round_trip},
      {5, "saturating-law recovery", 30, saturating_recovery},
      {6, "joint-law recovery", 60, joint_recovery},
      {7, "pareto frontier", 10, frontier},
      {8, "r-squared and pearson", 1, r_squared_and_pearson},
      {9, "subsample stability", 120, subsample_stability},
      {10, "end-to-end cli session", 30, end_to_end},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome.require(false, std::string("exception: ") + e.what());
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    outcome.require(elapsed < c.budget_s, "runtime budget " + fmt("%.0f s", c.budget_s));
    if (!outcome.pass) ++failures;
    std::printf("%s [%2d] %-28s %7.2fs  %s\n", outcome.pass ? "PASS" : "FAIL", c.id, c.name, elapsed,
                outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
