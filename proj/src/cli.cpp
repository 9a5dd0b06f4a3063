#include "rankscale/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rankscale/embedding_io.hpp"
#include "rankscale/fit.hpp"
#include "rankscale/rankme.hpp"
#include "rankscale/registry.hpp"
#include "rankscale/report.hpp"
#include "rankscale/stats.hpp"
#include "rankscale/synth.hpp"

namespace rankscale {

using nlohmann::json;

ExitCode exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io:
    case ErrorKind::parse: return ExitCode::io_or_parse;
    case ErrorKind::degenerate_spectrum:
    case ErrorKind::degenerate_variance:
    case ErrorKind::divergent_start: return ExitCode::degenerate_numerics;
    case ErrorKind::unreachable_target: return ExitCode::unreachable_target;
    case ErrorKind::invalid_input:
    case ErrorKind::domain:
    case ErrorKind::invalid_law:
    case ErrorKind::invalid_config:
    case ErrorKind::insufficient_data:
    case ErrorKind::insufficient_pairs:
    case ErrorKind::ambiguous_record:
    case ErrorKind::unsupported_config:
    case ErrorKind::invalid_record: return ExitCode::invalid_data;
  }
  return ExitCode::invalid_data;
}

namespace {

std::string config_scalar(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

// Appends the entries of a `--config` JSON object as long flags. Keys already
// present on the command line are skipped so explicit flags take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  json doc;
  try {
    doc = json::parse(read_file_bytes(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, "config '" + path + "' is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::parse, "config '" + path + "' must hold an object");

  std::vector<std::string> expanded = args;
  for (const auto& [key, value] : doc.items()) {
    const std::string flag = "--" + key;
    if (key == "config" || has_flag(args, flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) expanded.push_back(flag);
      continue;
    }
    if (value.is_null()) continue;
    expanded.push_back(flag);
    if (value.is_array()) {
      for (const auto& v : value) expanded.push_back(config_scalar(v));
    } else {
      expanded.push_back(config_scalar(value));
    }
  }
  return expanded;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::uint64_t default_seed() {
  if (const char* env = std::getenv("RANKSCALE_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      // Fall through to zero on malformed values.
    }
  }
  return 0;
}

json command_echo(const std::vector<std::string>& args) { return json(args); }

// ---------------------------------------------------------------------------
// rank

struct RankOptions {
  std::string path;
  std::size_t samples = kDefaultSampleRows;
  std::uint64_t seed = 0;
  double epsilon = kDefaultEpsilon;
  std::vector<std::size_t> sweep;
  std::size_t trials = 5;
};

int cmd_rank(const RankOptions& opt, const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  const std::string bytes = read_file_bytes(opt.path);
  const Matrix z = decode_embeddings(bytes);
  json warnings = json::array();

  Matrix sample = z;
  if (opt.samples == 0) throw Error(ErrorKind::invalid_input, "--samples must be >= 1");
  if (z.rows() > opt.samples) {
    sample = subsample_rows(z, opt.samples, opt.seed);
  } else if (z.rows() < opt.samples) {
    const std::string w = "--samples " + std::to_string(opt.samples) + " exceeds the " +
                          std::to_string(z.rows()) + " available rows; using all rows";
    err << "warning: " << w << "\n";
    warnings.push_back(w);
  }
  const RankMeScore score = rankme(sample, opt.epsilon);

  json report = {{"schema", kReportSchema},
                 {"command", "rank"},
                 {"command_echo", command_echo(args)},
                 {"input", {{"path", opt.path}, {"rows", z.rows()}, {"cols", z.cols()},
                            {"fnv1a64", fnv1a_hex(bytes)}}},
                 {"rankme", score.value},
                 {"sample_rows", score.sample_rows},
                 {"embed_dim", score.embed_dim},
                 {"epsilon", score.epsilon},
                 {"seed", opt.seed},
                 {"warnings", warnings}};
  if (!opt.sweep.empty()) {
    report["sweep"] = to_json(subsample_stability_sweep(z, opt.sweep, opt.trials, opt.seed,
                                                        opt.epsilon));
  }
  out << dump(report);
  return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
  std::string spec;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::uint64_t seed = 0;
  std::string out_path;
};

int cmd_synth(const SynthOptions& opt, const std::vector<std::string>& args, std::ostream& out) {
  const SpectrumSpec spec = SpectrumSpec::parse(opt.spec, opt.cols);
  if (opt.cols != 0 && opt.cols != spec.size()) {
    throw Error(ErrorKind::invalid_input, "--cols " + std::to_string(opt.cols) +
                                              " disagrees with the spectrum length " +
                                              std::to_string(spec.size()));
  }
  const std::size_t rows = opt.rows != 0 ? opt.rows : std::max<std::size_t>(1000, spec.size());
  const Matrix z = synth_embeddings(spec, rows, opt.seed);
  write_embeddings(opt.out_path, z);
  const RankMeScore truth = rankme_from_spectrum(spec.values());
  out << dump({{"schema", kReportSchema},
               {"command", "synth"},
               {"command_echo", command_echo(args)},
               {"out", opt.out_path},
               {"spec", spec.describe()},
               {"rows", rows},
               {"cols", spec.size()},
               {"seed", opt.seed},
               {"rankme_ground_truth", truth.value},
               {"epsilon", truth.epsilon}});
  return 0;
}

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
  std::string path;
  std::string law;
  std::string x_column;
  std::string d_column;
  std::string q_column = "quality";
  double tokens_per_sample = kDefaultTokensPerSample;
  std::size_t max_iterations = 5000;
  std::size_t multi_start = 16;
  std::uint64_t seed = 0;
  bool skip_identifiability = false;
  std::string plot_csv;
};

std::optional<double> record_field(const CheckpointRecord& r, const std::string& column) {
  if (column == "depth") return static_cast<double>(r.config.depth);
  if (column == "embed") return static_cast<double>(r.config.embed_dim);
  if (column == "mlp") return static_cast<double>(r.config.mlp_dim);
  if (column == "heads") return static_cast<double>(r.config.num_heads);
  if (column == "data_hours") return r.data_hours;
  if (column == "steps") return static_cast<double>(r.steps);
  if (column == "batch_size") return static_cast<double>(r.batch_size);
  if (column == "mask_rate") return r.mask_rate;
  if (column == "step_of_measurement") return static_cast<double>(r.step_of_measurement);
  if (column == "param_count") {
    return r.param_count ? std::optional<double>(static_cast<double>(*r.param_count)) : std::nullopt;
  }
  if (column == "rankme") return r.rankme;
  if (column == "quality") return r.quality;
  throw Error(ErrorKind::invalid_input, "unknown column '" + column + "'");
}

std::string default_x_column(const std::string& law) {
  if (law == "rank") return "rankme";
  if (law == "data") return "data_hours";
  if (law == "params" || law == "joint") return "param_count";
  return "";
}

// Values of one column, failing when no record provides it.
std::vector<std::optional<double>> column_values(std::span<const CheckpointRecord> records,
                                                 const std::string& column) {
  std::vector<std::optional<double>> values;
  for (const auto& r : records) values.push_back(record_field(r, column));
  if (std::none_of(values.begin(), values.end(), [](const auto& v) { return v.has_value(); })) {
    throw Error(ErrorKind::insufficient_data, "column '" + column + "' has no values");
  }
  return values;
}

int cmd_fit(const FitOptions& opt, const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  const std::string bytes = read_file_bytes(opt.path);
  std::vector<std::string> load_warnings;
  const auto records = load_checkpoints(opt.path, &load_warnings);
  json warnings = json::array();
  for (const auto& w : load_warnings) {
    err << "warning: " << w << "\n";
    warnings.push_back(w);
  }

  FitConfig config;
  config.max_iterations = opt.max_iterations;
  config.multi_start = opt.multi_start;
  config.seed = opt.seed;
  config.check_identifiability = !opt.skip_identifiability;

  const auto q_values = column_values(records, opt.q_column);
  std::size_t skipped = 0;
  json points = json::array();
  FitResult fit;
  std::string x_name;
  std::ostringstream plot;
  plot.precision(17);

  if (opt.law == "joint") {
    const std::string n_col = opt.x_column.empty() ? "param_count" : opt.x_column;
    const std::string d_col = opt.d_column.empty() ? "data_hours" : opt.d_column;
    x_name = n_col + "," + d_col;
    const auto n_values = column_values(records, n_col);
    const auto d_values = column_values(records, d_col);
    std::vector<JointSample> data;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!n_values[i] || !d_values[i] || !q_values[i]) {
        ++skipped;
        continue;
      }
      data.push_back({*n_values[i], *d_values[i], *q_values[i]});
    }
    if (data.empty()) throw Error(ErrorKind::insufficient_data, "no complete rows to fit");
    fit = fit_joint_law(data, config);
    const auto law = fit.joint_law();
    plot << "n,d,observed,predicted\n";
    double n_lo = data[0].n, n_hi = data[0].n, d_lo = data[0].d, d_hi = data[0].d;
    for (std::size_t i = 0; i < data.size(); ++i) {
      points.push_back({{"n", data[i].n},
                        {"d", data[i].d},
                        {"observed", data[i].q},
                        {"predicted", fit.predictions[i]},
                        {"residual", fit.residuals[i]}});
      plot << data[i].n << ',' << data[i].d << ',' << data[i].q << ',' << fit.predictions[i] << '\n';
      n_lo = std::min(n_lo, data[i].n);
      n_hi = std::max(n_hi, data[i].n);
      d_lo = std::min(d_lo, data[i].d);
      d_hi = std::max(d_hi, data[i].d);
    }
    if (predicts_negative(law, n_lo, n_hi, d_lo, d_hi)) warnings.push_back("negative-prediction-range");
  } else {
    const LawVariable variable = parse_law_variable(opt.law);
    std::vector<Sample> data;
    if (variable == LawVariable::compute && opt.x_column.empty()) {
      x_name = "compute";
      for (std::size_t i = 0; i < records.size(); ++i) {
        if (!q_values[i] || !records[i].param_count) {
          ++skipped;
          continue;
        }
        data.push_back({compute_budget(records[i], opt.tokens_per_sample), *q_values[i]});
      }
    } else {
      x_name = opt.x_column.empty() ? default_x_column(opt.law) : opt.x_column;
      const auto x_values = column_values(records, x_name);
      for (std::size_t i = 0; i < records.size(); ++i) {
        if (!x_values[i] || !q_values[i]) {
          ++skipped;
          continue;
        }
        data.push_back({*x_values[i], *q_values[i]});
      }
    }
    if (data.empty()) throw Error(ErrorKind::insufficient_data, "no complete rows to fit");

    std::vector<Sample> frontier;
    if (variable == LawVariable::compute) {
      fit = fit_compute_frontier(data, config);
      frontier = pareto_frontier(data);
    } else {
      fit = fit_saturating_power_law(data, config, variable);
    }
    const auto law = fit.saturating_law();
    plot << "x,observed,predicted\n";
    double lo = data[0].x, hi = data[0].x;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double predicted = evaluate(law, data[i].x);
      json point = {{"x", data[i].x},
                    {"observed", data[i].q},
                    {"predicted", predicted},
                    {"residual", data[i].q - predicted}};
      if (variable == LawVariable::compute) {
        point["frontier"] = std::find(frontier.begin(), frontier.end(), data[i]) != frontier.end();
      }
      points.push_back(point);
      plot << data[i].x << ',' << data[i].q << ',' << predicted << '\n';
      lo = std::min(lo, data[i].x);
      hi = std::max(hi, data[i].x);
    }
    if (predicts_negative(law, lo, hi)) warnings.push_back("negative-prediction-range");
  }
  if (skipped > 0) {
    const std::string w = std::to_string(skipped) + " rows lack " + x_name + " or " +
                          opt.q_column + " and were skipped";
    err << "warning: " << w << "\n";
    warnings.push_back(w);
  }

  json report = to_json(fit);
  for (const auto& w : report["warnings"]) warnings.push_back(w);
  report["schema"] = kReportSchema;
  report["command"] = "fit";
  report["command_echo"] = command_echo(args);
  report["input"] = {{"path", opt.path}, {"rows", records.size()}, {"fnv1a64", fnv1a_hex(bytes)}};
  report["x_column"] = x_name;
  report["q_column"] = opt.q_column;
  if (opt.law == "compute") report["tokens_per_sample"] = opt.tokens_per_sample;
  report["points"] = points;
  report["warnings"] = warnings;

  if (!opt.plot_csv.empty()) {
    std::ofstream file(opt.plot_csv, std::ios::trunc);
    if (!file) throw Error(ErrorKind::io, "cannot write '" + opt.plot_csv + "'");
    file << plot.str();
  }
  out << dump(report);
  return 0;
}

// ---------------------------------------------------------------------------
// predict

struct PredictOptions {
  std::string model;
  std::optional<double> at;
  std::optional<double> at_d;
  std::optional<double> target;
};

int cmd_predict(const PredictOptions& opt, std::ostream& out, std::ostream& err) {
  json report;
  try {
    report = json::parse(read_file_bytes(opt.model));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, "'" + opt.model + "' is not valid JSON: " + e.what());
  }
  const FittedLaw law = law_from_report(report);
  const std::string family = report.at("family").get<std::string>();
  json result = {{"schema", kReportSchema}, {"command", "predict"}, {"family", family},
                 {"model", opt.model}};

  if (opt.at.has_value() == opt.target.has_value()) {
    throw Error(ErrorKind::invalid_input, "give exactly one of --at or --target");
  }
  if (opt.at) {
    const bool joint = std::holds_alternative<JointDataModelLaw>(law);
    if (joint && !opt.at_d) throw Error(ErrorKind::invalid_input, "joint laws need --at N --at-d D");
    result["mode"] = "at";
    result["at"] = *opt.at;
    if (joint) result["at_d"] = *opt.at_d;
    result["value"] = evaluate_law(law, *opt.at, opt.at_d.value_or(1.0));
    result["reachable"] = true;
    out << dump(result);
    return 0;
  }

  const auto* saturating = std::get_if<SaturatingPowerLaw>(&law);
  if (!saturating) throw Error(ErrorKind::invalid_input, "--target needs a single-variable law");
  result["mode"] = "target";
  result["target"] = *opt.target;
  try {
    result["value"] = invert(*saturating, *opt.target);
    result["reachable"] = true;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::unreachable_target) throw;
    result["value"] = nullptr;
    result["reachable"] = false;
    out << dump(result);
    err << "error: unreachable: exceeds fitted ceiling Q∞ = " << saturating->q_inf << "\n";
    return static_cast<int>(ExitCode::unreachable_target);
  }
  out << dump(result);
  return 0;
}

// ---------------------------------------------------------------------------
// correlate / params

struct CorrelateOptions {
  std::string path;
  std::size_t early_step = 0;
  std::size_t late_step = 0;
};

int cmd_correlate(const CorrelateOptions& opt, std::ostream& out, std::ostream& err) {
  std::vector<std::string> load_warnings;
  const auto records = load_checkpoints(opt.path, &load_warnings);
  for (const auto& w : load_warnings) err << "warning: " << w << "\n";
  const auto correlation = early_late_correlation(records, opt.early_step, opt.late_step);
  const auto agreement = selection_agreement(records, opt.early_step, opt.late_step);
  json report = to_json(correlation);
  report["schema"] = kReportSchema;
  report["command"] = "correlate";
  report["selection"] = to_json(agreement);
  out << dump(report);
  return 0;
}

struct ParamsOptions {
  std::size_t depth = 0;
  std::size_t embed = 0;
  std::optional<std::size_t> mlp;
  std::optional<std::size_t> heads;
};

int cmd_params(const ParamsOptions& opt, std::ostream& out, std::ostream& err) {
  ModelConfig config = family_config(opt.depth, opt.embed);
  if (opt.mlp) config.mlp_dim = *opt.mlp;
  if (opt.heads) config.num_heads = *opt.heads;
  if (!config.is_family_layout()) {
    err << "warning: " << config.name
        << " deviates from the family layout (mlp = 4*embed, heads = embed/64)\n";
  }
  const std::int64_t count = estimate_param_count(config);
  out << dump({{"schema", kReportSchema},
               {"command", "params"},
               {"name", config.name},
               {"depth", config.depth},
               {"embed", config.embed_dim},
               {"mlp", config.mlp_dim},
               {"heads", config.num_heads},
               {"param_count", count},
               {"param_count_millions", static_cast<double>(count) / 1e6}});
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Effective-rank and scaling-law toolkit for embedding checkpoints", "rankscale"};
  app.require_subcommand(1);
  const std::uint64_t seed = default_seed();

  std::string config_path;  // consumed by expand_config before parsing
  auto attach_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON file whose keys mirror the flags (flags win)");
  };

  RankOptions rank_opt;
  rank_opt.seed = seed;
  auto* rank = app.add_subcommand("rank", "RankMe of an embedding file");
  rank->add_option("file", rank_opt.path, "Embedding file (binary EMBR or CSV)")->required();
  rank->add_option("--samples", rank_opt.samples, "Rows sampled without replacement")
      ->capture_default_str();
  rank->add_option("--seed", rank_opt.seed, "Sampling seed (default $RANKSCALE_SEED or 0)");
  rank->add_option("--epsilon", rank_opt.epsilon, "Probability offset")->capture_default_str();
  rank->add_option("--sweep", rank_opt.sweep, "Subsample sizes for a stability sweep");
  rank->add_option("--trials", rank_opt.trials, "Trials per sweep size")->capture_default_str();
  attach_config(rank);

  SynthOptions synth_opt;
  synth_opt.seed = seed;
  auto* synth = app.add_subcommand("synth", "Write embeddings with a prescribed spectrum");
  synth->add_option("--spec", synth_opt.spec,
                    "uniform:K | geometric:RATIO:K | power:EXP:K | explicit:v1,v2,...")
      ->required();
  synth->add_option("--rows", synth_opt.rows, "Row count (default max(1000, K))");
  synth->add_option("--cols", synth_opt.cols, "Spectrum length when the profile omits it");
  synth->add_option("--seed", synth_opt.seed, "Generator seed");
  synth->add_option("--out", synth_opt.out_path, "Output embedding file")->required();
  attach_config(synth);

  FitOptions fit_opt;
  fit_opt.seed = seed;
  auto* fit = app.add_subcommand("fit", "Fit a scaling law to a checkpoint table");
  fit->add_option("file", fit_opt.path, "Checkpoint table (CSV or JSON)")->required();
  fit->add_option("--law", fit_opt.law, "Law family")
      ->required()
      ->check(CLI::IsMember({"rank", "data", "params", "compute", "joint"}));
  fit->add_option("--x-column", fit_opt.x_column, "Input column (joint: the N column)");
  fit->add_option("--d-column", fit_opt.d_column, "Joint law data-volume column");
  fit->add_option("--q-column", fit_opt.q_column, "Quality column")->capture_default_str();
  fit->add_option("--tokens-per-sample", fit_opt.tokens_per_sample, "Tokens per training sample")
      ->capture_default_str();
  fit->add_option("--max-iterations", fit_opt.max_iterations, "Solver iteration cap")
      ->capture_default_str();
  fit->add_option("--multi-start", fit_opt.multi_start, "Number of solver starts")
      ->capture_default_str();
  fit->add_option("--seed", fit_opt.seed, "Start-generation seed");
  fit->add_flag("--no-identifiability-check", fit_opt.skip_identifiability,
                "Skip the subset refit used for the non-identifiable warning");
  fit->add_option("--plot-csv", fit_opt.plot_csv, "Write x,observed,predicted rows here");
  attach_config(fit);

  PredictOptions predict_opt;
  auto* predict = app.add_subcommand("predict", "Evaluate or invert a fitted law");
  predict->add_option("--model", predict_opt.model, "Fit report JSON")->required();
  predict->add_option("--at", predict_opt.at, "Input value (joint: N)");
  predict->add_option("--at-d", predict_opt.at_d, "Joint law data volume");
  predict->add_option("--target", predict_opt.target, "Quality to reach");
  attach_config(predict);

  CorrelateOptions correlate_opt;
  auto* correlate = app.add_subcommand("correlate", "Early RankMe vs late quality");
  correlate->add_option("file", correlate_opt.path, "Checkpoint table (CSV or JSON)")->required();
  correlate->add_option("--early-step", correlate_opt.early_step, "Step of the RankMe values")
      ->required();
  correlate->add_option("--late-step", correlate_opt.late_step, "Step of the quality values")
      ->required();
  attach_config(correlate);

  ParamsOptions params_opt;
  auto* params = app.add_subcommand("params", "Parameter count of a family configuration");
  params->add_option("--depth", params_opt.depth, "Encoder layers")->required();
  params->add_option("--embed", params_opt.embed, "Embedding size")->required();
  params->add_option("--mlp", params_opt.mlp, "MLP width override");
  params->add_option("--heads", params_opt.heads, "Attention head override");
  attach_config(params);

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return static_cast<int>(exit_code_for(e.kind()));
  }
  std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::ostringstream diag;
    app.exit(e, diag, diag);
    err << diag.str();
    return e.get_exit_code() == 0 ? 0 : static_cast<int>(ExitCode::io_or_parse);
  }

  try {
    if (*rank) return cmd_rank(rank_opt, args, out, err);
    if (*synth) return cmd_synth(synth_opt, args, out);
    if (*fit) return cmd_fit(fit_opt, args, out, err);
    if (*predict) return cmd_predict(predict_opt, out, err);
    if (*correlate) return cmd_correlate(correlate_opt, out, err);
    if (*params) return cmd_params(params_opt, out, err);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return static_cast<int>(exit_code_for(e.kind()));
  } catch (const json::exception& e) {
    err << "error (parse): " << e.what() << "\n";
    return static_cast<int>(ExitCode::io_or_parse);
  }
  return static_cast<int>(ExitCode::usage);
}

}  // namespace rankscale
