#include "rankscale/registry.hpp"

#include <array>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rankscale/error.hpp"

namespace rankscale {

namespace {

constexpr std::array<std::string_view, 13> kColumns{
    "name",       "depth",     "embed",       "mlp",   "heads",          "data_hours",
    "steps",      "batch_size", "mask_rate",  "param_count", "step_of_measurement",
    "rankme",     "quality"};

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(trim(current));
  return fields;
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

// Raw field lookup shared by the CSV and JSON readers.
class FieldSource {
 public:
  virtual ~FieldSource() = default;
  virtual std::optional<std::string> text(std::string_view column) const = 0;
  virtual std::optional<double> number(std::string_view column) const = 0;
  virtual std::string where() const = 0;
};

class CsvRow : public FieldSource {
 public:
  CsvRow(const std::map<std::string, std::size_t>& columns, std::vector<std::string> fields,
         std::size_t line)
      : columns_(columns), fields_(std::move(fields)), line_(line) {}

  std::optional<std::string> text(std::string_view column) const override {
    const auto it = columns_.find(std::string(column));
    if (it == columns_.end() || it->second >= fields_.size() || fields_[it->second].empty()) {
      return std::nullopt;
    }
    return fields_[it->second];
  }

  std::optional<double> number(std::string_view column) const override {
    const auto t = text(column);
    if (!t) return std::nullopt;
    double v = 0.0;
    const char* end = t->data() + t->size();
    const auto [ptr, ec] = std::from_chars(t->data(), end, v);
    if (ec != std::errc() || ptr != end) {
      throw Error(ErrorKind::parse, where() + ", column '" + std::string(column) +
                                        "': cannot parse '" + *t + "' as a number");
    }
    return v;
  }

  std::string where() const override { return "row " + std::to_string(line_); }

 private:
  const std::map<std::string, std::size_t>& columns_;
  std::vector<std::string> fields_;
  std::size_t line_;
};

class JsonRow : public FieldSource {
 public:
  JsonRow(const nlohmann::json& object, std::size_t index) : object_(object), index_(index) {}

  std::optional<std::string> text(std::string_view column) const override {
    const auto it = object_.find(std::string(column));
    if (it == object_.end() || it->is_null()) return std::nullopt;
    if (it->is_string()) {
      if (it->get<std::string>().empty()) return std::nullopt;
      return it->get<std::string>();
    }
    return it->dump();
  }

  std::optional<double> number(std::string_view column) const override {
    const auto it = object_.find(std::string(column));
    if (it == object_.end() || it->is_null()) return std::nullopt;
    if (it->is_string() && it->get<std::string>().empty()) return std::nullopt;
    if (!it->is_number()) {
      throw Error(ErrorKind::parse,
                  where() + ", column '" + std::string(column) + "': expected a number");
    }
    return it->get<double>();
  }

  std::string where() const override { return "row " + std::to_string(index_ + 1); }

 private:
  const nlohmann::json& object_;
  std::size_t index_;
};

double require_number(const FieldSource& row, std::string_view column) {
  const auto v = row.number(column);
  if (!v) {
    throw Error(ErrorKind::parse, row.where() + ": missing value for column '" +
                                      std::string(column) + "'");
  }
  return *v;
}

std::size_t as_count(const FieldSource& row, std::string_view column, double v) {
  if (!std::isfinite(v) || v < 0.0 || v != std::floor(v) || v > 9.0e15) {
    throw Error(ErrorKind::parse, row.where() + ", column '" + std::string(column) +
                                      "': expected a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

CheckpointRecord read_record(const FieldSource& row, std::vector<std::string>* warnings) {
  CheckpointRecord r;
  const auto name = row.text("name");
  if (!name) throw Error(ErrorKind::parse, row.where() + ": missing value for column 'name'");
  r.config.name = *name;
  r.config.depth = as_count(row, "depth", require_number(row, "depth"));
  r.config.embed_dim = as_count(row, "embed", require_number(row, "embed"));
  if (const auto arch = row.text("architecture")) r.config.architecture = *arch;

  const auto mlp = row.number("mlp");
  const auto heads = row.number("heads");
  r.config.mlp_dim = mlp ? as_count(row, "mlp", *mlp) : 4 * r.config.embed_dim;
  r.config.num_heads =
      heads ? as_count(row, "heads", *heads) : std::max<std::size_t>(1, r.config.embed_dim / 64);

  r.data_hours = require_number(row, "data_hours");
  r.steps = as_count(row, "steps", require_number(row, "steps"));
  if (const auto b = row.number("batch_size")) r.batch_size = as_count(row, "batch_size", *b);
  r.mask_rate = require_number(row, "mask_rate");
  if (const auto p = row.number("param_count")) {
    r.param_count = static_cast<std::int64_t>(as_count(row, "param_count", *p));
  }
  const auto som = row.number("step_of_measurement");
  r.step_of_measurement = som ? as_count(row, "step_of_measurement", *som) : r.steps;
  r.rankme = row.number("rankme");
  r.quality = row.number("quality");

  try {
    validate(r);
  } catch (const Error& e) {
    throw Error(e.kind(), row.where() + ": " + e.what());
  }

  if (r.config.architecture == kFamilyArchitecture && !r.config.is_family_layout() && warnings) {
    warnings->push_back(row.where() + ": " + r.config.name +
                        " deviates from the family layout (mlp = 4*embed, heads = embed/64)");
  }
  if (!r.param_count && r.config.is_family_layout() &&
      r.config.architecture == kFamilyArchitecture) {
    r.param_count = estimate_param_count(r.config);
  }
  return r;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

bool ModelConfig::is_family_layout() const noexcept {
  return embed_dim % 64 == 0 && mlp_dim == 4 * embed_dim && num_heads == embed_dim / 64;
}

ModelConfig family_config(std::size_t depth, std::size_t embed_dim) {
  ModelConfig c;
  c.name = "en" + std::to_string(embed_dim) + "-" + std::to_string(depth);
  c.depth = depth;
  c.embed_dim = embed_dim;
  c.mlp_dim = 4 * embed_dim;
  c.num_heads = embed_dim / 64;
  return c;
}

void validate(const CheckpointRecord& r) {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::invalid_record, msg); };
  if (r.config.name.empty()) fail("empty configuration name");
  if (r.config.depth < 1) fail("depth must be >= 1");
  if (r.config.embed_dim < 1) fail("embed must be >= 1");
  if (!(r.data_hours >= 0.0) || !std::isfinite(r.data_hours)) fail("data_hours must be >= 0");
  if (!(r.mask_rate >= 0.0 && r.mask_rate <= 1.0)) {
    fail("mask_rate " + format_double(r.mask_rate) + " outside [0, 1]");
  }
  if (r.batch_size < 1) fail("batch_size must be >= 1");
  if (r.steps < r.step_of_measurement) {
    fail("steps " + std::to_string(r.steps) + " < step_of_measurement " +
         std::to_string(r.step_of_measurement));
  }
  if (r.param_count && *r.param_count < 0) fail("param_count must be >= 0");
  if (r.quality && !(*r.quality >= 0.0 && *r.quality <= 1.0)) {
    fail("quality " + format_double(*r.quality) + " outside [0, 1]");
  }
  if (r.rankme && !(*r.rankme > 0.0 && std::isfinite(*r.rankme))) {
    fail("rankme must be positive and finite");
  }
}

std::vector<CheckpointRecord> parse_checkpoints_csv(std::string_view text,
                                                    std::vector<std::string>* warnings) {
  std::vector<CheckpointRecord> records;
  std::map<std::string, std::size_t> columns;
  bool have_header = false;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_number;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (!have_header) {
      if (line_number == 1 && !fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) {
        fields[0].erase(0, 3);
      }
      for (std::size_t i = 0; i < fields.size(); ++i) columns[fields[i]] = i;
      for (std::string_view required :
           {"name", "depth", "embed", "data_hours", "steps", "mask_rate"}) {
        if (!columns.contains(std::string(required))) {
          throw Error(ErrorKind::parse, "missing required column '" + std::string(required) + "'");
        }
      }
      have_header = true;
      continue;
    }
    // Data rows are numbered from 1, excluding the header.
    const CsvRow row(columns, std::move(fields), records.size() + 1);
    records.push_back(read_record(row, warnings));
  }
  if (!have_header) throw Error(ErrorKind::parse, "checkpoint table has no header");
  return records;
}

std::vector<CheckpointRecord> load_checkpoints(const std::filesystem::path& path,
                                               std::vector<std::string>* warnings) {
  const std::string text = read_file(path);
  if (path.extension() != ".json") return parse_checkpoints_csv(text, warnings);

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::parse, "'" + path.string() + "': " + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorKind::parse, "checkpoint JSON must be an array of objects");
  std::vector<CheckpointRecord> records;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    if (!doc[i].is_object()) {
      throw Error(ErrorKind::parse, "row " + std::to_string(i + 1) + ": expected an object");
    }
    records.push_back(read_record(JsonRow(doc[i], i), warnings));
  }
  return records;
}

std::string format_checkpoints_csv(std::span<const CheckpointRecord> records) {
  const bool with_architecture =
      std::any_of(records.begin(), records.end(), [](const CheckpointRecord& r) {
        return r.config.architecture != kFamilyArchitecture;
      });
  std::ostringstream out;
  for (std::size_t i = 0; i < kColumns.size(); ++i) out << (i ? "," : "") << kColumns[i];
  if (with_architecture) out << ",architecture";
  out << '\n';
  for (const auto& r : records) {
    out << quote_csv(r.config.name) << ',' << r.config.depth << ',' << r.config.embed_dim << ','
        << r.config.mlp_dim << ',' << r.config.num_heads << ',' << format_double(r.data_hours)
        << ',' << r.steps << ',' << r.batch_size << ',' << format_double(r.mask_rate) << ','
        << (r.param_count ? std::to_string(*r.param_count) : "") << ','
        << r.step_of_measurement << ',' << (r.rankme ? format_double(*r.rankme) : "") << ','
        << (r.quality ? format_double(*r.quality) : "");
    if (with_architecture) out << ',' << quote_csv(r.config.architecture);
    out << '\n';
  }
  return out.str();
}

void save_checkpoints(const std::filesystem::path& path, std::span<const CheckpointRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  out << format_checkpoints_csv(records);
  if (!out) throw Error(ErrorKind::io, "write failed for '" + path.string() + "'");
}

double encoder_block_params(std::size_t embed_dim) {
  const double e = static_cast<double>(embed_dim);
  return kBlockQuadratic * e * e + kBlockLinear * e;
}

FamilyOverhead calibrate_family_overhead(const ParamAnchor& a, const ParamAnchor& b) {
  if (a.embed_dim == b.embed_dim) {
    throw Error(ErrorKind::invalid_input, "calibration anchors need distinct embedding sizes");
  }
  const double ra = a.param_count - static_cast<double>(a.depth) * encoder_block_params(a.embed_dim);
  const double rb = b.param_count - static_cast<double>(b.depth) * encoder_block_params(b.embed_dim);
  const double ea = static_cast<double>(a.embed_dim);
  const double eb = static_cast<double>(b.embed_dim);
  FamilyOverhead out;
  out.per_embed = (rb - ra) / (eb - ea);
  out.constant = ra - out.per_embed * ea;
  return out;
}

std::int64_t estimate_param_count(const ModelConfig& config, const FamilyOverhead& overhead) {
  if (config.depth < 1 || config.embed_dim < 1 || !config.is_family_layout()) {
    throw Error(ErrorKind::unsupported_config,
                "parameter estimator only covers the masked-autoencoder family "
                "(mlp = 4*embed, heads = embed/64); got " + config.name);
  }
  const double total = static_cast<double>(config.depth) * encoder_block_params(config.embed_dim) +
                       overhead.constant +
                       overhead.per_embed * static_cast<double>(config.embed_dim);
  return static_cast<std::int64_t>(std::llround(total));
}

double compute_budget(const CheckpointRecord& record, double tokens_per_sample) {
  if (!record.param_count || *record.param_count <= 0) {
    throw Error(ErrorKind::invalid_record,
                record.config.name + ": compute budget needs a positive param_count");
  }
  if (record.steps < 1) throw Error(ErrorKind::invalid_record, record.config.name + ": steps must be >= 1");
  if (!(tokens_per_sample > 0.0)) {
    throw Error(ErrorKind::invalid_input, "tokens_per_sample must be positive");
  }
  return 6.0 * static_cast<double>(*record.param_count) * static_cast<double>(record.steps) *
         static_cast<double>(record.batch_size) * tokens_per_sample;
}

std::string describe(const GroupKey& key) {
  return key.config.name + " (mask " + format_double(key.mask_rate) + ", " +
         format_double(key.data_hours) + " h)";
}

std::map<GroupKey, std::vector<CheckpointRecord>> group_by_config(
    std::span<const CheckpointRecord> records) {
  std::map<GroupKey, std::vector<CheckpointRecord>> groups;
  for (const auto& r : records) groups[GroupKey{r.config, r.mask_rate, r.data_hours}].push_back(r);
  return groups;
}

}  // namespace rankscale
