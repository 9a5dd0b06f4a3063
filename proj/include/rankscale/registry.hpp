#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rankscale {

inline constexpr std::string_view kFamilyArchitecture = "masked-autoencoder";
inline constexpr std::size_t kDefaultBatchSize = 256;
inline constexpr double kDefaultTokensPerSample = 250.0;  // 25 Hz frames over 10 s clips

struct ModelConfig {
  std::string name;
  std::size_t depth = 1;
  std::size_t embed_dim = 64;
  std::size_t mlp_dim = 256;
  std::size_t num_heads = 1;
  std::string architecture{kFamilyArchitecture};

  /// Family layout: mlp = 4·embed and heads = embed/64.
  bool is_family_layout() const noexcept;

  auto operator<=>(const ModelConfig&) const = default;
  bool operator==(const ModelConfig&) const = default;
};

/// Fills mlp/heads from the family layout for a given depth and embedding size.
ModelConfig family_config(std::size_t depth, std::size_t embed_dim);

struct CheckpointRecord {
  ModelConfig config;
  double data_hours = 0.0;
  std::size_t steps = 0;
  std::size_t batch_size = kDefaultBatchSize;
  double mask_rate = 0.75;
  std::optional<std::int64_t> param_count;
  std::size_t step_of_measurement = 0;
  std::optional<double> rankme;
  std::optional<double> quality;

  bool operator==(const CheckpointRecord&) const = default;
};

/// Throws invalid_record describing the first violated invariant.
void validate(const CheckpointRecord& record);

/// Reads a checkpoint table (CSV, or a JSON array when the file ends in .json).
/// Missing param_count is derived for family configs. Non-family layouts of the
/// family architecture produce a warning rather than an error.
std::vector<CheckpointRecord> load_checkpoints(const std::filesystem::path& path,
                                               std::vector<std::string>* warnings = nullptr);
std::vector<CheckpointRecord> parse_checkpoints_csv(std::string_view text,
                                                    std::vector<std::string>* warnings = nullptr);

void save_checkpoints(const std::filesystem::path& path, std::span<const CheckpointRecord> records);
std::string format_checkpoints_csv(std::span<const CheckpointRecord> records);

/// Encoder-plus-fixed-decoder parameter count for the family:
///   depth·(12E² + 13E) + overhead_constant + overhead_per_embed·E.
/// The two overhead constants were calibrated on the en128-12 and en768-12
/// published totals and are frozen in kFamilyOverhead.
struct FamilyOverhead {
  double constant = 0.0;
  double per_embed = 0.0;
};

struct ParamAnchor {
  std::size_t depth = 0;
  std::size_t embed_dim = 0;
  double param_count = 0.0;
};

inline constexpr double kBlockQuadratic = 12.0;  // attention 4E² + MLP 8E²
inline constexpr double kBlockLinear = 13.0;     // biases 9E + two layer norms 4E
inline constexpr FamilyOverhead kFamilyOverhead{25'479'776.0, 1023.125};

double encoder_block_params(std::size_t embed_dim);
FamilyOverhead calibrate_family_overhead(const ParamAnchor& a, const ParamAnchor& b);
std::int64_t estimate_param_count(const ModelConfig& config,
                                  const FamilyOverhead& overhead = kFamilyOverhead);

/// Training multiply-adds: 6 · params · steps · batch · tokens_per_sample.
double compute_budget(const CheckpointRecord& record,
                      double tokens_per_sample = kDefaultTokensPerSample);

struct GroupKey {
  ModelConfig config;
  double mask_rate = 0.0;
  double data_hours = 0.0;

  auto operator<=>(const GroupKey&) const = default;
  bool operator==(const GroupKey&) const = default;
};

std::string describe(const GroupKey& key);

std::map<GroupKey, std::vector<CheckpointRecord>> group_by_config(
    std::span<const CheckpointRecord> records);

}  // namespace rankscale
