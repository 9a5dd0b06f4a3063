#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rankscale/registry.hpp"

namespace rankscale::testing {

struct PublishedCount {
  std::size_t depth;
  std::size_t embed;
  double millions;
};

// Published total parameter counts for the encoder family.
inline constexpr std::array<PublishedCount, 16> kPublishedCounts{{
    {24, 1536, 707.01}, {12, 1536, 367.03}, {12, 1024, 177.69}, {12, 768, 111.32},
    {12, 512, 63.84},   {12, 256, 35.22},   {12, 128, 27.99},   {8, 768, 82.97},
    {8, 512, 51.23},    {8, 256, 32.06},    {4, 768, 54.62},    {4, 512, 38.62},
    {4, 256, 28.90},    {1, 768, 33.36},    {1, 512, 29.16},    {1, 256, 26.53},
}};

struct PublishedScores {
  std::size_t embed;
  double rankme_early;
  double quality_early;
  double rankme_late;
  double quality_late;
};

// Depth-12 models measured after 100k and 700k steps.
inline constexpr std::array<PublishedScores, 5> kPublishedScores{{
    {768, 201.865, 0.744, 342.007, 0.793},
    {1024, 258.111, 0.753, 432.298, 0.800},
    {512, 156.360, 0.719, 226.555, 0.765},
    {256, 83.371, 0.662, 111.505, 0.720},
    {128, 50.200, 0.619, 56.892, 0.633},
}};

inline constexpr std::size_t kEarlyStep = 100'000;
inline constexpr std::size_t kLateStep = 700'000;

// Pearson of early RankMe against late quality over the five rows, computed
// offline in 50-digit arithmetic.
inline constexpr double kPublishedPcc = 0.9182168416353941;

inline std::vector<CheckpointRecord> published_score_records() {
  std::vector<CheckpointRecord> records;
  for (const auto& row : kPublishedScores) {
    for (const std::size_t step : {kEarlyStep, kLateStep}) {
      CheckpointRecord r;
      r.config = family_config(12, row.embed);
      r.data_hours = 5000;
      r.steps = step;
      r.step_of_measurement = step;
      r.param_count = estimate_param_count(r.config);
      r.rankme = step == kEarlyStep ? row.rankme_early : row.rankme_late;
      r.quality = step == kEarlyStep ? row.quality_early : row.quality_late;
      records.push_back(r);
    }
  }
  return records;
}

}  // namespace rankscale::testing
