#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rankscale {

struct CheckpointRecord;

/// Kahan-compensated running sum.
class KahanSum {
 public:
  void add(double v) {
    const double y = v - compensation_;
    const double t = sum_ + y;
    compensation_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const noexcept { return sum_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// 1 − Σ(y − ŷ)² / Σ(y − ȳ)². Negative for predictions worse than the mean.
double r_squared(std::span<const double> actual, std::span<const double> predicted);

/// Product-moment correlation from population moments, clamped to [−1, 1].
double pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationPair {
  std::string configuration;
  double early_rankme = 0.0;
  double late_quality = 0.0;
};

struct CorrelationReport {
  std::size_t early_step = 0;
  std::size_t late_step = 0;
  double pcc = 0.0;
  std::size_t n_pairs = 0;
  std::vector<CorrelationPair> pairs;  // ordered by configuration identity
};

/// Pairs RankMe measured at `early_step` with quality measured at `late_step`
/// per configuration and correlates them.
CorrelationReport early_late_correlation(std::span<const CheckpointRecord> records,
                                         std::size_t early_step, std::size_t late_step);

struct SelectionAgreement {
  bool agree = false;
  std::string best_by_rankme;
  std::string best_by_quality;
  std::vector<std::string> rankme_order;   // descending RankMe@early
  std::vector<std::string> quality_order;  // descending quality@late
  /// Σ |rank_rankme(i) − rank_quality(i)|; an extension beyond the argmax check.
  std::size_t footrule = 0;
  std::size_t max_footrule = 0;
};

SelectionAgreement selection_agreement(std::span<const CheckpointRecord> records,
                                       std::size_t early_step, std::size_t late_step);

/// Σ |rank_a(i) − rank_b(i)| for two orderings of the same labels.
std::size_t spearman_footrule(std::span<const std::string> a, std::span<const std::string> b);

}  // namespace rankscale
