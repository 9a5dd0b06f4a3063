#include "rankscale/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "rankscale/error.hpp"
#include "rankscale/registry.hpp"

namespace rankscale {

namespace {

void require_paired(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::invalid_input, "input lengths differ (" + std::to_string(a.size()) +
                                              " vs " + std::to_string(b.size()) + ")");
  }
  if (a.size() < 2) throw Error(ErrorKind::insufficient_data, "need at least two values");
}

double mean(std::span<const double> v) {
  KahanSum s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

struct PairedValues {
  std::vector<GroupKey> keys;
  std::vector<double> early_rankme;
  std::vector<double> late_quality;
  std::vector<std::string> labels;
};

PairedValues pair_by_configuration(std::span<const CheckpointRecord> records,
                                   std::size_t early_step, std::size_t late_step) {
  std::map<GroupKey, double> early;
  std::map<GroupKey, double> late;
  std::set<GroupKey> seen_early;
  std::set<GroupKey> seen_late;
  for (const auto& r : records) {
    const GroupKey key{r.config, r.mask_rate, r.data_hours};
    if (r.step_of_measurement == early_step) {
      if (!seen_early.insert(key).second) {
        throw Error(ErrorKind::ambiguous_record, "duplicate record for " + describe(key) +
                                                     " at step " + std::to_string(early_step));
      }
      if (r.rankme) early.emplace(key, *r.rankme);
    }
    if (r.step_of_measurement == late_step && late_step != early_step) {
      if (!seen_late.insert(key).second) {
        throw Error(ErrorKind::ambiguous_record, "duplicate record for " + describe(key) +
                                                     " at step " + std::to_string(late_step));
      }
    }
    if (r.step_of_measurement == late_step && r.quality) late.emplace(key, *r.quality);
  }

  PairedValues out;
  std::map<std::string, int> name_count;
  for (const auto& [key, value] : early) {
    const auto it = late.find(key);
    if (it == late.end()) continue;
    out.keys.push_back(key);
    out.early_rankme.push_back(value);
    out.late_quality.push_back(it->second);
    ++name_count[key.config.name];
  }
  for (const auto& key : out.keys) {
    out.labels.push_back(name_count[key.config.name] == 1 ? key.config.name : describe(key));
  }
  return out;
}

// Labels ordered by descending score; ties keep configuration order.
std::vector<std::string> order_by(const std::vector<std::string>& labels,
                                  const std::vector<double>& scores) {
  std::vector<std::size_t> idx(labels.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(labels[i]);
  return out;
}

}  // namespace

double r_squared(std::span<const double> actual, std::span<const double> predicted) {
  require_paired(actual, predicted);
  const double y_bar = mean(actual);
  KahanSum rss;
  KahanSum tss;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double r = actual[i] - predicted[i];
    const double c = actual[i] - y_bar;
    rss.add(r * r);
    tss.add(c * c);
  }
  if (tss.value() == 0.0) {
    throw Error(ErrorKind::degenerate_variance, "observed values have zero variance");
  }
  return 1.0 - rss.value() / tss.value();
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y);
  const double mx = mean(x);
  const double my = mean(y);
  KahanSum sxy;
  KahanSum sxx;
  KahanSum syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy.add(dx * dy);
    sxx.add(dx * dx);
    syy.add(dy * dy);
  }
  if (sxx.value() == 0.0 || syy.value() == 0.0) {
    throw Error(ErrorKind::degenerate_variance, "pearson input has zero variance");
  }
  const double r = sxy.value() / (std::sqrt(sxx.value()) * std::sqrt(syy.value()));
  return std::clamp(r, -1.0, 1.0);
}

CorrelationReport early_late_correlation(std::span<const CheckpointRecord> records,
                                         std::size_t early_step, std::size_t late_step) {
  const auto paired = pair_by_configuration(records, early_step, late_step);
  if (paired.keys.size() < 2) {
    throw Error(ErrorKind::insufficient_pairs,
                "need at least two configurations with RankMe at step " +
                    std::to_string(early_step) + " and quality at step " +
                    std::to_string(late_step) + ", found " + std::to_string(paired.keys.size()));
  }
  CorrelationReport report;
  report.early_step = early_step;
  report.late_step = late_step;
  report.n_pairs = paired.keys.size();
  report.pcc = pearson(paired.early_rankme, paired.late_quality);
  for (std::size_t i = 0; i < paired.keys.size(); ++i) {
    report.pairs.push_back({paired.labels[i], paired.early_rankme[i], paired.late_quality[i]});
  }
  return report;
}

std::size_t spearman_footrule(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::invalid_input, "orderings differ in length");
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < b.size(); ++i) position[b[i]] = i;
  std::size_t total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto it = position.find(a[i]);
    if (it == position.end()) throw Error(ErrorKind::invalid_input, "orderings differ in labels");
    total += i > it->second ? i - it->second : it->second - i;
  }
  return total;
}

SelectionAgreement selection_agreement(std::span<const CheckpointRecord> records,
                                       std::size_t early_step, std::size_t late_step) {
  const auto paired = pair_by_configuration(records, early_step, late_step);
  if (paired.keys.empty()) {
    throw Error(ErrorKind::insufficient_pairs,
                "no configuration has RankMe at step " + std::to_string(early_step) +
                    " and quality at step " + std::to_string(late_step));
  }
  SelectionAgreement out;
  out.rankme_order = order_by(paired.labels, paired.early_rankme);
  out.quality_order = order_by(paired.labels, paired.late_quality);
  out.best_by_rankme = out.rankme_order.front();
  out.best_by_quality = out.quality_order.front();
  out.agree = out.best_by_rankme == out.best_by_quality;
  out.footrule = spearman_footrule(out.rankme_order, out.quality_order);
  const std::size_t n = paired.keys.size();
  out.max_footrule = n * n / 2;
  return out;
}

}  // namespace rankscale
