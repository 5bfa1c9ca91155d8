#pragma once

#include <string>
#include <vector>

#include "ddad/errors.hpp"

namespace ddad {

struct ScoredItem {
  std::string id;
  double score = 0;
  int label = 0;  // 0 normal, 1 abnormal
};
using ScoredSet = std::vector<ScoredItem>;

// Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 * P(tie). Computed via
// average ranks in O(n log n); exactly matches the all-pairs statistic.
double auc(const ScoredSet& set);

// Average precision: mean over positives of precision at each positive's
// rank, scores descending, ties broken by insertion order (stable sort).
// Not interpolated.
double ap(const ScoredSet& set);

// Symmetric half-normalized histogram chi-square distance. Scores of both
// classes are jointly min-max normalized to [0,1], binned, each histogram
// normalized to sum 1; distance = 0.5 * sum (h-g)^2/(h+g), 0/0 -> 0.
// Bounded in [0,1]: disjoint supports score exactly 1.
double histogram_chi2(const std::vector<double>& normal_scores,
                      const std::vector<double>& abnormal_scores, int bins);

struct HistogramPair {
  int bins = 0;
  std::vector<double> normal_hist;    // sums to 1
  std::vector<double> abnormal_hist;  // sums to 1
  double lo = 0, hi = 0;              // joint normalization range
};

HistogramPair build_histogram_pair(const std::vector<double>& normal_scores,
                                   const std::vector<double>& abnormal_scores,
                                   int bins);

double histogram_chi2(const HistogramPair& h);

}  // namespace ddad
