#include "ddad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ddad {

namespace {

void require_finite(const ScoredSet& set, const char* what) {
  for (const auto& s : set)
    if (!std::isfinite(s.score))
      throw ValidationError(std::string(what) + ": non-finite score for '" +
                            s.id + "'");
}

}  // namespace

double auc(const ScoredSet& set) {
  require_finite(set, "auc");
  size_t n_pos = 0, n_neg = 0;
  for (const auto& s : set) (s.label == 1 ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw ValidationError("auc: needs both classes present");

  std::vector<size_t> idx(set.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    return set[a].score < set[b].score;
  });

  // rank-sum with average ranks over tie groups
  double pos_rank_sum = 0;
  size_t i = 0;
  while (i < idx.size()) {
    size_t j = i;
    while (j < idx.size() && set[idx[j]].score == set[idx[i]].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (size_t t = i; t < j; ++t)
      if (set[idx[t]].label == 1) pos_rank_sum += avg_rank;
    i = j;
  }
  const double u = pos_rank_sum -
                   static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double ap(const ScoredSet& set) {
  require_finite(set, "ap");
  size_t n_pos = 0;
  for (const auto& s : set) n_pos += s.label == 1;
  if (n_pos == 0) throw ValidationError("ap: needs at least one positive");

  std::vector<size_t> idx(set.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    return set[a].score > set[b].score;
  });

  double acc = 0;
  size_t tp = 0;
  for (size_t rank = 0; rank < idx.size(); ++rank) {
    if (set[idx[rank]].label == 1) {
      ++tp;
      acc += static_cast<double>(tp) / static_cast<double>(rank + 1);
    }
  }
  return acc / static_cast<double>(n_pos);
}

HistogramPair build_histogram_pair(const std::vector<double>& normal_scores,
                                   const std::vector<double>& abnormal_scores,
                                   int bins) {
  if (normal_scores.empty() || abnormal_scores.empty())
    throw ValidationError("histogram: both score lists must be non-empty");
  if (bins < 2) throw ValidationError("histogram: bins must be >= 2");
  for (double v : normal_scores)
    if (!std::isfinite(v)) throw ValidationError("histogram: non-finite score");
  for (double v : abnormal_scores)
    if (!std::isfinite(v)) throw ValidationError("histogram: non-finite score");

  double lo = normal_scores[0], hi = normal_scores[0];
  for (double v : normal_scores) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : abnormal_scores) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double range = hi - lo;

  HistogramPair out;
  out.bins = bins;
  out.lo = lo;
  out.hi = hi;
  out.normal_hist.assign(static_cast<size_t>(bins), 0.0);
  out.abnormal_hist.assign(static_cast<size_t>(bins), 0.0);

  auto bin_of = [&](double v) {
    const double t = range > 0 ? (v - lo) / range : 0.0;
    int b = static_cast<int>(t * bins);
    return std::clamp(b, 0, bins - 1);  // t == 1 lands in the last bin
  };
  for (double v : normal_scores)
    out.normal_hist[static_cast<size_t>(bin_of(v))] += 1.0;
  for (double v : abnormal_scores)
    out.abnormal_hist[static_cast<size_t>(bin_of(v))] += 1.0;
  for (double& v : out.normal_hist) v /= static_cast<double>(normal_scores.size());
  for (double& v : out.abnormal_hist)
    v /= static_cast<double>(abnormal_scores.size());
  return out;
}

double histogram_chi2(const HistogramPair& h) {
  double acc = 0;
  for (int b = 0; b < h.bins; ++b) {
    const double p = h.normal_hist[static_cast<size_t>(b)];
    const double q = h.abnormal_hist[static_cast<size_t>(b)];
    const double denom = p + q;
    if (denom > 0) acc += (p - q) * (p - q) / denom;
  }
  return 0.5 * acc;
}

double histogram_chi2(const std::vector<double>& normal_scores,
                      const std::vector<double>& abnormal_scores, int bins) {
  return histogram_chi2(build_histogram_pair(normal_scores, abnormal_scores, bins));
}

}  // namespace ddad
