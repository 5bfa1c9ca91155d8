#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddad/metrics.hpp"

namespace ddad {

struct MetricRow {
  std::string score_kind;
  double auc_value = 0;
  double ap_value = 0;
};

struct ScoreRow {
  std::string path;
  std::string kind;
  double score = 0;
  std::optional<int> label;
};

struct SweepRow {
  double anomaly_ratio = 0;
  std::string score_kind;
  double auc_value = 0;
};

// metrics.csv: '# key: value' metadata block, then
// 'score_kind,auc,ap' rows. Values are printed with enough digits to
// round-trip exactly through the parser.
void write_metrics_csv(const std::filesystem::path& file,
                       const std::vector<MetricRow>& rows,
                       const std::map<std::string, std::string>& metadata);
std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& file);

// scores.csv: 'path,kind,score,label' with label empty when unknown.
void write_scores_csv(const std::filesystem::path& file,
                      const std::vector<ScoreRow>& rows);
std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& file);

// histogram_<kind>.csv: per-bin masses for both classes.
void write_histogram_csv(const std::filesystem::path& file,
                         const HistogramPair& hist, double chi2);

// sweep.csv: 'anomaly_ratio,score_kind,auc'.
void write_sweep_csv(const std::filesystem::path& file,
                     const std::vector<SweepRow>& rows,
                     const std::map<std::string, std::string>& metadata);
std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& file);

}  // namespace ddad
