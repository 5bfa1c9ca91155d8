#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ddad/manifest.hpp"

namespace ddad {

struct SplitConfig {
  int n_normal = 0;
  int n_unlabeled = 0;
  double anomaly_ratio = 0.0;  // fraction of D_u that is abnormal
  int n_test_normal = 0;
  int n_test_abnormal = 0;
  uint64_t seed = 0;

  void validate() const;
};

// Resolved (D_n, D_u, D_t). Paths are manifest-relative. The hidden labels
// of D_u are deliberately absent: training code cannot see them. Only the
// abnormal count survives as bookkeeping metadata.
struct DatasetSplit {
  std::vector<std::string> d_n;
  std::vector<std::string> d_u;
  struct TestItem {
    std::string path;
    int label = 0;
  };
  std::vector<TestItem> d_t;

  double anomaly_ratio = 0.0;   // requested AR
  int unlabeled_abnormal = 0;   // realized abnormal count in D_u
  std::filesystem::path base_dir;
};

// round half away from zero, the tie rule for the AR count
int round_half_away(double x);

// Samples D_n from the normal pool, D_u from the unlabeled pool with
// round(AR * n_unlabeled) abnormal members (hidden labels consulted only
// here), D_t from the test pool. Without replacement, deterministic under
// cfg.seed, disjoint by construction (manifest paths are unique and each
// entry belongs to one pool).
DatasetSplit build_splits(const Manifest& manifest, const SplitConfig& cfg);

void write_splits(const DatasetSplit& s, const std::filesystem::path& file);
DatasetSplit read_splits(const std::filesystem::path& file);

}  // namespace ddad
