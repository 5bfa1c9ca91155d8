#include "ddad/splits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ddad/rng.hpp"
#include "nlohmann/json.hpp"

namespace ddad {

using nlohmann::json;

void SplitConfig::validate() const {
  if (n_normal < 0 || n_unlabeled < 0 || n_test_normal < 0 ||
      n_test_abnormal < 0)
    throw ValidationError("split config: counts must be non-negative");
  if (anomaly_ratio < 0.0 || anomaly_ratio > 1.0)
    throw ValidationError("split config: anomaly_ratio must be in [0,1]");
}

int round_half_away(double x) {
  return static_cast<int>(x < 0 ? std::ceil(x - 0.5) : std::floor(x + 0.5));
}

namespace {

std::vector<std::string> sample_without_replacement(
    std::vector<std::string> pool, size_t count, Rng& rng,
    const std::string& pool_name) {
  if (pool.size() < count)
    throw ValidationError("split capacity: pool '" + pool_name + "' has " +
                          std::to_string(pool.size()) + " images, need " +
                          std::to_string(count));
  rng.shuffle(pool);
  pool.resize(count);
  return pool;
}

}  // namespace

DatasetSplit build_splits(const Manifest& manifest, const SplitConfig& cfg) {
  cfg.validate();

  std::vector<std::string> normal_pool;
  std::vector<std::string> unl_normal, unl_abnormal, unl_unknown;
  std::vector<std::string> test_normal, test_abnormal;
  for (const auto& e : manifest.entries) {
    switch (e.split) {
      case Split::Normal:
        normal_pool.push_back(e.path);
        break;
      case Split::Unlabeled:
        if (!e.label.has_value())
          unl_unknown.push_back(e.path);
        else if (*e.label == 1)
          unl_abnormal.push_back(e.path);
        else
          unl_normal.push_back(e.path);
        break;
      case Split::Test:
        (e.label.value() == 1 ? test_abnormal : test_normal).push_back(e.path);
        break;
    }
  }

  const int want_abnormal = round_half_away(cfg.anomaly_ratio * cfg.n_unlabeled);
  const int want_unl_normal = cfg.n_unlabeled - want_abnormal;
  if (cfg.n_unlabeled > 0 && unl_normal.empty() && unl_abnormal.empty())
    throw ValidationError(
        "split capacity: anomaly-ratio control needs hidden labels in the "
        "unlabeled pool, found none");

  DatasetSplit out;
  out.base_dir = manifest.base_dir;
  out.anomaly_ratio = cfg.anomaly_ratio;
  out.unlabeled_abnormal = want_abnormal;

  Rng rng_n = derive_rng(cfg.seed, "split.normal");
  Rng rng_u = derive_rng(cfg.seed, "split.unlabeled");
  Rng rng_t = derive_rng(cfg.seed, "split.test");

  out.d_n = sample_without_replacement(std::move(normal_pool),
                                       static_cast<size_t>(cfg.n_normal),
                                       rng_n, "normal");

  auto u_ab = sample_without_replacement(std::move(unl_abnormal),
                                         static_cast<size_t>(want_abnormal),
                                         rng_u, "unlabeled/abnormal");
  auto u_no = sample_without_replacement(std::move(unl_normal),
                                         static_cast<size_t>(want_unl_normal),
                                         rng_u, "unlabeled/normal");
  out.d_u.reserve(u_ab.size() + u_no.size());
  out.d_u.insert(out.d_u.end(), u_no.begin(), u_no.end());
  out.d_u.insert(out.d_u.end(), u_ab.begin(), u_ab.end());
  rng_u.shuffle(out.d_u);  // hide class grouping in the ordering too

  auto t_no = sample_without_replacement(std::move(test_normal),
                                         static_cast<size_t>(cfg.n_test_normal),
                                         rng_t, "test/normal");
  auto t_ab = sample_without_replacement(
      std::move(test_abnormal), static_cast<size_t>(cfg.n_test_abnormal),
      rng_t, "test/abnormal");
  for (auto& p : t_no) out.d_t.push_back({std::move(p), 0});
  for (auto& p : t_ab) out.d_t.push_back({std::move(p), 1});

  return out;
}

void write_splits(const DatasetSplit& s, const std::filesystem::path& file) {
  json j;
  j["schema_version"] = 1;
  j["d_n"] = s.d_n;
  j["d_u"] = s.d_u;
  json dt = json::array();
  for (const auto& t : s.d_t) dt.push_back({{"path", t.path}, {"label", t.label}});
  j["d_t"] = dt;
  j["meta"] = {{"anomaly_ratio", s.anomaly_ratio},
               {"unlabeled_abnormal", s.unlabeled_abnormal}};
  std::ofstream out(file);
  if (!out) throw IoError("cannot write splits: " + file.string());
  out << j.dump(2) << "\n";
}

DatasetSplit read_splits(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open splits: " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("splits file " + file.string() + ": " + e.what());
  }
  DatasetSplit s;
  s.base_dir = file.parent_path();
  s.d_n = j.at("d_n").get<std::vector<std::string>>();
  s.d_u = j.at("d_u").get<std::vector<std::string>>();
  for (const auto& t : j.at("d_t"))
    s.d_t.push_back({t.at("path").get<std::string>(), t.at("label").get<int>()});
  s.anomaly_ratio = j.at("meta").at("anomaly_ratio").get<double>();
  s.unlabeled_abnormal = j.at("meta").at("unlabeled_abnormal").get<int>();
  return s;
}

}  // namespace ddad
