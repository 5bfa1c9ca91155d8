#include "ddad/report.hpp"

#include <filesystem>
#include <fstream>

#include "doctest.h"

using namespace ddad;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("ddad_report_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("metrics table round-trips to identical values") {
  auto dir = temp_dir("metrics");
  std::vector<MetricRow> rows = {
      {"a_rec", 0.669, 0.664},
      {"a_inter", 0.8512345678901234, 0.871},
      {"r_dual", 0.913, 0.916},
  };
  write_metrics_csv(dir / "metrics.csv", rows,
                    {{"seed", "1"}, {"anomaly_ratio", "0.6"}});
  auto back = read_metrics_csv(dir / "metrics.csv");
  REQUIRE(back.size() == rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].score_kind == rows[i].score_kind);
    CHECK(back[i].auc_value == rows[i].auc_value);  // exact, %.17g
    CHECK(back[i].ap_value == rows[i].ap_value);
  }
}

TEST_CASE("one-row table keeps its header") {
  auto dir = temp_dir("onerow");
  write_metrics_csv(dir / "m.csv", {{"a_intra", 0.5, 0.5}}, {});
  std::ifstream in(dir / "m.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "score_kind,auc,ap");
}

TEST_CASE("empty metrics export is a validation error") {
  auto dir = temp_dir("empty");
  CHECK_THROWS_AS(write_metrics_csv(dir / "m.csv", {}, {}), ValidationError);
}

TEST_CASE("scores table round-trips, optional labels preserved") {
  auto dir = temp_dir("scores");
  std::vector<ScoreRow> rows = {
      {"images/a.png", "a_rec", 0.123456789012345, 1},
      {"images/b.png", "a_rec", 0.2, 0},
      {"images/c.png", "a_intra", 0.5, std::nullopt},
  };
  write_scores_csv(dir / "scores.csv", rows);
  auto back = read_scores_csv(dir / "scores.csv");
  REQUIRE(back.size() == 3);
  CHECK(back[0].score == rows[0].score);
  CHECK(back[0].label == 1);
  CHECK(back[2].kind == "a_intra");
  CHECK_FALSE(back[2].label.has_value());
}

TEST_CASE("histogram export carries bins and chi2 in the header") {
  auto dir = temp_dir("hist");
  HistogramPair h = build_histogram_pair({0.1, 0.2}, {0.8, 0.9}, 4);
  write_histogram_csv(dir / "hist.csv", h, histogram_chi2(h));
  std::ifstream in(dir / "hist.csv");
  std::string all((std::istreambuf_iterator<char>(in)), {});
  CHECK(all.find("# bins: 4") != std::string::npos);
  CHECK(all.find("# chi2_distance: 1") != std::string::npos);
  CHECK(all.find("bin,normal,abnormal") != std::string::npos);
}

TEST_CASE("sweep table round trip") {
  auto dir = temp_dir("sweep");
  std::vector<SweepRow> rows = {
      {0.0, "a_inter", 0.71}, {0.5, "a_inter", 0.84}, {1.0, "a_inter", 0.92}};
  write_sweep_csv(dir / "sweep.csv", rows, {{"seed", "1"}});
  auto back = read_sweep_csv(dir / "sweep.csv");
  REQUIRE(back.size() == 3);
  CHECK(back[1].anomaly_ratio == 0.5);
  CHECK(back[1].score_kind == "a_inter");
  CHECK(back[1].auc_value == 0.84);
}

TEST_CASE("malformed tables are rejected with line context") {
  auto dir = temp_dir("badcsv");
  std::ofstream(dir / "m.csv") << "score_kind,auc,ap\nonly_two,0.5\n";
  try {
    read_metrics_csv(dir / "m.csv");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  std::ofstream(dir / "n.csv") << "score_kind,auc,ap\nx,abc,0.5\n";
  CHECK_THROWS_AS(read_metrics_csv(dir / "n.csv"), ValidationError);
}
