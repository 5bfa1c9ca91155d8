#include "ddad/report.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ddad {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ValidationError(where + ": bad number '" + s + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::ofstream open_out(const std::filesystem::path& file) {
  if (file.has_parent_path())
    std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  return in;
}

}  // namespace

void write_metrics_csv(const std::filesystem::path& file,
                       const std::vector<MetricRow>& rows,
                       const std::map<std::string, std::string>& metadata) {
  if (rows.empty()) throw ValidationError("metrics report: no rows to export");
  auto out = open_out(file);
  for (const auto& [k, v] : metadata) out << "# " << k << ": " << v << "\n";
  out << "score_kind,auc,ap\n";
  for (const auto& r : rows)
    out << r.score_kind << "," << fmt_double(r.auc_value) << ","
        << fmt_double(r.ap_value) << "\n";
  if (!out) throw IoError("failed writing " + file.string());
}

std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& file) {
  auto in = open_in(file);
  std::vector<MetricRow> rows;
  std::string line;
  bool saw_header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      if (line != "score_kind,auc,ap")
        throw ValidationError(file.string() + ": unexpected header '" + line + "'");
      saw_header = true;
      continue;
    }
    auto cells = split_csv(line);
    const std::string where = file.string() + ":" + std::to_string(lineno);
    if (cells.size() != 3)
      throw ValidationError(where + ": expected 3 fields");
    rows.push_back({cells[0], parse_double(cells[1], where),
                    parse_double(cells[2], where)});
  }
  return rows;
}

void write_scores_csv(const std::filesystem::path& file,
                      const std::vector<ScoreRow>& rows) {
  auto out = open_out(file);
  out << "path,kind,score,label\n";
  for (const auto& r : rows) {
    out << r.path << "," << r.kind << "," << fmt_double(r.score) << ",";
    if (r.label) out << *r.label;
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + file.string());
}

std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& file) {
  auto in = open_in(file);
  std::vector<ScoreRow> rows;
  std::string line;
  bool saw_header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      saw_header = true;
      continue;
    }
    auto cells = split_csv(line);
    const std::string where = file.string() + ":" + std::to_string(lineno);
    if (cells.size() != 4)
      throw ValidationError(where + ": expected 4 fields");
    ScoreRow r;
    r.path = cells[0];
    r.kind = cells[1];
    r.score = parse_double(cells[2], where);
    if (!cells[3].empty())
      r.label = static_cast<int>(parse_double(cells[3], where));
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_histogram_csv(const std::filesystem::path& file,
                         const HistogramPair& hist, double chi2) {
  auto out = open_out(file);
  out << "# bins: " << hist.bins << "\n";
  out << "# range: [" << fmt_double(hist.lo) << ", " << fmt_double(hist.hi)
      << "]\n";
  out << "# chi2_distance: " << fmt_double(chi2) << "\n";
  out << "bin,normal,abnormal\n";
  for (int b = 0; b < hist.bins; ++b)
    out << b << "," << fmt_double(hist.normal_hist[static_cast<size_t>(b)])
        << "," << fmt_double(hist.abnormal_hist[static_cast<size_t>(b)])
        << "\n";
  if (!out) throw IoError("failed writing " + file.string());
}

void write_sweep_csv(const std::filesystem::path& file,
                     const std::vector<SweepRow>& rows,
                     const std::map<std::string, std::string>& metadata) {
  auto out = open_out(file);
  for (const auto& [k, v] : metadata) out << "# " << k << ": " << v << "\n";
  out << "anomaly_ratio,score_kind,auc\n";
  for (const auto& r : rows)
    out << fmt_double(r.anomaly_ratio) << "," << r.score_kind << ","
        << fmt_double(r.auc_value) << "\n";
  if (!out) throw IoError("failed writing " + file.string());
}

std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& file) {
  auto in = open_in(file);
  std::vector<SweepRow> rows;
  std::string line;
  bool saw_header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      saw_header = true;
      continue;
    }
    auto cells = split_csv(line);
    const std::string where = file.string() + ":" + std::to_string(lineno);
    if (cells.size() != 3)
      throw ValidationError(where + ": expected 3 fields");
    rows.push_back({parse_double(cells[0], where), cells[1],
                    parse_double(cells[2], where)});
  }
  return rows;
}

}  // namespace ddad
