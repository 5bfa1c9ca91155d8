#include "ddad/manifest.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace ddad {

namespace {
constexpr const char* kHeaderLine = "#ddad_manifest schema_version=1";
constexpr const char* kColumnLine = "path,split,label";

std::string trimmed(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}
}  // namespace

std::string split_name(Split s) {
  switch (s) {
    case Split::Normal: return "normal";
    case Split::Unlabeled: return "unlabeled";
    case Split::Test: return "test";
  }
  return "?";
}

Split split_from_name(const std::string& s) {
  if (s == "normal") return Split::Normal;
  if (s == "unlabeled") return Split::Unlabeled;
  if (s == "test") return Split::Test;
  throw ValidationError("manifest: unknown split '" + s + "'");
}

Manifest parse_manifest_text(const std::string& text,
                             const std::filesystem::path& base_dir) {
  Manifest m;
  m.base_dir = base_dir;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool saw_header = false, saw_columns = false;
  while (std::getline(in, line)) {
    ++lineno;
    line = trimmed(line);
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != kHeaderLine)
        throw ValidationError("manifest line 1: expected '" +
                              std::string(kHeaderLine) + "', got '" + line + "'");
      saw_header = true;
      continue;
    }
    if (!saw_columns) {
      if (line != kColumnLine)
        throw ValidationError("manifest line " + std::to_string(lineno) +
                              ": expected column header '" + kColumnLine + "'");
      saw_columns = true;
      continue;
    }
    std::string where = "manifest line " + std::to_string(lineno);
    std::vector<std::string> cols;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cols.push_back(trimmed(cell));
    if (line.back() == ',') cols.push_back("");
    if (cols.size() < 2 || cols.size() > 3)
      throw ValidationError(where + ": expected 2-3 fields, got " +
                            std::to_string(cols.size()));
    ManifestEntry e;
    e.path = cols[0];
    if (e.path.empty()) throw ValidationError(where + ": empty path");
    e.split = split_from_name(cols[1]);
    if (cols.size() == 3 && !cols[2].empty()) {
      if (cols[2] != "0" && cols[2] != "1")
        throw ValidationError(where + ": label must be 0 or 1, got '" +
                              cols[2] + "'");
      e.label = cols[2] == "1" ? 1 : 0;
    }
    m.entries.push_back(std::move(e));
  }
  if (!saw_header) throw ValidationError("manifest: empty document");
  validate_manifest(m);
  return m;
}

Manifest parse_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open manifest: " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest_text(ss.str(), file.parent_path());
}

void validate_manifest(const Manifest& m) {
  std::unordered_set<std::string> seen;
  for (size_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    std::string where = "manifest entry " + std::to_string(i) + " ('" +
                        e.path + "')";
    if (!seen.insert(e.path).second)
      throw ValidationError(where + ": duplicate path");
    switch (e.split) {
      case Split::Test:
        if (!e.label.has_value())
          throw ValidationError(where + ": test entry requires a label");
        break;
      case Split::Normal:
        if (e.label.has_value() && *e.label != 0)
          throw ValidationError(where + ": normal entry must have label 0");
        break;
      case Split::Unlabeled:
        break;  // optional hidden label, either value
    }
  }
}

void write_manifest(const Manifest& m, const std::filesystem::path& file) {
  validate_manifest(m);
  std::ofstream out(file);
  if (!out) throw IoError("cannot write manifest: " + file.string());
  out << kHeaderLine << "\n" << kColumnLine << "\n";
  for (const auto& e : m.entries) {
    out << e.path << "," << split_name(e.split) << ",";
    if (e.label.has_value()) out << *e.label;
    out << "\n";
  }
  if (!out) throw IoError("failed writing manifest: " + file.string());
}

}  // namespace ddad
