#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ddad/errors.hpp"

namespace ddad {

enum class Split { Normal, Unlabeled, Test };

std::string split_name(Split s);
Split split_from_name(const std::string& s);

struct ManifestEntry {
  std::string path;  // relative to the manifest directory
  Split split = Split::Normal;
  // Required for test rows. For unlabeled rows this is hidden ground truth
  // that only the split builder may consult when mixing D_u; it is stripped
  // from every training-facing view.
  std::optional<int> label;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;  // resolves relative entry paths

  std::filesystem::path resolve(const ManifestEntry& e) const {
    return base_dir / e.path;
  }
};

// File format (documented in README):
//   line 1:  #ddad_manifest schema_version=1
//   line 2:  path,split,label
//   lines:   <relative path>,<normal|unlabeled|test>,<0|1|empty>
// Rules enforced here: unique paths; test rows labeled; normal rows label
// 0 or empty.
Manifest parse_manifest(const std::filesystem::path& file);
Manifest parse_manifest_text(const std::string& text,
                             const std::filesystem::path& base_dir);

void write_manifest(const Manifest& m, const std::filesystem::path& file);

// Validation shared by the parser and programmatic construction.
void validate_manifest(const Manifest& m);

}  // namespace ddad
