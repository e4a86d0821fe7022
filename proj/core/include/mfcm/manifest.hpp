#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string_view>
#include <vector>

namespace mfcm {

enum class Split { Training, Validation, Testing };
enum class Label { Real = 0, Fake = 1 };

inline constexpr std::array<Split, 3> kAllSplits = {Split::Training, Split::Validation, Split::Testing};

std::string_view to_string(Split split);
std::string_view to_string(Label label);
// Throws ConfigInvalid for unknown names.
Split parse_split(std::string_view name);
Label parse_label(std::string_view name);

struct ManifestEntry {
  std::filesystem::path path;
  Split split = Split::Training;
  Label label = Label::Real;
};

struct Manifest {
  std::vector<ManifestEntry> entries;  // sorted by path

  std::size_t count(Split split) const;
  std::size_t count(Split split, Label label) const;
  std::vector<ManifestEntry> select(Split split) const;
};

// Loads either a directory laid out as <root>/<split>/{real,fake}/*.wav for
// the splits training, validation and testing, or a CSV file with header
// `path,split,label` (relative paths resolve against the CSV's directory;
// fields must not contain commas).
//
// Throws MissingSplit, EmptyClass, or IoError for entries that do not exist.
Manifest load_manifest(const std::filesystem::path& root);

}  // namespace mfcm
