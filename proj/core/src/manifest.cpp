#include "mfcm/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "mfcm/error.hpp"

namespace mfcm {
namespace {

bool is_wav(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".wav";
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

void sort_and_check(Manifest& m) {
  std::sort(m.entries.begin(), m.entries.end(), [](const auto& a, const auto& b) {
    return a.path.generic_string() < b.path.generic_string();
  });
  for (std::size_t i = 1; i < m.entries.size(); ++i) {
    if (m.entries[i].path == m.entries[i - 1].path) {
      throw InputError("duplicate manifest entry " + m.entries[i].path.string());
    }
  }
}

Manifest load_directory(const std::filesystem::path& root) {
  Manifest m;
  for (Split split : kAllSplits) {
    const auto split_dir = root / std::string(to_string(split));
    if (!std::filesystem::is_directory(split_dir)) {
      throw MissingSplit("missing split directory " + split_dir.string());
    }
    for (Label label : {Label::Real, Label::Fake}) {
      const auto class_dir = split_dir / std::string(to_string(label));
      std::size_t found = 0;
      if (std::filesystem::is_directory(class_dir)) {
        for (const auto& entry : std::filesystem::directory_iterator(class_dir)) {
          if (!entry.is_regular_file() || !is_wav(entry.path())) continue;
          m.entries.push_back({entry.path(), split, label});
          ++found;
        }
      }
      if (found == 0) throw EmptyClass("no .wav files in " + class_dir.string());
    }
  }
  sort_and_check(m);
  return m;
}

Manifest load_csv(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open manifest " + csv.string());
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"path", "split", "label"}) {
    throw InputError("manifest CSV must start with the header path,split,label");
  }
  const auto base = csv.parent_path();
  Manifest m;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      throw InputError("manifest line " + std::to_string(line_no) + ": expected 3 fields");
    }
    std::filesystem::path path = fields[0];
    if (path.is_relative()) path = base / path;
    Split split;
    Label label;
    try {
      split = parse_split(fields[1]);
      label = parse_label(fields[2]);
    } catch (const ConfigInvalid& e) {
      throw InputError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!std::filesystem::is_regular_file(path)) {
      throw IoError("manifest line " + std::to_string(line_no) + ": no such file " + path.string());
    }
    m.entries.push_back({path, split, label});
  }
  sort_and_check(m);
  return m;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Training: return "training";
    case Split::Validation: return "validation";
    case Split::Testing: return "testing";
  }
  return "unknown";
}

std::string_view to_string(Label label) { return label == Label::Fake ? "fake" : "real"; }

Split parse_split(std::string_view name) {
  for (Split s : kAllSplits) {
    if (name == to_string(s)) return s;
  }
  throw ConfigInvalid("unknown split \"" + std::string(name) + "\"");
}

Label parse_label(std::string_view name) {
  if (name == "real") return Label::Real;
  if (name == "fake") return Label::Fake;
  throw ConfigInvalid("unknown label \"" + std::string(name) + "\"");
}

std::size_t Manifest::count(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [&](const auto& e) { return e.split == split; }));
}

std::size_t Manifest::count(Split split, Label label) const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [&](const auto& e) {
    return e.split == split && e.label == label;
  }));
}

std::vector<ManifestEntry> Manifest::select(Split split) const {
  std::vector<ManifestEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [&](const auto& e) { return e.split == split; });
  return out;
}

Manifest load_manifest(const std::filesystem::path& root) {
  if (std::filesystem::is_regular_file(root)) return load_csv(root);
  if (!std::filesystem::is_directory(root)) throw IoError("no manifest at " + root.string());
  return load_directory(root);
}

}  // namespace mfcm
