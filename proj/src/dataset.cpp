#include "mrinet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mrinet/csv.hpp"
#include "mrinet/error.hpp"
#include "mrinet/rng.hpp"

namespace mrinet {

namespace fs = std::filesystem;

std::size_t DatasetManifest::count(Label label) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(),
                    [label](const ManifestEntry& e) { return e.label == label; }));
}

DatasetManifest scan_dataset(const fs::path& root) {
  DatasetManifest manifest;
  for (Label label : {Label::Yes, Label::No}) {
    const fs::path dir = root / (label == Label::Yes ? "yes" : "no");
    if (!fs::is_directory(dir)) {
      throw Error(ErrorKind::MissingDir, "missing class directory " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      if (ext == ".pgm") files.push_back(entry.path());
    }
    if (files.empty()) {
      throw Error(ErrorKind::EmptyClass, "no .pgm files in " + dir.string());
    }
    for (auto& f : files) manifest.entries.push_back({std::move(f), label});
  }
  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
  return manifest;
}

void SplitConfig::validate() const {
  if (!(train > 0.0 && val > 0.0 && test > 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "split ratios must be positive");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidConfig, "split ratios must sum to 1");
  }
}

DatasetSplits stratified_split(const DatasetManifest& manifest,
                               const SplitConfig& cfg) {
  cfg.validate();
  std::vector<std::vector<ManifestEntry>> groups;
  if (cfg.stratified) {
    for (Label label : {Label::Yes, Label::No}) {
      std::vector<ManifestEntry> group;
      for (const auto& e : manifest.entries) {
        if (e.label == label) group.push_back(e);
      }
      if (!group.empty()) groups.push_back(std::move(group));
    }
  } else {
    groups.push_back(manifest.entries);
  }

  DatasetSplits splits;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& group = groups[g];
    const std::size_t n = group.size();
    if (n < 3) {
      throw Error(ErrorKind::ClassTooSmall,
                  "split group has " + std::to_string(n) + " entries, need >= 3");
    }
    // Stream ids keep the YES and NO shuffles independent of each other.
    Rng rng(derive_seed(cfg.seed, cfg.stratified
                                      ? static_cast<std::uint64_t>(group.front().label)
                                      : 2));
    shuffle(std::span<ManifestEntry>(group), rng);
    auto take = [n](double ratio) {
      return std::max<std::size_t>(
          1, static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n))));
    };
    const std::size_t n_val = take(cfg.val);
    const std::size_t n_test = take(cfg.test);
    for (std::size_t i = 0; i < n; ++i) {
      auto& target = i < n_val            ? splits.val
                     : i < n_val + n_test ? splits.test
                                          : splits.train;
      target.entries.push_back(group[i]);
    }
  }
  for (DatasetManifest* m : {&splits.train, &splits.val, &splits.test}) {
    std::sort(m->entries.begin(), m->entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
  }
  return splits;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  std::vector<csv::Row> rows{{"path", "label"}};
  for (const auto& e : manifest.entries) {
    rows.push_back({e.path.string(), std::string(label_name(e.label))});
  }
  csv::write_file(path, rows);
}

DatasetManifest read_manifest(const fs::path& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty() || rows[0] != csv::Row{"path", "label"}) {
    throw Error(ErrorKind::HeaderParse, path.string() + ": expected header path,label");
  }
  DatasetManifest manifest;
  std::set<fs::path> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) {
      throw Error(ErrorKind::HeaderParse,
                  path.string() + ": row " + std::to_string(i) + " needs 2 fields");
    }
    fs::path p = rows[i][0];
    if (!seen.insert(p).second) {
      throw Error(ErrorKind::InvalidConfig, path.string() + ": duplicate path " + p.string());
    }
    manifest.entries.push_back({std::move(p), parse_label(rows[i][1])});
  }
  return manifest;
}

}  // namespace mrinet
