#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mrinet/metrics.hpp"

namespace mrinet {

struct ManifestEntry {
  std::filesystem::path path;
  Label label = Label::No;

  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  std::size_t count(Label label) const;
  std::size_t size() const noexcept { return entries.size(); }
  bool operator==(const DatasetManifest&) const = default;
};

/// Enumerates root/yes/*.pgm and root/no/*.pgm, sorted by path.
/// Throws MissingDir or EmptyClass.
DatasetManifest scan_dataset(const std::filesystem::path& root);

struct SplitConfig {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  std::uint64_t seed = 42;
  bool stratified = true;

  /// Throws InvalidConfig unless all ratios are positive and sum to 1.
  void validate() const;
};

struct DatasetSplits {
  DatasetManifest train;
  DatasetManifest val;
  DatasetManifest test;

  bool operator==(const DatasetSplits&) const = default;
};

/// Per class (or over the whole set when not stratified): seeded
/// Fisher-Yates shuffle, then val and test each take
/// max(1, floor(ratio * n)) entries and train keeps the rest.
/// Throws ClassTooSmall when a group has fewer than 3 entries.
DatasetSplits stratified_split(const DatasetManifest& manifest,
                               const SplitConfig& cfg);

/// CSV with header "path,label".
void write_manifest(const DatasetManifest& manifest,
                    const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace mrinet
