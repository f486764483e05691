#pragma once

#include <filesystem>
#include <map>

#include "epilogue/catalog/fetch.hpp"
#include "epilogue/catalog/manifest.hpp"
#include "epilogue/core/stream.hpp"
#include "epilogue/core/step.hpp"

namespace epilogue::catalog {

struct LoadedSplit {
  Manifest manifest;
  DatasetSchema schema;
  // Episodes in the requested range, after clamping to the split size.
  std::uint64_t episode_count = 0;
  Stream<EpisodeRecord> episodes;
};

/// Directory-backed dataset catalog. Manifests live at
/// <store>/<name>/<version>/manifest.json; remote files are cached under
/// <cache>/sha256/<hex>.
class Catalog {
 public:
  Catalog(std::filesystem::path store_dir, std::filesystem::path cache_dir, FetchOptions fetch = {});

  /// Persists the manifest after verifying every local file: checksum
  /// (CHECKSUM_MISMATCH), embedded schema (SCHEMA_DIGEST_MISMATCH) and
  /// episode count (INVALID_ARGUMENT). Remote files are verified on load.
  /// DUPLICATE_VERSION if name@version exists. Holds <store>/.lock.
  void register_dataset(const Manifest& manifest);

  // "name@version", sorted by name then semver.
  std::vector<std::string> list() const;

  /// `name` (highest version) or `name@version`. UNKNOWN_DATASET.
  Manifest manifest(const std::string& ref) const;

  /// Opens the split's files in manifest order and verifies each one's
  /// checksum and schema before returning; remote files are fetched first.
  /// Range indices count episodes across the split's files; an end past
  /// the split is clamped. Episodes are decoded lazily.
  /// UNKNOWN_DATASET, UNKNOWN_SPLIT, BAD_SPLIT_EXPR, CHECKSUM_MISMATCH,
  /// SCHEMA_DIGEST_MISMATCH, NETWORK_FAILURE.
  LoadedSplit load(const std::string& ref, const std::string& split_expr) const;

  const std::filesystem::path& store_dir() const { return store_dir_; }
  const std::filesystem::path& cache_dir() const { return cache_dir_; }

 private:
  std::filesystem::path store_dir_;
  std::filesystem::path cache_dir_;
  FetchOptions fetch_;
};

/// Fills splits and schema_digest of `base` from local .rlds files, using
/// absolute paths as locations. SCHEMA_DIGEST_MISMATCH if the files do not
/// share one schema; INVALID_ARGUMENT if there are no files.
Manifest describe_files(Manifest base,
                        const std::map<std::string, std::vector<std::filesystem::path>>& splits);

}  // namespace epilogue::catalog
