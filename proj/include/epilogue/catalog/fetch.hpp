#pragma once

#include <chrono>
#include <filesystem>
#include <functional>

#include "epilogue/catalog/manifest.hpp"

namespace epilogue::catalog {

struct FetchOptions {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{500};  // doubled after each failure
  std::chrono::seconds timeout{30};
  // Replaceable so tests can observe the backoff without waiting.
  std::function<void(std::chrono::milliseconds)> sleep;
};

struct FetchResult {
  std::filesystem::path path;
  bool cache_hit = false;
  int attempts = 0;  // network attempts made; 0 on a cache hit
};

/// Makes the file of `entry` available under <cache_dir>/sha256/<hex>.
///
/// A cached file whose content still hashes to entry.sha256 is returned
/// without any transfer. Otherwise http(s) URLs are downloaded and file://
/// URLs or plain paths copied, into a temporary file that is renamed into
/// place only after its checksum matched. Connection failures and 5xx
/// responses are retried with exponential backoff; other HTTP statuses fail
/// at once. Errors: NETWORK_FAILURE, CHECKSUM_MISMATCH (cache untouched),
/// IO_FAILURE.
FetchResult fetch(const FileEntry& entry, const std::filesystem::path& cache_dir,
                  const FetchOptions& options = {});

bool is_remote(const std::string& location);
// Local filesystem path of a file:// URL or plain path.
std::filesystem::path local_path(const std::string& location);

}  // namespace epilogue::catalog
