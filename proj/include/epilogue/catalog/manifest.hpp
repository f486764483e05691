#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "epilogue/core/schema.hpp"

namespace epilogue::catalog {

struct FileEntry {
  // Absolute path, file:// URL or http(s):// URL.
  std::string location;
  std::string sha256;
  std::uint64_t episode_count = 0;

  bool operator==(const FileEntry&) const = default;
};

struct Manifest {
  std::string name;
  std::string version;
  std::string description;
  std::string citation;
  std::string license;
  std::string homepage;
  std::map<std::string, std::vector<FileEntry>> splits;
  std::string schema_digest;

  bool operator==(const Manifest&) const = default;
};

nlohmann::json manifest_to_json(const Manifest& manifest);
// INVALID_ARGUMENT on missing or mistyped fields.
Manifest manifest_from_json(const nlohmann::json& doc);
// Canonical key-sorted form, the exact bytes stored on disk.
std::string serialize_manifest(const Manifest& manifest);

/// INVALID_ARGUMENT unless: name is non-empty without '/', '@' or spaces;
/// version is MAJOR.MINOR.PATCH with an optional -prerelease; every split
/// name is non-empty; every file has a location and a sha256 hex digest;
/// schema_digest is a sha256 hex digest.
void validate_manifest(const Manifest& manifest);

struct SemVer {
  std::uint64_t major = 0, minor = 0, patch = 0;
  std::string prerelease;
};
std::optional<SemVer> parse_semver(const std::string& text);
// Semver precedence; a prerelease sorts before its release.
bool semver_less(const SemVer& a, const SemVer& b);

/// sha256 of the canonical schema document.
std::string schema_digest(const DatasetSchema& schema);

/// `NAME`, `NAME[:K]`, `NAME[A:B]` or `NAME[A:]`: a split and an optional
/// half-open episode range.
struct SplitExpr {
  std::string split;
  std::uint64_t begin = 0;
  std::optional<std::uint64_t> end;

  bool operator==(const SplitExpr&) const = default;
};

// BAD_SPLIT_EXPR on grammar errors or A > B.
SplitExpr parse_split_expr(const std::string& text);
std::string to_string(const SplitExpr& expr);

}  // namespace epilogue::catalog
