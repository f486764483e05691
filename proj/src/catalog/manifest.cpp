#include "epilogue/catalog/manifest.hpp"

#include <charconv>
#include <regex>

#include "epilogue/codec/digest.hpp"

namespace epilogue::catalog {

using nlohmann::json;

json manifest_to_json(const Manifest& m) {
  json splits = json::object();
  for (const auto& [name, files] : m.splits) {
    json list = json::array();
    for (const auto& f : files) {
      list.push_back({{"url", f.location}, {"sha256", f.sha256}, {"episode_count", f.episode_count}});
    }
    splits[name] = std::move(list);
  }
  return json{{"name", m.name},       {"version", m.version},   {"description", m.description},
              {"citation", m.citation}, {"license", m.license}, {"homepage", m.homepage},
              {"splits", splits},       {"schema_digest", m.schema_digest}};
}

namespace {

std::string text_field(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || !it->is_string()) {
    fail(ErrorCode::invalid_argument, std::string("manifest field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

}  // namespace

Manifest manifest_from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorCode::invalid_argument, "manifest must be an object");
  Manifest m;
  m.name = text_field(doc, "name");
  m.version = text_field(doc, "version");
  m.description = text_field(doc, "description");
  m.citation = text_field(doc, "citation");
  m.license = text_field(doc, "license");
  m.homepage = text_field(doc, "homepage");
  m.schema_digest = text_field(doc, "schema_digest");
  auto splits = doc.find("splits");
  if (splits == doc.end() || !splits->is_object()) {
    fail(ErrorCode::invalid_argument, "manifest field 'splits' must be an object");
  }
  for (const auto& [name, files] : splits->items()) {
    if (!files.is_array()) fail(ErrorCode::invalid_argument, "split '" + name + "' must be a list");
    auto& out = m.splits[name];
    for (const auto& f : files) {
      if (!f.is_object() || !f.contains("episode_count") || !f["episode_count"].is_number_unsigned()) {
        fail(ErrorCode::invalid_argument, "split '" + name + "' has a malformed file entry");
      }
      out.push_back(FileEntry{text_field(f, "url"), text_field(f, "sha256"),
                              f["episode_count"].get<std::uint64_t>()});
    }
  }
  return m;
}

std::string serialize_manifest(const Manifest& manifest) {
  return canonical_dump(manifest_to_json(manifest)) + "\n";
}

std::optional<SemVer> parse_semver(const std::string& text) {
  static const std::regex re(R"((0|[1-9][0-9]*)\.(0|[1-9][0-9]*)\.(0|[1-9][0-9]*)(?:-([0-9A-Za-z.-]+))?)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) return std::nullopt;
  SemVer v;
  auto num = [](const std::string& s, std::uint64_t& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
  };
  if (!num(m[1], v.major) || !num(m[2], v.minor) || !num(m[3], v.patch)) return std::nullopt;
  v.prerelease = m[4];
  return v;
}

bool semver_less(const SemVer& a, const SemVer& b) {
  if (std::tie(a.major, a.minor, a.patch) != std::tie(b.major, b.minor, b.patch)) {
    return std::tie(a.major, a.minor, a.patch) < std::tie(b.major, b.minor, b.patch);
  }
  if (a.prerelease.empty() != b.prerelease.empty()) return !a.prerelease.empty();
  return a.prerelease < b.prerelease;
}

void validate_manifest(const Manifest& m) {
  if (m.name.empty() || m.name.find_first_of("/@ \\") != std::string::npos || m.name[0] == '.') {
    fail(ErrorCode::invalid_argument, "invalid dataset name '" + m.name + "'");
  }
  if (!parse_semver(m.version)) fail(ErrorCode::invalid_argument, "invalid version '" + m.version + "'");
  if (!codec::is_sha256_hex(m.schema_digest)) {
    fail(ErrorCode::invalid_argument, "schema_digest must be a sha256 hex digest");
  }
  for (const auto& [split, files] : m.splits) {
    if (split.empty() || split.find_first_of("[]:") != std::string::npos) {
      fail(ErrorCode::invalid_argument, "invalid split name '" + split + "'");
    }
    for (const auto& f : files) {
      if (f.location.empty()) fail(ErrorCode::invalid_argument, "file entry without location in '" + split + "'");
      if (!codec::is_sha256_hex(f.sha256)) {
        fail(ErrorCode::invalid_argument, "file " + f.location + " has no valid sha256");
      }
    }
  }
}

std::string schema_digest(const DatasetSchema& schema) {
  return codec::sha256_hex(canonical_schema_document(schema));
}

SplitExpr parse_split_expr(const std::string& text) {
  static const std::regex re(R"(([A-Za-z0-9_.\-]+)(?:\[([0-9]*):([0-9]*)\])?)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) fail(ErrorCode::bad_split_expr, "cannot parse split '" + text + "'");
  SplitExpr expr;
  expr.split = m[1];
  auto number = [&](const std::string& s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      fail(ErrorCode::bad_split_expr, "bad index '" + s + "' in '" + text + "'");
    }
    return v;
  };
  if (m[2].matched || m[3].matched) {
    if (m[2].length() > 0) expr.begin = number(m[2]);
    if (m[3].length() > 0) {
      expr.end = number(m[3]);
    } else if (m[2].length() == 0) {
      fail(ErrorCode::bad_split_expr, "empty range in '" + text + "'");
    }
  }
  if (expr.end && expr.begin > *expr.end) {
    fail(ErrorCode::bad_split_expr, "range start exceeds end in '" + text + "'");
  }
  return expr;
}

std::string to_string(const SplitExpr& expr) {
  if (expr.begin == 0 && !expr.end) return expr.split;
  std::string out = expr.split + "[";
  if (expr.begin != 0) out += std::to_string(expr.begin);
  out += ":";
  if (expr.end) out += std::to_string(*expr.end);
  return out + "]";
}

}  // namespace epilogue::catalog
