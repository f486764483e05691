#include "epilogue/catalog/catalog.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "epilogue/codec/digest.hpp"
#include "epilogue/store/reader.hpp"

namespace epilogue::catalog {
namespace fs = std::filesystem;

namespace {

class StoreLock {
 public:
  explicit StoreLock(const fs::path& store) {
    std::error_code ec;
    fs::create_directories(store, ec);
    const auto path = store / ".lock";
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) {
      if (fd_ >= 0) ::close(fd_);
      fail(ErrorCode::io_failure, "cannot lock " + path.string());
    }
  }
  ~StoreLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  StoreLock(const StoreLock&) = delete;
  StoreLock& operator=(const StoreLock&) = delete;

 private:
  int fd_ = -1;
};

void write_atomically(const fs::path& target, const std::string& content) {
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  const fs::path tmp = target.parent_path() / (".tmp-" + std::to_string(rng()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out.flush()) fail(ErrorCode::io_failure, "cannot write " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::io_failure, "cannot write " + target.string());
  }
}

std::pair<std::string, std::string> split_ref(const std::string& ref) {
  auto at = ref.find('@');
  if (at == std::string::npos) return {ref, {}};
  return {ref.substr(0, at), ref.substr(at + 1)};
}

std::vector<std::string> versions_of(const fs::path& store, const std::string& name) {
  std::vector<std::pair<SemVer, std::string>> found;
  std::error_code ec;
  const fs::path dir = store / name;
  if (name.empty() || name[0] == '.' || !fs::is_directory(dir, ec)) return {};
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    const std::string v = entry.path().filename().string();
    auto sv = parse_semver(v);
    if (sv && fs::exists(entry.path() / "manifest.json")) found.emplace_back(*sv, v);
  }
  std::sort(found.begin(), found.end(),
            [](const auto& a, const auto& b) { return semver_less(a.first, b.first); });
  std::vector<std::string> out;
  for (auto& [sv, v] : found) out.push_back(std::move(v));
  return out;
}

store::Reader open_verified(const fs::path& path, const FileEntry& entry, const std::string& digest) {
  std::error_code ec;
  if (!fs::exists(path, ec)) fail(ErrorCode::io_failure, "missing file " + path.string());
  const std::string actual = codec::sha256_file(path);
  if (actual != entry.sha256) {
    fail(ErrorCode::checksum_mismatch,
         entry.location + ": expected sha256 " + entry.sha256 + ", got " + actual);
  }
  auto reader = store::Reader::open(path);
  if (schema_digest(reader.schema()) != digest) {
    fail(ErrorCode::schema_digest_mismatch, entry.location + ": embedded schema does not match manifest");
  }
  return reader;
}

}  // namespace

Catalog::Catalog(fs::path store_dir, fs::path cache_dir, FetchOptions fetch)
    : store_dir_(std::move(store_dir)), cache_dir_(std::move(cache_dir)), fetch_(std::move(fetch)) {}

void Catalog::register_dataset(const Manifest& manifest) {
  validate_manifest(manifest);
  StoreLock lock(store_dir_);
  const fs::path target = store_dir_ / manifest.name / manifest.version / "manifest.json";
  if (fs::exists(target)) {
    fail(ErrorCode::duplicate_version, manifest.name + "@" + manifest.version + " is already registered");
  }
  for (const auto& [split, files] : manifest.splits) {
    for (const auto& f : files) {
      if (is_remote(f.location)) continue;
      auto reader = open_verified(local_path(f.location), f, manifest.schema_digest);
      if (reader.episode_count() != f.episode_count) {
        fail(ErrorCode::invalid_argument, f.location + ": manifest says " + std::to_string(f.episode_count) +
                                              " episodes, file has " +
                                              std::to_string(reader.episode_count()));
      }
    }
  }
  write_atomically(target, serialize_manifest(manifest));
}

std::vector<std::string> Catalog::list() const {
  std::vector<std::string> names;
  std::error_code ec;
  if (!fs::is_directory(store_dir_, ec)) return {};
  for (const auto& entry : fs::directory_iterator(store_dir_, ec)) {
    if (entry.is_directory()) names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  std::vector<std::string> out;
  for (const auto& name : names) {
    for (const auto& v : versions_of(store_dir_, name)) out.push_back(name + "@" + v);
  }
  return out;
}

Manifest Catalog::manifest(const std::string& ref) const {
  auto [name, version] = split_ref(ref);
  if (version.empty()) {
    auto versions = versions_of(store_dir_, name);
    if (versions.empty()) fail(ErrorCode::unknown_dataset, "no dataset named '" + name + "'");
    version = versions.back();
  }
  const fs::path path = store_dir_ / name / version / "manifest.json";
  if (name.empty() || name[0] == '.' || !fs::exists(path)) {
    fail(ErrorCode::unknown_dataset, "no dataset " + name + "@" + version);
  }
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  auto doc = nlohmann::json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) fail(ErrorCode::invalid_argument, "unparseable manifest " + path.string());
  return manifest_from_json(doc);
}

LoadedSplit Catalog::load(const std::string& ref, const std::string& split_expr) const {
  LoadedSplit out;
  out.manifest = manifest(ref);
  const SplitExpr expr = parse_split_expr(split_expr);
  auto split = out.manifest.splits.find(expr.split);
  if (split == out.manifest.splits.end()) {
    fail(ErrorCode::unknown_split, "dataset " + out.manifest.name + " has no split '" + expr.split + "'");
  }
  std::vector<store::Reader> readers;
  std::uint64_t total = 0;
  for (const auto& f : split->second) {
    fs::path path = is_remote(f.location) ? fetch(f, cache_dir_, fetch_).path : local_path(f.location);
    readers.push_back(open_verified(path, f, out.manifest.schema_digest));
    total += readers.back().episode_count();
  }
  out.schema = readers.empty() ? DatasetSchema{} : readers.front().schema();
  const std::uint64_t end = std::min(total, expr.end.value_or(total));
  const std::uint64_t begin = std::min(expr.begin, end);
  out.episode_count = end - begin;

  struct Cursor {
    std::vector<store::Reader> readers;
    std::size_t file = 0;
    std::uint64_t local = 0;  // episode index inside readers[file]
    std::uint64_t remaining = 0;
  };
  auto cur = std::make_shared<Cursor>(Cursor{std::move(readers), 0, begin, end - begin});
  while (cur->file < cur->readers.size() && cur->local >= cur->readers[cur->file].episode_count()) {
    cur->local -= cur->readers[cur->file].episode_count();
    ++cur->file;
  }
  out.episodes = Stream<EpisodeRecord>([cur]() -> std::optional<EpisodeRecord> {
    while (cur->remaining > 0 && cur->file < cur->readers.size()) {
      const auto& reader = cur->readers[cur->file];
      if (cur->local < reader.episode_count()) {
        --cur->remaining;
        return reader.get_episode(cur->local++);
      }
      ++cur->file;
      cur->local = 0;
    }
    return std::nullopt;
  });
  return out;
}

Manifest describe_files(Manifest base, const std::map<std::string, std::vector<fs::path>>& splits) {
  base.splits.clear();
  std::optional<std::string> digest;
  for (const auto& [split, paths] : splits) {
    auto& entries = base.splits[split];
    for (const auto& p : paths) {
      auto reader = store::Reader::open(p);
      const std::string d = schema_digest(reader.schema());
      if (digest && *digest != d) {
        fail(ErrorCode::schema_digest_mismatch, p.string() + " has a different schema");
      }
      digest = d;
      entries.push_back(FileEntry{fs::absolute(p).lexically_normal().string(), codec::sha256_file(p),
                                  reader.episode_count()});
    }
  }
  if (!digest) fail(ErrorCode::invalid_argument, "no files to describe");
  base.schema_digest = *digest;
  return base;
}

}  // namespace epilogue::catalog
