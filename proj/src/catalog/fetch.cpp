#include "epilogue/catalog/fetch.hpp"

#include <httplib.h>

#include <fstream>
#include <random>
#include <regex>
#include <thread>

#include "epilogue/codec/digest.hpp"

namespace epilogue::catalog {
namespace fs = std::filesystem;

bool is_remote(const std::string& location) {
  return location.rfind("http://", 0) == 0 || location.rfind("https://", 0) == 0;
}

fs::path local_path(const std::string& location) {
  if (location.rfind("file://", 0) == 0) return fs::path(location.substr(7));
  return fs::path(location);
}

namespace {

fs::path temp_name(const fs::path& dir) {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  return dir / (".tmp-" + std::to_string(rng()));
}

// Outcome of one download attempt; `retry` marks transient failures.
struct Attempt {
  bool ok = false;
  bool retry = false;
  std::string error;
  std::string sha256;
};

Attempt download(const std::string& url, const fs::path& dest, const FetchOptions& options) {
  static const std::regex re(R"((https?://[^/]+)(/.*)?)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) return {false, false, "malformed URL " + url, {}};
  httplib::Client client(m[1].str());
  client.set_connection_timeout(options.timeout);
  client.set_read_timeout(options.timeout);
  client.set_follow_location(true);

  std::ofstream out(dest, std::ios::binary | std::ios::trunc);
  if (!out) return {false, false, "cannot write " + dest.string(), {}};
  codec::Sha256 hash;
  int status = 0;
  auto res = client.Get(
      m[2].matched ? m[2].str() : "/",
      [&](const httplib::Response& r) {
        status = r.status;
        return r.status < 300;
      },
      [&](const char* data, std::size_t len) {
        out.write(data, static_cast<std::streamsize>(len));
        hash.update(data, len);
        return static_cast<bool>(out);
      });
  out.close();
  if (!res) {
    if (status >= 300) {
      return {false, status >= 500, "HTTP " + std::to_string(status) + " for " + url, {}};
    }
    return {false, true, httplib::to_string(res.error()) + " for " + url, {}};
  }
  if (res->status >= 300) {
    return {false, res->status >= 500, "HTTP " + std::to_string(res->status) + " for " + url, {}};
  }
  if (!out) return {false, false, "write failed for " + dest.string(), {}};
  return {true, false, {}, hash.hex_digest()};
}

}  // namespace

FetchResult fetch(const FileEntry& entry, const fs::path& cache_dir, const FetchOptions& options) {
  if (!codec::is_sha256_hex(entry.sha256)) {
    fail(ErrorCode::invalid_argument, "file " + entry.location + " has no valid sha256");
  }
  const fs::path dir = cache_dir / "sha256";
  const fs::path target = dir / entry.sha256;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io_failure, "cannot create cache " + dir.string() + ": " + ec.message());

  if (fs::exists(target) && codec::sha256_file(target) == entry.sha256) {
    return FetchResult{target, true, 0};
  }

  const fs::path tmp = temp_name(dir);
  auto discard = [&] { fs::remove(tmp, ec); };
  std::string actual;
  int attempts = 0;
  if (is_remote(entry.location)) {
    auto backoff = options.initial_backoff;
    std::string last_error;
    for (;;) {
      ++attempts;
      Attempt a = download(entry.location, tmp, options);
      if (a.ok) {
        actual = a.sha256;
        break;
      }
      discard();
      last_error = a.error;
      if (!a.retry || attempts >= options.attempts) {
        fail(ErrorCode::network_failure,
             last_error + " after " + std::to_string(attempts) + " attempt(s)");
      }
      if (options.sleep) {
        options.sleep(backoff);
      } else {
        std::this_thread::sleep_for(backoff);
      }
      backoff *= 2;
    }
  } else {
    const fs::path source = local_path(entry.location);
    fs::copy_file(source, tmp, fs::copy_options::overwrite_existing, ec);
    if (ec) {
      discard();
      fail(ErrorCode::io_failure, "cannot copy " + source.string() + ": " + ec.message());
    }
    actual = codec::sha256_file(tmp);
  }
  if (actual != entry.sha256) {
    discard();
    fail(ErrorCode::checksum_mismatch,
         entry.location + ": expected sha256 " + entry.sha256 + ", got " + actual);
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    discard();
    fail(ErrorCode::io_failure, "cannot move download into " + target.string() + ": " + ec.message());
  }
  return FetchResult{target, false, attempts};
}

}  // namespace epilogue::catalog
