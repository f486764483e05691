#pragma once

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "epilogue/core/error.hpp"

namespace epilogue::store::detail {

class FileHandle {
 public:
  FileHandle() = default;
  FileHandle(const std::filesystem::path& path, int flags) : path_(path.string()) {
    fd_ = ::open(path_.c_str(), flags | O_CLOEXEC, 0644);
    if (fd_ < 0) fail(ErrorCode::io_failure, "cannot open " + path_ + ": " + std::strerror(errno));
  }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;
  FileHandle(FileHandle&& other) noexcept : fd_(other.fd_), path_(std::move(other.path_)) {
    other.fd_ = -1;
  }
  FileHandle& operator=(FileHandle&& other) noexcept {
    if (this != &other) {
      close();
      fd_ = other.fd_;
      path_ = std::move(other.path_);
      other.fd_ = -1;
    }
    return *this;
  }
  ~FileHandle() { close(); }

  bool is_open() const { return fd_ >= 0; }
  const std::string& path() const { return path_; }

  void write_all(std::span<const std::uint8_t> data) {
    while (!data.empty()) {
      ssize_t n = ::write(fd_, data.data(), data.size());
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::io_failure, "write to " + path_ + " failed: " + std::strerror(errno));
      }
      data = data.subspan(static_cast<std::size_t>(n));
    }
  }

  // Reads exactly n bytes at offset or throws; short reads mean the file is
  // shorter than its metadata claims.
  std::vector<std::uint8_t> read_at(std::uint64_t offset, std::size_t n) const {
    std::vector<std::uint8_t> out(n);
    std::size_t done = 0;
    while (done < n) {
      ssize_t r = ::pread(fd_, out.data() + done, n - done, static_cast<off_t>(offset + done));
      if (r < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::io_failure, "read from " + path_ + " failed: " + std::strerror(errno));
      }
      if (r == 0) fail(ErrorCode::corrupt_record, "unexpected end of file in " + path_);
      done += static_cast<std::size_t>(r);
    }
    return out;
  }

  std::uint64_t size() const {
    struct stat st {};
    if (::fstat(fd_, &st) != 0) fail(ErrorCode::io_failure, "stat failed for " + path_);
    return static_cast<std::uint64_t>(st.st_size);
  }

  void sync() {
    if (::fdatasync(fd_) != 0) fail(ErrorCode::io_failure, "fdatasync failed for " + path_);
  }

  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
  std::string path_;
};

}  // namespace epilogue::store::detail
