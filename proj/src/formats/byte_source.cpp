#include "speechpack/formats/byte_source.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <optional>
#include <thread>

#include <httplib.h>

#include "speechpack/detail/bounded_queue.hpp"
#include "speechpack/error.hpp"

namespace speechpack::formats {

ByteSource ByteSource::from_uri(std::string uri) {
  const bool remote = uri.rfind("http://", 0) == 0 || uri.rfind("https://", 0) == 0;
  return ByteSource{std::move(uri), remote ? SourceKind::kHttp : SourceKind::kLocal};
}

std::size_t MemoryByteStream::read(std::span<std::uint8_t> out) {
  const std::size_t n = std::min(out.size(), data_.size() - pos_);
  std::memcpy(out.data(), data_.data() + pos_, n);
  pos_ += n;
  return n;
}

Bytes read_all(ByteStream& stream) {
  Bytes out;
  std::uint8_t buf[64 * 1024];
  while (std::size_t n = stream.read(buf)) out.insert(out.end(), buf, buf + n);
  return out;
}

namespace {

class FileByteStream final : public ByteStream {
 public:
  explicit FileByteStream(const std::string& path) : path_(path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
      throw Error(ErrorCode::kNotFound, "no such file '" + path + "'");
    }
    file_ = std::fopen(path.c_str(), "rb");
    if (file_ == nullptr) {
      throw Error(ErrorCode::kUnreadableSource, "cannot open '" + path + "': " + std::strerror(errno));
    }
  }
  ~FileByteStream() override { std::fclose(file_); }
  FileByteStream(const FileByteStream&) = delete;
  FileByteStream& operator=(const FileByteStream&) = delete;

  std::size_t read(std::span<std::uint8_t> out) override {
    const std::size_t n = std::fread(out.data(), 1, out.size(), file_);
    if (n < out.size() && std::ferror(file_)) {
      throw Error(ErrorCode::kUnreadableSource, "read error on '" + path_ + "'");
    }
    return n;
  }

 private:
  std::string path_;
  std::FILE* file_ = nullptr;
};

// Pulls the body on a background thread into a small bounded queue, so bytes
// are only fetched as fast as the consumer reads them.
class HttpByteStream final : public ByteStream {
 public:
  HttpByteStream(std::string uri, HttpOptions opts)
      : uri_(std::move(uri)), opts_(opts), chunks_(opts.max_buffered_chunks) {
    const auto scheme_end = uri_.find("://");
    const auto path_begin = uri_.find('/', scheme_end + 3);
    origin_ = uri_.substr(0, path_begin);
    path_ = path_begin == std::string::npos ? "/" : uri_.substr(path_begin);
    worker_ = std::thread([this] { fetch(); });
  }

  ~HttpByteStream() override {
    cancelled_ = true;
    chunks_.close();
    worker_.join();
  }
  HttpByteStream(const HttpByteStream&) = delete;
  HttpByteStream& operator=(const HttpByteStream&) = delete;

  std::size_t read(std::span<std::uint8_t> out) override {
    while (offset_ == current_.size()) {
      auto next = chunks_.pop();
      if (!next) {
        std::lock_guard lock(error_mu_);
        if (error_) throw *error_;
        return 0;
      }
      current_ = std::move(*next);
      offset_ = 0;
    }
    const std::size_t n = std::min(out.size(), current_.size() - offset_);
    std::memcpy(out.data(), current_.data() + offset_, n);
    offset_ += n;
    return n;
  }

 private:
  void fail(Error e) {
    std::lock_guard lock(error_mu_);
    error_ = std::move(e);
  }

  void fetch() {
    httplib::Client client(origin_);
    const auto secs = opts_.timeout.count() / 1000;
    const auto usecs = (opts_.timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_follow_location(true);
    const httplib::Headers headers = {{"Accept-Encoding", "identity"}};

    std::optional<Error> last;
    for (int attempt = 0; attempt <= opts_.retries && !cancelled_; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(opts_.retry_delay);
      int status = 0;
      bool delivered = false;
      auto result = client.Get(
          path_, headers,
          [&](const httplib::Response& r) {
            status = r.status;
            return r.status >= 200 && r.status < 300;
          },
          [&](const char* data, std::size_t len) {
            delivered = true;
            return chunks_.push(Bytes(data, data + len));
          });
      if (cancelled_) break;
      if (result) {
        chunks_.close();
        return;
      }
      if (status != 0 && (status < 200 || status >= 300)) {
        last = Error(ErrorCode::kHttpStatus,
                     "http-status(" + std::to_string(status) + ") for " + uri_);
      } else if (result.error() == httplib::Error::ConnectionTimeout ||
                 result.error() == httplib::Error::Read) {
        last = Error(ErrorCode::kTimeout, "timed out fetching " + uri_);
      } else {
        last = Error(ErrorCode::kUnreadableSource,
                     "fetching " + uri_ + ": " + httplib::to_string(result.error()));
      }
      // A partially delivered body cannot be resumed without range requests.
      if (delivered) break;
    }
    if (last) fail(std::move(*last));
    chunks_.close();
  }

  std::string uri_;
  std::string origin_;
  std::string path_;
  HttpOptions opts_;
  detail::BoundedQueue<Bytes> chunks_;
  std::atomic<bool> cancelled_{false};
  std::mutex error_mu_;
  std::optional<Error> error_;
  Bytes current_;
  std::size_t offset_ = 0;
  std::thread worker_;
};

}  // namespace

std::unique_ptr<ByteStream> open_byte_source(const ByteSource& source, const HttpOptions& http) {
  if (source.kind == SourceKind::kHttp) {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (source.uri.rfind("https://", 0) == 0) {
      throw Error(ErrorCode::kUnsupportedFormat, "built without TLS support: " + source.uri);
    }
#endif
    return std::make_unique<HttpByteStream>(source.uri, http);
  }
  return std::make_unique<FileByteStream>(source.uri);
}

std::unique_ptr<ByteStream> open_byte_source(std::string_view uri, const HttpOptions& http) {
  return open_byte_source(ByteSource::from_uri(std::string(uri)), http);
}

}  // namespace speechpack::formats
