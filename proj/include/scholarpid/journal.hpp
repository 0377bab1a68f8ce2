#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "scholarpid/errors.hpp"

namespace scholarpid {

/// Append-only JSON-lines file.
///
/// Every append is flushed as one line. A Batch buffers appends from its
/// owning thread and commits them in a single contiguous write, so replay
/// sees the whole group or none of it. Replay tolerates exactly one torn
/// line at the end of the file (a write cut short mid-append); any other
/// unparseable line is a hard storage fault.
class Journal {
 public:
  explicit Journal(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) {
      std::error_code ec;
      std::filesystem::create_directories(path_.parent_path(), ec);
    }
    out_.open(path_, std::ios::app | std::ios::binary);
    if (!out_) {
      raise(Errc::storage_fault, "cannot open journal for append: " + path_.string());
    }
  }

  Journal(const Journal&) = delete;
  Journal& operator=(const Journal&) = delete;

  void append(const nlohmann::json& line) {
    std::unique_lock<std::recursive_mutex> lock(mu_);
    if (batch_active_ && std::this_thread::get_id() == batch_owner_) {
      batch_buffer_.push_back(line.dump());
      return;
    }
    write_lines({line.dump()});
  }

  /// Groups appends made while the batch is open into one atomic write.
  /// Destroying an uncommitted batch drops its buffered lines.
  class Batch {
   public:
    explicit Batch(Journal& journal) : journal_(journal), lock_(journal.mu_) {
      journal_.batch_active_ = true;
      journal_.batch_owner_ = std::this_thread::get_id();
    }

    ~Batch() {
      if (!done_) close(false);
    }

    void commit() { close(true); }

   private:
    void close(bool keep) {
      done_ = true;
      if (keep && !journal_.batch_buffer_.empty()) {
        journal_.write_lines(journal_.batch_buffer_);
      }
      journal_.batch_buffer_.clear();
      journal_.batch_active_ = false;
    }

    Journal& journal_;
    std::unique_lock<std::recursive_mutex> lock_;
    bool done_ = false;
  };

  const std::filesystem::path& path() const { return path_; }

  /// Replays every line in file order. Returns how many lines were applied.
  static std::size_t replay(const std::filesystem::path& path,
                            const std::function<void(const nlohmann::json&)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return 0;  // nothing journaled yet
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string data = buf.str();

    std::size_t applied = 0;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < data.size()) {
      ++line_no;
      std::size_t nl = data.find('\n', pos);
      const bool terminated = nl != std::string::npos;
      const std::string line =
          data.substr(pos, terminated ? nl - pos : std::string::npos);
      pos = terminated ? nl + 1 : data.size();
      if (line.empty()) continue;
      nlohmann::json parsed = nlohmann::json::parse(line, nullptr, false);
      if (parsed.is_discarded()) {
        if (!terminated) break;  // torn final append, ignore
        raise(Errc::storage_fault, "corrupt journal " + path.string() +
                                       " at line " + std::to_string(line_no));
      }
      fn(parsed);
      ++applied;
    }
    return applied;
  }

 private:
  void write_lines(const std::vector<std::string>& lines) {
    std::string block;
    for (const auto& l : lines) {
      block += l;
      block += '\n';
    }
    out_.write(block.data(), static_cast<std::streamsize>(block.size()));
    out_.flush();
    if (!out_) raise(Errc::storage_fault, "journal append failed: " + path_.string());
  }

  std::filesystem::path path_;
  std::ofstream out_;
  std::recursive_mutex mu_;
  bool batch_active_ = false;
  std::thread::id batch_owner_;
  std::vector<std::string> batch_buffer_;
};

}  // namespace scholarpid
