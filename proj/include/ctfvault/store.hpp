#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace ctfvault {

struct SolveRecord {
  std::string user_id;
  std::string challenge_id;
  std::int64_t timestamp = 0;  // Unix seconds, UTC

  friend bool operator==(const SolveRecord&, const SolveRecord&) = default;
};

/// `<unix_ts> <user_id> <challenge_id>` without the trailing LF.
std::string format_solve_line(const SolveRecord& record);

enum class AppendResult { Appended, Duplicate };

/// Append-only solve log backed by `<unix_ts> <user> <challenge>\n` lines.
///
/// Loading tolerates one torn (unterminated) final line: it is dropped with a
/// warning and truncated away before the next append. Any other malformed
/// line is CorruptLog. A single owner appends; readers take snapshots.
class SolveLog {
 public:
  /// Opens (and loads) the log at `path`. A missing file is an empty log.
  explicit SolveLog(std::filesystem::path path);
  ~SolveLog();

  SolveLog(const SolveLog&) = delete;
  SolveLog& operator=(const SolveLog&) = delete;

  /// Duplicate (user, challenge) pairs leave the file untouched. Appended
  /// records are fsync'd before this returns.
  AppendResult append(const SolveRecord& record);

  [[nodiscard]] bool has_solved(std::string_view user, std::string_view challenge) const;
  [[nodiscard]] std::vector<SolveRecord> records() const;
  [[nodiscard]] std::vector<SolveRecord> records_of(std::string_view user) const;
  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] std::size_t unique_pairs() const;
  [[nodiscard]] const std::vector<std::string>& load_warnings() const noexcept { return warnings_; }
  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

 private:
  void ensure_open_for_append();

  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::vector<SolveRecord> records_;
  std::set<std::pair<std::string, std::string>, std::less<>> pairs_;
  std::vector<std::string> warnings_;
  std::uintmax_t valid_bytes_ = 0;
  int fd_ = -1;
};

SolveLog load_solves(const std::filesystem::path& path);

}  // namespace ctfvault
