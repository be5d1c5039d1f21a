#include "ctfvault/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <optional>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ctfvault/error.hpp"

namespace ctfvault {
namespace {

bool has_whitespace(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  });
}

void check_record(const SolveRecord& r) {
  if (r.timestamp < 0) throw Error(Errc::InvalidArgument, "solve timestamp is negative");
  if (r.user_id.empty() || has_whitespace(r.user_id)) {
    throw Error(Errc::InvalidArgument, "user id must be non-empty without whitespace");
  }
  if (r.challenge_id.empty() || has_whitespace(r.challenge_id)) {
    throw Error(Errc::InvalidArgument, "challenge id must be non-empty without whitespace");
  }
}

std::optional<SolveRecord> parse_line(std::string_view line) {
  const auto first = line.find(' ');
  if (first == std::string_view::npos) return std::nullopt;
  const auto second = line.find(' ', first + 1);
  if (second == std::string_view::npos) return std::nullopt;
  if (line.find(' ', second + 1) != std::string_view::npos) return std::nullopt;

  const std::string_view ts = line.substr(0, first);
  SolveRecord r;
  r.user_id = std::string(line.substr(first + 1, second - first - 1));
  r.challenge_id = std::string(line.substr(second + 1));
  if (ts.empty() || !std::all_of(ts.begin(), ts.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::nullopt;
  }
  auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), r.timestamp);
  if (ec != std::errc{} || ptr != ts.data() + ts.size()) return std::nullopt;
  if (r.user_id.empty() || r.challenge_id.empty() || has_whitespace(r.user_id) ||
      has_whitespace(r.challenge_id)) {
    return std::nullopt;
  }
  return r;
}

}  // namespace

std::string format_solve_line(const SolveRecord& record) {
  return std::to_string(record.timestamp) + " " + record.user_id + " " + record.challenge_id;
}

SolveLog::SolveLog(std::filesystem::path path) : path_(std::move(path)) {
  std::error_code ec;
  if (!std::filesystem::exists(path_, ec)) {
    if (ec) throw Error(Errc::IoFailure, "cannot stat " + path_.string() + ": " + ec.message());
    return;
  }
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path_.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(Errc::IoFailure, "cannot read " + path_.string());
  const std::string content = buf.str();

  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    const auto end = content.find('\n', pos);
    ++line_no;
    if (end == std::string::npos) {
      warnings_.push_back(path_.string() + ":" + std::to_string(line_no) +
                          ": dropped torn final line (" + std::to_string(content.size() - pos) +
                          " bytes)");
      break;
    }
    const std::string_view line(content.data() + pos, end - pos);
    auto record = parse_line(line);
    if (!record) {
      throw Error(Errc::CorruptLog,
                  path_.string() + ":" + std::to_string(line_no) + ": malformed solve record");
    }
    pairs_.emplace(record->user_id, record->challenge_id);
    records_.push_back(std::move(*record));
    pos = end + 1;
    valid_bytes_ = pos;
  }
}

SolveLog::~SolveLog() {
  if (fd_ >= 0) ::close(fd_);
}

void SolveLog::ensure_open_for_append() {
  if (fd_ >= 0) return;
  std::error_code ec;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path(), ec);
  if (std::filesystem::exists(path_, ec) && std::filesystem::file_size(path_, ec) > valid_bytes_) {
    std::filesystem::resize_file(path_, valid_bytes_, ec);
    if (ec) throw Error(Errc::IoFailure, "cannot truncate torn tail of " + path_.string());
  }
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error(Errc::IoFailure, "cannot open " + path_.string() + ": " + std::strerror(errno));
  }
}

AppendResult SolveLog::append(const SolveRecord& record) {
  check_record(record);
  std::lock_guard lock(mutex_);
  auto key = std::make_pair(record.user_id, record.challenge_id);
  if (pairs_.count(key) != 0) return AppendResult::Duplicate;

  ensure_open_for_append();
  const std::string line = format_solve_line(record) + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    const auto n = ::write(fd_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const std::string reason = std::strerror(errno);
      (void)::ftruncate(fd_, static_cast<off_t>(valid_bytes_));
      throw Error(Errc::IoFailure, "write to " + path_.string() + " failed: " + reason);
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd_) != 0) {
    throw Error(Errc::IoFailure, "fsync of " + path_.string() + " failed: " + std::strerror(errno));
  }
  valid_bytes_ += line.size();
  pairs_.insert(std::move(key));
  records_.push_back(record);
  return AppendResult::Appended;
}

bool SolveLog::has_solved(std::string_view user, std::string_view challenge) const {
  std::lock_guard lock(mutex_);
  return pairs_.count(std::make_pair(std::string(user), std::string(challenge))) != 0;
}

std::vector<SolveRecord> SolveLog::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::vector<SolveRecord> SolveLog::records_of(std::string_view user) const {
  std::lock_guard lock(mutex_);
  std::vector<SolveRecord> out;
  for (const auto& r : records_) {
    if (r.user_id == user) out.push_back(r);
  }
  return out;
}

std::size_t SolveLog::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

std::size_t SolveLog::unique_pairs() const {
  std::lock_guard lock(mutex_);
  return pairs_.size();
}

SolveLog load_solves(const std::filesystem::path& path) { return SolveLog(path); }

}  // namespace ctfvault
