#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctfvault {

enum class Errc {
  MalformedDocument,
  UnknownCategory,
  BadSlug,
  BadDigest,
  MissingField,
  UnknownKey,
  PathEscape,
  DuplicateId,
  IoFailure,
  EmptyFlag,
  NoContent,
  DriverFailure,
  QuotaExceeded,
  NotRunning,
  NotFound,
  CorruptLog,
  InvalidArgument,
};

std::string_view to_string(Errc code) noexcept;

/// Exception type shared by every module. The code identifies the failure
/// class; the message carries human-readable context (paths, line numbers).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace ctfvault
