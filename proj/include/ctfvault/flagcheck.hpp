#pragma once

#include <string>
#include <string_view>

namespace ctfvault::flagcheck {

inline constexpr std::string_view kAlgorithm = "sha256";

/// Portable check artifact: the digest of the true flag and the flag released
/// on a correct submission. The true flag itself is never part of a record.
struct CheckRecord {
  std::string algorithm{kAlgorithm};
  std::string challenge_id;
  std::string digest;
  std::string platform_flag;

  friend bool operator==(const CheckRecord&, const CheckRecord&) = default;
};

class Verdict {
 public:
  static Verdict accept(std::string platform_flag) { return Verdict(true, std::move(platform_flag)); }
  static Verdict reject() { return Verdict(false, {}); }

  [[nodiscard]] bool accepted() const noexcept { return accepted_; }
  /// Empty unless accepted().
  [[nodiscard]] const std::string& platform_flag() const noexcept { return platform_flag_; }

  friend bool operator==(const Verdict&, const Verdict&) = default;

 private:
  Verdict(bool accepted, std::string flag) : accepted_(accepted), platform_flag_(std::move(flag)) {}

  bool accepted_;
  std::string platform_flag_;
};

/// Strips trailing `\n` and `\r`; nothing else.
std::string normalize_flag(std::string_view raw);

/// Lowercase hex SHA-256 of the bytes of `normalized`.
std::string digest_flag(std::string_view normalized);

/// Compares two hex digests without exiting early on the first mismatch.
bool digests_equal(std::string_view a, std::string_view b) noexcept;

/// Throws EmptyFlag if either flag is empty (the actual flag after
/// normalization), BadSlug for an invalid challenge id.
CheckRecord generate_check(std::string_view actual_flag, std::string_view platform_flag,
                           std::string_view challenge_id);

Verdict verify(const CheckRecord& record, std::string_view submission);

/// Same acceptance rule as verify() against a record built from `expected`;
/// the comparison goes through digests.
Verdict verify_plaintext(std::string_view expected, std::string_view submission);

/// Four LF-terminated lines: algorithm, challenge, digest, platform_flag.
/// InvalidArgument when the platform flag holds a line break.
std::string serialize(const CheckRecord& record);
CheckRecord parse_check_record(std::string_view text);

}  // namespace ctfvault::flagcheck
