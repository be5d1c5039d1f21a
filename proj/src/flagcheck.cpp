#include "ctfvault/flagcheck.hpp"

#include <array>
#include <sstream>

#include "ctfvault/digest.hpp"
#include "ctfvault/error.hpp"
#include "ctfvault/manifest.hpp"

namespace ctfvault::flagcheck {

std::string normalize_flag(std::string_view raw) {
  while (!raw.empty() && (raw.back() == '\n' || raw.back() == '\r')) raw.remove_suffix(1);
  return std::string(raw);
}

std::string digest_flag(std::string_view normalized) { return sha256_hex(normalized); }

bool digests_equal(std::string_view a, std::string_view b) noexcept {
  if (a.size() != b.size()) return false;
  volatile unsigned char diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff |= static_cast<unsigned char>(a[i] ^ b[i]);
  }
  return diff == 0;
}

CheckRecord generate_check(std::string_view actual_flag, std::string_view platform_flag,
                           std::string_view challenge_id) {
  const std::string normalized = normalize_flag(actual_flag);
  if (normalized.empty()) throw Error(Errc::EmptyFlag, "actual flag is empty");
  if (platform_flag.empty()) throw Error(Errc::EmptyFlag, "platform flag is empty");
  if (!is_valid_slug(challenge_id)) {
    throw Error(Errc::BadSlug, "challenge id '" + std::string(challenge_id) + "' is not a valid slug");
  }
  CheckRecord record;
  record.challenge_id = std::string(challenge_id);
  record.digest = digest_flag(normalized);
  record.platform_flag = std::string(platform_flag);
  return record;
}

Verdict verify(const CheckRecord& record, std::string_view submission) {
  const std::string candidate = digest_flag(normalize_flag(submission));
  if (digests_equal(candidate, record.digest)) return Verdict::accept(record.platform_flag);
  return Verdict::reject();
}

Verdict verify_plaintext(std::string_view expected, std::string_view submission) {
  std::string normalized = normalize_flag(expected);
  if (normalized.empty()) return Verdict::reject();
  const std::string want = digest_flag(normalized);
  const std::string got = digest_flag(normalize_flag(submission));
  if (digests_equal(got, want)) return Verdict::accept(std::move(normalized));
  return Verdict::reject();
}

std::string serialize(const CheckRecord& record) {
  if (record.platform_flag.find_first_of("\r\n") != std::string::npos) {
    throw Error(Errc::InvalidArgument, "platform flag contains a line break");
  }
  std::ostringstream out;
  out << "algorithm: " << record.algorithm << '\n'
      << "challenge: " << record.challenge_id << '\n'
      << "digest: " << record.digest << '\n'
      << "platform_flag: " << record.platform_flag << '\n';
  return out.str();
}

CheckRecord parse_check_record(std::string_view text) {
  static constexpr std::array<std::string_view, 4> kKeys = {"algorithm", "challenge", "digest",
                                                            "platform_flag"};
  std::array<std::string, 4> values;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < kKeys.size(); ++i) {
    const auto end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      throw Error(Errc::MalformedDocument, "check record line " + std::to_string(i + 1) +
                                               " is missing or not LF-terminated");
    }
    const std::string_view line = text.substr(pos, end - pos);
    const std::string prefix = std::string(kKeys[i]) + ": ";
    if (line.substr(0, prefix.size()) != prefix) {
      throw Error(Errc::MalformedDocument, "check record line " + std::to_string(i + 1) +
                                               " must start with '" + prefix + "'");
    }
    values[i] = std::string(line.substr(prefix.size()));
    pos = end + 1;
  }
  if (pos != text.size()) throw Error(Errc::MalformedDocument, "trailing data after check record");
  if (values[0] != kAlgorithm) {
    throw Error(Errc::MalformedDocument, "unsupported algorithm '" + values[0] + "'");
  }
  if (!is_valid_slug(values[1])) throw Error(Errc::BadSlug, "invalid challenge id '" + values[1] + "'");
  if (!is_valid_digest(values[2])) throw Error(Errc::BadDigest, "digest must be 64 lowercase hex characters");
  if (values[3].empty()) throw Error(Errc::EmptyFlag, "platform flag is empty");
  return CheckRecord{values[0], values[1], values[2], values[3]};
}

}  // namespace ctfvault::flagcheck
