#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ctfvault/category.hpp"

namespace ctfvault {

enum class EndpointKind { Tcp, Http, Ssh };

std::string_view to_string(EndpointKind kind) noexcept;
std::optional<EndpointKind> endpoint_kind_from_string(std::string_view text) noexcept;

struct EndpointSpec {
  EndpointKind kind = EndpointKind::Tcp;
  std::uint16_t port = 0;

  friend bool operator==(const EndpointSpec&, const EndpointSpec&) = default;
};

/// Parses `<kind>/<port>`, e.g. `tcp/1337`. Throws MalformedDocument.
EndpointSpec parse_endpoint(std::string_view text);
std::string format_endpoint(const EndpointSpec& endpoint);

struct PlaintextFlag {
  std::string flag;
  friend bool operator==(const PlaintextFlag&, const PlaintextFlag&) = default;
};

struct HashedFlag {
  std::string digest;  // 64 lowercase hex chars
  std::string platform_flag;
  friend bool operator==(const HashedFlag&, const HashedFlag&) = default;
};

using FlagSpec = std::variant<PlaintextFlag, HashedFlag>;

struct ChallengeManifest {
  std::string id;
  std::string event;
  int year = 2000;
  Category category = Category::Misc;
  std::uint64_t points = 0;
  std::string title;
  std::string description;
  std::vector<std::string> artifacts;
  std::vector<EndpointSpec> endpoints;
  FlagSpec flag_spec;
  std::string rehost_doc = "REHOST.md";

  friend bool operator==(const ChallengeManifest&, const ChallengeManifest&) = default;
};

inline constexpr std::string_view kManifestFileName = "challenge.manifest";

/// `[a-z0-9][a-z0-9-]*`, 1 to 64 characters.
bool is_valid_slug(std::string_view text) noexcept;
bool is_valid_digest(std::string_view text) noexcept;

/// Normalizes a manifest-relative path: `\` becomes `/`, empty and `.`
/// segments are dropped. Throws PathEscape for absolute paths, drive-letter
/// paths and any `..` segment; throws MalformedDocument for an empty result.
std::string normalize_relative_path(std::string_view raw);

/// Parses the line-oriented `key: value` manifest format.
ChallengeManifest parse_manifest(std::string_view text);

/// Canonical form: fixed key order, one value per line, LF terminated.
std::string serialize_manifest(const ChallengeManifest& manifest);

}  // namespace ctfvault
