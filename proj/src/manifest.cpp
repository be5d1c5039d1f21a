#include "ctfvault/manifest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <map>
#include <sstream>

#include "ctfvault/error.hpp"

namespace ctfvault {
namespace {

constexpr std::array<std::string_view, 13> kKnownKeys = {
    "id",       "event",       "year",          "category",      "points",
    "title",    "description", "artifact",      "endpoint",      "flag",
    "flag_digest", "platform_flag", "rehost_doc",
};

bool is_repeatable(std::string_view key) { return key == "artifact" || key == "endpoint"; }

[[noreturn]] void fail(Errc code, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  if (line > 0) msg << "line " << line << ": ";
  msg << what;
  throw Error(code, msg.str());
}

template <typename Int>
std::optional<Int> parse_unsigned(std::string_view text) {
  if (text.empty() || !std::all_of(text.begin(), text.end(),
                                   [](char c) { return c >= '0' && c <= '9'; })) {
    return std::nullopt;
  }
  Int value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

struct Value {
  std::string text;
  std::size_t line;
};

void check_single_line(std::string_view value, std::string_view field) {
  if (value.find_first_of("\r\n") != std::string_view::npos) {
    throw Error(Errc::InvalidArgument,
                "manifest field '" + std::string(field) + "' contains a line break");
  }
}

}  // namespace

std::string_view to_string(EndpointKind kind) noexcept {
  switch (kind) {
    case EndpointKind::Tcp: return "tcp";
    case EndpointKind::Http: return "http";
    case EndpointKind::Ssh: return "ssh";
  }
  return "tcp";
}

std::optional<EndpointKind> endpoint_kind_from_string(std::string_view text) noexcept {
  if (text == "tcp") return EndpointKind::Tcp;
  if (text == "http") return EndpointKind::Http;
  if (text == "ssh") return EndpointKind::Ssh;
  return std::nullopt;
}

EndpointSpec parse_endpoint(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    throw Error(Errc::MalformedDocument,
                "endpoint '" + std::string(text) + "' is not of the form <kind>/<port>");
  }
  const auto kind = endpoint_kind_from_string(text.substr(0, slash));
  if (!kind) {
    throw Error(Errc::MalformedDocument,
                "endpoint kind '" + std::string(text.substr(0, slash)) +
                    "' is not one of tcp, http, ssh");
  }
  const auto port = parse_unsigned<std::uint32_t>(text.substr(slash + 1));
  if (!port || *port < 1 || *port > 65535) {
    throw Error(Errc::MalformedDocument,
                "endpoint port '" + std::string(text.substr(slash + 1)) +
                    "' is not in 1-65535");
  }
  return EndpointSpec{*kind, static_cast<std::uint16_t>(*port)};
}

std::string format_endpoint(const EndpointSpec& endpoint) {
  return std::string(to_string(endpoint.kind)) + "/" + std::to_string(endpoint.port);
}

bool is_valid_slug(std::string_view text) noexcept {
  if (text.empty() || text.size() > 64) return false;
  auto alnum = [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'); };
  if (!alnum(text.front())) return false;
  return std::all_of(text.begin(), text.end(), [&](char c) { return alnum(c) || c == '-'; });
}

bool is_valid_digest(std::string_view text) noexcept {
  return text.size() == 64 && std::all_of(text.begin(), text.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

std::string normalize_relative_path(std::string_view raw) {
  std::string path(raw);
  std::replace(path.begin(), path.end(), '\\', '/');
  if (!path.empty() && path.front() == '/') {
    throw Error(Errc::PathEscape, "path '" + std::string(raw) + "' is absolute");
  }
  if (path.size() >= 2 && path[1] == ':' && std::isalpha(static_cast<unsigned char>(path[0]))) {
    throw Error(Errc::PathEscape, "path '" + std::string(raw) + "' has a drive prefix");
  }
  std::string out;
  std::size_t start = 0;
  while (start <= path.size()) {
    auto end = path.find('/', start);
    if (end == std::string::npos) end = path.size();
    const std::string_view segment(path.data() + start, end - start);
    if (segment == "..") {
      throw Error(Errc::PathEscape, "path '" + std::string(raw) + "' leaves its directory");
    }
    if (!segment.empty() && segment != ".") {
      if (!out.empty()) out += '/';
      out += segment;
    }
    start = end + 1;
  }
  if (out.empty()) {
    throw Error(Errc::MalformedDocument, "path '" + std::string(raw) + "' is empty");
  }
  return out;
}

ChallengeManifest parse_manifest(std::string_view text) {
  std::map<std::string, std::vector<Value>, std::less<>> fields;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    if (line.empty() || line.front() == '#') continue;
    if (line.find('\r') != std::string_view::npos) {
      fail(Errc::MalformedDocument, line_no, "carriage return in manifest (LF line endings only)");
    }

    std::string_view key;
    std::string_view value;
    if (const auto sep = line.find(": "); sep != std::string_view::npos) {
      key = line.substr(0, sep);
      value = line.substr(sep + 2);
    } else if (line.back() == ':' && line.find(':') == line.size() - 1) {
      key = line.substr(0, line.size() - 1);
    } else {
      fail(Errc::MalformedDocument, line_no, "expected 'key: value'");
    }

    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) {
      fail(Errc::UnknownKey, line_no, "unknown key '" + std::string(key) + "'");
    }
    auto& slot = fields[std::string(key)];
    if (!slot.empty() && !is_repeatable(key)) {
      fail(Errc::MalformedDocument, line_no, "key '" + std::string(key) + "' given twice");
    }
    slot.push_back(Value{std::string(value), line_no});
  }

  auto single = [&](std::string_view key) -> const Value* {
    auto it = fields.find(key);
    return it == fields.end() ? nullptr : &it->second.front();
  };
  auto required = [&](std::string_view key) -> const Value& {
    const Value* v = single(key);
    if (v == nullptr) fail(Errc::MissingField, 0, "missing required key '" + std::string(key) + "'");
    return *v;
  };

  ChallengeManifest m;

  const Value& id = required("id");
  if (!is_valid_slug(id.text)) {
    fail(Errc::BadSlug, id.line, "id '" + id.text + "' is not a valid slug");
  }
  m.id = id.text;

  const Value& event = required("event");
  if (event.text.empty()) fail(Errc::MissingField, event.line, "event is empty");
  m.event = event.text;

  const Value& year = required("year");
  const auto year_value = parse_unsigned<int>(year.text);
  if (!year_value || *year_value < 2000 || *year_value > 2100) {
    fail(Errc::MalformedDocument, year.line, "year '" + year.text + "' is not in 2000-2100");
  }
  m.year = *year_value;

  const Value& category = required("category");
  const auto cat = category_from_string(category.text);
  if (!cat) fail(Errc::UnknownCategory, category.line, "unknown category '" + category.text + "'");
  m.category = *cat;

  const Value& points = required("points");
  const auto points_value = parse_unsigned<std::uint64_t>(points.text);
  if (!points_value) {
    fail(Errc::MalformedDocument, points.line, "points '" + points.text + "' is not a non-negative integer");
  }
  m.points = *points_value;

  m.title = single("title") ? single("title")->text : m.id;
  m.description = single("description") ? single("description")->text : std::string();

  if (auto it = fields.find("artifact"); it != fields.end()) {
    for (const Value& v : it->second) {
      try {
        m.artifacts.push_back(normalize_relative_path(v.text));
      } catch (const Error& e) {
        fail(e.code(), v.line, e.what());
      }
    }
  }
  if (auto it = fields.find("endpoint"); it != fields.end()) {
    for (const Value& v : it->second) {
      try {
        m.endpoints.push_back(parse_endpoint(v.text));
      } catch (const Error& e) {
        fail(e.code(), v.line, e.what());
      }
    }
  }

  const Value* flag = single("flag");
  const Value* digest = single("flag_digest");
  const Value* platform = single("platform_flag");
  if (flag && digest) {
    fail(Errc::MalformedDocument, digest->line, "both 'flag' and 'flag_digest' given");
  }
  if (flag) {
    if (platform) {
      fail(Errc::MalformedDocument, platform->line, "'platform_flag' requires 'flag_digest', not 'flag'");
    }
    std::string_view normalized = flag->text;
    while (!normalized.empty() && (normalized.back() == '\n' || normalized.back() == '\r')) {
      normalized.remove_suffix(1);
    }
    if (normalized.empty()) fail(Errc::MissingField, flag->line, "flag is empty");
    m.flag_spec = PlaintextFlag{flag->text};
  } else if (digest) {
    if (!is_valid_digest(digest->text)) {
      fail(Errc::BadDigest, digest->line, "flag_digest must be 64 lowercase hex characters");
    }
    if (!platform || platform->text.empty()) {
      fail(Errc::MissingField, digest->line, "'flag_digest' requires a non-empty 'platform_flag'");
    }
    m.flag_spec = HashedFlag{digest->text, platform->text};
  } else {
    fail(Errc::MissingField, 0, "one of 'flag' or 'flag_digest' is required");
  }

  if (const Value* rehost = single("rehost_doc")) {
    try {
      m.rehost_doc = normalize_relative_path(rehost->text);
    } catch (const Error& e) {
      fail(e.code(), rehost->line, e.what());
    }
  }
  return m;
}

std::string serialize_manifest(const ChallengeManifest& m) {
  std::ostringstream out;
  auto put = [&](std::string_view key, std::string_view value) {
    check_single_line(value, key);
    out << key << ": " << value << '\n';
  };
  put("id", m.id);
  put("event", m.event);
  put("year", std::to_string(m.year));
  put("category", canonical_name(m.category));
  put("points", std::to_string(m.points));
  put("title", m.title);
  put("description", m.description);
  for (const auto& a : m.artifacts) put("artifact", a);
  for (const auto& e : m.endpoints) put("endpoint", format_endpoint(e));
  if (const auto* plain = std::get_if<PlaintextFlag>(&m.flag_spec)) {
    put("flag", plain->flag);
  } else {
    const auto& hashed = std::get<HashedFlag>(m.flag_spec);
    put("flag_digest", hashed.digest);
    put("platform_flag", hashed.platform_flag);
  }
  put("rehost_doc", m.rehost_doc);
  return out.str();
}

}  // namespace ctfvault
