#include "ctfvault/config.hpp"

#include <charconv>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ctfvault/error.hpp"
#include "ctfvault/sandbox/instance.hpp"

namespace ctfvault {
namespace {

using nlohmann::json;

const json* lookup(const json& doc, const std::string& dotted) {
  if (auto it = doc.find(dotted); it != doc.end()) return &*it;
  const json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object()) return nullptr;
    auto it = node->find(part);
    if (it == node->end()) return nullptr;
    node = &*it;
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
}

std::string get_string(const json& doc, const std::string& key, const std::string& fallback) {
  const json* v = lookup(doc, key);
  if (v == nullptr) return fallback;
  if (!v->is_string()) throw Error(Errc::InvalidArgument, "config key '" + key + "' must be a string");
  return v->get<std::string>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

}  // namespace

std::pair<std::string, int> split_listen(const std::string& listen) {
  const auto colon = listen.rfind(':');
  int port = -1;
  if (colon != std::string::npos) {
    const char* begin = listen.data() + colon + 1;
    const char* end = listen.data() + listen.size();
    auto [ptr, ec] = std::from_chars(begin, end, port);
    if (ec != std::errc{} || ptr != end) port = -1;
  }
  if (colon == std::string::npos || port < 0 || port > 65535) {
    throw Error(Errc::InvalidArgument, "server.listen '" + listen + "' is not host:port");
  }
  std::string host = listen.substr(0, colon);
  if (host.empty()) host = "0.0.0.0";
  return {host, port};
}

Config parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::InvalidArgument, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::InvalidArgument, "config must be a JSON object");

  Config cfg;
  cfg.archive_root = resolve(base_dir, get_string(doc, "archive.root", ""));
  cfg.data_dir = resolve(base_dir, get_string(doc, "data.dir", cfg.data_dir.string()));
  cfg.driver = get_string(doc, "runtime.driver", cfg.driver);
  if (cfg.driver != "local" && cfg.driver != "oci") {
    throw Error(Errc::InvalidArgument, "runtime.driver must be 'local' or 'oci'");
  }
  cfg.listen = get_string(doc, "server.listen", cfg.listen);
  split_listen(cfg.listen);
  cfg.base_ref = get_string(doc, "runtime.base_ref", cfg.base_ref);
  cfg.oci_binary = get_string(doc, "runtime.oci_binary", cfg.oci_binary);
  if (const json* quota = lookup(doc, "runtime.quota")) {
    if (!quota->is_number_unsigned() || quota->get<std::size_t>() == 0) {
      throw Error(Errc::InvalidArgument, "runtime.quota must be a positive integer");
    }
    cfg.quota = quota->get<std::size_t>();
  }
  if (const json* tokens = lookup(doc, "auth.tokens")) {
    if (!tokens->is_object()) throw Error(Errc::InvalidArgument, "auth.tokens must be an object");
    for (const auto& [token, user] : tokens->items()) {
      if (!user.is_string() || !sandbox::is_path_safe_user(user.get<std::string>())) {
        throw Error(Errc::InvalidArgument, "auth.tokens values must be user ids of [A-Za-z0-9._-]");
      }
      if (token.empty()) throw Error(Errc::InvalidArgument, "auth.tokens has an empty token");
      cfg.tokens.emplace(token, user.get<std::string>());
    }
  }
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

}  // namespace ctfvault
