#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>

namespace ctfvault {

/// Deployment configuration. The file is JSON; keys may be nested
/// (`{"archive": {"root": ...}}`) or dotted (`{"archive.root": ...}`).
struct Config {
  std::filesystem::path archive_root;           // archive.root
  std::filesystem::path data_dir = "data";      // data.dir
  std::string driver = "local";                 // runtime.driver: local | oci
  std::string listen = "127.0.0.1:8080";        // server.listen
  std::map<std::string, std::string> tokens;    // auth.tokens: token -> user id
  std::string base_ref = "ctf-vault/base:latest";  // runtime.base_ref
  std::size_t quota = 1;                        // runtime.quota
  std::string oci_binary = "docker";            // runtime.oci_binary

  [[nodiscard]] std::filesystem::path solves_path() const { return data_dir / "solves.log"; }
};

/// Throws IoFailure when unreadable, InvalidArgument on bad values.
Config load_config(const std::filesystem::path& path);
Config parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});

/// Splits `host:port`. Throws InvalidArgument.
std::pair<std::string, int> split_listen(const std::string& listen);

}  // namespace ctfvault
