#include "ctfvault/service.hpp"

#include <chrono>
#include <fstream>
#include <httplib.h>
#include <sstream>

#include "ctfvault/error.hpp"
#include "ctfvault/flagcheck.hpp"
#include "ctfvault/sandbox/build_plan.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ctfvault::service {

std::string_view to_string(ApiCode code) noexcept {
  switch (code) {
    case ApiCode::NotFound: return "not_found";
    case ApiCode::QuotaExceeded: return "quota_exceeded";
    case ApiCode::BadRequest: return "bad_request";
    case ApiCode::DriverFailure: return "driver_failure";
    case ApiCode::Internal: return "internal";
  }
  return "internal";
}

int http_status(ApiCode code) noexcept {
  switch (code) {
    case ApiCode::NotFound: return 404;
    case ApiCode::QuotaExceeded: return 409;
    case ApiCode::BadRequest: return 400;
    case ApiCode::DriverFailure: return 502;
    case ApiCode::Internal: return 500;
  }
  return 500;
}

std::unique_ptr<sandbox::RuntimeDriver> make_driver(const Config& config) {
  if (config.driver == "oci") {
    sandbox::OciDriver::Options options;
    options.binary = config.oci_binary;
    options.scratch_dir = config.data_dir / "recipes";
    return std::make_unique<sandbox::OciDriver>(options);
  }
  std::error_code ec;
  fs::create_directories(config.data_dir, ec);
  return std::make_unique<sandbox::LocalDriver>(config.data_dir / "local-driver.log");
}

Platform::Platform(Config config, Registry registry, std::unique_ptr<sandbox::RuntimeDriver> driver)
    : config_(std::move(config)),
      registry_(std::move(registry)),
      solves_(config_.solves_path()),
      driver_(std::move(driver)),
      instances_(std::make_unique<sandbox::InstanceManager>(
          *driver_, sandbox::InstanceManager::Options{config_.data_dir, config_.quota})),
      clock_([] {
        return static_cast<std::int64_t>(std::chrono::duration_cast<std::chrono::seconds>(
                                             std::chrono::system_clock::now().time_since_epoch())
                                             .count());
      }) {}

Platform::~Platform() { instances_.reset(); }

std::unique_ptr<Platform> Platform::from_config(const Config& config) {
  auto ingest = ingest_archive(config.archive_root);
  return std::make_unique<Platform>(config, std::move(ingest.registry), make_driver(config));
}

std::optional<std::string> Platform::authenticate(std::string_view bearer_token) const {
  auto it = config_.tokens.find(std::string(bearer_token));
  if (it == config_.tokens.end()) return std::nullopt;
  return it->second;
}

std::vector<SolveRecord> Platform::solves_of(const std::string& user) const {
  return solves_.records_of(user);
}

SubmitResponse Platform::handle_submit(const std::string& user, const std::string& challenge,
                                       const std::string& submission) {
  const auto* entry = registry_.find(challenge);
  if (entry == nullptr) throw ApiError(ApiCode::NotFound, "no challenge '" + challenge + "'");

  const flagcheck::Verdict verdict = std::visit(
      [&](const auto& spec) {
        using Spec = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<Spec, PlaintextFlag>) {
          return flagcheck::verify_plaintext(spec.flag, submission);
        } else {
          flagcheck::CheckRecord record;
          record.challenge_id = challenge;
          record.digest = spec.digest;
          record.platform_flag = spec.platform_flag;
          return flagcheck::verify(record, submission);
        }
      },
      entry->manifest.flag_spec);

  SubmitResponse response;
  if (!verdict.accepted()) {
    response.solved_before = solves_.has_solved(user, challenge);
    return response;
  }
  response.correct = true;
  response.platform_flag = verdict.platform_flag();
  const auto outcome = solves_.append(SolveRecord{user, challenge, clock_()});
  response.first_solve = outcome == AppendResult::Appended;
  response.solved_before = outcome == AppendResult::Duplicate;
  return response;
}

CategoryStats Platform::handle_stats() const {
  const auto records = solves_.records();
  return category_stats(registry_, records);
}

const sandbox::BuildPlan& Platform::plan_for(const Registry::Entry& entry) {
  std::lock_guard lock(plan_mutex_);
  auto it = plans_.find(entry.manifest.id);
  if (it == plans_.end()) {
    it = plans_
             .emplace(entry.manifest.id,
                      sandbox::compile_build_plan(entry.manifest, entry.directory, config_.base_ref))
             .first;
  }
  return it->second;
}

InstancePayload Platform::handle_instance_create(const std::string& user, const std::string& challenge) {
  const auto* entry = registry_.find(challenge);
  if (entry == nullptr) throw ApiError(ApiCode::NotFound, "no challenge '" + challenge + "'");
  try {
    const sandbox::BuildPlan& plan = plan_for(*entry);
    InstancePayload payload{instances_->launch(plan, user), {}};
    for (const auto& endpoint : payload.handle.endpoints) {
      payload.hints.push_back(connection_hint(endpoint));
    }
    return payload;
  } catch (const Error& e) {
    switch (e.code()) {
      case Errc::QuotaExceeded: throw ApiError(ApiCode::QuotaExceeded, e.what());
      case Errc::DriverFailure: throw ApiError(ApiCode::DriverFailure, e.what());
      case Errc::PathEscape:
      case Errc::NoContent:
      case Errc::InvalidArgument: throw ApiError(ApiCode::BadRequest, e.what());
      default: throw ApiError(ApiCode::Internal, e.what());
    }
  }
}

void Platform::handle_instance_delete(const std::string& user, const std::string& instance_id) {
  const auto handle = instances_->find(instance_id);
  // Other users' instances look exactly like missing ones.
  if (!handle || handle->user_id != user || handle->state != sandbox::InstanceState::Running) {
    throw ApiError(ApiCode::NotFound, "no running instance '" + instance_id + "'");
  }
  try {
    instances_->stop(*handle);
  } catch (const Error& e) {
    if (e.code() == Errc::NotRunning || e.code() == Errc::NotFound) {
      throw ApiError(ApiCode::NotFound, "no running instance '" + instance_id + "'");
    }
    throw ApiError(ApiCode::DriverFailure, e.what());
  }
}

std::string connection_hint(const sandbox::BoundEndpoint& endpoint) {
  const std::string host = endpoint.host.empty() || endpoint.host == "0.0.0.0" ? "localhost" : endpoint.host;
  const std::string port = std::to_string(endpoint.host_port);
  switch (endpoint.kind) {
    case EndpointKind::Tcp: return "nc " + host + " " + port;
    case EndpointKind::Http: return "curl http://" + host + ":" + port + "/";
    case EndpointKind::Ssh: return "ssh -p " + port + " user@" + host;
  }
  return "nc " + host + " " + port;
}

json summary_json(const ChallengeManifest& m) {
  return json{{"id", m.id},
              {"event", m.event},
              {"year", m.year},
              {"category", canonical_name(m.category)},
              {"category_label", table_label(m.category)},
              {"points", m.points},
              {"title", m.title}};
}

json detail_json(const ChallengeManifest& m) {
  json out = summary_json(m);
  out["description"] = m.description;
  out["endpoints"] = json::array();
  for (const auto& e : m.endpoints) {
    out["endpoints"].push_back({{"kind", to_string(e.kind)}, {"port", e.port}});
  }
  out["artifacts"] = json::array();
  for (const auto& a : m.artifacts) {
    out["artifacts"].push_back({{"path", a}, {"url", "/api/challenges/" + m.id + "/artifacts/" + a}});
  }
  return out;
}

json to_json(const SubmitResponse& r) {
  json out{{"verdict", r.correct ? "correct" : "incorrect"},
           {"first_solve", r.first_solve},
           {"solved_before", r.solved_before}};
  if (r.platform_flag) out["platform_flag"] = *r.platform_flag;
  return out;
}

json to_json(const CategoryStats& stats) {
  json rows = json::array();
  for (const auto& row : stats.rows) {
    rows.push_back({{"category", row.category ? std::string(canonical_name(*row.category)) : "total"},
                    {"label", row.label},
                    {"available", row.available},
                    {"solves", row.solves}});
  }
  return json{{"rows", rows},
              {"unknown", {{"solves", stats.unknown_solves}, {"challenges", stats.unknown_challenges}}}};
}

json to_json(const InstancePayload& payload) {
  const auto& h = payload.handle;
  json endpoints = json::array();
  for (std::size_t i = 0; i < h.endpoints.size(); ++i) {
    const auto& e = h.endpoints[i];
    endpoints.push_back({{"kind", to_string(e.kind)},
                         {"port", e.container_port},
                         {"host", e.host},
                         {"host_port", e.host_port},
                         {"hint", i < payload.hints.size() ? payload.hints[i] : connection_hint(e)}});
  }
  return json{{"instance_id", h.instance_id},
              {"challenge", h.challenge_id},
              {"state", sandbox::to_string(h.state)},
              {"workspace_mount", sandbox::kWorkspaceMount},
              {"endpoints", endpoints}};
}

json error_json(const ApiError& error) {
  return json{{"error", {{"code", to_string(error.code())}, {"message", error.what()}}}};
}

// ---------------------------------------------------------------------------

struct HttpServer::Impl {
  Platform& platform;
  httplib::Server server;
  std::mutex mutex;
  bool bound = false;

  explicit Impl(Platform& p) : platform(p) { routes(); }

  static void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  std::string user_of(const httplib::Request& req) const {
    const std::string header = req.get_header_value("Authorization");
    constexpr std::string_view kPrefix = "Bearer ";
    if (header.rfind(kPrefix, 0) == 0) {
      if (auto user = platform.authenticate(std::string_view(header).substr(kPrefix.size()))) {
        return *user;
      }
    }
    throw ApiError(ApiCode::BadRequest, "missing or unknown bearer token", 401);
  }

  static json body_of(const httplib::Request& req) {
    try {
      json body = json::parse(req.body);
      if (!body.is_object()) throw ApiError(ApiCode::BadRequest, "body must be a JSON object");
      return body;
    } catch (const json::parse_error&) {
      throw ApiError(ApiCode::BadRequest, "body is not valid JSON");
    }
  }

  static std::string string_field(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || !it->is_string()) {
      throw ApiError(ApiCode::BadRequest, std::string("field '") + key + "' must be a string");
    }
    return it->get<std::string>();
  }

  template <typename Handler>
  httplib::Server::Handler guarded(Handler handler) {
    return [this, handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const ApiError& e) {
        send_json(res, e.status(), error_json(e));
      } catch (const std::exception& e) {
        const ApiError internal(ApiCode::Internal, e.what());
        send_json(res, internal.status(), error_json(internal));
      }
    };
  }

  void routes() {
    server.Get("/api/challenges", guarded([this](const httplib::Request& req, httplib::Response& res) {
      user_of(req);
      QueryFilter filter;
      if (auto v = req.get_param_value("event"); !v.empty()) filter.event = v;
      if (auto v = req.get_param_value("year"); !v.empty()) {
        try {
          std::size_t used = 0;
          filter.year = std::stoi(v, &used);
          if (used != v.size()) throw std::invalid_argument(v);
        } catch (const std::exception&) {
          throw ApiError(ApiCode::BadRequest, "year must be an integer");
        }
      }
      if (auto v = req.get_param_value("category"); !v.empty()) {
        filter.category = category_from_string(v);
        if (!filter.category) throw ApiError(ApiCode::BadRequest, "unknown category '" + v + "'");
      }
      json list = json::array();
      for (const auto& m : query(platform.registry(), filter)) list.push_back(summary_json(m));
      send_json(res, 200, json{{"challenges", list}});
    }));

    server.Get(R"(/api/challenges/([a-z0-9-]+))",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string user = user_of(req);
                 const auto* entry = platform.registry().find(req.matches[1].str());
                 if (entry == nullptr) throw ApiError(ApiCode::NotFound, "no such challenge");
                 json body = detail_json(entry->manifest);
                 body["solved"] = platform.solves().has_solved(user, entry->manifest.id);
                 send_json(res, 200, body);
               }));

    server.Get(R"(/api/challenges/([a-z0-9-]+)/artifacts/(.+))",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 user_of(req);
                 const auto* entry = platform.registry().find(req.matches[1].str());
                 if (entry == nullptr) throw ApiError(ApiCode::NotFound, "no such challenge");
                 std::string wanted;
                 try {
                   wanted = normalize_relative_path(req.matches[2].str());
                 } catch (const Error&) {
                   throw ApiError(ApiCode::NotFound, "no such artifact");
                 }
                 const auto& artifacts = entry->manifest.artifacts;
                 if (std::find(artifacts.begin(), artifacts.end(), wanted) == artifacts.end()) {
                   throw ApiError(ApiCode::NotFound, "no such artifact");
                 }
                 std::ifstream in(entry->directory / wanted, std::ios::binary);
                 if (!in) throw ApiError(ApiCode::NotFound, "artifact missing on disk");
                 std::ostringstream buf;
                 buf << in.rdbuf();
                 res.status = 200;
                 res.set_content(buf.str(), "application/octet-stream");
               }));

    server.Post(R"(/api/challenges/([a-z0-9-]+)/submit)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string user = user_of(req);
                  const std::string challenge = req.matches[1].str();
                  if (platform.registry().find(challenge) == nullptr) {
                    throw ApiError(ApiCode::NotFound, "no such challenge");
                  }
                  const std::string flag = string_field(body_of(req), "flag");
                  send_json(res, 200, to_json(platform.handle_submit(user, challenge, flag)));
                }));

    server.Post("/api/instances", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string user = user_of(req);
      const std::string challenge = string_field(body_of(req), "challenge");
      send_json(res, 201, to_json(platform.handle_instance_create(user, challenge)));
    }));

    server.Delete(R"(/api/instances/([0-9a-f]+))",
                  guarded([this](const httplib::Request& req, httplib::Response& res) {
                    const std::string user = user_of(req);
                    platform.handle_instance_delete(user, req.matches[1].str());
                    send_json(res, 200, json{{"deleted", req.matches[1].str()}});
                  }));

    server.Get("/api/stats/categories", guarded([this](const httplib::Request& req, httplib::Response& res) {
      user_of(req);
      send_json(res, 200, to_json(platform.handle_stats()));
    }));

    server.Get("/api/users/me/solves", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string user = user_of(req);
      json solves = json::array();
      for (const auto& r : platform.solves_of(user)) {
        solves.push_back({{"challenge", r.challenge_id}, {"timestamp", r.timestamp}});
      }
      send_json(res, 200, json{{"user", user}, {"solves", solves}});
    }));

    const auto ui_dir = platform.config().data_dir / "ui";
    std::error_code ec;
    if (fs::is_directory(ui_dir, ec)) server.set_mount_point("/", ui_dir.string());

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      const ApiCode code = res.status == 404 ? ApiCode::NotFound
                           : res.status >= 500 ? ApiCode::Internal
                                               : ApiCode::BadRequest;
      send_json(res, res.status, error_json(ApiError(code, "no such route", res.status)));
    });
  }
};

HttpServer::HttpServer(Platform& platform) : impl_(std::make_unique<Impl>(platform)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                              : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::IoFailure, "cannot listen on " + host + ":" + std::to_string(port));
  impl_->bound = true;
  return bound;
}

void HttpServer::run() {
  if (!impl_->bound) throw Error(Errc::InvalidArgument, "HttpServer::run before bind");
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace ctfvault::service
