#include "ctfvault/cli.hpp"

#include <CLI11.hpp>
#include <atomic>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <json.hpp>
#include <optional>

#include "ctfvault/config.hpp"
#include "ctfvault/error.hpp"
#include "ctfvault/flagcheck.hpp"
#include "ctfvault/registry.hpp"
#include "ctfvault/sandbox/build_plan.hpp"
#include "ctfvault/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ctfvault::cli {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  bool json = false;
  std::string root;
  // build
  std::string challenge;
  std::string out_dir = ".";
  bool run = false;
  std::string base_ref;
  // flagcheck-gen
  std::string platform_flag;
  // stats
  std::string solves_path;
  // serve
  std::string listen;
};

Config config_of(const Options& opts) {
  if (opts.config_path.empty()) return Config{};
  return load_config(opts.config_path);
}

fs::path archive_root(const Options& opts, const Config& cfg) {
  if (!opts.root.empty()) return opts.root;
  if (!cfg.archive_root.empty()) return cfg.archive_root;
  throw UsageError("no archive root: pass one or set archive.root in --config");
}

void print_finding(std::ostream& out, bool as_json, const std::string& challenge, const Finding& f) {
  if (as_json) {
    json rec{{"severity", to_string(f.severity)},
             {"challenge", challenge},
             {"code", f.code},
             {"message", f.message}};
    if (f.path) rec["path"] = *f.path;
    out << rec.dump() << '\n';
  } else {
    out << to_string(f.severity) << ' ' << challenge << ' ' << f.code << ' ' << f.message << '\n';
  }
}

int cmd_validate(const Options& opts, std::ostream& out) {
  const Config cfg = config_of(opts);
  IngestResult ingest;
  try {
    ingest = ingest_archive(archive_root(opts, cfg));
  } catch (const Error& e) {
    if (e.code() != Errc::DuplicateId) throw;
    print_finding(out, opts.json, "-", Finding{Severity::Error, "DUPLICATE_ID", e.what(), std::nullopt});
    return kValidationErrors;
  }
  bool errors = false;
  for (const auto& f : ingest.findings) {
    print_finding(out, opts.json, f.path.value_or("-"), f);
    errors = errors || f.severity == Severity::Error;
  }
  for (const auto& [id, entry] : ingest.registry.entries()) {
    const auto report = validate_challenge(entry.manifest, entry.directory);
    for (const auto& f : report.findings) print_finding(out, opts.json, id, f);
    errors = errors || !report.passing();
  }
  return errors ? kValidationErrors : kSuccess;
}

int cmd_build(const Options& opts, std::ostream& out) {
  const Config cfg = config_of(opts);
  auto ingest = ingest_archive(archive_root(opts, cfg));
  const auto* entry = ingest.registry.find(opts.challenge);
  if (entry == nullptr) throw UsageError("unknown challenge '" + opts.challenge + "'");

  const auto report = validate_challenge(entry->manifest, entry->directory);
  if (!report.passing()) {
    for (const auto& f : report.findings) print_finding(out, opts.json, opts.challenge, f);
    return kValidationErrors;
  }
  sandbox::BuildPlan plan;
  try {
    plan = sandbox::compile_build_plan(entry->manifest, entry->directory,
                                       opts.base_ref.empty() ? cfg.base_ref : opts.base_ref);
  } catch (const Error& e) {
    if (e.code() != Errc::PathEscape && e.code() != Errc::NoContent) throw;
    print_finding(out, opts.json, opts.challenge,
                  Finding{Severity::Error, e.code() == Errc::NoContent ? "NO_CONTENT" : "PATH_ESCAPE",
                          e.what(), std::nullopt});
    return kValidationErrors;
  }

  const fs::path out_dir = opts.out_dir;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  const fs::path recipe_path = out_dir / (opts.challenge + ".containerfile");
  {
    std::ofstream file(recipe_path, std::ios::binary | std::ios::trunc);
    file << sandbox::render_build_recipe(plan);
    if (!file) throw Error(Errc::IoFailure, "cannot write " + recipe_path.string());
  }

  std::optional<std::string> image;
  if (opts.run) {
    auto driver = service::make_driver(cfg);
    image = driver->build(plan);
  }
  if (opts.json) {
    json rec{{"challenge", opts.challenge}, {"recipe", recipe_path.generic_string()}};
    if (image) rec["image"] = *image;
    out << rec.dump() << '\n';
  } else {
    out << "recipe " << recipe_path.generic_string() << '\n';
    if (image) out << "image " << *image << '\n';
  }
  return kSuccess;
}

int cmd_flagcheck_gen(const Options& opts, std::istream& in, std::ostream& out) {
  if (!is_valid_slug(opts.challenge)) throw UsageError("'" + opts.challenge + "' is not a valid challenge id");
  if (opts.platform_flag.find_first_of("\r\n") != std::string::npos) {
    throw UsageError("platform flag contains a line break");
  }
  const std::string actual{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  flagcheck::CheckRecord record;
  try {
    record = flagcheck::generate_check(actual, opts.platform_flag, opts.challenge);
  } catch (const Error& e) {
    if (e.code() == Errc::EmptyFlag || e.code() == Errc::InvalidArgument) throw UsageError(e.what());
    throw;
  }
  if (opts.json) {
    out << json{{"algorithm", record.algorithm},
                {"challenge", record.challenge_id},
                {"digest", record.digest},
                {"platform_flag", record.platform_flag}}
               .dump()
        << '\n';
  } else {
    out << flagcheck::serialize(record);
  }
  return kSuccess;
}

int cmd_stats(const Options& opts, std::ostream& out) {
  const Config cfg = config_of(opts);
  const auto ingest = ingest_archive(archive_root(opts, cfg));
  const fs::path solves_path = opts.solves_path.empty() ? cfg.solves_path() : fs::path(opts.solves_path);
  const SolveLog log(solves_path);
  const auto records = log.records();
  const auto stats = category_stats(ingest.registry, records);
  if (opts.json) {
    out << service::to_json(stats).dump() << '\n';
    return kSuccess;
  }
  for (const auto& row : stats.rows) {
    out << std::left << std::setw(28) << row.label << std::right << std::setw(8) << row.available
        << std::setw(10) << row.solves << '\n';
  }
  if (stats.unknown_solves > 0) {
    out << std::left << std::setw(28) << "(unknown challenges)" << std::right << std::setw(8) << "-"
        << std::setw(10) << stats.unknown_solves << '\n';
  }
  return kSuccess;
}

std::atomic<service::HttpServer*> g_server{nullptr};

extern "C" void handle_stop_signal(int) {
  if (auto* server = g_server.load()) server->stop();
}

int cmd_serve(const Options& opts, std::ostream& out) {
  Config cfg = config_of(opts);
  if (!opts.root.empty()) cfg.archive_root = opts.root;
  if (!opts.listen.empty()) {
    split_listen(opts.listen);
    cfg.listen = opts.listen;
  }
  if (cfg.archive_root.empty()) throw UsageError("serve needs archive.root (via --config or --root)");
  auto platform = service::Platform::from_config(cfg);
  service::HttpServer server(*platform);
  const auto [host, port] = split_listen(cfg.listen);
  const int bound = server.bind(host, port);
  out << "serving " << platform->registry().size() << " challenges on " << host << ':' << bound
      << std::endl;
  g_server = &server;
  std::signal(SIGINT, handle_stop_signal);
  std::signal(SIGTERM, handle_stop_signal);
  server.run();
  g_server = nullptr;
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  Options opts;
  CLI::App app{"Self-hosted CTF challenge archive", "ctf-vault"};
  app.require_subcommand(1);
  app.add_option("--config", opts.config_path, "Configuration file (JSON)");
  app.add_flag("--json", opts.json, "Structured output");

  auto* validate = app.add_subcommand("validate", "Ingest and validate every challenge");
  validate->add_option("root", opts.root, "Archive root");

  auto* build = app.add_subcommand("build", "Render the container recipe of one challenge");
  build->add_option("challenge", opts.challenge, "Challenge id")->required();
  build->add_option("--root", opts.root, "Archive root");
  build->add_option("--out", opts.out_dir, "Output directory for <id>.containerfile");
  build->add_flag("--run", opts.run, "Also build the image with the configured driver");
  build->add_option("--base", opts.base_ref, "Base image reference");

  auto* gen = app.add_subcommand("flagcheck-gen", "Create a check record; the flag is read from stdin");
  gen->add_option("challenge", opts.challenge, "Challenge id")->required();
  gen->add_option("platform_flag", opts.platform_flag, "Flag released on success")->required();

  auto* stats = app.add_subcommand("stats", "Per-category coverage and solves");
  stats->add_option("--root", opts.root, "Archive root");
  stats->add_option("--solves", opts.solves_path, "Solve log (default <data.dir>/solves.log)");

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--root", opts.root, "Archive root");
  serve->add_option("--listen", opts.listen, "host:port");

  // Subcommand-local copies of the global flags.
  for (auto* sub : {validate, build, gen, stats, serve}) {
    sub->add_option("--config", opts.config_path, "Configuration file (JSON)");
    sub->add_flag("--json", opts.json, "Structured output");
  }

  std::vector<const char*> argv{"ctf-vault"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    if (*validate) return cmd_validate(opts, out);
    if (*build) return cmd_build(opts, out);
    if (*gen) return cmd_flagcheck_gen(opts, in, out);
    if (*stats) return cmd_stats(opts, out);
    if (*serve) return cmd_serve(opts, out);
  } catch (const UsageError& e) {
    err << "ctf-vault: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "ctf-vault: " << to_string(e.code()) << ": " << e.what() << '\n';
    return kRuntimeFailure;
  } catch (const std::exception& e) {
    err << "ctf-vault: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsage;
}

}  // namespace ctfvault::cli
