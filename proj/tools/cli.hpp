#pragma once

#include "pdmp/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace pdmp::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

enum Exit : int { kOk = 0, kUsage = 2, kConditionFailed = 3, kNumeric = 4 };

// Everything a command needs. `options` holds every effective setting,
// defaults included, so a manifest replays without consulting defaults.
struct Request {
  std::string command;
  nlohmann::json options = nlohmann::json::object();
  nlohmann::json model_ref;  // {"gallery": name} or {"file": path}
  nlohmann::json model;      // config snapshot
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::filesystem::path out_dir = ".";
};

// Output files of one run, written under out_dir with their digests.
class Outputs {
 public:
  explicit Outputs(std::filesystem::path dir) : dir_(std::move(dir)) {}
  void write(const std::string& name, const std::string& bytes);
  const std::map<std::string, std::string>& digests() const { return digests_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> digests_;
};

// Deterministic part of the manifest, embedded in every report.
nlohmann::json embedded_manifest(const Request& req, std::size_t streams);

// "schema" tag of a report file.
std::string schema_tag(const std::string& kind);

// Command bodies; each returns an exit code. `streams` receives the number
// of seed streams the command drew from.
int cmd_simulate(const Request& req, Outputs& out, std::size_t& streams);
int cmd_check(const Request& req, Outputs& out, std::size_t& streams);
int cmd_couple(const Request& req, Outputs& out, std::size_t& streams);
int cmd_estimate(const Request& req, Outputs& out, std::size_t& streams);
int cmd_lil(const Request& req, Outputs& out, std::size_t& streams);
int cmd_export(const Request& req, Outputs& out, std::size_t& streams);

// Runs a request, writes the sidecar manifest.json (adds wall-clock, thread
// count and output digests) and maps library errors to exit codes.
int execute(const Request& req, std::ostream& err);

// Rebuilds the request recorded in a manifest.
Request request_from_manifest(const nlohmann::json& manifest);

// Full command line entry point (args exclude the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Single-line JSON error record for stderr.
void report_error(std::ostream& err, const std::string& code, const std::string& message, int exit_code);

}  // namespace pdmp::cli
