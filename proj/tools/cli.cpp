#include "cli.hpp"

#include "pdmp/digest.hpp"
#include "pdmp/errors.hpp"
#include "pdmp/gallery.hpp"
#include "pdmp/parallel.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <ostream>
#include <sstream>

namespace pdmp::cli {

using nlohmann::json;

void Outputs::write(const std::string& name, const std::string& bytes) {
  std::filesystem::create_directories(dir_);
  const auto path = dir_ / name;
  std::ofstream f(path, std::ios::binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) fail(ErrorCode::InvalidConfig, "cannot write '" + path.string() + "'");
  digests_[name] = sha256_hex(bytes);
}

std::string schema_tag(const std::string& kind) { return "pdmp." + kind + "/" + std::to_string(kSchemaVersion); }

json embedded_manifest(const Request& req, std::size_t streams) {
  return {{"schema_version", kSchemaVersion},
          {"artifact_version", kVersion},
          {"command", req.command},
          {"options", req.options},
          {"model_ref", req.model_ref},
          {"model", req.model},
          {"model_hash", model_hash(model_from_json(req.model))},
          {"seed", req.seed},
          {"streams", streams}};
}

void report_error(std::ostream& err, const std::string& code, const std::string& message, int exit_code) {
  err << json{{"error", code}, {"message", message}, {"exit", exit_code}}.dump() << std::endl;
}

namespace {

int exit_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::PreconditionViolation:
    case ErrorCode::BalanceViolation:
    case ErrorCode::InvalidRowSum:
    case ErrorCode::NoiseSupportTooLarge:
    case ErrorCode::UnknownGalleryName:
      return kUsage;
    default:
      return kNumeric;
  }
}

int dispatch(const Request& req, Outputs& out, std::size_t& streams) {
  if (req.command == "simulate") return cmd_simulate(req, out, streams);
  if (req.command == "check") return cmd_check(req, out, streams);
  if (req.command == "couple") return cmd_couple(req, out, streams);
  if (req.command == "estimate") return cmd_estimate(req, out, streams);
  if (req.command == "lil") return cmd_lil(req, out, streams);
  if (req.command == "export") return cmd_export(req, out, streams);
  fail(ErrorCode::InvalidConfig, "unknown command '" + req.command + "'");
}

}  // namespace

int execute(const Request& req, std::ostream& err) {
  try {
    set_thread_count(req.threads);
    const auto start = std::chrono::steady_clock::now();
    Outputs out(req.out_dir);
    std::size_t streams = 0;
    const int code = dispatch(req, out, streams);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json sidecar = embedded_manifest(req, streams);
    sidecar["threads"] = req.threads;
    sidecar["wall_clock_seconds"] = secs;
    sidecar["exit_code"] = code;
    sidecar["outputs"] = out.digests();
    out.write("manifest.json", sidecar.dump(2) + "\n");
    return code;
  } catch (const Error& e) {
    const int code = exit_for(e.code());
    report_error(err, std::string(to_string(e.code())), e.what(), code);
    return code;
  } catch (const json::exception& e) {
    report_error(err, "InvalidConfig", e.what(), kUsage);
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    report_error(err, "InvalidConfig", e.what(), kUsage);
    return kUsage;
  }
}

Request request_from_manifest(const json& manifest) {
  if (manifest.value("schema_version", 0) != kSchemaVersion)
    fail(ErrorCode::InvalidConfig, "manifest schema version is not supported");
  Request req;
  req.command = manifest.at("command").get<std::string>();
  req.options = manifest.at("options");
  req.model_ref = manifest.at("model_ref");
  req.model = manifest.at("model");
  req.seed = manifest.at("seed").get<std::uint64_t>();
  if (model_hash(model_from_json(req.model)) != manifest.at("model_hash").get<std::string>())
    fail(ErrorCode::InvalidConfig, "model snapshot does not match the recorded model hash");
  return req;
}

namespace {

struct Common {
  std::string gallery;
  std::string model_file;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out_dir = ".";
};

void add_common(CLI::App* sub, Common& c) {
  auto* g = sub->add_option("--gallery", c.gallery, "built-in model: relaxation, two-flow-switch, iid-jump");
  auto* m = sub->add_option("--model", c.model_file, "model config file (JSON)");
  g->excludes(m);
  sub->callback([g, m] {
    if (g->count() + m->count() == 0) throw CLI::RequiredError("--gallery or --model");
  });
  sub->add_option("--seed", c.seed, "root seed")->envname("PDMP_SEED");
  sub->add_option("--threads", c.threads, "worker threads")->envname("PDMP_THREADS");
  sub->add_option("--out-dir", c.out_dir, "directory for every output file");
}

void resolve_model(const Common& c, Request& req) {
  if (!c.gallery.empty()) {
    req.model_ref = {{"gallery", c.gallery}};
    req.model = model_to_json(load_gallery(c.gallery).model);
  } else {
    req.model_ref = {{"file", c.model_file}};
    req.model = model_to_json(load_model_file(c.model_file));
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Piecewise deterministic Markov process diagnostics", "pdmp"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;
  Request req;

  // simulate
  std::size_t steps = 1000;
  double horizon = 0.0;
  std::vector<double> x0;
  int i0 = 1;
  std::string format = "jsonl";
  auto* sim = app.add_subcommand("simulate", "simulate one path of the embedded chain");
  add_common(sim, common);
  sim->add_option("--steps", steps, "number of jumps");
  sim->add_option("--horizon", horizon, "simulate until tau_n exceeds this time instead");
  sim->add_option("--x0", x0, "initial y, comma separated")->delimiter(',');
  sim->add_option("--i0", i0, "initial flow (one-based)");
  sim->add_option("--format", format, "jsonl, binary or both")->check(CLI::IsMember({"jsonl", "binary", "both"}));

  // check
  std::size_t probes = 1000, a1_probes = 64, b_probes = 24;
  bool coupling = false;
  auto* chk = app.add_subcommand("check", "spot-check (A1)-(A5), balance and optionally (B0)-(B5)");
  add_common(chk, common);
  chk->add_option("--probes", probes, "quasi-random probe tuples");
  chk->add_option("--a1-probes", a1_probes, "probes used for the nested (A1) quadrature");
  chk->add_flag("--coupling", coupling, "also run the coupling conditions");
  chk->add_option("--b-probes", b_probes, "probe pairs for the coupling conditions");

  // couple
  std::vector<double> x1, x2;
  int i1 = 1, i2 = 1;
  std::size_t n_couple = 500, paths = 1000;
  std::string g_couple;
  auto* cpl = app.add_subcommand("couple", "simulate the coupled chain from (x1, x2)");
  add_common(cpl, common);
  cpl->add_option("--x1", x1, "first initial y")->delimiter(',')->required();
  cpl->add_option("--i1", i1, "first initial flow (one-based)");
  cpl->add_option("--x2", x2, "second initial y")->delimiter(',')->required();
  cpl->add_option("--i2", i2, "second initial flow (one-based)");
  cpl->add_option("--n", n_couple, "coupled steps");
  cpl->add_option("--paths", paths, "paths averaged in the distance decay fit");
  cpl->add_option("--g", g_couple, "observable for the increment-gap diagnostic");

  // estimate
  std::size_t burn_in = 10'000, keep = 10'000, support = 500, resamples = 5, decay_steps = 30;
  std::vector<std::string> est_g;
  std::size_t sigma_chain = 2'000'000, sigma_batches = 1000, tilde_mc = 200'000;
  auto add_sigma_sizes = [&](CLI::App* sub) {
    sub->add_option("--sigma-chain", sigma_chain, "chain length for the sigma(G gbar) estimators");
    sub->add_option("--sigma-batches", sigma_batches, "batches for batch means");
    sub->add_option("--tilde-mc", tilde_mc, "stationary draws for sigma tilde");
  };
  auto* est = app.add_subcommand("estimate", "invariant measures, ergodicity decay and sigma estimators");
  add_common(est, common);
  est->add_option("--x0", x0, "initial y, comma separated")->delimiter(',');
  est->add_option("--i0", i0, "initial flow (one-based)");
  est->add_option("--burn-in", burn_in);
  est->add_option("--keep", keep, "chain states kept for mu_*");
  est->add_option("--support", support, "atoms per d_FM comparison");
  est->add_option("--resamples", resamples);
  est->add_option("--decay-steps", decay_steps);
  est->add_option("--g", est_g, "observables to center and estimate sigma for")->delimiter(',');
  add_sigma_sizes(est);

  // lil
  std::string g_lil = "y";
  double lil_horizon = 1e5;
  std::size_t replicas = 64, n_track = 4096;
  bool full_traces = false;
  auto* lil = app.add_subcommand("lil", "LIL/CLT diagnostics over independent replicas");
  add_common(lil, common);
  lil->add_option("--g", g_lil, "observable name");
  lil->add_option("--horizon", lil_horizon, "time horizon T");
  lil->add_option("--replicas", replicas);
  lil->add_option("--x0", x0, "start of the centering chain")->delimiter(',');
  lil->add_option("--i0", i0);
  lil->add_option("--n-track", n_track, "jump count tracked for h_n^2");
  lil->add_flag("--full-traces", full_traces, "keep the Z series of replica 0");
  add_sigma_sizes(lil);

  // export
  auto* exp = app.add_subcommand("export", "write the model config (gallery models round-trip)");
  add_common(exp, common);

  // replay
  std::string manifest_path;
  auto* rep = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  rep->add_option("manifest", manifest_path, "manifest.json of an earlier run")->required();
  rep->add_option("--threads", common.threads)->envname("PDMP_THREADS");
  rep->add_option("--out-dir", common.out_dir);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "UsageError", e.what(), kUsage);
    return kUsage;
  }

  auto* chosen = app.get_subcommands().front();
  try {
    if (chosen == rep) {
      std::ifstream f(manifest_path);
      if (!f) fail(ErrorCode::InvalidConfig, "cannot open manifest '" + manifest_path + "'");
      req = request_from_manifest(json::parse(f));
    } else {
      req.command = chosen->get_name();
      req.seed = common.seed;
      resolve_model(common, req);
      const auto model = model_from_json(req.model);
      if (x0.empty()) {
        const Point mid = 0.5 * (model.box.lo + model.box.hi);
        x0.assign(mid.data(), mid.data() + mid.size());
      }
      if (chosen == sim) {
        req.options = {{"steps", steps}, {"horizon", horizon}, {"x0", x0}, {"i0", i0}, {"format", format}};
      } else if (chosen == chk) {
        req.options = {{"probes", probes}, {"a1_probes", a1_probes}, {"coupling", coupling}, {"b_probes", b_probes}};
      } else if (chosen == cpl) {
        req.options = {{"x1", x1}, {"i1", i1}, {"x2", x2}, {"i2", i2}, {"n", n_couple}, {"paths", paths},
                       {"g", g_couple}};
      } else if (chosen == est) {
        req.options = {{"x0", x0},           {"i0", i0},         {"burn_in", burn_in}, {"keep", keep},
                       {"support", support}, {"resamples", resamples}, {"decay_steps", decay_steps},
                       {"g", est_g}, {"sigma_chain", sigma_chain}, {"sigma_batches", sigma_batches},
                       {"tilde_mc", tilde_mc}};
      } else if (chosen == lil) {
        req.options = {{"g", g_lil}, {"horizon", lil_horizon}, {"replicas", replicas}, {"x0", x0},
                       {"i0", i0},   {"n_track", n_track},     {"full_traces", full_traces},
                       {"sigma_chain", sigma_chain}, {"sigma_batches", sigma_batches}, {"tilde_mc", tilde_mc}};
      }
    }
  } catch (const Error& e) {
    const int code = exit_for(e.code());
    report_error(err, std::string(to_string(e.code())), e.what(), code);
    return code;
  } catch (const json::exception& e) {
    report_error(err, "InvalidConfig", e.what(), kUsage);
    return kUsage;
  }
  req.threads = std::max(1u, common.threads);
  req.out_dir = common.out_dir;
  return execute(req, err);
}

}  // namespace pdmp::cli
