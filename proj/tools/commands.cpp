#include "cli.hpp"

#include "pdmp/conditions.hpp"
#include "pdmp/coupling.hpp"
#include "pdmp/errors.hpp"
#include "pdmp/lil.hpp"
#include "pdmp/measure.hpp"
#include "pdmp/operators.hpp"
#include "pdmp/path_io.hpp"
#include "pdmp/simulate.hpp"

#include <sstream>

namespace pdmp::cli {

using nlohmann::json;

namespace {

// Stream id for side tasks (centering chains); replicas and paths use 0..n-1.
constexpr std::uint64_t kSideStream = 1ull << 40;

HybridState state_from(const ModelSpec& model, const json& y, const json& i, const std::string& what) {
  const auto v = y.get<std::vector<double>>();
  const int flow = i.get<int>() - 1;
  if (static_cast<int>(v.size()) != model.dim)
    fail(ErrorCode::InvalidConfig, what + " has " + std::to_string(v.size()) + " coordinates, model dimension is " +
                                       std::to_string(model.dim));
  if (flow < 0 || flow >= model.num_flows())
    fail(ErrorCode::InvalidConfig, what + " flow index is outside 1.." + std::to_string(model.num_flows()));
  HybridState x;
  x.y = Point(model.dim);
  for (int k = 0; k < model.dim; ++k) x.y[k] = v[static_cast<std::size_t>(k)];
  x.flow = flow;
  if (!model.box.contains(x.y)) fail(ErrorCode::InvalidConfig, what + " lies outside the state space");
  return x;
}

json header(const std::string& kind, const Request& req, std::size_t streams) {
  return {{"schema", schema_tag(kind)}, {"manifest", embedded_manifest(req, streams)}};
}

std::string report(const std::string& kind, const Request& req, std::size_t streams, json body) {
  json out = header(kind, req, streams);
  out.update(body);
  return out.dump(2) + "\n";
}

}  // namespace

int cmd_simulate(const Request& req, Outputs& out, std::size_t& streams) {
  const auto model = model_from_json(req.model);
  const auto& o = req.options;
  const auto x0 = state_from(model, o.at("x0"), o.at("i0"), "x0");
  streams = 1;
  SeedStream stream(req.seed, 0);
  const double horizon = o.at("horizon").get<double>();
  const auto path = horizon > 0.0 ? simulate_until(model, x0, horizon, stream)
                                  : simulate_embedded(model, x0, o.at("steps").get<std::size_t>(), stream);
  const auto format = o.at("format").get<std::string>();
  json files = json::array();
  if (format != "binary") {
    std::ostringstream s;
    write_path_jsonl(path, s, header("path", req, streams));
    out.write("path.jsonl", s.str());
    files.push_back("path.jsonl");
  }
  if (format != "jsonl") {
    std::ostringstream s;
    write_path_binary(path, s, header("path", req, streams));
    out.write("path.bin", s.str());
    files.push_back("path.bin");
  }
  out.write("simulate.json", report("simulate", req, streams,
                                    {{"records", path.steps() + 1},
                                     {"steps", path.steps()},
                                     {"tau_last", path.jump_time(path.steps())},
                                     {"files", files}}));
  return kOk;
}

int cmd_check(const Request& req, Outputs& out, std::size_t& streams) {
  const auto model = model_from_json(req.model);
  const auto& o = req.options;
  ConditionOptions copt;
  copt.a1_probes = o.at("a1_probes").get<std::size_t>();
  const auto probes = make_probes(model, o.at("probes").get<std::size_t>());
  const auto rep = check_conditions(model, probes, copt);
  json body = rep.to_json();
  bool pass = rep.all_pass();
  json failed = json::array();
  for (const auto& c : rep.conditions)
    if (!c.pass) failed.push_back({{"condition", c.name}, {"margin", c.margin}, {"witness", c.witness}});
  if (!rep.balance_pass) failed.push_back({{"condition", "balance"}, {"lhs", rep.balance_lhs}});
  streams = 0;
  if (o.at("coupling").get<bool>()) {
    streams = 1;
    SeedStream stream(req.seed, 0);
    const auto bp = make_b_probes(model, o.at("b_probes").get<std::size_t>(), stream);
    body["coupling"] = check_B_conditions(model, bp, {}, stream);
    if (!body["coupling"].at("all_pass").get<bool>()) {
      pass = false;
      failed.push_back({{"condition", "coupling"}});
    }
  }
  body["pass"] = pass;
  body["failed"] = failed;
  out.write("check.json", report("check", req, streams, body));
  return pass ? kOk : kConditionFailed;
}

int cmd_couple(const Request& req, Outputs& out, std::size_t& streams) {
  const auto model = model_from_json(req.model);
  const auto& o = req.options;
  const auto x1 = state_from(model, o.at("x1"), o.at("i1"), "x1");
  const auto x2 = state_from(model, o.at("x2"), o.at("i2"), "x2");
  const auto n = o.at("n").get<std::size_t>();
  const auto paths = o.at("paths").get<std::size_t>();
  streams = paths;

  SeedStream stream(req.seed, 0);
  const auto path = simulate_coupled(model, x1, x2, n, stream);
  std::ostringstream s;
  s << header("coupled_path", req, streams).dump() << '\n';
  path.write_jsonl(s);
  out.write("coupled_path.jsonl", s.str());

  const auto decay = coupled_distance_decay(model, x1, x2, n, paths, req.seed);
  json body = {{"path", {{"steps", path.steps()},
                         {"final_distance", path.distance(path.steps())},
                         {"tau_hat", path.tau_hat()},
                         {"coupled_fraction", path.coupled_fraction()}}},
               {"decay", decay.to_json()}};
  const auto g = o.at("g").get<std::string>();
  if (!g.empty()) {
    SeedStream cs(req.seed, kSideStream);
    const auto c = center_observable(model, make_observable(g, model), x1, {}, cs);
    const auto gap = coupled_increment_gap(model, x1, x2, c.gbar, n, paths, splitmix64(req.seed + 1));
    body["centering"] = c.to_json();
    body["gap"] = gap.to_json();
    streams = 2 * paths + 1;
  }
  out.write("couple.json", report("couple", req, streams, body));
  return kOk;
}

int cmd_estimate(const Request& req, Outputs& out, std::size_t& streams) {
  const auto model = model_from_json(req.model);
  const auto& o = req.options;
  const auto x0 = state_from(model, o.at("x0"), o.at("i0"), "x0");
  streams = 1;
  SeedStream stream(req.seed, 0);
  InvariantOptions iopt;
  iopt.burn_in = o.at("burn_in").get<std::size_t>();
  iopt.n_keep = o.at("keep").get<std::size_t>();
  iopt.support = o.at("support").get<std::size_t>();
  iopt.resamples = o.at("resamples").get<std::size_t>();
  const auto inv = estimate_invariants(model, x0, iopt, stream);
  for (const auto& [name, mu] : {std::pair{"mu_star", &inv.mu}, std::pair{"nu_star", &inv.nu_G}}) {
    std::ostringstream s;
    s << header("measure", req, streams).dump() << '\n';
    mu->write_jsonl(s);
    out.write(std::string(name) + ".jsonl", s.str());
  }

  DecayOptions dopt;
  dopt.n_steps = o.at("decay_steps").get<std::size_t>();
  dopt.support = iopt.support;
  dopt.resamples = iopt.resamples;
  const auto decay = ergodicity_decay(model, EmpiricalMeasure::dirac(x0), inv.mu, dopt, stream);

  json observables = json::object();
  for (const auto& g : o.at("g").get<std::vector<std::string>>()) {
    const auto c = center_observable(model, make_observable(g, model), x0, {}, stream);
    const auto emb = estimate_sigma_embedded(model, c.gbar, c.last, o.at("sigma_chain").get<std::size_t>(),
                                             o.at("sigma_batches").get<std::size_t>(), stream);
    const auto tilde = estimate_sigma_tilde(model, c.gbar, c.mu_star, o.at("tilde_mc").get<std::size_t>(), stream);
    json entry = {{"centering", c.to_json()}, {"sigma_embedded", emb.to_json()}, {"sigma_tilde", tilde.to_json()}};
    try {
      entry["sigma_bar"] = sigma_bar(emb.batch.sigma, tilde.estimate.sigma, model.lambda());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateSigma) throw;
      entry["sigma_bar"] = nullptr;
      entry["sigma_bar_error"] = e.what();
    }
    observables[g] = entry;
  }
  out.write("estimate.json", report("estimate", req, streams,
                                    {{"discrepancy", inv.discrepancy},
                                     {"decay", decay.to_json()},
                                     {"observables", observables},
                                     {"files", {"mu_star.jsonl", "nu_star.jsonl"}}}));
  return kOk;
}

int cmd_lil(const Request& req, Outputs& out, std::size_t& streams) {
  const auto model = model_from_json(req.model);
  const auto& o = req.options;
  const auto x0 = state_from(model, o.at("x0"), o.at("i0"), "x0");
  const auto replicas = o.at("replicas").get<std::size_t>();
  SeedStream cs(req.seed, kSideStream);
  const auto c = center_observable(model, make_observable(o.at("g").get<std::string>(), model), x0, {}, cs);
  LilOptions lopt;
  lopt.n_track = o.at("n_track").get<std::size_t>();
  lopt.full_traces = o.at("full_traces").get<bool>();
  lopt.sigma_chain = o.at("sigma_chain").get<std::size_t>();
  lopt.sigma_batches = o.at("sigma_batches").get<std::size_t>();
  lopt.tilde_mc = o.at("tilde_mc").get<std::size_t>();
  SeedStream stream(req.seed, 0);
  const auto rep = lil_diagnostics(model, c, o.at("horizon").get<double>(), replicas, stream, lopt);
  // replicas, three estimator sub-streams and the centering chain
  streams = replicas + 4;
  json body = rep.to_json();
  body["centering"] = c.to_json();
  out.write("lil.json", report("lil", req, streams, body));
  std::ostringstream csv;
  csv << "# schema " << schema_tag("lil_traces") << '\n';
  csv << "# manifest " << embedded_manifest(req, streams).dump() << '\n';
  rep.write_csv(csv);
  out.write("lil_traces.csv", csv.str());
  return kOk;
}

int cmd_export(const Request& req, Outputs& out, std::size_t& streams) {
  streams = 0;
  json cfg = req.model;
  cfg["schema"] = schema_tag("model");
  out.write("model.json", cfg.dump(2) + "\n");
  return kOk;
}

}  // namespace pdmp::cli
