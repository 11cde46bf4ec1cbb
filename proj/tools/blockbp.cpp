// Command-line front end: ground-state search, classical magnetization,
// density-matrix comparison, worker scaling, and plain contraction.
//
// A run is described by one json object assembled from built-in defaults,
// the --config file, and explicit flags (later wins).  Every artifact
// carries the fnv-1a hash of that object, the seed, and the code version;
// `workers` and `out` are execution details and stay outside the hash so
// results are byte-identical across worker counts.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "blockbp/exact.hpp"
#include "blockbp/groundstate.hpp"
#include "blockbp/io.hpp"
#include "blockbp/rng.hpp"
#include "json.hpp"

using namespace blockbp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kCodeVersion = "blockbp 0.1.0";

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(uint64_t v) {
  char b[17];
  std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(v));
  return b;
}

// shortest representation that round-trips; deterministic
std::string fmt(double v) {
  char b[32];
  auto res = std::to_chars(b, b + sizeof b, v);
  return std::string(b, res.ptr);
}

// --- configuration -----------------------------------------------------------

struct Flags {
  std::string config, out, in, method, model, init, boundary, block, cell;
  uint64_t seed = 0;
  int workers = 1, steps = 0, rows = 0, cols = 0, measure_every = 0;
  int bp_rounds = 0;
  long d = 0, chi = 0, chi_m = 0;
  double dtau = 0, field = 0, bp_tol = 0, stagger = 0;
  bool infinite = false, verbose = false;
  std::vector<double> betas;
  std::vector<int> workers_list;
};

struct Resolved {
  json cfg;          // canonical run description
  std::string hash;  // fnv-1a 64 of cfg.dump()
  std::string out = "out";
  int workers = 1;
  bool verbose = false;

  uint64_t seed() const { return cfg.at("seed").get<uint64_t>(); }
};

json load_config_file(const std::string& path) {
  std::ifstream is(path);
  BBP_CHECK(is.good(), "cannot open config ", path);
  json j = json::parse(is, nullptr, true, /*ignore_comments=*/true);
  BBP_CHECK(j.is_object(), "config must be a json object: ", path);
  return j;
}

Resolved resolve(const CLI::App* sub, const Flags& f, json defaults) {
  Resolved r;
  if (!f.config.empty()) {
    json file = load_config_file(f.config);
    if (file.contains("workers")) {
      r.workers = file["workers"].get<int>();
      file.erase("workers");
    }
    if (file.contains("out")) {
      r.out = file["out"].get<std::string>();
      file.erase("out");
    }
    for (auto& [k, v] : file.items()) {
      BBP_CHECK(defaults.contains(k), "config key '", k, "' is not used by '",
                sub->get_name(), "'");
      defaults[k] = v;
    }
  }
  auto put = [&](const char* flag, const char* key, json v) {
    const CLI::Option* o = sub->get_option_no_throw(flag);
    if (o && o->count()) {
      BBP_CHECK(defaults.contains(key), "flag ", flag, " has no config key");
      defaults[key] = std::move(v);
    }
  };
  put("--seed", "seed", f.seed);
  put("--d", "d", f.d);
  put("--chi", "chi", f.chi);
  put("--chi-m", "chi_m", f.chi_m);
  put("--block", "block", f.block);
  put("--dtau", "dtau", f.dtau);
  put("--steps", "steps", f.steps);
  put("--model", "model", f.model);
  put("--field", "field", f.field);
  put("--rows", "rows", f.rows);
  put("--cols", "cols", f.cols);
  put("--boundary", "boundary", f.boundary);
  put("--infinite", "infinite", f.infinite);
  put("--cell", "cell", f.cell);
  put("--measure-every", "measure_every", f.measure_every);
  put("--bp-tol", "bp_tol", f.bp_tol);
  put("--bp-rounds", "bp_rounds", f.bp_rounds);
  put("--init", "init", f.init);
  put("--beta", "betas", f.betas);
  put("--stagger", "stagger", f.stagger);
  put("--in", "in", f.in);
  put("--method", "method", f.method);
  put("--workers-list", "workers_list", f.workers_list);
  if (const CLI::Option* o = sub->get_option_no_throw("--workers");
      o && o->count())
    r.workers = f.workers;
  if (const CLI::Option* o = sub->get_option_no_throw("--out"); o && o->count())
    r.out = f.out;
  BBP_CHECK(r.workers >= 1, "workers must be >= 1");
  r.verbose = f.verbose;
  r.cfg = std::move(defaults);
  r.hash = hex64(fnv1a64(r.cfg.dump()));
  return r;
}

std::pair<int, int> parse_hw(const std::string& s, const char* what) {
  size_t x = s.find('x');
  int h = 0, w = 0;
  try {
    h = std::stoi(s.substr(0, x));
    w = x == std::string::npos ? h : std::stoi(s.substr(x + 1));
  } catch (const std::exception&) {
    h = 0;
  }
  BBP_CHECK(h > 0 && w > 0, "bad ", what, " '", s, "' (expected HxW)");
  return {h, w};
}

ModelSpec model_from(const json& cfg) {
  std::string m = cfg.at("model").get<std::string>();
  if (m == "heisenberg") return ModelSpec::heisenberg();
  if (m == "ising")
    return ModelSpec::transverse_ising(cfg.at("field").get<double>());
  fail("unknown model '", m, "' (expected heisenberg or ising)");
}

EvolutionConfig evolution_config(const Resolved& rc, ThreadPool* pool) {
  const json& cfg = rc.cfg;
  EvolutionConfig ec;
  ec.model = model_from(cfg);
  ec.dtau = cfg.at("dtau").get<double>();
  ec.sweeps = cfg.at("steps").get<int>();
  ec.bond_dim = cfg.at("d").get<long>();
  long cm = cfg.at("chi_m").get<long>(), ce = cfg.at("chi").get<long>();
  ec.msg_trunc = {cm > 0 ? cm : ec.bond_dim * ec.bond_dim, 1e-12};
  ec.env_trunc = {ce > 0 ? ce : 2 * ec.bond_dim * ec.bond_dim + 10, 1e-12};
  auto [bh, bw] = parse_hw(cfg.at("block").get<std::string>(), "block");
  ec.block_h = bh;
  ec.block_w = bw;
  ec.bp_tol = cfg.at("bp_tol").get<double>();
  ec.bp_max_rounds = cfg.at("bp_rounds").get<int>();
  ec.measure_every = cfg.at("measure_every").get<int>();
  ec.seed = rc.seed();
  ec.pool = pool;
  if (rc.verbose)
    ec.log = [](const std::string& line) { std::cerr << line << "\n"; };
  return ec;
}

PepsNetwork initial_state(const json& cfg) {
  bool infinite = cfg.at("infinite").get<bool>();
  Lattice lat;
  if (infinite) {
    auto [h, w] = parse_hw(cfg.at("cell").get<std::string>(), "cell");
    lat = {h, w, Boundary::kPeriodic};
  } else {
    std::string b = cfg.at("boundary").get<std::string>();
    BBP_CHECK(b == "obc" || b == "pbc", "boundary must be obc or pbc");
    lat = {cfg.at("rows").get<int>(), cfg.at("cols").get<int>(),
           b == "pbc" ? Boundary::kPeriodic : Boundary::kOpen};
  }
  std::string init = cfg.at("init").get<std::string>();
  if (init == "auto")
    init = cfg.at("model").get<std::string>() == "heisenberg"
               ? "neel"
               : "random-product";
  uint64_t seed = derive_seed(cfg.at("seed").get<uint64_t>(), "init", {});
  if (init == "neel") return neel_peps(lat);
  if (init == "random-product") return random_product_peps(lat, 2, seed);
  if (init == "random")
    return random_peps(lat, 2, cfg.at("d").get<long>(), seed);
  PepsNetwork p = load_peps(init);  // anything else names a stored state
  BBP_CHECK(p.lat.periodic() == lat.periodic(),
            "init state boundary does not match the run");
  return p;
}

// --- artifacts ---------------------------------------------------------------

std::ofstream open_artifact(const Resolved& rc, const std::string& name) {
  fs::create_directories(rc.out);
  fs::path p = fs::path(rc.out) / name;
  std::ofstream os(p);
  BBP_CHECK(os.good(), "cannot write ", p.string());
  return os;
}

void csv_header(std::ostream& os, const Resolved& rc) {
  os << "# " << kCodeVersion << "\n";
  os << "# config_hash: " << rc.hash << "\n";
  os << "# seed: " << rc.seed() << "\n";
}

json json_header(const Resolved& rc) {
  return json{{"code_version", kCodeVersion},
              {"config_hash", rc.hash},
              {"seed", rc.seed()}};
}

void write_json(const Resolved& rc, const std::string& name, const json& j) {
  std::ofstream os = open_artifact(rc, name);
  os << j.dump(2) << "\n";
}

// the binary state format has no room for comments; its sidecar carries the
// header instead
void stamp_sidecar(const Resolved& rc, const std::string& path) {
  std::ifstream is(path + ".json");
  BBP_CHECK(is.good(), "missing sidecar for ", path);
  json side = json::parse(is);
  is.close();
  side["header"] = json_header(rc);
  std::ofstream os(path + ".json");
  os << side.dump(2) << "\n";
}

// bp rows first within a sweep, then that sweep's measurement
void write_trace_csv(const Resolved& rc, const EvolutionResult& res) {
  std::ofstream os = open_artifact(rc, "energy_trace.csv");
  csv_header(os, rc);
  os << "sweep,offset,energy_per_site,eps_ratio\n";
  size_t ti = 0, bi = 0;
  while (ti < res.trace.size() || bi < res.bp_trace.size()) {
    bool bp = bi < res.bp_trace.size() &&
              (ti >= res.trace.size() ||
               res.bp_trace[bi].sweep <= res.trace[ti].sweep);
    if (bp) {
      const BpRecord& b = res.bp_trace[bi++];
      os << b.sweep << ',' << b.offset << ",," << fmt(b.ratio) << "\n";
    } else {
      const SweepRecord& s = res.trace[ti++];
      os << s.sweep << ",," << fmt(s.per_site) << ",\n";
    }
  }
}

// --- ground-state ------------------------------------------------------------

json ground_state_defaults() {
  return json{{"seed", 1},
              {"model", "heisenberg"},
              {"field", 0.0},
              {"rows", 4},
              {"cols", 4},
              {"boundary", "obc"},
              {"infinite", false},
              {"cell", "2x2"},
              {"d", 2},
              {"chi", 0},
              {"chi_m", 0},
              {"block", "2x2"},
              {"dtau", 0.01},
              {"steps", 10},
              {"measure_every", 1},
              {"bp_tol", 1e-5},
              {"bp_rounds", 10},
              {"init", "auto"}};
}

int cmd_ground_state(const CLI::App* sub, const Flags& f) {
  Resolved rc = resolve(sub, f, ground_state_defaults());
  ThreadPool pool(rc.workers);
  EvolutionConfig ec = evolution_config(rc, &pool);
  bool infinite = rc.cfg.at("infinite").get<bool>();

  PepsNetwork init = initial_state(rc.cfg);
  EvolutionResult res = infinite ? run_ground_state_infinite(init, ec)
                                 : run_ground_state(init, ec);

  fs::create_directories(rc.out);
  std::string state_path = (fs::path(rc.out) / "peps.bbpt").string();
  save_peps(res.peps, state_path);
  stamp_sidecar(rc, state_path);
  write_trace_csv(rc, res);

  double per_site = res.trace.empty() ? 0.0 : res.trace.back().per_site;
  json summary{{"header", json_header(rc)},
               {"config", rc.cfg},
               {"mode", infinite ? "infinite" : "finite"},
               {"energy", res.energy},
               {"energy_per_site", per_site},
               {"final_bond_dim", res.peps.max_bond()},
               {"bp_runs", res.bp_trace.size()},
               {"unconverged_bp", res.unconverged_bp},
               {"artifacts", json::array({"peps.bbpt", "peps.bbpt.json",
                                          "energy_trace.csv"})}};
  write_json(rc, "summary.json", summary);
  std::cerr << "ground-state: E/site = " << fmt(per_site) << " after "
            << rc.cfg.at("steps").get<int>() << " sweeps -> " << rc.out
            << "\n";
  return 0;
}

// --- classical ----------------------------------------------------------------

// polarized starts need the extra decades so the symmetric phase sheds the
// tilt completely
json classical_defaults() {
  return json{{"seed", 1},
              {"betas", json::array({0.2, 0.44, 0.6})},
              {"rows", 10},
              {"cols", 10},
              {"block", "5x5"},
              {"chi_m", 0},
              {"bp_tol", 1e-8},
              {"bp_rounds", 60},
              {"stagger", 1e-6}};
}

int cmd_classical(const CLI::App* sub, const Flags& f) {
  Resolved rc = resolve(sub, f, classical_defaults());
  ThreadPool pool(rc.workers);
  Lattice lat{rc.cfg.at("rows").get<int>(), rc.cfg.at("cols").get<int>(),
              Boundary::kPeriodic};
  auto [bh, bw] = parse_hw(rc.cfg.at("block").get<std::string>(), "block");
  long cm = rc.cfg.at("chi_m").get<long>();
  double stagger = rc.cfg.at("stagger").get<double>();

  std::ofstream os = open_artifact(rc, "classical.csv");
  csv_header(os, rc);
  os << "beta,m,onsager,deviation\n";
  std::vector<double> betas = rc.cfg.at("betas").get<std::vector<double>>();
  for (size_t i = 0; i < betas.size(); ++i) {
    EngineConfig ec;
    ec.msg_trunc = {cm > 0 ? cm : 32, 1e-12};
    ec.tol = rc.cfg.at("bp_tol").get<double>();
    ec.max_rounds = rc.cfg.at("bp_rounds").get<int>();
    ec.seed = derive_seed(rc.seed(), "beta", {(long)i});
    ec.pool = &pool;
    ClassicalResult res =
        classical_magnetization(lat, betas[i], bh, bw, ec, stagger);
    double ref = onsager_magnetization(betas[i]);
    os << fmt(betas[i]) << ',' << fmt(res.m) << ',' << fmt(ref) << ','
       << fmt(std::abs(res.m - ref)) << "\n";
    std::cerr << "classical: beta = " << fmt(betas[i]) << "  m = "
              << fmt(res.m) << "  onsager = " << fmt(ref)
              << (res.stats.converged ? "" : "  (messages not converged)")
              << "\n";
  }
  return 0;
}

// --- rdm-compare ---------------------------------------------------------------

json rdm_compare_defaults() {
  return json{{"seed", 1},     {"in", ""},          {"block", "2x2"},
              {"chi", 0},      {"chi_m", 0},        {"bp_tol", 1e-5},
              {"bp_rounds", 10}, {"method", "auto"}};
}

int cmd_rdm_compare(const CLI::App* sub, const Flags& f) {
  Resolved rc = resolve(sub, f, rdm_compare_defaults());
  ThreadPool pool(rc.workers);
  std::string in = rc.cfg.at("in").get<std::string>();
  BBP_CHECK(!in.empty(), "rdm-compare needs --in <state.bbpt>");
  PepsNetwork peps = load_peps(in);
  BBP_CHECK(!peps.lat.periodic(), "rdm-compare expects an open-boundary peps");
  const int rows = peps.lat.rows, cols = peps.lat.cols;
  auto [bh, bw] = parse_hw(rc.cfg.at("block").get<std::string>(), "block");
  long d = peps.max_bond();
  long cm = rc.cfg.at("chi_m").get<long>(), ce = rc.cfg.at("chi").get<long>();
  TruncationSpec msg_trunc{cm > 0 ? cm : d * d, 1e-12};
  TruncationSpec env_trunc{ce > 0 ? ce : 2 * d * d + 10, 1e-12};

  std::string method = rc.cfg.at("method").get<std::string>();
  if (method == "auto")
    method = double(cols) * std::log2(double(d * d)) <= 18.0 ? "exact" : "bmps";
  BBP_CHECK(method == "exact" || method == "bmps",
            "method must be exact, bmps, or auto");

  FlatNetwork dl = embed_obc_in_pbc(build_double_layer(peps));
  // two column offsets make every horizontal bond interior somewhere
  BBP_CHECK(bw >= 2, "rdm-compare needs block width >= 2");
  std::vector<int> offs{0, bw / 2};
  std::vector<BlockPartition> parts;
  std::vector<MessageSet> msgs;
  EngineConfig ec;
  ec.msg_trunc = msg_trunc;
  ec.tol = rc.cfg.at("bp_tol").get<double>();
  ec.max_rounds = rc.cfg.at("bp_rounds").get<int>();
  ec.pool = &pool;
  for (size_t oi = 0; oi < offs.size(); ++oi) {
    parts.push_back(partition_blocks(dl.lat, bh, bw, 0, offs[oi]));
    msgs.push_back(random_messages(
        dl, parts[oi], derive_seed(rc.seed(), "rdm_msgs", {(long)oi})));
    ec.seed = derive_seed(rc.seed(), "rdm_bp", {(long)oi});
    ConvergenceStats st = run_to_fixed_point(dl, parts[oi], msgs[oi], ec);
    if (!st.converged)
      std::cerr << "rdm-compare: offset " << offs[oi]
                << " messages not converged (ratio "
                << fmt(st.distances.empty() ? 0.0 : st.distances.back())
                << ")\n";
  }

  std::ofstream os = open_artifact(rc, "rdm_compare.csv");
  csv_header(os, rc);
  os << "# trace distance of the bond (r,c)-(r,c+1) density matrix, " << method
     << " reference\n";
  os << "r";
  for (int c = 0; c + 1 < cols; ++c) os << ",c" << c;
  os << "\n";
  double total = 0;
  for (int r = 0; r < rows; ++r) {
    os << r;
    for (int c = 0; c + 1 < cols; ++c) {
      size_t oi = (c + 1 - offs[0]) % bw != 0 ? 0 : 1;
      BBP_CHECK((c + 1 - offs[oi]) % bw != 0, "bond not interior to offset");
      DenseTensor rho =
          bond_rdm(peps, dl, parts[oi], msgs[oi], {r, c, false}, env_trunc,
                   derive_seed(rc.seed(), "rdm_env", {r, c}));
      DenseTensor ref;
      if (method == "exact") {
        ref = exact_rdm(peps, {r, c}, {r, c + 1});
      } else {
        DenseTensor env = horizontal_bond_env(
            dl, r, c, env_trunc, derive_seed(rc.seed(), "rdm_ref", {r, c}));
        ref = rdm_from_environment(env, peps.site(r, c), peps.site(r, c + 1));
      }
      double dist = trace_distance(rho, ref);
      total += dist;
      os << ',' << fmt(dist);
    }
    os << "\n";
  }
  double mean = total / (rows * (cols - 1));
  std::cerr << "rdm-compare: mean distance " << fmt(mean) << " over "
            << rows * (cols - 1) << " bonds (" << method << " reference) -> "
            << rc.out << "\n";
  return 0;
}

// --- bench-parallel -------------------------------------------------------------

json bench_defaults() {
  return json{{"seed", 1},
              {"model", "heisenberg"},
              {"field", 0.0},
              {"rows", 10},
              {"cols", 10},
              {"boundary", "obc"},
              {"infinite", false},
              {"cell", "2x2"},
              {"d", 2},
              {"chi", 0},
              {"chi_m", 0},
              {"block", "5x5"},
              {"dtau", 0.01},
              {"steps", 2},
              {"measure_every", 1},
              {"bp_tol", 1e-5},
              {"bp_rounds", 10},
              {"init", "auto"},
              {"workers_list", json::array({1, 2, 4})}};
}

int cmd_bench(const CLI::App* sub, const Flags& f) {
  Resolved rc = resolve(sub, f, bench_defaults());
  std::vector<int> counts =
      rc.cfg.at("workers_list").get<std::vector<int>>();
  BBP_CHECK(!counts.empty(), "workers_list is empty");
  int steps = rc.cfg.at("steps").get<int>();
  BBP_CHECK(steps > 0, "bench needs steps > 0");

  std::vector<double> secs;
  std::vector<std::vector<double>> energies;
  for (int w : counts) {
    ThreadPool pool(w);
    Resolved r = rc;
    r.workers = w;
    EvolutionConfig ec = evolution_config(r, &pool);
    PepsNetwork init = initial_state(rc.cfg);
    auto t0 = std::chrono::steady_clock::now();
    EvolutionResult res = run_ground_state(init, ec);
    auto t1 = std::chrono::steady_clock::now();
    secs.push_back(std::chrono::duration<double>(t1 - t0).count() / steps);
    std::vector<double> e;
    for (const SweepRecord& s : res.trace) e.push_back(s.energy);
    e.push_back(res.energy);
    energies.push_back(std::move(e));
    std::cerr << "bench: " << w << " worker(s), " << fmt(secs.back())
              << " s/sweep\n";
  }

  bool identical = true;
  for (size_t i = 1; i < energies.size(); ++i)
    identical = identical && energies[i] == energies[0];

  std::ofstream os = open_artifact(rc, "bench.csv");
  csv_header(os, rc);
  os << "# timing columns vary run to run; every other artifact is "
        "byte-identical across worker counts\n";
  os << "workers,seconds_per_sweep,speedup\n";
  for (size_t i = 0; i < counts.size(); ++i)
    os << counts[i] << ',' << fmt(secs[i]) << ',' << fmt(secs[0] / secs[i])
       << "\n";
  if (!identical) {
    std::cerr << "bench: FAILED, energies differ across worker counts\n";
    return 1;
  }
  std::cerr << "bench: energies bit-identical across worker counts -> "
            << rc.out << "\n";
  return 0;
}

// --- contract -------------------------------------------------------------------

json contract_defaults() {
  return json{
      {"seed", 1}, {"in", ""}, {"method", "auto"}, {"chi", 0}};
}

int cmd_contract(const CLI::App* sub, const Flags& f) {
  Resolved rc = resolve(sub, f, contract_defaults());
  std::string in = rc.cfg.at("in").get<std::string>();
  BBP_CHECK(!in.empty(), "contract needs --in <state.bbpt>");

  std::string kind = "peps";
  {
    std::ifstream side(in + ".json");
    if (side.good()) kind = json::parse(side).at("kind").get<std::string>();
  }
  FlatNetwork net;
  long d = 1;
  if (kind == "peps") {
    PepsNetwork peps = load_peps(in);
    d = peps.max_bond();
    net = build_double_layer(peps);  // value is <psi|psi>
  } else {
    net = load_flat(in);
    for (const auto& t : net.sites)
      for (int l = 0; l < 4; ++l) d = std::max(d, t.dim(l));
  }

  std::string method = rc.cfg.at("method").get<std::string>();
  if (method == "auto") method = net.lat.periodic() ? "exact" : "bmps";
  ScaledScalar v;
  if (method == "exact") {
    v = exact_contract(net);
  } else if (method == "bmps") {
    BBP_CHECK(!net.lat.periodic(), "bmps contraction needs open boundaries");
    long ce = rc.cfg.at("chi").get<long>();
    TruncationSpec spec{ce > 0 ? ce : 2 * d * d + 10, 1e-12};
    v = bmps_value(embed_obc_in_pbc(net), spec,
                   derive_seed(rc.seed(), "contract", {}));
  } else {
    fail("method must be exact, bmps, or auto");
  }

  json out{{"header", json_header(rc)},
           {"in", in},
           {"kind", kind},
           {"method", method},
           {"rows", net.lat.rows},
           {"cols", net.lat.cols},
           {"boundary", net.lat.periodic() ? "pbc" : "obc"},
           {"log_value", v.log_mag},
           {"phase_re", v.phase.real()},
           {"phase_im", v.phase.imag()}};
  if (v.log_mag < 700.0) {  // exp stays finite
    out["value_re"] = v.value().real();
    out["value_im"] = v.value().imag();
  }
  write_json(rc, "contract.json", out);
  std::cerr << "contract: log|value| = " << fmt(v.log_mag) << " (" << method
            << ") -> " << rc.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"block belief propagation for 2d tensor networks"};
  app.require_subcommand(1);
  Flags f;
  int rc = 0;

  auto common = [&](CLI::App* s) {
    s->add_option("--config", f.config,
                  "json file with run settings; flags override");
    s->add_option("--out", f.out, "output directory (default out/)");
    s->add_option("--seed", f.seed, "base seed for every rng stream");
    s->add_flag("--verbose", f.verbose, "stream jsonl progress to stderr");
  };
  auto workers_opt = [&](CLI::App* s) {
    s->add_option("--workers", f.workers,
                  "thread count (never changes results)");
  };
  auto lattice_opts = [&](CLI::App* s) {
    s->add_option("--rows", f.rows, "lattice rows");
    s->add_option("--cols", f.cols, "lattice columns");
    s->add_option("--boundary", f.boundary, "obc or pbc");
  };
  auto model_opts = [&](CLI::App* s) {
    s->add_option("--model", f.model, "heisenberg or ising");
    s->add_option("--field", f.field, "transverse field (ising)");
  };
  auto evolution_opts = [&](CLI::App* s) {
    s->add_option("--d", f.d, "peps bond dimension cap");
    s->add_option("--chi", f.chi, "environment bond cap (0: 2 d^2 + 10)");
    s->add_option("--chi-m", f.chi_m, "message bond cap (0: d^2)");
    s->add_option("--block", f.block, "block size HxW");
    s->add_option("--dtau", f.dtau, "imaginary time step");
    s->add_option("--steps", f.steps, "number of sweeps");
    s->add_option("--measure-every", f.measure_every,
                  "sweeps between energy measurements (0: final only)");
    s->add_option("--bp-tol", f.bp_tol, "message convergence threshold");
    s->add_option("--bp-rounds", f.bp_rounds, "message round cap");
    s->add_option("--init", f.init,
                  "auto, neel, random-product, random, or a stored state");
  };

  CLI::App* gs = app.add_subcommand(
      "ground-state", "imaginary-time ground-state search");
  common(gs);
  workers_opt(gs);
  lattice_opts(gs);
  model_opts(gs);
  evolution_opts(gs);
  gs->add_flag("--infinite", f.infinite,
               "evolve a periodic unit cell instead of a finite lattice");
  gs->add_option("--cell", f.cell, "unit cell size HxW (infinite mode)");
  gs->callback([&] { rc = cmd_ground_state(gs, f); });

  CLI::App* cl = app.add_subcommand(
      "classical", "staggered magnetization of the classical antiferromagnet");
  common(cl);
  workers_opt(cl);
  cl->add_option("--rows", f.rows, "lattice rows");
  cl->add_option("--cols", f.cols, "lattice columns");
  cl->add_option("--block", f.block, "block size HxW");
  cl->add_option("--chi-m", f.chi_m, "message bond cap (0: 32)");
  cl->add_option("--bp-tol", f.bp_tol, "message convergence threshold");
  cl->add_option("--bp-rounds", f.bp_rounds, "message round cap");
  cl->add_option("--beta", f.betas, "inverse temperatures");
  cl->add_option("--stagger", f.stagger, "symmetry-breaking staggered field");
  cl->callback([&] { rc = cmd_classical(cl, f); });

  CLI::App* rd = app.add_subcommand(
      "rdm-compare", "bond density matrices against a reference route");
  common(rd);
  workers_opt(rd);
  rd->add_option("--in", f.in, "stored peps to analyze")->required();
  rd->add_option("--block", f.block, "block size HxW");
  rd->add_option("--chi", f.chi, "environment bond cap (0: 2 d^2 + 10)");
  rd->add_option("--chi-m", f.chi_m, "message bond cap (0: d^2)");
  rd->add_option("--bp-tol", f.bp_tol, "message convergence threshold");
  rd->add_option("--bp-rounds", f.bp_rounds, "message round cap");
  rd->add_option("--method", f.method, "exact, bmps, or auto");
  rd->callback([&] { rc = cmd_rdm_compare(rd, f); });

  CLI::App* be = app.add_subcommand(
      "bench-parallel", "worker scaling of the same run, identical numerics");
  common(be);
  lattice_opts(be);
  model_opts(be);
  evolution_opts(be);
  be->add_option("--workers-list", f.workers_list,
                 "worker counts to time, first is the baseline");
  be->callback([&] { rc = cmd_bench(be, f); });

  CLI::App* co = app.add_subcommand(
      "contract", "norm or partition function of a stored network");
  common(co);
  co->add_option("--in", f.in, "stored peps or flat network")->required();
  co->add_option("--method", f.method, "exact, bmps, or auto");
  co->add_option("--chi", f.chi, "boundary bond cap");
  co->callback([&] { rc = cmd_contract(co, f); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
