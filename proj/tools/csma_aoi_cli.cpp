// csma-aoi: command-line front end.
//
// Exit codes: 0 ok, 2 invalid input, 3 infeasible model, 4 I/O.

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "csma_aoi/errors.hpp"
#include "csma_aoi/simulator.hpp"
#include "csma_aoi/solvers.hpp"
#include "csma_aoi/sweep.hpp"

using namespace csma_aoi;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitIo = 4;
constexpr const char* kSeedEnv = "CSMA_AOI_SEED";

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain:
    case ErrorKind::invalid_spec:
      return kExitInvalid;
    case ErrorKind::io:
      return kExitIo;
    default:
      return kExitInfeasible;
  }
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv(kSeedEnv);
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const unsigned long long x = std::strtoull(v, &end, 10);
  if (errno != 0 || *end != '\0' || v[0] == '-') {
    fail(ErrorKind::invalid_spec, std::string(kSeedEnv) + " is not a non-negative integer");
  }
  return static_cast<std::uint64_t>(x);
}

FreezeRule parse_freeze(const std::string& s) {
  if (s == "busy_channel") return FreezeRule::busy_channel;
  if (s == "collision") return FreezeRule::collision;
  fail(ErrorKind::invalid_spec, "freeze must be busy_channel or collision");
}

// Text output: one "name value" pair per line.
class Report {
 public:
  void add(const std::string& k, double v) { items_.emplace_back(k, nlohmann::ordered_json(v)); }
  void add_int(const std::string& k, std::int64_t v) { items_.emplace_back(k, nlohmann::ordered_json(v)); }
  void add_bool(const std::string& k, bool v) { items_.emplace_back(k, nlohmann::ordered_json(v)); }

  std::string render(const std::string& format) const {
    if (format == "json") {
      nlohmann::ordered_json o;
      for (const auto& [k, v] : items_) {
        if (v.is_number_float()) {
          const double x = v.get<double>();
          o[k] = std::isfinite(x) ? nlohmann::ordered_json(std::strtod(format_number(x).c_str(), nullptr))
                                  : nlohmann::ordered_json(nullptr);
        } else {
          o[k] = v;
        }
      }
      return o.dump(2) + "\n";
    }
    std::string out;
    for (const auto& [k, v] : items_) {
      out += k + " ";
      if (v.is_number_float()) {
        out += format_number(v.get<double>());
      } else {
        out += v.dump();
      }
      out += "\n";
    }
    return out;
  }

 private:
  std::vector<std::pair<std::string, nlohmann::ordered_json>> items_;
};

void write_text(const std::string& path, const std::string& body) {
  if (path.empty() || path == "-") {
    std::cout << body;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
  out << body;
  out.flush();
  if (!out) fail(ErrorKind::io, "write to '" + path + "' failed");
}

std::unique_ptr<std::ofstream> open_out(const std::string& path) {
  auto f = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
  if (!*f) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
  return f;
}

void close_out(std::ofstream& f, const std::string& path) {
  f.flush();
  if (!f) fail(ErrorKind::io, "write to '" + path + "' failed");
}

std::string flag_for(const std::string& key) {
  std::string f = key;
  for (char& c : f) {
    if (c == '_') c = '-';
  }
  return "--" + f;
}

const std::map<std::string, std::string>& sweep_key_help() {
  static const std::map<std::string, std::string> help = {
      {"var", "Swept variable: p or n"},
      {"grid", "Grid: comma list, linspace(a,b,k), logspace(a,b,k) or range(a,b,step); "
               "pmax/nmax stand for the per-curve capacity"},
      {"n", "Node count per curve (p sweeps), comma separated"},
      {"p", "Packet rate per curve (n sweeps), comma separated"},
      {"w0", "Minimum contention window (default 8)"},
      {"modes", "analytic, simulate or analytic,simulate (default analytic)"},
      {"horizon", "Simulated slots per grid point (default 1000000)"},
      {"warmup", "Slots excluded from averages (default 10000)"},
      {"seed", "Base seed; row k uses seed + k (default 1, or $CSMA_AOI_SEED)"},
      {"stage_cap", "Backoff stage where window doubling stops (default 24)"},
      {"batches", "Batches for standard errors (default 20)"},
      {"freeze", "Counter freeze rule: busy_channel or collision (default busy_channel)"},
      {"out", "Output path (default stdout)"},
      {"format", "Output format: csv or json (default csv)"},
      {"threads", "OpenMP threads over grid points, 0 = runtime default"},
  };
  return help;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-form and simulated performance of unsaturated CSMA/CA networks"};
  app.name("csma-aoi");
  app.require_subcommand(1);
  app.footer("Exit codes: 0 ok, 2 invalid input, 3 infeasible model, 4 I/O.\n"
             "Environment: " + std::string(kSeedEnv) +
             " sets the default seed of simulate and sweep.");

  // solve
  auto* solve = app.add_subcommand("solve", "Solve the fixed point and print p_tx, p_cl, p_idle, mu, beta, AoI");
  int s_n = 0;
  double s_p = 0.0;
  int s_w0 = 8;
  std::string s_format = "text";
  solve->add_option("--n", s_n, "Number of nodes N >= 1")->required();
  solve->add_option("--p", s_p, "Packet rate per node per slot, 0 < p < 1")->required();
  solve->add_option("--w0", s_w0, "Minimum contention window")->capture_default_str();
  solve->add_option("--format", s_format, "text or json")->check(CLI::IsMember({"text", "json"}))->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run the slot-level protocol simulator");
  SimulationConfig cfg;
  std::optional<std::uint64_t> m_seed;
  std::string m_trace, m_aoi_out = "aoi_path.csv", m_out, m_format = "text", m_freeze = "busy_channel";
  std::optional<int> m_aoi_node;
  sim->add_option("--n", cfg.params.n_nodes, "Number of nodes N >= 1")->required();
  sim->add_option("--p", cfg.params.packet_rate, "Packet rate per node per slot")->required();
  sim->add_option("--w0", cfg.params.min_window, "Minimum contention window")->capture_default_str();
  sim->add_option("--horizon", cfg.horizon, "Slots to simulate")->capture_default_str();
  sim->add_option("--warmup", cfg.warmup, "Slots excluded from averages")->capture_default_str();
  sim->add_option("--seed", m_seed, "RNG seed (default 1, or $CSMA_AOI_SEED)");
  sim->add_option("--stage-cap", cfg.stage_cap, "Backoff stage where window doubling stops")->capture_default_str();
  sim->add_option("--batches", cfg.batches, "Batches for standard errors")->capture_default_str();
  sim->add_option("--freeze", m_freeze, "Counter freeze rule: busy_channel or collision")
      ->check(CLI::IsMember({"busy_channel", "collision"}))->capture_default_str();
  sim->add_option("--trace", m_trace, "Write a per-slot trace slot,event,queue_total to this path");
  sim->add_option("--aoi-path", m_aoi_node, "Dump the age sample path of this node (slot,age CSV)");
  sim->add_option("--aoi-out", m_aoi_out, "Path of the age sample path dump")->capture_default_str();
  sim->add_option("--out", m_out, "Write statistics here instead of stdout");
  sim->add_option("--format", m_format, "text or json")->check(CLI::IsMember({"text", "json"}))->capture_default_str();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep and write CSV or JSON rows");
  std::string w_spec;
  std::map<std::string, std::string> w_flags;
  bool w_serial = false;
  sweep->add_option("--spec", w_spec, "Spec file of key = value lines; flags override it");
  for (const auto& key : sweep_keys()) {
    sweep->add_option(flag_for(key), w_flags[key], sweep_key_help().at(key));
  }
  sweep->add_flag("--serial", w_serial, "Evaluate grid points on one thread");

  // capacity
  auto* cap = app.add_subcommand("capacity", "Print p_max for a given N or N_max for a given p");
  std::optional<int> c_n;
  std::optional<double> c_p;
  int c_w0 = 8;
  auto* c_n_opt = cap->add_option("--n", c_n, "Node count: print the largest unsaturated packet rate");
  auto* c_p_opt = cap->add_option("--p", c_p, "Packet rate: print the largest unsaturated node count");
  c_n_opt->excludes(c_p_opt);
  cap->add_option("--w0", c_w0, "Minimum contention window")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*solve) {
      NetworkParams params{s_n, s_p, s_w0};
      const ProtocolSolution s = solve_fixed_point(params);
      Report r;
      r.add("p_tx", s.p_tx);
      r.add("p_cl", s.p_cl);
      r.add("p_idle", s.p_idle);
      r.add("mu", s.mu);
      r.add("beta", s.beta);
      r.add("avg_aoi", s.avg_aoi);
      r.add_bool("stable", s.stable);
      std::cout << r.render(s_format);
      return kExitOk;
    }

    if (*sim) {
      cfg.seed = m_seed ? *m_seed : env_seed().value_or(1);
      cfg.freeze = parse_freeze(m_freeze);
      cfg.validate();
      TraceSinks sinks;
      std::unique_ptr<std::ofstream> trace, aoi;
      if (!m_trace.empty()) {
        trace = open_out(m_trace);
        sinks.slot_trace = trace.get();
      }
      if (m_aoi_node) {
        if (*m_aoi_node < 0 || *m_aoi_node >= cfg.params.n_nodes) {
          fail(ErrorKind::domain, "--aoi-path node must lie in [0, N)");
        }
        aoi = open_out(m_aoi_out);
        sinks.aoi_path = aoi.get();
        sinks.aoi_node = *m_aoi_node;
      }
      const SimulationStats st = simulate(cfg, sinks);
      if (trace) close_out(*trace, m_trace);
      if (aoi) close_out(*aoi, m_aoi_out);
      Report r;
      r.add_int("seed", static_cast<std::int64_t>(cfg.seed));
      r.add("p_tx", st.empirical_p_tx);
      r.add("p_tx_se", st.se_p_tx);
      r.add("p_cl", st.empirical_p_cl);
      r.add("p_cl_se", st.se_p_cl);
      r.add("p_idle", st.empirical_p_idle);
      r.add("mu", st.empirical_mu);
      r.add("mu_se", st.se_mu);
      r.add("avg_aoi", st.mean_aoi);
      r.add("avg_aoi_se", st.se_aoi);
      r.add("mean_system_time", st.mean_system_time);
      r.add("mean_service_time", st.mean_service_time);
      r.add("var_service_time", st.var_service_time);
      r.add("delivery_rate", st.delivery_rate);
      r.add_int("delivered", st.delivered);
      r.add_int("arrivals", st.arrivals);
      r.add_int("deliveries", st.deliveries);
      r.add_int("final_queue_total", st.final_queue_total);
      r.add_int("success_slots", st.success_slots);
      r.add_int("collision_slots", st.collision_slots);
      r.add_int("idle_slots", st.idle_slots);
      r.add_bool("stable", st.stable);
      write_text(m_out, r.render(m_format));
      return kExitOk;
    }

    if (*sweep) {
      std::map<std::string, std::string> kv;
      if (!w_spec.empty()) kv = read_spec_file(w_spec);
      for (const auto& [key, value] : w_flags) {
        if (sweep->count(flag_for(key)) > 0) kv[key] = value;
      }
      if (!kv.count("seed")) {
        if (auto s = env_seed()) kv["seed"] = std::to_string(*s);
      }
      const SweepSpec spec = spec_from_map(kv);
      const std::vector<SweepRow> rows = run_sweep(spec, !w_serial);
      if (spec.out.empty() || spec.out == "-") {
        std::cout << (spec.format == "csv" ? to_csv(rows) : to_json(rows));
      } else {
        emit(rows, spec.format, spec.out);
      }
      for (const auto& c : shape_checks(rows)) {
        std::cerr << (c.passed ? "check ok   " : "check FAIL ") << c.name << " "
                  << c.curve << " (" << c.detail << ")\n";
      }
      return kExitOk;
    }

    if (*cap) {
      if (c_n) {
        std::cout << "p_max " << format_number(max_packet_rate(*c_n, c_w0)) << "\n";
      } else if (c_p) {
        std::cout << "n_max " << max_node_count(*c_p, c_w0) << "\n";
      } else {
        std::cerr << "capacity: give --n or --p\n";
        return kExitInvalid;
      }
      return kExitOk;
    }
  } catch (const ModelError& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  }
  return kExitOk;
}
