#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "csma_aoi/errors.hpp"
#include "csma_aoi/solvers.hpp"
#include "csma_aoi/sweep.hpp"

using namespace csma_aoi;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const ModelError& e) {
    return e.kind();
  }
  FAIL("expected a ModelError");
  return ErrorKind::io;
}

SweepSpec spec_of(const std::string& text) { return spec_from_map(parse_spec_text(text)); }

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "csma_aoi_sweep_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("parse_grid") {
  const auto list = parse_grid("0.001, 0.002,0.004");
  CHECK(list.kind == GridExpr::Kind::list);
  CHECK(list.resolve(0.0) == std::vector<double>{0.001, 0.002, 0.004});

  const auto lin = parse_grid("linspace(0.001, pmax, 5)");
  CHECK(lin.uses_capacity());
  const auto v = lin.resolve(0.011);
  REQUIRE(v.size() == 5);
  CHECK(v.front() == 0.001);
  CHECK(v.back() == 0.011);
  CHECK(v[2] == doctest::Approx(0.006));

  const auto lg = parse_grid("logspace(1e-4, 1e-2, 3)").resolve(0.0);
  REQUIRE(lg.size() == 3);
  CHECK(lg[1] == doctest::Approx(1e-3));
  CHECK(lg.back() == 1e-2);

  CHECK(parse_grid("range(2, nmax, 4)").resolve(14.0) == std::vector<double>{2, 6, 10, 14});
  CHECK(parse_grid("range(2, 10, 4)").resolve(0.0) == std::vector<double>{2, 6, 10});
  CHECK_FALSE(parse_grid("range(2, 10, 4)").uses_capacity());

  for (const char* bad : {"", "linspace(1, 2)", "spline(1, 2, 3)", "linspace(1, 2, 0)",
                          "range(1, 2, 0)", "0.1, x", "linspace(1, 2, 3"}) {
    CHECK_MESSAGE(kind_of([&] { parse_grid(bad); }) == ErrorKind::invalid_spec, bad);
  }
}

TEST_CASE("parse_spec_text: comments, whitespace and errors") {
  const auto kv = parse_spec_text(
      "# p sweep\n"
      "var = p   # swept\n"
      "\n"
      "  grid=0.001,0.002\n"
      "n = 20\n");
  CHECK(kv.size() == 3);
  CHECK(kv.at("grid") == "0.001,0.002");
  CHECK(kv.at("n") == "20");

  auto message = [](const std::string& text) {
    try {
      parse_spec_text(text);
    } catch (const ModelError& e) {
      CHECK(e.kind() == ErrorKind::invalid_spec);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("var = p\nbogus = 1\n").find("line 2") != std::string::npos);
  CHECK(message("var = p\nvar = n\n").find("duplicate") != std::string::npos);
  CHECK(message("grid\n").find("line 1") != std::string::npos);
  CHECK(message("grid = \n").find("empty") != std::string::npos);
  CHECK(kind_of([] { read_spec_file("/nonexistent/spec.txt"); }) == ErrorKind::io);
}

TEST_CASE("spec_from_map: defaults, modes and validation") {
  const auto s = spec_of("grid = 0.001,0.002\nn = 10, 20\n");
  CHECK(s.variable == SweepVariable::packet_rate);
  CHECK(s.curves == std::vector<double>{10, 20});
  CHECK(s.analytic);
  CHECK_FALSE(s.simulate);
  CHECK(s.min_window == 8);
  CHECK(s.format == "csv");

  const auto t = spec_of(
      "var = n\ngrid = range(2, 10, 2)\np = 0.01\nmodes = simulate\nhorizon = 5000\n"
      "warmup = 100\nseed = 9\nfreeze = collision\nformat = json\nthreads = 2\n");
  CHECK(t.variable == SweepVariable::n_nodes);
  CHECK(t.simulate);
  CHECK_FALSE(t.analytic);
  CHECK(t.horizon == 5000);
  CHECK(t.seed == 9);
  CHECK(t.freeze == FreezeRule::collision);
  CHECK(t.threads == 2);

  for (const char* bad : {
           "n = 20\n",                                  // no grid
           "grid = 0.1\n",                              // no curves
           "grid = 0.1\nn = 20\np = 0.1\n",             // swept key set
           "grid = 0.2, 0.1\nn = 20\n",                 // not increasing
           "grid = 0.1\nn = 20, 20\n",                  // duplicate curve
           "grid = 0.1\nn = 2.5\n",                     // fractional N
           "var = q\ngrid = 0.1\nn = 20\n",             // bad var
           "grid = 0.1\nn = 20\nmodes = fast\n",        // bad mode
           "grid = 0.1\nn = 20\nformat = xml\n",        // bad format
           "grid = 0.1\nn = 20\nmodes = simulate\nhorizon = 10\nwarmup = 10\n",
           "grid = 0.1\nn = 20\nseed = -1\n",
           "grid = 0.1\nn = 20\nw0 = 0\n",
       }) {
    CHECK_MESSAGE(kind_of([&] { spec_of(bad); }) == ErrorKind::invalid_spec, bad);
  }
}

TEST_CASE("sweep_points: curve-major order and the capacity endpoint") {
  const auto s = spec_of("grid = linspace(0.001, pmax, 4)\nn = 20, 10\n");
  const auto pts = sweep_points(s);
  REQUIRE(pts.size() == 8);
  CHECK(pts[0].n_nodes == 20);
  CHECK(pts[4].n_nodes == 10);
  CHECK(pts[3].packet_rate == doctest::Approx(max_packet_rate(20, 8) - 1e-4).epsilon(1e-12));
  CHECK(pts[7].packet_rate == doctest::Approx(max_packet_rate(10, 8) - 1e-4).epsilon(1e-12));

  const auto n = spec_of("var = n\ngrid = range(5, nmax, 5)\np = 0.01\n");
  const auto npts = sweep_points(n);
  CHECK(npts.back().n_nodes == 30);
  CHECK(npts.back().n_nodes <= max_node_count(0.01, 8));

  CHECK(kind_of([] { sweep_points(spec_of("grid = 0.5, 1.5\nn = 20\n")); }) ==
        ErrorKind::invalid_spec);
}

TEST_CASE("run_sweep: single point N = 1 gives mu = 2/9") {
  const auto rows = run_sweep(spec_of("grid = 0.05\nn = 1\n"));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].status == "ok");
  CHECK(std::abs(*rows[0].mu_a - 2.0 / 9.0) < 1e-12);
  CHECK(*rows[0].pcl_a == 0.0);
  CHECK_FALSE(rows[0].ptx_s.has_value());
  CHECK(rows[0].var == "p");
}

TEST_CASE("run_sweep: infeasible points are reported, not skipped") {
  const auto rows = run_sweep(spec_of("grid = 0.01, 0.03, 0.2\nn = 20\n"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].status == "ok");
  CHECK(rows[1].status == "over_capacity");
  CHECK(rows[2].status == "over_capacity");
  CHECK_FALSE(rows[1].ptx_a.has_value());
  CHECK_FALSE(rows[1].aoi_a.has_value());

  const std::string csv = to_csv(rows);
  std::istringstream in(csv);
  std::string line;
  for (int k = 0; k < 3; ++k) std::getline(in, line);
  CHECK(line == "p,0.03,20,8,,,,,,,,,,,2,over_capacity");
}

TEST_CASE("run_sweep: seeds, order and thread independence") {
  const auto s = spec_of(
      "grid = 0.002, 0.005, 0.01\nn = 5, 10\nmodes = analytic, simulate\nhorizon = 20000\n"
      "warmup = 1000\nseed = 40\n");
  const auto par = run_sweep(s, true);
  const auto ser = run_sweep(s, false);
  CHECK(par == ser);
  REQUIRE(par.size() == 6);
  for (std::size_t k = 0; k < par.size(); ++k) CHECK(par[k].seed == 40 + k);
  CHECK(par[0].n == 5);
  CHECK(par[0].p == 0.002);
  CHECK(par[5].n == 10);
  CHECK(par[5].p == 0.01);
  CHECK(par[2].aoi_s.has_value());
  CHECK(par[2].aoi_s_se.has_value());
  // The short horizon stays below the deviation check.
  for (const auto& r : par) CHECK(r.status == "ok");
}

TEST_CASE("emit: line count, header and round trips") {
  const auto rows = run_sweep(spec_of(
      "grid = 0.005, 0.01, 0.03\nn = 20\nmodes = analytic, simulate\nhorizon = 5000\n"
      "warmup = 0\n"));
  const auto csv_path = scratch("rows.csv");
  emit(rows, "csv", csv_path.string());
  const std::string text = slurp(csv_path);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  CHECK(text.substr(0, text.find('\n')) ==
        "var,p,N,w0,ptx_a,pcl_a,pidle_a,mu_a,aoi_a,ptx_s,pcl_s,mu_s,aoi_s,aoi_s_se,seed,status");

  const auto back = parse_csv(text);
  REQUIRE(back.size() == rows.size());
  CHECK(to_csv(back) == text);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(back[k].status == rows[k].status);
    CHECK(back[k].ptx_a.has_value() == rows[k].ptx_a.has_value());
    if (rows[k].aoi_a) CHECK(*back[k].aoi_a == doctest::Approx(*rows[k].aoi_a).epsilon(1e-11));
  }

  const auto json_path = scratch("rows.json");
  emit(rows, "json", json_path.string());
  const std::string jtext = slurp(json_path);
  const auto j = nlohmann::json::parse(jtext);
  REQUIRE(j.is_array());
  CHECK(j.size() == 3);
  CHECK(j[2]["status"] == "over_capacity");
  CHECK(j[2]["ptx_a"].is_null());
  const auto first = nlohmann::ordered_json::parse(jtext)[0];
  std::string joined;
  for (const auto& [k, v] : first.items()) joined += (joined.empty() ? "" : ",") + k;
  CHECK(joined == csv_header());

  const auto jback = parse_json(jtext);
  CHECK(to_json(jback) == jtext);
  CHECK(to_csv(jback) == text);
  CHECK(jback == back);

  CHECK(kind_of([&] { emit(rows, "csv", "/nonexistent/dir/rows.csv"); }) == ErrorKind::io);
  CHECK(kind_of([&] { emit({}, "csv", csv_path.string()); }) == ErrorKind::domain);
  CHECK(kind_of([] { parse_csv("a,b\n"); }) == ErrorKind::invalid_spec);
  CHECK(kind_of([] { parse_json("{\"a\": 1}"); }) == ErrorKind::invalid_spec);
}

TEST_CASE("format_number uses 12 significant digits") {
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(format_number(109.553238818123) == "109.553238818");
  CHECK(format_number(2.0) == "2");
  CHECK(format_number(1e-7) == "1e-07");
}

TEST_CASE("shape helpers") {
  CHECK(is_u_shaped({5, 3, 2, 2, 4, 9}));
  CHECK_FALSE(is_u_shaped({1, 2, 3}));
  CHECK_FALSE(is_u_shaped({3, 2, 1}));
  CHECK_FALSE(is_u_shaped({3, 1, 2, 1, 3}));
  CHECK(is_nondecreasing({1, 1, 2}));
  CHECK_FALSE(is_nondecreasing({1, 0.5}));
}

TEST_CASE("N = 20 p sweep: p_tx and p_cl nondecreasing up to capacity") {
  const auto rows = run_sweep(spec_of("grid = linspace(0.001, pmax, 40)\nn = 20\n"));
  for (const auto& r : rows) CHECK(r.status == "ok");
  const auto checks = shape_checks(rows);
  int seen = 0;
  for (const auto& c : checks) {
    if (c.name == "ptx_nondecreasing" || c.name == "pcl_nondecreasing") {
      ++seen;
      CHECK_MESSAGE(c.passed, c.name);
    }
  }
  CHECK(seen == 2);
}

TEST_CASE("AoI versus p is U-shaped for N = 10, 20, 30") {
  const auto rows = run_sweep(spec_of("grid = logspace(1e-4, pmax, 60)\nn = 10, 20, 30\n"));
  const auto checks = shape_checks(rows);
  int u = 0;
  for (const auto& c : checks) {
    CHECK_MESSAGE(c.passed, c.name << " " << c.curve << " " << c.detail);
    if (c.name == "aoi_u_shape") ++u;
  }
  CHECK(u == 3);
}

TEST_CASE("N sweep: AoI, p_tx and p_cl nondecreasing in N") {
  const auto rows = run_sweep(spec_of("var = n\ngrid = range(2, nmax, 1)\np = 0.005, 0.01\n"));
  for (const auto& c : shape_checks(rows)) CHECK_MESSAGE(c.passed, c.name << " " << c.curve);
}
