#pragma once

// Parameter sweeps over p (fixed N per curve) or N (fixed p per curve), with
// analytic and/or simulated columns per grid point.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "csma_aoi/simulator.hpp"

namespace csma_aoi {

enum class SweepVariable { packet_rate, n_nodes };

// Endpoint of a generated grid: a number or the per-curve capacity
// (max_packet_rate(N) - 1e-4 for p sweeps, max_node_count(p) for N sweeps).
struct GridEndpoint {
  double value = 0.0;
  bool capacity = false;
  bool operator==(const GridEndpoint&) const = default;
};

struct GridExpr {
  enum class Kind { list, linspace, logspace, range };
  Kind kind = Kind::list;
  std::vector<double> values;  // list
  GridEndpoint lo, hi;         // generated kinds
  int count = 0;               // linspace, logspace
  double step = 0.0;           // range
  std::string text;

  // Values for one curve; `capacity` replaces the capacity endpoint.
  std::vector<double> resolve(double capacity) const;
  bool uses_capacity() const { return kind != Kind::list && (lo.capacity || hi.capacity); }
};

// "0.001, 0.002", "linspace(0.001, pmax, 20)", "logspace(1e-4, 0.01, 10)",
// "range(2, nmax, 1)". Throws invalid_spec.
GridExpr parse_grid(const std::string& text);

inline constexpr double kCapacityMargin = 1e-4;

struct SweepSpec {
  SweepVariable variable = SweepVariable::packet_rate;
  GridExpr grid;
  std::vector<double> curves;  // N per curve for p sweeps, p per curve for N sweeps
  int min_window = 8;
  bool analytic = true;
  bool simulate = false;
  std::int64_t horizon = 1'000'000;
  std::int64_t warmup = 10'000;
  std::uint64_t seed = 1;
  int stage_cap = 24;
  int batches = 20;
  FreezeRule freeze = FreezeRule::busy_channel;
  std::string out;
  std::string format = "csv";
  int threads = 0;  // 0: OpenMP default

  void validate() const;
};

// Keys accepted in spec files and as CLI flags (flag = "--" + key with '_'
// replaced by '-').
const std::vector<std::string>& sweep_keys();

// key = value text, '#' comments. Throws invalid_spec naming the line.
std::map<std::string, std::string> parse_spec_text(const std::string& text);
std::map<std::string, std::string> read_spec_file(const std::string& path);
SweepSpec spec_from_map(const std::map<std::string, std::string>& kv);

struct SweepRow {
  std::string var;  // "p" or "N"
  double p = 0.0;
  int n = 1;
  int w0 = 8;
  std::optional<double> ptx_a, pcl_a, pidle_a, mu_a, aoi_a;
  std::optional<double> ptx_s, pcl_s, mu_s, aoi_s, aoi_s_se;
  std::uint64_t seed = 0;
  std::string status = "ok";

  bool operator==(const SweepRow&) const = default;
};

// Grid points in output order: curve-major, then grid order.
std::vector<NetworkParams> sweep_points(const SweepSpec& spec);

// Rows in grid order. Parallel over rows with OpenMP unless `parallel` is
// false; the output does not depend on the thread count.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, bool parallel = true);

// Relative tolerance for simulated vs analytic columns, applied when the
// horizon is at least kDeviationHorizon.
inline constexpr double kDeviationTolerance = 0.05;
inline constexpr std::int64_t kDeviationHorizon = 10'000'000;

struct ShapeCheck {
  std::string name;
  std::string curve;
  bool passed = true;
  std::string detail;
};

// Post-run monotonicity and U-shape checks on the analytic columns.
std::vector<ShapeCheck> shape_checks(const std::vector<SweepRow>& rows);

// Exactly one sign change of the discrete slope, from falling to rising.
bool is_u_shaped(const std::vector<double>& ys);
bool is_nondecreasing(const std::vector<double>& ys);

// Serialization. Numbers use 12 significant digits; unset columns are empty
// (CSV) or null (JSON).
std::string csv_header();
std::string format_number(double x);
std::string to_csv(const std::vector<SweepRow>& rows);
std::string to_json(const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_csv(const std::string& text);
std::vector<SweepRow> parse_json(const std::string& text);
// Writes rows in `format` ("csv" or "json"). Throws io on failure.
void emit(const std::vector<SweepRow>& rows, const std::string& format,
          const std::string& path);

}  // namespace csma_aoi
