#include <cmath>
#include <exception>
#include <map>
#include <sstream>

#include <omp.h>

#include "csma_aoi/errors.hpp"
#include "csma_aoi/solvers.hpp"
#include "csma_aoi/sweep.hpp"

namespace csma_aoi {

namespace {

bool deviates(double simulated, double analytic) {
  return std::abs(simulated - analytic) >= kDeviationTolerance * std::abs(analytic);
}

SweepRow compute_row(const SweepSpec& spec, const NetworkParams& params,
                     std::size_t index) {
  SweepRow row;
  row.var = spec.variable == SweepVariable::packet_rate ? "p" : "N";
  row.p = params.packet_rate;
  row.n = params.n_nodes;
  row.w0 = params.min_window;
  row.seed = spec.seed + index;

  bool analytic_ok = false;
  if (spec.analytic) {
    try {
      const ProtocolSolution sol = solve_fixed_point(params);
      row.ptx_a = sol.p_tx;
      row.pcl_a = sol.p_cl;
      row.pidle_a = sol.p_idle;
      row.mu_a = sol.mu;
      if (sol.stable) {
        row.aoi_a = sol.avg_aoi;
        analytic_ok = true;
      } else {
        row.status = "unstable";
      }
    } catch (const ModelError& e) {
      row.status = std::string(to_string(e.kind()));
    }
  }
  if (spec.simulate) {
    SimulationConfig cfg;
    cfg.params = params;
    cfg.horizon = spec.horizon;
    cfg.warmup = spec.warmup;
    cfg.seed = row.seed;
    cfg.stage_cap = spec.stage_cap;
    cfg.batches = spec.batches;
    cfg.freeze = spec.freeze;
    const SimulationStats st = simulate(cfg);
    row.ptx_s = st.empirical_p_tx;
    row.pcl_s = st.empirical_p_cl;
    row.mu_s = st.empirical_mu;
    row.aoi_s = st.mean_aoi;
    row.aoi_s_se = st.se_aoi;
    if (!spec.analytic && !st.stable) row.status = "unstable";
    if (analytic_ok && spec.horizon >= kDeviationHorizon &&
        (deviates(st.empirical_p_tx, *row.ptx_a) || deviates(st.empirical_p_cl, *row.pcl_a) ||
         deviates(st.empirical_mu, *row.mu_a) || deviates(st.mean_aoi, *row.aoi_a))) {
      row.status = "sim_deviation";
    }
  }
  return row;
}

std::string label(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

}  // namespace

std::vector<NetworkParams> sweep_points(const SweepSpec& spec) {
  spec.validate();
  const bool p_sweep = spec.variable == SweepVariable::packet_rate;
  std::vector<NetworkParams> points;
  for (double curve : spec.curves) {
    double capacity = 0.0;
    if (spec.grid.uses_capacity()) {
      try {
        capacity = p_sweep ? max_packet_rate(static_cast<int>(curve), spec.min_window) -
                                 kCapacityMargin
                           : static_cast<double>(max_node_count(curve, spec.min_window));
      } catch (const ModelError& e) {
        fail(ErrorKind::invalid_spec,
             "capacity endpoint undefined for curve " + label(curve) + ": " + e.what());
      }
    }
    std::vector<double> values = spec.grid.resolve(capacity);
    if (values.empty()) {
      fail(ErrorKind::invalid_spec, "grid is empty for curve " + label(curve));
    }
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (!p_sweep) values[k] = std::round(values[k]);
      if (k > 0 && !(values[k] > values[k - 1])) {
        fail(ErrorKind::invalid_spec,
             "grid is not strictly increasing for curve " + label(curve));
      }
    }
    for (double v : values) {
      NetworkParams np;
      np.min_window = spec.min_window;
      np.n_nodes = static_cast<int>(p_sweep ? curve : v);
      np.packet_rate = p_sweep ? v : curve;
      if (!(np.packet_rate > 0.0 && np.packet_rate < 1.0) || np.n_nodes < 1 ||
          (!p_sweep && v > 1e6)) {
        fail(ErrorKind::invalid_spec, "grid value " + label(v) + " out of range");
      }
      points.push_back(np);
    }
  }
  return points;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, bool parallel) {
  const std::vector<NetworkParams> points = sweep_points(spec);
  const long n = static_cast<long>(points.size());
  std::vector<SweepRow> rows(points.size());
  std::vector<std::exception_ptr> errors(points.size());
  const int threads = spec.threads > 0 ? spec.threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (parallel)
  for (long k = 0; k < n; ++k) {
    try {
      rows[k] = compute_row(spec, points[k], static_cast<std::size_t>(k));
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

bool is_nondecreasing(const std::vector<double>& ys) {
  for (std::size_t k = 1; k < ys.size(); ++k) {
    if (ys[k] < ys[k - 1]) return false;
  }
  return true;
}

bool is_u_shaped(const std::vector<double>& ys) {
  int last = 0;
  int changes = 0;
  int first = 0;
  for (std::size_t k = 1; k < ys.size(); ++k) {
    const double d = ys[k] - ys[k - 1];
    const int sign = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    if (sign == 0) continue;
    if (first == 0) first = sign;
    if (last != 0 && sign != last) ++changes;
    last = sign;
  }
  return first == -1 && changes == 1;
}

std::vector<ShapeCheck> shape_checks(const std::vector<SweepRow>& rows) {
  std::vector<ShapeCheck> checks;
  if (rows.empty()) return checks;
  const bool p_sweep = rows.front().var == "p";

  // Curves in first-appearance order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const SweepRow*>> curves;
  for (const auto& r : rows) {
    const std::string key = p_sweep ? "N=" + std::to_string(r.n) : "p=" + label(r.p);
    if (!curves.count(key)) order.push_back(key);
    curves[key].push_back(&r);
  }

  auto add = [&](const std::string& name, const std::string& curve,
                 const std::vector<double>& ys, bool u_shape) {
    ShapeCheck c{name, curve, true, ""};
    if (u_shape && ys.size() < 3) {
      c.detail = "skipped: fewer than 3 points";
    } else {
      c.passed = u_shape ? is_u_shaped(ys) : is_nondecreasing(ys);
      c.detail = std::to_string(ys.size()) + " points";
    }
    checks.push_back(c);
  };

  for (const auto& key : order) {
    std::vector<double> ptx, pcl, aoi;
    for (const SweepRow* r : curves[key]) {
      if (r->ptx_a) ptx.push_back(*r->ptx_a);
      if (r->pcl_a) pcl.push_back(*r->pcl_a);
      if (r->aoi_a) aoi.push_back(*r->aoi_a);
    }
    add("ptx_nondecreasing", key, ptx, false);
    add("pcl_nondecreasing", key, pcl, false);
    if (p_sweep) {
      add("aoi_u_shape", key, aoi, true);
    } else {
      add("aoi_nondecreasing_in_n", key, aoi, false);
    }
  }

  if (p_sweep && order.size() > 1) {
    // At each p shared by several curves, AoI must not fall as N grows.
    std::map<double, std::map<int, double>> by_p;
    for (const auto& r : rows) {
      if (r.aoi_a) by_p[r.p][r.n] = *r.aoi_a;
    }
    ShapeCheck c{"aoi_nondecreasing_in_n", "all", true, ""};
    int compared = 0;
    for (const auto& [p, by_n] : by_p) {
      if (by_n.size() < 2) continue;
      ++compared;
      std::vector<double> ys;
      for (const auto& [n, a] : by_n) ys.push_back(a);
      if (!is_nondecreasing(ys)) {
        c.passed = false;
        c.detail = "fails at p=" + label(p);
        break;
      }
    }
    if (c.passed) c.detail = std::to_string(compared) + " shared p values";
    checks.push_back(c);
  }
  return checks;
}

}  // namespace csma_aoi
