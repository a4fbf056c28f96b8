#include "csma_aoi/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "csma_aoi/errors.hpp"

namespace csma_aoi {

Network::Network(const NetworkParams& params, int stage_cap, std::uint64_t seed,
                 FreezeRule freeze)
    : params_(params),
      stage_cap_(stage_cap),
      freeze_(freeze),
      rng_(seed),
      gap_(params.packet_rate) {
  params_.validate();
  if (stage_cap < 0 || stage_cap > 40) {
    fail(ErrorKind::domain, "stage_cap must lie in [0, 40]");
  }
  nodes_.resize(params_.n_nodes);
  next_arrival_.resize(params_.n_nodes);
  arrival_flags_.assign(params_.n_nodes, 0);
  transmitters_.reserve(params_.n_nodes);
  for (auto& next : next_arrival_) {
    next = draw_gap();
  }
}

std::int64_t Network::draw_counter(int stage) {
  std::uniform_int_distribution<std::int64_t> pick(0, window(stage) - 1);
  return pick(rng_);
}

std::int64_t Network::draw_gap() { return gap_(rng_); }

void Network::set_node(int i, NodeState state) {
  NodeState& cur = nodes_.at(i);
  total_queue_ += static_cast<std::int64_t>(state.queue.size()) -
                  static_cast<std::int64_t>(cur.queue.size());
  total_age_ += state.age - cur.age;
  backlogged_ += (state.idle() ? 0 : 1) - (cur.idle() ? 0 : 1);
  cur = std::move(state);
}

SlotOutcome Network::step() {
  const int n = size();
  for (int i = 0; i < n; ++i) {
    if (next_arrival_[i] < slot_) {
      next_arrival_[i] = slot_ + draw_gap();
    }
    arrival_flags_[i] = next_arrival_[i] == slot_ ? 1 : 0;
    if (arrival_flags_[i]) {
      next_arrival_[i] = slot_ + 1 + draw_gap();
    }
  }
  return advance(arrival_flags_);
}

SlotOutcome Network::step(std::span<const bool> arrivals) {
  if (static_cast<int>(arrivals.size()) != size()) {
    fail(ErrorKind::domain, "arrival vector size must equal node count");
  }
  std::copy(arrivals.begin(), arrivals.end(), arrival_flags_.begin());
  return advance(arrival_flags_);
}

SlotOutcome Network::advance(std::span<const char> arrivals) {
  const std::int64_t m = slot_;
  const int n = size();
  SlotOutcome out;
  out.backlogged = backlogged_;

  transmitters_.clear();
  for (int i = 0; i < n; ++i) {
    const NodeState& s = nodes_[i];
    if (!s.idle() && s.counter == 0) {
      transmitters_.push_back(i);
    }
  }
  out.attempts = static_cast<int>(transmitters_.size());

  // Non-transmitters decrement unless the channel triggers a freeze. A lone
  // transmitter is excluded from its own freeze decision by counter == 0.
  const bool freeze = freeze_ == FreezeRule::busy_channel ? !transmitters_.empty()
                                                          : transmitters_.size() > 1;
  if (!freeze) {
    for (auto& s : nodes_) {
      if (!s.idle() && s.counter > 0) {
        --s.counter;
      }
    }
  }

  if (transmitters_.size() == 1) {
    const int i = transmitters_.front();
    NodeState& s = nodes_[i];
    const std::int64_t u = s.queue.front();
    s.queue.pop_front();
    --total_queue_;
    out.event = SlotEvent::success;
    out.node = i;
    out.generation = u;
    out.system_time = m - u;
    out.service_time = m - s.service_start;
    s.last_delivered_generation = u;
    if (s.queue.empty()) {
      s.stage = NodeState::kIdle;
      --backlogged_;
    } else {
      s.stage = 0;
      s.counter = draw_counter(0);
      s.service_start = m;
    }
  } else if (transmitters_.size() > 1) {
    out.event = SlotEvent::collision;
    out.colliders = static_cast<int>(transmitters_.size());
    for (int i : transmitters_) {
      NodeState& s = nodes_[i];
      s.stage = std::min(s.stage + 1, stage_cap_);
      s.counter = draw_counter(s.stage);
    }
  }

  for (int i = 0; i < n; ++i) {
    if (!arrivals[i]) {
      continue;
    }
    ++out.arrivals;
    NodeState& s = nodes_[i];
    s.queue.push_back(m);
    ++total_queue_;
    if (s.idle()) {
      s.stage = 0;
      s.counter = draw_counter(0);
      s.service_start = m;
      ++backlogged_;
    }
  }

  for (auto& s : nodes_) {
    ++s.age;
  }
  total_age_ += n;
  if (out.event == SlotEvent::success) {
    NodeState& s = nodes_[out.node];
    const std::int64_t reset = m - out.generation + 1;
    total_age_ += reset - s.age;
    s.age = reset;
  }

  ++slot_;
  return out;
}

void SimulationConfig::validate() const {
  params.validate();
  if (!(horizon > warmup && warmup >= 0)) {
    fail(ErrorKind::domain, "need horizon > warmup >= 0");
  }
  if (stage_cap < 0 || stage_cap > 40) {
    fail(ErrorKind::domain, "stage_cap must lie in [0, 40]");
  }
  if (batches < 2) {
    fail(ErrorKind::domain, "batches must be >= 2");
  }
}

namespace {

struct BatchTally {
  std::int64_t slots = 0;
  std::int64_t attempts = 0;
  std::int64_t collided = 0;
  std::int64_t successes = 0;
  std::int64_t backlogged = 0;
  double age_sum = 0.0;
  double queue_sum = 0.0;
};

double standard_error(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0) / n);
}

// Least-squares slope of the batch queue means against batch index; a
// t-statistic above 5 together with growth beyond the starting level marks
// the run as unstable.
bool queue_trend_flat(const std::vector<double>& q) {
  const double n = static_cast<double>(q.size());
  if (q.size() < 3) return true;
  double mx = (n - 1.0) / 2.0;
  double my = 0.0;
  for (double y : q) my += y;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    sxx += (i - mx) * (i - mx);
    sxy += (i - mx) * (q[i] - my);
  }
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double r = q[i] - my - slope * (i - mx);
    rss += r * r;
  }
  const double se = std::sqrt(rss / (n - 2.0) / sxx);
  const double growth = slope * (n - 1.0);
  const bool significant = se == 0.0 ? slope > 0.0 : slope / se > 5.0;
  return !(significant && growth > std::max(1.0, 0.5 * q.front()));
}

void write_trace_line(std::ostream& os, std::int64_t slot, const SlotOutcome& o,
                      std::int64_t queue_total) {
  std::string line = std::to_string(slot);
  switch (o.event) {
    case SlotEvent::idle: line += ",I,"; break;
    case SlotEvent::success: line += ",S:" + std::to_string(o.node) + ","; break;
    case SlotEvent::collision: line += ",C:" + std::to_string(o.colliders) + ","; break;
  }
  line += std::to_string(queue_total);
  line += '\n';
  os << line;
}

}  // namespace

SimulationStats simulate(const SimulationConfig& cfg, const TraceSinks& sinks) {
  cfg.validate();
  if (sinks.aoi_path && (sinks.aoi_node < 0 || sinks.aoi_node >= cfg.params.n_nodes)) {
    fail(ErrorKind::domain, "aoi node index out of range");
  }
  Network net(cfg.params, cfg.stage_cap, cfg.seed, cfg.freeze);
  const int n = cfg.params.n_nodes;
  const std::int64_t measured = cfg.horizon - cfg.warmup;
  const int n_batches = static_cast<int>(std::min<std::int64_t>(cfg.batches, measured));
  const std::int64_t batch_len = (measured + n_batches - 1) / n_batches;
  std::vector<BatchTally> batches(n_batches);

  SimulationStats st;
  std::int64_t idle_node_slots = 0;
  double system_time_sum = 0.0;
  double service_sum = 0.0;
  double service_sq = 0.0;

  if (sinks.aoi_path) {
    *sinks.aoi_path << "slot,age\n";
  }

  for (std::int64_t m = 0; m < cfg.horizon; ++m) {
    const SlotOutcome o = net.step();
    st.arrivals += o.arrivals;
    switch (o.event) {
      case SlotEvent::idle: ++st.idle_slots; break;
      case SlotEvent::success: ++st.success_slots; ++st.deliveries; break;
      case SlotEvent::collision: ++st.collision_slots; break;
    }
    if (sinks.slot_trace) {
      write_trace_line(*sinks.slot_trace, m, o, net.total_queue());
    }
    if (sinks.aoi_path) {
      *sinks.aoi_path << m << ',' << net.node(sinks.aoi_node).age << '\n';
    }
    if (m < cfg.warmup) {
      continue;
    }
    BatchTally& b = batches[(m - cfg.warmup) / batch_len];
    ++b.slots;
    b.attempts += o.attempts;
    b.backlogged += o.backlogged;
    b.age_sum += static_cast<double>(net.total_age());
    b.queue_sum += static_cast<double>(net.total_queue());
    idle_node_slots += n - o.backlogged;
    if (o.event == SlotEvent::collision) {
      b.collided += o.colliders;
    } else if (o.event == SlotEvent::success) {
      ++b.successes;
      ++st.delivered;
      system_time_sum += static_cast<double>(o.system_time);
      service_sum += static_cast<double>(o.service_time);
      service_sq += static_cast<double>(o.service_time) * static_cast<double>(o.service_time);
      ++st.service_time_histogram[o.service_time];
    }
  }

  BatchTally all;
  std::vector<double> b_ptx, b_pcl, b_mu, b_aoi, b_queue;
  for (const auto& b : batches) {
    all.slots += b.slots;
    all.attempts += b.attempts;
    all.collided += b.collided;
    all.successes += b.successes;
    all.backlogged += b.backlogged;
    all.age_sum += b.age_sum;
    if (b.slots == 0) continue;
    const double node_slots = static_cast<double>(b.slots) * n;
    b_ptx.push_back(b.attempts / node_slots);
    if (b.attempts > 0) b_pcl.push_back(static_cast<double>(b.collided) / b.attempts);
    if (b.backlogged > 0) b_mu.push_back(static_cast<double>(b.successes) / b.backlogged);
    b_aoi.push_back(b.age_sum / node_slots);
    b_queue.push_back(b.queue_sum / b.slots);
  }
  const double node_slots = static_cast<double>(all.slots) * n;
  st.empirical_p_tx = all.attempts / node_slots;
  st.empirical_p_cl = all.attempts > 0 ? static_cast<double>(all.collided) / all.attempts : 0.0;
  st.empirical_p_idle = idle_node_slots / node_slots;
  st.empirical_mu = all.backlogged > 0 ? static_cast<double>(all.successes) / all.backlogged : 0.0;
  st.mean_aoi = all.age_sum / node_slots;
  st.delivery_rate = all.successes / node_slots;
  if (st.delivered > 0) {
    const double d = static_cast<double>(st.delivered);
    st.mean_system_time = system_time_sum / d;
    st.mean_service_time = service_sum / d;
    st.var_service_time = st.delivered > 1
        ? (service_sq - d * st.mean_service_time * st.mean_service_time) / (d - 1.0)
        : 0.0;
  }
  st.se_p_tx = standard_error(b_ptx);
  st.se_p_cl = standard_error(b_pcl);
  st.se_mu = standard_error(b_mu);
  st.se_aoi = standard_error(b_aoi);
  st.final_queue_total = net.total_queue();
  st.stable = queue_trend_flat(b_queue);
  return st;
}

std::vector<AoiSample> record_aoi_path(const SimulationConfig& cfg, int node) {
  cfg.validate();
  if (node < 0 || node >= cfg.params.n_nodes) {
    fail(ErrorKind::domain, "node index out of range");
  }
  Network net(cfg.params, cfg.stage_cap, cfg.seed, cfg.freeze);
  std::vector<AoiSample> path;
  path.reserve(static_cast<std::size_t>(cfg.horizon));
  for (std::int64_t m = 0; m < cfg.horizon; ++m) {
    net.step();
    path.push_back({m, net.node(node).age});
  }
  return path;
}

}  // namespace csma_aoi
