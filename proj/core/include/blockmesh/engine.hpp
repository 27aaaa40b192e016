#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockmesh/rng.hpp"
#include "blockmesh/topology.hpp"

namespace blockmesh {

using TimeUs = std::int64_t;

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TraceRecord {
  TimeUs time_us;
  std::string node;
  std::string kind;
  std::string detail;
};

// Deterministic discrete-event core. Strictly single-threaded; independent
// instances may run in parallel. Events with equal fire time are processed
// in scheduling order (monotone sequence counter).
class SimEngine {
public:
  SimEngine(const MeshTopology& topology, std::uint64_t seed)
      : topology_(topology), rng_(seed) {}

  TimeUs now() const { return now_; }
  const MeshTopology& topology() const { return topology_; }
  DetRng& rng() { return rng_; }

  void schedule_at(TimeUs fire_time, const std::string& node,
                   const std::string& kind, const std::string& detail,
                   std::function<void()> fn);
  void schedule_after(TimeUs delay, const std::string& node,
                      const std::string& kind, const std::string& detail,
                      std::function<void()> fn);

  // Delivery at now + transfer_delay over the deterministic shortest path;
  // from == to delivers with zero network delay.
  void send_message(const std::string& from, const std::string& to,
                    std::int64_t bytes, const std::string& kind,
                    const std::string& detail, std::function<void()> on_arrival);

  // FIFO CPU service on the node's single queue. work_units are milliseconds
  // at cpu_capacity 1.0. Returns the service completion time.
  TimeUs run_cpu(const std::string& node, double work_units,
                 const std::string& kind, const std::string& detail,
                 std::function<void()> on_complete);

  void run_until(TimeUs t_end);
  void run_all();

  const std::vector<TraceRecord>& trace() const { return trace_; }
  std::string dump_trace() const;

  // busy service time / observation window, clamped only by construction
  double cpu_busy_fraction(const std::string& node, TimeUs window_us) const;
  std::map<std::string, TimeUs> cpu_busy_us() const { return busy_accum_; }

private:
  struct Event {
    TimeUs fire_time;
    std::uint64_t sequence;
    std::string node, kind, detail;
    std::function<void()> fn;
  };
  struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
      if (a.fire_time != b.fire_time) return a.fire_time > b.fire_time;
      return a.sequence > b.sequence;
    }
  };

  const MeshTopology& topology_;
  DetRng rng_;
  TimeUs now_ = 0;
  std::uint64_t next_sequence_ = 0;
  std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
  std::map<std::string, TimeUs> busy_until_;
  std::map<std::string, TimeUs> busy_accum_;
  std::vector<TraceRecord> trace_;
};

}  // namespace blockmesh
