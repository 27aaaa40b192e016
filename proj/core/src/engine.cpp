#include "blockmesh/engine.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace blockmesh {

void SimEngine::schedule_at(TimeUs fire_time, const std::string& node,
                            const std::string& kind, const std::string& detail,
                            std::function<void()> fn) {
  if (fire_time < now_)
    throw SimError("schedule in the past: t=" + std::to_string(fire_time) +
                   " now=" + std::to_string(now_));
  queue_.push(Event{fire_time, next_sequence_++, node, kind, detail,
                    std::move(fn)});
}

void SimEngine::schedule_after(TimeUs delay, const std::string& node,
                               const std::string& kind,
                               const std::string& detail,
                               std::function<void()> fn) {
  schedule_at(now_ + delay, node, kind, detail, std::move(fn));
}

void SimEngine::send_message(const std::string& from, const std::string& to,
                             std::int64_t bytes, const std::string& kind,
                             const std::string& detail,
                             std::function<void()> on_arrival) {
  TimeUs delay = 0;
  if (from != to) {
    auto path = topology_.shortest_path(from, to);
    delay = topology_.transfer_delay_us(path, bytes);
  }
  schedule_at(now_ + delay, to, kind, detail, std::move(on_arrival));
}

TimeUs SimEngine::run_cpu(const std::string& node, double work_units,
                          const std::string& kind, const std::string& detail,
                          std::function<void()> on_complete) {
  const double cpu = topology_.node(node).cpu_capacity;
  const TimeUs service =
      std::llround(work_units * 1000.0 / cpu);  // work in ms at cpu 1.0
  TimeUs& busy = busy_until_[node];
  const TimeUs start = std::max(now_, busy);
  const TimeUs end = start + service;
  busy = end;
  busy_accum_[node] += service;
  schedule_at(end, node, kind, detail, std::move(on_complete));
  return end;
}

void SimEngine::run_until(TimeUs t_end) {
  while (!queue_.empty() && queue_.top().fire_time <= t_end) {
    Event ev = queue_.top();
    queue_.pop();
    now_ = ev.fire_time;
    trace_.push_back(TraceRecord{now_, ev.node, ev.kind, ev.detail});
    ev.fn();
  }
}

void SimEngine::run_all() {
  run_until(std::numeric_limits<TimeUs>::max());
}

std::string SimEngine::dump_trace() const {
  std::ostringstream out;
  for (const auto& r : trace_)
    out << r.time_us << " " << r.node << " " << r.kind << " " << r.detail
        << "\n";
  return out.str();
}

double SimEngine::cpu_busy_fraction(const std::string& node,
                                    TimeUs window_us) const {
  if (window_us <= 0) return 0.0;
  auto it = busy_accum_.find(node);
  if (it == busy_accum_.end()) return 0.0;
  double f = static_cast<double>(it->second) / static_cast<double>(window_us);
  return f > 1.0 ? 1.0 : f;
}

}  // namespace blockmesh
