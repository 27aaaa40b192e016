#include "blockmesh/workload.hpp"

namespace blockmesh {

std::shared_ptr<std::vector<std::string>> drive_hlf(SimEngine& engine,
                                                    HlfSimulation& sim,
                                                    const WorkloadSpec& spec,
                                                    const ChaincodeCall& call) {
  if (spec.n < 1) throw SimError("workload requires n >= 1");
  auto ids = std::make_shared<std::vector<std::string>>();
  if (spec.mode == WorkloadMode::Parallel) {
    engine.schedule_at(spec.start_time_us, "workload", "timer",
                       "fire-parallel", [&engine, &sim, spec, call, ids]() {
                         for (int i = 0; i < spec.n; ++i)
                           ids->push_back(sim.submit_tx(call));
                       });
  } else {
    auto remaining = std::make_shared<int>(spec.n);
    sim.set_on_tx_final([&sim, call, ids, remaining](const std::string&, bool) {
      if (--(*remaining) > 0) ids->push_back(sim.submit_tx(call));
    });
    engine.schedule_at(spec.start_time_us, "workload", "timer",
                       "fire-sequential",
                       [&sim, call, ids]() { ids->push_back(sim.submit_tx(call)); });
  }
  return ids;
}

std::shared_ptr<std::vector<std::uint64_t>> drive_poa(
    SimEngine& engine, PoaSimulation& sim, const WorkloadSpec& spec,
    const std::string& from, const std::string& to, long long value) {
  if (spec.n < 1) throw SimError("workload requires n >= 1");
  auto ids = std::make_shared<std::vector<std::uint64_t>>();
  if (spec.mode == WorkloadMode::Parallel) {
    engine.schedule_at(spec.start_time_us, "workload", "timer",
                       "fire-parallel", [&sim, spec, from, to, value, ids]() {
                         for (int i = 0; i < spec.n; ++i)
                           ids->push_back(sim.submit_transfer(from, to, value));
                       });
  } else {
    auto remaining = std::make_shared<int>(spec.n);
    sim.set_on_tx_final([&sim, from, to, value, ids, remaining](std::uint64_t) {
      if (--(*remaining) > 0)
        ids->push_back(sim.submit_transfer(from, to, value));
    });
    engine.schedule_at(spec.start_time_us, "workload", "timer",
                       "fire-sequential", [&sim, from, to, value, ids]() {
                         ids->push_back(sim.submit_transfer(from, to, value));
                       });
  }
  return ids;
}

}  // namespace blockmesh
