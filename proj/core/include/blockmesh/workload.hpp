#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "blockmesh/engine.hpp"
#include "blockmesh/hlf.hpp"
#include "blockmesh/poa.hpp"

namespace blockmesh {

enum class WorkloadMode { Parallel, Sequential };

struct WorkloadSpec {
  WorkloadMode mode = WorkloadMode::Parallel;
  int n = 1;
  TimeUs start_time_us = 0;
};

// Parallel: all n submissions at the same virtual instant, in id order.
// Sequential: tx k+1 is submitted the moment tx k reaches its final state.
// Returned vectors are filled as the run progresses.
std::shared_ptr<std::vector<std::string>> drive_hlf(SimEngine& engine,
                                                    HlfSimulation& sim,
                                                    const WorkloadSpec& spec,
                                                    const ChaincodeCall& call);

std::shared_ptr<std::vector<std::uint64_t>> drive_poa(
    SimEngine& engine, PoaSimulation& sim, const WorkloadSpec& spec,
    const std::string& from, const std::string& to, long long value);

}  // namespace blockmesh
