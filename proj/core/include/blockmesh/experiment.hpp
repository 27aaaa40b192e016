#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "blockmesh/hlf.hpp"
#include "blockmesh/placement.hpp"
#include "blockmesh/poa.hpp"
#include "blockmesh/topology.hpp"
#include "blockmesh/workload.hpp"

namespace blockmesh {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class PipelineKind { Hlf, Poa };

struct ExperimentConfig {
  // [topology]
  std::string topology_source = "synth";  // "file" | "synth"
  std::string topology_path;
  int synth_nodes = 85;
  std::uint64_t synth_seed = 1;
  SynthProfile profile;

  // [placement]
  PlacementMethod placement_method = PlacementMethod::Basp;
  int k = 4;
  double availability_threshold = 0.95;
  std::uint64_t placement_seed = 1;

  // [pipeline]
  PipelineKind pipeline = PipelineKind::Hlf;
  HlfParams hlf;
  PoaParams poa;

  // [workload]
  WorkloadSpec workload;
  ChaincodeCall hlf_call{"sendMoney", {"Alice", "10", "+"}};
  std::string poa_from = "acc1";
  std::string poa_to = "acc2";
  long long poa_value = 1;

  // [run]
  int repetitions = 1;
  std::uint64_t seed = 1;

  static ExperimentConfig parse(std::istream& in);
  static ExperimentConfig parse_file(const std::string& path);
};

struct TxRow {
  int run = 0;
  std::string tx_id;
  double submit_ms = -1;
  double mid_ms = -1;    // endorse (HLF) / seal (PoA)
  double final_ms = -1;  // commit (HLF) / completion (PoA)
  std::string status;    // valid | invalid | rejected | dropped | pending
};

struct RunAggregates {
  int run = 0;
  std::map<std::string, double> values;  // metric name -> value
};

struct CpuRow {
  int run = 0;
  std::string node;
  double busy_fraction = 0.0;
};

struct MetricsReport {
  std::vector<TxRow> rows;
  std::vector<RunAggregates> aggregates;
  std::vector<CpuRow> cpu;
  std::string trace;  // trace of the first repetition
};

// mean/median/min/max recomputed from per-tx rows of one run
std::map<std::string, double> recompute_aggregates(
    const std::vector<TxRow>& rows, int run);

struct SingleRunOutcome {
  MetricsReport report;           // rows for this run only
  HlfRunResult hlf;               // populated for HLF runs
  PoaRunResult poa;               // populated for PoA runs
  std::string trace;
};

SingleRunOutcome run_single(const ExperimentConfig& config,
                            const MeshTopology& topology,
                            const PlacementPlan& plan, std::uint64_t seed,
                            int run_index);

MeshTopology build_topology(const ExperimentConfig& config,
                            std::uint64_t seed_offset = 0);
PlacementPlan build_placement(const ExperimentConfig& config,
                              const MeshTopology& topology,
                              std::uint64_t seed);
std::vector<std::string> pipeline_roles(const ExperimentConfig& config);

// repetitions with seeds seed, seed+1, ...; aggregates averaged across runs
MetricsReport run_experiment(const ExperimentConfig& config);

struct ComparisonRow {
  std::uint64_t seed = 0;
  double basp_latency_ms = 0;
  double random_latency_ms = 0;
  double gain_pct = 0;  // (random - basp) / random * 100
};

std::vector<ComparisonRow> compare_placements(const ExperimentConfig& config,
                                              int seeds);

// CSV emission; schema is versioned in the first line
std::string metrics_csv(const MetricsReport& report);
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

}  // namespace blockmesh
