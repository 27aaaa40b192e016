#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "blockmesh/compensation.hpp"
#include "blockmesh/experiment.hpp"
#include "blockmesh/placement.hpp"
#include "blockmesh/topology.hpp"

namespace {

void write_or_print(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write output file: " + out_path);
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"blockmesh: permissioned-blockchain-over-mesh simulator"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "run an experiment config");
  std::string run_config, run_out, run_trace_out;
  long long run_seed = -1;
  run_cmd->add_option("config", run_config, "experiment config file")
      ->required();
  run_cmd->add_option("--seed", run_seed, "override [run] seed");
  run_cmd->add_option("--out", run_out, "CSV output path (default stdout)");
  run_cmd->add_option("--trace-out", run_trace_out,
                      "also dump the first repetition's event trace");

  // compare
  auto* cmp_cmd =
      app.add_subcommand("compare", "paired BASP vs random comparison");
  std::string cmp_config, cmp_out;
  int cmp_seeds = 30;
  long long cmp_seed = -1;
  cmp_cmd->add_option("config", cmp_config, "experiment config file")
      ->required();
  cmp_cmd->add_option("--seeds", cmp_seeds, "number of paired seeds");
  cmp_cmd->add_option("--seed", cmp_seed, "override [run] seed");
  cmp_cmd->add_option("--out", cmp_out, "CSV output path (default stdout)");

  // synth-topology
  auto* synth_cmd =
      app.add_subcommand("synth-topology", "generate a synthetic mesh");
  int synth_nodes = 85;
  long long synth_seed = 1;
  std::string synth_out;
  synth_cmd->add_option("--nodes", synth_nodes, "node count (>= 2)");
  synth_cmd->add_option("--seed", synth_seed, "generator seed");
  synth_cmd->add_option("-o,--out", synth_out, "topology output file")
      ->required();

  // place
  auto* place_cmd = app.add_subcommand("place", "compute a placement plan");
  std::string place_topo, place_method = "basp", place_out;
  int place_k = 4;
  double place_threshold = 0.95;
  long long place_seed = 1;
  int place_endorsers = 1, place_committers = 1, place_sealers = 1;
  std::string place_pipeline = "hlf";
  place_cmd->add_option("topology", place_topo, "topology file")->required();
  place_cmd->add_option("--method", place_method, "basp | random");
  place_cmd->add_option("-k", place_k, "replica count / cluster count");
  place_cmd->add_option("--threshold", place_threshold,
                        "availability threshold");
  place_cmd->add_option("--seed", place_seed, "placement seed");
  place_cmd->add_option("--pipeline", place_pipeline,
                        "role set to place: hlf | poa");
  place_cmd->add_option("--endorsers", place_endorsers, "HLF endorser count");
  place_cmd->add_option("--committers", place_committers,
                        "HLF dedicated committer count");
  place_cmd->add_option("--sealers", place_sealers, "PoA sealer instances");
  place_cmd->add_option("-o,--out", place_out, "plan output file")->required();

  // settle
  auto* settle_cmd =
      app.add_subcommand("settle", "zero-sum compensation settlement");
  std::string settle_records;
  long long settle_period = 0;
  settle_cmd->add_option("records", settle_records, "records file")->required();
  settle_cmd->add_option("--period", settle_period, "period index to settle");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      auto cfg = blockmesh::ExperimentConfig::parse_file(run_config);
      if (run_seed >= 0) cfg.seed = static_cast<std::uint64_t>(run_seed);
      auto report = blockmesh::run_experiment(cfg);
      write_or_print(run_out, blockmesh::metrics_csv(report));
      if (!run_trace_out.empty()) write_or_print(run_trace_out, report.trace);
    } else if (*cmp_cmd) {
      auto cfg = blockmesh::ExperimentConfig::parse_file(cmp_config);
      if (cmp_seed >= 0) cfg.seed = static_cast<std::uint64_t>(cmp_seed);
      auto rows = blockmesh::compare_placements(cfg, cmp_seeds);
      write_or_print(cmp_out, blockmesh::comparison_csv(rows));
    } else if (*synth_cmd) {
      auto topo = blockmesh::synth_topology(
          synth_nodes, static_cast<std::uint64_t>(synth_seed));
      topo.save_file(synth_out);
    } else if (*place_cmd) {
      auto topo = blockmesh::MeshTopology::load_file(place_topo);
      std::vector<std::string> roles =
          place_pipeline == "poa"
              ? blockmesh::PoaParams::roles(place_sealers)
              : blockmesh::HlfParams::roles(place_endorsers, place_committers);
      blockmesh::PlacementPlan plan;
      if (place_method == "basp") {
        plan = blockmesh::basp(topo, place_k, place_threshold,
                               static_cast<std::uint64_t>(place_seed), roles);
      } else if (place_method == "random") {
        plan = blockmesh::random_placement(
            topo, place_k, static_cast<std::uint64_t>(place_seed), roles);
      } else {
        std::cerr << "error: --method must be basp or random\n";
        return 2;
      }
      std::ofstream out(place_out);
      if (!out) throw std::runtime_error("cannot write plan: " + place_out);
      plan.save(out);
    } else if (*settle_cmd) {
      std::ifstream in(settle_records);
      if (!in)
        throw std::runtime_error("cannot open records: " + settle_records);
      auto all = blockmesh::load_records(in);
      std::vector<blockmesh::CompensationRecord> period_records;
      for (const auto& r : all)
        if (r.period == settle_period) period_records.push_back(r);
      auto result = blockmesh::settle(settle_period, period_records);
      std::cout << "period " << result.period << "\n";
      for (const auto& [id, net] : result.net_balance)
        std::cout << "net " << id << " " << net << "\n";
      for (const auto& t : result.transfers)
        std::cout << "transfer " << t.payer << " -> " << t.payee << " "
                  << t.amount << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
