#include "blockmesh/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace blockmesh {

namespace {

double us_to_ms(TimeUs us) { return static_cast<double>(us) / 1000.0; }

long long to_ll(const std::string& section, const std::string& key,
                const std::string& v) {
  try {
    std::size_t pos = 0;
    long long out = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("[" + section + "] " + key + ": not an integer: " + v);
  }
}

double to_dbl(const std::string& section, const std::string& key,
              const std::string& v) {
  try {
    std::size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("[" + section + "] " + key + ": not a number: " + v);
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) +
                          ": malformed section header");
      section = line.substr(1, line.size() - 2);
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key = value");
    auto strip = [](std::string s) {
      auto a = s.find_first_not_of(" \t");
      auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    const std::string val = strip(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("line " + std::to_string(lineno) +
                        ": empty key or value");

    if (section == "topology") {
      if (key == "source") {
        if (val != "file" && val != "synth")
          throw ConfigError("[topology] source must be file or synth");
        cfg.topology_source = val;
      } else if (key == "path") {
        cfg.topology_path = val;
      } else if (key == "nodes") {
        cfg.synth_nodes = static_cast<int>(to_ll(section, key, val));
      } else if (key == "seed") {
        cfg.synth_seed = static_cast<std::uint64_t>(to_ll(section, key, val));
      } else {
        throw ConfigError("[topology] unknown key: " + key);
      }
    } else if (section == "placement") {
      if (key == "method") {
        if (val == "basp")
          cfg.placement_method = PlacementMethod::Basp;
        else if (val == "random")
          cfg.placement_method = PlacementMethod::Random;
        else
          throw ConfigError("[placement] method must be basp or random");
      } else if (key == "k") {
        cfg.k = static_cast<int>(to_ll(section, key, val));
      } else if (key == "availability_threshold") {
        cfg.availability_threshold = to_dbl(section, key, val);
      } else if (key == "seed") {
        cfg.placement_seed = static_cast<std::uint64_t>(to_ll(section, key, val));
      } else {
        throw ConfigError("[placement] unknown key: " + key);
      }
    } else if (section == "pipeline") {
      if (key == "type") {
        if (val == "hlf")
          cfg.pipeline = PipelineKind::Hlf;
        else if (val == "poa")
          cfg.pipeline = PipelineKind::Poa;
        else
          throw ConfigError("[pipeline] type must be hlf or poa");
      } else if (key == "block_size") {
        cfg.hlf.block_size = static_cast<int>(to_ll(section, key, val));
      } else if (key == "batch_timeout_ms") {
        cfg.hlf.batch_timeout_ms = to_ll(section, key, val);
      } else if (key == "endorsers") {
        cfg.hlf.endorsers = static_cast<int>(to_ll(section, key, val));
      } else if (key == "committers") {
        cfg.hlf.committers = static_cast<int>(to_ll(section, key, val));
      } else if (key == "policy_m") {
        cfg.hlf.policy_m = static_cast<int>(to_ll(section, key, val));
      } else if (key == "submit_work_ms") {
        cfg.hlf.submit_work_ms = to_dbl(section, key, val);
      } else if (key == "endorse_work_ms") {
        cfg.hlf.endorse_work_ms = to_dbl(section, key, val);
      } else if (key == "collect_work_ms") {
        cfg.hlf.collect_work_ms = to_dbl(section, key, val);
      } else if (key == "order_work_ms_per_tx") {
        cfg.hlf.order_work_ms_per_tx = to_dbl(section, key, val);
      } else if (key == "commit_work_ms_per_tx") {
        cfg.hlf.commit_work_ms_per_tx = to_dbl(section, key, val);
      } else if (key == "block_fixed_work_ms") {
        cfg.hlf.block_fixed_work_ms = to_dbl(section, key, val);
      } else if (key == "tx_bytes") {
        cfg.hlf.tx_bytes = to_ll(section, key, val);
        cfg.poa.tx_bytes = cfg.hlf.tx_bytes;
      } else if (key == "sealer_instances") {
        cfg.poa.sealer_instances = static_cast<int>(to_ll(section, key, val));
      } else if (key == "blocktime_ms") {
        cfg.poa.blocktime_ms = to_ll(section, key, val);
      } else if (key == "block_tx_limit") {
        cfg.poa.block_tx_limit = static_cast<int>(to_ll(section, key, val));
      } else if (key == "confirmations") {
        cfg.poa.confirmations = static_cast<int>(to_ll(section, key, val));
      } else if (key == "drop_horizon_blocks") {
        cfg.poa.drop_horizon_blocks = static_cast<int>(to_ll(section, key, val));
      } else if (key == "accept_work_ms") {
        cfg.poa.accept_work_ms = to_dbl(section, key, val);
      } else if (key == "seal_work_ms_per_tx") {
        cfg.poa.seal_work_ms_per_tx = to_dbl(section, key, val);
      } else if (key == "genesis") {
        cfg.poa.genesis_alloc.clear();
        std::istringstream gs(val);
        std::string part;
        while (std::getline(gs, part, ',')) {
          auto colon = part.find(':');
          if (colon == std::string::npos)
            throw ConfigError("[pipeline] genesis: expected addr:amount,...");
          cfg.poa.genesis_alloc[part.substr(0, colon)] =
              to_ll(section, key, part.substr(colon + 1));
        }
      } else {
        throw ConfigError("[pipeline] unknown key: " + key);
      }
    } else if (section == "workload") {
      if (key == "mode") {
        if (val == "parallel")
          cfg.workload.mode = WorkloadMode::Parallel;
        else if (val == "sequential")
          cfg.workload.mode = WorkloadMode::Sequential;
        else
          throw ConfigError("[workload] mode must be parallel or sequential");
      } else if (key == "count") {
        cfg.workload.n = static_cast<int>(to_ll(section, key, val));
      } else if (key == "start_ms") {
        cfg.workload.start_time_us = to_ll(section, key, val) * 1000;
      } else if (key == "function") {
        cfg.hlf_call.fn = val;
      } else if (key == "args") {
        cfg.hlf_call.args.clear();
        std::istringstream as(val);
        std::string a;
        while (as >> a) cfg.hlf_call.args.push_back(a);
      } else if (key == "from") {
        cfg.poa_from = val;
      } else if (key == "to") {
        cfg.poa_to = val;
      } else if (key == "value") {
        cfg.poa_value = to_ll(section, key, val);
      } else {
        throw ConfigError("[workload] unknown key: " + key);
      }
    } else if (section == "run") {
      if (key == "repetitions") {
        cfg.repetitions = static_cast<int>(to_ll(section, key, val));
      } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(to_ll(section, key, val));
      } else {
        throw ConfigError("[run] unknown key: " + key);
      }
    } else {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": key outside a known section: " + key);
    }
  }
  if (cfg.repetitions < 1) throw ConfigError("[run] repetitions must be >= 1");
  if (cfg.topology_source == "file" && cfg.topology_path.empty())
    throw ConfigError("[topology] path required when source = file");
  if (cfg.workload.n < 1) throw ConfigError("[workload] count must be >= 1");
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse(in);
}

MeshTopology build_topology(const ExperimentConfig& config,
                            std::uint64_t seed_offset) {
  if (config.topology_source == "file")
    return MeshTopology::load_file(config.topology_path);
  return synth_topology(config.synth_nodes, config.synth_seed + seed_offset,
                        config.profile);
}

std::vector<std::string> pipeline_roles(const ExperimentConfig& config) {
  return config.pipeline == PipelineKind::Hlf
             ? HlfParams::roles(config.hlf.endorsers, config.hlf.committers)
             : PoaParams::roles(config.poa.sealer_instances);
}

PlacementPlan build_placement(const ExperimentConfig& config,
                              const MeshTopology& topology,
                              std::uint64_t seed) {
  const auto roles = pipeline_roles(config);
  if (config.placement_method == PlacementMethod::Basp)
    return basp(topology, config.k, config.availability_threshold, seed, roles);
  return random_placement(topology, config.k, seed, roles);
}

std::map<std::string, double> recompute_aggregates(
    const std::vector<TxRow>& rows, int run) {
  std::vector<double> mid, fin;
  double min_submit = std::numeric_limits<double>::infinity();
  double max_final = -1;
  int n = 0, resolved = 0, failed = 0;
  for (const auto& r : rows) {
    if (r.run != run) continue;
    ++n;
    if (r.status == "dropped" || r.status == "rejected" ||
        r.status == "invalid")
      ++failed;
    min_submit = std::min(min_submit, r.submit_ms);
    if (r.mid_ms >= 0) mid.push_back(r.mid_ms - r.submit_ms);
    if (r.final_ms >= 0) {
      fin.push_back(r.final_ms - r.submit_ms);
      max_final = std::max(max_final, r.final_ms);
      ++resolved;
    }
  }
  auto stats = [](std::vector<double> v, const std::string& prefix,
                  std::map<std::string, double>& out) {
    if (v.empty()) return;
    std::sort(v.begin(), v.end());
    double sum = 0;
    for (double x : v) sum += x;
    out[prefix + "_mean_ms"] = sum / static_cast<double>(v.size());
    out[prefix + "_median_ms"] = v[v.size() / 2];
    out[prefix + "_min_ms"] = v.front();
    out[prefix + "_max_ms"] = v.back();
  };
  std::map<std::string, double> out;
  out["n_txs"] = n;
  out["n_resolved"] = resolved;
  out["n_failed"] = failed;
  stats(mid, "mid_latency", out);
  stats(fin, "final_latency", out);
  if (max_final >= 0 && n > 0)
    out["ttc_total_ms"] = max_final - min_submit;
  return out;
}

SingleRunOutcome run_single(const ExperimentConfig& config,
                            const MeshTopology& topology,
                            const PlacementPlan& plan, std::uint64_t seed,
                            int run_index) {
  SingleRunOutcome outcome;
  SimEngine engine(topology, seed);

  if (config.pipeline == PipelineKind::Hlf) {
    HlfSimulation sim(engine, plan, config.hlf);
    drive_hlf(engine, sim, config.workload, config.hlf_call);
    engine.run_all();
    outcome.hlf = sim.result();
    for (const auto& [id, st] : outcome.hlf.records) {
      TxRow row;
      row.run = run_index;
      row.tx_id = id;
      row.submit_ms = us_to_ms(st.submit_us);
      row.mid_ms = st.endorsed_us >= 0 ? us_to_ms(st.endorsed_us) : -1;
      row.final_ms = st.committed_us >= 0 ? us_to_ms(st.committed_us) : -1;
      if (st.committed_us >= 0)
        row.status = st.committed_valid ? "valid" : "invalid";
      else
        row.status = st.note.empty() ? "pending" : "rejected";
      outcome.report.rows.push_back(row);
    }
  } else {
    PoaSimulation sim(engine, plan, config.poa);
    drive_poa(engine, sim, config.workload, config.poa_from, config.poa_to,
              config.poa_value);
    engine.run_all();
    outcome.poa = sim.result();
    for (const auto& [id, st] : outcome.poa.records) {
      TxRow row;
      row.run = run_index;
      char buf[16];
      std::snprintf(buf, sizeof(buf), "tx%05llu",
                    static_cast<unsigned long long>(id));
      row.tx_id = buf;
      row.submit_ms = us_to_ms(st.submit_us);
      row.mid_ms = st.sealed_us >= 0 ? us_to_ms(st.sealed_us) : -1;
      row.final_ms = st.completed_us >= 0 ? us_to_ms(st.completed_us) : -1;
      if (st.dropped)
        row.status = "dropped";
      else if (st.completed_us >= 0)
        row.status = "completed";
      else
        row.status = "pending";
      outcome.report.rows.push_back(row);
    }
  }

  RunAggregates agg;
  agg.run = run_index;
  agg.values = recompute_aggregates(outcome.report.rows, run_index);
  outcome.report.aggregates.push_back(agg);
  const TimeUs window = engine.now();
  for (const auto& [node, busy] : engine.cpu_busy_us()) {
    (void)busy;
    CpuRow c;
    c.run = run_index;
    c.node = node;
    c.busy_fraction = engine.cpu_busy_fraction(node, window);
    outcome.report.cpu.push_back(c);
  }
  outcome.trace = engine.dump_trace();
  return outcome;
}

MetricsReport run_experiment(const ExperimentConfig& config) {
  MetricsReport report;
  MeshTopology topology = build_topology(config);
  for (int r = 0; r < config.repetitions; ++r) {
    const std::uint64_t run_seed = config.seed + static_cast<std::uint64_t>(r);
    PlacementPlan plan = build_placement(
        config, topology,
        config.placement_seed + static_cast<std::uint64_t>(r));
    SingleRunOutcome outcome = run_single(config, topology, plan, run_seed, r);
    for (auto& row : outcome.report.rows) report.rows.push_back(row);
    for (auto& agg : outcome.report.aggregates) report.aggregates.push_back(agg);
    for (auto& cpu : outcome.report.cpu) report.cpu.push_back(cpu);
    if (r == 0) report.trace = outcome.trace;
  }
  // averaged aggregates across repetitions, reported as run = -1
  if (config.repetitions > 1) {
    RunAggregates avg;
    avg.run = -1;
    std::map<std::string, std::pair<double, int>> acc;
    for (const auto& a : report.aggregates)
      for (const auto& [k, v] : a.values) {
        acc[k].first += v;
        acc[k].second += 1;
      }
    for (const auto& [k, sv] : acc)
      avg.values[k] = sv.first / static_cast<double>(sv.second);
    report.aggregates.push_back(avg);
  }
  return report;
}

std::vector<ComparisonRow> compare_placements(const ExperimentConfig& config,
                                              int seeds) {
  if (seeds < 1) throw ConfigError("compare requires seeds >= 1");
  std::vector<ComparisonRow> rows;
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(s);
    MeshTopology topology =
        build_topology(config, static_cast<std::uint64_t>(s));
    const auto roles = pipeline_roles(config);
    PlacementPlan basp_plan =
        basp(topology, config.k, config.availability_threshold,
             config.placement_seed + static_cast<std::uint64_t>(s), roles);
    PlacementPlan random_plan = random_placement(
        topology, config.k, config.placement_seed + static_cast<std::uint64_t>(s),
        roles);
    auto latency_of = [&](const PlacementPlan& plan) {
      SingleRunOutcome out = run_single(config, topology, plan, seed, 0);
      const auto& vals = out.report.aggregates.front().values;
      // primary latency: commit latency for HLF, sealing time for PoA
      const char* key = config.pipeline == PipelineKind::Hlf
                            ? "final_latency_mean_ms"
                            : "mid_latency_mean_ms";
      auto it = vals.find(key);
      if (it == vals.end())
        throw ConfigError(std::string("comparison metric missing: ") + key);
      return it->second;
    };
    ComparisonRow row;
    row.seed = seed;
    row.basp_latency_ms = latency_of(basp_plan);
    row.random_latency_ms = latency_of(random_plan);
    row.gain_pct = row.random_latency_ms > 0
                       ? (row.random_latency_ms - row.basp_latency_ms) /
                             row.random_latency_ms * 100.0
                       : 0.0;
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::string metrics_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "schema_version,1\n";
  out << "section,run,id,submit_ms,mid_ms,final_ms,status\n";
  for (const auto& r : report.rows)
    out << "tx," << r.run << "," << r.tx_id << "," << fmt(r.submit_ms) << ","
        << fmt(r.mid_ms) << "," << fmt(r.final_ms) << "," << r.status << "\n";
  for (const auto& a : report.aggregates)
    for (const auto& [k, v] : a.values)
      out << "agg," << a.run << "," << k << "," << fmt(v) << ",,,\n";
  for (const auto& c : report.cpu)
    out << "cpu," << c.run << "," << c.node << "," << fmt(c.busy_fraction)
        << ",,,\n";
  return out.str();
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "schema_version,1\n";
  out << "seed,basp_latency_ms,random_latency_ms,gain_pct\n";
  for (const auto& r : rows)
    out << r.seed << "," << fmt(r.basp_latency_ms) << ","
        << fmt(r.random_latency_ms) << "," << fmt(r.gain_pct) << "\n";
  return out.str();
}

}  // namespace blockmesh
