#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace blockmesh {

struct TopologyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NodeSpec {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  double cpu_capacity = 1.0;   // 1.0 == reference RPi3-class node
  double availability = 1.0;   // fraction in [0,1]
};

struct LinkSpec {
  std::string a;
  std::string b;
  double bandwidth_mbps = 0.0;
  double latency_ms = 0.0;
  double loss = 0.0;  // carried but unused by the delay model in v1
};

// Immutable connected mesh graph. All queries are pure; instances can be
// shared across concurrently running simulations.
class MeshTopology {
public:
  static MeshTopology from_parts(std::vector<NodeSpec> nodes,
                                 std::vector<LinkSpec> links);
  static MeshTopology load(std::istream& in);
  static MeshTopology load_file(const std::string& path);

  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;

  const std::vector<NodeSpec>& nodes() const { return nodes_; }
  const std::vector<LinkSpec>& links() const { return links_; }

  bool has_node(const std::string& id) const;
  const NodeSpec& node(const std::string& id) const;
  const std::vector<std::string>& neighbors(const std::string& id) const;
  const LinkSpec& link_between(const std::string& a,
                               const std::string& b) const;

  // Minimum-hop path; ties broken by the lexicographically smallest node-id
  // sequence so replays are deterministic. shortest_path(a, a) == [a].
  std::vector<std::string> shortest_path(const std::string& a,
                                         const std::string& b) const;

  // Bandwidth of the weakest link on shortest_path(a, b). a == b is an error.
  double path_bandwidth(const std::string& a, const std::string& b) const;

  // Sum over links of latency + serialization time, in integer microseconds.
  std::int64_t transfer_delay_us(const std::vector<std::string>& path,
                                 std::int64_t message_bytes) const;

  // max over all other nodes of path_bandwidth(id, other)
  double best_path_bandwidth(const std::string& id) const;

private:
  MeshTopology() = default;
  std::size_t index_of(const std::string& id) const;

  std::vector<NodeSpec> nodes_;  // sorted by id
  std::vector<LinkSpec> links_;  // endpoints normalized a < b, sorted
  std::map<std::string, std::size_t> node_index_;
  std::map<std::string, std::vector<std::string>> adjacency_;  // sorted lists
  std::map<std::pair<std::string, std::string>, std::size_t> link_index_;
};

// Distribution parameters for the synthetic generator. The defaults target
// the QMPSU-style profile: skewed long-tailed link bandwidths with a mean
// near 13.6 Mbps and a majority of nodes capped at 10 Mbps or less.
struct SynthProfile {
  double backbone_fraction = 0.35;
  double area_deg = 0.05;            // square side, degrees
  double backbone_radius_deg = 0.009;
  double leaf_extra_link_prob = 0.25;
  double leaf_bw_median_mbps = 5.5;
  double leaf_bw_sigma = 0.25;
  double backbone_bw_mean_mbps = 26.0;
  double backbone_bw_sigma = 0.25;
  double latency_min_ms = 1.0;
  double latency_max_ms = 6.0;
  double leaf_cpu_min = 0.4, leaf_cpu_max = 1.2;
  double backbone_cpu_min = 1.0, backbone_cpu_max = 2.0;
  double leaf_avail_min = 0.85, leaf_avail_max = 1.0;
  double backbone_avail_min = 0.95, backbone_avail_max = 1.0;
  double origin_lat = 41.40;
  double origin_lon = 2.15;
};

MeshTopology synth_topology(int n, std::uint64_t seed,
                            const SynthProfile& profile = {});

}  // namespace blockmesh
