#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "blockmesh/topology.hpp"

namespace blockmesh {

struct PlacementError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ClusterSet {
  std::vector<std::vector<std::string>> clusters;  // each sorted by id
  std::vector<std::pair<double, double>> centroids;  // (lat, lon)
};

enum class PlacementMethod { Basp, Random };

struct PlacementPlan {
  PlacementMethod method = PlacementMethod::Basp;
  int k = 1;
  // ordered (role instance, node id); role order is the declaration order
  std::vector<std::pair<std::string, std::string>> role_assignment;

  const std::string& node_for(const std::string& role) const;
  void save(std::ostream& out) const;
  static PlacementPlan load(std::istream& in);
};

// Lloyd k-means on (lat, lon) after dropping nodes below the availability
// threshold. Farthest-point seeding from the smallest node id; the seed only
// breaks exact distance ties.
ClusterSet kmeans_geo(const std::vector<NodeSpec>& nodes, int k,
                      double availability_threshold, std::uint64_t seed);

// Three-phase bandwidth/availability-aware site selection. Returns one site
// per cluster in cluster order; assign_roles maps a role list onto sites.
std::vector<std::string> basp_sites(const MeshTopology& t, int k,
                                    double availability_threshold,
                                    std::uint64_t seed);

PlacementPlan basp(const MeshTopology& t, int k, double availability_threshold,
                   std::uint64_t seed, const std::vector<std::string>& roles);

PlacementPlan random_placement(const MeshTopology& t, int k,
                               std::uint64_t seed,
                               const std::vector<std::string>& roles);

PlacementPlan assign_roles(PlacementMethod method, int k,
                           const std::vector<std::string>& sites,
                           const std::vector<std::string>& roles);

}  // namespace blockmesh
