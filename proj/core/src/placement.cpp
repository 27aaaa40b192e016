#include "blockmesh/placement.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "blockmesh/rng.hpp"

namespace blockmesh {

const std::string& PlacementPlan::node_for(const std::string& role) const {
  for (const auto& [r, n] : role_assignment)
    if (r == role) return n;
  throw PlacementError("role not in plan: " + role);
}

void PlacementPlan::save(std::ostream& out) const {
  out << "# method "
      << (method == PlacementMethod::Basp ? "basp" : "random") << " k " << k
      << "\n";
  for (const auto& [role, node] : role_assignment)
    out << role << " " << node << "\n";
}

PlacementPlan PlacementPlan::load(std::istream& in) {
  PlacementPlan plan;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string role, node;
    if (line.rfind("# method", 0) == 0) {
      std::string hash, kw, method, kkw;
      ls >> hash >> kw >> method >> kkw >> plan.k;
      plan.method = method == "random" ? PlacementMethod::Random
                                       : PlacementMethod::Basp;
      continue;
    }
    if (!(ls >> role >> node)) continue;
    plan.role_assignment.emplace_back(role, node);
  }
  return plan;
}

namespace {

double sq(double x) { return x * x; }

double point_dist2(double alat, double alon, double blat, double blon) {
  return sq(alat - blat) + sq(alon - blon);
}

}  // namespace

ClusterSet kmeans_geo(const std::vector<NodeSpec>& all_nodes, int k,
                      double availability_threshold, std::uint64_t seed) {
  if (k < 1) throw PlacementError("k must be >= 1");
  std::vector<NodeSpec> nodes;
  for (const auto& n : all_nodes)
    if (n.availability >= availability_threshold) nodes.push_back(n);
  std::sort(nodes.begin(), nodes.end(),
            [](const NodeSpec& a, const NodeSpec& b) { return a.id < b.id; });
  const std::size_t m = nodes.size();
  if (m < static_cast<std::size_t>(k))
    throw PlacementError(
        "fewer than k nodes meet the availability threshold: " +
        std::to_string(m) + " < " + std::to_string(k));

  DetRng rng(seed);

  // farthest-point seeding from the smallest id
  std::vector<std::pair<double, double>> centroids;
  centroids.emplace_back(nodes[0].lat, nodes[0].lon);
  while (centroids.size() < static_cast<std::size_t>(k)) {
    std::vector<std::size_t> best_ix;
    double best_d = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
      double d = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids)
        d = std::min(d, point_dist2(nodes[i].lat, nodes[i].lon, c.first,
                                    c.second));
      if (d > best_d) {
        best_d = d;
        best_ix = {i};
      } else if (d == best_d) {
        best_ix.push_back(i);
      }
    }
    std::size_t pick =
        best_ix.size() == 1
            ? best_ix[0]
            : best_ix[rng.uniform_index(best_ix.size())];
    centroids.emplace_back(nodes[pick].lat, nodes[pick].lon);
  }

  std::vector<int> assign(m, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < m; ++i) {
      int best_c = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double d = point_dist2(nodes[i].lat, nodes[i].lon,
                               centroids[static_cast<std::size_t>(c)].first,
                               centroids[static_cast<std::size_t>(c)].second);
        if (d < best_d) {  // ties keep the lowest cluster index
          best_d = d;
          best_c = c;
        }
      }
      if (assign[i] != best_c) {
        assign[i] = best_c;
        changed = true;
      }
    }
    // recompute centroids; an emptied cluster re-seeds at its farthest point
    std::vector<double> slat(static_cast<std::size_t>(k), 0.0),
        slon(static_cast<std::size_t>(k), 0.0);
    std::vector<int> cnt(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < m; ++i) {
      slat[static_cast<std::size_t>(assign[i])] += nodes[i].lat;
      slon[static_cast<std::size_t>(assign[i])] += nodes[i].lon;
      ++cnt[static_cast<std::size_t>(assign[i])];
    }
    for (int c = 0; c < k; ++c) {
      if (cnt[static_cast<std::size_t>(c)] > 0) {
        centroids[static_cast<std::size_t>(c)] = {
            slat[static_cast<std::size_t>(c)] / cnt[static_cast<std::size_t>(c)],
            slon[static_cast<std::size_t>(c)] / cnt[static_cast<std::size_t>(c)]};
      } else {
        std::size_t far_i = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < m; ++i) {
          double d = point_dist2(
              nodes[i].lat, nodes[i].lon,
              centroids[static_cast<std::size_t>(assign[i])].first,
              centroids[static_cast<std::size_t>(assign[i])].second);
          if (d > far_d) {
            far_d = d;
            far_i = i;
          }
        }
        centroids[static_cast<std::size_t>(c)] = {nodes[far_i].lat,
                                                  nodes[far_i].lon};
        changed = true;
      }
    }
    if (!changed) break;
  }

  ClusterSet cs;
  cs.clusters.assign(static_cast<std::size_t>(k), {});
  for (std::size_t i = 0; i < m; ++i)
    cs.clusters[static_cast<std::size_t>(assign[i])].push_back(nodes[i].id);
  // order clusters by smallest member id, drop the geometry ordering
  std::vector<std::size_t> order(static_cast<std::size_t>(k));
  for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ca = cs.clusters[a];
    const auto& cb = cs.clusters[b];
    if (ca.empty() || cb.empty()) return cb.empty() && !ca.empty();
    return ca.front() < cb.front();
  });
  ClusterSet out;
  for (std::size_t c : order) {
    out.clusters.push_back(cs.clusters[c]);
    out.centroids.push_back(centroids[c]);
  }
  return out;
}

std::vector<std::string> basp_sites(const MeshTopology& t, int k,
                                    double availability_threshold,
                                    std::uint64_t seed) {
  ClusterSet cs = kmeans_geo(t.nodes(), k, availability_threshold, seed);
  std::vector<std::string> sites;
  for (const auto& cluster : cs.clusters) {
    // phase 2: mean bottleneck bandwidth to the rest of the cluster
    std::vector<std::pair<std::string, double>> scores;
    double best = 0.0;
    for (const auto& id : cluster) {
      double score;
      if (cluster.size() == 1) {
        score = std::numeric_limits<double>::infinity();
      } else {
        double sum = 0.0;
        for (const auto& other : cluster) {
          if (other == id) continue;
          sum += t.path_bandwidth(id, other);
        }
        score = sum / static_cast<double>(cluster.size() - 1);
      }
      scores.emplace_back(id, score);
      best = std::max(best, score);
    }
    // phase 3: among nodes within 90% of the cluster-best score, take the
    // highest availability * cpu product (ties -> smaller id)
    std::string pick;
    double pick_quality = -1.0;
    for (const auto& [id, score] : scores) {
      const bool retained =
          std::isinf(best) ? std::isinf(score) : score >= 0.9 * best;
      if (!retained) continue;
      const NodeSpec& n = t.node(id);
      const double quality = n.availability * n.cpu_capacity;
      if (quality > pick_quality || (quality == pick_quality && id < pick)) {
        pick_quality = quality;
        pick = id;
      }
    }
    sites.push_back(pick);
  }
  return sites;
}

PlacementPlan assign_roles(PlacementMethod method, int k,
                           const std::vector<std::string>& sites,
                           const std::vector<std::string>& roles) {
  if (sites.empty()) throw PlacementError("no placement sites");
  PlacementPlan plan;
  plan.method = method;
  plan.k = k;
  for (std::size_t i = 0; i < roles.size(); ++i)
    plan.role_assignment.emplace_back(roles[i], sites[i % sites.size()]);
  return plan;
}

PlacementPlan basp(const MeshTopology& t, int k, double availability_threshold,
                   std::uint64_t seed, const std::vector<std::string>& roles) {
  return assign_roles(PlacementMethod::Basp, k,
                      basp_sites(t, k, availability_threshold, seed), roles);
}

PlacementPlan random_placement(const MeshTopology& t, int k,
                               std::uint64_t seed,
                               const std::vector<std::string>& roles) {
  if (static_cast<std::size_t>(k) > t.nodes().size())
    throw PlacementError("k exceeds node count");
  std::vector<std::string> ids;
  for (const auto& n : t.nodes()) ids.push_back(n.id);
  DetRng rng(seed);
  // partial Fisher-Yates: first k entries are the sample
  for (int i = 0; i < k; ++i) {
    std::size_t j = static_cast<std::size_t>(i) +
                    rng.uniform_index(ids.size() - static_cast<std::size_t>(i));
    std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
  }
  ids.resize(static_cast<std::size_t>(k));
  return assign_roles(PlacementMethod::Random, k, ids, roles);
}

}  // namespace blockmesh
