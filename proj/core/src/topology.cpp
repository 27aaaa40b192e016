#include "blockmesh/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

#include "blockmesh/rng.hpp"

namespace blockmesh {

namespace {

std::pair<std::string, std::string> norm_pair(const std::string& a,
                                              const std::string& b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

MeshTopology MeshTopology::from_parts(std::vector<NodeSpec> nodes,
                                      std::vector<LinkSpec> links) {
  MeshTopology t;
  std::sort(nodes.begin(), nodes.end(),
            [](const NodeSpec& x, const NodeSpec& y) { return x.id < y.id; });
  for (const auto& n : nodes) {
    if (t.node_index_.count(n.id))
      throw TopologyError("duplicate node id: " + n.id);
    if (!(n.cpu_capacity > 0.0))
      throw TopologyError("node " + n.id + ": cpu_capacity must be > 0");
    if (n.availability < 0.0 || n.availability > 1.0)
      throw TopologyError("node " + n.id + ": availability outside [0,1]");
    t.node_index_[n.id] = t.nodes_.size();
    t.nodes_.push_back(n);
    t.adjacency_[n.id];  // ensure entry
  }
  if (t.nodes_.empty()) throw TopologyError("topology has no nodes");

  for (auto& l : links) {
    if (l.a == l.b)
      throw TopologyError("self-link on node " + l.a);
    if (!t.node_index_.count(l.a) || !t.node_index_.count(l.b))
      throw TopologyError("link references unknown node: " + l.a + " " + l.b);
    if (!(l.bandwidth_mbps > 0.0))
      throw TopologyError("link " + l.a + "-" + l.b + ": bandwidth must be > 0");
    if (l.latency_ms < 0.0)
      throw TopologyError("link " + l.a + "-" + l.b + ": negative latency");
    if (l.loss < 0.0 || l.loss >= 1.0)
      throw TopologyError("link " + l.a + "-" + l.b + ": loss outside [0,1)");
    auto key = norm_pair(l.a, l.b);
    if (t.link_index_.count(key))
      throw TopologyError("parallel link between " + l.a + " and " + l.b);
    LinkSpec stored = l;
    stored.a = key.first;
    stored.b = key.second;
    t.link_index_[key] = t.links_.size();
    t.links_.push_back(stored);
    t.adjacency_[key.first].push_back(key.second);
    t.adjacency_[key.second].push_back(key.first);
  }
  std::sort(t.links_.begin(), t.links_.end(),
            [](const LinkSpec& x, const LinkSpec& y) {
              return std::tie(x.a, x.b) < std::tie(y.a, y.b);
            });
  t.link_index_.clear();
  for (std::size_t i = 0; i < t.links_.size(); ++i)
    t.link_index_[norm_pair(t.links_[i].a, t.links_[i].b)] = i;
  for (auto& [id, adj] : t.adjacency_) std::sort(adj.begin(), adj.end());

  // connectivity check (BFS from first node)
  if (t.nodes_.size() > 1) {
    std::map<std::string, bool> seen;
    std::deque<std::string> q{t.nodes_.front().id};
    seen[t.nodes_.front().id] = true;
    std::size_t count = 1;
    while (!q.empty()) {
      auto cur = q.front();
      q.pop_front();
      for (const auto& nb : t.adjacency_.at(cur)) {
        if (!seen[nb]) {
          seen[nb] = true;
          ++count;
          q.push_back(nb);
        }
      }
    }
    if (count != t.nodes_.size())
      throw TopologyError("topology graph is not connected");
  }
  return t;
}

MeshTopology MeshTopology::load(std::istream& in) {
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  std::string line;
  int lineno = 0;
  enum class Section { None, Nodes, Links } section = Section::None;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;  // blank
    if (first == "[nodes]") {
      section = Section::Nodes;
      continue;
    }
    if (first == "[links]") {
      section = Section::Links;
      continue;
    }
    if (section == Section::Nodes) {
      NodeSpec n;
      n.id = first;
      if (!(ls >> n.lat >> n.lon >> n.cpu_capacity >> n.availability))
        throw TopologyError("parse error at line " + std::to_string(lineno) +
                            ": expected 'id lat lon cpu availability'");
      nodes.push_back(n);
    } else if (section == Section::Links) {
      LinkSpec l;
      l.a = first;
      if (!(ls >> l.b >> l.bandwidth_mbps >> l.latency_ms >> l.loss))
        throw TopologyError("parse error at line " + std::to_string(lineno) +
                            ": expected 'id_a id_b bandwidth latency loss'");
      links.push_back(l);
    } else {
      throw TopologyError("parse error at line " + std::to_string(lineno) +
                          ": record before [nodes]/[links] section");
    }
  }
  return from_parts(std::move(nodes), std::move(links));
}

MeshTopology MeshTopology::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TopologyError("cannot open topology file: " + path);
  return load(in);
}

void MeshTopology::save(std::ostream& out) const {
  out << "[nodes]\n";
  char buf[256];
  for (const auto& n : nodes_) {
    std::snprintf(buf, sizeof(buf), "%s %.6f %.6f %.4f %.4f\n", n.id.c_str(),
                  n.lat, n.lon, n.cpu_capacity, n.availability);
    out << buf;
  }
  out << "[links]\n";
  for (const auto& l : links_) {
    std::snprintf(buf, sizeof(buf), "%s %s %.4f %.4f %.4f\n", l.a.c_str(),
                  l.b.c_str(), l.bandwidth_mbps, l.latency_ms, l.loss);
    out << buf;
  }
}

void MeshTopology::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw TopologyError("cannot write topology file: " + path);
  save(out);
}

std::size_t MeshTopology::index_of(const std::string& id) const {
  auto it = node_index_.find(id);
  if (it == node_index_.end()) throw TopologyError("unknown node id: " + id);
  return it->second;
}

bool MeshTopology::has_node(const std::string& id) const {
  return node_index_.count(id) != 0;
}

const NodeSpec& MeshTopology::node(const std::string& id) const {
  return nodes_[index_of(id)];
}

const std::vector<std::string>& MeshTopology::neighbors(
    const std::string& id) const {
  index_of(id);
  return adjacency_.at(id);
}

const LinkSpec& MeshTopology::link_between(const std::string& a,
                                           const std::string& b) const {
  auto it = link_index_.find(norm_pair(a, b));
  if (it == link_index_.end())
    throw TopologyError("no link between " + a + " and " + b);
  return links_[it->second];
}

std::vector<std::string> MeshTopology::shortest_path(
    const std::string& a, const std::string& b) const {
  index_of(a);
  index_of(b);
  if (a == b) return {a};
  // hop distances to b, then greedy walk from a picking the smallest-id
  // neighbor that makes progress: yields the lexicographically smallest
  // minimum-hop node-id sequence
  std::map<std::string, int> dist;
  dist[b] = 0;
  std::deque<std::string> q{b};
  while (!q.empty()) {
    auto cur = q.front();
    q.pop_front();
    for (const auto& nb : adjacency_.at(cur)) {
      if (!dist.count(nb)) {
        dist[nb] = dist[cur] + 1;
        q.push_back(nb);
      }
    }
  }
  auto it = dist.find(a);
  if (it == dist.end())
    throw TopologyError("no path from " + a + " to " + b);
  std::vector<std::string> path{a};
  std::string cur = a;
  int d = it->second;
  while (cur != b) {
    for (const auto& nb : adjacency_.at(cur)) {  // sorted, so first hit wins
      auto dit = dist.find(nb);
      if (dit != dist.end() && dit->second == d - 1) {
        cur = nb;
        --d;
        path.push_back(cur);
        break;
      }
    }
  }
  return path;
}

double MeshTopology::path_bandwidth(const std::string& a,
                                    const std::string& b) const {
  if (a == b)
    throw TopologyError("path_bandwidth undefined for a == b (" + a + ")");
  auto path = shortest_path(a, b);
  double bw = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    bw = std::min(bw, link_between(path[i], path[i + 1]).bandwidth_mbps);
  return bw;
}

std::int64_t MeshTopology::transfer_delay_us(
    const std::vector<std::string>& path, std::int64_t message_bytes) const {
  std::int64_t total = 0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const LinkSpec& l = link_between(path[i], path[i + 1]);
    // bits / (Mbps * 1e6 bit/s) seconds == bits / Mbps microseconds
    const double bits = static_cast<double>(message_bytes) * 8.0;
    total += std::llround(l.latency_ms * 1000.0);
    total += std::llround(bits / l.bandwidth_mbps);
  }
  return total;
}

double MeshTopology::best_path_bandwidth(const std::string& id) const {
  double best = 0.0;
  for (const auto& other : nodes_) {
    if (other.id == id) continue;
    best = std::max(best, path_bandwidth(id, other.id));
  }
  return best;
}

namespace {

double sq_dist(double ax, double ay, double bx, double by) {
  return (ax - bx) * (ax - bx) + (ay - by) * (ay - by);
}

}  // namespace

MeshTopology synth_topology(int n, std::uint64_t seed,
                            const SynthProfile& p) {
  if (n < 2) throw TopologyError("synth_topology requires n >= 2");
  DetRng rng(seed);

  const int n_backbone =
      std::max(1, static_cast<int>(std::lround(p.backbone_fraction * n)));
  auto make_id = [n](int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "n%03d", i);
    return std::string(buf);
  };

  std::vector<NodeSpec> nodes(static_cast<std::size_t>(n));
  std::vector<double> px(static_cast<std::size_t>(n)),
      py(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const bool backbone = i < n_backbone;
    px[i] = rng.uniform(0.0, p.area_deg);
    py[i] = rng.uniform(0.0, p.area_deg);
    NodeSpec& node = nodes[static_cast<std::size_t>(i)];
    node.id = make_id(i);
    node.lat = p.origin_lat + px[i];
    node.lon = p.origin_lon + py[i];
    if (backbone) {
      node.cpu_capacity = rng.uniform(p.backbone_cpu_min, p.backbone_cpu_max);
      node.availability =
          rng.uniform(p.backbone_avail_min, p.backbone_avail_max);
    } else {
      node.cpu_capacity = rng.uniform(p.leaf_cpu_min, p.leaf_cpu_max);
      node.availability = rng.uniform(p.leaf_avail_min, p.leaf_avail_max);
    }
  }

  const double leaf_bw_mu = std::log(p.leaf_bw_median_mbps);
  const double bb_bw_mu = std::log(p.backbone_bw_mean_mbps) -
                          p.backbone_bw_sigma * p.backbone_bw_sigma / 2.0;

  std::vector<LinkSpec> links;
  auto add_link = [&](int i, int j, bool backbone_class) {
    LinkSpec l;
    l.a = make_id(i);
    l.b = make_id(j);
    l.bandwidth_mbps =
        backbone_class
            ? rng.lognormal(bb_bw_mu, p.backbone_bw_sigma)
            : rng.lognormal(leaf_bw_mu, p.leaf_bw_sigma);
    l.latency_ms = rng.uniform(p.latency_min_ms, p.latency_max_ms);
    l.loss = 0.0;
    links.push_back(l);
  };

  // backbone: geometric graph, patched into one component via nearest pairs
  const double r2 = p.backbone_radius_deg * p.backbone_radius_deg;
  for (int i = 0; i < n_backbone; ++i)
    for (int j = i + 1; j < n_backbone; ++j)
      if (sq_dist(px[i], py[i], px[j], py[j]) <= r2) add_link(i, j, true);

  {
    std::vector<int> comp(static_cast<std::size_t>(n_backbone), -1);
    auto flood = [&](int start, int c) {
      std::deque<int> q{start};
      comp[start] = c;
      while (!q.empty()) {
        int cur = q.front();
        q.pop_front();
        for (const auto& l : links) {
          int a = std::stoi(l.a.substr(1));
          int b = std::stoi(l.b.substr(1));
          if (a >= n_backbone || b >= n_backbone) continue;
          int other = -1;
          if (a == cur) other = b;
          else if (b == cur) other = a;
          if (other >= 0 && comp[other] == -1) {
            comp[other] = c;
            q.push_back(other);
          }
        }
      }
    };
    for (;;) {
      std::fill(comp.begin(), comp.end(), -1);
      int ncomp = 0;
      for (int i = 0; i < n_backbone; ++i)
        if (comp[i] == -1) flood(i, ncomp++);
      if (ncomp <= 1) break;
      // join component 0 to its nearest foreign node
      double best = std::numeric_limits<double>::infinity();
      int bi = -1, bj = -1;
      for (int i = 0; i < n_backbone; ++i) {
        if (comp[i] != 0) continue;
        for (int j = 0; j < n_backbone; ++j) {
          if (comp[j] == 0) continue;
          double d = sq_dist(px[i], py[i], px[j], py[j]);
          if (d < best) {
            best = d;
            bi = i;
            bj = j;
          }
        }
      }
      add_link(bi, bj, true);
    }
  }

  // each leaf attaches to its nearest backbone node, sometimes a second
  for (int i = n_backbone; i < n; ++i) {
    int nearest = 0, second = -1;
    double dn = std::numeric_limits<double>::infinity(), ds = dn;
    for (int j = 0; j < n_backbone; ++j) {
      double d = sq_dist(px[i], py[i], px[j], py[j]);
      if (d < dn) {
        second = nearest;
        ds = dn;
        nearest = j;
        dn = d;
      } else if (d < ds) {
        second = j;
        ds = d;
      }
    }
    add_link(i, nearest, false);
    if (second >= 0 && second != nearest &&
        rng.uniform01() < p.leaf_extra_link_prob)
      add_link(i, second, false);
  }

  return MeshTopology::from_parts(std::move(nodes), std::move(links));
}

}  // namespace blockmesh
