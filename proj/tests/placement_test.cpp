#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "blockmesh/placement.hpp"
#include "blockmesh/rng.hpp"
#include "blockmesh/topology.hpp"

using namespace blockmesh;

namespace {

NodeSpec node(std::string id, double lat, double lon, double cpu = 1.0,
              double avail = 1.0) {
  return {std::move(id), lat, lon, cpu, avail};
}

// hub-and-spoke: every spoke connects only to the hub
MeshTopology star(const std::vector<NodeSpec>& nodes,
                  const std::vector<double>& spoke_bw) {
  std::vector<LinkSpec> links;
  for (std::size_t i = 1; i < nodes.size(); ++i)
    links.push_back({nodes[0].id, nodes[i].id, spoke_bw[i - 1], 1, 0});
  return MeshTopology::from_parts(nodes, links);
}

MeshTopology line(int n) {
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  for (int i = 0; i < n; ++i)
    nodes.push_back(node("L" + std::to_string(i), 0, i));
  for (int i = 1; i < n; ++i)
    links.push_back({nodes[i - 1].id, nodes[i].id, 10, 1, 0});
  return MeshTopology::from_parts(nodes, links);
}

}  // namespace

TEST_CASE("kmeans with k=1 groups everything, centroid is the mean") {
  std::vector<NodeSpec> nodes{node("A", 0, 0), node("B", 0, 2), node("C", 3, 4)};
  auto cs = kmeans_geo(nodes, 1, 0.0, 1);
  REQUIRE(cs.clusters.size() == 1);
  CHECK(cs.clusters[0] == std::vector<std::string>{"A", "B", "C"});
  CHECK(cs.centroids[0].first == doctest::Approx(1.0));
  CHECK(cs.centroids[0].second == doctest::Approx(2.0));
}

TEST_CASE("kmeans drops nodes below the availability threshold") {
  std::vector<NodeSpec> nodes{node("A", 0, 0, 1, 0.99), node("B", 0, 1, 1, 0.5),
                              node("C", 0, 2, 1, 0.96)};
  auto cs = kmeans_geo(nodes, 1, 0.95, 1);
  CHECK(cs.clusters[0] == std::vector<std::string>{"A", "C"});
  CHECK_THROWS_WITH_AS(kmeans_geo(nodes, 3, 0.95, 1),
                       doctest::Contains("availability threshold"),
                       PlacementError);
  CHECK_THROWS_AS(kmeans_geo(nodes, 0, 0.0, 1), PlacementError);
}

TEST_CASE("kmeans separates two distant blobs exactly") {
  std::vector<NodeSpec> nodes;
  DetRng rng(11);
  for (int i = 0; i < 8; ++i)
    nodes.push_back(node("a" + std::to_string(i), rng.uniform01() * 0.1,
                         rng.uniform01() * 0.1));
  for (int i = 0; i < 8; ++i)
    nodes.push_back(node("b" + std::to_string(i), 10 + rng.uniform01() * 0.1,
                         10 + rng.uniform01() * 0.1));
  auto cs = kmeans_geo(nodes, 2, 0.0, 1);
  REQUIRE(cs.clusters.size() == 2);
  // clusters come back ordered by smallest member id
  CHECK(cs.clusters[0].size() == 8);
  CHECK(cs.clusters[1].size() == 8);
  for (const auto& id : cs.clusters[0]) CHECK(id[0] == 'a');
  for (const auto& id : cs.clusters[1]) CHECK(id[0] == 'b');
}

TEST_CASE("kmeans output is a Lloyd fixed point") {
  std::vector<NodeSpec> nodes;
  DetRng rng(42);
  for (int i = 0; i < 30; ++i)
    nodes.push_back(node("n" + std::to_string(100 + i), rng.uniform01() * 5,
                         rng.uniform01() * 5));
  std::map<std::string, std::pair<double, double>> pos;
  for (const auto& n : nodes) pos[n.id] = {n.lat, n.lon};

  for (int k : {2, 3, 5}) {
    auto cs = kmeans_geo(nodes, k, 0.0, 1);
    std::size_t total = 0;
    for (std::size_t c = 0; c < cs.clusters.size(); ++c) {
      total += cs.clusters[c].size();
      // reported centroid is the member mean
      double slat = 0, slon = 0;
      for (const auto& id : cs.clusters[c]) {
        slat += pos[id].first;
        slon += pos[id].second;
      }
      const double m = static_cast<double>(cs.clusters[c].size());
      CHECK(cs.centroids[c].first == doctest::Approx(slat / m));
      CHECK(cs.centroids[c].second == doctest::Approx(slon / m));
      // every member is at least as close to its own centroid
      for (const auto& id : cs.clusters[c]) {
        auto d2 = [&](std::size_t cc) {
          const double dl = pos[id].first - cs.centroids[cc].first;
          const double dn = pos[id].second - cs.centroids[cc].second;
          return dl * dl + dn * dn;
        };
        for (std::size_t other = 0; other < cs.clusters.size(); ++other)
          CHECK(d2(c) <= d2(other) + 1e-12);
      }
    }
    CHECK(total == nodes.size());
  }
}

TEST_CASE("basp phase 2/3 on a hand-computed star") {
  // spoke bandwidths: a=10 b=10 d=10 e=2, hub c
  // mean bottleneck scores: a=b=c=d=8, e=2; band keeps {a,b,c,d}
  std::vector<NodeSpec> nodes{node("c", 0, 0, 1.0, 0.96), node("a", 0, 1, 1.0, 0.99),
                              node("b", 0, 2, 1.2, 0.98), node("d", 0, 3, 1.1, 0.99),
                              node("e", 0, 4, 3.0, 1.0)};
  auto t = star(nodes, {10, 10, 10, 2});
  auto sites = basp_sites(t, 1, 0.0, 1);
  REQUIRE(sites.size() == 1);
  // e has the best availability*cpu but sits outside the retention band
  CHECK(sites[0] == "b");  // 0.98 * 1.2 beats a, c, d
}

TEST_CASE("basp quality ties resolve to the smaller id") {
  std::vector<NodeSpec> nodes{node("c", 0, 0, 1.0, 0.5), node("a", 0, 1, 1.0, 0.9),
                              node("b", 0, 2, 0.9, 1.0), node("d", 0, 3, 1.0, 0.9)};
  auto t = star(nodes, {10, 10, 10});
  auto sites = basp_sites(t, 1, 0.0, 1);
  CHECK(sites[0] == "a");  // a and d both score 0.9
}

TEST_CASE("basp singleton cluster places its only member") {
  std::vector<NodeSpec> nodes{node("far", 50, 50, 1, 1), node("p", 0, 0, 1, 1),
                              node("q", 0, 0.001, 1, 1)};
  std::vector<LinkSpec> links{{"p", "q", 10, 1, 0}, {"far", "p", 1, 30, 0}};
  auto t = MeshTopology::from_parts(nodes, links);
  auto sites = basp_sites(t, 2, 0.0, 1);
  REQUIRE(sites.size() == 2);
  CHECK(std::find(sites.begin(), sites.end(), "far") != sites.end());
}

TEST_CASE("basp sites respect the availability threshold") {
  auto t = synth_topology(60, 3);
  auto sites = basp_sites(t, 4, 0.95, 7);
  REQUIRE(sites.size() == 4);
  for (const auto& id : sites) CHECK(t.node(id).availability >= 0.95);
}

TEST_CASE("random placement is near-uniform over seeds") {
  auto t = line(10);
  std::map<std::string, int> count;
  const int trials = 10000;
  for (int s = 0; s < trials; ++s) {
    auto plan = random_placement(t, 1, static_cast<std::uint64_t>(s), {"client"});
    ++count[plan.node_for("client")];
  }
  CHECK(count.size() == 10);
  for (const auto& [id, c] : count)
    CHECK(std::abs(c / static_cast<double>(trials) - 0.1) < 0.01);
}

TEST_CASE("random placement picks k distinct nodes") {
  auto t = line(6);
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto plan = random_placement(t, 4, s, {"r0", "r1", "r2", "r3"});
    std::vector<std::string> picked;
    for (const auto& [role, n] : plan.role_assignment) picked.push_back(n);
    std::sort(picked.begin(), picked.end());
    CHECK(std::adjacent_find(picked.begin(), picked.end()) == picked.end());
  }
  CHECK_THROWS_AS(random_placement(t, 7, 1, {"x"}), PlacementError);
}

TEST_CASE("roles wrap round-robin over sites") {
  auto plan = assign_roles(PlacementMethod::Basp, 2, {"s0", "s1"},
                           {"client", "endorser#1", "orderer", "committer#1"});
  CHECK(plan.node_for("client") == "s0");
  CHECK(plan.node_for("endorser#1") == "s1");
  CHECK(plan.node_for("orderer") == "s0");
  CHECK(plan.node_for("committer#1") == "s1");
  CHECK_THROWS_AS(plan.node_for("nope"), PlacementError);
}

TEST_CASE("plan save/load round-trip") {
  auto t = line(8);
  auto plan = basp(t, 3, 0.0, 5, {"client", "sealer#1", "sealer#2"});
  std::ostringstream out;
  plan.save(out);
  std::istringstream in(out.str());
  auto back = PlacementPlan::load(in);
  CHECK(back.method == plan.method);
  CHECK(back.k == plan.k);
  CHECK(back.role_assignment == plan.role_assignment);
}

TEST_CASE("placement determinism") {
  auto t = synth_topology(40, 9);
  auto roles = {std::string("client"), std::string("orderer")};
  auto a = basp(t, 3, 0.9, 21, roles);
  auto b = basp(t, 3, 0.9, 21, roles);
  CHECK(a.role_assignment == b.role_assignment);
  auto r1 = random_placement(t, 5, 77, roles);
  auto r2 = random_placement(t, 5, 77, roles);
  CHECK(r1.role_assignment == r2.role_assignment);
}
