#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <vector>

#include "blockmesh/engine.hpp"
#include "blockmesh/topology.hpp"

using namespace blockmesh;

namespace {

MeshTopology two_nodes() {
  std::vector<NodeSpec> nodes{{"A", 0, 0, 1.0, 1}, {"B", 0, 1, 2.0, 1}};
  std::vector<LinkSpec> links{{"A", "B", 10, 2, 0}};
  return MeshTopology::from_parts(nodes, links);
}

}  // namespace

TEST_CASE("events fire in time order, ties in scheduling order") {
  auto t = two_nodes();
  SimEngine eng(t, 1);
  std::vector<int> order;
  eng.schedule_at(50, "A", "x", "", [&] { order.push_back(3); });
  eng.schedule_at(10, "A", "x", "", [&] { order.push_back(1); });
  eng.schedule_at(50, "A", "x", "", [&] { order.push_back(4); });
  eng.schedule_at(20, "A", "x", "", [&] { order.push_back(2); });
  eng.run_all();
  CHECK(order == std::vector<int>{1, 2, 3, 4});
  CHECK(eng.now() == 50);
}

TEST_CASE("scheduling in the past is an error") {
  auto t = two_nodes();
  SimEngine eng(t, 1);
  eng.schedule_at(100, "A", "x", "", [&] {
    CHECK_THROWS_AS(eng.schedule_at(99, "A", "x", "", [] {}), SimError);
    eng.schedule_at(100, "A", "x", "", [] {});  // same instant is fine
  });
  eng.run_all();
}

TEST_CASE("events created during execution interleave correctly") {
  auto t = two_nodes();
  SimEngine eng(t, 1);
  std::vector<int> order;
  eng.schedule_at(10, "A", "x", "", [&] {
    order.push_back(1);
    eng.schedule_at(15, "A", "x", "", [&] { order.push_back(2); });
  });
  eng.schedule_at(20, "A", "x", "", [&] { order.push_back(3); });
  eng.run_all();
  CHECK(order == std::vector<int>{1, 2, 3});
}

TEST_CASE("send_message uses the path transfer delay") {
  auto t = two_nodes();
  SimEngine eng(t, 1);
  TimeUs arrived = -1;
  // 1250 B over 10 Mbps is 1 ms, plus 2 ms link latency
  eng.send_message("A", "B", 1250, "msg", "", [&] { arrived = eng.now(); });
  eng.run_all();
  CHECK(arrived == 3000);

  TimeUs self = -1;
  eng.schedule_at(5000, "A", "x", "", [&] {
    eng.send_message("A", "A", 999999, "msg", "", [&] { self = eng.now(); });
  });
  eng.run_all();
  CHECK(self == 5000);
}

TEST_CASE("run_cpu scales service by cpu_capacity") {
  auto t = two_nodes();
  SimEngine eng(t, 1);
  // 100 ms of work: node A at 1.0 takes 100 ms, node B at 2.0 takes 50 ms
  CHECK(eng.run_cpu("A", 100, "w", "", [] {}) == 100000);
  CHECK(eng.run_cpu("B", 100, "w", "", [] {}) == 50000);
  eng.run_all();
}

TEST_CASE("cpu requests queue FIFO without overlap") {
  auto t = two_nodes();
  SimEngine eng(t, 1);
  std::vector<TimeUs> done;
  for (int i = 0; i < 5; ++i)
    eng.run_cpu("A", 10, "w", "", [&] { done.push_back(eng.now()); });
  eng.run_all();
  CHECK(done == std::vector<TimeUs>{10000, 20000, 30000, 40000, 50000});

  // a request issued mid-run waits for the queue to drain
  SimEngine eng2(t, 1);
  TimeUs late_done = -1;
  eng2.run_cpu("A", 100, "w", "", [] {});
  eng2.schedule_at(30000, "A", "tick", "", [&] {
    eng2.run_cpu("A", 10, "w", "", [&] { late_done = eng2.now(); });
  });
  eng2.run_all();
  CHECK(late_done == 110000);
}

TEST_CASE("cpu idle gaps do not accumulate busy time") {
  auto t = two_nodes();
  SimEngine eng(t, 1);
  eng.run_cpu("A", 10, "w", "", [] {});
  eng.schedule_at(100000, "A", "tick", "",
                  [&] { eng.run_cpu("A", 10, "w", "", [] {}); });
  eng.run_all();
  CHECK(eng.cpu_busy_us()["A"] == 20000);
  CHECK(eng.cpu_busy_fraction("A", 200000) == doctest::Approx(0.1));
  CHECK(eng.cpu_busy_fraction("B", 200000) == 0.0);
}

TEST_CASE("trace records every fired event in order") {
  auto t = two_nodes();
  SimEngine eng(t, 1);
  eng.schedule_at(5, "A", "alpha", "d1", [] {});
  eng.schedule_at(3, "B", "beta", "d2", [] {});
  eng.run_all();
  REQUIRE(eng.trace().size() == 2);
  CHECK(eng.trace()[0].kind == "beta");
  CHECK(eng.trace()[1].kind == "alpha");
  CHECK(eng.dump_trace() == "3 B beta d2\n5 A alpha d1\n");
}

TEST_CASE("run_until stops at the boundary") {
  auto t = two_nodes();
  SimEngine eng(t, 1);
  int fired = 0;
  eng.schedule_at(10, "A", "x", "", [&] { ++fired; });
  eng.schedule_at(20, "A", "x", "", [&] { ++fired; });
  eng.schedule_at(21, "A", "x", "", [&] { ++fired; });
  eng.run_until(20);
  CHECK(fired == 2);
  eng.run_all();
  CHECK(fired == 3);
}

TEST_CASE("identical seeds give identical traces") {
  auto t = synth_topology(20, 4);
  auto drive = [&](std::uint64_t seed) {
    SimEngine eng(t, seed);
    std::function<void(int)> hop = [&](int depth) {
      if (depth == 0) return;
      const auto& nodes = eng.topology().nodes();
      const auto& from = nodes[eng.rng().uniform_index(nodes.size())].id;
      const auto& to = nodes[eng.rng().uniform_index(nodes.size())].id;
      eng.send_message(from, to, 500 + static_cast<std::int64_t>(
                                           eng.rng().uniform01() * 4000),
                       "hop", std::to_string(depth), [&, depth] {
                         eng.run_cpu(to, eng.rng().uniform01() * 20, "work", "",
                                     [&, depth] { hop(depth - 1); });
                       });
    };
    hop(40);
    eng.run_all();
    return eng.dump_trace();
  };
  CHECK(drive(7) == drive(7));
  CHECK(drive(7) != drive(8));
}
