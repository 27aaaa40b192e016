#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include "blockmesh/engine.hpp"
#include "blockmesh/hlf.hpp"
#include "blockmesh/placement.hpp"
#include "blockmesh/topology.hpp"

using namespace blockmesh;

namespace {

MeshTopology grid() {
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  for (int i = 0; i < 6; ++i)
    nodes.push_back({"n" + std::to_string(i), 0, static_cast<double>(i), 1.0, 1});
  for (int i = 1; i < 6; ++i)
    links.push_back({nodes[i - 1].id, nodes[i].id, 10, 1, 0});
  return MeshTopology::from_parts(nodes, links);
}

PlacementPlan plan_for(const std::vector<std::string>& roles) {
  PlacementPlan plan;
  plan.k = static_cast<int>(roles.size());
  for (std::size_t i = 0; i < roles.size(); ++i)
    plan.role_assignment.emplace_back(roles[i], "n" + std::to_string(i));
  return plan;
}

// rebuild a store from the committed chain, honoring validity flags
VersionedStore replay_chain(const std::vector<HlfBlock>& chain) {
  VersionedStore s;
  for (const auto& b : chain) {
    REQUIRE(b.valid.size() == b.txs.size());
    for (std::size_t i = 0; i < b.txs.size(); ++i)
      if (b.valid[i]) s.apply(b.txs[i].rwset);
  }
  return s;
}

}  // namespace

TEST_CASE("sendMoney writes one composite key and reads nothing") {
  VersionedStore store;
  auto rw = execute_chaincode(store, {"sendMoney", {"alice", "25", "+"}}, "t1");
  CHECK(rw.reads.empty());
  REQUIRE(rw.writes.size() == 1);
  CHECK(rw.writes[0].first == "delta~alice~+~25~t1");
  CHECK(rw.writes[0].second == "1");

  CHECK_THROWS_AS(execute_chaincode(store, {"sendMoney", {"a", "0", "+"}}, "t"),
                  HlfError);
  CHECK_THROWS_AS(execute_chaincode(store, {"sendMoney", {"a", "5", "*"}}, "t"),
                  HlfError);
  CHECK_THROWS_AS(execute_chaincode(store, {"sendMoney", {"a", "x", "+"}}, "t"),
                  HlfError);
  CHECK_THROWS_AS(execute_chaincode(store, {"sendMoney", {"a"}}, "t"), HlfError);
  CHECK_THROWS_AS(execute_chaincode(store, {"mintMoney", {"a", "1", "+"}}, "t"),
                  HlfError);
}

TEST_CASE("rmwMoney reads the balance version it writes against") {
  VersionedStore store;
  auto rw1 = execute_chaincode(store, {"rmwMoney", {"bob", "10", "+"}}, "t1");
  REQUIRE(rw1.reads.size() == 1);
  CHECK(rw1.reads[0] == std::pair<std::string, std::uint64_t>{"bal~bob", 0});
  CHECK(rw1.writes[0] == std::pair<std::string, std::string>{"bal~bob", "10"});
  store.apply(rw1);
  CHECK(store.version("bal~bob") == 1);

  auto rw2 = execute_chaincode(store, {"rmwMoney", {"bob", "3", "-"}}, "t2");
  CHECK(rw2.reads[0].second == 1);
  CHECK(rw2.writes[0].second == "7");
}

TEST_CASE("aggregate_delta sums signed composite keys") {
  VersionedStore store;
  store.apply(execute_chaincode(store, {"sendMoney", {"a", "10", "+"}}, "t1"));
  store.apply(execute_chaincode(store, {"sendMoney", {"a", "4", "-"}}, "t2"));
  store.apply(execute_chaincode(store, {"sendMoney", {"a", "7", "+"}}, "t3"));
  store.apply(execute_chaincode(store, {"sendMoney", {"b", "100", "+"}}, "t4"));
  CHECK(aggregate_delta(store, "a") == 13);
  CHECK(aggregate_delta(store, "b") == 100);
  CHECK(aggregate_delta(store, "nobody") == 0);
}

TEST_CASE("store digest reflects content") {
  VersionedStore a, b;
  a.apply({{}, {{"k", "1"}}});
  b.apply({{}, {{"k", "1"}}});
  CHECK(a.digest() == b.digest());
  b.apply({{}, {{"k", "1"}}});  // same value, higher version
  CHECK(a.digest() != b.digest());
}

TEST_CASE("chain verification catches tampering") {
  std::vector<HlfBlock> chain;
  std::uint64_t prev = 0;
  for (int i = 0; i < 3; ++i) {
    HlfBlock b;
    b.seq = static_cast<std::uint64_t>(i);
    b.prev_hash = prev;
    HlfTx tx;
    tx.tx_id = "t" + std::to_string(i);
    tx.call = {"sendMoney", {"a", "1", "+"}};
    tx.rwset = execute_chaincode(VersionedStore{}, tx.call, tx.tx_id);
    tx.endorsement_count = 1;
    b.txs.push_back(tx);
    b.hash = hlf_block_digest(b);
    prev = b.hash;
    chain.push_back(b);
  }
  CHECK(verify_hlf_chain(chain));

  auto tampered = chain;
  tampered[1].txs[0].call.args[1] = "999";
  CHECK_FALSE(verify_hlf_chain(tampered));

  auto relinked = chain;
  relinked[2].prev_hash ^= 1;
  relinked[2].hash = hlf_block_digest(relinked[2]);
  CHECK_FALSE(verify_hlf_chain(relinked));
}

TEST_CASE("roles list matches the peer layout") {
  CHECK(HlfParams::roles(2, 1) ==
        std::vector<std::string>{"client", "endorser#1", "endorser#2", "orderer",
                                 "committer#1"});
}

TEST_CASE("parallel sendMoney batch commits fully valid") {
  auto t = grid();
  SimEngine eng(t, 1);
  HlfParams params;
  params.block_size = 5;
  params.batch_timeout_ms = 60000;
  // fast constants keep the unit runs short
  params.endorse_work_ms = 5;
  params.commit_work_ms_per_tx = 2;
  auto plan = plan_for(HlfParams::roles(1, 1));
  HlfSimulation sim(eng, plan, params);
  std::vector<std::string> ids;
  eng.schedule_at(0, "n0", "workload", "", [&] {
    for (int i = 0; i < 10; ++i)
      ids.push_back(sim.submit_tx({"sendMoney", {"acct", "5", "+"}}));
  });
  eng.run_all();

  auto res = sim.result();
  CHECK(res.valid_count == 10);
  CHECK(res.invalid_count == 0);
  REQUIRE(res.chain.size() == 2);  // two full blocks of 5
  CHECK(res.chain[0].txs.size() == 5);
  CHECK(res.chain[1].txs.size() == 5);
  CHECK(verify_hlf_chain(res.chain));

  for (const auto& id : ids) {
    const auto& rec = res.records.at(id);
    CHECK(rec.submit_us == 0);
    CHECK(rec.endorsed_us > rec.submit_us);
    CHECK(rec.committed_us > rec.endorsed_us);
    CHECK(rec.committed_valid);
  }

  // every peer ends at the same state, equal to the chain replay
  auto replayed = replay_chain(res.chain);
  std::set<std::uint64_t> digests;
  for (const auto& [role, d] : res.peer_store_digests) digests.insert(d);
  CHECK(digests == std::set<std::uint64_t>{replayed.digest()});
  CHECK(aggregate_delta(replayed, "acct") == 50);
}

TEST_CASE("rmwMoney conflicts invalidate all but the first per block") {
  auto t = grid();
  SimEngine eng(t, 1);
  HlfParams params;
  params.block_size = 5;
  params.batch_timeout_ms = 60000;
  params.endorse_work_ms = 5;
  params.commit_work_ms_per_tx = 2;
  auto plan = plan_for(HlfParams::roles(1, 1));
  HlfSimulation sim(eng, plan, params);
  eng.schedule_at(0, "n0", "workload", "", [&] {
    for (int i = 0; i < 5; ++i) sim.submit_tx({"rmwMoney", {"acct", "5", "+"}});
  });
  eng.run_all();

  auto res = sim.result();
  // all five read version 0; the first commit bumps it, the rest fail MVCC
  CHECK(res.valid_count == 1);
  CHECK(res.invalid_count == 4);
  int invalid_notes = 0;
  for (const auto& [id, rec] : res.records)
    if (rec.note == "mvcc-invalid") ++invalid_notes;
  CHECK(invalid_notes == 4);
  auto replayed = replay_chain(res.chain);
  CHECK(*replayed.value("bal~acct") == "5");
}

TEST_CASE("endorsement policy m of n stamps m endorsers") {
  auto t = grid();
  SimEngine eng(t, 1);
  HlfParams params;
  params.endorsers = 2;
  params.policy_m = 2;
  params.block_size = 1;
  params.endorse_work_ms = 5;
  params.commit_work_ms_per_tx = 2;
  auto plan = plan_for(HlfParams::roles(2, 1));
  HlfSimulation sim(eng, plan, params);
  std::string id;
  eng.schedule_at(0, "n0", "workload", "",
                  [&] { id = sim.submit_tx({"sendMoney", {"a", "1", "+"}}); });
  eng.run_all();

  auto res = sim.result();
  CHECK(res.valid_count == 1);
  REQUIRE(res.chain.size() == 1);
  CHECK(res.chain[0].txs[0].endorsement_count == 2);
  CHECK(res.chain[0].txs[0].endorsed_by ==
        std::vector<std::string>{"endorser#1", "endorser#2"});

  CHECK_THROWS_AS(
      ([&] {
        HlfParams bad;
        bad.endorsers = 1;
        bad.policy_m = 2;
        HlfSimulation s2(eng, plan, bad);
      }()),
      HlfError);
}

TEST_CASE("malformed calls are rejected before ordering") {
  auto t = grid();
  SimEngine eng(t, 1);
  HlfParams params;
  params.endorse_work_ms = 5;
  auto plan = plan_for(HlfParams::roles(1, 1));
  HlfSimulation sim(eng, plan, params);
  std::string id;
  bool final_valid = true;
  sim.set_on_tx_final([&](const std::string&, bool ok) { final_valid = ok; });
  eng.schedule_at(0, "n0", "workload", "",
                  [&] { id = sim.submit_tx({"sendMoney", {"a", "1", "*"}}); });
  eng.run_all();

  auto res = sim.result();
  CHECK_FALSE(final_valid);
  CHECK(res.chain.empty());
  CHECK(res.records.at(id).note == "rejected");
  CHECK(res.records.at(id).committed_us == -1);
}

TEST_CASE("a resubmitted tx id commits only once") {
  auto t = grid();
  SimEngine eng(t, 1);
  HlfParams params;
  params.block_size = 1;
  params.endorse_work_ms = 5;
  params.commit_work_ms_per_tx = 2;
  auto plan = plan_for(HlfParams::roles(1, 1));
  HlfSimulation sim(eng, plan, params);
  eng.schedule_at(0, "n0", "workload", "", [&] {
    sim.submit_tx({"sendMoney", {"a", "1", "+"}}, "dup");
    sim.submit_tx({"sendMoney", {"a", "1", "+"}}, "dup");
  });
  eng.run_all();

  auto res = sim.result();
  int appearances = 0;
  for (const auto& b : res.chain)
    for (const auto& tx : b.txs)
      if (tx.tx_id == "dup") ++appearances;
  CHECK(appearances == 1);
  CHECK(res.valid_count == 1);
}

TEST_CASE("batch timeout cuts a short block") {
  auto t = grid();
  SimEngine eng(t, 1);
  HlfParams params;
  params.block_size = 10;
  params.batch_timeout_ms = 500;
  params.endorse_work_ms = 5;
  params.commit_work_ms_per_tx = 2;
  auto plan = plan_for(HlfParams::roles(1, 1));
  HlfSimulation sim(eng, plan, params);
  eng.schedule_at(0, "n0", "workload", "", [&] {
    for (int i = 0; i < 3; ++i) sim.submit_tx({"sendMoney", {"a", "1", "+"}});
  });
  eng.run_all();

  auto res = sim.result();
  REQUIRE(res.chain.size() == 1);
  CHECK(res.chain[0].txs.size() == 3);
  CHECK(res.valid_count == 3);
  // the block waited out the timeout instead of filling up
  CHECK(res.chain[0].created_us >= 500000);
}

TEST_CASE("pipeline runs are deterministic") {
  auto t = grid();
  auto run_once = [&] {
    SimEngine eng(t, 9);
    HlfParams params;
    params.block_size = 4;
    params.endorse_work_ms = 5;
    params.commit_work_ms_per_tx = 2;
    auto plan = plan_for(HlfParams::roles(1, 1));
    HlfSimulation sim(eng, plan, params);
    eng.schedule_at(0, "n0", "workload", "", [&] {
      for (int i = 0; i < 8; ++i) sim.submit_tx({"sendMoney", {"a", "2", "+"}});
    });
    eng.run_all();
    return eng.dump_trace();
  };
  CHECK(run_once() == run_once());
}
