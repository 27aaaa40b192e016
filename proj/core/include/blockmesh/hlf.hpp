#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "blockmesh/engine.hpp"
#include "blockmesh/placement.hpp"

namespace blockmesh {

struct HlfError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- ledger state ----

struct RwSet {
  std::vector<std::pair<std::string, std::uint64_t>> reads;   // key, version
  std::vector<std::pair<std::string, std::string>> writes;    // key, value
  std::string canonical() const;
};

struct VersionedStore {
  // key -> (value, version); version counts committed writes to the key
  std::map<std::string, std::pair<std::string, std::uint64_t>> kv;

  std::uint64_t version(const std::string& key) const;
  const std::string* value(const std::string& key) const;
  void apply(const RwSet& rwset);
  std::uint64_t digest() const;
};

struct ChaincodeCall {
  std::string fn;
  std::vector<std::string> args;
};

// Simulates the call against the store without mutating it and captures the
// read/write set. Supported functions:
//   sendMoney(name, value, op)  append-only delta under a composite key,
//                               reads nothing (conflict-free under MVCC)
//   rmwMoney(name, value, op)   classic read-modify-write on a balance key
RwSet execute_chaincode(const VersionedStore& store, const ChaincodeCall& call,
                        const std::string& tx_id);

// Sum of '+' deltas minus '-' deltas recorded for `name` by sendMoney.
long long aggregate_delta(const VersionedStore& store, const std::string& name);

// ---- blocks ----

struct HlfTx {
  std::string tx_id;
  std::string client;
  ChaincodeCall call;
  TimeUs submit_time_us = 0;
  RwSet rwset;
  int endorsement_count = 0;
  std::vector<std::string> endorsed_by;
};

struct HlfBlock {
  std::uint64_t seq = 0;
  std::uint64_t prev_hash = 0;
  std::uint64_t hash = 0;
  TimeUs created_us = 0;
  std::vector<HlfTx> txs;
  std::vector<char> valid;  // filled at commit, same order as txs
};

std::uint64_t hlf_block_digest(const HlfBlock& b);
// true iff every block's stored hash matches its contents and prev_hash links
bool verify_hlf_chain(const std::vector<HlfBlock>& chain);

// ---- pipeline ----

struct HlfParams {
  int block_size = 10;
  std::int64_t batch_timeout_ms = 1000;
  int endorsers = 1;
  int committers = 1;  // dedicated committing peers beyond the endorsers
  int policy_m = 1;    // m of `endorsers`
  double submit_work_ms = 2.0;
  double endorse_work_ms = 600.0;
  double collect_work_ms = 2.0;
  double order_work_ms_per_tx = 2.0;
  double commit_work_ms_per_tx = 220.0;
  double block_fixed_work_ms = 5.0;
  std::int64_t proposal_bytes = 1024;
  std::int64_t endorsement_bytes = 2048;
  std::int64_t tx_bytes = 3072;
  std::int64_t block_overhead_bytes = 512;

  static std::vector<std::string> roles(int endorsers, int committers);
};

struct HlfTxStatus {
  TimeUs submit_us = -1;
  TimeUs endorsed_us = -1;   // endorsement policy satisfied at the client
  TimeUs committed_us = -1;  // committed at the anchor peer
  bool committed_valid = false;
  std::string note;
};

struct HlfRunResult {
  std::map<std::string, HlfTxStatus> records;
  std::vector<HlfBlock> chain;  // anchor peer's chain
  std::map<std::string, std::uint64_t> peer_store_digests;  // role -> digest
  int valid_count = 0;
  int invalid_count = 0;
};

// Client / endorser / orderer / committer state machines wired into one
// engine. Peers are role instances; several may share a physical node.
class HlfSimulation {
public:
  HlfSimulation(SimEngine& engine, const PlacementPlan& plan,
                const HlfParams& params);

  // Must be called from inside an engine event (or before the run starts).
  // forced_id is for exercising the endorser-side uniqueness check; normal
  // submissions auto-assign unique ids.
  std::string submit_tx(const ChaincodeCall& call,
                        const std::string& forced_id = "");

  // Invoked when a tx reaches its final state at the anchor peer (committed
  // valid/invalid) or is rejected before ordering.
  void set_on_tx_final(std::function<void(const std::string&, bool)> fn) {
    on_tx_final_ = std::move(fn);
  }

  HlfRunResult result() const;

private:
  struct Peer {
    std::string role;
    std::string node;
    bool endorses = false;
    VersionedStore store;
    std::vector<HlfBlock> chain;
    std::uint64_t height = 0;  // next expected block seq
    std::map<std::uint64_t, HlfBlock> held;
    bool committing = false;
    std::set<std::string> seen_tx_ids;  // endorser-side uniqueness check
  };

  struct PendingTx {
    HlfTx tx;
    int responses = 0;
    int rejections = 0;
    // canonical rwset -> endorser roles that produced it
    std::map<std::string, std::vector<std::string>> groups;
    bool decided = false;
  };

  void deliver_proposal(std::size_t peer_ix, HlfTx tx);
  void deliver_response(const std::string& tx_id, const std::string& endorser,
                        bool ok, const RwSet& rwset);
  void orderer_receive(HlfTx tx);
  void cut_block();
  void deliver_block(std::size_t peer_ix, HlfBlock block);
  void try_commit(std::size_t peer_ix);
  void finalize_tx(const std::string& tx_id, bool valid);

  SimEngine& engine_;
  HlfParams params_;
  std::string client_node_;
  std::string orderer_node_;
  std::vector<Peer> peers_;
  std::size_t anchor_ix_ = 0;

  std::uint64_t next_tx_ = 0;
  std::map<std::string, PendingTx> pending_;
  std::map<std::string, HlfTxStatus> records_;

  // orderer state
  std::vector<HlfTx> batch_;
  std::uint64_t batch_epoch_ = 0;
  std::uint64_t next_block_seq_ = 0;
  std::uint64_t orderer_prev_hash_ = 0;

  std::function<void(const std::string&, bool)> on_tx_final_;
};

}  // namespace blockmesh
