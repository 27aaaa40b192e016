#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "blockmesh/engine.hpp"
#include "blockmesh/placement.hpp"

namespace blockmesh {

struct PoaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EthTx {
  std::uint64_t id = 0;
  std::string from;
  std::string to;
  long long value = 0;
  std::uint64_t nonce = 0;
  TimeUs submit_time_us = 0;
};

struct PoaBlock {
  std::uint64_t number = 0;
  std::uint64_t prev_hash = 0;
  std::uint64_t hash = 0;
  int sealer_instance = 0;  // round-robin turn that sealed it
  std::string sealer_node;
  TimeUs seal_time_us = 0;
  std::vector<EthTx> txs;
};

std::uint64_t poa_block_digest(const PoaBlock& b);
bool verify_poa_chain(const std::vector<PoaBlock>& chain);

struct PoaParams {
  int sealer_instances = 1;
  std::int64_t blocktime_ms = 5000;
  int block_tx_limit = 300;  // gas-limit analog
  int confirmations = 12;
  int drop_horizon_blocks = 50;
  double accept_work_ms = 20.0;  // entry-node cost per accepted tx
  double seal_work_ms_per_tx = 1.0;
  std::int64_t tx_bytes = 256;
  std::int64_t block_overhead_bytes = 512;
  std::map<std::string, long long> genesis_alloc;

  static std::vector<std::string> roles(int sealer_instances);
};

struct PoaTxStatus {
  TimeUs submit_us = -1;
  TimeUs sealed_us = -1;
  TimeUs completed_us = -1;  // 12th confirmation
  std::uint64_t block_number = 0;
  bool included = false;
  bool dropped = false;
  std::string note;
};

struct PoaRunResult {
  std::vector<PoaBlock> chain;  // index 0 is the empty genesis block
  std::map<std::uint64_t, PoaTxStatus> records;
  std::map<std::string, long long> balances;  // incrementally maintained
  int dropped_count = 0;
};

// Replays included txs from genesis through `height` (inclusive block
// number) and returns the balance of `address`.
long long replay_balance(const std::vector<PoaBlock>& chain,
                         const std::map<std::string, long long>& genesis,
                         const std::string& address, std::uint64_t height);

// Blocks sealed after the tx's block; throws if the tx is still pending.
std::uint64_t confirmation_depth(const PoaRunResult& r, std::uint64_t tx_id);

// Account pool + strict round-robin sealing at integer blocktime boundaries.
// A single authorized sealer account runs `sealer_instances` replicas, so
// forks are structurally impossible.
class PoaSimulation {
public:
  PoaSimulation(SimEngine& engine, const PlacementPlan& plan,
                const PoaParams& params);

  // Submit at the client/entry node; nonce assigned per sender in
  // submission order. Must run inside an engine event or before the run.
  std::uint64_t submit_transfer(const std::string& from, const std::string& to,
                                long long value);

  // fired on completion (12 confirmations) or drop
  void set_on_tx_final(std::function<void(std::uint64_t)> fn) {
    on_tx_final_ = std::move(fn);
  }

  PoaRunResult result() const;

private:
  void ensure_sealing_scheduled();
  void seal_boundary();
  bool work_remaining() const;

  SimEngine& engine_;
  PoaParams params_;
  std::string entry_node_;
  std::vector<std::string> sealer_nodes_;  // instance i -> node

  std::uint64_t next_tx_ = 0;
  std::map<std::string, std::uint64_t> next_nonce_;
  std::map<std::uint64_t, EthTx> txs_;
  std::map<std::uint64_t, PoaTxStatus> records_;

  std::map<std::string, std::deque<std::uint64_t>> pools_;  // node -> tx ids
  std::set<std::uint64_t> resolved_;  // included or dropped
  std::vector<PoaBlock> chain_;
  std::map<std::string, long long> balances_;
  std::map<std::string, std::uint64_t> account_nonce_;
  std::uint64_t last_inclusion_block_ = 0;
  std::uint64_t unresolved_ = 0;
  bool seal_scheduled_ = false;
  int dropped_count_ = 0;

  std::function<void(std::uint64_t)> on_tx_final_;
};

}  // namespace blockmesh
