#include "blockmesh/poa.hpp"

#include <algorithm>

#include "blockmesh/hash.hpp"

namespace blockmesh {

std::uint64_t poa_block_digest(const PoaBlock& b) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = fnv1a64(std::to_string(b.number), h);
  h = fnv1a64(hex64(b.prev_hash), h);
  h = fnv1a64(std::to_string(b.sealer_instance), h);
  for (const auto& tx : b.txs) {
    h = fnv1a64(std::to_string(tx.id), h);
    h = fnv1a64(tx.from, h);
    h = fnv1a64(tx.to, h);
    h = fnv1a64(std::to_string(tx.value), h);
    h = fnv1a64(std::to_string(tx.nonce), h);
  }
  return h;
}

bool verify_poa_chain(const std::vector<PoaBlock>& chain) {
  std::uint64_t prev = 0;
  for (const auto& b : chain) {
    if (b.prev_hash != prev) return false;
    if (poa_block_digest(b) != b.hash) return false;
    prev = b.hash;
  }
  return true;
}

long long replay_balance(const std::vector<PoaBlock>& chain,
                         const std::map<std::string, long long>& genesis,
                         const std::string& address, std::uint64_t height) {
  if (!genesis.count(address)) {
    bool known = false;
    for (const auto& b : chain)
      for (const auto& tx : b.txs)
        if (tx.from == address || tx.to == address) known = true;
    if (!known) throw PoaError("unknown address: " + address);
  }
  auto it = genesis.find(address);
  long long bal = it == genesis.end() ? 0 : it->second;
  for (const auto& b : chain) {
    if (b.number > height) break;
    for (const auto& tx : b.txs) {
      if (tx.from == address) bal -= tx.value;
      if (tx.to == address) bal += tx.value;
    }
  }
  return bal;
}

std::uint64_t confirmation_depth(const PoaRunResult& r, std::uint64_t tx_id) {
  auto it = r.records.find(tx_id);
  if (it == r.records.end() || !it->second.included)
    throw PoaError("tx pending: not yet included in any block");
  return r.chain.back().number - it->second.block_number;
}

std::vector<std::string> PoaParams::roles(int sealer_instances) {
  std::vector<std::string> r{"client"};
  for (int i = 1; i <= sealer_instances; ++i)
    r.push_back("sealer#" + std::to_string(i));
  return r;
}

PoaSimulation::PoaSimulation(SimEngine& engine, const PlacementPlan& plan,
                             const PoaParams& params)
    : engine_(engine), params_(params) {
  if (params_.sealer_instances < 1)
    throw PoaError("at least one sealer instance required");
  entry_node_ = plan.node_for("client");
  for (int i = 1; i <= params_.sealer_instances; ++i)
    sealer_nodes_.push_back(plan.node_for("sealer#" + std::to_string(i)));
  balances_ = params_.genesis_alloc;
  // genesis block 0, sealed at t=0 by convention
  PoaBlock genesis;
  genesis.number = 0;
  genesis.prev_hash = 0;
  genesis.hash = poa_block_digest(genesis);
  chain_.push_back(genesis);
}

std::uint64_t PoaSimulation::submit_transfer(const std::string& from,
                                             const std::string& to,
                                             long long value) {
  if (!balances_.count(from)) throw PoaError("unknown account: " + from);
  if (!balances_.count(to)) throw PoaError("unknown account: " + to);
  EthTx tx;
  tx.id = next_tx_++;
  tx.from = from;
  tx.to = to;
  tx.value = value;
  tx.nonce = next_nonce_[from]++;
  tx.submit_time_us = engine_.now();
  txs_[tx.id] = tx;
  records_[tx.id].submit_us = engine_.now();
  ++unresolved_;

  // the entry node knows the tx immediately; forwarding to the sealers costs
  // entry CPU (the saturation source) plus mesh transfer time
  pools_[entry_node_].push_back(tx.id);
  engine_.run_cpu(entry_node_, params_.accept_work_ms, "service-completion",
                  "accept tx" + std::to_string(tx.id), [this, id = tx.id]() {
                    for (const auto& sealer : sealer_nodes_) {
                      if (sealer == entry_node_) continue;
                      engine_.send_message(
                          entry_node_, sealer, params_.tx_bytes,
                          "message-arrival", "pending-tx " + std::to_string(id),
                          [this, sealer, id]() {
                            pools_[sealer].push_back(id);
                          });
                    }
                  });
  ensure_sealing_scheduled();
  return tx.id;
}

void PoaSimulation::ensure_sealing_scheduled() {
  if (seal_scheduled_) return;
  const TimeUs blocktime_us = params_.blocktime_ms * 1000;
  const TimeUs next_boundary =
      (engine_.now() / blocktime_us + 1) * blocktime_us;
  seal_scheduled_ = true;
  engine_.schedule_at(next_boundary, sealer_nodes_[0], "timer", "seal-boundary",
                      [this]() { seal_boundary(); });
}

bool PoaSimulation::work_remaining() const {
  if (unresolved_ > 0) return true;
  // keep sealing until every included tx has its confirmations
  return chain_.back().number < last_inclusion_block_ + params_.confirmations &&
         last_inclusion_block_ > 0;
}

void PoaSimulation::seal_boundary() {
  seal_scheduled_ = false;
  const TimeUs blocktime_us = params_.blocktime_ms * 1000;
  const std::uint64_t number = chain_.back().number + 1;
  const int instance =
      static_cast<int>((number - 1) % static_cast<std::uint64_t>(
                                          params_.sealer_instances));
  const std::string& node = sealer_nodes_[static_cast<std::size_t>(instance)];

  PoaBlock block;
  block.number = number;
  block.prev_hash = chain_.back().hash;
  block.sealer_instance = instance;
  block.sealer_node = node;
  block.seal_time_us = engine_.now();

  auto& pool = pools_[node];
  std::deque<std::uint64_t> keep;
  for (std::uint64_t id : pool) {
    if (resolved_.count(id)) continue;
    const EthTx& tx = txs_.at(id);
    const std::uint64_t submit_block =
        static_cast<std::uint64_t>(tx.submit_time_us / blocktime_us);
    if (number - submit_block > static_cast<std::uint64_t>(
                                    params_.drop_horizon_blocks)) {
      records_[id].dropped = true;
      records_[id].note = "dropped: not included within " +
                          std::to_string(params_.drop_horizon_blocks) +
                          " blocks";
      resolved_.insert(id);
      --unresolved_;
      ++dropped_count_;
      if (on_tx_final_) on_tx_final_(id);
      continue;
    }
    if (static_cast<int>(block.txs.size()) >= params_.block_tx_limit) {
      keep.push_back(id);
      continue;
    }
    if (tx.nonce != account_nonce_[tx.from]) {
      keep.push_back(id);  // out of nonce order, retry next block
      continue;
    }
    if (balances_[tx.from] < tx.value) {
      // consume the nonce so later txs from this sender are not stranded
      account_nonce_[tx.from] += 1;
      records_[id].dropped = true;
      records_[id].note = "dropped: insufficient balance";
      resolved_.insert(id);
      --unresolved_;
      ++dropped_count_;
      if (on_tx_final_) on_tx_final_(id);
      continue;
    }
    balances_[tx.from] -= tx.value;
    balances_[tx.to] += tx.value;
    account_nonce_[tx.from] += 1;
    block.txs.push_back(tx);
    records_[id].included = true;
    records_[id].sealed_us = engine_.now();
    records_[id].block_number = number;
    resolved_.insert(id);
    --unresolved_;
    last_inclusion_block_ = number;
  }
  pool = std::move(keep);

  block.hash = poa_block_digest(block);
  // sealing itself is cheap; charge the sealer after the block is fixed
  engine_.run_cpu(node,
                  params_.seal_work_ms_per_tx *
                      static_cast<double>(std::max<std::size_t>(
                          block.txs.size(), 1)),
                  "service-completion",
                  "seal block " + std::to_string(number), []() {});
  chain_.push_back(block);

  // broadcast the sealed block to every node
  const std::int64_t bytes =
      params_.block_overhead_bytes +
      static_cast<std::int64_t>(block.txs.size()) * params_.tx_bytes;
  for (const auto& n : engine_.topology().nodes()) {
    if (n.id == node) continue;
    engine_.send_message(node, n.id, bytes, "message-arrival",
                         "sealed-block " + std::to_string(number), []() {});
  }

  // the 12th confirmation of block N-12 happens now
  if (number >= static_cast<std::uint64_t>(params_.confirmations)) {
    const std::uint64_t confirmed =
        number - static_cast<std::uint64_t>(params_.confirmations);
    for (const auto& tx : chain_[confirmed].txs) {
      records_[tx.id].completed_us = engine_.now();
      if (on_tx_final_) on_tx_final_(tx.id);
    }
  }

  if (work_remaining()) {
    seal_scheduled_ = true;
    engine_.schedule_at(engine_.now() + blocktime_us, sealer_nodes_[0], "timer",
                        "seal-boundary", [this]() { seal_boundary(); });
  }
}

PoaRunResult PoaSimulation::result() const {
  PoaRunResult r;
  r.chain = chain_;
  r.records = records_;
  r.balances = balances_;
  r.dropped_count = dropped_count_;
  return r;
}

}  // namespace blockmesh
