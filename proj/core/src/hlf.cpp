#include "blockmesh/hlf.hpp"

#include <algorithm>
#include <sstream>

#include "blockmesh/hash.hpp"

namespace blockmesh {

// ---- RwSet / store ----

std::string RwSet::canonical() const {
  std::ostringstream out;
  out << "R";
  for (const auto& [k, v] : reads) out << "|" << k << "@" << v;
  out << "|W";
  for (const auto& [k, v] : writes) out << "|" << k << "=" << v;
  return out.str();
}

std::uint64_t VersionedStore::version(const std::string& key) const {
  auto it = kv.find(key);
  return it == kv.end() ? 0 : it->second.second;
}

const std::string* VersionedStore::value(const std::string& key) const {
  auto it = kv.find(key);
  return it == kv.end() ? nullptr : &it->second.first;
}

void VersionedStore::apply(const RwSet& rwset) {
  for (const auto& [k, v] : rwset.writes) {
    auto& entry = kv[k];
    entry.first = v;
    entry.second += 1;
  }
}

std::uint64_t VersionedStore::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& [k, vv] : kv) {
    h = fnv1a64(k, h);
    h = fnv1a64(vv.first, h);
    h = fnv1a64(std::to_string(vv.second), h);
  }
  return h;
}

// ---- chaincode ----

namespace {

long long parse_ll(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw HlfError(std::string("chaincode: bad ") + what + ": " + s);
  }
}

}  // namespace

RwSet execute_chaincode(const VersionedStore& store, const ChaincodeCall& call,
                        const std::string& tx_id) {
  RwSet rw;
  if (call.fn == "sendMoney") {
    if (call.args.size() != 3)
      throw HlfError("sendMoney expects (name, value, op)");
    const std::string& name = call.args[0];
    long long value = parse_ll(call.args[1], "value");
    const std::string& op = call.args[2];
    if (value <= 0) throw HlfError("sendMoney: value must be positive");
    if (op != "+" && op != "-") throw HlfError("sendMoney: op must be + or -");
    // composite key per (name, op, value, txid): append-only, no reads
    const std::string key =
        "delta~" + name + "~" + op + "~" + std::to_string(value) + "~" + tx_id;
    rw.writes.emplace_back(key, "1");
    return rw;
  }
  if (call.fn == "rmwMoney") {
    if (call.args.size() != 3)
      throw HlfError("rmwMoney expects (name, value, op)");
    const std::string& name = call.args[0];
    long long value = parse_ll(call.args[1], "value");
    const std::string& op = call.args[2];
    if (value <= 0) throw HlfError("rmwMoney: value must be positive");
    if (op != "+" && op != "-") throw HlfError("rmwMoney: op must be + or -");
    const std::string key = "bal~" + name;
    rw.reads.emplace_back(key, store.version(key));
    const std::string* cur = store.value(key);
    long long bal = cur ? parse_ll(*cur, "stored balance") : 0;
    bal += op == "+" ? value : -value;
    rw.writes.emplace_back(key, std::to_string(bal));
    return rw;
  }
  throw HlfError("unknown chaincode function: " + call.fn);
}

long long aggregate_delta(const VersionedStore& store,
                          const std::string& name) {
  long long total = 0;
  const std::string plus = "delta~" + name + "~+~";
  const std::string minus = "delta~" + name + "~-~";
  for (const auto& [key, _] : store.kv) {
    std::string prefix;
    int sign = 0;
    if (key.rfind(plus, 0) == 0) {
      prefix = plus;
      sign = 1;
    } else if (key.rfind(minus, 0) == 0) {
      prefix = minus;
      sign = -1;
    } else {
      continue;
    }
    auto rest = key.substr(prefix.size());
    auto tilde = rest.find('~');
    total += sign * parse_ll(rest.substr(0, tilde), "delta value");
  }
  return total;
}

// ---- blocks ----

std::uint64_t hlf_block_digest(const HlfBlock& b) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = fnv1a64(std::to_string(b.seq), h);
  h = fnv1a64(hex64(b.prev_hash), h);
  for (const auto& tx : b.txs) {
    h = fnv1a64(tx.tx_id, h);
    h = fnv1a64(tx.call.fn, h);
    for (const auto& a : tx.call.args) h = fnv1a64(a, h);
    h = fnv1a64(tx.rwset.canonical(), h);
    h = fnv1a64(std::to_string(tx.endorsement_count), h);
  }
  return h;
}

bool verify_hlf_chain(const std::vector<HlfBlock>& chain) {
  std::uint64_t prev = 0;  // genesis predecessor digest
  for (const auto& b : chain) {
    if (b.prev_hash != prev) return false;
    if (hlf_block_digest(b) != b.hash) return false;
    prev = b.hash;
  }
  return true;
}

// ---- pipeline ----

std::vector<std::string> HlfParams::roles(int endorsers, int committers) {
  std::vector<std::string> r{"client"};
  for (int i = 1; i <= endorsers; ++i)
    r.push_back("endorser#" + std::to_string(i));
  r.push_back("orderer");
  for (int i = 1; i <= committers; ++i)
    r.push_back("committer#" + std::to_string(i));
  return r;
}

HlfSimulation::HlfSimulation(SimEngine& engine, const PlacementPlan& plan,
                             const HlfParams& params)
    : engine_(engine), params_(params) {
  if (params_.endorsers < 1) throw HlfError("no endorsers in plan");
  if (params_.policy_m < 1 || params_.policy_m > params_.endorsers)
    throw HlfError("endorsement policy m outside [1, endorsers]");
  client_node_ = plan.node_for("client");
  orderer_node_ = plan.node_for("orderer");
  for (int i = 1; i <= params_.endorsers; ++i) {
    Peer p;
    p.role = "endorser#" + std::to_string(i);
    p.node = plan.node_for(p.role);
    p.endorses = true;
    peers_.push_back(std::move(p));
  }
  for (int i = 1; i <= params_.committers; ++i) {
    Peer p;
    p.role = "committer#" + std::to_string(i);
    p.node = plan.node_for(p.role);
    peers_.push_back(std::move(p));
  }
  // the anchor peer is the one the client observes commits from: the first
  // dedicated committer when present, otherwise the first endorser
  anchor_ix_ = params_.committers > 0
                   ? static_cast<std::size_t>(params_.endorsers)
                   : 0;
}

std::string HlfSimulation::submit_tx(const ChaincodeCall& call,
                                     const std::string& forced_id) {
  std::string tx_id = forced_id;
  if (tx_id.empty()) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "tx%05llu",
                  static_cast<unsigned long long>(next_tx_++));
    tx_id = buf;
  }

  HlfTx tx;
  tx.tx_id = tx_id;
  tx.client = client_node_;
  tx.call = call;
  tx.submit_time_us = engine_.now();

  if (!records_.count(tx_id)) {
    records_[tx_id].submit_us = engine_.now();
    pending_[tx_id].tx = tx;
  }

  engine_.run_cpu(client_node_, params_.submit_work_ms, "service-completion",
                  "submit " + tx_id, [this, tx]() {
                    for (std::size_t i = 0; i < peers_.size(); ++i) {
                      if (!peers_[i].endorses) continue;
                      HlfTx copy = tx;
                      engine_.send_message(
                          client_node_, peers_[i].node, params_.proposal_bytes,
                          "message-arrival", "proposal " + tx.tx_id,
                          [this, i, copy]() { deliver_proposal(i, copy); });
                    }
                  });
  return tx_id;
}

void HlfSimulation::deliver_proposal(std::size_t peer_ix, HlfTx tx) {
  Peer& peer = peers_[peer_ix];
  // duplicate proposal: this endorser already took the tx id, drop it so the
  // original submission's flow is the only one that reaches the orderer
  if (!peer.seen_tx_ids.insert(tx.tx_id).second) return;
  // chaincode execution dominates the endorser's CPU
  engine_.run_cpu(
      peer.node, params_.endorse_work_ms, "service-completion",
      "endorse " + tx.tx_id, [this, peer_ix, tx]() {
        Peer& p = peers_[peer_ix];
        bool ok = true;
        RwSet rw;
        try {
          rw = execute_chaincode(p.store, tx.call, tx.tx_id);
        } catch (const HlfError&) {
          ok = false;
        }
        engine_.send_message(p.node, client_node_, params_.endorsement_bytes,
                             "message-arrival",
                             (ok ? "endorsement " : "reject ") + tx.tx_id,
                             [this, id = tx.tx_id, role = p.role, ok, rw]() {
                               deliver_response(id, role, ok, rw);
                             });
      });
}

void HlfSimulation::deliver_response(const std::string& tx_id,
                                     const std::string& endorser, bool ok,
                                     const RwSet& rwset) {
  auto it = pending_.find(tx_id);
  if (it == pending_.end()) return;
  PendingTx& p = it->second;
  ++p.responses;
  if (!ok)
    ++p.rejections;
  else
    p.groups[rwset.canonical()].push_back(endorser);
  if (p.decided) return;

  // cross-check: m identical read/write sets from distinct endorsers
  const std::string* winner = nullptr;
  for (const auto& [canon, who] : p.groups)
    if (static_cast<int>(who.size()) >= params_.policy_m) winner = &canon;

  if (winner) {
    p.decided = true;
    // re-parse the winning rwset from the first matching endorsement
    RwSet chosen = rwset;  // responses in a group are identical by definition
    p.tx.rwset = chosen;
    p.tx.endorsed_by = p.groups[*winner];
    p.tx.endorsement_count = static_cast<int>(p.tx.endorsed_by.size());
    records_[tx_id].endorsed_us = engine_.now();
    HlfTx accepted = p.tx;
    engine_.run_cpu(client_node_, params_.collect_work_ms, "service-completion",
                    "collect " + tx_id, [this, accepted]() {
                      engine_.send_message(
                          client_node_, orderer_node_, params_.tx_bytes,
                          "message-arrival", "ordered-tx " + accepted.tx_id,
                          [this, accepted]() { orderer_receive(accepted); });
                    });
  } else if (p.responses >= params_.endorsers) {
    p.decided = true;
    records_[tx_id].note =
        p.rejections > 0 ? "rejected" : "mismatched-rwsets";
    finalize_tx(tx_id, false);
  }
}

void HlfSimulation::orderer_receive(HlfTx tx) {
  engine_.run_cpu(orderer_node_, params_.order_work_ms_per_tx,
                  "service-completion", "order " + tx.tx_id, [this, tx]() {
                    batch_.push_back(tx);
                    if (batch_.size() == 1) {
                      const std::uint64_t epoch = ++batch_epoch_;
                      engine_.schedule_after(
                          params_.batch_timeout_ms * 1000, orderer_node_,
                          "timer", "batch-timeout",
                          [this, epoch]() {
                            if (epoch == batch_epoch_ && !batch_.empty())
                              cut_block();
                          });
                    }
                    if (static_cast<int>(batch_.size()) >= params_.block_size)
                      cut_block();
                  });
}

void HlfSimulation::cut_block() {
  HlfBlock block;
  block.seq = next_block_seq_++;
  block.prev_hash = orderer_prev_hash_;
  block.created_us = engine_.now();
  block.txs = std::move(batch_);
  batch_.clear();
  ++batch_epoch_;  // invalidate any outstanding timeout
  block.hash = hlf_block_digest(block);
  orderer_prev_hash_ = block.hash;

  const std::int64_t bytes =
      params_.block_overhead_bytes +
      static_cast<std::int64_t>(block.txs.size()) * params_.tx_bytes;
  for (std::size_t i = 0; i < peers_.size(); ++i) {
    HlfBlock copy = block;
    engine_.send_message(orderer_node_, peers_[i].node, bytes,
                         "message-arrival",
                         "block " + std::to_string(block.seq),
                         [this, i, copy]() { deliver_block(i, copy); });
  }
}

void HlfSimulation::deliver_block(std::size_t peer_ix, HlfBlock block) {
  Peer& peer = peers_[peer_ix];
  peer.held.emplace(block.seq, std::move(block));
  try_commit(peer_ix);
}

void HlfSimulation::try_commit(std::size_t peer_ix) {
  Peer& peer = peers_[peer_ix];
  if (peer.committing) return;
  auto it = peer.held.find(peer.height);
  if (it == peer.held.end()) return;  // out-of-order block held back
  peer.committing = true;
  const double work =
      params_.block_fixed_work_ms +
      static_cast<double>(it->second.txs.size()) * params_.commit_work_ms_per_tx;
  engine_.run_cpu(
      peer.node, work, "service-completion",
      peer.role + " commit block " + std::to_string(peer.height),
      [this, peer_ix]() {
        Peer& p = peers_[peer_ix];
        HlfBlock block = std::move(p.held.at(p.height));
        p.held.erase(p.height);
        block.valid.clear();
        for (const auto& tx : block.txs) {
          bool ok = tx.endorsement_count >= params_.policy_m;
          // multi-version concurrency check against the committed store
          for (const auto& [key, ver] : tx.rwset.reads)
            if (p.store.version(key) != ver) ok = false;
          if (ok) p.store.apply(tx.rwset);
          block.valid.push_back(ok ? 1 : 0);
        }
        p.chain.push_back(block);
        p.height += 1;
        p.committing = false;
        if (peer_ix == anchor_ix_) {
          for (std::size_t i = 0; i < block.txs.size(); ++i) {
            const auto& id = block.txs[i].tx_id;
            records_[id].committed_us = engine_.now();
            records_[id].committed_valid = block.valid[i] != 0;
            if (!block.valid[i]) records_[id].note = "mvcc-invalid";
            finalize_tx(id, block.valid[i] != 0);
          }
        }
        try_commit(peer_ix);
      });
}

void HlfSimulation::finalize_tx(const std::string& tx_id, bool valid) {
  if (on_tx_final_) on_tx_final_(tx_id, valid);
}

HlfRunResult HlfSimulation::result() const {
  HlfRunResult r;
  r.records = records_;
  r.chain = peers_[anchor_ix_].chain;
  for (const auto& p : peers_) r.peer_store_digests[p.role] = p.store.digest();
  for (const auto& [id, st] : records_) {
    if (st.committed_us < 0) continue;
    if (st.committed_valid)
      ++r.valid_count;
    else
      ++r.invalid_count;
  }
  return r;
}

}  // namespace blockmesh
