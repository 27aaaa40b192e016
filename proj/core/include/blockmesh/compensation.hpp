#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace blockmesh {

struct CompensationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CompensationRecord {
  std::string participant;
  long long period = 0;
  long long contribution_cost = 0;  // declared, integer currency minor units
  long long consumption_usage = 0;  // measured traffic units
};

struct DeltaEntry {
  std::string name;
  char op = '+';  // '+' or '-'
  long long value = 0;
  std::string tx_id;
};

struct Transfer {
  std::string payer;
  std::string payee;
  long long amount = 0;
};

struct SettlementResult {
  long long period = 0;
  std::map<std::string, long long> net_balance;  // sums to zero exactly
  std::vector<Transfer> transfers;
};

long long aggregate(const std::vector<DeltaEntry>& entries,
                    const std::string& name);

// Translates one period's records into append-only ledger deltas (two per
// record: declared cost and measured usage). Rejects duplicate participants.
std::vector<DeltaEntry> record_period(
    const std::vector<CompensationRecord>& records);

// Usage-proportional cost sharing with largest-remainder rounding, so the
// total charge equals the total declared cost exactly, then a greedy
// largest-debtor / largest-creditor matching (ties to the smaller id).
SettlementResult settle(long long period,
                        const std::vector<CompensationRecord>& records);

// `participant period contribution_cost consumption_usage` per line,
// '#' comments allowed.
std::vector<CompensationRecord> load_records(std::istream& in);

}  // namespace blockmesh
