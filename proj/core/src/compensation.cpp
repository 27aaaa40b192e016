#include "blockmesh/compensation.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace blockmesh {

long long aggregate(const std::vector<DeltaEntry>& entries,
                    const std::string& name) {
  long long total = 0;
  for (const auto& e : entries) {
    if (e.name != name) continue;
    total += e.op == '+' ? e.value : -e.value;
  }
  return total;
}

std::vector<DeltaEntry> record_period(
    const std::vector<CompensationRecord>& records) {
  std::set<std::string> seen;
  std::vector<DeltaEntry> out;
  for (const auto& r : records) {
    if (r.contribution_cost < 0 || r.consumption_usage < 0)
      throw CompensationError("negative record for " + r.participant);
    if (!seen.insert(r.participant).second)
      throw CompensationError("duplicate participant in period: " +
                              r.participant);
    const std::string suffix =
        "~p" + std::to_string(r.period) + "~" + r.participant;
    if (r.contribution_cost > 0)
      out.push_back({"cost" + suffix, '+', r.contribution_cost,
                     "rec-cost-" + r.participant});
    if (r.consumption_usage > 0)
      out.push_back({"usage" + suffix, '+', r.consumption_usage,
                     "rec-usage-" + r.participant});
  }
  return out;
}

SettlementResult settle(long long period,
                        const std::vector<CompensationRecord>& records) {
  record_period(records);  // reuse the duplicate / negativity checks

  SettlementResult result;
  result.period = period;

  long long total_cost = 0;
  long long total_usage = 0;
  for (const auto& r : records) {
    total_cost += r.contribution_cost;
    total_usage += r.consumption_usage;
  }
  if (total_usage == 0 && total_cost > 0)
    throw CompensationError(
        "settlement undefined: zero total usage with positive cost");

  // charge_i = usage_i / total_usage * total_cost, rounded by largest
  // remainder so the charges sum to total_cost exactly
  struct Share {
    std::string id;
    long long floor_charge;
    long long remainder;
  };
  std::vector<Share> shares;
  long long assigned = 0;
  for (const auto& r : records) {
    long long fl = 0, rem = 0;
    if (total_usage > 0) {
      const __int128 num =
          static_cast<__int128>(r.consumption_usage) * total_cost;
      fl = static_cast<long long>(num / total_usage);
      rem = static_cast<long long>(num % total_usage);
    }
    shares.push_back({r.participant, fl, rem});
    assigned += fl;
  }
  long long leftover = total_cost - assigned;
  std::vector<std::size_t> order(shares.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (shares[a].remainder != shares[b].remainder)
      return shares[a].remainder > shares[b].remainder;
    return shares[a].id < shares[b].id;
  });
  for (std::size_t i = 0; leftover > 0; i = (i + 1) % order.size(), --leftover)
    shares[order[i]].floor_charge += 1;

  std::map<std::string, long long> charge;
  for (const auto& s : shares) charge[s.id] = s.floor_charge;
  for (const auto& r : records)
    result.net_balance[r.participant] =
        r.contribution_cost - charge[r.participant];

  // greedy matching: largest debtor pays largest creditor
  std::map<std::string, long long> residual = result.net_balance;
  for (;;) {
    std::string debtor, creditor;
    long long debt = 0, credit = 0;
    for (const auto& [id, bal] : residual) {
      if (bal < 0 && (-bal > debt || (-bal == debt && (debtor.empty() || id < debtor)))) {
        debt = -bal;
        debtor = id;
      }
      if (bal > 0 && (bal > credit || (bal == credit && (creditor.empty() || id < creditor)))) {
        credit = bal;
        creditor = id;
      }
    }
    if (debt == 0 || credit == 0) break;
    const long long amount = std::min(debt, credit);
    result.transfers.push_back({debtor, creditor, amount});
    residual[debtor] += amount;
    residual[creditor] -= amount;
  }
  return result;
}

std::vector<CompensationRecord> load_records(std::istream& in) {
  std::vector<CompensationRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    CompensationRecord r;
    if (!(ls >> r.participant)) continue;
    if (!(ls >> r.period >> r.contribution_cost >> r.consumption_usage))
      throw CompensationError(
          "parse error at line " + std::to_string(lineno) +
          ": expected 'participant period contribution_cost consumption_usage'");
    out.push_back(r);
  }
  return out;
}

}  // namespace blockmesh
