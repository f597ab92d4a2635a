#include "simaudit/callgraph.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <queue>
#include <unordered_map>

#include "simaudit/errors.hpp"

namespace simaudit {

std::string_view to_string(UnresolvedReason reason) {
  return reason == UnresolvedReason::Ambiguous ? "ambiguous" : "not_found";
}

std::vector<std::string> CallGraph::callees(const std::string& unit_id) const {
  std::vector<std::string> out;
  for (auto it = edges.lower_bound({unit_id, std::string()});
       it != edges.end() && it->first == unit_id; ++it)
    out.push_back(it->second);
  return out;
}

std::size_t ScanSchedule::position(const std::string& unit_id) const {
  auto it = std::find(order.begin(), order.end(), unit_id);
  return static_cast<std::size_t>(it - order.begin());
}

CallGraph build_graph(const std::vector<FunctionUnit>& units) {
  CallGraph graph;
  for (const auto& u : units) {
    if (!graph.vertices.insert(u.unit_id).second)
      throw Error(ErrorKind::DuplicateUnitId, "duplicate unit id '" + u.unit_id + "'");
  }

  using ContractKey = std::pair<std::string, std::string>;  // file, contract
  std::map<std::pair<ContractKey, std::string>, std::vector<const FunctionUnit*>> by_contract;
  std::map<std::string, std::vector<const FunctionUnit*>> by_name;
  for (const auto& u : units) {
    by_contract[{{u.file_path, u.contract}, u.name}].push_back(&u);
    by_name[u.name].push_back(&u);
  }

  for (const auto& u : units) {
    bool self = false;
    for (const auto& name : u.declared_calls) {
      std::vector<const FunctionUnit*> targets;
      if (auto it = by_contract.find({{u.file_path, u.contract}, name}); it != by_contract.end()) {
        targets = it->second;  // overloads resolve to every same-named unit
      } else if (auto all = by_name.find(name); all != by_name.end()) {
        if (all->second.size() > 1) {
          graph.unresolved.push_back({u.unit_id, name, UnresolvedReason::Ambiguous});
          continue;
        }
        targets = all->second;
      } else {
        graph.unresolved.push_back({u.unit_id, name, UnresolvedReason::NotFound});
        continue;
      }
      for (const auto* t : targets) {
        if (t->unit_id == u.unit_id)
          self = true;
        else
          graph.edges.emplace(u.unit_id, t->unit_id);
      }
    }
    if (self) graph.self_recursive.push_back(u.unit_id);
  }
  return graph;
}

namespace {

// Iterative Tarjan; returns component index per vertex.
std::vector<int> strongly_connected(const std::vector<std::vector<int>>& adj, int& count) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  std::vector<std::pair<int, std::size_t>> work;
  int next = 0;
  count = 0;
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    work.push_back({root, 0});
    while (!work.empty()) {
      auto& [v, child] = work.back();
      if (child == 0 && index[v] == -1) {
        index[v] = low[v] = next++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      if (child < adj[v].size()) {
        const int w = adj[v][child++];
        if (index[w] == -1) {
          work.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = count;
        } while (w != v);
        ++count;
      }
      const int finished = v;
      work.pop_back();
      if (!work.empty()) {
        const int parent = work.back().first;
        low[parent] = std::min(low[parent], low[finished]);
      }
    }
  }
  return comp;
}

}  // namespace

ScanSchedule topo_order(const CallGraph& graph) {
  ScanSchedule schedule;
  // vertices is an ordered set, so vertex indices follow unit_id order.
  const std::vector<std::string> ids(graph.vertices.begin(), graph.vertices.end());
  std::unordered_map<std::string, int> idx;
  for (int i = 0; i < static_cast<int>(ids.size()); ++i) idx[ids[i]] = i;

  std::vector<std::vector<int>> adj(ids.size());
  for (const auto& [caller, callee] : graph.edges) adj[idx.at(caller)].push_back(idx.at(callee));

  int ncomp = 0;
  const auto comp = strongly_connected(adj, ncomp);

  std::vector<std::vector<int>> members(ncomp);
  for (int v = 0; v < static_cast<int>(ids.size()); ++v) members[comp[v]].push_back(v);

  // A component is ready once all its callee components have been emitted.
  std::vector<int> pending_callees(ncomp, 0);
  std::vector<std::set<int>> callers_of(ncomp);
  for (int v = 0; v < static_cast<int>(ids.size()); ++v) {
    for (int w : adj[v]) {
      const int cv = comp[v], cw = comp[w];
      if (cv != cw && callers_of[cw].insert(cv).second) ++pending_callees[cv];
    }
  }

  // Members are pushed in ascending index order, so members[c].front() is
  // the smallest id of the component.
  using Ready = std::pair<int, int>;  // smallest member index, component
  std::priority_queue<Ready, std::vector<Ready>, std::greater<>> ready;
  for (int c = 0; c < ncomp; ++c)
    if (pending_callees[c] == 0) ready.push({members[c].front(), c});

  while (!ready.empty()) {
    const int c = ready.top().second;
    ready.pop();
    std::vector<std::string> group;
    for (int v : members[c]) {
      schedule.order.push_back(ids[v]);
      group.push_back(ids[v]);
    }
    if (group.size() > 1) schedule.scc_groups.push_back(std::move(group));
    for (int caller : callers_of[c])
      if (--pending_callees[caller] == 0) ready.push({members[caller].front(), caller});
  }
  return schedule;
}

namespace {

std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

void write_dot(std::ostream& out, const CallGraph& graph) {
  out << "digraph callgraph {\n  rankdir=BT;\n";
  for (const auto& v : graph.vertices) out << "  " << dot_quote(v) << ";\n";
  for (const auto& [caller, callee] : graph.edges)
    out << "  " << dot_quote(caller) << " -> " << dot_quote(callee) << ";\n";
  out << "}\n";
}

}  // namespace simaudit
