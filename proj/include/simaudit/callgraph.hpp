#pragma once

#include <iosfwd>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "simaudit/sol_extract.hpp"

namespace simaudit {

enum class UnresolvedReason { NotFound, Ambiguous };

std::string_view to_string(UnresolvedReason reason);

struct UnresolvedCall {
  std::string caller_id;
  std::string callee_name;
  UnresolvedReason reason = UnresolvedReason::NotFound;

  friend bool operator==(const UnresolvedCall&, const UnresolvedCall&) = default;
};

/// Directed call graph. Edges are oriented caller -> callee.
struct CallGraph {
  std::set<std::string> vertices;
  std::set<std::pair<std::string, std::string>> edges;
  std::vector<UnresolvedCall> unresolved;
  /// Units that call themselves. Recorded here instead of as self-loops.
  std::vector<std::string> self_recursive;

  /// Direct callees of `unit_id`, ascending.
  std::vector<std::string> callees(const std::string& unit_id) const;
};

/// Bottom-up analysis order: every callee precedes its callers, except
/// for edges inside a call cycle.
struct ScanSchedule {
  std::vector<std::string> order;
  /// Strongly connected components with more than one member, each sorted.
  std::vector<std::vector<std::string>> scc_groups;

  std::size_t position(const std::string& unit_id) const;
};

/// Resolves every declared call to a vertex:
///   1. same-named units in the caller's contract (same file);
///   2. otherwise the unique same-named unit anywhere in `units`;
///   3. otherwise the call is recorded as unresolved (NotFound / Ambiguous).
/// Throws Error(DuplicateUnitId) when two units share an id.
CallGraph build_graph(const std::vector<FunctionUnit>& units);

/// Tarjan SCCs, then Kahn's algorithm over the condensation with callees
/// released first. Ready components are emitted by smallest member id;
/// members of one component are emitted consecutively in id order.
ScanSchedule topo_order(const CallGraph& graph);

/// Graphviz rendering of the graph (edges caller -> callee).
void write_dot(std::ostream& out, const CallGraph& graph);

}  // namespace simaudit
