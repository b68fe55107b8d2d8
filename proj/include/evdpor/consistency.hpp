#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evdpor/interp.hpp"
#include "evdpor/trace.hpp"

namespace evdpor {

// Three-valued result for weak-initial membership: Unknown means the
// available access summaries are insufficient to decide either way.
enum class Tri { False, True, Unknown };

// Body access sequences observed for one instance, one sequence per
// control-flow outcome. Only shared-variable accesses and posts are
// retained; begins and locals are dropped.
struct AccessSummary {
  std::vector<std::vector<AccessDesc>> sequences;

  void add(std::vector<AccessDesc> seq);
  bool empty() const { return sequences.empty(); }
};

// Provider of body summaries for instances that have not yet run.
// Returns nullopt for instances with no recorded summary; the summary of
// an instance that is already running is never requested because its next
// access can be peeked from the machine state directly.
class SummarySource {
 public:
  virtual ~SummarySource() = default;
  virtual std::optional<AccessSummary> body_accesses(Inst p) const = 0;
};

// Stage counters for the weak-initial check chain.
struct WiStats {
  uint64_t scheduled_inspections = 0;
  uint64_t simple_checks = 0;
  uint64_t hb_checks = 0;
  uint64_t witness_constructions = 0;
  uint64_t decision_procedure_calls = 0;
  uint64_t unknowns = 0;
};

// Decides whether instance p is a weak initial of w after base, i.e.
// whether some execution base.p.w' embeds base.w as a happens-before
// prefix. state is the machine state reached by running base. Runs the
// staged chain: scheduled inspection, then for starting messages the
// simple check, the happens-before check, witness construction, and
// finally the exact decision procedure. Returns Unknown when a required
// summary is missing or ambiguous and no stage can conclude.
Tri wi_member(const EventCtx &ctx, const EventSeq &base,
              const MachineState &state, const EventSeq &w, Inst p,
              const SummarySource &summaries, WiStats *stats = nullptr);

// Exact backtracking decision procedure for weak-initial membership of a
// starting message p. Enumerates per-handler total orders of the messages
// involved, extends incomplete non-final messages from their summaries,
// and accepts the first order whose constraint relation is acyclic and
// whose linearization replays with base.w as a happens-before prefix.
Tri wi_decide(const EventCtx &ctx, const EventSeq &base,
              const MachineState &state, const EventSeq &w, Inst p,
              const SummarySource &summaries, WiStats *stats = nullptr);

// Standalone trace graph, serializable and checkable without a program.
// Instance names are paths, handler is empty for thread instances, and
// edges are index pairs into events.
struct GraphAccess {
  AccessDesc::Kind kind = AccessDesc::Kind::Local;
  std::string var;    // shared accesses
  std::string target; // posts: path of the posted instance

  bool operator==(const GraphAccess &o) const = default;
  bool is_shared_access() const {
    using K = AccessDesc::Kind;
    return kind == K::Read || kind == K::Write || kind == K::Rmw;
  }
  bool writes_var() const {
    using K = AccessDesc::Kind;
    return kind == K::Write || kind == K::Rmw;
  }
};

struct GraphEvent {
  std::string instance;
  int index = 0;
  GraphAccess access;
  std::string handler;
  bool completes = false;
};

struct ConsistencyGraph {
  std::vector<GraphEvent> events;
  EdgeList po, cnf, pb;
};

// Builds the graph of a finished run: its events together with the
// program-order, conflict, and posted-by edges of its trace.
ConsistencyGraph graph_of(const ExecutionRecord &rec);

std::string to_json(const ConsistencyGraph &g);
// Throws std::runtime_error on malformed documents.
ConsistencyGraph graph_from_json(const std::string &text);

// Decides whether g is the trace of some execution: searches per-handler
// total orders of its message instances (incomplete ones last) for one
// whose combined order with the graph edges is acyclic. Returns the
// linearization as event indices, or nullopt when none exists. Throws
// std::invalid_argument when the graph is malformed (program order not
// total per instance, dangling edges, or a begin without its post).
std::optional<std::vector<uint32_t>>
check_consistency(const ConsistencyGraph &g);

} // namespace evdpor
