#ifndef EVDPOR_WAKEUP_HPP
#define EVDPOR_WAKEUP_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evdpor/consistency.hpp"
#include "evdpor/interp.hpp"
#include "evdpor/trace.hpp"

namespace evdpor {

// Ordered tree of pending exploration branches at one execution prefix.
// Every edge performs one event of its labeling instance, so a node names an
// instance sequence extending the prefix and a root-to-leaf path spells out
// a complete wakeup sequence. Siblings keep insertion order, which is also
// the order the branches get explored in.
struct WakeupTree {
  struct Node {
    Inst inst = kNoInst;  // edge label; unset on the root
    Event ev{};           // event the edge performs; absent on seeded nodes
    bool has_ev = false;
    std::vector<uint32_t> kids;    // child node ids, oldest first
    std::vector<EventSeq> parked;  // sequences waiting for this branch to run
  };

  std::vector<Node> nodes{Node{}};  // nodes[0] is the root
  // Tree obtained by stepping past a childless branch tip: the exploration
  // beyond it runs free, so parked sequences resumed here are dropped.
  bool from_leaf = false;

  bool empty() const { return nodes[0].kids.empty(); }
};

// Oldest root branch; the next one to explore. Requires a nonempty tree.
Inst wut_min_branch(const WakeupTree &t);

// Extracts the subtree under root child p, re-rooted at that child. Parked
// sequences move into the extracted copy; the source keeps the branch but
// none of its parked sequences. Requires p to be a root child.
WakeupTree wut_subtree_after(WakeupTree &t, Inst p);

// Deletes root child p with its whole subtree. Returns how many parked
// sequences went down with it; anything nonzero means a sequence was never
// resumed. Requires p to be a root child.
size_t wut_remove_branch(WakeupTree &t, Inst p);

// Gives an empty tree a single bare branch for p, used when no pending
// sequence dictates the next step. Seeded nodes carry no event.
void wut_seed(WakeupTree &t, Inst p);

// The event sequence along each root-to-leaf path, in sibling order.
// Seeded nodes contribute nothing.
std::vector<EventSeq> wut_leaves(const WakeupTree &t);

// One line per node, two-space indent per level: instance path, the edge
// event's access, "!" when it completes the instance, and the number of
// parked sequences when there are any.
std::string dump(const EventCtx &ctx, const WakeupTree &t);

// Body summaries harvested from a recorded event sequence: an instance
// reports one access sequence when both its begin and its completing event
// lie in the record.
class RecordedSummaries : public SummarySource {
public:
  RecordedSummaries(const EventCtx &ctx, const EventSeq &events);
  std::optional<AccessSummary> body_accesses(Inst p) const override;

private:
  std::map<Inst, AccessSummary> by_inst_;
};

// Where an insertion ended up.
struct InsertOutcome {
  enum Kind { Inserted, Covered, Parked };
  Kind kind = Covered;
  uint32_t park_node = 0;       // node holding the parked copy
  std::vector<Inst> park_path;  // root-to-holder edge labels
};

// Inserts the wakeup sequence v, an execution continuation of base, into t,
// the tree rooted at base. Walks down matching children in sibling order:
// an instance already running descends when its next event is in v and
// proves v redundant when it is not; a message not yet begun descends when
// it leads its handler inside v or when v holds its whole body and beginning
// it first provably keeps v performable, is skipped when that provably
// fails, and parks v at its node when v lacks the information to decide.
// With no admitting child, v becomes a new rightmost branch. skip_child
// names a root child already known not to admit v.
InsertOutcome insert_wus(const EventCtx &ctx, const EventSeq &base,
                         const EventSeq &v, WakeupTree &t,
                         WiStats *stats = nullptr, Inst skip_child = kNoInst);

// How resuming a parked sequence ended.
enum class ParkedOutcome { Exhausted, FormerLeaf, Inserted, Covered, Parked };

// Resumes a sequence v parked at full[0..park_len) once full, a completed
// execution through the park point, supplies the missing access information.
// Walks forward along full: when the instance whose event closes the current
// prefix provably keeps v performable, its next event is consumed from v and
// the walk advances; otherwise v is inserted into the tree at the prefix
// before it. Returns Exhausted when the walk consumes all of v, FormerLeaf
// when the prefix's tree came from stepping past a branch tip, and the
// insertion's outcome otherwise. tree_at maps a prefix length to its tree.
ParkedOutcome insert_parked_wus(
    const EventCtx &ctx, const EventSeq &full, size_t park_len,
    const EventSeq &v, const std::function<WakeupTree &(size_t)> &tree_at,
    WiStats *stats = nullptr);

}  // namespace evdpor

#endif
