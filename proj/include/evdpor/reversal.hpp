#ifndef EVDPOR_REVERSAL_HPP
#define EVDPOR_REVERSAL_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "evdpor/interp.hpp"
#include "evdpor/trace.hpp"

namespace evdpor {

// One way to reverse a race (e, e'): keep a prefix of the recorded execution
// verbatim, then run the wakeup sequence, whose final event performs e'
// while e stays unperformed.
struct ReversalCandidate {
  size_t prefix_len = 0;  // recorded events kept verbatim before the wakeup
  EventSeq wakeup;        // replayed continuation, ending with e''s performer
  std::vector<Inst> removed;   // messages dropped to free the handlers
  uint32_t order_repairs = 0;  // free message pairs flipped to linearize
  bool diverged = false;  // replay drifted from the planned events
};

// Counters accumulate across calls so an exploration can total them.
struct ReversalStats {
  uint64_t branches = 0;         // alternative event sets processed
  uint64_t abandoned = 0;        // sets that lost a predecessor e' needs
  uint64_t cycle_breaks = 0;     // ordering cycles broken by dropping a message
  uint64_t order_searches = 0;   // linearizations that needed order repair
  uint64_t unorderable = 0;      // sets admitting no acyclic message order
  uint64_t replay_rejected = 0;  // linearizations that failed to replay
  uint64_t duplicates = 0;       // candidates merged by trace key
};

// Positions of the events that e does not happen-before, ascending, e itself
// excluded. They are exactly what may still be performed when e is delayed.
std::vector<uint32_t> not_after(const HbRelation &hb, uint32_t e);
EventSeq not_after(const EventCtx &ctx, const EventSeq &events, uint32_t e);

// All maximal ways to perform e' without performing e, given a race between
// positions e < e' of a recorded execution. Starts from the events e does not
// happen-before, trims handlers down to at most one unfinished message each
// (forcing survivors e' depends on, branching when none is forced), orders
// finished messages before their handler's unfinished one, breaks ordering
// cycles by dropping a message, then linearizes favoring the recorded order
// and validates each result by replay. Returns an empty vector when the race
// cannot be reversed. Candidates are deduplicated by trace key.
std::vector<ReversalCandidate> reverse_race(const EventCtx &ctx,
                                            const EventSeq &events, uint32_t e,
                                            uint32_t eprime,
                                            ReversalStats *stats = nullptr);

// Instance letters that replay a candidate: the kept prefix of the recorded
// events followed by the wakeup.
std::vector<Inst> candidate_schedule(const EventSeq &events,
                                     const ReversalCandidate &cand);

// "s.t|t/1.t/1" rendering of a candidate's schedule, '|' separating the kept
// prefix from the wakeup.
std::string describe(const EventCtx &ctx, const EventSeq &events,
                     const ReversalCandidate &cand);

}  // namespace evdpor

#endif
