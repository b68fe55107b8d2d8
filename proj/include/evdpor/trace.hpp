#ifndef EVDPOR_TRACE_HPP
#define EVDPOR_TRACE_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "evdpor/interp.hpp"
#include "evdpor/program.hpp"

namespace evdpor {

// Fine: two accesses of a common shared variable, at least one writing.
// Coarse: additionally, any two events of distinct message instances on the
// same handler (handlers treated as locks held for the whole message).
enum class ConflictModel { Fine, Coarse };

// Bundles what every trace computation needs. The arena is non-const because
// peeking at a pending post interns the posted instance.
struct EventCtx {
  const Program *prog = nullptr;
  InstanceArena *arena = nullptr;
  ConflictModel model = ConflictModel::Fine;
};

// Conflict between events of different instances; same-instance pairs never
// conflict (program order covers them).
bool conflicting(const EventCtx &ctx, const Event &a, const Event &b);

// Dense strict order over indices 0..n-1, rows as successor bitsets.
class BitRel {
public:
  BitRel() = default;
  explicit BitRel(size_t n) : n_(n), words_((n + 63) / 64), bits_(n * words_) {}

  size_t size() const { return n_; }
  bool test(size_t a, size_t b) const {
    return bits_[a * words_ + b / 64] >> (b % 64) & 1;
  }
  void set(size_t a, size_t b) { bits_[a * words_ + b / 64] |= 1ull << (b % 64); }
  void transitive_close();
  bool has_cycle() const;

  bool operator==(const BitRel &) const = default;

private:
  size_t n_ = 0, words_ = 0;
  std::vector<uint64_t> bits_;
};

using EdgeList = std::vector<std::pair<uint32_t, uint32_t>>;

// Happens-before: transitive closure of program order, conflict order, and
// posted-by order. Generator edge lists are kept alongside the closure.
struct HbRelation {
  BitRel rel;
  EdgeList po, cnf, pb;

  bool before(size_t a, size_t b) const { return rel.test(a, b); }
};

HbRelation compute_hb(const EventCtx &ctx, const EventSeq &events);

// Whole-message ordering closure: whenever two message instances share a
// handler and the relation orders some event of one before some event of the
// other, every cross pair gets ordered the same way; iterated together with
// transitive closure to the least fixpoint. Returns false iff the fixpoint
// has a cycle (the relation is left in its last state either way).
bool saturate(BitRel &rel, const std::vector<Inst> &inst_of,
              const std::vector<int> &handler_of);
bool saturate(const EventCtx &ctx, const EventSeq &events, BitRel &rel);

// Canonical schedule-independent identity of (dom(E), hb): equal keys iff
// the executions are equivalent.
std::string trace_key(const EventCtx &ctx, const EventSeq &events);

// hb-adjacent conflicting cross-instance pairs, as positions into events.
EdgeList detect_races(const EventCtx &ctx, const EventSeq &events,
                      const HbRelation &hb);

// True iff sub is a happens-before prefix of full, both read as executions
// extending base: dom containment (with equal accesses), equal hb
// restriction, and closure under hb-predecessors among post-base events.
bool is_hb_prefix_after(const EventCtx &ctx, const EventSeq &base,
                        const EventSeq &sub, const EventSeq &full);

bool is_hb_prefix(const EventCtx &ctx, const EventSeq &sub,
                  const EventSeq &full);

}  // namespace evdpor

#endif
