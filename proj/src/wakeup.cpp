#include "evdpor/wakeup.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace evdpor {

namespace {

using K = AccessDesc::Kind;

// Index of v's first event of instance p, or v.size().
size_t first_of(const EventSeq &v, Inst p) {
  for (size_t i = 0; i < v.size(); ++i)
    if (v[i].inst == p) return i;
  return v.size();
}

bool completes_in(const EventSeq &v, Inst p) {
  for (const Event &e : v)
    if (e.inst == p && e.completes) return true;
  return false;
}

// Instance of the earliest v event belonging to a message on handler h.
Inst first_on_handler(const EventCtx &ctx, const EventSeq &v, int h) {
  for (const Event &e : v)
    if (ctx.arena->is_message(e.inst) && ctx.arena->handler_of(e.inst) == h)
      return e.inst;
  return kNoInst;
}

uint32_t child_with(const WakeupTree &t, uint32_t u, Inst p) {
  for (uint32_t c : t.nodes[u].kids)
    if (t.nodes[c].inst == p) return c;
  return UINT32_MAX;
}

std::string access_string(const EventCtx &ctx, const AccessDesc &a) {
  switch (a.kind) {
    case K::Begin: return "begin";
    case K::Local: return "local";
    case K::Read: return "r " + ctx.prog->shared_vars[a.var];
    case K::Write: return "w " + ctx.prog->shared_vars[a.var];
    case K::Rmw: return "rmw " + ctx.prog->shared_vars[a.var];
    case K::Post:
      return "post " + ctx.arena->path_string(*ctx.prog, a.target);
  }
  return "?";
}

}  // namespace

Inst wut_min_branch(const WakeupTree &t) {
  assert(!t.empty());
  return t.nodes[t.nodes[0].kids.front()].inst;
}

WakeupTree wut_subtree_after(WakeupTree &t, Inst p) {
  uint32_t c = child_with(t, 0, p);
  assert(c != UINT32_MAX);
  WakeupTree out;
  out.from_leaf = t.nodes[c].kids.empty();
  out.nodes[0].parked = std::move(t.nodes[c].parked);
  t.nodes[c].parked.clear();
  // Pairs of (source node, destination node); children copy in order so the
  // extracted tree keeps the sibling order of the original.
  std::vector<std::pair<uint32_t, uint32_t>> work{{c, 0}};
  while (!work.empty()) {
    auto [src, dst] = work.back();
    work.pop_back();
    for (uint32_t kid : t.nodes[src].kids) {
      WakeupTree::Node n;
      n.inst = t.nodes[kid].inst;
      n.ev = t.nodes[kid].ev;
      n.has_ev = t.nodes[kid].has_ev;
      n.parked = std::move(t.nodes[kid].parked);
      t.nodes[kid].parked.clear();
      uint32_t id = static_cast<uint32_t>(out.nodes.size());
      out.nodes.push_back(std::move(n));
      out.nodes[dst].kids.push_back(id);
      work.emplace_back(kid, id);
    }
  }
  return out;
}

size_t wut_remove_branch(WakeupTree &t, Inst p) {
  uint32_t c = child_with(t, 0, p);
  assert(c != UINT32_MAX);
  size_t dropped = 0;
  std::vector<uint32_t> work{c};
  while (!work.empty()) {
    uint32_t u = work.back();
    work.pop_back();
    dropped += t.nodes[u].parked.size();
    work.insert(work.end(), t.nodes[u].kids.begin(), t.nodes[u].kids.end());
  }
  // Rebuild without the branch so dead nodes do not accumulate.
  WakeupTree fresh;
  fresh.from_leaf = t.from_leaf;
  fresh.nodes[0].parked = std::move(t.nodes[0].parked);
  std::vector<std::pair<uint32_t, uint32_t>> copy;
  for (uint32_t kid : t.nodes[0].kids)
    if (kid != c) copy.emplace_back(kid, 0);
  // Process as a queue to keep parent-before-child, appending kids in order.
  for (size_t i = 0; i < copy.size(); ++i) {
    auto [src, dst] = copy[i];
    WakeupTree::Node n;
    n.inst = t.nodes[src].inst;
    n.ev = t.nodes[src].ev;
    n.has_ev = t.nodes[src].has_ev;
    n.parked = std::move(t.nodes[src].parked);
    uint32_t id = static_cast<uint32_t>(fresh.nodes.size());
    fresh.nodes.push_back(std::move(n));
    fresh.nodes[dst].kids.push_back(id);
    for (uint32_t kid : t.nodes[src].kids) copy.emplace_back(kid, id);
  }
  t = std::move(fresh);
  return dropped;
}

void wut_seed(WakeupTree &t, Inst p) {
  assert(t.empty());
  WakeupTree::Node n;
  n.inst = p;
  uint32_t id = static_cast<uint32_t>(t.nodes.size());
  t.nodes.push_back(std::move(n));
  t.nodes[0].kids.push_back(id);
}

std::vector<EventSeq> wut_leaves(const WakeupTree &t) {
  std::vector<EventSeq> out;
  EventSeq cur;
  std::function<void(uint32_t)> walk = [&](uint32_t u) {
    const WakeupTree::Node &n = t.nodes[u];
    if (u != 0 && n.has_ev) cur.push_back(n.ev);
    if (n.kids.empty() && u != 0) out.push_back(cur);
    for (uint32_t c : n.kids) walk(c);
    if (u != 0 && n.has_ev) cur.pop_back();
  };
  walk(0);
  return out;
}

std::string dump(const EventCtx &ctx, const WakeupTree &t) {
  std::ostringstream os;
  std::function<void(uint32_t, int)> walk = [&](uint32_t u, int depth) {
    const WakeupTree::Node &n = t.nodes[u];
    if (u != 0) {
      for (int i = 0; i < depth; ++i) os << "  ";
      os << ctx.arena->path_string(*ctx.prog, n.inst);
      if (n.has_ev) {
        os << " " << access_string(ctx, n.ev.access);
        if (n.ev.completes) os << " !";
      }
      if (!n.parked.empty()) os << " (parked " << n.parked.size() << ")";
      os << "\n";
    }
    for (uint32_t c : n.kids) walk(c, depth + (u != 0));
  };
  walk(0, 0);
  return os.str();
}

RecordedSummaries::RecordedSummaries(const EventCtx &ctx,
                                     const EventSeq &events) {
  std::map<Inst, std::vector<AccessDesc>> globals;
  std::map<Inst, bool> begun, done;
  for (const Event &e : events) {
    if (!ctx.arena->is_message(e.inst)) continue;
    if (e.index == 1) begun[e.inst] = true;
    if (e.completes) done[e.inst] = true;
    if (e.access.is_global()) globals[e.inst].push_back(e.access);
  }
  for (auto &[inst, was] : done) {
    if (!begun[inst]) continue;
    AccessSummary s;
    s.add(std::move(globals[inst]));
    by_inst_.emplace(inst, std::move(s));
  }
}

std::optional<AccessSummary> RecordedSummaries::body_accesses(Inst p) const {
  auto it = by_inst_.find(p);
  if (it == by_inst_.end()) return std::nullopt;
  return it->second;
}

InsertOutcome insert_wus(const EventCtx &ctx, const EventSeq &base,
                         const EventSeq &v0, WakeupTree &t, WiStats *stats,
                         Inst skip_child) {
  if (v0.empty()) return {InsertOutcome::Covered, 0, {}};

  // Consuming an event moves it from v to the executed prefix, so summaries
  // built over base + v stay valid for the whole descent.
  EventSeq all = base;
  all.insert(all.end(), v0.begin(), v0.end());
  RecordedSummaries sums(ctx, all);

  MachineState st = init_state(*ctx.prog, *ctx.arena);
  for (const Event &e : base) step(*ctx.prog, *ctx.arena, st, e.inst);

  EventSeq cur = base;
  EventSeq v = v0;
  uint32_t u = 0;
  std::vector<Inst> path;

  auto descend = [&](uint32_t c, size_t i) {
    Inst p = t.nodes[c].inst;
    Event got = step(*ctx.prog, *ctx.arena, st, p);
    assert(got.inst == v[i].inst && got.index == v[i].index);
    cur.push_back(got);
    v.erase(v.begin() + (long)i);
    u = c;
    path.push_back(p);
  };

  for (;;) {
    if (v.empty()) return {InsertOutcome::Covered, 0, {}};
    // A childless interior node is a complete wakeup sequence: anything the
    // continuation demands beyond it gets explored freely under that branch.
    if (u != 0 && t.nodes[u].kids.empty())
      return {InsertOutcome::Covered, 0, {}};

    bool moved = false;
    for (uint32_t c : t.nodes[u].kids) {
      Inst p = t.nodes[c].inst;
      if (u == 0 && p == skip_child) continue;
      if (!starts_after(st, p)) {
        // Already running: membership is decided by direct inspection.
        Tri wi = wi_member(ctx, cur, st, v, p, sums, stats);
        assert(wi != Tri::Unknown);
        if (wi != Tri::True) continue;
        size_t i = first_of(v, p);
        // p may go first yet v never schedules it: v is a redundant
        // reordering of work this branch already covers.
        if (i == v.size()) return {InsertOutcome::Covered, 0, {}};
        descend(c, i);
        moved = true;
        break;
      }
      int h = ctx.arena->handler_of(p);
      Inst fh = first_on_handler(ctx, v, h);
      if (fh == kNoInst || fh == p) {
        // p leads its handler within v, so beginning it first commutes with
        // everything v does before it.
        size_t i = first_of(v, p);
        if (i == v.size()) return {InsertOutcome::Covered, 0, {}};
        descend(c, i);
        moved = true;
        break;
      }
      if (completes_in(v, p)) {
        Tri wi = wi_member(ctx, cur, st, v, p, sums, stats);
        if (wi == Tri::False) continue;
        if (wi == Tri::True) {
          size_t i = first_of(v, p);
          assert(i < v.size());
          descend(c, i);
          moved = true;
          break;
        }
      }
      // Another message leads p's handler in v and v cannot prove that
      // beginning p first stays performable: wait for the branch to run.
      t.nodes[c].parked.push_back(v);
      path.push_back(p);
      return {InsertOutcome::Parked, c, path};
    }
    if (moved) continue;

    // No child admits v: new rightmost branch holding the rest of v.
    uint32_t at = u;
    for (const Event &e : v) {
      WakeupTree::Node n;
      n.inst = e.inst;
      n.ev = e;
      n.has_ev = true;
      uint32_t id = static_cast<uint32_t>(t.nodes.size());
      t.nodes.push_back(std::move(n));
      t.nodes[at].kids.push_back(id);
      path.push_back(e.inst);
      at = id;
    }
    return {InsertOutcome::Inserted, at, path};
  }
}

ParkedOutcome insert_parked_wus(
    const EventCtx &ctx, const EventSeq &full, size_t park_len,
    const EventSeq &v0, const std::function<WakeupTree &(size_t)> &tree_at,
    WiStats *stats) {
  assert(park_len >= 1 && park_len <= full.size());
  EventSeq v = v0;
  RecordedSummaries sums(ctx, full);

  MachineState st = init_state(*ctx.prog, *ctx.arena);
  EventSeq cur;
  for (size_t i = 0; i + 1 < park_len; ++i) {
    step(*ctx.prog, *ctx.arena, st, full[i].inst);
    cur.push_back(full[i]);
  }

  for (size_t k = park_len;; ++k) {
    if (v.empty()) return ParkedOutcome::Exhausted;
    WakeupTree &t = tree_at(k - 1);
    if (t.from_leaf) return ParkedOutcome::FormerLeaf;
    Inst p = full[k - 1].inst;
    Tri wi = wi_member(ctx, cur, st, v, p, sums, stats);
    if (wi != Tri::True) {
      // p refuses to go first (or cannot be shown to): v branches off here.
      // The walk already decided against descending into the child that
      // carries full, so the insertion skips it.
      InsertOutcome out = insert_wus(ctx, cur, v, t, stats, p);
      switch (out.kind) {
        case InsertOutcome::Inserted: return ParkedOutcome::Inserted;
        case InsertOutcome::Covered: return ParkedOutcome::Covered;
        case InsertOutcome::Parked: return ParkedOutcome::Parked;
      }
    }
    size_t i = first_of(v, p);
    if (i < v.size()) v.erase(v.begin() + (long)i);
    if (k == full.size())
      // v claims events past a completed execution; nothing left to order
      // it against, and the free continuation already covers the prefix.
      return v.empty() ? ParkedOutcome::Exhausted : ParkedOutcome::Covered;
    step(*ctx.prog, *ctx.arena, st, p);
    cur.push_back(full[k - 1]);
  }
}

}  // namespace evdpor
