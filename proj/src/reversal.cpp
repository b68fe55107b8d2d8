#include "evdpor/reversal.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <utility>

namespace evdpor {

namespace {

constexpr uint32_t kNoPos = 0xffffffffu;

// One alternative set of kept events: liveness per recorded position plus the
// handler-ordering edges forced so far and the messages dropped to get here.
struct Branch {
  std::vector<char> alive;
  EdgeList extra;
  std::vector<Inst> removed;
};

// A message instance as seen by one branch. Liveness is always a prefix of
// the instance's events because removals cascade along happens-before, so a
// message is running iff it has live events and its finishing one is dead.
struct Msg {
  Inst inst = kNoInst;
  int handler = -1;
  std::vector<uint32_t> live;  // ascending positions
  bool complete = false;
};

struct Reverser {
  const EventCtx &ctx;
  const EventSeq &E;
  HbRelation hb;
  uint32_t e;
  uint32_t ep;
  ReversalStats &st;

  uint32_t e2 = kNoPos;    // e''s predecessor within its own performer
  bool ep_begins = false;  // e' is its message's first event
  int ep_handler = -1;
  std::map<Inst, uint32_t> completes_at;
  std::deque<Branch> todo;
  std::set<std::string> seen;
  std::vector<ReversalCandidate> out;

  Reverser(const EventCtx &c, const EventSeq &ev, uint32_t first,
           uint32_t second, ReversalStats &stats)
      : ctx(c), E(ev), hb(compute_hb(c, ev)), e(first), ep(second), st(stats) {
    const Event &last = E[ep];
    ep_handler = ctx.arena->handler_of(last.inst);
    ep_begins = last.index == 1 && ctx.arena->is_message(last.inst);
    if (last.index > 1) {
      for (uint32_t i = 0; i < ep; ++i)
        if (E[i].inst == last.inst && E[i].index == last.index - 1) e2 = i;
      assert(e2 != kNoPos);
    }
    for (uint32_t i = 0; i < E.size(); ++i)
      if (E[i].completes) completes_at[E[i].inst] = i;
  }

  std::vector<Msg> classify(const Branch &b) const {
    std::map<Inst, Msg> by;
    for (uint32_t i = 0; i < E.size(); ++i) {
      if (!b.alive[i]) continue;
      Inst q = E[i].inst;
      int h = ctx.arena->handler_of(q);
      if (h < 0) continue;
      auto [it, fresh] = by.try_emplace(q, Msg{q, h, {}, false});
      (void)fresh;
      it->second.live.push_back(i);
    }
    std::vector<Msg> msgs;
    msgs.reserve(by.size());
    for (auto &[q, m] : by) {
      auto it = completes_at.find(q);
      m.complete = it != completes_at.end() && b.alive[it->second];
      msgs.push_back(std::move(m));
    }
    std::sort(msgs.begin(), msgs.end(), [&](const Msg &a, const Msg &c) {
      return ctx.arena->path_compare(a.inst, c.inst) < 0;
    });
    return msgs;
  }

  // Kills the seed positions and everything live that happens after any of
  // them; returns all positions that died. hb.rel is transitive, so scanning
  // followers of the seeds alone is exhaustive.
  std::vector<uint32_t> remove_cascade(Branch &b,
                                       const std::vector<uint32_t> &seed) const {
    std::vector<uint32_t> gone;
    for (uint32_t s : seed)
      if (b.alive[s]) {
        b.alive[s] = 0;
        gone.push_back(s);
      }
    for (uint32_t y = 0; y < E.size(); ++y) {
      if (!b.alive[y]) continue;
      for (uint32_t s : seed)
        if (hb.rel.test(s, y)) {
          b.alive[y] = 0;
          gone.push_back(y);
          break;
        }
    }
    return gone;
  }

  // e' cannot run once the event before it, or anything that event needs,
  // is gone.
  bool lost_required(const std::vector<uint32_t> &gone) const {
    if (e2 == kNoPos) return false;
    for (uint32_t g : gone)
      if (g == e2 || hb.rel.test(g, e2)) return true;
    return false;
  }

  // Live happens-before generators plus the forced edges, closed over
  // whole-message handler order. false when that closure is cyclic.
  std::pair<BitRel, bool> build_rel(const Branch &b,
                                    const EdgeList &more) const {
    BitRel rel(static_cast<uint32_t>(E.size()));
    auto add = [&](const EdgeList &es) {
      for (auto [a, c] : es)
        if (b.alive[a] && b.alive[c]) rel.set(a, c);
    };
    add(hb.po);
    add(hb.cnf);
    add(hb.pb);
    add(b.extra);
    add(more);
    std::vector<Inst> inst_of(E.size());
    std::vector<int> handler_of(E.size(), -1);
    for (uint32_t i = 0; i < E.size(); ++i) {
      inst_of[i] = E[i].inst;
      if (b.alive[i]) handler_of[i] = ctx.arena->handler_of(E[i].inst);
    }
    bool ok = saturate(rel, inst_of, handler_of);
    return {std::move(rel), ok};
  }

  void process(Branch b) {
    ++st.branches;
    for (size_t pass = 0;; ++pass) {
      assert(pass <= E.size() * E.size() + 8);
      std::vector<Msg> msgs = classify(b);
      std::map<int, std::vector<Msg *>> byh;
      for (Msg &m : msgs) byh[m.handler].push_back(&m);

      // The message performing e' must end up the only unfinished one on its
      // handler: competitors go, and when e' is a Begin every unfinished
      // message there goes. A message holding a predecessor of e''s previous
      // event is likewise forced to stay; two forced survivors cannot both
      // be kept, so everything goes and the branch dies below.
      std::vector<uint32_t> drop;
      for (auto &[h, list] : byh) {
        std::vector<Msg *> open, forced;
        for (Msg *m : list)
          if (!m->complete) open.push_back(m);
        for (Msg *m : open) {
          bool keep = m->inst == E[ep].inst;
          if (e2 != kNoPos)
            for (uint32_t x : m->live) keep = keep || hb.rel.test(x, e2);
          if (keep) forced.push_back(m);
        }
        bool claimed = ep_begins && h == ep_handler;
        assert(!claimed || forced.empty());
        if (forced.empty() && !claimed) continue;
        bool all = claimed || forced.size() >= 2;
        for (Msg *m : open) {
          if (!all && m == forced[0]) continue;
          drop.insert(drop.end(), m->live.begin(), m->live.end());
          b.removed.push_back(m->inst);
        }
      }
      if (!drop.empty()) {
        auto gone = remove_cascade(b, drop);
        if (lost_required(gone)) {
          ++st.abandoned;
          return;
        }
        continue;
      }

      // Several unfinished messages left on one handler: each could be the
      // one to keep, so the branch splits.
      bool split = false;
      for (auto &[h, list] : byh) {
        std::vector<Msg *> open;
        for (Msg *m : list)
          if (!m->complete) open.push_back(m);
        if (open.size() < 2) continue;
        for (Msg *keep : open) {
          Branch child = b;
          std::vector<uint32_t> cdrop;
          for (Msg *m : open) {
            if (m == keep) continue;
            cdrop.insert(cdrop.end(), m->live.begin(), m->live.end());
            child.removed.push_back(m->inst);
          }
          auto gone = remove_cascade(child, cdrop);
          if (lost_required(gone))
            ++st.abandoned;
          else
            todo.push_back(std::move(child));
        }
        split = true;
        break;
      }
      if (split) return;

      // Finished messages run before their handler's unfinished one.
      bool added = false;
      for (auto &[h, list] : byh) {
        Msg *open = nullptr;
        for (Msg *m : list)
          if (!m->complete) open = m;
        if (!open) continue;
        for (Msg *m : list) {
          if (m == open) continue;
          std::pair<uint32_t, uint32_t> edge{m->live.back(),
                                             open->live.front()};
          if (std::find(b.extra.begin(), b.extra.end(), edge) ==
              b.extra.end()) {
            b.extra.push_back(edge);
            added = true;
          }
        }
      }

      auto [rel, ok] = build_rel(b, {});
      if (!ok) {
        // The forced order is cyclic; dropping any message on a cycle could
        // resolve it, so each is tried.
        ++st.cycle_breaks;
        std::vector<Msg *> culprits;
        for (Msg &m : msgs) {
          bool looped = false;
          for (uint32_t x : m.live) looped = looped || rel.test(x, x);
          if (looped) culprits.push_back(&m);
        }
        assert(!culprits.empty());
        for (Msg *m : culprits) {
          Branch child = b;
          child.removed.push_back(m->inst);
          auto gone = remove_cascade(child, m->live);
          if (lost_required(gone))
            ++st.abandoned;
          else
            todo.push_back(std::move(child));
        }
        return;
      }
      if (!added) {
        finish(b, msgs, rel);
        return;
      }
    }
  }

  void finish(Branch &b, std::vector<Msg> &msgs, const BitRel &rel) {
    // Same-handler messages the order left unrelated default to the order
    // they appear in; pairs are flipped until the whole order is acyclic.
    std::map<int, std::vector<Msg *>> byh;
    for (Msg &m : msgs) byh[m.handler].push_back(&m);
    std::vector<std::pair<Msg *, Msg *>> free;
    for (auto &[h, list] : byh) {
      std::sort(list.begin(), list.end(), [](const Msg *a, const Msg *c) {
        return a->live.front() < c->live.front();
      });
      for (size_t i = 0; i < list.size(); ++i)
        for (size_t j = i + 1; j < list.size(); ++j)
          if (!rel.test(list[i]->live.front(), list[j]->live.front()) &&
              !rel.test(list[j]->live.front(), list[i]->live.front()))
            free.emplace_back(list[i], list[j]);
    }

    std::vector<char> flips(free.size(), 0);
    auto edges_for = [&](size_t upto) {
      EdgeList es;
      for (size_t i = 0; i < upto; ++i) {
        const Msg *a = flips[i] ? free[i].second : free[i].first;
        const Msg *c = flips[i] ? free[i].first : free[i].second;
        es.emplace_back(a->live.back(), c->live.front());
      }
      return es;
    };
    bool solved =
        free.empty() || build_rel(b, edges_for(free.size())).second;
    if (!solved) {
      ++st.order_searches;
      // Unflipped-first search; a cyclic partial order stays cyclic under
      // more edges, so whole subtrees are pruned at their first conflict.
      std::function<bool(size_t)> settle = [&](size_t i) {
        if (!build_rel(b, edges_for(i)).second) return false;
        if (i == free.size()) return true;
        flips[i] = 0;
        if (settle(i + 1)) return true;
        flips[i] = 1;
        if (settle(i + 1)) return true;
        flips[i] = 0;
        return false;
      };
      solved = settle(0);
    }
    if (!solved) {
      ++st.unorderable;
      return;
    }

    auto [fin, ok] = build_rel(b, edges_for(free.size()));
    assert(ok);
    (void)ok;

    // Linearize favoring the recorded positions, so the verbatim prefix is
    // as long as the order allows.
    std::vector<uint32_t> live;
    for (uint32_t i = 0; i < E.size(); ++i)
      if (b.alive[i]) live.push_back(i);
    std::vector<uint32_t> order;
    std::vector<char> done(E.size(), 0);
    while (order.size() < live.size()) {
      bool moved = false;
      for (uint32_t x : live) {
        if (done[x]) continue;
        bool ready = true;
        for (uint32_t y : live)
          ready = ready && (y == x || done[y] || !fin.test(y, x));
        if (!ready) continue;
        done[x] = 1;
        order.push_back(x);
        moved = true;
        break;
      }
      assert(moved);
      (void)moved;
    }

    size_t cut = 0;
    while (cut < order.size() && order[cut] == cut) ++cut;
    std::vector<Inst> sched;
    for (size_t i = 0; i < cut; ++i) sched.push_back(E[i].inst);
    for (size_t i = cut; i < order.size(); ++i)
      sched.push_back(E[order[i]].inst);
    sched.push_back(E[ep].inst);

    ExecutionRecord rec;
    try {
      rec = run(*ctx.prog, *ctx.arena, sched);
    } catch (const std::runtime_error &) {
      ++st.replay_rejected;
      return;
    }
    assert(rec.events.size() == sched.size());

    ReversalCandidate cand;
    cand.prefix_len = cut;
    cand.wakeup.assign(rec.events.begin() + (long)cut, rec.events.end());
    cand.removed = b.removed;
    for (char f : flips) cand.order_repairs += (uint32_t)f;
    EventSeq planned;
    for (size_t i = cut; i < order.size(); ++i) planned.push_back(E[order[i]]);
    planned.push_back(E[ep]);
    for (size_t i = 0; i < planned.size(); ++i) {
      const Event &got = cand.wakeup[i];
      cand.diverged = cand.diverged || got.inst != planned[i].inst ||
                      got.index != planned[i].index ||
                      !(got.access == planned[i].access);
    }

    if (!seen.insert(trace_key(ctx, rec.events)).second) {
      ++st.duplicates;
      return;
    }
    out.push_back(std::move(cand));
  }
};

}  // namespace

std::vector<uint32_t> not_after(const HbRelation &hb, uint32_t e) {
  std::vector<uint32_t> keep;
  for (uint32_t i = 0; i < hb.rel.size(); ++i)
    if (i != e && !hb.rel.test(e, i)) keep.push_back(i);
  return keep;
}

EventSeq not_after(const EventCtx &ctx, const EventSeq &events, uint32_t e) {
  HbRelation hb = compute_hb(ctx, events);
  EventSeq out;
  for (uint32_t i : not_after(hb, e)) out.push_back(events[i]);
  return out;
}

std::vector<ReversalCandidate> reverse_race(const EventCtx &ctx,
                                            const EventSeq &events, uint32_t e,
                                            uint32_t eprime,
                                            ReversalStats *stats) {
  assert(eprime < events.size() && e < eprime);
  assert(conflicting(ctx, events[e], events[eprime]));
  ReversalStats local;
  Reverser rev(ctx, events, e, eprime, stats ? *stats : local);

  Branch root;
  root.alive.assign(events.size(), 0);
  for (uint32_t i = 0; i < events.size(); ++i)
    root.alive[i] = i != e && !rev.hb.rel.test(e, i);
  if (rev.e2 != kNoPos && !root.alive[rev.e2]) {
    // e happens before e''s own predecessor: nothing to reverse.
    ++rev.st.abandoned;
    return {};
  }
  rev.todo.push_back(std::move(root));
  while (!rev.todo.empty()) {
    Branch b = std::move(rev.todo.front());
    rev.todo.pop_front();
    rev.process(std::move(b));
  }
  return std::move(rev.out);
}

std::vector<Inst> candidate_schedule(const EventSeq &events,
                                     const ReversalCandidate &cand) {
  std::vector<Inst> sched;
  sched.reserve(cand.prefix_len + cand.wakeup.size());
  for (size_t i = 0; i < cand.prefix_len; ++i) sched.push_back(events[i].inst);
  for (const Event &ev : cand.wakeup) sched.push_back(ev.inst);
  return sched;
}

std::string describe(const EventCtx &ctx, const EventSeq &events,
                     const ReversalCandidate &cand) {
  std::string s;
  for (size_t i = 0; i < cand.prefix_len; ++i) {
    if (i) s += '.';
    s += ctx.arena->path_string(*ctx.prog, events[i].inst);
  }
  s += '|';
  for (size_t i = 0; i < cand.wakeup.size(); ++i) {
    if (i) s += '.';
    s += ctx.arena->path_string(*ctx.prog, cand.wakeup[i].inst);
  }
  return s;
}

}  // namespace evdpor
