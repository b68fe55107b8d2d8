#include "evdpor/consistency.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace evdpor {

namespace {

using K = AccessDesc::Kind;

std::vector<AccessDesc> performed_globals(const EventSeq &base,
                                          const EventSeq &w, Inst q) {
  std::vector<AccessDesc> out;
  for (const EventSeq *s : {&base, &w})
    for (const Event &e : *s)
      if (e.inst == q && e.access.is_global()) out.push_back(e.access);
  return out;
}

uint32_t events_of(const EventSeq &base, const EventSeq &w, Inst q) {
  uint32_t n = 0;
  for (const EventSeq *s : {&base, &w})
    for (const Event &e : *s)
      if (e.inst == q) ++n;
  return n;
}

bool completed_in(const EventSeq &base, const EventSeq &w, Inst q) {
  for (const EventSeq *s : {&base, &w})
    for (const Event &e : *s)
      if (e.inst == q && e.completes) return true;
  return false;
}

bool is_prefix(const std::vector<AccessDesc> &pre,
               const std::vector<AccessDesc> &full) {
  if (pre.size() > full.size()) return false;
  return std::equal(pre.begin(), pre.end(), full.begin());
}

// Remaining global accesses of q, one choice per summary sequence whose
// prefix matches what q already performed. known=false when the summary is
// absent or matches nothing recorded.
struct Remainder {
  std::vector<std::vector<AccessDesc>> choices;
  bool known = false;
};

Remainder remainder_of(const EventSeq &base, const EventSeq &w, Inst q,
                       const SummarySource &summaries) {
  Remainder r;
  auto sum = summaries.body_accesses(q);
  if (!sum) return r;
  std::vector<AccessDesc> done = performed_globals(base, w, q);
  std::set<std::vector<AccessDesc>> uniq;
  for (const auto &seq : sum->sequences)
    if (is_prefix(done, seq))
      uniq.insert({seq.begin() + (long)done.size(), seq.end()});
  if (uniq.empty()) return r;
  r.known = true;
  r.choices.assign(uniq.begin(), uniq.end());
  return r;
}

// Pseudo-events for the unperformed accesses of q, indices continuing its
// performed count; a synthetic begin is prepended for a message that has
// not appeared yet.
EventSeq extension_events(Inst q, uint32_t performed, bool with_begin,
                          const std::vector<AccessDesc> &rem) {
  EventSeq out;
  uint32_t idx = performed;
  if (with_begin) {
    Event b;
    b.inst = q;
    b.index = ++idx;
    b.access.kind = K::Begin;
    out.push_back(b);
  }
  for (const AccessDesc &a : rem) {
    Event e;
    e.inst = q;
    e.index = ++idx;
    e.access = a;
    out.push_back(e);
  }
  return out;
}

// base + wprime with per-position instance and handler tags.
struct Dom {
  EventSeq full;
  size_t wstart = 0;
  std::vector<Inst> inst_of;
  std::vector<int> handler_of;
};

Dom make_dom(const EventCtx &ctx, const EventSeq &base,
             const EventSeq &wprime) {
  Dom d;
  d.full = base;
  d.full.insert(d.full.end(), wprime.begin(), wprime.end());
  d.wstart = base.size();
  d.inst_of.reserve(d.full.size());
  d.handler_of.reserve(d.full.size());
  for (const Event &e : d.full) {
    d.inst_of.push_back(e.inst);
    d.handler_of.push_back(ctx.arena->handler_of(e.inst));
  }
  return d;
}

std::vector<size_t> positions_of(const Dom &d, Inst q, size_t from = 0) {
  std::vector<size_t> out;
  for (size_t i = from; i < d.full.size(); ++i)
    if (d.inst_of[i] == q) out.push_back(i);
  return out;
}

// A message begun before the window ends holds its handler, so its events
// precede every later event on that handler.
void add_started_first_edges(const Dom &d, BitRel &rel) {
  std::set<Inst> begun;
  for (size_t i = 0; i < d.wstart; ++i)
    if (d.full[i].index == 1 && d.handler_of[i] >= 0)
      begun.insert(d.inst_of[i]);
  for (size_t i = 0; i < d.full.size(); ++i) {
    if (!begun.count(d.inst_of[i])) continue;
    for (size_t j = i + 1; j < d.full.size(); ++j)
      if (d.inst_of[j] != d.inst_of[i] && d.handler_of[j] == d.handler_of[i])
        rel.set(i, j);
  }
}

void add_message_order(BitRel &rel, const std::vector<size_t> &before,
                       const std::vector<size_t> &after) {
  for (size_t i : before)
    for (size_t j : after)
      if (i != j) rel.set(i, j);
}

// Window-local Kahn order over d.full[wstart..), forcing first to open and
// breaking ties toward the smallest position. nullopt on a cycle or when
// first is not initially minimal.
// Constraint edges every execution embedding the window must satisfy:
// program order, window-internal posted-by, conflicts among original window
// events (their order is fixed), and conflicts from a window event into an
// extension event (an extension event ahead of a conflicting window event
// would become its happens-before predecessor and break prefix closure).
// Conflict pairs among extension events stay unordered.
BitRel window_rel(const EventCtx &ctx, const Dom &d, size_t w_count) {
  size_t n = d.full.size();
  BitRel rel(n);
  std::map<Inst, size_t> last;
  for (size_t i = d.wstart; i < n; ++i) {
    auto it = last.find(d.inst_of[i]);
    if (it != last.end()) rel.set(it->second, i);
    last[d.inst_of[i]] = i;
  }
  for (size_t j = d.wstart; j < n; ++j)
    if (d.full[j].access.kind == K::Begin)
      for (size_t i = d.wstart; i < n; ++i)
        if (d.full[i].access.kind == K::Post &&
            d.full[i].access.target == d.inst_of[j])
          rel.set(i, j);
  size_t wend = d.wstart + w_count;
  for (size_t i = d.wstart; i < wend && i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      if (conflicting(ctx, d.full[i], d.full[j])) rel.set(i, j);
  return rel;
}

std::optional<std::vector<size_t>> topo_wprime(const Dom &d, const BitRel &rel,
                                               size_t first) {
  size_t n = d.full.size();
  std::vector<char> placed(n, 0);
  auto ready = [&](size_t j) {
    for (size_t i = d.wstart; i < n; ++i)
      if (!placed[i] && i != j && rel.test(i, j)) return false;
    return true;
  };
  if (!ready(first)) return std::nullopt;
  std::vector<size_t> order{first};
  placed[first] = 1;
  for (size_t k = d.wstart + 1; k < n; ++k) {
    size_t pick = SIZE_MAX;
    for (size_t j = d.wstart; j < n; ++j)
      if (!placed[j] && ready(j)) {
        pick = j;
        break;
      }
    if (pick == SIZE_MAX) return std::nullopt;
    placed[pick] = 1;
    order.push_back(pick);
  }
  return order;
}

struct ReplayResult {
  EventSeq got;
  bool ok = false;
};

// Steps the order from a copy of the state after base. A begin blocked by a
// handler body that only has local work left drains that body first.
// Predicted accesses are verified: exactly for original window events,
// instance+access for extension events.
ReplayResult replay_order(const EventCtx &ctx, const MachineState &after_base,
                          const Dom &d, const std::vector<size_t> &order,
                          size_t w_end) {
  ReplayResult rr;
  MachineState st = after_base;
  const Program &prog = *ctx.prog;
  InstanceArena &arena = *ctx.arena;
  for (size_t pos : order) {
    const Event &pred = d.full[pos];
    int guard = 0;
    while (!is_enabled(prog, arena, st, pred.inst)) {
      if (pred.access.kind != K::Begin) return rr;
      int h = arena.handler_of(pred.inst);
      if (h < 0 || st.handlers[h].running == kNoInst) return rr;
      Inst blocker = st.handlers[h].running;
      if (peek_access(prog, arena, st, blocker).access.is_global()) return rr;
      rr.got.push_back(step(prog, arena, st, blocker));
      if (++guard > 4) return rr;
    }
    Event got = step(prog, arena, st, pred.inst);
    if (got.inst != pred.inst) return rr;
    if (pos < w_end) {
      if (!(got.access == pred.access && got.index == pred.index &&
            got.completes == pred.completes))
        return rr;
    } else if (!(got.access == pred.access)) {
      return rr;
    }
    rr.got.push_back(got);
  }
  rr.ok = true;
  return rr;
}

Tri scheduled_inspect(const EventCtx &ctx, const EventSeq &base,
                      const MachineState &state, const EventSeq &w, Inst p) {
  auto it = state.runs.find(p);
  if (it == state.runs.end() || it->second.status == InstRun::Status::Done)
    return Tri::False;
  if (!is_enabled(*ctx.prog, *ctx.arena, state, p)) return Tri::False;
  PeekResult nx = peek_access(*ctx.prog, *ctx.arena, state, p);
  if (!nx.access.is_shared_access()) return Tri::True;
  size_t pfirst = SIZE_MAX;
  for (size_t i = 0; i < w.size(); ++i)
    if (w[i].inst == p) {
      pfirst = i;
      break;
    }
  if (pfirst == SIZE_MAX) {
    Event nev;
    nev.inst = p;
    nev.index = events_of(base, w, p) + 1;
    nev.access = nx.access;
    nev.completes = nx.completes;
    for (const Event &e : w)
      if (conflicting(ctx, e, nev)) return Tri::False;
    return Tri::True;
  }
  EventSeq full = base;
  full.insert(full.end(), w.begin(), w.end());
  HbRelation hb = compute_hb(ctx, full);
  size_t tgt = base.size() + pfirst;
  for (size_t j = base.size(); j < full.size(); ++j)
    if (j != tgt && hb.before(j, tgt)) return Tri::False;
  return Tri::True;
}

bool posted_in(const EventSeq &base, Inst p) {
  for (const Event &e : base)
    if (e.access.kind == K::Post && e.access.target == p) return true;
  return false;
}

// Handler mates whose first window appearance precedes p's.
std::vector<Inst> mates_before(const EventCtx &ctx, const Dom &d, Inst p) {
  int h = ctx.arena->handler_of(p);
  size_t pfirst = d.full.size();
  for (size_t i = d.wstart; i < d.full.size(); ++i)
    if (d.inst_of[i] == p) {
      pfirst = i;
      break;
    }
  std::vector<Inst> mates;
  std::set<Inst> seen;
  for (size_t i = d.wstart; i < pfirst; ++i) {
    Inst q = d.inst_of[i];
    if (q != p && d.handler_of[i] == h && seen.insert(q).second)
      mates.push_back(q);
  }
  return mates;
}

enum class StageOut { False, TrueVerified, Inconclusive };

struct ChainCtx {
  const EventCtx &ctx;
  const EventSeq &base;
  const MachineState &state;
  const EventSeq &w;
  Inst p;
  const SummarySource &summaries;
  WiStats *stats;
  bool entered_witness = false;
  bool missing_info = false;
  bool overflow = false;
  int combos = 0;
};

// Happens-before check then witness construction on one fully extended
// window. False is definitive for the behaviours this window assumes.
StageOut evaluate_stage(ChainCtx &cc, const EventSeq &wprime) {
  const EventCtx &ctx = cc.ctx;
  Dom d = make_dom(ctx, cc.base, wprime);
  BitRel rel = window_rel(ctx, d, cc.w.size());
  add_started_first_edges(d, rel);
  if (!saturate(rel, d.inst_of, d.handler_of)) return StageOut::Inconclusive;
  std::vector<size_t> pev = positions_of(d, cc.p, d.wstart);
  if (pev.empty()) return StageOut::Inconclusive;
  std::vector<Inst> mates = mates_before(ctx, d, cc.p);
  for (Inst m : mates)
    for (size_t b : positions_of(d, m))
      for (size_t a : pev)
        if (rel.test(b, a)) return StageOut::False;
  if (!cc.entered_witness) {
    cc.entered_witness = true;
    if (cc.stats) cc.stats->witness_constructions++;
  }
  BitRel wit = rel;
  for (Inst m : mates) add_message_order(wit, pev, positions_of(d, m));
  if (!saturate(wit, d.inst_of, d.handler_of)) return StageOut::False;
  // remaining unordered same-handler pairs run in appearance order
  std::map<int, std::vector<Inst>> byh;
  std::set<Inst> seen;
  for (size_t i = 0; i < d.full.size(); ++i)
    if (d.handler_of[i] >= 0 && seen.insert(d.inst_of[i]).second)
      byh[d.handler_of[i]].push_back(d.inst_of[i]);
  for (auto &[h, insts] : byh)
    for (size_t a = 0; a < insts.size(); ++a)
      for (size_t b = a + 1; b < insts.size(); ++b) {
        auto pa = positions_of(d, insts[a]);
        auto pb = positions_of(d, insts[b]);
        bool any = false;
        for (size_t i : pa)
          for (size_t j : pb)
            any = any || wit.test(i, j) || wit.test(j, i);
        if (!any) add_message_order(wit, pa, pb);
      }
  if (!saturate(wit, d.inst_of, d.handler_of)) return StageOut::Inconclusive;
  auto order = topo_wprime(d, wit, pev.front());
  if (!order) return StageOut::Inconclusive;
  ReplayResult rr =
      replay_order(ctx, cc.state, d, *order, d.wstart + cc.w.size());
  if (!rr.ok) return StageOut::Inconclusive;
  if (!is_hb_prefix_after(ctx, cc.base, cc.w, rr.got))
    return StageOut::Inconclusive;
  return StageOut::TrueVerified;
}

// First incomplete message on another handler that an already extended
// message happens-after; extending it tightens the check.
std::optional<Inst> entangle_trigger(ChainCtx &cc, const EventSeq &wprime,
                                     const std::set<Inst> &extended) {
  const EventCtx &ctx = cc.ctx;
  Dom d = make_dom(ctx, cc.base, wprime);
  HbRelation hb = compute_hb(ctx, d.full);
  std::set<Inst> sources = extended;
  sources.insert(cc.p);
  std::vector<Inst> cands;
  std::set<Inst> seen;
  for (size_t i = d.wstart; i < d.full.size(); ++i) {
    Inst q = d.inst_of[i];
    if (d.handler_of[i] < 0 || sources.count(q)) continue;
    if (completed_in(cc.base, wprime, q)) continue;
    if (seen.insert(q).second) cands.push_back(q);
  }
  std::sort(cands.begin(), cands.end(), [&](Inst a, Inst b) {
    return ctx.arena->path_compare(a, b) < 0;
  });
  for (Inst q : cands) {
    int hq = ctx.arena->handler_of(q);
    for (size_t i = 0; i < d.full.size(); ++i) {
      if (d.inst_of[i] != q) continue;
      for (size_t j = d.wstart; j < d.full.size(); ++j)
        if (sources.count(d.inst_of[j]) &&
            ctx.arena->handler_of(d.inst_of[j]) != hq && hb.before(i, j))
          return q;
    }
  }
  return std::nullopt;
}

struct Agg {
  bool any_true = false;
  bool all_false = true;
};

void chain_dfs(ChainCtx &cc, const EventSeq &wprime, std::set<Inst> extended,
               bool path_missing, Agg &agg) {
  if (agg.any_true || cc.overflow) return;
  auto trig = entangle_trigger(cc, wprime, extended);
  if (trig) {
    Remainder rem = remainder_of(cc.base, wprime, *trig, cc.summaries);
    extended.insert(*trig);
    if (!rem.known) {
      cc.missing_info = true;
      chain_dfs(cc, wprime, extended, true, agg);
      return;
    }
    for (const auto &choice : rem.choices) {
      EventSeq w2 = wprime;
      EventSeq ext =
          extension_events(*trig, events_of(cc.base, wprime, *trig), false,
                           choice);
      w2.insert(w2.end(), ext.begin(), ext.end());
      chain_dfs(cc, w2, extended, path_missing, agg);
      if (agg.any_true || cc.overflow) return;
    }
    return;
  }
  if (++cc.combos > 256) {
    cc.overflow = true;
    agg.all_false = false;
    return;
  }
  StageOut o = evaluate_stage(cc, wprime);
  if (o == StageOut::TrueVerified) {
    agg.any_true = true;
    return;
  }
  if (o == StageOut::False && !path_missing) return;
  agg.all_false = false;
}

Tri wi_starting(const EventCtx &ctx, const EventSeq &base,
                const MachineState &state, const EventSeq &w, Inst p,
                const SummarySource &summaries, WiStats *stats) {
  if (!posted_in(base, p)) return Tri::False;
  if (!is_enabled(*ctx.prog, *ctx.arena, state, p)) return Tri::False;
  if (stats) stats->simple_checks++;
  int h = ctx.arena->handler_of(p);
  Inst first_on_h = kNoInst;
  for (const Event &e : w)
    if (ctx.arena->handler_of(e.inst) == h) {
      first_on_h = e.inst;
      break;
    }
  if (first_on_h == kNoInst || first_on_h == p) return Tri::True;
  if (stats) stats->hb_checks++;
  ChainCtx cc{ctx, base, state, w, p, summaries, stats};
  Agg agg;
  bool p_in_w = false;
  for (const Event &e : w) p_in_w = p_in_w || e.inst == p;
  if (completed_in(base, w, p)) {
    chain_dfs(cc, w, {}, false, agg);
  } else {
    Remainder rem = remainder_of(base, w, p, summaries);
    if (!rem.known) {
      if (!p_in_w) return Tri::Unknown;
      cc.missing_info = true;
      chain_dfs(cc, w, {}, true, agg);
    } else {
      for (const auto &choice : rem.choices) {
        EventSeq w2 = w;
        EventSeq ext =
            extension_events(p, events_of(base, w, p), !p_in_w, choice);
        w2.insert(w2.end(), ext.begin(), ext.end());
        chain_dfs(cc, w2, {}, false, agg);
        if (agg.any_true) break;
      }
    }
  }
  if (agg.any_true) return Tri::True;
  if (agg.all_false && !cc.missing_info && !cc.overflow && cc.combos > 0)
    return Tri::False;
  return wi_decide(ctx, base, state, w, p, summaries, stats);
}

}  // namespace

void AccessSummary::add(std::vector<AccessDesc> seq) {
  auto it = std::lower_bound(sequences.begin(), sequences.end(), seq);
  if (it == sequences.end() || *it != seq) sequences.insert(it, std::move(seq));
}

Tri wi_member(const EventCtx &ctx, const EventSeq &base,
              const MachineState &state, const EventSeq &w, Inst p,
              const SummarySource &summaries, WiStats *stats) {
  Tri r;
  if (!starts_after(state, p)) {
    if (stats) stats->scheduled_inspections++;
    r = scheduled_inspect(ctx, base, state, w, p);
  } else {
    r = wi_starting(ctx, base, state, w, p, summaries, stats);
  }
  if (r == Tri::Unknown && stats) stats->unknowns++;
  return r;
}

Tri wi_decide(const EventCtx &ctx, const EventSeq &base,
              const MachineState &state, const EventSeq &w, Inst p,
              const SummarySource &summaries, WiStats *stats) {
  if (stats) stats->decision_procedure_calls++;
  if (!starts_after(state, p)) return scheduled_inspect(ctx, base, state, w, p);
  if (!posted_in(base, p)) return Tri::False;
  if (!is_enabled(*ctx.prog, *ctx.arena, state, p)) return Tri::False;

  InstanceArena &arena = *ctx.arena;
  bool p_in_w = false;
  for (const Event &e : w) p_in_w = p_in_w || e.inst == p;

  std::map<int, std::vector<Inst>> byh;
  {
    std::set<Inst> seen;
    auto note = [&](Inst q) {
      if (arena.handler_of(q) < 0) return;
      if (seen.insert(q).second) byh[arena.handler_of(q)].push_back(q);
    };
    note(p);
    for (const Event &e : w) note(e.inst);
  }
  // forced heads: p on its handler, and any handler whose body was still
  // running when base ended must finish that body first
  std::map<int, Inst> head;
  head[arena.handler_of(p)] = p;
  {
    std::set<Inst> begun, done;
    for (const Event &e : base) {
      if (e.index == 1 && arena.handler_of(e.inst) >= 0) begun.insert(e.inst);
      if (e.completes) done.insert(e.inst);
    }
    for (Inst q : begun) {
      if (done.count(q)) continue;
      int hq = arena.handler_of(q);
      auto it = byh.find(hq);
      if (it == byh.end()) continue;
      if (std::find(it->second.begin(), it->second.end(), q) ==
          it->second.end())
        continue;
      if (head.count(hq) && head[hq] != q) return Tri::False;
      head[hq] = q;
    }
  }
  std::vector<int> hs;
  for (auto &[hh, v] : byh) {
    std::sort(v.begin(), v.end(),
              [&](Inst a, Inst b) { return arena.path_compare(a, b) < 0; });
    hs.push_back(hh);
  }

  bool found = false;
  bool missing_any = false;
  bool over = false;
  bool soft_fail = false;
  long budget = 20000;
  std::vector<std::vector<Inst>> perms(hs.size());

  // 0 = rejected by the constraint relation (definitive for this candidate),
  // 1 = relation admits an order but replay or embedding failed, 2 = witness
  enum { kHard = 0, kSoft = 1, kHit = 2 };
  auto eval_candidate = [&](const EventSeq &wprime) -> int {
    Dom d = make_dom(ctx, base, wprime);
    size_t wend = d.wstart + w.size();
    BitRel rel = window_rel(ctx, d, w.size());
    for (size_t hi = 0; hi < hs.size(); ++hi) {
      const auto &perm = perms[hi];
      for (size_t a = 0; a < perm.size(); ++a)
        for (size_t b = a + 1; b < perm.size(); ++b)
          add_message_order(rel, positions_of(d, perm[a], d.wstart),
                            positions_of(d, perm[b], d.wstart));
    }
    rel.transitive_close();
    if (rel.has_cycle()) return kHard;
    auto pev = positions_of(d, p, d.wstart);
    if (pev.empty()) return kHard;
    auto order = topo_wprime(d, rel, pev.front());
    if (!order) return kHard;
    ReplayResult rr = replay_order(ctx, state, d, *order, wend);
    if (!rr.ok) return kSoft;
    return is_hb_prefix_after(ctx, base, w, rr.got) ? kHit : kSoft;
  };

  auto try_candidate = [&]() {
    std::vector<std::pair<Inst, Remainder>> needs;
    for (size_t hi = 0; hi < hs.size(); ++hi) {
      const auto &perm = perms[hi];
      for (size_t i = 0; i + 1 < perm.size(); ++i) {
        Inst q = perm[i];
        if (completed_in(base, w, q)) continue;
        Remainder r = remainder_of(base, w, q, summaries);
        if (!r.known) {
          missing_any = true;
          return;
        }
        needs.push_back({q, r});
      }
    }
    size_t combos = 1;
    for (auto &[q, r] : needs) {
      combos *= r.choices.size();
      if (combos > 64) {
        over = true;
        return;
      }
    }
    EventSeq seed;
    if (!p_in_w)
      seed = extension_events(p, 0, true, {});
    std::vector<size_t> pick(needs.size(), 0);
    while (true) {
      if (--budget <= 0) {
        over = true;
        return;
      }
      EventSeq wprime = w;
      wprime.insert(wprime.end(), seed.begin(), seed.end());
      for (size_t i = 0; i < needs.size(); ++i) {
        auto &[q, r] = needs[i];
        uint32_t performed =
            events_of(base, w, q) + (q == p && !p_in_w ? 1u : 0u);
        EventSeq ext = extension_events(q, performed, false, r.choices[pick[i]]);
        wprime.insert(wprime.end(), ext.begin(), ext.end());
      }
      int r = eval_candidate(wprime);
      if (r == kHit) {
        found = true;
        return;
      }
      if (r == kSoft) soft_fail = true;
      size_t i = 0;
      for (; i < pick.size(); ++i) {
        if (++pick[i] < needs[i].second.choices.size()) break;
        pick[i] = 0;
      }
      if (i == pick.size()) break;
    }
  };

  std::function<void(size_t)> go = [&](size_t k) {
    if (found || over) return;
    if (k == hs.size()) {
      try_candidate();
      return;
    }
    std::vector<Inst> v = byh[hs[k]];
    std::sort(v.begin(), v.end());
    do {
      auto it = head.find(hs[k]);
      if (it != head.end() && v.front() != it->second) continue;
      perms[k] = v;
      go(k + 1);
      if (found || over) return;
    } while (std::next_permutation(v.begin(), v.end()));
  };
  go(0);

  if (found) return Tri::True;
  if (missing_any || over || soft_fail) return Tri::Unknown;
  return Tri::False;
}

namespace {

std::string kind_name(K k) {
  switch (k) {
    case K::Begin: return "begin";
    case K::Local: return "local";
    case K::Read: return "read";
    case K::Write: return "write";
    case K::Rmw: return "rmw";
    case K::Post: return "post";
  }
  return "local";
}

K kind_from(const std::string &s) {
  if (s == "begin") return K::Begin;
  if (s == "local") return K::Local;
  if (s == "read") return K::Read;
  if (s == "write") return K::Write;
  if (s == "rmw") return K::Rmw;
  if (s == "post") return K::Post;
  throw std::runtime_error("bad graph json: unknown access kind '" + s + "'");
}

bool graph_conflicting(const GraphEvent &a, const GraphEvent &b) {
  if (a.instance == b.instance) return false;
  if (!a.access.is_shared_access() || !b.access.is_shared_access())
    return false;
  if (a.access.var != b.access.var) return false;
  return a.access.writes_var() || b.access.writes_var();
}

}  // namespace

ConsistencyGraph graph_of(const ExecutionRecord &rec) {
  ConsistencyGraph g;
  EventCtx ctx{rec.prog, rec.arena, ConflictModel::Fine};
  HbRelation hb = compute_hb(ctx, rec.events);
  g.po = hb.po;
  g.cnf = hb.cnf;
  g.pb = hb.pb;
  const Program &p = *rec.prog;
  for (const Event &e : rec.events) {
    GraphEvent ge;
    ge.instance = rec.arena->path_string(p, e.inst);
    ge.index = (int)e.index;
    ge.access.kind = e.access.kind;
    if (e.access.is_shared_access()) ge.access.var = p.shared_vars[e.access.var];
    if (e.access.kind == K::Post)
      ge.access.target = rec.arena->path_string(p, e.access.target);
    int h = rec.arena->handler_of(e.inst);
    if (h >= 0) ge.handler = p.handlers[h];
    ge.completes = e.completes;
    g.events.push_back(std::move(ge));
  }
  return g;
}

std::string to_json(const ConsistencyGraph &g) {
  nlohmann::ordered_json j;
  j["events"] = nlohmann::ordered_json::array();
  for (const GraphEvent &e : g.events) {
    nlohmann::ordered_json je;
    je["instance"] = e.instance;
    je["index"] = e.index;
    nlohmann::ordered_json ja;
    ja["kind"] = kind_name(e.access.kind);
    if (!e.access.var.empty()) ja["var"] = e.access.var;
    if (!e.access.target.empty()) ja["target"] = e.access.target;
    je["access"] = ja;
    if (!e.handler.empty()) je["handler"] = e.handler;
    je["completes"] = e.completes;
    j["events"].push_back(je);
  }
  auto edges = [](const EdgeList &el) {
    auto a = nlohmann::ordered_json::array();
    for (auto &[x, y] : el) a.push_back(nlohmann::ordered_json::array({x, y}));
    return a;
  };
  j["po"] = edges(g.po);
  j["cnf"] = edges(g.cnf);
  j["pb"] = edges(g.pb);
  return j.dump(2);
}

ConsistencyGraph graph_from_json(const std::string &text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception &e) {
    throw std::runtime_error(std::string("bad graph json: ") + e.what());
  }
  ConsistencyGraph g;
  try {
    for (const auto &je : j.at("events")) {
      GraphEvent e;
      e.instance = je.at("instance").get<std::string>();
      e.index = je.at("index").get<int>();
      const auto &ja = je.at("access");
      e.access.kind = kind_from(ja.at("kind").get<std::string>());
      if (ja.contains("var")) e.access.var = ja["var"].get<std::string>();
      if (ja.contains("target"))
        e.access.target = ja["target"].get<std::string>();
      if (je.contains("handler")) e.handler = je["handler"].get<std::string>();
      if (je.contains("completes")) e.completes = je["completes"].get<bool>();
      g.events.push_back(std::move(e));
    }
    auto edges = [&](const char *key, EdgeList &out) {
      if (!j.contains(key)) return;
      for (const auto &pr : j.at(key))
        out.push_back({pr.at(0).get<uint32_t>(), pr.at(1).get<uint32_t>()});
    };
    edges("po", g.po);
    edges("cnf", g.cnf);
    edges("pb", g.pb);
  } catch (const nlohmann::json::exception &e) {
    throw std::runtime_error(std::string("bad graph json: ") + e.what());
  }
  return g;
}

std::optional<std::vector<uint32_t>>
check_consistency(const ConsistencyGraph &g) {
  size_t n = g.events.size();
  auto bad = [](const std::string &msg) {
    throw std::invalid_argument("malformed graph: " + msg);
  };
  for (const EdgeList *el : {&g.po, &g.cnf, &g.pb})
    for (auto &[a, b] : *el)
      if (a >= n || b >= n || a == b) bad("edge endpoint out of range");

  std::map<std::string, std::vector<uint32_t>> by_inst;
  for (uint32_t i = 0; i < n; ++i) by_inst[g.events[i].instance].push_back(i);
  for (auto &[name, evs] : by_inst) {
    std::set<int> idxs;
    for (uint32_t i : evs) {
      if (!idxs.insert(g.events[i].index).second)
        bad("duplicate index in instance " + name);
      if (g.events[i].handler != g.events[evs[0]].handler)
        bad("handler mismatch in instance " + name);
    }
  }
  BitRel po(n);
  for (auto &[a, b] : g.po) {
    if (g.events[a].instance != g.events[b].instance)
      bad("program-order edge across instances");
    if (g.events[a].index >= g.events[b].index)
      bad("program-order edge against index order");
    po.set(a, b);
  }
  po.transitive_close();
  for (auto &[name, evs] : by_inst) {
    std::vector<uint32_t> sorted = evs;
    std::sort(sorted.begin(), sorted.end(), [&](uint32_t a, uint32_t b) {
      return g.events[a].index < g.events[b].index;
    });
    for (size_t k = 0; k + 1 < sorted.size(); ++k)
      if (!po.test(sorted[k], sorted[k + 1]))
        bad("program order not total for instance " + name);
  }
  std::map<uint32_t, int> pb_in;
  for (auto &[a, b] : g.pb) {
    if (g.events[a].access.kind != K::Post) bad("posted-by source is not a post");
    if (g.events[b].access.kind != K::Begin)
      bad("posted-by target is not a begin");
    if (!g.events[a].access.target.empty() &&
        g.events[a].access.target != g.events[b].instance)
      bad("posted-by target mismatch");
    pb_in[b]++;
  }
  for (uint32_t i = 0; i < n; ++i) {
    bool is_begin = g.events[i].access.kind == K::Begin;
    int cnt = pb_in.count(i) ? pb_in[i] : 0;
    if (is_begin && g.events[i].handler.empty())
      bad("begin event on a thread instance");
    if (is_begin && cnt != 1)
      bad("begin of " + g.events[i].instance + " needs exactly one post");
    if (!is_begin && cnt != 0) bad("posted-by edge into a non-begin event");
  }

  // the conflict edges must cover exactly the conflicting pairs, else no
  // execution's trace can equal g
  std::set<std::pair<uint32_t, uint32_t>> cnfset;
  for (auto &[a, b] : g.cnf) cnfset.insert({std::min(a, b), std::max(a, b)});
  for (uint32_t i = 0; i < n; ++i)
    for (uint32_t j = i + 1; j < n; ++j) {
      bool want = graph_conflicting(g.events[i], g.events[j]);
      bool have = cnfset.count({i, j}) > 0;
      if (want != have) return std::nullopt;
    }

  std::map<std::string, std::vector<std::string>> handler_msgs;
  std::map<std::string, bool> complete;
  for (auto &[name, evs] : by_inst) {
    bool c = false;
    for (uint32_t i : evs) c = c || g.events[i].completes;
    complete[name] = c;
    const std::string &h = g.events[evs[0]].handler;
    if (!h.empty()) handler_msgs[h].push_back(name);
  }
  for (auto &[h, v] : handler_msgs) {
    std::sort(v.begin(), v.end());
    int incomplete = 0;
    for (auto &m : v) incomplete += complete[m] ? 0 : 1;
    if (incomplete > 1) return std::nullopt;
  }

  BitRel fixed(n);
  for (const EdgeList *el : {&g.po, &g.cnf, &g.pb})
    for (auto &[a, b] : *el) fixed.set(a, b);

  std::vector<std::string> hnames;
  for (auto &[h, v] : handler_msgs) hnames.push_back(h);
  std::vector<std::vector<std::string>> perms(hnames.size());
  std::optional<std::vector<uint32_t>> out;
  std::function<void(size_t)> go = [&](size_t k) {
    if (out) return;
    if (k == hnames.size()) {
      BitRel rel = fixed;
      for (auto &perm : perms)
        for (size_t a = 0; a < perm.size(); ++a)
          for (size_t b = a + 1; b < perm.size(); ++b)
            for (uint32_t i : by_inst[perm[a]])
              for (uint32_t j : by_inst[perm[b]]) rel.set(i, j);
      rel.transitive_close();
      if (rel.has_cycle()) return;
      std::vector<uint32_t> order;
      std::vector<char> done(n, 0);
      for (size_t s = 0; s < n; ++s) {
        uint32_t pick = UINT32_MAX;
        for (uint32_t j = 0; j < n && pick == UINT32_MAX; ++j) {
          if (done[j]) continue;
          bool ok = true;
          for (uint32_t i = 0; i < n && ok; ++i)
            if (!done[i] && i != j && rel.test(i, j)) ok = false;
          if (ok) pick = j;
        }
        if (pick == UINT32_MAX) return;
        done[pick] = 1;
        order.push_back(pick);
      }
      out = std::move(order);
      return;
    }
    std::vector<std::string> v = handler_msgs[hnames[k]];
    do {
      bool ok = true;
      for (size_t i = 0; i + 1 < v.size() && ok; ++i) ok = complete[v[i]];
      if (!ok) continue;
      perms[k] = v;
      go(k + 1);
      if (out) return;
    } while (std::next_permutation(v.begin(), v.end()));
  };
  go(0);
  return out;
}

}  // namespace evdpor
