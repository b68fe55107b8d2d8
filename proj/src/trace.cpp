#include "evdpor/trace.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <set>
#include <string>

namespace evdpor {

namespace {

bool fine_conflict(const AccessDesc &a, const AccessDesc &b) {
  if (!a.is_shared_access() || !b.is_shared_access()) return false;
  if (a.var != b.var) return false;
  return a.writes_var() || b.writes_var();
}

}  // namespace

bool conflicting(const EventCtx &ctx, const Event &a, const Event &b) {
  if (a.inst == b.inst) return false;
  if (fine_conflict(a.access, b.access)) return true;
  if (ctx.model == ConflictModel::Coarse) {
    const auto &ia = ctx.arena->info(a.inst);
    const auto &ib = ctx.arena->info(b.inst);
    if (ia.handler >= 0 && ia.handler == ib.handler) return true;
  }
  return false;
}

void BitRel::transitive_close() {
  for (size_t k = 0; k < n_; ++k) {
    const uint64_t *rowk = &bits_[k * words_];
    for (size_t i = 0; i < n_; ++i) {
      if (!test(i, k)) continue;
      uint64_t *rowi = &bits_[i * words_];
      for (size_t w = 0; w < words_; ++w) rowi[w] |= rowk[w];
    }
  }
}

bool BitRel::has_cycle() const {
  BitRel closed = *this;
  closed.transitive_close();
  for (size_t i = 0; i < n_; ++i)
    if (closed.test(i, i)) return true;
  return false;
}

HbRelation compute_hb(const EventCtx &ctx, const EventSeq &events) {
  const size_t n = events.size();
  HbRelation hb;
  hb.rel = BitRel(n);

  std::map<Inst, uint32_t> last_of;   // last position per instance
  std::map<Inst, uint32_t> first_of;  // position of each instance's event 1
  for (uint32_t i = 0; i < n; ++i) {
    auto it = last_of.find(events[i].inst);
    if (it != last_of.end()) hb.po.emplace_back(it->second, i);
    last_of[events[i].inst] = i;
    if (events[i].index == 1) first_of[events[i].inst] = i;
  }
  for (uint32_t i = 0; i < n; ++i) {
    if (events[i].access.kind != AccessDesc::Kind::Post) continue;
    auto it = first_of.find(events[i].access.target);
    if (it != first_of.end()) hb.pb.emplace_back(i, it->second);
  }
  for (uint32_t i = 0; i < n; ++i)
    for (uint32_t j = i + 1; j < n; ++j)
      if (conflicting(ctx, events[i], events[j])) hb.cnf.emplace_back(i, j);

  for (auto [a, b] : hb.po) hb.rel.set(a, b);
  for (auto [a, b] : hb.pb) hb.rel.set(a, b);
  for (auto [a, b] : hb.cnf) hb.rel.set(a, b);
  hb.rel.transitive_close();
  return hb;
}

bool saturate(BitRel &rel, const std::vector<Inst> &inst_of,
              const std::vector<int> &handler_of) {
  const size_t n = rel.size();
  assert(inst_of.size() == n && handler_of.size() == n);

  // Positions grouped per message instance, keyed by (handler, instance).
  std::map<Inst, std::vector<uint32_t>> events_of;
  std::map<Inst, int> handler_by_inst;
  for (uint32_t i = 0; i < n; ++i) {
    if (handler_of[i] < 0) continue;
    events_of[inst_of[i]].push_back(i);
    handler_by_inst[inst_of[i]] = handler_of[i];
  }
  std::vector<std::pair<Inst, Inst>> mates;
  for (auto p = handler_by_inst.begin(); p != handler_by_inst.end(); ++p)
    for (auto q = std::next(p); q != handler_by_inst.end(); ++q)
      if (p->second == q->second) mates.emplace_back(p->first, q->first);

  bool changed = true;
  while (changed) {
    rel.transitive_close();
    changed = false;
    for (auto [p, q] : mates) {
      const auto &ep = events_of[p];
      const auto &eq = events_of[q];
      bool pq = false, qp = false;
      for (uint32_t a : ep)
        for (uint32_t b : eq) {
          pq |= rel.test(a, b);
          qp |= rel.test(b, a);
        }
      if (pq)
        for (uint32_t a : ep)
          for (uint32_t b : eq)
            if (!rel.test(a, b)) {
              rel.set(a, b);
              changed = true;
            }
      if (qp)
        for (uint32_t a : ep)
          for (uint32_t b : eq)
            if (!rel.test(b, a)) {
              rel.set(b, a);
              changed = true;
            }
    }
  }
  for (size_t i = 0; i < n; ++i)
    if (rel.test(i, i)) return false;
  return true;
}

bool saturate(const EventCtx &ctx, const EventSeq &events, BitRel &rel) {
  std::vector<Inst> inst_of(events.size());
  std::vector<int> handler_of(events.size());
  for (size_t i = 0; i < events.size(); ++i) {
    inst_of[i] = events[i].inst;
    handler_of[i] = ctx.arena->info(events[i].inst).handler;
  }
  return saturate(rel, inst_of, handler_of);
}

namespace {

std::string access_str(const EventCtx &ctx, const AccessDesc &a) {
  using K = AccessDesc::Kind;
  switch (a.kind) {
    case K::Begin: return "B";
    case K::Local: return "L";
    case K::Read: return "R" + ctx.prog->shared_vars[a.var];
    case K::Write: return "W" + ctx.prog->shared_vars[a.var];
    case K::Rmw: return "U" + ctx.prog->shared_vars[a.var];
    case K::Post: return "P" + ctx.arena->path_string(*ctx.prog, a.target);
  }
  return "?";
}

}  // namespace

std::string trace_key(const EventCtx &ctx, const EventSeq &events) {
  std::map<Inst, std::vector<const Event *>> by_inst;
  for (const Event &e : events) by_inst[e.inst].push_back(&e);

  std::vector<Inst> order;
  for (auto &[i, _] : by_inst) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](Inst a, Inst b) {
    return ctx.arena->path_compare(a, b) < 0;
  });

  std::string key;
  for (Inst i : order) {
    const auto &info = ctx.arena->info(i);
    key += ctx.arena->path_string(*ctx.prog, i);
    key += '=';
    key += info.msg < 0 ? ctx.prog->threads[info.thread].name
                        : ctx.prog->messages[info.msg].name;
    bool completed = false;
    key += '[';
    for (const Event *e : by_inst[i]) {
      key += access_str(ctx, e->access);
      key += ',';
      completed |= e->completes;
    }
    key += completed ? "]!" : "]";
    key += ';';
  }

  std::set<std::string> cnf_keys;
  for (uint32_t a = 0; a < events.size(); ++a)
    for (uint32_t b = a + 1; b < events.size(); ++b)
      if (conflicting(ctx, events[a], events[b]))
        cnf_keys.insert(ctx.arena->path_string(*ctx.prog, events[a].inst) + ':' +
                        std::to_string(events[a].index) + '>' +
                        ctx.arena->path_string(*ctx.prog, events[b].inst) + ':' +
                        std::to_string(events[b].index));
  key += "|cnf:";
  for (const auto &s : cnf_keys) {
    key += s;
    key += ';';
  }
  return key;
}

EdgeList detect_races(const EventCtx &, const EventSeq &events,
                      const HbRelation &hb) {
  EdgeList races;
  const size_t n = events.size();
  for (auto [i, j] : hb.cnf) {
    bool adjacent = true;
    for (size_t k = 0; k < n && adjacent; ++k)
      if (hb.rel.test(i, k) && hb.rel.test(k, j)) adjacent = false;
    if (adjacent) races.emplace_back(i, j);
  }
  return races;
}

namespace {

bool same_event(const Event &a, const Event &b) {
  return a.inst == b.inst && a.index == b.index && a.access == b.access &&
         a.completes == b.completes;
}

}  // namespace

bool is_hb_prefix_after(const EventCtx &ctx, const EventSeq &base,
                        const EventSeq &sub, const EventSeq &full) {
  EventSeq a_seq = base, b_seq = base;
  a_seq.insert(a_seq.end(), sub.begin(), sub.end());
  b_seq.insert(b_seq.end(), full.begin(), full.end());

  const size_t nbase = base.size();
  const size_t na = a_seq.size(), nb = b_seq.size();

  // Map every position of base.sub onto base.full by event identity.
  std::vector<size_t> to_b(na, SIZE_MAX);
  for (size_t i = 0; i < nbase; ++i) to_b[i] = i;
  for (size_t s = nbase; s < na; ++s) {
    for (size_t f = nbase; f < nb; ++f)
      if (same_event(a_seq[s], b_seq[f])) {
        to_b[s] = f;
        break;
      }
    if (to_b[s] == SIZE_MAX) return false;
  }

  HbRelation hba = compute_hb(ctx, a_seq);
  HbRelation hbb = compute_hb(ctx, b_seq);

  for (size_t x = 0; x < na; ++x)
    for (size_t y = 0; y < na; ++y)
      if (x != y && hba.rel.test(x, y) != hbb.rel.test(to_b[x], to_b[y]))
        return false;

  std::vector<bool> mapped(nb, false);
  for (size_t x = 0; x < na; ++x) mapped[to_b[x]] = true;
  for (size_t g = nbase; g < nb; ++g) {
    if (mapped[g]) continue;
    for (size_t x = 0; x < na; ++x)
      if (hbb.rel.test(g, to_b[x])) return false;
  }
  return true;
}

bool is_hb_prefix(const EventCtx &ctx, const EventSeq &sub,
                  const EventSeq &full) {
  return is_hb_prefix_after(ctx, EventSeq{}, sub, full);
}

}  // namespace evdpor
