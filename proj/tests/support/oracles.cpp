#include "support/oracles.hpp"

#include <stdexcept>

namespace evdpor::testing {

namespace {

struct Dfs {
  const Program &prog;
  InstanceArena &arena;
  size_t cap;
  const LeafFn &fn;
  size_t executions = 0;
  EventSeq events;
  std::vector<Inst> schedule;

  void go(const MachineState &s) {
    auto choices = enabled(prog, arena, s);
    if (choices.empty()) {
      if (++executions > cap)
        throw std::runtime_error("brute-force cap exceeded");
      fn(s, events, schedule);
      return;
    }
    for (Inst i : choices) {
      MachineState next = s;
      events.push_back(step(prog, arena, next, i));
      schedule.push_back(i);
      go(next);
      events.pop_back();
      schedule.pop_back();
    }
  }
};

}  // namespace

void enumerate_visit(const Program &p, InstanceArena &arena, size_t cap,
                     const LeafFn &fn) {
  Dfs dfs{p, arena, cap, fn, 0, {}, {}};
  dfs.go(init_state(p, arena));
}

BruteForce enumerate_all(const Program &p, InstanceArena &arena,
                         ConflictModel model, size_t cap) {
  BruteForce out;
  EventCtx ctx{&p, &arena, model};
  enumerate_visit(p, arena, cap,
                  [&](const MachineState &, const EventSeq &events,
                      const std::vector<Inst> &) {
                    ++out.executions;
                    out.keys.insert(trace_key(ctx, events));
                  });
  return out;
}

OracleSummaries::OracleSummaries(const Program &p, InstanceArena &arena,
                                 size_t cap) {
  std::map<Inst, std::set<std::vector<AccessDesc>>> seen;
  enumerate_visit(p, arena, cap,
                  [&](const MachineState &, const EventSeq &events,
                      const std::vector<Inst> &) {
                    std::map<Inst, std::vector<AccessDesc>> per;
                    for (const Event &e : events)
                      if (e.access.is_global()) per[e.inst].push_back(e.access);
                    for (const Event &e : events)
                      if (!per.count(e.inst)) per[e.inst] = {};
                    for (auto &[q, seq] : per)
                      if (arena.is_message(q)) seen[q].insert(seq);
                  });
  for (auto &[q, seqs] : seen)
    for (auto &seq : seqs) by_inst_[q].add(seq);
}

std::optional<AccessSummary> OracleSummaries::body_accesses(Inst p) const {
  auto it = by_inst_.find(p);
  if (it == by_inst_.end()) return std::nullopt;
  return it->second;
}

namespace {

// DFS over continuations with sound pruning: hb edges only ever point
// forward, so a window event whose predecessors or pairwise order already
// disagree with w can never recover, and neither can a branch where some
// (instance, index) slot was taken by a different access.
struct WiDfs {
  const EventCtx &ctx;
  const EventSeq &base;
  const EventSeq &w;
  size_t cap;
  size_t nodes = 0;
  std::map<std::pair<Inst, uint32_t>, size_t> wid;
  std::vector<std::vector<char>> hbw;

  void init() {
    EventSeq bw = base;
    bw.insert(bw.end(), w.begin(), w.end());
    HbRelation hb = compute_hb(ctx, bw);
    size_t b = base.size(), n = w.size();
    hbw.assign(n, std::vector<char>(n, 0));
    for (size_t i = 0; i < n; ++i) {
      wid[{w[i].inst, w[i].index}] = i;
      for (size_t j = 0; j < n; ++j) hbw[i][j] = hb.before(b + i, b + j);
    }
  }

  bool viable(const EventSeq &cur) {
    auto it = wid.find({cur.back().inst, cur.back().index});
    if (it == wid.end()) return true;
    size_t we = it->second;
    if (!(cur.back().access == w[we].access &&
          cur.back().completes == w[we].completes))
      return false;
    EventSeq bc = base;
    bc.insert(bc.end(), cur.begin(), cur.end());
    HbRelation hb = compute_hb(ctx, bc);
    size_t pe = bc.size() - 1;
    for (size_t r = base.size(); r < pe; ++r) {
      auto jt = wid.find({bc[r].inst, bc[r].index});
      bool rw = jt != wid.end() && w[jt->second].access == bc[r].access &&
                w[jt->second].completes == bc[r].completes;
      if (!rw) {
        if (hb.before(r, pe)) return false;
        continue;
      }
      if (hb.before(r, pe) != (bool)hbw[jt->second][we]) return false;
      if (hbw[we][jt->second]) return false;
    }
    return true;
  }

  bool all_present(const EventSeq &cur) {
    std::set<std::pair<Inst, uint32_t>> have;
    for (const Event &e : cur) have.insert({e.inst, e.index});
    for (auto &[k, i] : wid)
      if (!have.count(k)) return false;
    return true;
  }

  bool go(const MachineState &s, EventSeq &cur) {
    if (++nodes > cap) throw std::runtime_error("wi oracle cap exceeded");
    if (!viable(cur)) return false;
    if (all_present(cur)) return is_hb_prefix_after(ctx, base, w, cur);
    for (Inst i : enabled(*ctx.prog, *ctx.arena, s)) {
      MachineState next = s;
      cur.push_back(step(*ctx.prog, *ctx.arena, next, i));
      bool hit = go(next, cur);
      cur.pop_back();
      if (hit) return true;
    }
    return false;
  }
};

}  // namespace

bool wi_oracle(const EventCtx &ctx, const EventSeq &base,
               const MachineState &state, const EventSeq &w, Inst p,
               size_t node_cap) {
  if (!is_enabled(*ctx.prog, *ctx.arena, state, p)) return false;
  MachineState st = state;
  EventSeq cur;
  cur.push_back(step(*ctx.prog, *ctx.arena, st, p));
  WiDfs dfs{ctx, base, w, node_cap, 0, {}, {}};
  dfs.init();
  return dfs.go(st, cur);
}

Walk walk_named(const Program &p, InstanceArena &arena,
                const std::vector<std::string> &names) {
  Walk out;
  out.st = init_state(p, arena);
  for (const std::string &name : names) {
    Inst pick = kNoInst;
    for (Inst i : enabled(p, arena, out.st))
      if (arena.path_string(p, i) == name) {
        pick = i;
        break;
      }
    if (pick == kNoInst)
      throw std::runtime_error("walk_named: '" + name + "' not enabled");
    out.events.push_back(step(p, arena, out.st, pick));
  }
  return out;
}

Inst inst_named(const Program &p, const InstanceArena &arena,
                const std::string &path) {
  for (Inst i = 0; i < (Inst)arena.size(); ++i)
    if (arena.path_string(p, i) == path) return i;
  throw std::runtime_error("inst_named: '" + path + "' not in arena");
}

}  // namespace evdpor::testing
