#include "evdpor/interp.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace evdpor {

Inst InstanceArena::thread_root(int thread_idx) {
  std::vector<uint32_t> path{static_cast<uint32_t>(thread_idx)};
  auto it = by_path_.find(path);
  if (it != by_path_.end()) return it->second;
  Info info;
  info.path = path;
  info.thread = thread_idx;
  Inst id = static_cast<Inst>(infos_.size());
  infos_.push_back(std::move(info));
  by_path_.emplace(std::move(path), id);
  return id;
}

Inst InstanceArena::child_of(Inst poster, uint32_t ordinal, int handler,
                             int msg) {
  std::vector<uint32_t> path = infos_[poster].path;
  path.push_back(ordinal);
  auto it = by_path_.find(path);
  if (it != by_path_.end()) {
    assert(infos_[it->second].handler == handler &&
           infos_[it->second].msg == msg);
    return it->second;
  }
  Info info;
  info.path = path;
  info.poster = poster;
  info.handler = handler;
  info.msg = msg;
  info.thread = infos_[poster].thread;
  Inst id = static_cast<Inst>(infos_.size());
  infos_.push_back(std::move(info));
  by_path_.emplace(std::move(path), id);
  return id;
}

std::optional<Inst> InstanceArena::find(const std::vector<uint32_t> &path) const {
  auto it = by_path_.find(path);
  if (it == by_path_.end()) return std::nullopt;
  return it->second;
}

int InstanceArena::path_compare(Inst a, Inst b) const {
  const auto &pa = infos_[a].path;
  const auto &pb = infos_[b].path;
  if (pa < pb) return -1;
  if (pb < pa) return 1;
  return 0;
}

std::string InstanceArena::path_string(const Program &p, Inst i) const {
  const Info &info = infos_[i];
  std::string out = p.threads[info.thread].name;
  for (size_t k = 1; k < info.path.size(); ++k)
    out += "/" + std::to_string(info.path[k]);
  return out;
}

std::string InstanceArena::label(const Program &p, Inst i) const {
  const Info &info = infos_[i];
  if (info.msg < 0) return p.threads[info.thread].name;
  return p.messages[info.msg].name + "@" + path_string(p, i);
}

namespace {

int64_t eval(const Expr &e, const std::vector<int64_t> &regs) {
  switch (e.kind) {
  case Expr::Kind::Lit:
    return e.lit;
  case Expr::Kind::Reg:
    return regs[e.reg];
  case Expr::Kind::Bin: {
    int64_t a = eval(e.kids[0], regs);
    int64_t b = eval(e.kids[1], regs);
    int64_t r = 0;
    switch (e.op) {
    case BinOp::Add:
      if (__builtin_add_overflow(a, b, &r))
        throw EvalError(e.loc, "integer overflow in '+'");
      return r;
    case BinOp::Sub:
      if (__builtin_sub_overflow(a, b, &r))
        throw EvalError(e.loc, "integer overflow in '-'");
      return r;
    case BinOp::Mul:
      if (__builtin_mul_overflow(a, b, &r))
        throw EvalError(e.loc, "integer overflow in '*'");
      return r;
    case BinOp::Eq: return a == b;
    case BinOp::Ne: return a != b;
    case BinOp::Lt: return a < b;
    case BinOp::Le: return a <= b;
    case BinOp::Gt: return a > b;
    case BinOp::Ge: return a >= b;
    }
    return 0;
  }
  }
  return 0;
}

// Pops exhausted frames; re-enters live repeat iterations. Afterwards the
// stack is empty or its top frame points at a statement.
void normalize(std::vector<Frame> &st) {
  while (!st.empty()) {
    Frame &f = st.back();
    if (f.idx < f.blk->size()) return;
    if (f.looping && f.remaining > 1 && !f.blk->empty()) {
      --f.remaining;
      f.idx = 0;
      return;
    }
    st.pop_back();
  }
}

// Executes local statements (let/assert/if/repeat) until the next global
// statement or the end of the body. Returns the global statement with the
// stack positioned at it, or nullptr at end. violations may be null (peek).
const Stmt *fold_locals(InstRun &r, Inst self,
                        std::vector<Violation> *violations) {
  for (;;) {
    normalize(r.stack);
    if (r.stack.empty()) return nullptr;
    Frame &f = r.stack.back();
    const Stmt &s = (*f.blk)[f.idx];
    switch (s.kind) {
    case Stmt::Kind::Let:
      r.regs[s.reg] = eval(s.e1, r.regs);
      ++f.idx;
      break;
    case Stmt::Kind::Assert: {
      int64_t v = eval(s.e1, r.regs);
      if (v == 0 && violations) {
        std::ostringstream os;
        os << "assertion failed at " << s.loc.line << ":" << s.loc.col;
        violations->push_back({self, r.events_done + 1, os.str()});
      }
      ++f.idx;
      break;
    }
    case Stmt::Kind::If: {
      int64_t c = eval(s.e1, r.regs);
      const Block *b = (c != 0) ? &s.body : &s.else_body;
      ++f.idx;
      if (!b->empty()) r.stack.push_back(Frame{b, 0, 0, false});
      break;
    }
    case Stmt::Kind::Repeat:
      ++f.idx;
      if (s.count > 0 && !s.body.empty())
        r.stack.push_back(Frame{&s.body, 0, s.count, true});
      break;
    default:
      return &s;
    }
  }
}

bool at_end(const InstRun &r) {
  std::vector<Frame> st = r.stack;
  normalize(st);
  return st.empty();
}

void finish(const InstanceArena &arena, MachineState &s, Inst i) {
  InstRun &r = s.runs.at(i);
  r.status = InstRun::Status::Done;
  int h = arena.info(i).handler;
  if (h >= 0) s.handlers[h].running = kNoInst;
}

}  // namespace

MachineState init_state(const Program &p, InstanceArena &arena) {
  MachineState s;
  s.shared.assign(p.shared_vars.size(), 0);
  s.handlers.resize(p.handlers.size());
  for (size_t t = 0; t < p.threads.size(); ++t) {
    Inst root = arena.thread_root(static_cast<int>(t));
    InstRun r;
    r.status = InstRun::Status::Running;
    r.body = &p.threads[t].body;
    r.stack.push_back(Frame{r.body, 0, 0, false});
    r.regs.assign(p.registers.size(), 0);
    normalize(r.stack);
    if (r.stack.empty()) r.status = InstRun::Status::Done;
    s.runs.emplace(root, std::move(r));
  }
  return s;
}

bool is_enabled(const Program &, const InstanceArena &arena,
                const MachineState &s, Inst i) {
  auto it = s.runs.find(i);
  if (it == s.runs.end()) return false;
  const InstRun &r = it->second;
  if (r.status == InstRun::Status::Running) return true;
  if (r.status == InstRun::Status::Mailbox)
    return s.handlers[arena.info(i).handler].running == kNoInst;
  return false;
}

std::vector<Inst> enabled(const Program &p, const InstanceArena &arena,
                          const MachineState &s) {
  std::vector<Inst> out;
  for (const auto &[i, r] : s.runs) {
    (void)r;
    if (is_enabled(p, arena, s, i)) out.push_back(i);
  }
  std::sort(out.begin(), out.end(), [&](Inst a, Inst b) {
    return arena.path_compare(a, b) < 0;
  });
  return out;
}

bool starts_after(const MachineState &s, Inst i) {
  auto it = s.runs.find(i);
  if (it == s.runs.end()) return true;
  return it->second.status == InstRun::Status::Mailbox;
}

Event step(const Program &p, InstanceArena &arena, MachineState &s, Inst i) {
  assert(is_enabled(p, arena, s, i));
  InstRun &r = s.runs.at(i);
  Event ev;
  ev.inst = i;

  if (r.status == InstRun::Status::Mailbox) {
    int h = arena.info(i).handler;
    s.handlers[h].mailbox.erase(i);
    s.handlers[h].running = i;
    r.status = InstRun::Status::Running;
    ev.index = ++r.events_done;
    ev.access.kind = AccessDesc::Kind::Begin;
    ev.completes = at_end(r);
    if (ev.completes) finish(arena, s, i);
    return ev;
  }

  const Stmt *g = fold_locals(r, i, &s.violations);
  if (g == nullptr) {
    ev.index = ++r.events_done;
    ev.access.kind = AccessDesc::Kind::Local;
    ev.completes = true;
    finish(arena, s, i);
    return ev;
  }

  switch (g->kind) {
  case Stmt::Kind::Store:
    s.shared[g->var] = eval(g->e1, r.regs);
    ev.access.kind = AccessDesc::Kind::Write;
    ev.access.var = g->var;
    break;
  case Stmt::Kind::Load:
    r.regs[g->reg] = s.shared[g->var];
    ev.access.kind = AccessDesc::Kind::Read;
    ev.access.var = g->var;
    break;
  case Stmt::Kind::Cas: {
    int64_t old = s.shared[g->var];
    r.regs[g->reg] = old;
    if (old == eval(g->e1, r.regs)) s.shared[g->var] = eval(g->e2, r.regs);
    ev.access.kind = AccessDesc::Kind::Rmw;
    ev.access.var = g->var;
    break;
  }
  case Stmt::Kind::Post: {
    uint32_t ordinal = ++r.posts_made;
    Inst target = arena.child_of(i, ordinal, g->handler, g->msg);
    InstRun child;
    child.status = InstRun::Status::Mailbox;
    child.body = &p.messages[g->msg].body;
    child.stack.push_back(Frame{child.body, 0, 0, false});
    child.regs.assign(p.registers.size(), 0);
    assert(!s.runs.count(target));
    s.runs.emplace(target, std::move(child));
    s.handlers[g->handler].mailbox.insert(target);
    ev.access.kind = AccessDesc::Kind::Post;
    ev.access.target = target;
    ev.access.handler = g->handler;
    break;
  }
  default:
    assert(false && "fold_locals returned a local statement");
  }

  ++r.stack.back().idx;
  ev.index = ++r.events_done;
  ev.completes = at_end(r);
  if (ev.completes) finish(arena, s, i);
  return ev;
}

PeekResult peek_access(const Program &, InstanceArena &arena,
                       const MachineState &s, Inst i) {
  const InstRun &r0 = s.runs.at(i);
  PeekResult out;
  if (r0.status == InstRun::Status::Mailbox) {
    out.access.kind = AccessDesc::Kind::Begin;
    out.completes = at_end(r0);
    return out;
  }
  InstRun tmp = r0;
  const Stmt *g = fold_locals(tmp, i, nullptr);
  if (g == nullptr) {
    out.access.kind = AccessDesc::Kind::Local;
    out.completes = true;
    return out;
  }
  switch (g->kind) {
  case Stmt::Kind::Store:
    out.access.kind = AccessDesc::Kind::Write;
    out.access.var = g->var;
    break;
  case Stmt::Kind::Load:
    out.access.kind = AccessDesc::Kind::Read;
    out.access.var = g->var;
    break;
  case Stmt::Kind::Cas:
    out.access.kind = AccessDesc::Kind::Rmw;
    out.access.var = g->var;
    break;
  case Stmt::Kind::Post:
    out.access.kind = AccessDesc::Kind::Post;
    out.access.target = arena.child_of(i, tmp.posts_made + 1, g->handler, g->msg);
    out.access.handler = g->handler;
    break;
  default:
    assert(false);
  }
  ++tmp.stack.back().idx;
  out.completes = at_end(tmp);
  return out;
}

std::vector<Inst> ExecutionRecord::schedule() const {
  std::vector<Inst> out;
  out.reserve(events.size());
  for (const auto &e : events) out.push_back(e.inst);
  return out;
}

ExecutionRecord run(const Program &p, InstanceArena &arena,
                    const std::vector<Inst> &schedule) {
  ExecutionRecord rec;
  rec.prog = &p;
  rec.arena = &arena;
  MachineState s = init_state(p, arena);
  for (Inst i : schedule) {
    if (!is_enabled(p, arena, s, i))
      throw std::runtime_error("schedule letter not enabled: instance " +
                               (i < arena.size() ? arena.path_string(p, i)
                                                 : std::to_string(i)));
    Event ev = step(p, arena, s, i);
    rec.events.push_back(ev);
    rec.event_count[ev.inst] = ev.index;
    if (ev.completes) rec.completed.insert(ev.inst);
  }
  rec.violations = s.violations;
  return rec;
}

ExecutionRecord run_named(const Program &p, InstanceArena &arena,
                          const std::vector<std::string> &schedule) {
  ExecutionRecord rec;
  rec.prog = &p;
  rec.arena = &arena;
  MachineState s = init_state(p, arena);
  for (const std::string &name : schedule) {
    std::vector<uint32_t> path;
    size_t slash = name.find('/');
    std::string tname = name.substr(0, slash);
    auto tit = p.thread_ids.find(tname);
    if (tit == p.thread_ids.end())
      throw std::runtime_error("unknown thread in schedule: " + tname);
    path.push_back(static_cast<uint32_t>(tit->second));
    while (slash != std::string::npos) {
      size_t next = name.find('/', slash + 1);
      path.push_back(static_cast<uint32_t>(
          std::stoul(name.substr(slash + 1, next - slash - 1))));
      slash = next;
    }
    auto inst = arena.find(path);
    if (!inst || !is_enabled(p, arena, s, *inst))
      throw std::runtime_error("schedule letter not enabled: " + name);
    Event ev = step(p, arena, s, *inst);
    rec.events.push_back(ev);
    rec.event_count[ev.inst] = ev.index;
    if (ev.completes) rec.completed.insert(ev.inst);
  }
  rec.violations = s.violations;
  return rec;
}

}  // namespace evdpor
