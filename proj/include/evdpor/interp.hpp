#ifndef EVDPOR_INTERP_HPP
#define EVDPOR_INTERP_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evdpor/program.hpp"

namespace evdpor {

// Dense instance handle; index into an InstanceArena.
using Inst = uint32_t;
inline constexpr Inst kNoInst = 0xffffffffu;

// A scheduling unit is a thread or a message instance. Identity is the
// path: [thread index, post ordinal, post ordinal, ...]. The k-th post
// executed by an instance creates the child path(parent) + k, so identities
// are independent of scheduling order.
class InstanceArena {
public:
  struct Info {
    std::vector<uint32_t> path;
    Inst poster = kNoInst;  // kNoInst for threads
    int handler = -1;       // -1 for threads
    int msg = -1;           // message decl index; -1 for threads
    int thread = -1;        // root thread decl index
  };

  Inst thread_root(int thread_idx);
  Inst child_of(Inst poster, uint32_t ordinal, int handler, int msg);
  std::optional<Inst> find(const std::vector<uint32_t> &path) const;

  const Info &info(Inst i) const { return infos_[i]; }
  size_t size() const { return infos_.size(); }
  bool is_message(Inst i) const { return infos_[i].handler >= 0; }
  int handler_of(Inst i) const { return infos_[i].handler; }

  // Lexicographic path order; the canonical total order on instances.
  int path_compare(Inst a, Inst b) const;

  // "s" for threads, "s/1", "s/1/2" for message instances.
  std::string path_string(const Program &p, Inst i) const;
  // "s" or "p1@s/1".
  std::string label(const Program &p, Inst i) const;

private:
  std::vector<Info> infos_;
  std::map<std::vector<uint32_t>, Inst> by_path_;
};

struct AccessDesc {
  enum class Kind : uint8_t { Begin, Local, Read, Write, Rmw, Post };
  Kind kind = Kind::Local;
  int var = -1;          // Read/Write/Rmw
  Inst target = kNoInst; // Post: created instance
  int handler = -1;      // Post: target handler

  bool operator==(const AccessDesc &o) const = default;
  auto operator<=>(const AccessDesc &o) const = default;

  bool is_shared_access() const {
    return kind == Kind::Read || kind == Kind::Write || kind == Kind::Rmw;
  }
  bool is_global() const { return is_shared_access() || kind == Kind::Post; }
  bool writes_var() const { return kind == Kind::Write || kind == Kind::Rmw; }
  bool reads_var() const { return kind == Kind::Read || kind == Kind::Rmw; }
};

struct Event {
  Inst inst = kNoInst;
  uint32_t index = 0;  // 1-based position within the instance
  AccessDesc access;
  bool completes = false;  // this event finishes its instance

  bool same_id(const Event &o) const {
    return inst == o.inst && index == o.index;
  }
};

using EventSeq = std::vector<Event>;

struct Violation {
  Inst inst = kNoInst;
  uint32_t event_index = 0;  // index of the global event the assert folded into
  std::string text;
};

// Control-flow position inside a block tree.
struct Frame {
  const Block *blk = nullptr;
  uint32_t idx = 0;
  int64_t remaining = 0;  // live iterations left for repeat frames
  bool looping = false;
};

struct InstRun {
  enum class Status : uint8_t { Mailbox, Running, Done };
  Status status = Status::Mailbox;
  const Block *body = nullptr;
  std::vector<Frame> stack;
  std::vector<int64_t> regs;
  uint32_t posts_made = 0;
  uint32_t events_done = 0;
};

struct HandlerRt {
  Inst running = kNoInst;
  std::set<Inst> mailbox;
};

// Copyable interpreter state. At most one Running instance per handler;
// mailbox instances wait for the handler to go idle.
struct MachineState {
  std::vector<int64_t> shared;
  std::map<Inst, InstRun> runs;
  std::vector<HandlerRt> handlers;
  std::vector<Violation> violations;
};

MachineState init_state(const Program &p, InstanceArena &arena);

// Instances that can perform an event, sorted by path order: unfinished
// threads, running messages, and mailbox messages whose handler is idle.
std::vector<Inst> enabled(const Program &p, const InstanceArena &arena,
                          const MachineState &s);

bool is_enabled(const Program &p, const InstanceArena &arena,
                const MachineState &s, Inst i);

// Executes exactly one event of p: the Begin if p is mailbox-resident,
// otherwise local statements fold into the next global action (or into a
// final Local event when the body ends without one). Requires is_enabled.
Event step(const Program &p, InstanceArena &arena, MachineState &s, Inst i);

struct PeekResult {
  AccessDesc access;
  bool completes = false;
};

// Access the next step(i) would perform, without touching the state. May
// grow the arena (interning the target of a pending post).
PeekResult peek_access(const Program &p, InstanceArena &arena,
                       const MachineState &s, Inst i);

// True when i has not performed its Begin yet (including not posted yet).
bool starts_after(const MachineState &s, Inst i);

struct ExecutionRecord {
  const Program *prog = nullptr;
  InstanceArena *arena = nullptr;
  EventSeq events;
  std::vector<Violation> violations;
  std::map<Inst, uint32_t> event_count;
  std::set<Inst> completed;

  std::vector<Inst> schedule() const;
};

// Replays a schedule (one InstanceId per event). Throws std::runtime_error
// if some letter is not enabled at its turn.
ExecutionRecord run(const Program &p, InstanceArena &arena,
                    const std::vector<Inst> &schedule);

// As run(), but letters name instances by path string ("s", "s/1", ...).
ExecutionRecord run_named(const Program &p, InstanceArena &arena,
                          const std::vector<std::string> &schedule);

}  // namespace evdpor

#endif
