#include <algorithm>
#include <string>
#include <vector>

#include "doctest.h"
#include "evdpor/bench.hpp"
#include "evdpor/interp.hpp"
#include "evdpor/program.hpp"
#include "evdpor/trace.hpp"
#include "support/oracles.hpp"

using namespace evdpor;

namespace {

struct Fixture {
  Program prog;
  InstanceArena arena;
  EventCtx ctx;

  explicit Fixture(const std::string &name, ConflictModel m = ConflictModel::Fine)
      : prog(bench::generate(name)), ctx{&prog, &arena, m} {}

  ExecutionRecord run(const std::vector<std::string> &sched) {
    return run_named(prog, arena, sched);
  }
};

}  // namespace

TEST_CASE("conflict rules distinguish fine and coarse") {
  Fixture f("fig2_nc");
  auto rec = f.run({"s", "t", "s/1", "s/1", "t/1", "t/1"});
  const Event &post_s = rec.events[0], &post_t = rec.events[1];
  const Event &b1 = rec.events[2], &wx = rec.events[3];
  const Event &b2 = rec.events[4], &wy = rec.events[5];

  CHECK(!conflicting(f.ctx, post_s, post_t));
  CHECK(!conflicting(f.ctx, wx, wy));   // distinct variables
  CHECK(!conflicting(f.ctx, b1, b2));
  CHECK(!conflicting(f.ctx, wx, wx));   // same instance

  EventCtx coarse{&f.prog, &f.arena, ConflictModel::Coarse};
  CHECK(conflicting(coarse, wx, wy));   // same handler, distinct messages
  CHECK(conflicting(coarse, b1, b2));
  CHECK(conflicting(coarse, b1, wy));
  CHECK(!conflicting(coarse, post_s, post_t));  // thread events unaffected
}

TEST_CASE("fine conflicts require a common variable and a write") {
  Program p = parse_program(
      "shared x\n"
      "thread s { store x 1 }\n"
      "thread t { load a x load b x }\n");
  InstanceArena arena;
  EventCtx ctx{&p, &arena, ConflictModel::Fine};
  auto rec = run_named(p, arena, {"s", "t", "t"});
  CHECK(conflicting(ctx, rec.events[0], rec.events[1]));   // W/R
  CHECK(!conflicting(ctx, rec.events[1], rec.events[2]));  // R/R
}

TEST_CASE("happens-before on the write read read example") {
  Fixture f("fig1_wrr");
  auto rec = f.run({"s", "t", "t", "u", "u"});
  auto hb = compute_hb(f.ctx, rec.events);

  // s:Wx  t:Ry  t:Rx  u:Rz  u:Rx
  CHECK(hb.before(1, 2));   // program order inside t
  CHECK(hb.before(3, 4));
  CHECK(hb.before(0, 2));   // conflict order Wx -> Rx
  CHECK(hb.before(0, 4));
  CHECK(!hb.before(0, 1));
  CHECK(!hb.before(2, 4));  // reads do not conflict
  CHECK(hb.po.size() == 2);
  CHECK(hb.cnf.size() == 2);
  CHECK(hb.pb.empty());

  auto races = detect_races(f.ctx, rec.events, hb);
  REQUIRE(races.size() == 2);
  CHECK(races[0] == std::make_pair(0u, 2u));
  CHECK(races[1] == std::make_pair(0u, 4u));
}

TEST_CASE("posted-by edges reach the message begin") {
  Fixture f("fig2_nc");
  auto rec = f.run({"s", "t", "s/1", "s/1", "t/1", "t/1"});
  auto hb = compute_hb(f.ctx, rec.events);
  REQUIRE(hb.pb.size() == 2);
  CHECK(hb.before(0, 2));  // post -> Begin
  CHECK(hb.before(0, 3));  // and through program order
  CHECK(hb.before(1, 4));
  CHECK(!hb.before(0, 4));
}

TEST_CASE("trace counts of the figure examples") {
  auto count = [](const std::string &name, ConflictModel m) {
    Program p = bench::generate(name);
    InstanceArena arena;
    return testing::enumerate_all(p, arena, m).keys.size();
  };
  CHECK(count("fig1_wrr", ConflictModel::Fine) == 4);
  CHECK(count("fig2_nc", ConflictModel::Fine) == 1);
  CHECK(count("fig2_conf", ConflictModel::Fine) == 2);
  CHECK(count("fig3_branch", ConflictModel::Fine) == 3);
  CHECK(count("fig5_wi", ConflictModel::Fine) == 1);

  // Handlers-as-locks splits the non-conflicting pair.
  CHECK(count("fig2_nc", ConflictModel::Coarse) == 2);
  CHECK(count("fig1_wrr", ConflictModel::Coarse) == 4);
}

TEST_CASE("trace key is schedule independent") {
  Fixture f("fig2_nc");
  auto a = f.run({"s", "t", "s/1", "s/1", "t/1", "t/1"});
  auto b = f.run({"t", "t/1", "t/1", "s", "s/1", "s/1"});
  CHECK(trace_key(f.ctx, a.events) == trace_key(f.ctx, b.events));
}

TEST_CASE("trace key separates conflicting orders") {
  Fixture f("fig2_conf");
  auto a = f.run({"s", "t", "s/1", "s/1", "s/1", "s/1", "t/1", "t/1", "t/1", "t/1"});
  auto b = f.run({"s", "t", "t/1", "t/1", "t/1", "t/1", "s/1", "s/1", "s/1", "s/1"});
  CHECK(trace_key(f.ctx, a.events) != trace_key(f.ctx, b.events));
}

TEST_CASE("commuting swaps preserve the key and a race swap changes it") {
  Fixture f("fig1_wrr");
  auto base = f.run({"t", "s", "t", "u", "u"});
  auto key = trace_key(f.ctx, base.events);

  auto commuted = f.run({"s", "t", "t", "u", "u"});  // swap t:Ry with s:Wx
  CHECK(trace_key(f.ctx, commuted.events) == key);

  auto reversed = f.run({"t", "t", "s", "u", "u"});  // swap s:Wx with t:Rx
  CHECK(trace_key(f.ctx, reversed.events) != key);
}

TEST_CASE("incomplete executions key differently") {
  Fixture f("fig2_nc");
  auto part = f.run({"s", "t", "s/1"});
  auto done = f.run({"s", "t", "s/1", "s/1"});
  CHECK(trace_key(f.ctx, part.events) != trace_key(f.ctx, done.events));
}

TEST_CASE("empty execution has a stable key") {
  Fixture f("fig2_nc");
  CHECK(trace_key(f.ctx, {}) == trace_key(f.ctx, {}));
}

TEST_CASE("bit relation closure and cycles") {
  BitRel r(4);
  r.set(0, 1);
  r.set(1, 2);
  CHECK(!r.test(0, 2));
  r.transitive_close();
  CHECK(r.test(0, 2));
  CHECK(!r.has_cycle());
  r.set(2, 0);
  CHECK(r.has_cycle());
}

TEST_CASE("saturation orders whole message pairs") {
  // Positions 0,1 belong to message p and 2,3 to q, both on one handler.
  std::vector<Inst> inst_of = {7, 7, 9, 9};
  std::vector<int> handler_of = {0, 0, 0, 0};

  BitRel r(4);
  r.set(1, 2);
  REQUIRE(saturate(r, inst_of, handler_of));
  CHECK(r.test(0, 2));
  CHECK(r.test(0, 3));
  CHECK(r.test(1, 3));
  CHECK(!r.test(2, 0));

  BitRel again = r;
  REQUIRE(saturate(again, inst_of, handler_of));
  CHECK(again == r);  // fixpoint reached

  r.set(3, 0);  // opposite direction forces a cycle
  CHECK(!saturate(r, inst_of, handler_of));
}

TEST_CASE("saturation ignores cross-handler and thread events") {
  std::vector<Inst> inst_of = {7, 9, 3};
  std::vector<int> handler_of = {0, 1, -1};
  BitRel r(3);
  r.set(0, 1);
  REQUIRE(saturate(r, inst_of, handler_of));
  CHECK(r.test(0, 1));
  CHECK(!r.test(0, 2));
  CHECK(!r.test(1, 0));
}

TEST_CASE("a lone message is a happens-before prefix of any maximal run") {
  Fixture f("fig2_nc");
  auto sub = f.run({"t", "t/1", "t/1"});
  auto full = f.run({"s", "s/1", "s/1", "t", "t/1", "t/1"});
  CHECK(is_hb_prefix(f.ctx, sub.events, full.events));
  CHECK(is_hb_prefix(f.ctx, full.events, full.events));
  CHECK(is_hb_prefix(f.ctx, {}, full.events));
}

TEST_CASE("dropped predecessors break the prefix relation") {
  Fixture f("fig2_conf");
  // p2 runs first in sub, but full lets p1 write x before p2 reads it.
  auto sub = f.run({"s", "t", "t/1", "t/1", "t/1", "t/1"});
  EventSeq p2_only(sub.events.begin() + 2, sub.events.end());
  auto full = f.run({"s", "t", "s/1", "s/1", "s/1", "s/1", "t/1", "t/1", "t/1", "t/1"});
  EventSeq full_tail(full.events.begin() + 2, full.events.end());
  EventSeq base(full.events.begin(), full.events.begin() + 2);

  CHECK(!is_hb_prefix_after(f.ctx, base, p2_only, full_tail));
  // The first two events of p2 do not read, so they still embed.
  EventSeq p2_head(p2_only.begin(), p2_only.begin() + 2);
  CHECK(is_hb_prefix_after(f.ctx, base, p2_head, full_tail));
}

TEST_CASE("reversed conflicts break the prefix relation") {
  Fixture f("fig2_conf");
  auto a = f.run({"s", "t", "t/1", "t/1", "t/1", "t/1", "s/1", "s/1", "s/1", "s/1"});
  auto b = f.run({"s", "t", "s/1", "s/1", "s/1", "s/1", "t/1", "t/1", "t/1", "t/1"});
  CHECK(!is_hb_prefix(f.ctx, a.events, b.events));
}

TEST_CASE("completion by another message witnesses containment") {
  // After both posts, p1 alone embeds into p2's completion followed by p1.
  Fixture f("fig5_wi");
  auto base_rec = f.run({"s", "t"});
  auto w_rec = f.run({"s", "t", "s/1", "s/1"});
  EventSeq w(w_rec.events.begin() + 2, w_rec.events.end());
  auto full_rec = f.run({"s", "t", "t/1", "t/1", "t/1", "s/1", "s/1"});
  EventSeq full(full_rec.events.begin() + 2, full_rec.events.end());
  CHECK(is_hb_prefix_after(f.ctx, base_rec.events, w, full));
}

TEST_CASE("races in the conflicting message example") {
  Fixture f("fig2_conf");
  auto rec = f.run({"s", "t", "s/1", "s/1", "s/1", "s/1", "t/1", "t/1", "t/1", "t/1"});
  auto hb = compute_hb(f.ctx, rec.events);
  auto races = detect_races(f.ctx, rec.events, hb);
  REQUIRE(races.size() == 2);
  // Wx -> Rx and Wy -> Ry; positions: s/1 B,Wu,Wx,Wy then t/1 B,Wv,Rx,Ry.
  CHECK(races[0] == std::make_pair(4u, 8u));
  CHECK(races[1] == std::make_pair(5u, 9u));
}

TEST_CASE("races in the two handler example") {
  Fixture f("fig4_two_handlers");
  auto rec = f.run({"t", "t", "t", "t",
                    "t/1", "t/1",          // p1: B, Wd
                    "t/3", "t/3",          // q1: B, Wy
                    "t/1",                 // p1: Ry
                    "t/3",                 // q1: Wx
                    "t/2", "t/2",          // p2: B, Wz
                    "t/4", "t/4", "t/4"}); // q2: B, Rz, Rx
  auto hb = compute_hb(f.ctx, rec.events);
  auto races = detect_races(f.ctx, rec.events, hb);
  CHECK(races.size() == 3);
}

TEST_CASE("brute force enumeration respects its cap") {
  Program p = bench::generate("fig1_wrr");
  InstanceArena arena;
  CHECK_THROWS_AS(testing::enumerate_all(p, arena, ConflictModel::Fine, 3),
                  std::runtime_error);
}
