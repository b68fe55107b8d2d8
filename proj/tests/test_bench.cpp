#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "evdpor/bench.hpp"
#include "evdpor/interp.hpp"
#include "evdpor/program.hpp"
#include "evdpor/trace.hpp"
#include "support/oracles.hpp"

using namespace evdpor;

namespace {

int default_n(const bench::BenchInfo &b) { return b.takes_n ? b.min_n + 1 : 0; }

// Visits every maximal schedule and reports whether any instance performs
// different access sequences in different runs.
bool behaviour_branches(const Program &p, size_t cap = 1u << 18) {
  InstanceArena arena;
  std::map<std::string, std::vector<AccessDesc>> seen;
  bool branches = false;
  testing::enumerate_visit(
      p, arena, cap,
      [&](const MachineState &, const EventSeq &events,
          const std::vector<Inst> &) {
        std::map<std::string, std::vector<AccessDesc>> per_inst;
        for (const Event &e : events)
          per_inst[arena.path_string(p, e.inst)].push_back(e.access);
        for (auto &[path, accs] : per_inst) {
          auto [it, fresh_entry] = seen.emplace(path, accs);
          if (!fresh_entry && it->second != accs) branches = true;
        }
      });
  return branches;
}

size_t count_traces(const std::string &name, int n = 0) {
  Program p = bench::generate(name, n);
  InstanceArena arena;
  return testing::enumerate_all(p, arena, ConflictModel::Fine).keys.size();
}

}  // namespace

TEST_CASE("every builtin round-trips through its source text") {
  for (const auto &b : bench::builtins()) {
    CAPTURE(b.name);
    Program p = bench::generate(b.name, default_n(b));
    Program again = parse_program(emit_text(p));
    CHECK(again == p);
  }
}

TEST_CASE("unknown names and out-of-range parameters are rejected") {
  CHECK_THROWS_AS(bench::generate("nonesuch"), std::invalid_argument);
  CHECK_THROWS_AS(bench::generate("prolific_cycle", 1), std::invalid_argument);
  CHECK_THROWS_AS(bench::generate("writers", 0), std::invalid_argument);
  CHECK_THROWS_AS(bench::generate("writers", 9999), std::invalid_argument);
  CHECK(bench::is_builtin("plb"));
  CHECK(!bench::is_builtin("plb "));
}

TEST_CASE("branch statement classification") {
  CHECK(bench::has_branch_stmts(bench::generate("fig3_branch")));
  CHECK(bench::has_branch_stmts(bench::generate("consensus_lite", 2)));
  for (const char *name : {"fig1_wrr", "fig2_nc", "fig2_conf",
                           "fig4_two_handlers", "fig5_wi"})
    CHECK(!bench::has_branch_stmts(bench::generate(name)));
  CHECK(!bench::has_branch_stmts(bench::generate("writers", 3)));
  CHECK(!bench::has_branch_stmts(bench::generate("posters", 2)));
  CHECK(!bench::has_branch_stmts(bench::generate("prolific_cycle", 3)));
  CHECK(!bench::has_branch_stmts(bench::generate("plb", 5)));
  CHECK(!bench::has_branch_stmts(bench::generate("ping_pong", 3)));
}

TEST_CASE("observed behaviour matches the syntactic classification") {
  CHECK(behaviour_branches(bench::generate("fig3_branch")));
  CHECK(!behaviour_branches(bench::generate("fig1_wrr")));
  CHECK(!behaviour_branches(bench::generate("fig2_nc")));
  CHECK(!behaviour_branches(bench::generate("fig2_conf")));
  CHECK(!behaviour_branches(bench::generate("fig5_wi")));
  CHECK(!behaviour_branches(bench::generate("writers", 2)));
  CHECK(!behaviour_branches(bench::generate("prolific_cycle", 2)));
  CHECK(!behaviour_branches(bench::generate("plb", 3)));
  CHECK(!behaviour_branches(bench::generate("ping_pong", 2)));
}

TEST_CASE("max collection branches on arrival order") {
  // The value-1 message writes only when it arrives before the value-2 one.
  Program p = bench::generate("consensus_lite", 2);
  InstanceArena arena;
  auto first = run_named(p, arena, {"b1", "b1", "b2", "b2",
                                    "b1/1", "b1/1", "b1/1",
                                    "b2/1", "b2/1", "b2/1"});
  InstanceArena arena2;
  auto second = run_named(p, arena2, {"b1", "b1", "b2", "b2",
                                      "b2/1", "b2/1", "b2/1",
                                      "b1/1", "b1/1", "b1/1"});
  auto accesses = [&](const ExecutionRecord &rec, InstanceArena &a,
                      const std::string &path) {
    std::vector<AccessDesc> out;
    for (const Event &e : rec.events)
      if (a.path_string(p, e.inst) == path) out.push_back(e.access);
    return out;
  };
  auto low_first = accesses(first, arena, "b1/1");
  auto low_second = accesses(second, arena2, "b1/1");
  REQUIRE(low_first.size() == 3);
  REQUIRE(low_second.size() == 3);
  CHECK(low_first[2].kind == AccessDesc::Kind::Write);
  CHECK(low_second[2].kind == AccessDesc::Kind::Local);  // write skipped
}

TEST_CASE("closed-form trace counts match exhaustive enumeration") {
  CHECK(count_traces("writers", 2) == bench::expected_traces("writers", 2));
  CHECK(count_traces("writers", 3) == bench::expected_traces("writers", 3));
  CHECK(count_traces("prolific_cycle", 2) ==
        bench::expected_traces("prolific_cycle", 2));
  CHECK(count_traces("prolific_cycle", 3) ==
        bench::expected_traces("prolific_cycle", 3));
  CHECK(count_traces("plb", 3) == 1);
  CHECK(count_traces("ping_pong", 2) == 1);
  CHECK(count_traces("ping_pong", 3) == 1);
}

TEST_CASE("oracle-pinned counts for the open-form generators") {
  CHECK(!bench::expected_traces("posters", 1).has_value());
  CHECK(!bench::expected_traces("consensus_lite", 2).has_value());
  CHECK(count_traces("posters", 1) == 6);
  CHECK(count_traces("consensus_lite", 1) == 1);
  CHECK(count_traces("consensus_lite", 2) == 4);
}

TEST_CASE("assertions in posters never fire") {
  Program p = bench::generate("posters", 1);
  InstanceArena arena;
  size_t leaves = 0;
  testing::enumerate_visit(p, arena, 1u << 18,
                           [&](const MachineState &s, const EventSeq &,
                               const std::vector<Inst> &) {
                             ++leaves;
                             CHECK(s.violations.empty());
                           });
  CHECK(leaves > 0);
}

TEST_CASE("corpus files are written and parse back") {
  auto dir = std::filesystem::temp_directory_path() / "evdpor_corpus_test";
  std::filesystem::remove_all(dir);
  auto written = bench::write_corpus(dir.string());
  CHECK(written.size() >= bench::builtins().size());
  std::set<std::string> names(written.begin(), written.end());
  CHECK(names.count("fig1_wrr.evp"));
  CHECK(names.count("writers_3.evp"));
  CHECK(names.count("prolific_cycle_5.evp"));
  for (const auto &fname : written) {
    std::ifstream in(dir / fname);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK_NOTHROW(parse_program(ss.str()));
  }
  std::filesystem::remove_all(dir);
}
