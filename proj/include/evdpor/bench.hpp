#ifndef EVDPOR_BENCH_HPP
#define EVDPOR_BENCH_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evdpor/program.hpp"

namespace evdpor::bench {

// Built-in program family: fixed examples (fig*) and parametric generators.
struct BenchInfo {
  std::string name;
  bool takes_n = false;
  int min_n = 1;
  int max_n = 64;
};

const std::vector<BenchInfo> &builtins();
bool is_builtin(const std::string &name);

// DSL source; n is ignored by the fixed programs. Throws
// std::invalid_argument on unknown names or out-of-range n.
std::string source_text(const std::string &name, int n = 0);

Program generate(const std::string &name, int n = 0);

// Closed-form trace count under the fine conflict model, when known.
std::optional<uint64_t> expected_traces(const std::string &name, int n = 0);

// Syntactic branching: some message body contains an if statement.
bool has_branch_stmts(const Program &p);

// Writes a default parameter sweep as <name>.evp / <name>_<n>.evp files.
// Returns the file names written.
std::vector<std::string> write_corpus(const std::string &dir);

}  // namespace evdpor::bench

#endif
